#pragma once

// Hilbert functions of the vertex polytopes (by iterated sumsets of profiles),
// Ehrhart fitting, h-numerators, a-invariant and the generator degree bound,
// and exact power-series expansion of N(t)/(1-t)^e.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <queue>
#include <thread>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <gmpxx.h>
#include <json.hpp>

#include "kimura/errors.hpp"
#include "kimura/group.hpp"
#include "kimura/table.hpp"

namespace kimura {

struct SeriesData {
  std::vector<mpz_class> numerator;  // coefficient of t^j at index j
  int denom_exp = 0;

  int degree() const {
    for (int j = static_cast<int>(numerator.size()) - 1; j >= 0; --j)
      if (numerator[static_cast<std::size_t>(j)] != 0) return j;
    return -1;
  }

  static mpz_class parse_coeff(const nlohmann::json& c) {
    if (c.is_string()) return mpz_class(c.get<std::string>());
    if (c.is_number_integer()) return mpz_class(std::to_string(c.get<long long>()));
    throw std::invalid_argument("series coefficient must be an integer or a decimal string");
  }

  /// Reads {"numerator": [...], "denom_exp": e}; numerator lowest degree first.
  static SeriesData from_json(const nlohmann::json& j) {
    SeriesData s;
    for (auto& c : j.at("numerator")) s.numerator.push_back(parse_coeff(c));
    s.denom_exp = j.at("denom_exp").get<int>();
    if (s.denom_exp < 0) throw std::invalid_argument("denominator exponent must be >= 0");
    return s;
  }

  static SeriesData load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open series file " + path);
    return from_json(nlohmann::json::parse(in));
  }
};

inline mpz_class binomial(long n, long k) {
  if (k < 0 || n < 0 || k > n) return 0;
  mpz_class r;
  mpz_bin_uiui(r.get_mpz_t(), static_cast<unsigned long>(n), static_cast<unsigned long>(k));
  return r;
}

/// Coefficients 0..K of numerator / (1-t)^e.
inline std::vector<mpz_class> expand_series(const SeriesData& s, int K) {
  std::vector<mpz_class> out(static_cast<std::size_t>(K + 1), 0);
  if (K < 0) return {};
  for (int k = 0; k <= K; ++k) {
    mpz_class v = 0;
    for (int j = 0; j <= k && j < static_cast<int>(s.numerator.size()); ++j) {
      if (s.denom_exp == 0) {
        if (j == k) v += s.numerator[static_cast<std::size_t>(j)];
      } else {
        v += s.numerator[static_cast<std::size_t>(j)] * binomial(k - j + s.denom_exp - 1, s.denom_exp - 1);
      }
    }
    out[static_cast<std::size_t>(k)] = v;
  }
  return out;
}

/// Sorted distinct keys a + c for a in layer, c in steps: a k-way merge of the
/// shifted copies of the sorted layer.
inline std::vector<ProfileKey> sumset_layer(const std::vector<ProfileKey>& layer, const std::vector<ProfileKey>& steps) {
  using Item = std::pair<ProfileKey, std::size_t>;  // (value, stream)
  std::vector<std::size_t> pos(steps.size(), 0);
  auto cmp = [](const Item& a, const Item& b) { return a.first > b.first; };
  std::priority_queue<Item, std::vector<Item>, decltype(cmp)> heap(cmp);
  for (std::size_t s = 0; s < steps.size(); ++s)
    if (!layer.empty()) heap.emplace(layer[0] + steps[s], s);
  std::vector<ProfileKey> out;
  out.reserve(layer.size() * 2);
  while (!heap.empty()) {
    auto [v, s] = heap.top();
    heap.pop();
    if (out.empty() || out.back() != v) out.push_back(v);
    if (++pos[s] < layer.size()) heap.emplace(layer[pos[s]] + steps[s], s);
  }
  return out;
}

/// Same as sumset_layer with the steps split across threads and the partial
/// results merged.
inline std::vector<ProfileKey> sumset_layer_parallel(const std::vector<ProfileKey>& layer,
                                                     const std::vector<ProfileKey>& steps, int threads) {
  threads = std::max(1, std::min<int>(threads, static_cast<int>(steps.size())));
  if (threads == 1) return sumset_layer(layer, steps);
  std::vector<std::vector<ProfileKey>> parts(static_cast<std::size_t>(threads));
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t)
    pool.emplace_back([&, t] {
      std::vector<ProfileKey> mine;
      for (std::size_t s = static_cast<std::size_t>(t); s < steps.size(); s += static_cast<std::size_t>(threads))
        mine.push_back(steps[s]);
      parts[static_cast<std::size_t>(t)] = sumset_layer(layer, mine);
    });
  for (auto& th : pool) th.join();
  std::vector<ProfileKey> out = std::move(parts[0]);
  for (std::size_t t = 1; t < parts.size(); ++t) {
    std::vector<ProfileKey> merged;
    merged.reserve(out.size() + parts[t].size());
    std::merge(out.begin(), out.end(), parts[t].begin(), parts[t].end(), std::back_inserter(merged));
    merged.erase(std::unique(merged.begin(), merged.end()), merged.end());
    out = std::move(merged);
    std::vector<ProfileKey>().swap(parts[t]);
  }
  return out;
}

/// H(0..K): the number of distinct profiles of degree-k tables, i.e. the
/// lattice points of the k-th dilate for a normal polytope. Throws
/// BudgetExhausted once a layer holds more than max_layer profiles (0: no limit).
inline std::vector<mpz_class> hilbert_values(int n, const FaceSpec& face, int K, std::size_t max_layer = 0,
                                             int threads = 1) {
  if (K < 0) throw std::invalid_argument("dilation must be >= 0");
  if (K > kMaxKeyDegree) throw std::invalid_argument("dilation too large for packed profile keys");
  std::vector<ProfileKey> steps;
  for (auto& f : enumerate_flows(n, face)) steps.push_back(psi_key(f));
  std::sort(steps.begin(), steps.end());
  std::vector<ProfileKey> layer{0};
  std::vector<mpz_class> out{1};
  for (int k = 1; k <= K; ++k) {
    layer = sumset_layer_parallel(layer, steps, threads);
    if (max_layer && layer.size() > max_layer)
      throw BudgetExhausted("dilation " + std::to_string(k) + " has more than " + std::to_string(max_layer) +
                            " profiles");
    out.emplace_back(static_cast<unsigned long>(layer.size()));
  }
  return out;
}

inline mpz_class hilbert_value(int n, const FaceSpec& face, int k) { return hilbert_values(n, face, k).back(); }

/// Polynomial with rational coefficients, lowest degree first.
struct RationalPoly {
  std::vector<mpq_class> coeffs;

  int degree() const {
    for (int j = static_cast<int>(coeffs.size()) - 1; j >= 0; --j)
      if (coeffs[static_cast<std::size_t>(j)] != 0) return j;
    return -1;
  }
  mpq_class operator()(const mpq_class& x) const {
    mpq_class v = 0;
    for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) v = v * x + *it;
    return v;
  }
  mpq_class leading() const { return degree() < 0 ? mpq_class(0) : coeffs[static_cast<std::size_t>(degree())]; }
};

/// The polynomial of degree <= dim through (j, values[j]), j = 0..dim, checked
/// against every further value.
inline RationalPoly fit_ehrhart(const std::vector<mpz_class>& values, int dim) {
  if (dim < 0) throw std::invalid_argument("dimension must be >= 0");
  if (static_cast<int>(values.size()) < dim + 1)
    throw std::invalid_argument("fit_ehrhart needs at least dim+1 values");
  // Newton form on nodes 0..dim: P(x) = sum_i Delta^i H(0) * binom(x, i)
  std::vector<mpz_class> diff(values.begin(), values.begin() + dim + 1);
  std::vector<mpz_class> delta;
  for (int i = 0; i <= dim; ++i) {
    delta.push_back(diff[0]);
    for (std::size_t j = 0; j + 1 < diff.size(); ++j) diff[j] = diff[j + 1] - diff[j];
    diff.pop_back();
  }
  RationalPoly p;
  p.coeffs.assign(static_cast<std::size_t>(dim + 1), 0);
  // basis binom(x, i) = x(x-1)...(x-i+1)/i!, expanded incrementally
  std::vector<mpq_class> basis{1};
  for (int i = 0; i <= dim; ++i) {
    if (i > 0) {
      std::vector<mpq_class> next(basis.size() + 1, 0);
      for (std::size_t j = 0; j < basis.size(); ++j) {
        next[j + 1] += basis[j];
        next[j] -= basis[j] * (i - 1);
      }
      for (auto& c : next) c /= i;
      basis = std::move(next);
    }
    for (std::size_t j = 0; j < basis.size(); ++j) p.coeffs[j] += basis[j] * delta[static_cast<std::size_t>(i)];
  }
  for (auto& c : p.coeffs) c.canonicalize();
  for (std::size_t k = 0; k < values.size(); ++k)
    if (p(mpq_class(static_cast<long>(k))) != values[k])
      throw std::domain_error("values are not given by a polynomial of degree <= " + std::to_string(dim) +
                              " (mismatch at " + std::to_string(k) + ")");
  return p;
}

/// h with sum_j H(j) t^j = h(t) / (1-t)^(dim+1). Needs H(0..dim+1) at least so
/// that every coefficient up to dim is determined and one vanishing one is seen.
inline std::vector<mpz_class> h_numerator(const std::vector<mpz_class>& values, int dim) {
  if (dim < 0) throw std::invalid_argument("dimension must be >= 0");
  const int K = static_cast<int>(values.size()) - 1;
  if (K < dim + 1)
    throw std::domain_error("h_numerator needs H(0.." + std::to_string(dim + 1) + "), got only " +
                            std::to_string(K + 1) + " values; more dilations required");
  std::vector<mpz_class> h;
  for (int j = 0; j <= K; ++j) {
    mpz_class v = 0;
    for (int i = 0; i <= std::min(j, dim + 1); ++i) {
      mpz_class term = binomial(dim + 1, i) * values[static_cast<std::size_t>(j - i)];
      if (i % 2) v -= term;
      else v += term;
    }
    h.push_back(v);
  }
  for (int j = dim + 1; j <= K; ++j)
    if (h[static_cast<std::size_t>(j)] != 0)
      throw std::domain_error("convolution does not terminate: h coefficient " + std::to_string(j) + " is nonzero");
  while (h.size() > 1 && h.back() == 0) h.pop_back();
  return h;
}

struct HilbertRecord {
  int n_leaves = 0;
  FaceSpec face;
  int dim = 0;
  std::vector<mpz_class> values;
  RationalPoly ehrhart;
  std::vector<mpz_class> h;
  int a_invariant = 0;
  int regularity_bound = 0;

  int deg_h() const { return static_cast<int>(h.size()) - 1; }

  nlohmann::json to_json() const {
    auto strs = [](const std::vector<mpz_class>& v) {
      nlohmann::json a = nlohmann::json::array();
      for (auto& x : v) a.push_back(x.get_str());
      return a;
    };
    nlohmann::json poly = nlohmann::json::array();
    for (auto& c : ehrhart.coeffs) poly.push_back(c.get_str());
    return {{"leaves", n_leaves},
            {"face", face.str()},
            {"dim", dim},
            {"values", strs(values)},
            {"ehrhart", poly},
            {"h", strs(h)},
            {"deg_h", deg_h()},
            {"a_invariant", a_invariant},
            {"regularity_bound", regularity_bound}};
  }
};

struct RegularityInfo {
  int bound = 0;
  int a_invariant = 0;
  bool a_negative = false;
};

/// Generators lie in degree <= 1 + deg h; a = deg h - dim - 1.
inline RegularityInfo regularity_bound(const std::vector<mpz_class>& h, int dim) {
  int deg = static_cast<int>(h.size()) - 1;
  while (deg > 0 && h[static_cast<std::size_t>(deg)] == 0) --deg;
  RegularityInfo r;
  r.bound = 1 + deg;
  r.a_invariant = deg - dim - 1;
  r.a_negative = r.a_invariant < 0;
  return r;
}

inline RegularityInfo regularity_bound(const HilbertRecord& rec) { return regularity_bound(rec.h, rec.dim); }

/// Builds the full record from values H(0..K).
inline HilbertRecord make_record(int n, const FaceSpec& face, int dim, std::vector<mpz_class> values) {
  HilbertRecord rec;
  rec.n_leaves = n;
  rec.face = face;
  rec.dim = dim;
  rec.values = std::move(values);
  rec.ehrhart = fit_ehrhart(rec.values, dim);
  rec.h = h_numerator(rec.values, dim);
  const auto reg = regularity_bound(rec.h, dim);
  rec.a_invariant = reg.a_invariant;
  rec.regularity_bound = reg.bound;
  return rec;
}

/// Evaluates the Ehrhart reciprocity zero pattern: the polynomial vanishes at
/// -1, ..., -(dim - deg h).
inline bool reciprocity_zeros(const HilbertRecord& rec) {
  for (int j = 1; j <= rec.dim - rec.deg_h(); ++j)
    if (rec.ehrhart(mpq_class(-j)) != 0) return false;
  return true;
}

/// Dimension of the affine hull of the vertices psi(f), by exact elimination.
inline int polytope_dimension(int n, const FaceSpec& face) {
  const auto flows = enumerate_flows(n, face);
  if (flows.empty()) return -1;
  const std::size_t cols = static_cast<std::size_t>(4 * n);
  auto vec = [&](const Flow& f) {
    std::vector<mpq_class> v(cols, 0);
    for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(4 * i + f[i].code)] = 1;
    return v;
  };
  const auto base = vec(flows[0]);
  std::vector<std::vector<mpq_class>> basis;  // echelon rows
  std::vector<std::size_t> pivots;
  for (std::size_t k = 1; k < flows.size(); ++k) {
    auto v = vec(flows[k]);
    for (std::size_t c = 0; c < cols; ++c) v[c] -= base[c];
    for (std::size_t b = 0; b < basis.size(); ++b) {
      const auto p = pivots[b];
      if (v[p] != 0) {
        const mpq_class f = v[p] / basis[b][p];
        for (std::size_t c = 0; c < cols; ++c) v[c] -= f * basis[b][c];
      }
    }
    auto it = std::find_if(v.begin(), v.end(), [](const mpq_class& x) { return x != 0; });
    if (it != v.end()) {
      pivots.push_back(static_cast<std::size_t>(it - v.begin()));
      basis.push_back(std::move(v));
    }
  }
  return static_cast<int>(basis.size());
}

}  // namespace kimura
