#pragma once

// Tables (monomials as multisets of flows), column profiles, compatibility,
// Hamming comparison of rows, and counting functionals.

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <gmpxx.h>

#include "kimura/group.hpp"

namespace kimura {

/// Packed profile used as a hash/sort key: one 5-bit lane per (column, nonzero
/// element); the count of 0 in a column is implied by the degree. Adding the
/// keys of rows adds their profiles as long as no lane exceeds 31.
using ProfileKey = unsigned __int128;

inline constexpr int kLaneBits = 5;
inline constexpr int kMaxKeyColumns = 128 / (3 * kLaneBits);  // 8
inline constexpr int kMaxKeyDegree = (1 << kLaneBits) - 1;     // 31

inline ProfileKey psi_key(const Flow& f) {
  if (f.size() > kMaxKeyColumns) throw std::invalid_argument("psi_key: too many columns for packed key");
  ProfileKey k = 0;
  for (int i = 0; i < f.size(); ++i) {
    const GroupElem g = f[i];
    if (!g.is_zero()) k += ProfileKey{1} << (kLaneBits * (3 * i + g.code - 1));
  }
  return k;
}

struct ProfileKeyHash {
  std::size_t operator()(ProfileKey k) const noexcept {
    std::uint64_t lo = static_cast<std::uint64_t>(k);
    std::uint64_t hi = static_cast<std::uint64_t>(k >> 64);
    std::uint64_t h = lo * 0x9E3779B97F4A7C15ull ^ (hi + 0x7F4A7C159E3779B9ull + (lo << 6) + (lo >> 2));
    h ^= h >> 31;
    h *= 0xBF58476D1CE4E5B9ull;
    h ^= h >> 29;
    return static_cast<std::size_t>(h);
  }
};

/// Columnwise symbol counts c_{i,g} of a table.
class Profile {
 public:
  Profile() = default;
  explicit Profile(int n) : n_(n), counts_(static_cast<std::size_t>(4 * n), 0) {}

  int columns() const { return n_; }
  std::uint32_t count(int column, GroupElem g) const { return counts_[idx(column, g)]; }
  void add(int column, GroupElem g, std::uint32_t c = 1) { counts_[idx(column, g)] += c; }

  void add_row(const Flow& f) {
    if (f.size() != n_) throw std::invalid_argument("profile: row length mismatch");
    for (int i = 0; i < n_; ++i) ++counts_[idx(i, f[i])];
  }

  void remove_row(const Flow& f) {
    if (f.size() != n_) throw std::invalid_argument("profile: row length mismatch");
    for (int i = 0; i < n_; ++i)
      if (counts_[idx(i, f[i])] == 0) throw std::invalid_argument("profile: row " + f.str() + " is not contained");
    for (int i = 0; i < n_; ++i) --counts_[idx(i, f[i])];
  }

  /// Common column sum; throws if columns disagree.
  std::uint32_t degree() const {
    if (n_ == 0) return 0;
    std::uint32_t d = 0;
    for (int i = 0; i < n_; ++i) {
      std::uint32_t s = 0;
      for (auto g : kElements) s += count(i, g);
      if (i == 0) d = s;
      else if (s != d) throw std::logic_error("profile columns have different totals");
    }
    return d;
  }

  ProfileKey key() const {
    if (n_ > kMaxKeyColumns) throw std::invalid_argument("profile key: too many columns");
    ProfileKey k = 0;
    for (int i = 0; i < n_; ++i)
      for (std::uint8_t g = 1; g < 4; ++g) {
        const auto c = count(i, GroupElem{g});
        if (c > static_cast<std::uint32_t>(kMaxKeyDegree)) throw std::overflow_error("profile key lane overflow");
        k += ProfileKey{c} << (kLaneBits * (3 * i + g - 1));
      }
    return k;
  }

  const std::vector<std::uint32_t>& raw() const { return counts_; }

  friend bool operator==(const Profile&, const Profile&) = default;

 private:
  std::size_t idx(int column, GroupElem g) const {
    if (column < 0 || column >= n_) throw std::out_of_range("profile column");
    return static_cast<std::size_t>(4 * column + g.code);
  }

  int n_ = 0;
  std::vector<std::uint32_t> counts_;
};

/// A multiset of flows of common length n, kept with rows sorted so that equal
/// multisets compare equal.
class Table {
 public:
  Table() = default;

  Table(int n, std::vector<Flow> rows) : n_(n), rows_(std::move(rows)) {
    for (const auto& r : rows_) {
      if (r.size() != n_) throw std::invalid_argument("table row has wrong length");
      if (!r.is_flow()) throw std::invalid_argument("table row " + r.str() + " is not a flow");
    }
    std::sort(rows_.begin(), rows_.end());
  }

  static Table parse(const std::vector<std::string>& rows) {
    if (rows.empty()) throw std::invalid_argument("cannot infer column count of an empty table");
    std::vector<Flow> fs;
    fs.reserve(rows.size());
    for (const auto& s : rows) fs.push_back(Flow::parse(s));
    const int n = fs.front().size();
    return Table(n, std::move(fs));
  }

  static Table parse(int n, const std::vector<std::string>& rows) {
    std::vector<Flow> fs;
    for (const auto& s : rows) fs.push_back(Flow::parse(s));
    return Table(n, std::move(fs));
  }

  int columns() const { return n_; }
  int degree() const { return static_cast<int>(rows_.size()); }
  const std::vector<Flow>& rows() const { return rows_; }
  const Flow& row(int i) const { return rows_[static_cast<std::size_t>(i)]; }

  Profile profile() const {
    Profile p(n_);
    for (const auto& r : rows_) p.add_row(r);
    return p;
  }

  ProfileKey key() const {
    ProfileKey k = 0;
    for (const auto& r : rows_) k += psi_key(r);
    return k;
  }

  std::vector<std::string> strings() const {
    std::vector<std::string> s;
    s.reserve(rows_.size());
    for (const auto& r : rows_) s.push_back(r.str());
    return s;
  }

  /// Canonical serialized form: sorted rows joined by spaces.
  std::string canonical_key() const {
    std::string s;
    for (const auto& r : rows_) {
      if (!s.empty()) s += ' ';
      s += r.str();
    }
    return s;
  }

  bool contains(const Flow& f) const { return std::binary_search(rows_.begin(), rows_.end(), f); }

  /// True iff sub (a sorted multiset) is contained in the rows as a multiset.
  bool contains_all(const std::vector<Flow>& sub) const {
    std::vector<Flow> s = sub;
    std::sort(s.begin(), s.end());
    return std::includes(rows_.begin(), rows_.end(), s.begin(), s.end());
  }

  Table act(const Flow& flow) const {
    std::vector<Flow> r;
    r.reserve(rows_.size());
    for (const auto& x : rows_) r.push_back(x + flow);
    return Table(n_, std::move(r));
  }

  Table apply(const Automorphism& aut) const {
    std::vector<Flow> r;
    for (const auto& x : rows_) r.push_back(x.apply(aut));
    return Table(n_, std::move(r));
  }

  Table permute_columns(const std::vector<int>& perm) const {
    std::vector<Flow> r;
    for (const auto& x : rows_) r.push_back(x.permute(perm));
    return Table(n_, std::move(r));
  }

  friend bool operator==(const Table&, const Table&) = default;
  friend auto operator<=>(const Table& a, const Table& b) {
    if (auto c = a.n_ <=> b.n_; c != 0) return c;
    return std::lexicographical_compare_three_way(a.rows_.begin(), a.rows_.end(), b.rows_.begin(), b.rows_.end());
  }

 private:
  int n_ = 0;
  std::vector<Flow> rows_;
};

inline Profile profile(const Table& t) { return t.profile(); }

inline Profile profile_of(int n, const std::vector<Flow>& rows) {
  Profile p(n);
  for (const auto& r : rows) p.add_row(r);
  return p;
}

/// Binomial membership: same shape and equal column multisets.
inline bool compatible(const Table& t0, const Table& t1) {
  if (t0.columns() != t1.columns() || t0.degree() != t1.degree()) return false;
  return t0.profile() == t1.profile();
}

struct HammingResult {
  int distance = 0;
  std::vector<GroupElem> disagreement;  // r0(l) - r1(l) over differing columns, column order
  std::vector<int> disagreement_columns;
  std::vector<int> agreement_columns;

  /// Disagreement string as text, e.g. "aabb".
  std::string disagreement_string() const {
    std::string s;
    for (auto g : disagreement) s += to_char(g);
    return s;
  }
};

inline HammingResult hamming(const Flow& r0, const Flow& r1) {
  if (r0.size() != r1.size()) throw std::invalid_argument("hamming: length mismatch");
  HammingResult h;
  for (int i = 0; i < r0.size(); ++i) {
    const GroupElem diff = r0[i] - r1[i];
    if (diff.is_zero()) {
      h.agreement_columns.push_back(i);
    } else {
      h.disagreement.push_back(diff);
      h.disagreement_columns.push_back(i);
    }
  }
  h.distance = static_cast<int>(h.disagreement.size());
  return h;
}

struct RowPair {
  int row0 = 0;  // index into t0.rows()
  int row1 = 0;  // index into t1.rows()
  int distance = 0;
};

/// Cross pair of minimum Hamming distance; ties go to the first pair in
/// canonical row order.
inline RowPair min_hamming_pair(const Table& t0, const Table& t1) {
  if (t0.degree() == 0 || t1.degree() == 0) throw std::invalid_argument("min_hamming_pair: empty table");
  RowPair best{0, 0, t0.columns() + 1};
  for (int i = 0; i < t0.degree(); ++i)
    for (int j = 0; j < t1.degree(); ++j) {
      const int k = hamming_distance(t0.row(i), t1.row(j));
      if (k < best.distance) best = {i, j, k};
    }
  return best;
}

/// Integer-weighted linear functional on profiles: f(T) = sum w(i,g) c_{i,g}(T).
class CountingFunctional {
 public:
  CountingFunctional() = default;

  void set(int column, GroupElem g, int weight) {
    if (weight == 0) weights_.erase({column, g.code});
    else weights_[{column, g.code}] = weight;
  }
  void add(int column, GroupElem g, int weight) { set(column, g, get(column, g) + weight); }

  int get(int column, GroupElem g) const {
    auto it = weights_.find({column, g.code});
    return it == weights_.end() ? 0 : it->second;
  }

  /// Parses sums of terms like "0_1234 - a_1234", "a_12 - 2*0_3", "a_{14}".
  /// Column digits are 1-based and each digit names one column.
  static CountingFunctional parse(std::string_view text) {
    CountingFunctional f;
    std::size_t i = 0;
    auto skip = [&] {
      while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    };
    skip();
    while (i < text.size()) {
      int sign = 1;
      if (text[i] == '+' || text[i] == '-') {
        sign = text[i] == '-' ? -1 : 1;
        ++i;
        skip();
      }
      int coeff = 1;
      if (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i])) && i + 1 < text.size() &&
          (text[i + 1] == '*' || std::isdigit(static_cast<unsigned char>(text[i + 1])))) {
        std::size_t j = i;
        while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) ++j;
        if (j < text.size() && text[j] == '*') {
          coeff = std::stoi(std::string(text.substr(i, j - i)));
          i = j + 1;
          skip();
        }
      }
      if (i >= text.size()) throw std::invalid_argument("counting functional: dangling sign");
      const GroupElem g = elem_from_char(text[i++]);
      if (i >= text.size() || text[i] != '_') throw std::invalid_argument("counting functional: expected '_'");
      ++i;
      const bool braced = i < text.size() && text[i] == '{';
      if (braced) ++i;
      bool any = false;
      while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) {
        f.add(text[i] - '1', g, sign * coeff);
        ++i;
        any = true;
      }
      if (!any) throw std::invalid_argument("counting functional: expected column digits");
      if (braced) {
        if (i >= text.size() || text[i] != '}') throw std::invalid_argument("counting functional: expected '}'");
        ++i;
      }
      skip();
    }
    return f;
  }

  long long eval(const Profile& p) const {
    long long s = 0;
    for (auto& [k, w] : weights_) {
      if (k.first < p.columns()) s += static_cast<long long>(w) * p.count(k.first, GroupElem{k.second});
    }
    return s;
  }
  long long eval(const Flow& row) const {
    long long s = 0;
    for (auto& [k, w] : weights_)
      if (k.first < row.size() && row[k.first].code == k.second) s += w;
    return s;
  }

  const std::map<std::pair<int, std::uint8_t>, int>& weights() const { return weights_; }

 private:
  std::map<std::pair<int, std::uint8_t>, int> weights_;
};

inline long long counting_eval(const CountingFunctional& f, const Table& t) { return f.eval(t.profile()); }

/// Positive rational parameter per (column, element) for the toric monomial map.
class MonomialParams {
 public:
  void set(int column, GroupElem g, mpq_class value) {
    value.canonicalize();
    if (value <= 0) throw std::invalid_argument("monomial parameters must be positive");
    values_[{column, g.code}] = std::move(value);
  }
  const mpq_class& get(int column, GroupElem g) const {
    auto it = values_.find({column, g.code});
    if (it == values_.end())
      throw std::out_of_range("missing monomial parameter for column " + std::to_string(column + 1) + " symbol " +
                              to_char(g));
    return it->second;
  }

  static MonomialParams constant(int n, const mpq_class& v) {
    MonomialParams p;
    for (int i = 0; i < n; ++i)
      for (auto g : kElements) p.set(i, g, v);
    return p;
  }

 private:
  std::map<std::pair<int, std::uint8_t>, mpq_class> values_;
};

/// Product over rows of prod_i params(i, r(i)).
inline mpq_class monomial_eval(const Table& t, const MonomialParams& params) {
  mpq_class v = 1;
  for (const auto& r : t.rows())
    for (int i = 0; i < t.columns(); ++i) v *= params.get(i, r[i]);
  return v;
}

}  // namespace kimura
