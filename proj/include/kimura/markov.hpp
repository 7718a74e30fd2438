#pragma once

// Fibers of degree-d tables, their connectivity under bounded moves, and the
// per-degree count of minimal generators.
//
// Degree-d multisets of flows are enumerated shard by shard; a shard fixes how
// many rows start with each group element (the column-1 composition), which is
// determined by the profile, so every fiber lies inside a single shard. Inside a
// shard the multisets are sorted by packed profile key and each run of equal
// keys is one fiber.

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "kimura/group.hpp"
#include "kimura/moves.hpp"
#include "kimura/table.hpp"

namespace kimura {

/// Union-find with path halving and union by size.
class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n = 0) { reset(n); }
  void reset(std::size_t n) {
    parent_.resize(n);
    size_.assign(n, 1);
    std::iota(parent_.begin(), parent_.end(), std::uint32_t{0});
    components_ = n;
  }
  std::uint32_t find(std::uint32_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  bool unite(std::uint32_t a, std::uint32_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    if (size_[a] < size_[b]) std::swap(a, b);
    parent_[b] = a;
    size_[a] += size_[b];
    --components_;
    return true;
  }
  std::size_t components() const { return components_; }

 private:
  std::vector<std::uint32_t> parent_;
  std::vector<std::uint32_t> size_;
  std::size_t components_ = 0;
};

/// The vertex set: admissible flows in lexicographic order with their keys.
struct Universe {
  int n = 0;
  FaceSpec face;
  std::vector<Flow> flows;
  std::vector<ProfileKey> keys;
  std::array<std::pair<std::uint32_t, std::uint32_t>, 4> classes{};  // [begin,end) of flows starting with g
  int index_bits = 1;

  Universe(int leaves, FaceSpec f) : n(leaves), face(std::move(f)) {
    if (n < 2) throw std::invalid_argument("universe needs at least 2 leaves");
    if (n > kMaxKeyColumns) throw std::invalid_argument("census supports at most 8 leaves");
    flows = enumerate_flows(n, face);
    for (auto& fl : flows) keys.push_back(psi_key(fl));
    std::uint32_t i = 0;
    for (std::uint8_t g = 0; g < 4; ++g) {
      const std::uint32_t b = i;
      while (i < flows.size() && flows[i][0].code == g) ++i;
      classes[g] = {b, i};
    }
    while ((std::size_t{1} << index_bits) < flows.size()) ++index_bits;
  }

  std::size_t size() const { return flows.size(); }
  int max_degree() const { return 64 / index_bits; }
};

/// Packed multiset record: profile key plus row indices (first row most significant).
struct MultisetRecord {
  std::uint64_t key_hi = 0, key_lo = 0;
  std::uint64_t rows = 0;

  ProfileKey key() const { return (ProfileKey{key_hi} << 64) | key_lo; }
  friend bool operator<(const MultisetRecord& a, const MultisetRecord& b) {
    if (a.key_hi != b.key_hi) return a.key_hi < b.key_hi;
    if (a.key_lo != b.key_lo) return a.key_lo < b.key_lo;
    return a.rows < b.rows;
  }
  bool same_key(const MultisetRecord& o) const { return key_hi == o.key_hi && key_lo == o.key_lo; }
};
static_assert(sizeof(MultisetRecord) == 24);

inline std::vector<std::uint32_t> unpack_rows(std::uint64_t rows, int degree, int bits) {
  std::vector<std::uint32_t> out(static_cast<std::size_t>(degree));
  const std::uint64_t mask = (std::uint64_t{1} << bits) - 1;
  for (int i = degree - 1; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = static_cast<std::uint32_t>(rows & mask);
    rows >>= bits;
  }
  return out;
}

inline Table record_table(const Universe& u, const MultisetRecord& r, int degree) {
  std::vector<Flow> rows;
  for (auto i : unpack_rows(r.rows, degree, u.index_bits)) rows.push_back(u.flows[i]);
  return Table(u.n, std::move(rows));
}

inline std::uint64_t binomial_u64(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  unsigned __int128 r = 1;
  for (std::uint64_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return static_cast<std::uint64_t>(r);
}

/// Number of multisets of size k drawn from m kinds.
inline std::uint64_t multichoose(std::uint64_t m, std::uint64_t k) {
  if (k == 0) return 1;
  if (m == 0) return 0;
  return binomial_u64(m + k - 1, k);
}

struct Shard {
  std::array<int, 4> composition{};  // rows starting with 0, a, b, c
  std::uint64_t multisets = 0;
};

inline std::vector<Shard> make_shards(const Universe& u, int degree) {
  std::vector<Shard> out;
  for (int k0 = 0; k0 <= degree; ++k0)
    for (int ka = 0; k0 + ka <= degree; ++ka)
      for (int kb = 0; k0 + ka + kb <= degree; ++kb) {
        Shard s;
        s.composition = {k0, ka, kb, degree - k0 - ka - kb};
        s.multisets = 1;
        for (int g = 0; g < 4; ++g)
          s.multisets *= multichoose(u.classes[g].second - u.classes[g].first, static_cast<std::uint64_t>(s.composition[g]));
        if (s.multisets > 0) out.push_back(s);
      }
  // largest first so parallel workers finish together
  std::stable_sort(out.begin(), out.end(), [](const Shard& a, const Shard& b) { return a.multisets > b.multisets; });
  return out;
}

inline std::uint64_t key_hash(const MultisetRecord& r) {
  std::uint64_t h = r.key_lo * 0x9E3779B97F4A7C15ull ^ r.key_hi * 0xC2B2AE3D27D4EB4Full;
  h ^= h >> 29;
  h *= 0xBF58476D1CE4E5B9ull;
  h ^= h >> 32;
  return h;
}

/// Calls emit(record) for every multiset of the shard whose key hash falls in
/// pass `pass` of `passes`.
template <class Emit>
void enumerate_shard(const Universe& u, const Shard& s, int passes, int pass, Emit&& emit) {
  const int bits = u.index_bits;
  std::function<void(int, int, std::uint32_t, ProfileKey, std::uint64_t)> rec =
      [&](int g, int left, std::uint32_t start, ProfileKey key, std::uint64_t rows) {
        while (g < 4 && left == 0) {
          ++g;
          if (g < 4) {
            left = s.composition[static_cast<std::size_t>(g)];
            start = u.classes[static_cast<std::size_t>(g)].first;
          }
        }
        if (g == 4) {
          MultisetRecord r{static_cast<std::uint64_t>(key >> 64), static_cast<std::uint64_t>(key), rows};
          if (passes == 1 || static_cast<int>(key_hash(r) % static_cast<std::uint64_t>(passes)) == pass) emit(r);
          return;
        }
        const auto end = u.classes[static_cast<std::size_t>(g)].second;
        for (std::uint32_t i = start; i < end; ++i)
          rec(g, left - 1, i, key + u.keys[i], (rows << bits) | i);
      };
  int g0 = 0;
  while (g0 < 4 && s.composition[static_cast<std::size_t>(g0)] == 0) ++g0;
  if (g0 == 4) return;
  rec(g0, s.composition[static_cast<std::size_t>(g0)], u.classes[static_cast<std::size_t>(g0)].first, 0, 0);
}

struct ScanOptions {
  int threads = 1;
  double mem_budget_gb = 2.0;
  int min_passes = 1;  // hash passes per composition shard, at least
};

/// Runs fn(shard_records_for_one_fiber_begin, end) for every fiber of degree d.
/// fn is called concurrently from worker threads with a worker id; groups are
/// contiguous runs of one key in a sorted buffer.
template <class Fn>
void scan_fibers(const Universe& u, int degree, const ScanOptions& opt, Fn&& fn) {
  if (degree < 1) throw std::invalid_argument("degree must be >= 1");
  if (degree > kMaxKeyDegree) throw std::invalid_argument("degree too large for packed profile keys");
  if (degree > u.max_degree()) throw std::invalid_argument("degree too large for packed row indices");
  const auto shards = make_shards(u, degree);
  const int threads = std::max(1, opt.threads);
  const double per_worker = opt.mem_budget_gb * 1e9 / threads;
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;

  auto work = [&](int worker) {
    std::vector<MultisetRecord> buf;
    try {
      for (std::size_t si; (si = next.fetch_add(1)) < shards.size();) {
        const Shard& s = shards[si];
        const double bytes = static_cast<double>(s.multisets) * sizeof(MultisetRecord);
        const int passes = std::max({1, opt.min_passes, static_cast<int>(bytes / per_worker) + (bytes > per_worker ? 1 : 0)});
        for (int p = 0; p < passes; ++p) {
          buf.clear();
          if (passes == 1) buf.reserve(s.multisets);
          enumerate_shard(u, s, passes, p, [&](const MultisetRecord& r) { buf.push_back(r); });
          std::sort(buf.begin(), buf.end());
          for (std::size_t i = 0; i < buf.size();) {
            std::size_t j = i + 1;
            while (j < buf.size() && buf[j].same_key(buf[i])) ++j;
            fn(worker, buf.data() + i, buf.data() + j);
            i = j;
          }
        }
      }
    } catch (...) {
      std::lock_guard lock(failure_mu);
      if (!failure) failure = std::current_exception();
      next = shards.size();
    }
  };
  if (threads == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(work, t);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
}

/// Components of the graph on a fiber's members where two members are adjacent
/// iff they share a row. Returns component ids per member in `labels` if given.
inline std::size_t shared_row_components(const MultisetRecord* begin, const MultisetRecord* end, int degree, int bits,
                                         std::vector<std::uint32_t>* labels = nullptr) {
  const std::size_t s = static_cast<std::size_t>(end - begin);
  if (s == 1) {
    if (labels) labels->assign(1, 0);
    return 1;
  }
  std::vector<std::pair<std::uint32_t, std::uint32_t>> occ;  // (row, member)
  occ.reserve(s * static_cast<std::size_t>(degree));
  const std::uint64_t mask = (std::uint64_t{1} << bits) - 1;
  for (std::size_t m = 0; m < s; ++m) {
    std::uint64_t rows = begin[m].rows;
    for (int i = 0; i < degree; ++i) {
      occ.emplace_back(static_cast<std::uint32_t>(rows & mask), static_cast<std::uint32_t>(m));
      rows >>= bits;
    }
  }
  std::sort(occ.begin(), occ.end());
  DisjointSets ds(s);
  for (std::size_t i = 1; i < occ.size(); ++i)
    if (occ[i].first == occ[i - 1].first) ds.unite(occ[i].second, occ[i - 1].second);
  if (labels) {
    labels->resize(s);
    for (std::size_t m = 0; m < s; ++m) (*labels)[m] = ds.find(static_cast<std::uint32_t>(m));
  }
  return ds.components();
}

struct Fiber {
  Profile profile;
  int degree = 0;
  std::vector<Table> members;
};

/// Calls fn(fiber) for every degree-d fiber (single-threaded; for inspection
/// and tests). Singleton fibers are skipped when skip_singletons is set.
template <class Fn>
void fibers(int n, int degree, const FaceSpec& face, Fn&& fn, bool skip_singletons = false) {
  Universe u(n, face);
  ScanOptions opt;
  scan_fibers(u, degree, opt, [&](int, const MultisetRecord* b, const MultisetRecord* e) {
    if (skip_singletons && e - b == 1) return;
    Fiber f;
    f.degree = degree;
    for (auto* r = b; r != e; ++r) f.members.push_back(record_table(u, *r, degree));
    f.profile = f.members.front().profile();
    fn(f);
  });
}

enum class MoveMode {
  Census,       // moves of degree <= min(bound, d-1)
  Connectivity  // moves of degree <= bound
};

struct ComponentResult {
  std::size_t components = 0;
  std::vector<std::size_t> representatives;  // first member of each component
  std::vector<std::uint32_t> labels;
};

/// Components of a fiber under explicit moves, by union-find over neighbor
/// streams. Independent of the shared-row shortcut used by the census.
inline ComponentResult fiber_components(const std::vector<Table>& members, int move_degree, MoveMode mode,
                                        ReplacementCache& cache) {
  ComponentResult res;
  if (members.empty()) return res;
  const int d = members.front().degree();
  int bound = move_degree;
  if (mode == MoveMode::Census) bound = std::min(bound, d - 1);
  std::map<Table, std::uint32_t> index;
  for (std::size_t i = 0; i < members.size(); ++i) index.emplace(members[i], static_cast<std::uint32_t>(i));
  DisjointSets ds(members.size());
  if (bound >= 2) {
    for (std::size_t i = 0; i < members.size(); ++i)
      for (const auto& nb : neighbors(members[i], bound, cache)) {
        auto it = index.find(nb);
        if (it == index.end()) throw std::logic_error("neighbor outside of the fiber");
        ds.unite(static_cast<std::uint32_t>(i), it->second);
      }
  }
  res.components = ds.components();
  res.labels.resize(members.size());
  std::map<std::uint32_t, std::size_t> first;
  for (std::size_t i = 0; i < members.size(); ++i) {
    res.labels[i] = ds.find(static_cast<std::uint32_t>(i));
    if (first.emplace(res.labels[i], i).second) res.representatives.push_back(i);
  }
  return res;
}

inline ComponentResult fiber_components(const Fiber& f, int move_degree, MoveMode mode, ReplacementCache& cache) {
  return fiber_components(f.members, move_degree, mode, cache);
}

struct DegreeCount {
  int degree = 0;
  std::uint64_t generators = 0;
  std::uint64_t fibers = 0;
  std::uint64_t multisets = 0;
  std::uint64_t nontrivial_fibers = 0;  // fibers with more than one component
  std::uint64_t largest_fiber = 0;
  double elapsed_s = 0;
};

struct CensusReport {
  int n = 0;
  int max_degree = 0;
  FaceSpec face;
  std::uint64_t vertices = 0;
  std::vector<DegreeCount> degrees;
  bool complete = true;
  std::string note;

  std::uint64_t total() const {
    std::uint64_t s = 0;
    for (auto& d : degrees) s += d.generators;
    return s;
  }
  std::optional<std::uint64_t> count(int degree) const {
    for (auto& d : degrees)
      if (d.degree == degree) return d.generators;
    return std::nullopt;
  }

  nlohmann::json to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (auto& d : degrees)
      arr.push_back({{"degree", d.degree},
                     {"generators", d.generators},
                     {"fibers", d.fibers},
                     {"multisets", d.multisets},
                     {"nontrivial_fibers", d.nontrivial_fibers},
                     {"largest_fiber", d.largest_fiber},
                     {"elapsed_s", d.elapsed_s}});
    return {{"leaves", n},      {"max_degree", max_degree}, {"face", face.str()}, {"vertices", vertices},
            {"degrees", arr},   {"total", total()},         {"complete", complete}, {"note", note}};
  }
};

/// Per-degree generator count for one degree: sum over fibers of
/// (components under moves replacing at most d-1 rows) - 1.
inline DegreeCount census_degree(const Universe& u, int degree, const ScanOptions& opt) {
  const auto t0 = std::chrono::steady_clock::now();
  const int threads = std::max(1, opt.threads);
  std::vector<DegreeCount> part(static_cast<std::size_t>(threads));
  scan_fibers(u, degree, opt, [&](int w, const MultisetRecord* b, const MultisetRecord* e) {
    auto& c = part[static_cast<std::size_t>(w)];
    const auto s = static_cast<std::uint64_t>(e - b);
    ++c.fibers;
    c.multisets += s;
    c.largest_fiber = std::max(c.largest_fiber, s);
    if (s == 1) return;
    const auto comps = shared_row_components(b, e, degree, u.index_bits);
    c.generators += comps - 1;
    if (comps > 1) ++c.nontrivial_fibers;
  });
  DegreeCount out;
  out.degree = degree;
  for (auto& c : part) {
    out.generators += c.generators;
    out.fibers += c.fibers;
    out.multisets += c.multisets;
    out.nontrivial_fibers += c.nontrivial_fibers;
    out.largest_fiber = std::max(out.largest_fiber, c.largest_fiber);
  }
  out.elapsed_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

inline CensusReport minimal_generator_census(int n, int max_degree, const FaceSpec& face = {},
                                             const ScanOptions& opt = {}, int min_degree = 1) {
  if (max_degree < 2) throw std::invalid_argument("census max degree must be >= 2");
  Universe u(n, face);
  CensusReport rep;
  rep.n = n;
  rep.max_degree = max_degree;
  rep.face = face;
  rep.vertices = u.size();
  for (int d = std::max(1, min_degree); d <= max_degree; ++d) rep.degrees.push_back(census_degree(u, d, opt));
  return rep;
}

struct ConnectivityWitness {
  Table t0, t1;
  int degree = 0;
  bool validated = false;  // explicit search confirmed no connecting path
};

struct ConnectivityReport {
  int n = 0;
  int max_table_degree = 0;
  int move_degree = 0;
  FaceSpec face;
  bool connected = true;
  std::vector<DegreeCount> degrees;  // generators = number of fibers that are disconnected
  std::optional<ConnectivityWitness> witness;

  nlohmann::json to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (auto& d : degrees)
      arr.push_back({{"degree", d.degree},
                     {"disconnected_fibers", d.nontrivial_fibers},
                     {"fibers", d.fibers},
                     {"multisets", d.multisets},
                     {"elapsed_s", d.elapsed_s}});
    nlohmann::json j{{"leaves", n},       {"max_table_degree", max_table_degree}, {"move_degree", move_degree},
                     {"face", face.str()}, {"connected", connected},             {"degrees", arr}};
    if (witness)
      j["witness"] = {{"degree", witness->degree},
                      {"t0", witness->t0.strings()},
                      {"t1", witness->t1.strings()},
                      {"validated", witness->validated}};
    return j;
  }
};

/// Checks that every fiber of degree <= D is connected under moves of degree
/// <= m. Degrees <= m are connected by the single full move. Degrees are then
/// processed upward: when all lower degrees are connected, two tables are joined
/// by moves of degree <= m < d iff they are joined by a chain of tables sharing a
/// row, so the shared-row components decide. Stops at the first failing degree
/// and validates the witness by explicit breadth-first search.
inline ConnectivityReport connectivity_check(int n, int max_table_degree, int move_degree, const FaceSpec& face = {},
                                             const ScanOptions& opt = {}, std::size_t witness_search_limit = 2'000'000,
                                             ReplacementCache* shared_cache = nullptr) {
  if (move_degree < 2) throw std::invalid_argument("move degree must be >= 2");
  Universe u(n, face);
  ConnectivityReport rep;
  rep.n = n;
  rep.max_table_degree = max_table_degree;
  rep.move_degree = move_degree;
  rep.face = face;
  for (int d = move_degree + 1; d <= max_table_degree; ++d) {
    const auto t0 = std::chrono::steady_clock::now();
    DegreeCount c;
    c.degree = d;
    std::mutex mu;
    std::optional<std::pair<MultisetRecord, MultisetRecord>> found;
    const int threads = std::max(1, opt.threads);
    std::vector<DegreeCount> part(static_cast<std::size_t>(threads));
    scan_fibers(u, d, opt, [&](int w, const MultisetRecord* b, const MultisetRecord* e) {
      auto& p = part[static_cast<std::size_t>(w)];
      ++p.fibers;
      p.multisets += static_cast<std::uint64_t>(e - b);
      if (e - b == 1) return;
      std::vector<std::uint32_t> labels;
      if (shared_row_components(b, e, d, u.index_bits, &labels) == 1) return;
      ++p.nontrivial_fibers;
      std::size_t other = 0;
      while (labels[other] == labels[0]) ++other;
      std::lock_guard lock(mu);
      // keep the smallest witness for reproducibility across thread counts
      if (!found || b[0] < found->first) found = std::make_pair(b[0], b[other]);
    });
    for (auto& p : part) {
      c.fibers += p.fibers;
      c.multisets += p.multisets;
      c.nontrivial_fibers += p.nontrivial_fibers;
    }
    c.elapsed_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    rep.degrees.push_back(c);
    if (found) {
      rep.connected = false;
      ConnectivityWitness w;
      w.degree = d;
      w.t0 = record_table(u, found->first, d);
      w.t1 = record_table(u, found->second, d);
      ReplacementCache local;
      const auto r = reachable(w.t0, w.t1, move_degree, shared_cache ? *shared_cache : local, witness_search_limit);
      w.validated = r.has_value() && !*r;
      rep.witness = w;
      break;
    }
  }
  return rep;
}

/// Exhaustive variant: explicit union-find over neighbor streams for every
/// fiber of every degree <= D. Only for small cases; used as an oracle.
inline bool connectivity_check_explicit(int n, int max_table_degree, int move_degree, const FaceSpec& face = {}) {
  ReplacementCache cache;
  for (int d = 2; d <= max_table_degree; ++d) {
    bool ok = true;
    fibers(
        n, d, face,
        [&](const Fiber& f) {
          if (ok && fiber_components(f, move_degree, MoveMode::Connectivity, cache).components != 1) ok = false;
        },
        true);
    if (!ok) return false;
  }
  return true;
}

/// Number of distinct degree-2 profiles, by direct hashing of all pairs.
inline std::uint64_t count_degree2_fibers(int n, const FaceSpec& face) {
  const auto flows = enumerate_flows(n, face);
  std::vector<std::string> keys;
  keys.reserve(flows.size() * (flows.size() + 1) / 2);
  std::vector<Profile> single;
  for (auto& f : flows) single.push_back(profile_of(n, {f}));
  for (std::size_t i = 0; i < flows.size(); ++i)
    for (std::size_t j = i; j < flows.size(); ++j) {
      std::string k;
      for (std::size_t c = 0; c < single[i].raw().size(); ++c)
        k.push_back(static_cast<char>(single[i].raw()[c] + single[j].raw()[c]));
      keys.push_back(std::move(k));
    }
  std::sort(keys.begin(), keys.end());
  return static_cast<std::uint64_t>(std::unique(keys.begin(), keys.end()) - keys.begin());
}

}  // namespace kimura
