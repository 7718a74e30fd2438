#pragma once

// Reduction of a compatible pair of tables to equality by moves of degree at
// most four: induction on the number of leaves (column merging), on the degree
// (produce a shared row, drop it) and on the Hamming distance of a pinned row
// pair, with a bounded best-first search behind every stage.

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <iterator>
#include <limits>
#include <map>
#include <optional>
#include <queue>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <thread>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "kimura/errors.hpp"
#include "kimura/moves.hpp"
#include "kimura/table.hpp"

namespace kimura {

inline constexpr int kMoveBound = 4;

using Rows = std::vector<Flow>;

// ---------------------------------------------------------------- bad pairs

struct BadPair {
  int row = 0;  // index into t.rows()
  GroupElem x;  // entry in the second to last column
  GroupElem y;  // entry in the last column
};

/// Rows whose last two entries are both nonzero.
inline std::vector<BadPair> find_bad_pairs(const Table& t) {
  const int n = t.columns();
  if (n < 2) throw std::invalid_argument("find_bad_pairs: need at least two columns");
  std::vector<BadPair> out;
  for (int i = 0; i < t.degree(); ++i) {
    const auto& r = t.row(i);
    if (!r[n - 2].is_zero() && !r[n - 1].is_zero()) out.push_back({i, r[n - 2], r[n - 1]});
  }
  return out;
}

inline std::size_t count_bad_pairs(const Rows& rows, int ca, int cb) {
  std::size_t c = 0;
  for (auto& r : rows) c += !r[ca].is_zero() && !r[cb].is_zero();
  return c;
}

// ---------------------------------------------------------------- helpers

/// Multiset differences a - b and b - a of two sorted row lists.
inline std::pair<Rows, Rows> residual_rows(const Rows& a, const Rows& b) {
  Rows ra, rb;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(ra));
  std::set_difference(b.begin(), b.end(), a.begin(), a.end(), std::back_inserter(rb));
  return {std::move(ra), std::move(rb)};
}

/// Move from `removed` to `inserted` with rows common to both cancelled;
/// nullopt when nothing is left.
inline std::optional<Move> reduced_move(Rows removed, Rows inserted) {
  std::sort(removed.begin(), removed.end());
  std::sort(inserted.begin(), inserted.end());
  auto [a, b] = residual_rows(removed, inserted);
  if (a.empty()) return std::nullopt;
  return Move(std::move(a), std::move(b));
}

inline Rows apply_to_rows(const Rows& rows, const Move& m) {
  Rows out = rows;
  for (const auto& r : m.removed()) {
    auto it = std::lower_bound(out.begin(), out.end(), r);
    if (it == out.end() || *it != r) throw std::logic_error("move does not apply to rows");
    out.erase(it);
  }
  for (const auto& r : m.inserted()) out.insert(std::upper_bound(out.begin(), out.end(), r), r);
  return out;
}

inline int min_distance(const Rows& a, const Rows& b) {
  int best = std::numeric_limits<int>::max();
  for (auto& x : a)
    for (auto& y : b) best = std::min(best, hamming_distance(x, y));
  return best;
}

/// One multiset of flows with the given profile, found by depth-first search;
/// nullopt when the fiber is empty.
inline std::optional<Rows> find_realization(const Profile& target) {
  const int n = target.columns();
  const int d = static_cast<int>(target.degree());
  if (d == 0) return Rows{};
  Rows cand;
  Flow cur(n);
  std::function<void(int, GroupElem)> build = [&](int col, GroupElem acc) {
    if (col == n - 1) {
      if (target.count(col, acc) > 0) {
        Flow f = cur;
        f.set(col, acc);
        cand.push_back(f);
      }
      return;
    }
    for (auto g : kElements) {
      if (target.count(col, g) == 0) continue;
      cur.set(col, g);
      build(col + 1, acc + g);
    }
  };
  build(0, GroupElem::zero());
  std::sort(cand.begin(), cand.end());
  std::vector<std::uint32_t> rem = target.raw();
  Rows chosen;
  std::function<bool(std::size_t)> dfs = [&](std::size_t start) {
    if (static_cast<int>(chosen.size()) == d) return true;
    for (std::size_t i = start; i < cand.size(); ++i) {
      const Flow& f = cand[i];
      bool fits = true;
      for (int c = 0; c < n && fits; ++c) fits = rem[static_cast<std::size_t>(4 * c + f[c].code)] > 0;
      if (!fits) continue;
      for (int c = 0; c < n; ++c) --rem[static_cast<std::size_t>(4 * c + f[c].code)];
      chosen.push_back(f);
      if (dfs(i)) return true;
      chosen.pop_back();
      for (int c = 0; c < n; ++c) ++rem[static_cast<std::size_t>(4 * c + f[c].code)];
    }
    return false;
  };
  if (!dfs(0)) return std::nullopt;
  return chosen;
}

class RealizationCache {
 public:
  const std::optional<Rows>& get(const Profile& p) {
    std::string key(1, static_cast<char>(p.columns()));
    for (auto c : p.raw()) key.push_back(static_cast<char>(c));
    auto it = map_.find(key);
    if (it == map_.end()) it = map_.emplace(std::move(key), find_realization(p)).first;
    return it->second;
  }
  std::size_t size() const { return map_.size(); }

 private:
  std::unordered_map<std::string, std::optional<Rows>> map_;
};

// ---------------------------------------------------------------- move generators

struct SideMove {
  Side side;
  Move move;
};

/// Moves of degree <= max_deg on `side` that put a new row into it whose
/// distance to some row of `other` is at most max_dist. One move per new row,
/// from the smallest sub-multiset that can produce it.
inline void creation_moves(Side which, const Rows& side, const Rows& other, int max_deg, int max_dist,
                           RealizationCache& cache, std::vector<SideMove>& out) {
  if (side.empty() || other.empty()) return;
  const int n = side.front().size();
  std::set<Flow> made;
  const int top = std::min<int>(max_deg, static_cast<int>(side.size()));
  std::vector<int> dist(other.size());
  for (int s = 2; s <= top; ++s) {
    for_each_submultiset(side, s, [&](const Rows& sub) {
      const Profile prof = profile_of(n, sub);
      std::vector<std::uint8_t> mask(static_cast<std::size_t>(n), 0);
      for (auto& r : sub)
        for (int c = 0; c < n; ++c) mask[static_cast<std::size_t>(c)] |= static_cast<std::uint8_t>(1u << r[c].code);
      Flow cur(n);
      std::fill(dist.begin(), dist.end(), 0);
      std::function<void(int, GroupElem)> rec = [&](int col, GroupElem acc) {
        if (col == n - 1) {
          if (!(mask[static_cast<std::size_t>(col)] >> acc.code & 1)) return;
          cur.set(col, acc);
          int best = n + 1;
          for (std::size_t j = 0; j < other.size(); ++j) best = std::min(best, dist[j] + (other[j][col] != acc));
          if (best > max_dist) return;
          if (std::binary_search(sub.begin(), sub.end(), cur) || made.count(cur)) return;
          Profile rest = prof;
          rest.remove_row(cur);
          const auto& real = cache.get(rest);
          if (!real) return;
          Rows ins = *real;
          ins.push_back(cur);
          if (auto m = reduced_move(sub, ins)) {
            made.insert(cur);
            out.push_back({which, std::move(*m)});
          }
          return;
        }
        for (std::uint8_t g = 0; g < 4; ++g) {
          if (!(mask[static_cast<std::size_t>(col)] >> g & 1)) continue;
          const GroupElem e{g};
          int best = n + 1;
          for (std::size_t j = 0; j < other.size(); ++j) {
            dist[j] += other[j][col] != e;
            best = std::min(best, dist[j]);
          }
          if (best <= max_dist) {
            cur.set(col, e);
            rec(col + 1, acc + e);
          }
          for (std::size_t j = 0; j < other.size(); ++j) dist[j] -= other[j][col] != e;
        }
      };
      rec(0, GroupElem::zero());
    });
  }
}

/// Moves of degree <= max_deg on `side` that only rearrange entries within the
/// columns `cols` among the rows of a sub-multiset containing `anchor`.
inline void restricted_moves(Side which, const Rows& side, const std::vector<int>& cols, int max_deg,
                             const Flow& anchor, std::vector<SideMove>& out) {
  if (cols.empty()) return;
  auto it = std::lower_bound(side.begin(), side.end(), anchor);
  if (it == side.end() || *it != anchor) return;
  Rows others(side.begin(), side.end());
  others.erase(others.begin() + (it - side.begin()));
  std::set<Rows> seen;
  for (int s = 1; s < max_deg && s <= static_cast<int>(others.size()); ++s) {
    for_each_submultiset(others, s, [&](const Rows& rest) {
      Rows sub = rest;
      sub.push_back(anchor);
      const std::size_t m = sub.size();
      // try every arrangement of the free columns; the last listed column is
      // forced by the row sums and must reproduce its column multiset
      std::vector<std::vector<std::size_t>> perm(cols.size(), std::vector<std::size_t>(m));
      for (auto& p : perm)
        for (std::size_t i = 0; i < m; ++i) p[i] = i;
      const int last = cols.back();
      std::vector<std::uint8_t> want;
      for (auto& r : sub) want.push_back(r[last].code);
      std::sort(want.begin(), want.end());
      std::function<void(std::size_t)> rec = [&](std::size_t ci) {
        if (ci + 1 == cols.size()) {
          Rows nr = sub;
          for (std::size_t c = 0; c + 1 < cols.size(); ++c)
            for (std::size_t i = 0; i < m; ++i) nr[i].set(cols[c], sub[perm[c][i]][cols[c]]);
          std::vector<std::uint8_t> got;
          for (auto& r : nr) {
            GroupElem s{};
            for (int c = 0; c < r.size(); ++c)
              if (c != last) s += r[c];
            r.set(last, s);
            got.push_back(s.code);
          }
          std::sort(got.begin(), got.end());
          if (got != want) return;
          std::sort(nr.begin(), nr.end());
          if (!seen.insert(nr).second) return;
          if (auto mv = reduced_move(sub, nr)) out.push_back({which, std::move(*mv)});
          return;
        }
        do {
          rec(ci + 1);
        } while (std::next_permutation(perm[ci].begin(), perm[ci].end()));
      };
      rec(0);
    });
  }
}

// ---------------------------------------------------------------- search

struct PairNode {
  Rows a, b;  // residual rows of T0 and T1
};

struct SearchStats {
  std::size_t expanded = 0;
  std::size_t generated = 0;
};

using Generator = std::function<void(const PairNode&, std::vector<SideMove>&)>;
using Goal = std::function<bool(const PairNode&)>;

class Deadline {
 public:
  explicit Deadline(double seconds)
      : end_(std::chrono::steady_clock::now() + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                                     std::chrono::duration<double>(seconds))) {}
  bool passed() const { return std::chrono::steady_clock::now() > end_; }

 private:
  std::chrono::steady_clock::time_point end_;
};

/// Best-first search over residual pairs, ordered by (residual degree, minimum
/// cross distance, bad pairs in the last two columns, path length). Returns
/// the steps to the first node satisfying goal, or nullopt.
inline std::optional<std::vector<SideMove>> best_first(const PairNode& start, const Generator& gen, const Goal& goal,
                                                       std::size_t node_budget, const Deadline& deadline,
                                                       SearchStats& stats) {
  if (goal(start)) return std::vector<SideMove>{};
  if (start.a.empty()) return std::nullopt;
  const int n = start.a.front().size();
  struct Entry {
    std::array<int, 4> score;
    std::size_t seq;
    bool operator>(const Entry& o) const { return std::tie(score, seq) > std::tie(o.score, o.seq); }
  };
  struct Stored {
    PairNode node;
    std::size_t parent;
    std::optional<SideMove> step;
  };
  std::vector<Stored> store;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
  std::unordered_set<std::string> seen;
  auto key_of = [](const PairNode& p) {
    std::string k;
    for (auto* rows : {&p.a, &p.b}) {
      for (auto& r : *rows) k.append(reinterpret_cast<const char*>(&r), sizeof(std::uint64_t));
      k.push_back('|');
    }
    return k;
  };
  auto score_of = [&](const PairNode& p, int depth) -> std::array<int, 4> {
    const int bad = n >= 2 ? static_cast<int>(count_bad_pairs(p.a, n - 2, n - 1) + count_bad_pairs(p.b, n - 2, n - 1)) : 0;
    return {static_cast<int>(p.a.size()), min_distance(p.a, p.b), bad, depth};
  };
  auto path_to = [&](std::size_t idx) {
    std::vector<SideMove> steps;
    for (; store[idx].step; idx = store[idx].parent) steps.push_back(*store[idx].step);
    std::reverse(steps.begin(), steps.end());
    return steps;
  };
  std::vector<int> depth{0};
  store.push_back({start, 0, std::nullopt});
  seen.insert(key_of(start));
  open.push({score_of(start, 0), 0});
  std::vector<SideMove> moves;
  while (!open.empty() && stats.expanded < node_budget && !deadline.passed()) {
    const std::size_t cur = open.top().seq;
    open.pop();
    ++stats.expanded;
    moves.clear();
    gen(store[cur].node, moves);
    const PairNode parent = store[cur].node;
    for (auto& sm : moves) {
      Rows na = sm.side == Side::T0 ? apply_to_rows(parent.a, sm.move) : parent.a;
      Rows nb = sm.side == Side::T1 ? apply_to_rows(parent.b, sm.move) : parent.b;
      auto [ra, rb] = residual_rows(na, nb);
      PairNode child{std::move(ra), std::move(rb)};
      if (!seen.insert(key_of(child)).second) continue;
      ++stats.generated;
      const int d = depth[cur] + 1;
      store.push_back({std::move(child), cur, sm});
      depth.push_back(d);
      const std::size_t idx = store.size() - 1;
      if (goal(store[idx].node)) return path_to(idx);
      if (!store[idx].node.a.empty()) open.push({score_of(store[idx].node, d), idx});
    }
  }
  return std::nullopt;
}

// ---------------------------------------------------------------- pair state

struct Pinned {
  Flow r0, r1;
  HammingResult h;
  int distinguished_a = 0, distinguished_b = 0;  // the last two columns
};

/// A compatible pair under reduction together with the moves made so far.
struct PairState {
  Table t0, t1;
  MoveTrace trace;

  PairState(Table a, Table b) : t0(std::move(a)), t1(std::move(b)) {
    if (!compatible(t0, t1)) throw std::invalid_argument("pair is not compatible");
  }

  int columns() const { return t0.columns(); }
  PairNode residual() const {
    auto [a, b] = residual_rows(t0.rows(), t1.rows());
    return {std::move(a), std::move(b)};
  }
  int residual_degree() const { return static_cast<int>(residual().a.size()); }

  /// Minimum-distance cross pair of the residual rows, first in canonical order.
  Pinned pinned() const {
    const auto r = residual();
    if (r.a.empty()) throw std::logic_error("pinned: tables are equal");
    Pinned p;
    int best = std::numeric_limits<int>::max();
    for (auto& x : r.a)
      for (auto& y : r.b) {
        const int k = hamming_distance(x, y);
        if (k < best) {
          best = k;
          p.r0 = x;
          p.r1 = y;
        }
      }
    p.h = hamming(p.r0, p.r1);
    p.distinguished_a = columns() - 2;
    p.distinguished_b = columns() - 1;
    return p;
  }

  void apply(Side s, const Move& m) {
    Table& t = s == Side::T0 ? t0 : t1;
    t = apply_move(t, m);
    trace.push(s, m);
  }
  void apply(const std::vector<SideMove>& steps) {
    for (auto& st : steps) apply(st.side, st.move);
  }
};

// ---------------------------------------------------------------- options and context

struct ReduceBudget {
  std::size_t max_nodes = 10000;   // fallback search
  std::size_t stage_nodes = 300;   // each strategy stage
  double max_seconds = 120.0;
  int merge_depth = 3;             // nested column merges
};

struct ReduceContext {
  RealizationCache realizations;
  SearchStats stats;
  std::vector<std::string> log;
  std::vector<std::string> fallback_labels;  // strategy stages that needed the fallback
  std::map<std::string, std::size_t> case_counts;
};

// ---------------------------------------------------------------- case labels

/// Class of a disagreement string up to automorphisms and column order.
inline std::string disagreement_class(const std::vector<GroupElem>& s) {
  std::array<int, 3> cnt{0, 0, 0};
  for (auto g : s)
    if (!g.is_zero()) ++cnt[g.code - 1u];
  std::sort(cnt.begin(), cnt.end(), std::greater<>());
  std::string out;
  const char sym[3] = {'a', 'b', 'c'};
  for (int i = 0; i < 3; ++i) out.append(static_cast<std::size_t>(cnt[static_cast<std::size_t>(i)]), sym[i]);
  return out;
}

/// Label of a distance-2 configuration. The pinned pair is normalized to
/// aa0..0 over 0..0 in its two disagreement columns; x, y are read from the
/// first T0 rows with 0 in the first / second of those columns, z, w from the
/// first T1 rows with a there.
inline std::string case_label(const PairState& st) {
  const auto p = st.pinned();
  if (p.h.distance != 2) throw std::invalid_argument("case_label: pinned distance is not 2");
  const int i = p.h.disagreement_columns[0], j = p.h.disagreement_columns[1];
  const GroupElem delta = p.h.disagreement[0];
  Automorphism aut = delta == GroupElem::alpha() ? Automorphism::identity() : Automorphism::swap(delta, GroupElem::alpha());
  auto norm = [&](const Flow& r) { return (r + p.r1).apply(aut); };
  const auto res = st.residual();
  const Flow r0 = norm(p.r0), r1 = norm(p.r1);
  std::optional<GroupElem> x, y, z, w;
  Rows a, b;
  for (auto& r : res.a) a.push_back(norm(r));
  for (auto& r : res.b) b.push_back(norm(r));
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  bool skip0 = false, skip1 = false;
  for (auto& r : a) {
    if (!skip0 && r == r0) {
      skip0 = true;
      continue;
    }
    if (!x && r[i].is_zero()) x = r[j];
    if (!y && r[j].is_zero()) y = r[i];
  }
  for (auto& r : b) {
    if (!skip1 && r == r1) {
      skip1 = true;
      continue;
    }
    if (!z && r[i] == GroupElem::alpha()) z = r[j];
    if (!w && r[j] == GroupElem::alpha()) w = r[i];
  }
  if (!x || !y || !z || !w) return "k2:incomplete";
  const GroupElem A = GroupElem::alpha(), B = GroupElem::beta(), C = GroupElem::gamma(), O = GroupElem::zero();
  if (*x == O || *x == A) return std::string("k2:x=") + to_char(*x);
  if (*x == C) {
    const auto s = Automorphism::swap(B, C);
    x = s(*x), y = s(*y), z = s(*z), w = s(*w);
  }
  auto is_bc = [&](GroupElem u, GroupElem v) { return (u == B && v == C) || (u == C && v == B); };
  if (is_bc(*z, *w) || is_bc(*x, *y)) return "Lemma(if w,z=b,c)";
  if (*y == O || *z == A || *w == A) return "k2:direct";
  const char yy = to_char(*y), zz = to_char(*z), ww = to_char(*w);
  static const std::map<std::string, std::string> table{
      {"ab0", "Case I"},    {"abb", "Case II"},  {"a00", "Case X"},   {"a0b", "Case VII"}, {"a0c", "Case VI"},
      {"ac0", "Case IV"},   {"acc", "Case V"},   {"bb0", "Case II"},  {"bbb", "Case III"}, {"b00", "Case IX"},
      {"b0b", "Case II"},   {"b0c", "Case V"},   {"bc0", "Case V"},   {"bcc", "Case VIII"}};
  const std::string key{yy, zz, ww};
  auto it = table.find(key);
  return it == table.end() ? "k2:y=" + key : it->second;
}

// ---------------------------------------------------------------- stages

namespace detail {

inline Generator creation_generator(int slack, RealizationCache& cache) {
  return [slack, &cache](const PairNode& p, std::vector<SideMove>& out) {
    const int k = min_distance(p.a, p.b) + slack;
    creation_moves(Side::T0, p.a, p.b, kMoveBound, k, cache, out);
    creation_moves(Side::T1, p.b, p.a, kMoveBound, k, cache, out);
  };
}

inline bool run_stage(PairState& st, const Generator& gen, const Goal& goal, std::size_t budget, const Deadline& dl,
                      ReduceContext& ctx) {
  auto steps = best_first(st.residual(), gen, goal, budget, dl, ctx.stats);
  if (!steps) return false;
  st.apply(*steps);
  return true;
}

inline Goal distance_below(int k, int degree) {
  return [k, degree](const PairNode& p) {
    return p.a.empty() || static_cast<int>(p.a.size()) < degree || min_distance(p.a, p.b) < k;
  };
}

inline Goal degree_below(int degree) {
  return [degree](const PairNode& p) { return static_cast<int>(p.a.size()) < degree; };
}

}  // namespace detail

/// Lowers the distance of the pinned pair from >= 4 to at most 3 (or
/// produces a shared row). Tries moves of degree <= 3 confined to four
/// disagreement columns first, then creation moves of degree <= 4.
inline bool reduce_hamming_ge4(PairState& st, ReduceContext& ctx, const ReduceBudget& budget = {},
                               const Deadline& dl = Deadline(1e9)) {
  const auto p = st.pinned();
  if (p.h.distance < 4) throw std::invalid_argument("reduce_hamming_ge4: pinned distance is below 4");
  const std::vector<int> cols(p.h.disagreement_columns.begin(), p.h.disagreement_columns.begin() + 4);
  const int deg = st.residual_degree();
  const auto goal = detail::distance_below(4, deg);
  const std::string label = "hamming>=4:" + disagreement_class(p.h.disagreement);
  ++ctx.case_counts[label];
  Generator local = [&cols](const PairNode& node, std::vector<SideMove>& out) {
    // anchor on the node's own pinned rows
    int best = std::numeric_limits<int>::max();
    const Flow *x = nullptr, *y = nullptr;
    for (auto& u : node.a)
      for (auto& v : node.b)
        if (int k = hamming_distance(u, v); k < best) best = k, x = &u, y = &v;
    if (!x) return;
    restricted_moves(Side::T0, node.a, cols, 3, *x, out);
    restricted_moves(Side::T1, node.b, cols, 3, *y, out);
  };
  if (detail::run_stage(st, local, goal, budget.stage_nodes, dl, ctx)) {
    ctx.log.push_back(label);
    return true;
  }
  if (detail::run_stage(st, detail::creation_generator(0, ctx.realizations), goal, budget.stage_nodes, dl, ctx)) {
    ctx.log.push_back(label + ":wide");
    ++ctx.case_counts[label + ":wide"];
    return true;
  }
  ctx.log.push_back(label + ":failed");
  return false;
}

/// Lowers the distance of a pinned pair with disagreement string abc to at
/// most 2 (or produces a shared row).
inline bool reduce_hamming_3(PairState& st, ReduceContext& ctx, const ReduceBudget& budget = {},
                             const Deadline& dl = Deadline(1e9)) {
  const auto p = st.pinned();
  if (p.h.distance != 3) throw std::invalid_argument("reduce_hamming_3: pinned distance is not 3");
  const std::string label = "hamming3:" + disagreement_class(p.h.disagreement);
  ++ctx.case_counts[label];
  const auto goal = detail::distance_below(3, st.residual_degree());
  if (detail::run_stage(st, detail::creation_generator(0, ctx.realizations), goal, budget.stage_nodes, dl, ctx)) {
    ctx.log.push_back(label);
    return true;
  }
  ctx.log.push_back(label + ":failed");
  return false;
}

/// From a pinned pair at distance 2, produces a shared row so that the
/// residual degree drops.
inline bool reduce_hamming_2(PairState& st, ReduceContext& ctx, const ReduceBudget& budget = {},
                             const Deadline& dl = Deadline(1e9)) {
  const auto p = st.pinned();
  if (p.h.distance != 2) throw std::invalid_argument("reduce_hamming_2: pinned distance is not 2");
  const std::string label = case_label(st);
  ++ctx.case_counts[label];
  const auto goal = detail::degree_below(st.residual_degree());
  if (detail::run_stage(st, detail::creation_generator(0, ctx.realizations), goal, budget.stage_nodes, dl, ctx)) {
    ctx.log.push_back(label);
    return true;
  }
  ctx.log.push_back(label + ":failed");
  return false;
}

// ---------------------------------------------------------------- column merging

struct MergedPair {
  Table t0, t1;  // n - 1 columns; the last column is the sum of the original last two
};

inline Flow merge_row(const Flow& r) {
  const int n = r.size();
  Flow m(n - 1);
  for (int c = 0; c < n - 2; ++c) m.set(c, r[c]);
  m.set(n - 2, r[n - 2] + r[n - 1]);
  return m;
}

inline Table merge_table(const Table& t) {
  Rows rows;
  for (auto& r : t.rows()) rows.push_back(merge_row(r));
  return Table(t.columns() - 1, std::move(rows));
}

/// Sums the last two columns. Requires that no row of either table is a bad pair.
inline MergedPair merge_columns(const Table& t0, const Table& t1) {
  if (t0.columns() < 3) throw std::invalid_argument("merge_columns: need at least three columns");
  if (!compatible(t0, t1)) throw std::invalid_argument("merge_columns: pair is not compatible");
  if (!find_bad_pairs(t0).empty() || !find_bad_pairs(t1).empty())
    throw std::invalid_argument("merge_columns: bad pair present");
  return {merge_table(t0), merge_table(t1)};
}

/// Lifts a trace on the merged pair to the original pair and appends the
/// quadratic moves that adjust the last two columns, so the result joins t0
/// and t1. Each lifted move has the degree of the merged move.
inline MoveTrace lift_merged_trace(const Table& t0, const Table& t1, const MoveTrace& merged) {
  if (!find_bad_pairs(t0).empty() || !find_bad_pairs(t1).empty())
    throw std::invalid_argument("lift_merged_trace: bad pair present");
  PairState st(t0, t1);
  for (const auto& step : merged.steps) {
    const Table& cur = step.side == Side::T0 ? st.t0 : st.t1;
    Rows pool = cur.rows();
    Rows removed;
    for (const auto& mr : step.move.removed()) {
      auto it = std::find_if(pool.begin(), pool.end(), [&](const Flow& r) { return merge_row(r) == mr; });
      if (it == pool.end()) throw std::invalid_argument("lift_merged_trace: merged row " + mr.str() + " has no preimage");
      removed.push_back(*it);
      pool.erase(it);
    }
    // endings available, keyed by merged value
    std::vector<std::pair<GroupElem, GroupElem>> endings;
    for (auto& r : removed) endings.emplace_back(r[r.size() - 2], r[r.size() - 1]);
    Rows inserted;
    for (const auto& mr : step.move.inserted()) {
      const GroupElem e = mr[mr.size() - 1];
      auto it = std::find_if(endings.begin(), endings.end(), [&](auto& xy) { return xy.first + xy.second == e; });
      if (it == endings.end()) throw std::logic_error("lift_merged_trace: no ending for merged value");
      Flow r(mr.size() + 1);
      for (int c = 0; c + 1 < mr.size(); ++c) r.set(c, mr[c]);
      r.set(mr.size() - 1, it->first);
      r.set(mr.size(), it->second);
      endings.erase(it);
      inserted.push_back(r);
    }
    if (auto m = reduced_move(removed, inserted)) st.apply(step.side, *m);
  }
  // the merged tables agree now; swap endings (e,0) <-> (0,e) pairwise
  for (;;) {
    auto res = st.residual();
    if (res.a.empty()) break;
    const int n = st.columns();
    std::optional<Move> fix;
    for (auto& u : res.a) {
      const GroupElem e = u[n - 2] + u[n - 1];
      if (e.is_zero()) continue;
      // u's partner in T1 has the other ending
      Flow target = u;
      target.set(n - 2, u[n - 1]);
      target.set(n - 1, u[n - 2]);
      if (!std::binary_search(res.b.begin(), res.b.end(), target)) continue;
      for (auto& v : res.a) {
        if (!(v[n - 2] == u[n - 1] && v[n - 1] == u[n - 2])) continue;
        Flow v2 = v;
        v2.set(n - 2, u[n - 2]);
        v2.set(n - 1, u[n - 1]);
        if (!std::binary_search(res.b.begin(), res.b.end(), v2)) continue;
        fix = reduced_move({u, v}, {target, v2});
        break;
      }
      if (fix) break;
    }
    if (!fix) throw std::logic_error("lift_merged_trace: merged tables agree but no adjusting swap found");
    st.apply(Side::T0, *fix);
  }
  return st.trace;
}

// ---------------------------------------------------------------- driver

struct ReduceResult {
  bool success = false;
  MoveTrace trace;
  std::vector<std::string> log;
  std::vector<std::string> fallback_labels;
  std::map<std::string, std::size_t> case_counts;
  std::size_t nodes = 0;
  std::string diagnostic;
};

inline bool reduce_state(PairState& st, ReduceContext& ctx, const ReduceBudget& budget, const Deadline& dl, int merge_depth);

namespace detail {

/// Moves a column pair without bad pairs into the last two positions, merges,
/// reduces the merged pair and lifts. Works on residual rows only.
inline bool try_merge(PairState& st, ReduceContext& ctx, const ReduceBudget& budget, const Deadline& dl,
                      int merge_depth) {
  const int n = st.columns();
  if (n < 4 || merge_depth <= 0) return false;
  const auto res = st.residual();
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      if (count_bad_pairs(res.a, i, j) || count_bad_pairs(res.b, i, j)) continue;
      std::vector<int> perm;
      for (int c = 0; c < n; ++c)
        if (c != i && c != j) perm.push_back(c);
      perm.push_back(i);
      perm.push_back(j);
      std::vector<int> inv(static_cast<std::size_t>(n));
      for (int k = 0; k < n; ++k) inv[static_cast<std::size_t>(perm[static_cast<std::size_t>(k)])] = k;
      Rows pa, pb;
      for (auto& r : res.a) pa.push_back(r.permute(perm));
      for (auto& r : res.b) pb.push_back(r.permute(perm));
      const Table ta(n, pa), tb(n, pb);
      const auto merged = merge_columns(ta, tb);
      PairState sub(merged.t0, merged.t1);
      ReduceContext subctx;
      if (!reduce_state(sub, subctx, budget, dl, merge_depth - 1)) continue;
      const auto lifted = lift_merged_trace(ta, tb, sub.trace);
      for (auto& s : lifted.steps) st.apply(s.side, s.move.permute(inv));
      ctx.stats.expanded += subctx.stats.expanded;
      ctx.log.push_back("merge columns " + std::to_string(i + 1) + "," + std::to_string(j + 1));
      ++ctx.case_counts["merge"];
      return true;
    }
  return false;
}

}  // namespace detail

/// Drives st to equal tables. Returns false when a budget runs out; the moves
/// made so far stay in st.trace and are valid.
inline bool reduce_state(PairState& st, ReduceContext& ctx, const ReduceBudget& budget, const Deadline& dl,
                         int merge_depth) {
  for (;;) {
    const auto res = st.residual();
    if (res.a.empty()) return true;
    const int deg = static_cast<int>(res.a.size());
    if (deg <= kMoveBound) {
      st.apply(Side::T0, Move(res.a, res.b));
      ctx.log.push_back("final move of degree " + std::to_string(deg));
      return true;
    }
    if (dl.passed()) return false;
    const int k = st.pinned().h.distance;
    bool ok = false;
    std::string stage;
    if (k >= 4) {
      ok = reduce_hamming_ge4(st, ctx, budget, dl);
      stage = ctx.log.back();
    } else if (k == 3) {
      ok = reduce_hamming_3(st, ctx, budget, dl);
      stage = ctx.log.back();
    } else {
      ok = reduce_hamming_2(st, ctx, budget, dl);
      stage = ctx.log.back();
      if (!ok) ok = detail::try_merge(st, ctx, budget, dl, merge_depth);
    }
    if (ok) continue;
    // fallback: search for a shared row with a slightly wider move set
    ctx.fallback_labels.push_back(stage);
    const auto goal = detail::degree_below(deg);
    if (detail::run_stage(st, detail::creation_generator(1, ctx.realizations), goal, budget.max_nodes, dl, ctx)) {
      ctx.log.push_back("fallback search after " + stage);
      continue;
    }
    ctx.log.push_back("fallback search exhausted after " + stage);
    return false;
  }
}

/// Joins t0 and t1 by moves of degree <= 4. On budget exhaustion the result
/// has success = false and a valid partial trace.
inline ReduceResult reduce_pair(const Table& t0, const Table& t1, const ReduceBudget& budget = {}) {
  if (t0.degree() < 1 || t1.degree() < 1) throw std::invalid_argument("reduce_pair: tables must be nonempty");
  PairState st(t0, t1);
  ReduceContext ctx;
  const Deadline dl(budget.max_seconds);
  ReduceResult r;
  r.success = reduce_state(st, ctx, budget, dl, budget.merge_depth);
  r.trace = std::move(st.trace);
  r.log = std::move(ctx.log);
  r.fallback_labels = std::move(ctx.fallback_labels);
  r.case_counts = std::move(ctx.case_counts);
  r.nodes = ctx.stats.expanded;
  if (!r.success) r.diagnostic = r.log.empty() ? "budget exhausted" : r.log.back();
  return r;
}

// ---------------------------------------------------------------- fuzzing

/// Random compatible pair of degree d: shuffle columns 1..n-1 of a random table
/// across rows, fix the last column by row sums and keep the result when that
/// column is a permutation of the original one.
template <class Rng>
std::pair<Table, Table> random_compatible_pair(Rng& rng, int n, int d) {
  if (n < 2 || d < 1) throw std::invalid_argument("random_compatible_pair: need n >= 2 and d >= 1");
  std::uniform_int_distribution<int> sym(0, 3);
  for (;;) {
    Rows r0;
    for (int i = 0; i < d; ++i) {
      Flow f(n);
      GroupElem s{};
      for (int c = 0; c + 1 < n; ++c) {
        const GroupElem g{static_cast<std::uint8_t>(sym(rng))};
        f.set(c, g);
        s += g;
      }
      f.set(n - 1, s);
      r0.push_back(f);
    }
    Rows r1 = r0;
    for (int c = 0; c + 1 < n; ++c) {
      std::vector<GroupElem> col;
      for (auto& r : r0) col.push_back(r[c]);
      std::shuffle(col.begin(), col.end(), rng);
      for (int i = 0; i < d; ++i) r1[static_cast<std::size_t>(i)].set(c, col[static_cast<std::size_t>(i)]);
    }
    std::multiset<std::uint8_t> want, got;
    for (auto& r : r0) want.insert(r[n - 1].code);
    for (auto& r : r1) {
      GroupElem s{};
      for (int c = 0; c + 1 < n; ++c) s += r[c];
      r.set(n - 1, s);
      got.insert(s.code);
    }
    if (want == got) return {Table(n, r0), Table(n, r1)};
  }
}

struct FuzzReport {
  int n = 0, degree = 0;
  std::uint64_t seed = 0;
  std::size_t pairs = 0, reduced = 0, validated = 0, with_fallback = 0;
  int max_move_degree = 0;
  std::size_t total_moves = 0;
  std::map<std::string, std::size_t> fallback_labels;
  std::map<std::string, std::size_t> case_counts;
  std::vector<std::string> failures;
  double elapsed_s = 0;

  bool all_passed() const { return reduced == pairs && validated == pairs && max_move_degree <= kMoveBound; }
};

/// Reduces `pairs` random compatible pairs of the given degree and replays
/// every trace independently. Pairs come from one generator seeded with
/// `seed`, so the report does not depend on the thread count.
inline FuzzReport run_fuzz(int n, int degree, std::size_t pairs, std::uint64_t seed, const ReduceBudget& budget = {},
                           int threads = 1) {
  FuzzReport rep;
  rep.n = n;
  rep.degree = degree;
  rep.seed = seed;
  const auto t_start = std::chrono::steady_clock::now();
  std::mt19937_64 rng(seed);
  std::vector<std::pair<Table, Table>> inputs;
  for (std::size_t i = 0; i < pairs; ++i) inputs.push_back(random_compatible_pair(rng, n, degree));
  struct Outcome {
    ReduceResult r;
    bool valid = false;
    std::string why;
  };
  std::vector<Outcome> outcomes(pairs);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < pairs;) {
      auto& o = outcomes[i];
      o.r = reduce_pair(inputs[i].first, inputs[i].second, budget);
      o.valid = o.r.success && verify_trace(inputs[i].first, inputs[i].second, o.r.trace, kMoveBound, &o.why);
    }
  };
  threads = std::max(1, threads);
  if (threads == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  for (std::size_t i = 0; i < pairs; ++i) {
    const auto& o = outcomes[i];
    ++rep.pairs;
    if (o.r.success) ++rep.reduced;
    if (o.valid) ++rep.validated;
    else rep.failures.push_back("pair " + std::to_string(i) + ": " + (o.r.success ? o.why : o.r.diagnostic));
    rep.max_move_degree = std::max(rep.max_move_degree, o.r.trace.max_degree);
    rep.total_moves += o.r.trace.size();
    if (!o.r.fallback_labels.empty()) ++rep.with_fallback;
    for (auto& l : o.r.fallback_labels) ++rep.fallback_labels[l];
    for (auto& [k, v] : o.r.case_counts) rep.case_counts[k] += v;
  }
  rep.elapsed_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return rep;
}

}  // namespace kimura
