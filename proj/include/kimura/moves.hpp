#pragma once

// Moves: exchanges of a row sub-multiset for a compatible one, traces of moves
// applied to a pair of tables, and one-move neighborhoods inside a fiber.

#include <algorithm>
#include <bit>
#include <functional>
#include <istream>
#include <ostream>
#include <sstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "kimura/group.hpp"
#include "kimura/table.hpp"

namespace kimura {

class Move {
 public:
  Move() = default;

  Move(std::vector<Flow> removed, std::vector<Flow> inserted)
      : removed_(std::move(removed)), inserted_(std::move(inserted)) {
    if (removed_.empty() || removed_.size() != inserted_.size())
      throw std::invalid_argument("move must exchange equally many rows (at least one)");
    const int n = removed_.front().size();
    for (const auto* side : {&removed_, &inserted_})
      for (const auto& r : *side)
        if (r.size() != n || !r.is_flow()) throw std::invalid_argument("move row " + r.str() + " is not a flow of length " + std::to_string(n));
    std::sort(removed_.begin(), removed_.end());
    std::sort(inserted_.begin(), inserted_.end());
    if (removed_ == inserted_) throw std::invalid_argument("trivial move: removed and inserted rows coincide");
    if (profile_of(n, removed_) != profile_of(n, inserted_))
      throw std::invalid_argument("move sides are not compatible");
  }

  const std::vector<Flow>& removed() const { return removed_; }
  const std::vector<Flow>& inserted() const { return inserted_; }
  int degree() const { return static_cast<int>(removed_.size()); }
  int columns() const { return removed_.empty() ? 0 : removed_.front().size(); }

  /// Columns on which the two sides' rows are not all the same.
  /// Columns the move changes: the complement of the largest column set on
  /// which some pairing of removed and inserted rows agrees. Ties prefer
  /// leaving low columns untouched. Above degree 8 only constant columns count
  /// as untouched.
  std::vector<int> columns_touched() const {
    const int n = columns();
    const std::size_t d = removed_.size();
    std::uint64_t best = 0;
    if (d <= 8) {
      std::vector<std::size_t> perm(d);
      for (std::size_t i = 0; i < d; ++i) perm[i] = i;
      int best_pop = -1;
      do {
        std::uint64_t mask = 0;
        for (int c = 0; c < n; ++c) {
          bool ok = true;
          for (std::size_t i = 0; i < d && ok; ++i) ok = removed_[i][c] == inserted_[perm[i]][c];
          if (ok) mask |= std::uint64_t{1} << c;
        }
        const int pop = std::popcount(mask);
        // lower untouched columns win ties: compare bit-reversed masks
        auto rank = [n](std::uint64_t m) {
          std::uint64_t r = 0;
          for (int c = 0; c < n; ++c)
            if (m >> c & 1) r |= std::uint64_t{1} << (n - 1 - c);
          return r;
        };
        if (pop > best_pop || (pop == best_pop && rank(mask) > rank(best))) {
          best_pop = pop;
          best = mask;
        }
      } while (std::next_permutation(perm.begin(), perm.end()));
    } else {
      for (int c = 0; c < n; ++c) {
        bool constant = true;
        for (auto& r : removed_) constant = constant && r[c] == removed_.front()[c];
        if (constant) best |= std::uint64_t{1} << c;
      }
    }
    std::vector<int> cols;
    for (int c = 0; c < n; ++c)
      if (!(best >> c & 1)) cols.push_back(c);
    return cols;
  }

  Move reversed() const { return Move(inserted_, removed_); }

  /// Same move after acting by a flow / automorphism / column permutation on every row.
  Move act(const Flow& f) const { return map_rows([&](const Flow& r) { return r + f; }); }
  Move apply(const Automorphism& a) const { return map_rows([&](const Flow& r) { return r.apply(a); }); }
  Move permute(const std::vector<int>& perm) const { return map_rows([&](const Flow& r) { return r.permute(perm); }); }

  friend bool operator==(const Move&, const Move&) = default;

 private:
  template <class F>
  Move map_rows(F&& f) const {
    std::vector<Flow> a, b;
    for (auto& r : removed_) a.push_back(f(r));
    for (auto& r : inserted_) b.push_back(f(r));
    return Move(std::move(a), std::move(b));
  }

  std::vector<Flow> removed_;
  std::vector<Flow> inserted_;
};

/// Removes m.removed from t and adds m.inserted.
inline Table apply_move(const Table& t, const Move& m) {
  if (m.columns() != t.columns()) throw std::invalid_argument("apply_move: column count mismatch");
  std::vector<Flow> rows = t.rows();
  for (const auto& r : m.removed()) {
    auto it = std::lower_bound(rows.begin(), rows.end(), r);
    if (it == rows.end() || *it != r) throw std::invalid_argument("apply_move: row " + r.str() + " not in table");
    rows.erase(it);
  }
  rows.insert(rows.end(), m.inserted().begin(), m.inserted().end());
  return Table(t.columns(), std::move(rows));
}

enum class Side { T0, T1 };

inline const char* side_name(Side s) { return s == Side::T0 ? "T0" : "T1"; }
inline Side parse_side(const std::string& s) {
  if (s == "T0") return Side::T0;
  if (s == "T1") return Side::T1;
  throw std::invalid_argument("side must be T0 or T1, got '" + s + "'");
}

struct TraceStep {
  Side side = Side::T0;
  Move move;
};

struct MoveTrace {
  std::vector<TraceStep> steps;
  int max_degree = 0;

  void push(Side s, Move m) {
    max_degree = std::max(max_degree, m.degree());
    steps.push_back({s, std::move(m)});
  }
  void append(const MoveTrace& other) {
    for (auto& st : other.steps) push(st.side, st.move);
  }
  std::size_t size() const { return steps.size(); }
  bool empty() const { return steps.empty(); }
};

struct ReplayResult {
  bool ok = false;
  bool equal = false;  // final tables coincide
  std::string error;
  Table t0, t1;
};

/// Replays a trace step by step, checking move legality, the degree bound and
/// compatibility after each step.
inline ReplayResult replay(const Table& t0, const Table& t1, const MoveTrace& trace, int degree_bound) {
  ReplayResult r;
  r.t0 = t0;
  r.t1 = t1;
  if (!compatible(t0, t1)) {
    r.error = "initial tables are not compatible";
    return r;
  }
  for (std::size_t i = 0; i < trace.steps.size(); ++i) {
    const auto& st = trace.steps[i];
    if (st.move.degree() > degree_bound) {
      r.error = "step " + std::to_string(i) + " has degree " + std::to_string(st.move.degree());
      return r;
    }
    try {
      Table& t = st.side == Side::T0 ? r.t0 : r.t1;
      t = apply_move(t, st.move);
    } catch (const std::exception& e) {
      r.error = "step " + std::to_string(i) + ": " + e.what();
      return r;
    }
    if (!compatible(r.t0, r.t1)) {
      r.error = "step " + std::to_string(i) + " broke compatibility";
      return r;
    }
  }
  r.ok = true;
  r.equal = r.t0 == r.t1;
  return r;
}

/// A trace is valid when it replays without error and ends with equal tables.
inline bool verify_trace(const Table& t0, const Table& t1, const MoveTrace& trace, int degree_bound,
                         std::string* why = nullptr) {
  auto r = replay(t0, t1, trace, degree_bound);
  if (!r.ok) {
    if (why) *why = r.error;
    return false;
  }
  if (!r.equal) {
    if (why) *why = "replay does not end in equal tables";
    return false;
  }
  return true;
}

/// All multisets of `degree` flows of length n with the given profile, each
/// sorted, in lexicographic order.
inline std::vector<std::vector<Flow>> profile_fiber(const Profile& target) {
  const int n = target.columns();
  const int d = static_cast<int>(target.degree());
  std::vector<std::vector<Flow>> out;
  if (d == 0) {
    out.emplace_back();
    return out;
  }
  // candidate rows: flows using only symbols present in each column
  std::vector<Flow> cand;
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
  std::vector<Flow> chosen;
  std::function<void(std::size_t)> dfs = [&](std::size_t start) {
    if (static_cast<int>(chosen.size()) == d) {
      out.push_back(chosen);
      return;
    }
    for (std::size_t i = start; i < cand.size(); ++i) {
      const Flow& f = cand[i];
      bool fits = true;
      for (int c = 0; c < n && fits; ++c) fits = rem[static_cast<std::size_t>(4 * c + f[c].code)] > 0;
      if (!fits) continue;
      for (int c = 0; c < n; ++c) --rem[static_cast<std::size_t>(4 * c + f[c].code)];
      chosen.push_back(f);
      dfs(i);
      chosen.pop_back();
      for (int c = 0; c < n; ++c) ++rem[static_cast<std::size_t>(4 * c + f[c].code)];
    }
  };
  dfs(0);
  return out;
}

/// Concurrent memo table from a sub-multiset profile to its full fiber.
class ReplacementCache {
 public:
  using FiberPtr = std::shared_ptr<const std::vector<std::vector<Flow>>>;

  FiberPtr get(const Profile& p) {
    const std::string key = encode(p);
    {
      std::shared_lock lock(mu_);
      auto it = map_.find(key);
      if (it != map_.end()) return it->second;
    }
    auto fiber = std::make_shared<const std::vector<std::vector<Flow>>>(profile_fiber(p));
    std::unique_lock lock(mu_);
    auto [it, inserted] = map_.emplace(key, std::move(fiber));
    return it->second;
  }

  std::size_t size() const {
    std::shared_lock lock(mu_);
    return map_.size();
  }

  /// Writes all entries, one per line: "<key hex> <row> <row> ... ;" per fiber member.
  void save(std::ostream& out) const {
    std::shared_lock lock(mu_);
    std::vector<std::string> keys;
    for (auto& kv : map_) keys.push_back(kv.first);
    std::sort(keys.begin(), keys.end());
    for (auto& k : keys) {
      static const char* hex = "0123456789abcdef";
      for (unsigned char c : k) out << hex[c >> 4] << hex[c & 15];
      for (auto& member : *map_.at(k)) {
        for (auto& r : member) out << ' ' << r.str();
        out << " ;";
      }
      out << '\n';
    }
  }

  /// Reads entries written by save(). Throws on malformed lines.
  void load(std::istream& in) {
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::istringstream ls(line);
      std::string hex;
      ls >> hex;
      if (hex.size() % 2) throw std::invalid_argument("replacement cache: bad key");
      std::string key;
      for (std::size_t i = 0; i < hex.size(); i += 2) key.push_back(static_cast<char>(std::stoi(hex.substr(i, 2), nullptr, 16)));
      std::vector<std::vector<Flow>> fiber;
      std::vector<Flow> member;
      for (std::string tok; ls >> tok;) {
        if (tok == ";") {
          std::sort(member.begin(), member.end());
          fiber.push_back(std::move(member));
          member.clear();
        } else {
          member.push_back(Flow::parse(tok));
        }
      }
      if (!member.empty()) throw std::invalid_argument("replacement cache: unterminated fiber member");
      std::unique_lock lock(mu_);
      map_.emplace(std::move(key), std::make_shared<const std::vector<std::vector<Flow>>>(std::move(fiber)));
    }
  }
  void clear() {
    std::unique_lock lock(mu_);
    map_.clear();
  }

 private:
  static std::string encode(const Profile& p) {
    std::string s;
    s.reserve(p.raw().size() * 2 + 1);
    s.push_back(static_cast<char>(p.columns()));
    for (auto c : p.raw()) {
      s.push_back(static_cast<char>(c & 0xff));
      s.push_back(static_cast<char>(c >> 8));
    }
    return s;
  }

  mutable std::shared_mutex mu_;
  std::unordered_map<std::string, FiberPtr> map_;
};

/// Calls fn(sub) for each distinct sub-multiset of the sorted rows of size s.
template <class Fn>
void for_each_submultiset(const std::vector<Flow>& rows, int s, Fn&& fn) {
  std::vector<Flow> sub;
  std::function<void(std::size_t)> rec = [&](std::size_t start) {
    if (static_cast<int>(sub.size()) == s) {
      fn(static_cast<const std::vector<Flow>&>(sub));
      return;
    }
    for (std::size_t i = start; i < rows.size(); ++i) {
      if (i > start && rows[i] == rows[i - 1]) continue;
      sub.push_back(rows[i]);
      rec(i + 1);
      sub.pop_back();
    }
  };
  rec(0);
}

/// Calls fn(move) for every non-trivial move of degree 2..max_deg on t. The
/// same resulting table may be reached by several moves.
template <class Fn>
void for_each_move(const Table& t, int max_deg, ReplacementCache& cache, Fn&& fn) {
  if (max_deg < 2) throw std::invalid_argument("neighbors: max degree must be >= 2");
  const int top = std::min(max_deg, t.degree());
  for (int s = 2; s <= top; ++s) {
    for_each_submultiset(t.rows(), s, [&](const std::vector<Flow>& sub) {
      auto fiber = cache.get(profile_of(t.columns(), sub));
      for (const auto& rep : *fiber) {
        if (rep == sub) continue;
        // skip replacements sharing a row with sub: those are smaller moves
        bool shares = false;
        for (std::size_t i = 0, j = 0; i < sub.size() && j < rep.size();) {
          if (sub[i] == rep[j]) {
            shares = true;
            break;
          }
          if (sub[i] < rep[j]) ++i;
          else ++j;
        }
        if (shares) continue;
        fn(Move(sub, rep));
      }
    });
  }
}

/// Distinct tables one move of degree <= max_deg away from t, in canonical order.
inline std::vector<Table> neighbors(const Table& t, int max_deg, ReplacementCache& cache) {
  std::set<Table> seen;
  for_each_move(t, max_deg, cache, [&](const Move& m) { seen.insert(apply_move(t, m)); });
  return {seen.begin(), seen.end()};
}

/// Whether t1 is reachable from t0 with moves of degree <= max_deg, by BFS over
/// the fiber. Gives up (returns nullopt) after `limit` visited tables.
inline std::optional<bool> reachable(const Table& t0, const Table& t1, int max_deg, ReplacementCache& cache,
                                     std::size_t limit = 1'000'000) {
  if (!compatible(t0, t1)) return false;
  if (t0 == t1) return true;
  std::set<Table> seen{t0};
  std::vector<Table> frontier{t0};
  while (!frontier.empty()) {
    std::vector<Table> next;
    for (const auto& t : frontier)
      for (auto& nb : neighbors(t, max_deg, cache)) {
        if (nb == t1) return true;
        if (seen.insert(nb).second) {
          if (seen.size() > limit) return std::nullopt;
          next.push_back(std::move(nb));
        }
      }
    frontier = std::move(next);
  }
  return false;
}

}  // namespace kimura
