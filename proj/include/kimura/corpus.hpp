#pragma once

// Fixture of explicit move identities and their verification.
//
// A record is one JSON object per line:
//   {"ref": "...", "lhs": ["0000","abbb","?ac"], "rhs": [...], "wildcards": 1}
// Row syntax: 0 a b c are group elements, '.' is an untouched column (0),
// '?' is a wildcard (the k-th '?' of lhs equals the k-th '?' of rhs), a lower
// case letter from "pqwxyz" is a variable, and "(w+x+a)" is a sum. Optional
// fields: "vars", "constraints" (e.g. "x!=y", "x+y=a"), "printed" (the form
// as originally printed when it had to be corrected), "note".

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "kimura/group.hpp"
#include "kimura/moves.hpp"
#include "kimura/table.hpp"

namespace kimura {

namespace corpus_detail {

inline bool is_var(char c) { return std::string_view("pqwxyz").find(c) != std::string_view::npos; }

/// constant + XOR of variables, or a wildcard, or padding
struct Expr {
  GroupElem constant{};
  std::uint32_t vars = 0;  // bit v set: variable v contributes
  int wildcard = -1;
  bool pad = false;
};

struct VarTable {
  std::vector<char> names;
  int index(char c) {
    for (std::size_t i = 0; i < names.size(); ++i)
      if (names[i] == c) return static_cast<int>(i);
    names.push_back(c);
    return static_cast<int>(names.size() - 1);
  }
};

inline Expr parse_sum(std::string_view s, VarTable& vt) {
  Expr e;
  std::size_t i = 0;
  bool expect_term = true;
  while (i < s.size()) {
    const char c = s[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (c == '+' || c == '-') {  // subtraction equals addition in this group
      if (expect_term) throw std::invalid_argument("corpus: misplaced sign in '" + std::string(s) + "'");
      expect_term = true;
      ++i;
      continue;
    }
    if (!expect_term) throw std::invalid_argument("corpus: missing '+' in '" + std::string(s) + "'");
    if (is_var(c)) e.vars ^= 1u << vt.index(c);
    else e.constant += elem_from_char(c);
    expect_term = false;
    ++i;
  }
  if (expect_term) throw std::invalid_argument("corpus: empty sum '" + std::string(s) + "'");
  return e;
}

inline std::vector<Expr> parse_row(std::string_view row, VarTable& vt, int& wildcards) {
  std::vector<Expr> out;
  for (std::size_t i = 0; i < row.size(); ++i) {
    const char c = row[i];
    if (c == '(') {
      const auto close = row.find(')', i);
      if (close == std::string_view::npos) throw std::invalid_argument("corpus: unclosed '(' in " + std::string(row));
      out.push_back(parse_sum(row.substr(i + 1, close - i - 1), vt));
      i = close;
    } else if (c == '?') {
      Expr e;
      e.wildcard = wildcards++;
      out.push_back(e);
    } else if (c == '.') {
      Expr e;
      e.pad = true;
      out.push_back(e);
    } else if (is_var(c)) {
      Expr e;
      e.vars = 1u << vt.index(c);
      out.push_back(e);
    } else {
      Expr e;
      e.constant = elem_from_char(c);
      out.push_back(e);
    }
  }
  if (out.empty()) throw std::invalid_argument("corpus: empty row");
  return out;
}

inline GroupElem eval(const Expr& e, const std::vector<GroupElem>& vals, const std::vector<GroupElem>& wild) {
  if (e.pad) return GroupElem::zero();
  if (e.wildcard >= 0) return wild[static_cast<std::size_t>(e.wildcard)];
  GroupElem g = e.constant;
  for (std::size_t v = 0; v < vals.size(); ++v)
    if (e.vars >> v & 1u) g += vals[v];
  return g;
}

struct Constraint {
  Expr lhs, rhs;
  bool equal = true;
};

inline Constraint parse_constraint(const std::string& s, VarTable& vt) {
  Constraint c;
  auto pos = s.find("!=");
  std::size_t skip = 2;
  if (pos == std::string::npos) {
    pos = s.find('=');
    skip = 1;
    if (pos == std::string::npos) throw std::invalid_argument("corpus: constraint needs '=' or '!=': " + s);
  } else {
    c.equal = false;
  }
  c.lhs = parse_sum(std::string_view(s).substr(0, pos), vt);
  c.rhs = parse_sum(std::string_view(s).substr(pos + skip), vt);
  return c;
}

}  // namespace corpus_detail

struct CorpusEntry {
  std::string ref;
  std::vector<std::string> lhs, rhs;
  int wildcards = 0;
  std::vector<std::string> constraints;
  std::string printed;
  std::string note;

  static CorpusEntry from_json(const nlohmann::json& j) {
    CorpusEntry e;
    e.ref = j.at("ref").get<std::string>();
    e.lhs = j.at("lhs").get<std::vector<std::string>>();
    e.rhs = j.at("rhs").get<std::vector<std::string>>();
    e.wildcards = j.value("wildcards", 0);
    e.constraints = j.value("constraints", std::vector<std::string>{});
    e.printed = j.value("printed", std::string{});
    e.note = j.value("note", std::string{});
    return e;
  }

  nlohmann::json to_json() const {
    nlohmann::json j{{"ref", ref}, {"lhs", lhs}, {"rhs", rhs}, {"wildcards", wildcards}};
    if (!constraints.empty()) j["constraints"] = constraints;
    if (!printed.empty()) j["printed"] = printed;
    if (!note.empty()) j["note"] = note;
    return j;
  }

  std::string text() const {
    std::string s;
    for (std::size_t i = 0; i < lhs.size(); ++i) s += (i ? "+" : "") + lhs[i];
    s += " = ";
    for (std::size_t i = 0; i < rhs.size(); ++i) s += (i ? "+" : "") + rhs[i];
    return s;
  }
};

/// One concrete instance of an identity, embedded as rows of flows.
struct CorpusInstance {
  std::vector<Flow> lhs, rhs;
  std::string assignment;  // e.g. "?=a,?=0,x=b"
};

/// Instantiates wildcards and variables over all group elements (subject to the
/// constraints), pads rows to common length and, if some row is not
/// zero-sum, appends one balancing column.
inline std::vector<CorpusInstance> expand(const CorpusEntry& entry) {
  using namespace corpus_detail;
  VarTable vt;
  int wl = 0, wr = 0;
  std::vector<std::vector<Expr>> L, R;
  for (auto& r : entry.lhs) L.push_back(parse_row(r, vt, wl));
  for (auto& r : entry.rhs) R.push_back(parse_row(r, vt, wr));
  if (wl != wr) throw std::invalid_argument("corpus: wildcard count differs between sides in " + entry.ref);
  if (wl != entry.wildcards)
    throw std::invalid_argument("corpus: declared wildcards " + std::to_string(entry.wildcards) + " but found " +
                                std::to_string(wl) + " in " + entry.ref);
  std::vector<Constraint> cons;
  for (auto& c : entry.constraints) cons.push_back(parse_constraint(c, vt));

  std::size_t width = 0;
  for (auto* side : {&L, &R})
    for (auto& r : *side) width = std::max(width, r.size());

  const std::size_t nv = vt.names.size();
  const std::size_t total = nv + static_cast<std::size_t>(wl);
  std::size_t combos = 1;
  for (std::size_t i = 0; i < total; ++i) combos *= 4;

  auto build = [&](const std::vector<std::vector<Expr>>& side, const std::vector<GroupElem>& vals,
                   const std::vector<GroupElem>& wild) {
    std::vector<std::vector<GroupElem>> rows;
    for (auto& r : side) {
      std::vector<GroupElem> row;
      for (auto& e : r) row.push_back(eval(e, vals, wild));
      row.resize(width, GroupElem::zero());
      rows.push_back(std::move(row));
    }
    return rows;
  };

  std::vector<CorpusInstance> out;
  for (std::size_t code = 0; code < combos; ++code) {
    std::vector<GroupElem> vals(nv), wild(static_cast<std::size_t>(wl));
    std::size_t x = code;
    for (std::size_t i = 0; i < nv; ++i, x >>= 2) vals[i] = GroupElem{static_cast<std::uint8_t>(x & 3u)};
    for (std::size_t i = 0; i < wild.size(); ++i, x >>= 2) wild[i] = GroupElem{static_cast<std::uint8_t>(x & 3u)};
    bool ok = true;
    for (auto& c : cons) {
      const bool eq = eval(c.lhs, vals, wild) == eval(c.rhs, vals, wild);
      if (eq != c.equal) ok = false;
    }
    if (!ok) continue;

    auto lrows = build(L, vals, wild);
    auto rrows = build(R, vals, wild);
    bool balanced = true;
    for (auto* side : {&lrows, &rrows})
      for (auto& r : *side) {
        GroupElem s{};
        for (auto g : r) s += g;
        if (!s.is_zero()) balanced = false;
      }
    auto to_flows = [&](std::vector<std::vector<GroupElem>>& rows) {
      std::vector<Flow> fs;
      for (auto& r : rows) {
        if (!balanced) {
          GroupElem s{};
          for (auto g : r) s += g;
          r.push_back(s);
        }
        fs.push_back(Flow::from_elems(r));
      }
      return fs;
    };
    CorpusInstance inst;
    inst.lhs = to_flows(lrows);
    inst.rhs = to_flows(rrows);
    for (std::size_t i = 0; i < nv; ++i) {
      if (!inst.assignment.empty()) inst.assignment += ',';
      inst.assignment += std::string(1, vt.names[i]) + "=" + to_char(vals[i]);
    }
    for (auto g : wild) {
      if (!inst.assignment.empty()) inst.assignment += ',';
      inst.assignment += std::string("?=") + to_char(g);
    }
    out.push_back(std::move(inst));
  }
  return out;
}

struct CorpusResult {
  std::string ref;
  std::string identity;
  int degree = 0;
  std::size_t instances = 0;
  std::size_t trivial = 0;  // instances where both sides coincide
  std::size_t failed = 0;
  std::string first_failure;
  bool corrected = false;

  bool pass() const { return failed == 0 && instances > trivial; }
};

inline CorpusResult verify_entry(const CorpusEntry& e, int max_degree = 4) {
  CorpusResult r;
  r.ref = e.ref;
  r.identity = e.text();
  r.corrected = !e.printed.empty();
  r.degree = static_cast<int>(std::max(e.lhs.size(), e.rhs.size()));
  std::vector<CorpusInstance> inst;
  try {
    inst = expand(e);
  } catch (const std::exception& ex) {
    r.failed = 1;
    r.first_failure = ex.what();
    return r;
  }
  r.instances = inst.size();
  for (auto& in : inst) {
    std::string why;
    if (in.lhs.size() != in.rhs.size()) why = "sides have different row counts";
    else if (static_cast<int>(in.lhs.size()) > max_degree) why = "degree exceeds " + std::to_string(max_degree);
    else {
      const int n = in.lhs.front().size();
      if (profile_of(n, in.lhs) != profile_of(n, in.rhs)) why = "column multisets differ";
      else {
        auto a = in.lhs, b = in.rhs;
        std::sort(a.begin(), a.end());
        std::sort(b.begin(), b.end());
        if (a == b) {
          ++r.trivial;
          continue;
        }
      }
    }
    if (!why.empty()) {
      if (r.failed == 0) r.first_failure = why + (in.assignment.empty() ? "" : " at " + in.assignment);
      ++r.failed;
    }
  }
  if (r.failed == 0 && r.instances == r.trivial) r.first_failure = "no non-trivial instance";
  return r;
}

/// Non-trivial moves of an entry (one per instance), for use as move patterns.
inline std::vector<Move> corpus_moves(const CorpusEntry& e) {
  std::vector<Move> out;
  for (auto& in : expand(e)) {
    auto a = in.lhs, b = in.rhs;
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    if (a == b) continue;
    out.emplace_back(std::move(a), std::move(b));
  }
  return out;
}

inline std::vector<CorpusEntry> load_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open corpus file " + path);
  std::vector<CorpusEntry> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(CorpusEntry::from_json(nlohmann::json::parse(line)));
    } catch (const std::exception& ex) {
      throw std::invalid_argument(path + ":" + std::to_string(lineno) + ": " + ex.what());
    }
  }
  return out;
}

struct CorpusReport {
  std::vector<CorpusResult> results;
  std::size_t passed() const {
    return static_cast<std::size_t>(std::count_if(results.begin(), results.end(), [](auto& r) { return r.pass(); }));
  }
  bool all_pass() const { return passed() == results.size(); }

  nlohmann::json to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (auto& r : results)
      arr.push_back({{"ref", r.ref},
                     {"identity", r.identity},
                     {"degree", r.degree},
                     {"instances", r.instances},
                     {"trivial_instances", r.trivial},
                     {"failed_instances", r.failed},
                     {"corrected", r.corrected},
                     {"pass", r.pass()},
                     {"failure", r.first_failure}});
    return {{"identities", results.size()}, {"passed", passed()}, {"results", arr}};
  }
};

inline CorpusReport verify_corpus(const std::vector<CorpusEntry>& entries, int max_degree = 4) {
  CorpusReport rep;
  for (auto& e : entries) rep.results.push_back(verify_entry(e, max_degree));
  return rep;
}

#ifdef KIMURA_DATA_DIR
inline std::string default_corpus_path() { return std::string(KIMURA_DATA_DIR) + "/move_corpus.jsonl"; }
#else
inline std::string default_corpus_path() { return "data/move_corpus.jsonl"; }
#endif

inline CorpusReport verify_corpus() { return verify_corpus(load_corpus(default_corpus_path())); }

}  // namespace kimura
