#pragma once

// JSON and JSON-lines forms of tables, table pairs and move traces.

#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "kimura/moves.hpp"
#include "kimura/table.hpp"

namespace kimura {

inline nlohmann::json table_to_json(const Table& t) { return t.strings(); }

/// Accepts ["0abc", ...] or {"rows": [...]} (optionally with "leaves").
inline Table table_from_json(const nlohmann::json& j) {
  const nlohmann::json* rows = &j;
  int n = -1;
  if (j.is_object()) {
    if (!j.contains("rows")) throw std::invalid_argument("table object needs a \"rows\" array");
    rows = &j.at("rows");
    n = j.value("leaves", -1);
  }
  if (!rows->is_array()) throw std::invalid_argument("table must be an array of row strings");
  std::vector<std::string> rs;
  for (auto& r : *rows) {
    if (!r.is_string()) throw std::invalid_argument("table rows must be strings");
    rs.push_back(r.get<std::string>());
  }
  if (n >= 0) return Table::parse(n, rs);
  return Table::parse(rs);
}

/// {"t0": table, "t1": table}. Both sides must have the same column count.
inline std::pair<Table, Table> pair_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("t0") || !j.contains("t1"))
    throw std::invalid_argument("pair needs \"t0\" and \"t1\"");
  auto t0 = table_from_json(j.at("t0"));
  auto t1 = table_from_json(j.at("t1"));
  if (t0.columns() != t1.columns()) throw std::invalid_argument("pair tables have different column counts");
  return {std::move(t0), std::move(t1)};
}

inline nlohmann::json pair_to_json(const Table& t0, const Table& t1) {
  return {{"t0", table_to_json(t0)}, {"t1", table_to_json(t1)}};
}

inline nlohmann::json step_to_json(const TraceStep& s) {
  std::vector<std::string> rem, ins;
  for (auto& r : s.move.removed()) rem.push_back(r.str());
  for (auto& r : s.move.inserted()) ins.push_back(r.str());
  return {{"side", side_name(s.side)}, {"remove", rem}, {"insert", ins}};
}

inline TraceStep step_from_json(const nlohmann::json& j) {
  auto rows = [&](const char* key) {
    std::vector<Flow> out;
    for (auto& r : j.at(key)) out.push_back(Flow::parse(r.get<std::string>()));
    return out;
  };
  TraceStep s;
  s.side = parse_side(j.at("side").get<std::string>());
  s.move = Move(rows("remove"), rows("insert"));
  return s;
}

/// One step per line.
inline void write_trace_jsonl(std::ostream& out, const MoveTrace& trace) {
  for (auto& s : trace.steps) out << step_to_json(s).dump() << '\n';
}

inline MoveTrace read_trace_jsonl(std::istream& in) {
  MoveTrace t;
  std::string line;
  std::size_t no = 0;
  while (std::getline(in, line)) {
    ++no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto s = step_from_json(nlohmann::json::parse(line));
      t.push(s.side, std::move(s.move));
    } catch (const std::exception& e) {
      throw std::invalid_argument("trace line " + std::to_string(no) + ": " + e.what());
    }
  }
  return t;
}

inline nlohmann::json profile_to_json(const Profile& p) {
  nlohmann::json cols = nlohmann::json::array();
  for (int c = 0; c < p.columns(); ++c) {
    nlohmann::json col = nlohmann::json::object();
    for (auto g : kElements) col[std::string(1, to_char(g))] = p.count(c, g);
    cols.push_back(col);
  }
  return cols;
}

/// Tables, one per line (array or {"rows"} object).
inline std::vector<Table> read_tables_jsonl(std::istream& in) {
  std::vector<Table> out;
  std::string line;
  while (std::getline(in, line))
    if (line.find_first_not_of(" \t\r") != std::string::npos) out.push_back(table_from_json(nlohmann::json::parse(line)));
  return out;
}

inline nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
}

}  // namespace kimura
