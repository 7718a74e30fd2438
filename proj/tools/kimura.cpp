// kimura: command-line front end.
//
// Every subcommand writes one JSON report {"tool","version","config","result"}
// to --out (or stdout) and a one-line summary to stderr. Exit status: 0 success,
// 1 invalid input, 2 budget exhausted.

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "kimura/corpus.hpp"
#include "kimura/errors.hpp"
#include "kimura/hilbert.hpp"
#include "kimura/io.hpp"
#include "kimura/markov.hpp"
#include "kimura/reducer.hpp"

namespace {

using nlohmann::json;
using namespace kimura;

struct InvalidInput : std::runtime_error {
  using std::runtime_error::runtime_error;
};

int default_threads() { return std::max(1u, std::thread::hardware_concurrency()); }

std::string fmt_seconds(double s) {
  std::ostringstream o;
  o.setf(std::ios::fixed);
  o.precision(2);
  o << s << " s";
  return o.str();
}

void emit(const std::string& sub, const json& config, const json& result, const std::string& out_path) {
  json j{{"tool", "kimura"}, {"version", kVersion}, {"subcommand", sub}, {"config", config}, {"result", result}};
  if (out_path.empty() || out_path == "-") {
    std::cout << j.dump(2) << '\n';
    return;
  }
  std::ofstream out(out_path);
  if (!out) throw InvalidInput("cannot write " + out_path);
  out << j.dump(2) << '\n';
}

void summary(const std::string& line) { std::cerr << line << '\n'; }

FaceSpec parse_face(const std::string& s, int n) {
  auto f = FaceSpec::parse(s);
  if (f.max_column() >= n) throw InvalidInput("face spec refers to column " + std::to_string(f.max_column() + 1) +
                                              " but there are only " + std::to_string(n) + " leaves");
  return f;
}

void check_leaves(int n, int lo, int hi) {
  if (n < lo || n > hi)
    throw InvalidInput("--leaves must be in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
}

std::string cache_file(const std::string& dir, int n, const FaceSpec& face) {
  std::string tag = face.empty() ? "full" : face.str();
  std::replace(tag.begin(), tag.end(), ':', '_');
  std::replace(tag.begin(), tag.end(), ',', '-');
  return (std::filesystem::path(dir) / ("replacements_n" + std::to_string(n) + "_" + tag + ".txt")).string();
}

// --- flows ---------------------------------------------------------------

struct FlowsArgs {
  int leaves = 0;
  std::string face, out;
  bool count_only = false;
};

int cmd_flows(const FlowsArgs& a) {
  check_leaves(a.leaves, 1, 16);
  const auto face = parse_face(a.face, a.leaves);
  const auto flows = enumerate_flows(a.leaves, face);
  if (a.count_only) {
    std::cout << flows.size() << '\n';
    return 0;
  }
  json rows = json::array();
  for (auto& f : flows) rows.push_back(f.str());
  const json config{{"leaves", a.leaves}, {"face", a.face}, {"out", a.out}};
  emit("flows", config, {{"count", flows.size()}, {"flows", rows}}, a.out);
  summary("flows: n=" + std::to_string(a.leaves) + (face.empty() ? "" : " face=" + face.str()) + ": " +
          std::to_string(flows.size()) + " vertices");
  return 0;
}

// --- reduce --------------------------------------------------------------

struct ReduceArgs {
  std::string input, trace, verify_trace, out;
  int max_degree = kMoveBound;
  std::size_t budget = 10000, stage_budget = 300;
  double max_seconds = 120;
  int merge_depth = 3;
  bool log_cases = false;
};

int cmd_reduce(const ReduceArgs& a) {
  const auto [t0, t1] = pair_from_json(read_json_file(a.input));
  json config{{"input", a.input},   {"max-degree", a.max_degree},     {"budget", a.budget},
              {"stage-budget", a.stage_budget}, {"max-seconds", a.max_seconds}, {"merge-depth", a.merge_depth}, {"trace", a.trace},
              {"verify-trace", a.verify_trace}, {"log-cases", a.log_cases},     {"out", a.out}};
  if (!compatible(t0, t1)) throw InvalidInput("t0 and t1 are not compatible");

  if (!a.verify_trace.empty()) {
    std::ifstream in(a.verify_trace);
    if (!in) throw InvalidInput("cannot open " + a.verify_trace);
    const auto trace = read_trace_jsonl(in);
    std::string why;
    const bool ok = verify_trace(t0, t1, trace, a.max_degree, &why);
    emit("reduce", config, {{"mode", "verify"}, {"valid", ok}, {"steps", trace.size()},
                            {"max_move_degree", trace.max_degree}, {"error", why}}, a.out);
    summary("reduce --verify-trace: " + std::string(ok ? "valid" : "INVALID (" + why + ")") + ", " +
            std::to_string(trace.size()) + " steps");
    if (!ok) throw InvalidInput("trace does not validate: " + why);
    return 0;
  }

  if (a.max_degree < kMoveBound)
    throw InvalidInput("the reducer emits moves of degree up to " + std::to_string(kMoveBound) +
                       "; --max-degree below that is not supported");
  ReduceBudget budget;
  budget.max_nodes = a.budget;
  budget.stage_nodes = a.stage_budget;
  budget.max_seconds = a.max_seconds;
  if (a.merge_depth < 0) throw InvalidInput("--merge-depth must be >= 0");
  budget.merge_depth = a.merge_depth;
  const auto r = reduce_pair(t0, t1, budget);
  std::string why;
  const bool valid = r.success && verify_trace(t0, t1, r.trace, a.max_degree, &why);
  if (!a.trace.empty()) {
    std::ofstream out(a.trace);
    if (!out) throw InvalidInput("cannot write " + a.trace);
    write_trace_jsonl(out, r.trace);
  }
  if (a.log_cases)
    for (auto& l : r.log) std::cerr << json{{"event", "case"}, {"detail", l}}.dump() << '\n';
  json result{{"mode", "reduce"},
              {"success", r.success},
              {"validated", valid},
              {"steps", r.trace.size()},
              {"max_move_degree", r.trace.max_degree},
              {"nodes", r.nodes},
              {"case_counts", r.case_counts},
              {"fallback_labels", r.fallback_labels},
              {"diagnostic", r.diagnostic}};
  if (a.trace.empty()) {
    json steps = json::array();
    for (auto& s : r.trace.steps) steps.push_back(step_to_json(s));
    result["trace"] = steps;
  }
  emit("reduce", config, result, a.out);
  summary("reduce: " + std::string(valid ? "equal after " : "FAILED after ") + std::to_string(r.trace.size()) +
          " moves (max degree " + std::to_string(r.trace.max_degree) + ", " + std::to_string(r.fallback_labels.size()) +
          " fallbacks)" + (r.success ? "" : ": " + r.diagnostic));
  if (!r.success) throw BudgetExhausted(r.diagnostic.empty() ? "reduction budget exhausted" : r.diagnostic);
  if (!valid) throw std::logic_error("produced trace does not validate: " + why);
  return 0;
}

// --- census / connectivity -----------------------------------------------

struct ScanArgs {
  int leaves = 0, max_degree = 0, min_degree = 2, move_degree = kMoveBound, shards = 1, threads = 1;
  double mem_budget_gb = 2.0;
  std::size_t witness_limit = 2'000'000;
  std::string face, out;
};

ScanOptions scan_options(const ScanArgs& a) {
  if (a.threads < 1) throw InvalidInput("--threads must be >= 1");
  if (a.shards < 1) throw InvalidInput("--shards must be >= 1");
  if (a.mem_budget_gb <= 0) throw InvalidInput("--mem-budget-gb must be positive");
  ScanOptions opt;
  opt.threads = a.threads;
  opt.mem_budget_gb = a.mem_budget_gb;
  opt.min_passes = a.shards;
  return opt;
}

int cmd_census(const ScanArgs& a) {
  check_leaves(a.leaves, 2, 8);
  const auto face = parse_face(a.face, a.leaves);
  if (a.max_degree < 2) throw InvalidInput("--max-degree must be >= 2");
  if (a.min_degree < 1 || a.min_degree > a.max_degree) throw InvalidInput("--min-degree must be in [1, max-degree]");
  const auto rep = minimal_generator_census(a.leaves, a.max_degree, face, scan_options(a), a.min_degree);
  const json config{{"leaves", a.leaves}, {"max-degree", a.max_degree},       {"min-degree", a.min_degree},
                    {"face", a.face},     {"shards", a.shards},               {"threads", a.threads},
                    {"mem-budget-gb", a.mem_budget_gb}, {"out", a.out}};
  emit("census", config, rep.to_json(), a.out);
  std::string line = "census: n=" + std::to_string(a.leaves) + (face.empty() ? "" : " face=" + face.str()) + ":";
  double t = 0;
  for (auto& d : rep.degrees) {
    line += " d" + std::to_string(d.degree) + "=" + std::to_string(d.generators);
    t += d.elapsed_s;
  }
  summary(line + " (" + fmt_seconds(t) + ")");
  return 0;
}

int cmd_connectivity(const ScanArgs& a) {
  check_leaves(a.leaves, 2, 8);
  const auto face = parse_face(a.face, a.leaves);
  if (a.move_degree < 2) throw InvalidInput("--move-degree must be >= 2");
  if (a.max_degree < 1) throw InvalidInput("--max-table-degree must be >= 1");
  ReplacementCache cache;
  std::string cache_path;
  if (const char* dir = std::getenv("KIMURA_CACHE_DIR"); dir && *dir) {
    std::filesystem::create_directories(dir);
    cache_path = cache_file(dir, a.leaves, face);
    if (std::ifstream in(cache_path); in) cache.load(in);
  }
  const auto rep = connectivity_check(a.leaves, a.max_degree, a.move_degree, face, scan_options(a), a.witness_limit,
                                      &cache);
  if (!cache_path.empty()) {
    std::ofstream out(cache_path);
    cache.save(out);
  }
  const json config{{"leaves", a.leaves}, {"max-table-degree", a.max_degree}, {"move-degree", a.move_degree},
                    {"face", a.face},     {"threads", a.threads},              {"mem-budget-gb", a.mem_budget_gb},
                    {"shards", a.shards}, {"witness-limit", a.witness_limit},  {"out", a.out}};
  emit("connectivity", config, rep.to_json(), a.out);
  std::string line = "connectivity: n=" + std::to_string(a.leaves) + (face.empty() ? "" : " face=" + face.str()) +
                     " tables<=" + std::to_string(a.max_degree) + " moves<=" + std::to_string(a.move_degree) + ": ";
  if (rep.connected) {
    line += "all fibers connected";
  } else {
    line += "disconnected fiber in degree " + std::to_string(rep.witness->degree) +
            (rep.witness->validated ? " (confirmed)" : " (search budget hit)");
  }
  summary(line);
  if (!rep.connected && !rep.witness->validated)
    throw BudgetExhausted("witness search exceeded --witness-limit");
  return 0;
}

// --- hilbert / series ----------------------------------------------------

struct HilbertArgs {
  int leaves = 0, max_dilation = -1, threads = 1;
  std::size_t max_layer = 0;
  std::string face, out;
};

json mpz_array(const std::vector<mpz_class>& v) {
  json a = json::array();
  for (auto& x : v) a.push_back(x.get_str());
  return a;
}

int cmd_hilbert(const HilbertArgs& a) {
  check_leaves(a.leaves, 1, kMaxKeyColumns);
  if (a.threads < 1) throw InvalidInput("--threads must be >= 1");
  const auto face = parse_face(a.face, a.leaves);
  const int dim = polytope_dimension(a.leaves, face);
  const int K = a.max_dilation >= 0 ? a.max_dilation : (face.empty() && a.leaves <= 3 ? dim + 3 : 3);
  if (K > kMaxKeyDegree) throw InvalidInput("--max-dilation must be <= " + std::to_string(kMaxKeyDegree));
  const json config{{"leaves", a.leaves},       {"face", a.face},       {"max-dilation", K},
                    {"max-layer", a.max_layer}, {"threads", a.threads}, {"out", a.out}};
  auto values = hilbert_values(a.leaves, face, K, a.max_layer, a.threads);
  json result;
  std::string line = "hilbert: n=" + std::to_string(a.leaves) + (face.empty() ? "" : " face=" + face.str()) +
                     " dim=" + std::to_string(dim) + " H(0.." + std::to_string(K) + ")";
  if (K >= dim + 1) {
    const auto rec = make_record(a.leaves, face, dim, std::move(values));
    result = rec.to_json();
    result["reciprocity_zeros"] = reciprocity_zeros(rec);
    line += ", deg h=" + std::to_string(rec.deg_h()) + ", generators in degree <= " +
            std::to_string(rec.regularity_bound);
  } else {
    result = {{"leaves", a.leaves}, {"face", face.str()}, {"dim", dim}, {"values", mpz_array(values)},
              {"note", "fewer than dim+2 values; h-vector not determined"}};
    line += ", H(" + std::to_string(K) + ")=" + values.back().get_str();
  }
  emit("hilbert", config, result, a.out);
  summary(line);
  return 0;
}

struct SeriesArgs {
  std::string numerator_file, out;
  int denom_exp = -1, expand = 5;
};

int cmd_series(const SeriesArgs& a) {
  if (a.expand < 0) throw InvalidInput("--expand must be >= 0");
  auto s = SeriesData::from_json(read_json_file(a.numerator_file));
  if (a.denom_exp >= 0) s.denom_exp = a.denom_exp;
  const auto coeffs = expand_series(s, a.expand);
  json result{{"denom_exp", s.denom_exp}, {"numerator_degree", s.degree()}, {"coefficients", mpz_array(coeffs)}};
  if (s.denom_exp > 0 && s.degree() >= 0) {
    const auto reg = regularity_bound(s.numerator, s.denom_exp - 1);
    result["a_invariant"] = reg.a_invariant;
    result["regularity_bound"] = reg.bound;
  }
  const json config{{"numerator-file", a.numerator_file}, {"denom-exp", a.denom_exp}, {"expand", a.expand},
                    {"out", a.out}};
  emit("series", config, result, a.out);
  std::string line = "series: N/(1-t)^" + std::to_string(s.denom_exp) + " =";
  for (std::size_t k = 0; k < coeffs.size() && k < 4; ++k) line += (k ? " + " : " ") + coeffs[k].get_str() + (k ? " t^" + std::to_string(k) : "");
  summary(line + (coeffs.size() > 4 ? " + ..." : ""));
  return 0;
}

// --- verify-moves / fuzz -------------------------------------------------

struct CorpusArgs {
  std::string corpus, out;
  int max_degree = kMoveBound;
};

int cmd_verify_moves(const CorpusArgs& a) {
  const std::string path = a.corpus.empty() ? default_corpus_path() : a.corpus;
  if (!std::filesystem::exists(path)) throw InvalidInput("cannot open " + path);
  const auto rep = verify_corpus(load_corpus(path), a.max_degree);
  const json config{{"corpus", a.corpus}, {"max-degree", a.max_degree}, {"out", a.out}};
  emit("verify-moves", config, rep.to_json(), a.out);
  summary("verify-moves: " + std::to_string(rep.passed()) + "/" + std::to_string(rep.results.size()) +
          " identities pass");
  if (!rep.all_pass()) throw InvalidInput("corpus contains failing identities");
  return 0;
}

struct FuzzArgs {
  int leaves = 7, degree = 6, threads = 1;
  std::size_t count = 1000, budget = 10000, stage_budget = 300;
  double max_seconds = 120;
  int merge_depth = 3;
  std::uint64_t seed = 1;
  std::string out;
};

int cmd_fuzz(const FuzzArgs& a) {
  check_leaves(a.leaves, 2, 32);
  if (a.degree < 1) throw InvalidInput("--degree must be >= 1");
  if (a.threads < 1) throw InvalidInput("--threads must be >= 1");
  ReduceBudget budget;
  budget.max_nodes = a.budget;
  budget.stage_nodes = a.stage_budget;
  budget.max_seconds = a.max_seconds;
  if (a.merge_depth < 0) throw InvalidInput("--merge-depth must be >= 0");
  budget.merge_depth = a.merge_depth;
  const auto rep = run_fuzz(a.leaves, a.degree, a.count, a.seed, budget, a.threads);
  const json config{{"leaves", a.leaves},     {"degree", a.degree},
                    {"count", a.count},       {"seed", a.seed},
                    {"budget", a.budget},     {"stage-budget", a.stage_budget},
                    {"max-seconds", a.max_seconds}, {"merge-depth", a.merge_depth},
                    {"threads", a.threads},
                    {"out", a.out}};
  const json result{{"pairs", rep.pairs},
                    {"reduced", rep.reduced},
                    {"validated", rep.validated},
                    {"with_fallback", rep.with_fallback},
                    {"max_move_degree", rep.max_move_degree},
                    {"total_moves", rep.total_moves},
                    {"fallback_labels", rep.fallback_labels},
                    {"case_counts", rep.case_counts},
                    {"failures", rep.failures},
                    {"all_passed", rep.all_passed()},
                    {"elapsed_s", rep.elapsed_s}};
  emit("fuzz", config, result, a.out);
  summary("fuzz: n=" + std::to_string(a.leaves) + " degree " + std::to_string(a.degree) + " seed " +
          std::to_string(a.seed) + ": " + std::to_string(rep.validated) + "/" + std::to_string(rep.pairs) +
          " validated, " + std::to_string(rep.with_fallback) + " used fallback (" + fmt_seconds(rep.elapsed_s) + ")");
  if (!rep.all_passed()) throw BudgetExhausted(std::to_string(rep.pairs - rep.validated) + " pairs did not reduce");
  return 0;
}

// Rebuilds an argument list from a recorded report or bare config.
std::vector<std::string> args_from_config(const std::string& path) {
  const auto j = read_json_file(path);
  if (!j.contains("subcommand") || !j.contains("config"))
    throw InvalidInput(path + " is not a kimura report (needs \"subcommand\" and \"config\")");
  std::vector<std::string> args{j.at("subcommand").get<std::string>()};
  for (auto& [k, v] : j.at("config").items()) {
    if (v.is_null()) continue;
    if (v.is_boolean()) {
      if (v.get<bool>()) args.push_back("--" + k);
      continue;
    }
    const std::string s = v.is_string() ? v.get<std::string>() : v.dump();
    if (s.empty()) continue;
    args.push_back("--" + k);
    args.push_back(s);
  }
  return args;
}

int run(std::vector<std::string> args) {
  CLI::App app{"Kimura 3-parameter model on claw trees: flows, moves, reduction, censuses, Hilbert series", "kimura"};
  app.set_version_flag("--version", std::string(kVersion));
  std::string replay;
  app.add_option("--config", replay, "rerun the job recorded in a report file");
  app.require_subcommand(0, 1);
  const int hw = default_threads();

  FlowsArgs fa;
  auto* flows = app.add_subcommand("flows", "enumerate flows (polytope vertices)");
  flows->add_option("--leaves,-n", fa.leaves, "number of leaves")->required();
  flows->add_option("--face", fa.face, "forbidden entries, e.g. \"5:c,6:c\"");
  flows->add_flag("--count-only", fa.count_only, "print only the number of flows");
  flows->add_option("--out,-o", fa.out, "report path (default stdout)");

  ReduceArgs ra;
  auto* reduce = app.add_subcommand("reduce", "connect a compatible pair by moves of degree <= 4");
  reduce->add_option("--input,-i", ra.input, "pair JSON {\"t0\": [...], \"t1\": [...]}")->required();
  reduce->add_option("--max-degree", ra.max_degree, "move degree bound")->capture_default_str();
  reduce->add_option("--budget", ra.budget, "fallback search node budget")->capture_default_str();
  reduce->add_option("--stage-budget", ra.stage_budget, "node budget per strategy stage")->capture_default_str();
  reduce->add_option("--max-seconds", ra.max_seconds, "wall-clock budget")->capture_default_str();
  reduce->add_option("--merge-depth", ra.merge_depth, "nested column merges")->capture_default_str();
  reduce->add_option("--trace,--trace-out", ra.trace, "write the trace as JSON lines");
  reduce->add_option("--verify-trace", ra.verify_trace, "replay this trace file instead of reducing");
  reduce->add_flag("--log-cases", ra.log_cases, "log strategy cases to stderr as JSON lines");
  reduce->add_option("--out,-o", ra.out, "report path (default stdout)");

  ScanArgs ca;
  ca.threads = hw;
  auto* census = app.add_subcommand("census", "count minimal generators per degree");
  census->add_option("--leaves,-n", ca.leaves)->required();
  census->add_option("--max-degree", ca.max_degree)->required();
  census->add_option("--min-degree", ca.min_degree)->capture_default_str();
  census->add_option("--face", ca.face);
  census->add_option("--shards", ca.shards, "minimum hash passes per shard")->capture_default_str();
  census->add_option("--threads,-j", ca.threads)->capture_default_str();
  census->add_option("--mem-budget-gb", ca.mem_budget_gb)->capture_default_str();
  census->add_option("--out,-o", ca.out);

  ScanArgs na;
  na.threads = hw;
  auto* conn = app.add_subcommand("connectivity", "check all fibers are connected by bounded moves");
  conn->add_option("--leaves,-n", na.leaves)->required();
  conn->add_option("--max-table-degree", na.max_degree)->required();
  conn->add_option("--move-degree", na.move_degree)->capture_default_str();
  conn->add_option("--face", na.face);
  conn->add_option("--shards", na.shards)->capture_default_str();
  conn->add_option("--threads,-j", na.threads)->capture_default_str();
  conn->add_option("--mem-budget-gb", na.mem_budget_gb)->capture_default_str();
  conn->add_option("--witness-limit", na.witness_limit, "tables visited when confirming a witness")
      ->capture_default_str();
  conn->add_option("--out,-o", na.out);

  HilbertArgs ha;
  ha.threads = hw;
  auto* hilbert = app.add_subcommand("hilbert", "Hilbert function, Ehrhart polynomial and h-vector");
  hilbert->add_option("--leaves,-n", ha.leaves)->required();
  hilbert->add_option("--face", ha.face);
  hilbert->add_option("--max-dilation", ha.max_dilation, "largest k (default dim+3 for n<=3, else 3)");
  hilbert->add_option("--max-layer", ha.max_layer, "give up when a dilation has more profiles (0: no limit)");
  hilbert->add_option("--threads,-j", ha.threads)->capture_default_str();
  hilbert->add_option("--out,-o", ha.out);

  SeriesArgs sa;
  auto* series = app.add_subcommand("series", "expand N(t)/(1-t)^e");
  series->add_option("--numerator-file", sa.numerator_file, "{\"numerator\": [...], \"denom_exp\": e}")
      ->required();
  series->add_option("--denom-exp", sa.denom_exp, "override the file's exponent");
  series->add_option("--expand", sa.expand, "number of coefficients past t^0")->capture_default_str();
  series->add_option("--out,-o", sa.out);

  CorpusArgs va;
  auto* verify = app.add_subcommand("verify-moves", "check the move corpus");
  verify->add_option("--corpus", va.corpus, "JSON-lines corpus (default: bundled)");
  verify->add_option("--max-degree", va.max_degree)->capture_default_str();
  verify->add_option("--out,-o", va.out);

  FuzzArgs za;
  za.threads = hw;
  auto* fuzz = app.add_subcommand("fuzz", "reduce seeded random compatible pairs and replay every trace");
  fuzz->add_option("--leaves,-n", za.leaves)->capture_default_str();
  fuzz->add_option("--degree", za.degree)->capture_default_str();
  fuzz->add_option("--count", za.count)->capture_default_str();
  fuzz->add_option("--seed", za.seed)->capture_default_str();
  fuzz->add_option("--budget", za.budget)->capture_default_str();
  fuzz->add_option("--stage-budget", za.stage_budget)->capture_default_str();
  fuzz->add_option("--max-seconds", za.max_seconds)->capture_default_str();
  fuzz->add_option("--merge-depth", za.merge_depth)->capture_default_str();
  fuzz->add_option("--threads,-j", za.threads)->capture_default_str();
  fuzz->add_option("--out,-o", za.out);

  std::reverse(args.begin(), args.end());  // CLI11 takes them reversed
  try {
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }
  if (!replay.empty()) {
    if (app.get_subcommands().size()) throw InvalidInput("--config cannot be combined with a subcommand");
    return run(args_from_config(replay));
  }
  if (app.get_subcommands().empty()) throw InvalidInput("a subcommand is required (see --help)");

  if (*flows) return cmd_flows(fa);
  if (*reduce) return cmd_reduce(ra);
  if (*census) return cmd_census(ca);
  if (*conn) return cmd_connectivity(na);
  if (*hilbert) return cmd_hilbert(ha);
  if (*series) return cmd_series(sa);
  if (*verify) return cmd_verify_moves(va);
  if (*fuzz) return cmd_fuzz(za);
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(std::vector<std::string>(argv + 1, argv + argc));
  } catch (const kimura::BudgetExhausted& e) {
    std::cerr << "kimura: budget exhausted: " << e.what() << '\n';
    return 2;
  } catch (const InvalidInput& e) {
    std::cerr << "kimura: " << e.what() << '\n';
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "kimura: invalid input: " << e.what() << '\n';
    return 1;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "kimura: invalid input: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "kimura: error: " << e.what() << '\n';
    return 1;
  }
}
