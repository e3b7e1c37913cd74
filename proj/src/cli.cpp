#include "ciaftp/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <memory>
#include <optional>
#include <random>
#include <sstream>
#include <thread>

#include "ciaftp/dictionary.hpp"
#include "ciaftp/engine.hpp"
#include "ciaftp/kernel_spec.hpp"
#include "ciaftp/oracle.hpp"
#include "ciaftp/update_rule.hpp"

namespace ciaftp {

namespace {

using nlohmann::ordered_json;

struct Config {
  std::string command;
  std::string kernel_path;
  std::size_t length = 1;
  bool length_given = false;
  std::uint64_t runs = 1;
  std::optional<std::uint64_t> seed;
  Limits limits;
  unsigned jobs = 1;
  std::string out_path;
  std::string format = "csv";
  bool no_timing = false;
  std::optional<double> u;
  std::string algorithm = "ciaftp";
  std::size_t depth_cap = 8;
  bool dot = false;
  bool check = false;
};

struct LoadedKernel {
  std::unique_ptr<Kernel> kernel;
  std::uint64_t hash = 0;
};

LoadedKernel load(const Config& cfg) {
  const std::string text = read_text_file(cfg.kernel_path);
  return LoadedKernel{parse_kernel_spec(text), fnv1a64(text)};
}

std::uint64_t resolve_seed(const Config& cfg) {
  if (cfg.seed) return *cfg.seed;
  if (const char* env = std::getenv("CIAFTP_SEED")) {
    char* end = nullptr;
    errno = 0;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (errno != 0 || end == env || *end != '\0')
      throw Error(ErrorCode::InvalidArgument, std::string("CIAFTP_SEED is not an unsigned integer: '") + env + "'");
    return v;
  }
  std::random_device rd;
  return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

std::string hex64(std::uint64_t v) {
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << v;
  return s.str();
}

std::string num(double v) {
  std::ostringstream s;
  s << std::setprecision(17) << v;
  return s.str();
}

ordered_json meta_json(const Config& cfg, const LoadedKernel& k, std::uint64_t seed) {
  ordered_json m;
  m["command"] = cfg.command;
  m["kernel"] = cfg.kernel_path;
  m["kernel_fnv1a64"] = hex64(k.hash);
  m["kernel_type"] = std::string(family_name(k.kernel->family()));
  m["generator"] = std::string(RngStream::kAlgorithm);
  m["seed"] = seed;
  m["length"] = cfg.length;
  m["runs"] = cfg.runs;
  m["max_iter"] = cfg.limits.max_iter;
  m["max_depth"] = cfg.limits.max_depth;
  m["max_nodes"] = cfg.limits.max_nodes;
  return m;
}

void meta_csv(std::ostream& os, const Config& cfg, const LoadedKernel& k, std::uint64_t seed) {
  os << "# ciaftp " << cfg.command << "\n"
     << "# kernel: " << cfg.kernel_path << " fnv1a64=" << hex64(k.hash) << " type=" << family_name(k.kernel->family())
     << "\n"
     << "# generator: " << RngStream::kAlgorithm << " seed=" << seed << "\n"
     << "# length: " << cfg.length << " runs: " << cfg.runs << "\n"
     << "# limits: max_iter=" << cfg.limits.max_iter << " max_depth=" << cfg.limits.max_depth
     << " max_nodes=" << cfg.limits.max_nodes << "\n";
}

bool is_budget(ErrorCode c) {
  return c == ErrorCode::MaxDepthExceeded || c == ErrorCode::IterationLimitExceeded || c == ErrorCode::NodeBudgetExceeded;
}

struct RunRow {
  bool ok = false;
  std::string sample;
  RunDiagnostics diag;
  ErrorCode code = ErrorCode::InvalidArgument;
};

template <class F>
std::vector<RunRow> run_many(std::uint64_t runs, unsigned jobs, F&& one) {
  std::vector<RunRow> rows(runs);
  jobs = std::max(1u, jobs);
  auto worker = [&](unsigned j) {
    for (std::uint64_t i = j; i < runs; i += jobs) rows[i] = one(i);
  };
  if (jobs == 1) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(worker, j);
    for (auto& t : pool) t.join();
  }
  return rows;
}

RunRow one_run(const Kernel& k, const Config& cfg, std::uint64_t seed, Algorithm alg, bool keep_records) {
  RunRow row;
  RunOptions ro{cfg.check, keep_records};
  try {
    RunResult r = alg == Algorithm::Ciaftp ? run(k, cfg.length, seed, cfg.limits, ro)
                                           : pw_extended(k, cfg.length, seed, cfg.limits, ro);
    row.ok = true;
    row.sample = k.alphabet().format(r.sample);
    row.diag = std::move(r.diagnostics);
  } catch (const RunAborted& e) {
    if (!is_budget(e.code())) throw;
    row.code = e.code();
    row.diag = e.diagnostics();
  }
  return row;
}

int cmd_sample(const Config& cfg, std::ostream& os) {
  LoadedKernel k = load(cfg);
  const std::uint64_t seed = resolve_seed(cfg);
  auto rows = run_many(cfg.runs, cfg.jobs,
                       [&](std::uint64_t i) { return one_run(*k.kernel, cfg, seed + i, Algorithm::Ciaftp, false); });
  bool any_failed = false;
  if (cfg.format == "json") {
    ordered_json doc;
    doc["meta"] = meta_json(cfg, k, seed);
    doc["runs"] = ordered_json::array();
    for (std::uint64_t i = 0; i < rows.size(); ++i) {
      const RunRow& r = rows[i];
      ordered_json j;
      j["run_id"] = i;
      j["status"] = r.ok ? std::string("ok") : std::string(code_name(r.code));
      j["sample"] = r.sample;
      j["tau"] = r.diag.tau;
      j["iterations"] = r.diag.iterations;
      j["node_touches"] = r.diag.total_node_touches;
      if (!cfg.no_timing) j["wall_ns"] = r.diag.wall_ns;
      doc["runs"].push_back(std::move(j));
      any_failed |= !r.ok;
    }
    os << doc.dump(2) << "\n";
  } else {
    meta_csv(os, cfg, k, seed);
    os << "run_id,status,sample,tau,iterations,node_touches" << (cfg.no_timing ? "" : ",wall_ns") << "\n";
    for (std::uint64_t i = 0; i < rows.size(); ++i) {
      const RunRow& r = rows[i];
      os << i << ',' << (r.ok ? std::string_view("ok") : code_name(r.code)) << ',' << r.sample << ',' << r.diag.tau << ','
         << r.diag.iterations << ',' << r.diag.total_node_touches;
      if (!cfg.no_timing) os << ',' << r.diag.wall_ns;
      os << "\n";
      any_failed |= !r.ok;
    }
  }
  return any_failed ? kExitBudget : kExitOk;
}

int cmd_trace(const Config& cfg, std::ostream& os) {
  LoadedKernel k = load(cfg);
  const std::uint64_t seed = resolve_seed(cfg);
  RunRow r = one_run(*k.kernel, cfg, seed, Algorithm::Ciaftp, true);
  if (cfg.format == "json") {
    ordered_json doc;
    doc["meta"] = meta_json(cfg, k, seed);
    doc["status"] = r.ok ? std::string("ok") : std::string(code_name(r.code));
    doc["sample"] = r.sample;
    doc["tau"] = r.diag.tau;
    doc["records"] = ordered_json::array();
    for (const auto& rec : r.diag.records) {
      ordered_json j;
      j["t"] = rec.t;
      j["leaves"] = rec.leaves;
      j["depth"] = rec.depth;
      j["node_touches"] = rec.node_touches;
      j["slice_depth"] = rec.slice_depth;
      j["regeneration"] = rec.regeneration;
      doc["records"].push_back(std::move(j));
    }
    if (!cfg.no_timing) doc["wall_ns"] = r.diag.wall_ns;
    os << doc.dump(2) << "\n";
  } else {
    meta_csv(os, cfg, k, seed);
    os << "# status: " << (r.ok ? std::string_view("ok") : code_name(r.code)) << " sample: " << r.sample
       << " tau: " << r.diag.tau << "\n";
    os << "t,leaves,depth,node_touches,slice_depth,regeneration\n";
    for (const auto& rec : r.diag.records)
      os << rec.t << ',' << rec.leaves << ',' << rec.depth << ',' << rec.node_touches << ',' << rec.slice_depth << ','
         << (rec.regeneration ? 1 : 0) << "\n";
  }
  return r.ok ? kExitOk : kExitBudget;
}

Algorithm parse_algorithm(const std::string& name) {
  if (name == "ciaftp") return Algorithm::Ciaftp;
  if (name == "pw") return Algorithm::PwExtended;
  throw Error(ErrorCode::InvalidArgument, "unknown algorithm '" + name + "'");
}

int cmd_validate(const Config& cfg, std::ostream& os) {
  LoadedKernel k = load(cfg);
  const std::uint64_t seed = resolve_seed(cfg);
  ValidateOptions vo;
  vo.limits = cfg.limits;
  vo.jobs = cfg.jobs;
  vo.algorithm = parse_algorithm(cfg.algorithm);
  vo.check_invariants = cfg.check;
  const auto start = std::chrono::steady_clock::now();
  ValidationReport rep = validate(*k.kernel, cfg.length, cfg.runs, seed, vo);
  ordered_json doc;
  doc["meta"] = meta_json(cfg, k, seed);
  doc["meta"]["algorithm"] = cfg.algorithm;
  doc["tv"] = rep.tv;
  doc["tolerance"] = rep.tolerance;
  doc["n_runs"] = rep.n_runs;
  doc["n_failed"] = rep.n_failed;
  doc["passed"] = rep.passed;
  doc["mean_tau"] = rep.mean_tau;
  doc["node_touches"] = rep.total_node_touches;
  doc["cells"] = ordered_json::array();
  for (const auto& c : rep.cells) {
    ordered_json j;
    j["window"] = k.kernel->alphabet().format(c.window);
    j["expected"] = c.expected;
    j["count"] = c.count;
    doc["cells"].push_back(std::move(j));
  }
  doc["errors"] = rep.errors;
  if (!cfg.no_timing)
    doc["wall_ns"] = std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() - start).count();
  os << doc.dump(2) << "\n";
  return rep.passed ? kExitOk : kExitValidationFailed;
}

int cmd_bench(Config cfg, std::ostream& os) {
  LoadedKernel k = load(cfg);
  const auto order = k.kernel->order();
  if (!order) throw Error(ErrorCode::Unsupported, "bench compares against the extended chain and needs a finite-order kernel");
  if (!cfg.length_given) cfg.length = std::max<std::size_t>(1, *order);
  const std::uint64_t seed = resolve_seed(cfg);
  bool any_failed = false;
  struct Block {
    Algorithm alg;
    const char* name;
  };
  const Block blocks[] = {{Algorithm::Ciaftp, "ciaftp"}, {Algorithm::PwExtended, "pw_extended"}};
  ordered_json doc;
  if (cfg.format == "json") {
    doc["meta"] = meta_json(cfg, k, seed);
    doc["kernel_order"] = *order;
    doc["rows"] = ordered_json::array();
  } else {
    meta_csv(os, cfg, k, seed);
    os << "# kernel_order: " << *order << "\n";
    os << "algorithm,run_id,seed,status,sample,tau,node_touches" << (cfg.no_timing ? "" : ",wall_ns") << "\n";
  }
  for (const Block& b : blocks) {
    auto rows = run_many(cfg.runs, cfg.jobs, [&](std::uint64_t i) { return one_run(*k.kernel, cfg, seed + i, b.alg, false); });
    for (std::uint64_t i = 0; i < rows.size(); ++i) {
      const RunRow& r = rows[i];
      any_failed |= !r.ok;
      const std::string_view status = r.ok ? std::string_view("ok") : code_name(r.code);
      if (cfg.format == "json") {
        ordered_json j;
        j["algorithm"] = b.name;
        j["run_id"] = i;
        j["seed"] = seed + i;
        j["status"] = std::string(status);
        j["sample"] = r.sample;
        j["tau"] = r.diag.tau;
        j["node_touches"] = r.diag.total_node_touches;
        if (!cfg.no_timing) j["wall_ns"] = r.diag.wall_ns;
        doc["rows"].push_back(std::move(j));
      } else {
        os << b.name << ',' << i << ',' << seed + i << ',' << status << ',' << r.sample << ',' << r.diag.tau << ','
           << r.diag.total_node_touches;
        if (!cfg.no_timing) os << ',' << r.diag.wall_ns;
        os << "\n";
      }
    }
  }
  if (cfg.format == "json") os << doc.dump(2) << "\n";
  return any_failed ? kExitBudget : kExitOk;
}

std::string symbol_label(const Alphabet& a, const Symbol& g) { return a.name(g); }

int cmd_inspect_slice(const Config& cfg, const LoadedKernel& k, std::ostream& os) {
  const Kernel& kernel = *k.kernel;
  const Alphabet& names = kernel.alphabet();
  const double u = *cfg.u;
  UpdateSlice slice = build_slice(kernel, u, cfg.limits.max_depth);
  std::function<std::string(const Symbol&)> show = [&](const Symbol& g) { return symbol_label(names, g); };
  os << "# slice u=" << num(u) << " depth=" << slice.depth << " leaves=" << slice.trie.leaf_count()
     << " regeneration=" << (detect_regeneration(slice) ? 1 : 0) << "\n";
  os << (cfg.dot ? dump_dot(slice.trie, names, show) : dump_text(slice.trie, names, show));
  constexpr std::uint64_t kTableLeaves = 256;
  if (slice.trie.leaf_count() > kTableLeaves) {
    os << "# interval table omitted: " << slice.trie.leaf_count() << " leaves\n";
    return kExitOk;
  }
  os << "context,level,symbol,alpha,beta\n";
  slice.trie.for_each_leaf([&](const Context& s, const Symbol&) {
    for (const auto& iv : interval_table(kernel, s, u))
      os << names.format(s) << ',' << iv.level << ',' << names.name(iv.symbol) << ',' << num(iv.alpha) << ','
         << num(iv.beta) << "\n";
  });
  return kExitOk;
}

int cmd_inspect(const Config& cfg, std::ostream& os) {
  LoadedKernel k = load(cfg);
  os << "# kernel: " << cfg.kernel_path << " fnv1a64=" << hex64(k.hash) << " type=" << family_name(k.kernel->family())
     << "\n";
  if (cfg.u) {
    if (!(*cfg.u >= 0.0 && *cfg.u < 1.0)) throw Error(ErrorCode::InvalidArgument, "--u must lie in [0, 1)");
    return cmd_inspect_slice(cfg, k, os);
  }
  const Kernel& kernel = *k.kernel;
  const Alphabet& names = kernel.alphabet();
  if (const auto* tree = dynamic_cast<const ContextTreeKernel*>(&kernel)) {
    CsdTrie dict = shape_of(tree->tree());
    CsdTrie closure = prefix_closure(dict);
    const std::uint64_t size = dict.leaf_count();
    const std::uint64_t depth = dict.depth();
    std::function<std::string(const Distribution&)> show = [&](const Distribution& p) {
      std::string s = "(";
      for (std::size_t g = 0; g < p.size(); ++g) s += (g ? ", " : "") + num(p[g]);
      return s + ")";
    };
    os << "# dictionary: leaves=" << size << " depth=" << depth << "\n";
    os << (cfg.dot ? dump_dot(tree->tree(), names, show) : dump_text(tree->tree(), names, show));
    os << "# prefix closure: leaves=" << closure.leaf_count() << " bound |D|*d(D)=" << size * depth << "\n";
    os << (cfg.dot ? dump_dot(closure, names) : dump_text(closure, names));
  } else {
    os << "# dictionary: infinite (no finite context tree)\n";
  }
  const std::size_t cap = cfg.depth_cap;
  DepthBound bound = expected_depth_bound(kernel, cfg.length, cap);
  os << "k,min_mass\n";
  for (std::size_t j = 0; j < bound.min_masses.size(); ++j) os << j << ',' << num(bound.min_masses[j]) << "\n";
  os << "# expected depth bound (window " << cfg.length << ", products truncated at k=" << cap << "): " << num(bound.bound)
     << "\n";
  os << "# criterion sum up to k=" << cap << ": " << num(bound.criterion_sum)
     << " diverges=" << (bound.criterion_diverges ? "true" : "false") << "\n";
  return kExitOk;
}

void add_common(CLI::App* sub, Config& cfg) {
  sub->add_option("--kernel", cfg.kernel_path, "kernel spec (JSON)")->required();
  sub->add_option("--length", cfg.length, "window length L")->check(CLI::PositiveNumber)->each([&](const std::string&) {
    cfg.length_given = true;
  });
  sub->add_option("--seed", cfg.seed, "base seed (default: $CIAFTP_SEED, else OS entropy)");
  sub->add_option("--max-iter", cfg.limits.max_iter, "iteration budget per run")->check(CLI::PositiveNumber);
  sub->add_option("--max-depth", cfg.limits.max_depth, "slice depth budget")->check(CLI::PositiveNumber);
  sub->add_option("--max-nodes", cfg.limits.max_nodes, "trie node budget")->check(CLI::PositiveNumber);
  sub->add_option("--out", cfg.out_path, "write output to this file");
  sub->add_flag("--no-timing", cfg.no_timing, "omit wall-clock fields");
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Config cfg;
  CLI::App app{"Exact stationary sampler for chains with variable or infinite memory", "ciaftp"};
  app.require_subcommand(1);

  auto* sample = app.add_subcommand("sample", "draw N exact samples of the last L symbols");
  auto* trace = app.add_subcommand("trace", "per-iteration records of one run");
  auto* validate_cmd = app.add_subcommand("validate", "compare N samples with the exact stationary law");
  auto* bench = app.add_subcommand("bench", "node-touch counts of the sampler and the extended-chain baseline");
  auto* inspect = app.add_subcommand("inspect", "kernel dictionary, prefix closure and coupling masses, or one slice");
  auto* inspect_slice = app.add_subcommand("inspect-slice", "slice trie and interval table for one draw");
  for (auto* sub : {sample, trace, validate_cmd, bench, inspect, inspect_slice}) add_common(sub, cfg);
  for (auto* sub : {sample, validate_cmd, bench}) {
    sub->add_option("--runs", cfg.runs, "number of runs N")->check(CLI::PositiveNumber);
    sub->add_option("--jobs", cfg.jobs, "worker threads")->check(CLI::PositiveNumber);
  }
  for (auto* sub : {sample, trace, bench})
    sub->add_option("--format", cfg.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  for (auto* sub : {sample, trace, validate_cmd})
    sub->add_flag("--check-invariants", cfg.check, "assert the per-step invariants on every iteration");
  validate_cmd->add_option("--format", cfg.format, "json")->check(CLI::IsMember({"json"}));
  validate_cmd->add_option("--algorithm", cfg.algorithm, "ciaftp or pw")->check(CLI::IsMember({"ciaftp", "pw"}));
  inspect->add_option("--u", cfg.u, "show the slice of this draw");
  inspect_slice->add_option("--u", cfg.u, "the draw")->required();
  for (auto* sub : {inspect, inspect_slice}) {
    sub->add_option("--depth-cap", cfg.depth_cap, "largest k in the coupling-mass table");
    sub->add_flag("--dot", cfg.dot, "Graphviz output for tries");
  }

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(std::move(reversed));
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      app.exit(e, out, err);
      return kExitOk;
    }
    err << "error: Usage: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    std::ofstream file;
    std::ostream* os = &out;
    if (!cfg.out_path.empty()) {
      file.open(cfg.out_path, std::ios::binary | std::ios::trunc);
      if (!file) throw Error(ErrorCode::IoError, "cannot write '" + cfg.out_path + "'");
      os = &file;
    }
    int code = kExitOk;
    if (sample->parsed()) {
      cfg.command = "sample";
      code = cmd_sample(cfg, *os);
    } else if (trace->parsed()) {
      cfg.command = "trace";
      code = cmd_trace(cfg, *os);
    } else if (validate_cmd->parsed()) {
      cfg.command = "validate";
      code = cmd_validate(cfg, *os);
    } else if (bench->parsed()) {
      cfg.command = "bench";
      code = cmd_bench(cfg, *os);
    } else {
      cfg.command = inspect->parsed() ? "inspect" : "inspect-slice";
      code = cmd_inspect(cfg, *os);
    }
    os->flush();
    if (!*os) throw Error(ErrorCode::IoError, "failed writing output");
    return code;
  } catch (const Error& e) {
    err << "error: " << code_name(e.code()) << ": " << e.what() << "\n";
    return is_budget(e.code()) ? kExitBudget : kExitUsage;
  }
}

}  // namespace ciaftp
