// gradcode command-line tool. Talks to the library only through gradcode.h.

#include <CLI11.hpp>
#include <json.hpp>

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <iostream>
#include <memory>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "gradcode/gradcode.h"

namespace {

using json = nlohmann::ordered_json;

enum Exit { kOk = 0, kUsage = 2, kValidation = 3, kNumerical = 4, kIo = 5 };

struct Failure {
  int code;
  std::string message;
};

int exit_for(gc_status st) {
  switch (st) {
    case GC_OK: return kOk;
    case GC_ERR_NON_FINITE:
    case GC_ERR_SINGULAR_SYSTEM:
    case GC_ERR_RETRY_EXHAUSTED:
    case GC_ERR_SPAN_FAILURE:
    case GC_ERR_DEGENERATE_LABELS:
    case GC_ERR_STARVED_ITERATION:
      return kNumerical;
    case GC_ERR_IO: return kIo;
    case GC_ERR_INTERNAL: return 1;
    default: return kValidation;
  }
}

void check(gc_status st) {
  if (st != GC_OK) throw Failure{exit_for(st), gc_last_error()};
}

// Owns a malloc'd string handed out by the library.
std::string take(char* s) {
  std::string out = s ? s : "";
  gc_string_free(s);
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Failure{kIo, "cannot open '" + path + "'"};
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Failure{kIo, "cannot open '" + path.string() + "' for writing"};
  out << text;
  if (!out) throw Failure{kIo, "write to '" + path.string() + "' failed"};
}

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Failure{kIo, "cannot create directory '" + dir.string() + "': " + ec.message()};
}

json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw Failure{kValidation, what + ": " + e.what()};
  }
}

gc_code_kind kind_from(const std::string& s) {
  if (s == "naive") return GC_KIND_NAIVE;
  if (s == "frac") return GC_KIND_FRAC;
  if (s == "cyc") return GC_KIND_CYC;
  throw Failure{kUsage, "unknown kind '" + s + "' (expected naive, frac or cyc)"};
}

const char* kind_name(gc_code_kind k) {
  switch (k) {
    case GC_KIND_NAIVE: return "naive";
    case GC_KIND_FRAC: return "frac";
    case GC_KIND_CYC: return "cyc";
    case GC_KIND_CUSTOM: return "custom";
  }
  return "?";
}

struct Code {
  gc_code* h = nullptr;
  Code() = default;
  Code(const Code&) = delete;
  Code& operator=(const Code&) = delete;
  ~Code() { gc_code_free(h); }
};

std::string join(const std::vector<size_t>& v, const char* sep) {
  std::string out;
  for (size_t i = 0; i < v.size(); ++i) out += (i ? sep : "") + std::to_string(v[i]);
  return out;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

// ---- scheme ------------------------------------------------------------------

struct SchemeBuildArgs {
  std::string kind;
  size_t n = 0;
  size_t s = 0;
  std::optional<uint64_t> seed;
  std::string out;
};

int scheme_build(const SchemeBuildArgs& a) {
  Code code;
  const gc_code_kind kind = kind_from(a.kind);
  if (kind == GC_KIND_NAIVE) {
    if (a.s != 0) throw Failure{kValidation, "naive schemes tolerate no stragglers; use --s 0"};
    check(gc_code_build_naive(a.n, &code.h));
  } else if (kind == GC_KIND_FRAC) {
    check(gc_code_build_frac(a.n, a.s, &code.h));
  } else {
    if (!a.seed) throw Failure{kUsage, "cyc schemes draw a random H; pass --seed"};
    check(gc_code_build_cyc(a.n, a.s, *a.seed, &code.h));
  }
  check(gc_code_export(code.h, a.out.c_str()));
  gc_density_report density{};
  check(gc_code_density(code.h, &density));
  std::cout << "wrote " << a.out << ": " << kind_name(kind) << " n=" << a.n << " s=" << a.s
            << " row density " << density.min_row_density << " (bound " << density.bound << ")\n";
  return kOk;
}

struct SchemeVerifyArgs {
  std::string in;
  double tol = 1e-8;
  uint64_t budget = 1000000;
};

int scheme_verify(const SchemeVerifyArgs& a) {
  Code code;
  check(gc_code_import(a.in.c_str(), &code.h));
  const size_t n = gc_code_workers(code.h);
  const size_t s = gc_code_stragglers(code.h);
  bool ok = true;

  gc_bspan_report bspan{};
  std::vector<size_t> first(n - s);
  check(gc_code_verify_bspan(code.h, a.tol, a.budget, &bspan, first.data(), first.size()));
  if (bspan.ok) {
    std::cout << "bspan: ok, robust to " << s << " straggler" << (s == 1 ? "" : "s") << " ("
              << bspan.checked << " survivor sets checked)\n";
  } else {
    ok = false;
    std::cout << "bspan: FAILED on " << bspan.failures << " of " << bspan.checked
              << " survivor sets; first failing set {" << join(first, ",") << "}\n";
  }

  gc_density_report density{};
  check(gc_code_density(code.h, &density));
  std::cout << "density: rows " << density.min_row_density << ".." << density.max_row_density
            << ", lower bound " << density.bound
            << (density.meets_bound_with_equality ? ", meets bound with equality\n" : "\n");

  gc_mds_report mds{};
  check(gc_code_check_mds(code.h, a.tol, &mds));
  if (!mds.available) {
    std::cout << "mds: not available (scheme carries no H seed)\n";
  } else if (mds.ok) {
    std::cout << "mds: ok (" << mds.checked << " column subsets of H have full rank)\n";
  } else {
    ok = false;
    std::cout << "mds: FAILED on " << mds.failures << " of " << mds.checked << " column subsets\n";
  }
  return ok ? kOk : kNumerical;
}

int scheme_inspect(const std::string& in) {
  Code code;
  check(gc_code_import(in.c_str(), &code.h));
  const size_t n = gc_code_workers(code.h);
  const size_t k = gc_code_partitions(code.h);
  std::cout << "kind " << kind_name(gc_code_get_kind(code.h)) << "\nworkers " << n << "\npartitions "
            << k << "\nstragglers " << gc_code_stragglers(code.h) << '\n';
  uint64_t seed = 0;
  if (gc_code_h_seed(code.h, &seed)) std::cout << "h_seed " << seed << '\n';
  std::vector<double> b(n * k);
  check(gc_code_matrix(code.h, b.data(), b.size()));
  for (size_t w = 0; w < n; ++w) {
    size_t count = 0;
    std::vector<size_t> parts(k);
    check(gc_code_assignment(code.h, w, parts.data(), parts.size(), &count));
    parts.resize(count);
    std::cout << "worker " << w << ": partitions {" << join(parts, ",") << "} coefficients [";
    for (size_t i = 0; i < count; ++i) std::cout << (i ? ", " : "") << fmt(b[w * k + parts[i]]);
    std::cout << "]\n";
  }
  return kOk;
}

// ---- plan --------------------------------------------------------------------

struct PlanArgs {
  size_t n = 0;
  size_t s = 0;
  double alpha = 0;
  std::string kind = "cyc";
  std::optional<uint64_t> seed;
  std::optional<std::string> out;
};

int plan_cmd(const PlanArgs& a) {
  const gc_code_kind kind = kind_from(a.kind);
  if (kind == GC_KIND_CYC && !a.seed) throw Failure{kUsage, "cyc plans draw a random H; pass --seed"};
  gc_plan* plan = nullptr;
  check(gc_plan_build(a.n, a.s, a.alpha, kind, a.seed.value_or(0), &plan));
  std::unique_ptr<gc_plan, decltype(&gc_plan_free)> guard(plan, gc_plan_free);
  gc_plan_info info{};
  check(gc_plan_get_info(plan, &info));
  const size_t total = info.naive_partitions_total + info.coded_partitions_total;
  const size_t per_worker = info.naive_per_worker + info.s + 1;
  const size_t g = std::gcd(per_worker, total);
  double formula = 0;
  check(gc_load_fraction(a.n, a.s, a.alpha, &formula));
  std::cout << "naive_per_worker " << info.naive_per_worker << "\nnaive_partitions "
            << info.naive_partitions_total << "\ncoded_partitions " << info.coded_partitions_total
            << "\ntotal_partitions " << total << "\nworker_fraction " << per_worker / g << '/'
            << total / g << " (" << fmt(info.worker_fraction) << ")\nload_fraction_formula "
            << fmt(formula) << "\nstraggler_naive_time " << fmt(info.straggler_naive_time)
            << "\nnon_straggler_total_time " << fmt(info.non_straggler_total_time) << '\n';
  if (a.out) {
    check(gc_plan_export(plan, a.out->c_str()));
    std::cout << "wrote " << *a.out << '\n';
  }
  return kOk;
}

// ---- dataset -----------------------------------------------------------------

struct DatasetArgs {
  size_t d = 10000;
  size_t p = 100;
  std::optional<uint64_t> seed;
  std::string out;
};

int dataset_cmd(const DatasetArgs& a) {
  if (!a.seed) throw Failure{kValidation, "datasets must be seeded explicitly; pass --seed"};
  check(gc_dataset_export_csv(a.d, a.p, *a.seed, a.out.c_str()));
  std::cout << "wrote " << a.out << ": " << a.d << " rows, " << a.p << " features\n";
  return kOk;
}

// ---- simulate / compare --------------------------------------------------------

// Command-line flags that override run config fields.
class Overrides {
 public:
  void add(CLI::App* app) {
    text(app, "--strategy", "strategy", "naive|ignore|frac|cyc|partial-frac|partial-cyc");
    count(app, "--n", "n", "workers");
    count(app, "--s", "s", "stragglers tolerated");
    real(app, "--alpha", "alpha", "partial-straggler slowdown bound");
    count(app, "--d", "d", "dataset rows");
    count(app, "--p", "p", "features");
    count(app, "--iterations", "iterations", "optimizer steps");
    text(app, "--optimizer", "optimizer", "nag|gd");
    real(app, "--eta", "eta", "NAG step size");
    real(app, "--c1", "c1", "decaying step numerator");
    real(app, "--c2", "c2", "decaying step offset");
    real(app, "--compute-time", "compute_time", "seconds per d/n rows");
    real(app, "--comm-time", "comm_time", "seconds per message");
    real(app, "--jitter-sigma", "jitter_sigma", "lognormal compute jitter");
    text(app, "--straggler-mode", "straggler_mode", "none|fixed|random");
    count(app, "--straggler-count", "straggler_count", "stragglers per iteration (random mode)");
    text(app, "--straggler-kind", "straggler_kind", "full|partial");
    delay(app, "--straggler-delay", "straggler_delay", "extra seconds, or inf");
    real(app, "--straggler-alpha", "straggler_alpha", "slowdown for partial stragglers");
    seed(app, "--seed-all", "seed_all", "derive all four seeds from one base");
    seed(app, "--seed-scheme", "seed_scheme", "");
    seed(app, "--seed-data", "seed_data", "");
    seed(app, "--seed-latency", "seed_latency", "");
    seed(app, "--seed-straggler", "seed_straggler", "");
    count(app, "--auc-interval", "auc_interval", "iterations between holdout AUC evaluations");
    app->add_option("--straggler-workers", workers_, "fixed straggler set")->delimiter(',');
    app->add_flag("--check-exactness", exact_, "compare decoded gradients with the plain sum");
  }

  void apply(json& doc) const {
    // A base seed on the command line replaces any sub-seeds from a file.
    if (given("seed_all"))
      for (const char* k : {"seed_scheme", "seed_data", "seed_latency", "seed_straggler"}) doc.erase(k);
    for (const auto& fn : setters_) fn(doc);
    if (!workers_.empty()) doc["straggler_workers"] = workers_;
    if (exact_) doc["check_exactness"] = true;
  }

 private:
  template <class T>
  void opt(CLI::App* app, const char* flag, const char* key, const char* help) {
    auto value = std::make_shared<std::optional<T>>();
    app->add_option(flag, *value, help);
    setters_.push_back([value, key, this](json& doc) {
      if (!*value) return;
      doc[key] = **value;
    });
    probes_.emplace_back(key, [value] { return value->has_value(); });
  }
  // Accepts a number or "inf".
  void delay(CLI::App* app, const char* flag, const char* key, const char* help) {
    auto value = std::make_shared<std::optional<std::string>>();
    app->add_option(flag, *value, help)->check([](const std::string& v) -> std::string {
      if (v == "inf") return {};
      try {
        size_t used = 0;
        std::stod(v, &used);
        if (used == v.size()) return {};
      } catch (const std::exception&) {
      }
      return "expected a number or inf, got '" + v + "'";
    });
    setters_.push_back([value, key](json& doc) {
      if (!*value) return;
      if (**value == "inf") doc[key] = "inf";
      else doc[key] = std::stod(**value);
    });
    probes_.emplace_back(key, [value] { return value->has_value(); });
  }
  void text(CLI::App* app, const char* f, const char* k, const char* h) { opt<std::string>(app, f, k, h); }
  void count(CLI::App* app, const char* f, const char* k, const char* h) { opt<size_t>(app, f, k, h); }
  void real(CLI::App* app, const char* f, const char* k, const char* h) { opt<double>(app, f, k, h); }
  void seed(CLI::App* app, const char* f, const char* k, const char* h) { opt<uint64_t>(app, f, k, h); }

  bool given(const std::string& key) const {
    for (const auto& [k, probe] : probes_)
      if (k == key) return probe();
    return false;
  }

  std::vector<std::function<void(json&)>> setters_;
  std::vector<std::pair<std::string, std::function<bool()>>> probes_;
  std::vector<size_t> workers_;
  bool exact_ = false;
};

struct Run {
  gc_run* h = nullptr;
  Run() = default;
  Run(Run&& o) noexcept : h(o.h) { o.h = nullptr; }
  Run(const Run&) = delete;
  ~Run() { gc_run_free(h); }
};

std::string normalize(const json& doc) {
  char* out = nullptr;
  check(gc_config_normalize(doc.dump().c_str(), &out));
  return take(out);
}

gc_run_summary summary_of(const Run& run) {
  gc_run_summary s{};
  check(gc_run_get_summary(run.h, &s));
  return s;
}

struct SimulateArgs {
  std::optional<std::string> config;
  std::string out_dir = "out";
};

int simulate_cmd(const SimulateArgs& a, const Overrides& ov) {
  json doc = a.config ? parse_json(read_file(*a.config), "config '" + *a.config + "'") : json::object();
  if (!doc.is_object()) throw Failure{kValidation, "config must be a JSON object"};
  ov.apply(doc);
  const std::string effective = normalize(doc);

  const std::filesystem::path dir(a.out_dir);
  ensure_dir(dir);
  write_file(dir / "effective_config.json", effective);

  Run run;
  check(gc_run_simulation(effective.c_str(), &run.h));
  char* csv = nullptr;
  check(gc_run_csv(run.h, &csv));
  write_file(dir / "run.csv", take(csv));
  char* label = nullptr;
  check(gc_run_label(run.h, &label));
  const gc_run_summary s = summary_of(run);
  std::cout << "strategy " << take(label) << " iterations " << s.iterations << " total_sim_time_s "
            << fmt(s.total_time) << " final_loss " << fmt(s.final_loss) << " final_auc "
            << (std::isnan(s.final_auc) ? std::string("n/a") : fmt(s.final_auc)) << '\n';
  return kOk;
}

struct CompareArgs {
  std::optional<std::string> config;
  std::vector<std::string> strategies;
  std::optional<double> threshold;
  std::string out_dir = "out";
};

int compare_cmd(const CompareArgs& a, const Overrides& ov) {
  if (a.config && !a.strategies.empty())
    throw Failure{kUsage, "give either --config or --strategies, not both"};
  if (!a.config && a.strategies.empty()) throw Failure{kUsage, "give --config or --strategies"};

  json bundle;
  if (a.config) {
    json doc = parse_json(read_file(*a.config), "config '" + *a.config + "'");
    if (!doc.is_object()) throw Failure{kValidation, "config must be a JSON object"};
    bundle = doc.contains("runs") ? doc : json{{"runs", json::array({doc})}};
  } else {
    bundle["runs"] = json::array();
    for (const auto& name : a.strategies) bundle["runs"].push_back({{"strategy", name}});
  }
  if (!bundle.contains("base")) bundle["base"] = json::object();
  // Flags override the shared base and every member.
  ov.apply(bundle["base"]);
  if (bundle["runs"].is_array())
    for (json& run : bundle["runs"])
      if (run.is_object()) ov.apply(run);

  char** members = nullptr;
  size_t count = 0;
  check(gc_bundle_members(bundle.dump().c_str(), &members, &count));
  std::vector<std::string> configs(members, members + count);
  gc_string_array_free(members, count);

  const std::filesystem::path dir(a.out_dir);
  ensure_dir(dir);
  json effective = json::array();
  for (const auto& c : configs) effective.push_back(json::parse(c));
  write_file(dir / "effective_config.json", effective.dump(2) + "\n");

  // Members are independent simulations; run them side by side.
  std::vector<std::future<std::pair<gc_status, std::pair<gc_run*, std::string>>>> jobs;
  for (const auto& c : configs)
    jobs.push_back(std::async(std::launch::async, [&c] {
      gc_run* h = nullptr;
      const gc_status st = gc_run_simulation(c.c_str(), &h);
      return std::make_pair(st, std::make_pair(h, std::string(gc_last_error())));
    }));
  std::vector<Run> runs(configs.size());
  std::optional<Failure> first_failure;
  for (size_t i = 0; i < jobs.size(); ++i) {
    auto [st, res] = jobs[i].get();
    runs[i].h = res.first;
    if (st != GC_OK && !first_failure)
      first_failure = Failure{exit_for(st), "run " + std::to_string(i + 1) + ": " + res.second};
  }
  if (first_failure) throw *first_failure;

  std::vector<const gc_run*> handles;
  for (const Run& r : runs) handles.push_back(r.h);
  char *summary = nullptr, *iterations = nullptr, *timeline = nullptr;
  check(gc_compare(handles.data(), handles.size(), a.threshold.value_or(0.0), &summary, &iterations,
                   &timeline));
  write_file(dir / "summary.csv", take(summary));
  write_file(dir / "iterations.csv", take(iterations));
  write_file(dir / "timeline.csv", take(timeline));
  for (size_t i = 0; i < runs.size(); ++i) {
    char* csv = nullptr;
    check(gc_run_csv(runs[i].h, &csv));
    write_file(dir / ("run_" + std::to_string(i + 1) + ".csv"), take(csv));
  }

  for (size_t i = 0; i < runs.size(); ++i) {
    char* label = nullptr;
    check(gc_run_label(runs[i].h, &label));
    const gc_run_summary s = summary_of(runs[i]);
    const json cfg = json::parse(configs[i]);
    const double n = cfg.at("n").get<double>();
    std::cout << take(label) << ": iterations " << s.iterations << " total_sim_time_s "
              << fmt(s.total_time) << " time_per_iteration_s " << fmt(s.total_time / s.iterations)
              << " final_loss " << fmt(s.final_loss) << " final_auc "
              << (std::isnan(s.final_auc) ? std::string("n/a") : fmt(s.final_auc))
              << " worker_fraction " << fmt((1.0 + s.replication_overhead) / n) << '\n';
  }
  std::cout << "wrote " << (dir / "summary.csv").string() << ", iterations.csv, timeline.csv\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gradient coding schemes and straggler simulation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(gc_version()));

  auto* scheme = app.add_subcommand("scheme", "Build, verify or inspect encoding schemes");
  scheme->require_subcommand(1);

  SchemeBuildArgs build_args;
  auto* build = scheme->add_subcommand("build", "Construct a scheme and write it to a file");
  build->add_option("--kind", build_args.kind, "naive|frac|cyc")->required();
  build->add_option("--n", build_args.n, "workers")->required();
  build->add_option("--s", build_args.s, "stragglers tolerated");
  build->add_option("--seed", build_args.seed, "H seed (cyc)");
  build->add_option("--out", build_args.out, "output scheme file")->default_val("scheme.json");

  SchemeVerifyArgs verify_args;
  auto* verify = scheme->add_subcommand("verify", "Check B-Span, density and the H rank property");
  verify->add_option("--in", verify_args.in, "scheme file")->required();
  verify->add_option("--tol", verify_args.tol, "decode residual tolerance")->default_val(1e-8);
  verify->add_option("--budget", verify_args.budget, "max survivor sets to enumerate")->default_val(1000000);

  std::string inspect_in;
  auto* inspect = scheme->add_subcommand("inspect", "Print a scheme's assignment and coefficients");
  inspect->add_option("--in", inspect_in, "scheme file")->required();

  PlanArgs plan_args;
  auto* plan = app.add_subcommand("plan", "Two-stage plan for partial stragglers");
  plan->add_option("--n", plan_args.n, "workers")->required();
  plan->add_option("--s", plan_args.s, "stragglers")->required();
  plan->add_option("--alpha", plan_args.alpha, "slowdown bound, > 1")->required();
  plan->add_option("--kind", plan_args.kind, "frac|cyc")->default_val("cyc");
  plan->add_option("--seed", plan_args.seed, "H seed (cyc)");
  plan->add_option("--out", plan_args.out, "write the plan to this file");

  DatasetArgs dataset_args;
  auto* dataset = app.add_subcommand("dataset", "Write the synthetic logistic dataset as CSV");
  dataset->add_option("--d", dataset_args.d, "rows")->default_val(10000);
  dataset->add_option("--p", dataset_args.p, "features")->default_val(100);
  dataset->add_option("--seed", dataset_args.seed, "data seed");
  dataset->add_option("--out", dataset_args.out, "output CSV")->default_val("dataset.csv");

  SimulateArgs sim_args;
  Overrides sim_overrides;
  auto* simulate = app.add_subcommand("simulate", "Run one simulated training job");
  simulate->add_option("--config", sim_args.config, "run config (JSON)");
  simulate->add_option("--out-dir", sim_args.out_dir, "output directory")->default_val("out");
  sim_overrides.add(simulate);

  CompareArgs cmp_args;
  Overrides cmp_overrides;
  auto* compare = app.add_subcommand("compare", "Run several strategies on one dataset and compare");
  compare->add_option("--config", cmp_args.config, "bundle {base, runs} or a single run config");
  compare->add_option("--strategies", cmp_args.strategies, "comma-separated strategies")->delimiter(',');
  compare->add_option("--loss-threshold", cmp_args.threshold, "loss level for time-to-threshold");
  compare->add_option("--out-dir", cmp_args.out_dir, "output directory")->default_val("out");
  cmp_overrides.add(compare);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*build) return scheme_build(build_args);
    if (*verify) return scheme_verify(verify_args);
    if (*inspect) return scheme_inspect(inspect_in);
    if (*plan) return plan_cmd(plan_args);
    if (*dataset) return dataset_cmd(dataset_args);
    if (*simulate) return simulate_cmd(sim_args, sim_overrides);
    if (*compare) return compare_cmd(cmp_args, cmp_overrides);
  } catch (const Failure& f) {
    std::cerr << "error: " << f.message << '\n';
    return f.code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return kUsage;
}
