#include "gradcode/sim_config.hpp"

#include <json.hpp>

#include <cmath>
#include <limits>
#include <set>

#include "gradcode/error.hpp"
#include "gradcode/scheme_io.hpp"

namespace gradcode {

namespace {

using json = nlohmann::ordered_json;

const std::set<std::string> kFields = {
    "version",        "strategy",        "n",
    "s",              "alpha",           "d",
    "p",              "holdout_fraction", "iterations",
    "optimizer",      "eta",             "c1",
    "c2",             "compute_time",    "comm_time",
    "jitter_sigma",   "straggler_mode",  "straggler_workers",
    "straggler_count", "straggler_kind", "straggler_delay",
    "straggler_alpha", "seed_all",       "seed_scheme",
    "seed_data",      "seed_latency",    "seed_straggler",
    "auc_interval",   "check_exactness"};

[[noreturn]] void parse_fail(const std::string& msg) { throw Error(Errc::ParseError, msg); }

json parse_object(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    parse_fail(std::string("malformed config JSON: ") + e.what());
  }
  if (!doc.is_object()) parse_fail("config must be a JSON object");
  return doc;
}

struct Reader {
  const json& doc;

  bool has(const char* key) const { return doc.contains(key); }

  std::size_t count(const char* key, std::size_t fallback) const {
    if (!has(key)) return fallback;
    const json& v = doc.at(key);
    if (!v.is_number_unsigned()) parse_fail(std::string("field '") + key + "' must be a non-negative integer");
    return v.get<std::size_t>();
  }
  std::uint64_t seed(const char* key) const {
    const json& v = doc.at(key);
    if (!v.is_number_unsigned()) parse_fail(std::string("field '") + key + "' must be a non-negative integer");
    return v.get<std::uint64_t>();
  }
  double real(const char* key, double fallback) const {
    if (!has(key)) return fallback;
    const json& v = doc.at(key);
    if (v.is_string() && (v == "inf" || v == "infinity")) return std::numeric_limits<double>::infinity();
    if (!v.is_number()) parse_fail(std::string("field '") + key + "' must be a number");
    return v.get<double>();
  }
  std::string text(const char* key, const std::string& fallback) const {
    if (!has(key)) return fallback;
    const json& v = doc.at(key);
    if (!v.is_string()) parse_fail(std::string("field '") + key + "' must be a string");
    return v.get<std::string>();
  }
  bool flag(const char* key, bool fallback) const {
    if (!has(key)) return fallback;
    const json& v = doc.at(key);
    if (!v.is_boolean()) parse_fail(std::string("field '") + key + "' must be true or false");
    return v.get<bool>();
  }
};

void parse_strategy(const std::string& name, StrategySpec& spec) {
  if (name == "naive") spec.kind = StrategyKind::Naive;
  else if (name == "ignore") spec.kind = StrategyKind::IgnoreS;
  else if (name == "frac" || name == "cyc") {
    spec.kind = StrategyKind::Coded;
    spec.code = name == "frac" ? CodeKind::FracRep : CodeKind::CycRep;
  } else if (name == "partial-frac" || name == "partial-cyc") {
    spec.kind = StrategyKind::PartialCoded;
    spec.code = name == "partial-frac" ? CodeKind::FracRep : CodeKind::CycRep;
  } else {
    parse_fail("field 'strategy': unknown strategy '" + name + "'");
  }
}

RunConfig config_from_object(const json& doc) {
  for (const auto& [key, _] : doc.items())
    if (!kFields.count(key)) parse_fail("unknown config field '" + key + "'");
  const Reader r{doc};
  RunConfig c;

  if (!r.has("strategy")) parse_fail("missing field 'strategy'");
  parse_strategy(r.text("strategy", ""), c.strategy);
  c.strategy.n = r.count("n", c.strategy.n);
  c.strategy.s = r.count("s", c.strategy.s);
  c.strategy.alpha = r.real("alpha", c.strategy.alpha);

  c.dataset.d = r.count("d", c.dataset.d);
  c.dataset.p = r.count("p", c.dataset.p);
  c.dataset.holdout_fraction = r.real("holdout_fraction", c.dataset.holdout_fraction);

  const std::string method = r.text("optimizer", c.strategy.kind == StrategyKind::IgnoreS ? "gd" : "nag");
  if (method == "nag") c.optimizer.method = Method::NAG;
  else if (method == "gd") c.optimizer.method = Method::DecayingGD;
  else parse_fail("field 'optimizer': expected nag or gd, got '" + method + "'");
  c.optimizer.iterations = r.count("iterations", c.optimizer.iterations);
  c.optimizer.eta = r.real("eta", c.optimizer.eta);
  c.optimizer.c1 = r.real("c1", c.optimizer.c1);
  c.optimizer.c2 = r.real("c2", c.optimizer.c2);

  c.latency.compute_time_per_partition = r.real("compute_time", c.latency.compute_time_per_partition);
  c.latency.comm_time = r.real("comm_time", c.latency.comm_time);
  c.latency.jitter_sigma = r.real("jitter_sigma", c.latency.jitter_sigma);

  const std::string mode = r.text("straggler_mode", "none");
  if (mode == "none") c.stragglers.mode = StragglerMode::None;
  else if (mode == "fixed") c.stragglers.mode = StragglerMode::FixedSet;
  else if (mode == "random") c.stragglers.mode = StragglerMode::RandomPerIteration;
  else parse_fail("field 'straggler_mode': expected none, fixed or random");
  if (r.has("straggler_workers")) {
    try {
      c.stragglers.workers = doc.at("straggler_workers").get<std::vector<std::size_t>>();
    } catch (const json::exception&) {
      parse_fail("field 'straggler_workers' must be an array of worker indices");
    }
  }
  c.stragglers.count = r.count("straggler_count", c.strategy.s);
  const std::string kind = r.text("straggler_kind", "full");
  if (kind == "full") c.stragglers.kind = StragglerKind::FullDelay;
  else if (kind == "partial") c.stragglers.kind = StragglerKind::PartialSlowdown;
  else parse_fail("field 'straggler_kind': expected full or partial");
  c.stragglers.delay = r.real("straggler_delay", c.stragglers.delay);
  c.stragglers.alpha = r.real("straggler_alpha", c.strategy.alpha);

  const char* subs[] = {"seed_scheme", "seed_data", "seed_latency", "seed_straggler"};
  bool all_subs = true;
  for (const char* k : subs) all_subs = all_subs && r.has(k);
  if (!r.has("seed_all") && !all_subs)
    throw Error(Errc::InvalidArgument,
                "seeds must be explicit: give seed_all or all of seed_scheme, seed_data, "
                "seed_latency, seed_straggler");
  if (r.has("seed_all")) c.seeds = SeedBundle::derive(r.seed("seed_all"));
  if (r.has("seed_scheme")) c.seeds.scheme = r.seed("seed_scheme");
  if (r.has("seed_data")) c.seeds.data = r.seed("seed_data");
  if (r.has("seed_latency")) c.seeds.latency = r.seed("seed_latency");
  if (r.has("seed_straggler")) c.seeds.straggler = r.seed("seed_straggler");

  c.auc_interval = r.count("auc_interval", c.auc_interval);
  c.check_exactness = r.flag("check_exactness", c.check_exactness);
  c.validate();
  return c;
}

json real_json(double v) {
  if (std::isinf(v)) return "inf";
  return v;
}

}  // namespace

std::string strategy_name(const StrategySpec& spec) {
  switch (spec.kind) {
    case StrategyKind::Naive: return "naive";
    case StrategyKind::IgnoreS: return "ignore";
    case StrategyKind::Coded: return std::string(code_kind_name(spec.code));
    case StrategyKind::PartialCoded: return "partial-" + std::string(code_kind_name(spec.code));
  }
  return "naive";
}

RunConfig run_config_from_json(std::string_view text) { return config_from_object(parse_object(text)); }

std::string run_config_to_json(const RunConfig& c) {
  json doc;
  doc["version"] = 1;
  doc["strategy"] = strategy_name(c.strategy);
  doc["n"] = c.strategy.n;
  doc["s"] = c.strategy.s;
  doc["alpha"] = c.strategy.alpha;
  doc["d"] = c.dataset.d;
  doc["p"] = c.dataset.p;
  doc["holdout_fraction"] = c.dataset.holdout_fraction;
  doc["iterations"] = c.optimizer.iterations;
  doc["optimizer"] = c.optimizer.method == Method::NAG ? "nag" : "gd";
  doc["eta"] = c.optimizer.eta;
  doc["c1"] = c.optimizer.c1;
  doc["c2"] = c.optimizer.c2;
  doc["compute_time"] = c.latency.compute_time_per_partition;
  doc["comm_time"] = c.latency.comm_time;
  doc["jitter_sigma"] = c.latency.jitter_sigma;
  const char* modes[] = {"none", "fixed", "random"};
  doc["straggler_mode"] = modes[static_cast<int>(c.stragglers.mode)];
  doc["straggler_workers"] = c.stragglers.workers;
  doc["straggler_count"] = c.stragglers.count;
  doc["straggler_kind"] = c.stragglers.kind == StragglerKind::FullDelay ? "full" : "partial";
  doc["straggler_delay"] = real_json(c.stragglers.delay);
  doc["straggler_alpha"] = c.stragglers.alpha;
  doc["seed_scheme"] = c.seeds.scheme;
  doc["seed_data"] = c.seeds.data;
  doc["seed_latency"] = c.seeds.latency;
  doc["seed_straggler"] = c.seeds.straggler;
  doc["auc_interval"] = c.auc_interval;
  doc["check_exactness"] = c.check_exactness;
  return doc.dump(2) + "\n";
}

std::vector<RunConfig> compare_bundle_from_json(std::string_view text) {
  const json doc = parse_object(text);
  for (const auto& [key, _] : doc.items())
    if (key != "base" && key != "runs") parse_fail("unknown bundle field '" + key + "'");
  json base = doc.contains("base") ? doc.at("base") : json::object();
  if (!base.is_object()) parse_fail("bundle field 'base' must be an object");
  if (!doc.contains("runs") || !doc.at("runs").is_array() || doc.at("runs").empty())
    parse_fail("bundle field 'runs' must be a non-empty array");

  std::vector<RunConfig> out;
  for (const json& run : doc.at("runs")) {
    if (!run.is_object()) parse_fail("each bundle run must be an object");
    json merged = base;
    for (const auto& [key, value] : run.items()) merged[key] = value;
    out.push_back(config_from_object(merged));
  }
  return out;
}

}  // namespace gradcode
