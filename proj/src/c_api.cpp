#include "gradcode/gradcode.h"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "gradcode/codec.hpp"
#include "gradcode/compare.hpp"
#include "gradcode/error.hpp"
#include "gradcode/learn.hpp"
#include "gradcode/partial.hpp"
#include "gradcode/scheme_io.hpp"
#include "gradcode/sim.hpp"
#include "gradcode/sim_config.hpp"

struct gc_code {
  gradcode::GradientCode code;
  gradcode::DecodeCache cache;
};

struct gc_plan {
  gradcode::TwoStagePlan plan;
  gc_code coded;
};

struct gc_run {
  gradcode::RunResult result;
};

namespace {

using namespace gradcode;

thread_local std::string last_error;

gc_status to_status(Errc code) {
  switch (code) {
    case Errc::InvalidArgument: return GC_ERR_INVALID_ARGUMENT;
    case Errc::DimensionMismatch: return GC_ERR_DIMENSION_MISMATCH;
    case Errc::NonFinite: return GC_ERR_NON_FINITE;
    case Errc::SingularSystem: return GC_ERR_SINGULAR_SYSTEM;
    case Errc::DivisibilityError: return GC_ERR_DIVISIBILITY;
    case Errc::RetryExhausted: return GC_ERR_RETRY_EXHAUSTED;
    case Errc::SpanFailure: return GC_ERR_SPAN_FAILURE;
    case Errc::BudgetExceeded: return GC_ERR_BUDGET_EXCEEDED;
    case Errc::IndexOutOfRange: return GC_ERR_INDEX_OUT_OF_RANGE;
    case Errc::ParseError: return GC_ERR_PARSE;
    case Errc::InvalidAlpha: return GC_ERR_INVALID_ALPHA;
    case Errc::DegenerateLabels: return GC_ERR_DEGENERATE_LABELS;
    case Errc::StarvedIteration: return GC_ERR_STARVED_ITERATION;
    case Errc::MismatchedConfigs: return GC_ERR_MISMATCHED_CONFIGS;
    case Errc::IoError: return GC_ERR_IO;
  }
  return GC_ERR_INTERNAL;
}

template <class Fn>
gc_status guarded(Fn&& fn) {
  try {
    last_error.clear();
    fn();
    return GC_OK;
  } catch (const Error& e) {
    last_error = std::string(errc_name(e.code())) + ": " + e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return GC_ERR_INTERNAL;
  } catch (const std::exception& e) {
    last_error = e.what();
    return GC_ERR_INTERNAL;
  }
}

void require(bool cond, const char* what) {
  if (!cond) throw Error(Errc::InvalidArgument, what);
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

CodeKind from_c(gc_code_kind kind) {
  switch (kind) {
    case GC_KIND_NAIVE: return CodeKind::Naive;
    case GC_KIND_FRAC: return CodeKind::FracRep;
    case GC_KIND_CYC: return CodeKind::CycRep;
    case GC_KIND_CUSTOM: return CodeKind::Custom;
  }
  throw Error(Errc::InvalidArgument, "unknown code kind");
}

gc_code_kind to_c(CodeKind kind) {
  switch (kind) {
    case CodeKind::Naive: return GC_KIND_NAIVE;
    case CodeKind::FracRep: return GC_KIND_FRAC;
    case CodeKind::CycRep: return GC_KIND_CYC;
    case CodeKind::Custom: return GC_KIND_CUSTOM;
  }
  return GC_KIND_CUSTOM;
}

gc_status emit_code(GradientCode code, gc_code** out) {
  *out = new gc_code{std::move(code), {}};
  return GC_OK;
}

}  // namespace

extern "C" {

const char* gc_version(void) { return "0.1.0"; }

const char* gc_status_name(gc_status status) {
  switch (status) {
    case GC_OK: return "OK";
    case GC_ERR_INVALID_ARGUMENT: return "InvalidArgument";
    case GC_ERR_DIMENSION_MISMATCH: return "DimensionMismatch";
    case GC_ERR_NON_FINITE: return "NonFinite";
    case GC_ERR_SINGULAR_SYSTEM: return "SingularSystem";
    case GC_ERR_DIVISIBILITY: return "DivisibilityError";
    case GC_ERR_RETRY_EXHAUSTED: return "RetryExhausted";
    case GC_ERR_SPAN_FAILURE: return "SpanFailure";
    case GC_ERR_BUDGET_EXCEEDED: return "BudgetExceeded";
    case GC_ERR_INDEX_OUT_OF_RANGE: return "IndexOutOfRange";
    case GC_ERR_PARSE: return "ParseError";
    case GC_ERR_INVALID_ALPHA: return "InvalidAlpha";
    case GC_ERR_DEGENERATE_LABELS: return "DegenerateLabels";
    case GC_ERR_STARVED_ITERATION: return "StarvedIteration";
    case GC_ERR_MISMATCHED_CONFIGS: return "MismatchedConfigs";
    case GC_ERR_IO: return "IoError";
    case GC_ERR_INTERNAL: return "Internal";
  }
  return "Unknown";
}

const char* gc_last_error(void) { return last_error.c_str(); }

void gc_string_free(char* str) { std::free(str); }

gc_status gc_code_build_naive(size_t n, gc_code** out) {
  return guarded([&] {
    require(out, "out is null");
    emit_code(build_naive(n), out);
  });
}

gc_status gc_code_build_frac(size_t n, size_t s, gc_code** out) {
  return guarded([&] {
    require(out, "out is null");
    emit_code(build_frac(n, s), out);
  });
}

gc_status gc_code_build_cyc(size_t n, size_t s, uint64_t seed, gc_code** out) {
  return guarded([&] {
    require(out, "out is null");
    emit_code(build_cyc(n, s, seed), out);
  });
}

gc_status gc_code_from_matrix(gc_code_kind kind, size_t n, size_t k, size_t s, const double* b,
                              gc_code** out) {
  return guarded([&] {
    require(out && b, "null argument");
    Mat m(n, k, std::vector<double>(b, b + n * k));
    emit_code(GradientCode::from_matrix(from_c(kind), s, std::move(m)), out);
  });
}

gc_status gc_code_import(const char* path, gc_code** out) {
  return guarded([&] {
    require(out && path, "null argument");
    emit_code(import_code(path), out);
  });
}

gc_status gc_code_import_text(const char* text, gc_code** out) {
  return guarded([&] {
    require(out && text, "null argument");
    emit_code(import_code_text(text), out);
  });
}

gc_status gc_code_export(const gc_code* code, const char* path) {
  return guarded([&] {
    require(code && path, "null argument");
    export_code(code->code, path);
  });
}

gc_status gc_code_export_text(const gc_code* code, char** out) {
  return guarded([&] {
    require(code && out, "null argument");
    *out = dup_string(export_code_text(code->code));
  });
}

void gc_code_free(gc_code* code) { delete code; }

size_t gc_code_workers(const gc_code* code) { return code ? code->code.workers() : 0; }
size_t gc_code_partitions(const gc_code* code) { return code ? code->code.partitions() : 0; }
size_t gc_code_stragglers(const gc_code* code) { return code ? code->code.stragglers() : 0; }
gc_code_kind gc_code_get_kind(const gc_code* code) {
  return code ? to_c(code->code.kind()) : GC_KIND_CUSTOM;
}

int gc_code_h_seed(const gc_code* code, uint64_t* seed) {
  if (!code || !code->code.h_seed()) return 0;
  if (seed) *seed = *code->code.h_seed();
  return 1;
}

gc_status gc_code_matrix(const gc_code* code, double* out, size_t len) {
  return guarded([&] {
    require(code && out, "null argument");
    const auto& entries = code->code.encoding().entries();
    if (len < entries.size()) throw Error(Errc::DimensionMismatch, "output buffer too small");
    std::copy(entries.begin(), entries.end(), out);
  });
}

gc_status gc_code_assignment(const gc_code* code, size_t worker, size_t* out, size_t cap,
                             size_t* count) {
  return guarded([&] {
    require(code && count, "null argument");
    const auto parts = code->code.assignment(worker);
    *count = parts.size();
    for (size_t i = 0; i < parts.size() && i < cap && out; ++i) out[i] = parts[i];
  });
}

gc_status gc_code_decode(gc_code* code, const size_t* survivors, size_t count, double tol,
                         double* coeffs, double* residual) {
  return guarded([&] {
    require(code && survivors && coeffs, "null argument");
    const auto set = SurvivorSet::of(std::vector<size_t>(survivors, survivors + count),
                                     code->code.workers());
    const DecodeRow row = decode_row(code->code, set, code->cache, tol > 0 ? tol : kDefaultTol);
    std::copy(row.coeffs.begin(), row.coeffs.end(), coeffs);
    if (residual) *residual = row.residual;
  });
}

gc_status gc_code_verify_bspan(const gc_code* code, double tol, uint64_t budget,
                               gc_bspan_report* report, size_t* first_failure,
                               size_t first_failure_cap) {
  return guarded([&] {
    require(code && report, "null argument");
    const BspanReport r = verify_bspan(code->code, tol > 0 ? tol : kDefaultTol,
                                       budget ? budget : kDefaultEnumerationBudget);
    report->ok = r.ok ? 1 : 0;
    report->checked = r.checked;
    report->failures = r.failures.size();
    if (!r.failures.empty() && first_failure) {
      const auto& idx = r.failures.front().indices();
      for (size_t i = 0; i < idx.size() && i < first_failure_cap; ++i) first_failure[i] = idx[i];
    }
  });
}

gc_status gc_code_density(const gc_code* code, gc_density_report* report) {
  return guarded([&] {
    require(code && report, "null argument");
    const DensityReport r = density_check(code->code);
    report->min_row_density = r.min_row_density;
    report->max_row_density = *std::max_element(r.row_density.begin(), r.row_density.end());
    report->bound = r.bound;
    report->meets_bound_with_equality = r.meets_bound_with_equality ? 1 : 0;
  });
}

gc_status gc_code_check_mds(const gc_code* code, double tol, gc_mds_report* report) {
  return guarded([&] {
    require(code && report, "null argument");
    *report = gc_mds_report{0, 0, 0, 0};
    const GradientCode& c = code->code;
    if (c.kind() != CodeKind::CycRep || !c.h_seed()) return;
    const Mat h = cyclic_parity_matrix(c.workers(), c.stragglers(), *c.h_seed());
    const MdsReport r = check_mds(h, tol > 0 ? tol : kDefaultTol);
    report->available = 1;
    report->ok = r.ok ? 1 : 0;
    report->checked = r.checked;
    report->failures = r.failures.size();
  });
}

gc_status gc_load_fraction(size_t n, size_t s, double alpha, double* out) {
  return guarded([&] {
    require(out, "out is null");
    *out = load_fraction(n, s, alpha);
  });
}

gc_status gc_plan_build(size_t n, size_t s, double alpha, gc_code_kind kind, uint64_t seed,
                        gc_plan** out) {
  return guarded([&] {
    require(out, "out is null");
    TwoStagePlan plan = plan_partial(n, s, alpha, from_c(kind), seed);
    GradientCode coded = plan.coded;
    *out = new gc_plan{std::move(plan), gc_code{std::move(coded), {}}};
  });
}

gc_status gc_plan_import_text(const char* text, gc_plan** out) {
  return guarded([&] {
    require(out && text, "null argument");
    TwoStagePlan plan = import_plan_text(text);
    GradientCode coded = plan.coded;
    *out = new gc_plan{std::move(plan), gc_code{std::move(coded), {}}};
  });
}

gc_status gc_plan_export(const gc_plan* plan, const char* path) {
  return guarded([&] {
    require(plan && path, "null argument");
    write_text_file(path, export_plan_text(plan->plan));
  });
}

gc_status gc_plan_export_text(const gc_plan* plan, char** out) {
  return guarded([&] {
    require(plan && out, "null argument");
    *out = dup_string(export_plan_text(plan->plan));
  });
}

void gc_plan_free(gc_plan* plan) { delete plan; }

gc_status gc_plan_get_info(const gc_plan* plan, gc_plan_info* info) {
  return guarded([&] {
    require(plan && info, "null argument");
    const TwoStagePlan& p = plan->plan;
    *info = gc_plan_info{p.n,
                         p.s,
                         p.alpha,
                         p.naive_per_worker,
                         p.naive_partitions_total,
                         p.coded_partitions_total,
                         p.worker_fraction(),
                         straggler_naive_time(p),
                         non_straggler_total_time(p)};
  });
}

const gc_code* gc_plan_code(const gc_plan* plan) { return plan ? &plan->coded : nullptr; }

gc_status gc_dataset_export_csv(size_t d, size_t p, uint64_t seed, const char* path) {
  return guarded([&] {
    require(path, "path is null");
    Rng rng(seed);
    const SyntheticData synth = gen_synthetic(rng, d, p);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::IoError, std::string("cannot open '") + path + "' for writing");
    out << "y";
    for (size_t c = 0; c < p; ++c) out << ",x" << c;
    out << '\n';
    for (size_t i = 0; i < d; ++i) {
      out << static_cast<int>(synth.data.y()[i]);
      for (double v : synth.data.x().row(i)) out << ',' << format_real(v);
      out << '\n';
    }
    if (!out) throw Error(Errc::IoError, std::string("write to '") + path + "' failed");
  });
}

gc_status gc_config_validate(const char* config_json) {
  return guarded([&] {
    require(config_json, "config is null");
    (void)run_config_from_json(config_json);
  });
}

gc_status gc_config_normalize(const char* config_json, char** out) {
  return guarded([&] {
    require(config_json && out, "null argument");
    *out = dup_string(run_config_to_json(run_config_from_json(config_json)));
  });
}

gc_status gc_bundle_members(const char* bundle_json, char*** configs, size_t* count) {
  return guarded([&] {
    require(bundle_json && configs && count, "null argument");
    const auto members = compare_bundle_from_json(bundle_json);
    char** arr = static_cast<char**>(std::calloc(members.size(), sizeof(char*)));
    if (!arr) throw std::bad_alloc();
    try {
      for (size_t i = 0; i < members.size(); ++i) arr[i] = dup_string(run_config_to_json(members[i]));
    } catch (...) {
      gc_string_array_free(arr, members.size());
      throw;
    }
    *configs = arr;
    *count = members.size();
  });
}

void gc_string_array_free(char** strs, size_t count) {
  if (!strs) return;
  for (size_t i = 0; i < count; ++i) std::free(strs[i]);
  std::free(strs);
}

gc_status gc_run_simulation(const char* config_json, gc_run** out) {
  return guarded([&] {
    require(config_json && out, "null argument");
    const RunConfig config = run_config_from_json(config_json);
    *out = new gc_run{run_training(config)};
  });
}

void gc_run_free(gc_run* run) { delete run; }

gc_status gc_run_get_summary(const gc_run* run, gc_run_summary* out) {
  return guarded([&] {
    require(run && out, "null argument");
    const RunResult& r = run->result;
    out->iterations = r.traces.size();
    out->total_time = r.total_time();
    out->final_loss = r.traces.empty() ? std::numeric_limits<double>::quiet_NaN() : r.traces.back().loss;
    out->final_auc = r.traces.empty() || !r.traces.back().auc
                         ? std::numeric_limits<double>::quiet_NaN()
                         : *r.traces.back().auc;
    out->replication_overhead = r.replication_overhead;
  });
}

gc_status gc_run_label(const gc_run* run, char** out) {
  return guarded([&] {
    require(run && out, "null argument");
    *out = dup_string(run->result.label);
  });
}

gc_status gc_run_csv(const gc_run* run, char** out) {
  return guarded([&] {
    require(run && out, "null argument");
    *out = dup_string(run_csv(run->result));
  });
}

gc_status gc_run_model(const gc_run* run, double* out, size_t cap, size_t* count) {
  return guarded([&] {
    require(run && count, "null argument");
    const Vec& m = run->result.final_model;
    *count = m.size();
    for (size_t i = 0; i < m.size() && i < cap && out; ++i) out[i] = m[i];
  });
}

gc_status gc_compare(const gc_run* const* runs, size_t count, double loss_threshold,
                     char** summary, char** iterations, char** timeline) {
  return guarded([&] {
    require(runs && count > 0, "no runs to compare");
    std::vector<RunResult> copies;
    copies.reserve(count);
    for (size_t i = 0; i < count; ++i) {
      require(runs[i], "null run handle");
      copies.push_back(runs[i]->result);
    }
    const Comparison cmp = compare_runs(
        copies, loss_threshold > 0 ? std::optional<double>(loss_threshold) : std::nullopt);
    std::unique_ptr<char, decltype(&std::free)> a(summary ? dup_string(summary_csv(cmp)) : nullptr, std::free);
    std::unique_ptr<char, decltype(&std::free)> b(iterations ? dup_string(iteration_csv(cmp)) : nullptr, std::free);
    std::unique_ptr<char, decltype(&std::free)> c(timeline ? dup_string(timeline_csv(cmp)) : nullptr, std::free);
    if (summary) *summary = a.release();
    if (iterations) *iterations = b.release();
    if (timeline) *timeline = c.release();
  });
}

}  // extern "C"
