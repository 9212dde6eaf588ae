#include "gradcode/compare.hpp"

#include <algorithm>
#include <limits>
#include <sstream>

#include "gradcode/error.hpp"
#include "gradcode/scheme_io.hpp"

namespace gradcode {

namespace {

void require_shared_data(std::span<const RunResult> runs) {
  const RunConfig& first = runs.front().config;
  for (const RunResult& r : runs) {
    const RunConfig& c = r.config;
    if (c.seeds.data != first.seeds.data || c.dataset.d != first.dataset.d ||
        c.dataset.p != first.dataset.p || c.dataset.holdout_fraction != first.dataset.holdout_fraction)
      throw Error(Errc::MismatchedConfigs,
                  "runs '" + runs.front().label + "' and '" + r.label +
                      "' use different datasets (seed, d, p or holdout split)");
  }
}

std::string cell(const std::optional<double>& v) { return v ? format_real(*v) : std::string{}; }

// Column labels made unique when two runs share a strategy label.
std::vector<std::string> column_labels(const Comparison& cmp) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < cmp.summary.size(); ++i) {
    std::size_t earlier = 0;
    for (std::size_t j = 0; j < i; ++j) earlier += cmp.summary[j].label == cmp.summary[i].label;
    out.push_back(earlier ? cmp.summary[i].label + "#" + std::to_string(earlier + 1)
                          : cmp.summary[i].label);
  }
  return out;
}

}  // namespace

Comparison compare_runs(std::span<const RunResult> runs, std::optional<double> loss_threshold,
                        std::size_t time_points) {
  if (runs.empty()) throw Error(Errc::InvalidArgument, "nothing to compare");
  for (const RunResult& r : runs)
    if (r.traces.empty()) throw Error(Errc::InvalidArgument, "run '" + r.label + "' has no iterations");
  require_shared_data(runs);

  Comparison cmp;
  if (loss_threshold) {
    cmp.loss_threshold = *loss_threshold;
  } else {
    double worst_best = -std::numeric_limits<double>::infinity();
    for (const RunResult& r : runs) {
      double best = std::numeric_limits<double>::infinity();
      for (const IterationTrace& t : r.traces) best = std::min(best, t.loss);
      worst_best = std::max(worst_best, best);
    }
    cmp.loss_threshold = worst_best;
  }

  double horizon = 0.0;
  for (const RunResult& r : runs) {
    RunSummary s;
    s.label = r.label;
    s.iterations = r.traces.size();
    s.total_time = r.total_time();
    s.mean_iteration_time = s.total_time / static_cast<double>(s.iterations);
    s.final_loss = r.traces.back().loss;
    s.final_auc = r.traces.back().auc;
    s.replication_overhead = r.replication_overhead;
    for (const IterationTrace& t : r.traces) {
      if (t.loss <= cmp.loss_threshold) {
        s.iterations_to_threshold = t.iteration;
        s.time_to_threshold = t.clock;
        break;
      }
    }
    cmp.summary.push_back(std::move(s));
    cmp.runs.push_back(&r);
    horizon = std::max(horizon, r.total_time());
  }

  const std::size_t points = std::max<std::size_t>(time_points, 2);
  for (std::size_t i = 0; i < points; ++i) {
    TimePoint tp;
    tp.time = horizon * static_cast<double>(i) / static_cast<double>(points - 1);
    for (const RunResult& r : runs) {
      std::optional<double> loss_at;
      std::optional<double> auc_at;
      for (const IterationTrace& t : r.traces) {
        if (t.clock > tp.time) break;
        loss_at = t.loss;
        if (t.auc) auc_at = t.auc;
      }
      tp.loss.push_back(loss_at);
      tp.auc.push_back(auc_at);
    }
    cmp.timeline.push_back(std::move(tp));
  }
  return cmp;
}

std::string summary_csv(const Comparison& cmp) {
  std::ostringstream out;
  out << "label,iterations,total_time_s,mean_iteration_time_s,final_loss,final_auc,"
         "replication_overhead,loss_threshold,iterations_to_threshold,time_to_threshold_s\n";
  const auto labels = column_labels(cmp);
  for (std::size_t i = 0; i < cmp.summary.size(); ++i) {
    const RunSummary& s = cmp.summary[i];
    out << labels[i] << ',' << s.iterations << ',' << format_real(s.total_time) << ','
        << format_real(s.mean_iteration_time) << ',' << format_real(s.final_loss) << ','
        << cell(s.final_auc) << ',' << format_real(s.replication_overhead) << ','
        << format_real(cmp.loss_threshold) << ',';
    if (s.iterations_to_threshold) out << *s.iterations_to_threshold;
    out << ',' << cell(s.time_to_threshold) << '\n';
  }
  return out.str();
}

std::string iteration_csv(const Comparison& cmp) {
  std::ostringstream out;
  const auto labels = column_labels(cmp);
  out << "iteration";
  for (const auto& l : labels) out << ',' << l << "_time_s," << l << "_loss," << l << "_auc";
  out << '\n';
  std::size_t rows = 0;
  for (const RunResult* r : cmp.runs) rows = std::max(rows, r->traces.size());
  for (std::size_t i = 0; i < rows; ++i) {
    out << i + 1;
    for (const RunResult* r : cmp.runs) {
      if (i < r->traces.size()) {
        const IterationTrace& t = r->traces[i];
        out << ',' << format_real(t.clock) << ',' << format_real(t.loss) << ',' << cell(t.auc);
      } else {
        out << ",,,";
      }
    }
    out << '\n';
  }
  return out.str();
}

std::string timeline_csv(const Comparison& cmp) {
  std::ostringstream out;
  const auto labels = column_labels(cmp);
  out << "sim_time_s";
  for (const auto& l : labels) out << ',' << l << "_loss," << l << "_auc";
  out << '\n';
  for (const TimePoint& tp : cmp.timeline) {
    out << format_real(tp.time);
    for (std::size_t r = 0; r < tp.loss.size(); ++r) out << ',' << cell(tp.loss[r]) << ',' << cell(tp.auc[r]);
    out << '\n';
  }
  return out.str();
}

}  // namespace gradcode
