#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

// Evaluation metrics: mean absolute error for time and space, the
// interval-normalized deviation rate in both of its readings, and per-class
// average precision / mAP for categories.

namespace tpp::metrics {

inline double mae(const std::vector<double>& predicted, const std::vector<double>& truth) {
  if (predicted.size() != truth.size() || predicted.empty())
    throw std::invalid_argument("mae: length mismatch or empty input");
  double sum = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) sum += std::abs(predicted[i] - truth[i]);
  return sum / static_cast<double>(predicted.size());
}

inline double space_mae(const std::vector<std::array<double, 2>>& predicted,
                        const std::vector<std::array<double, 2>>& truth) {
  if (predicted.size() != truth.size() || predicted.empty())
    throw std::invalid_argument("space_mae: length mismatch or empty input");
  double sum = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i)
    sum += std::hypot(predicted[i][0] - truth[i][0], predicted[i][1] - truth[i][1]);
  return sum / static_cast<double>(predicted.size());
}

struct DeviationRate {
  double as_written;  // |predicted - current| / (truth - current): 1.0 when perfect
  double error;       // |predicted - truth| / (truth - current): 0.0 when perfect
};

// Both readings of the interval-normalized deviation are reported; the
// numerator "distance from the current time" makes a perfect prediction score
// exactly 1, so the error variant is the headline number.
inline DeviationRate deviation_rate(double predicted, double current, double truth) {
  if (!(truth > current))
    throw std::invalid_argument("deviation_rate: ground-truth interval must be positive");
  const double interval = truth - current;
  return {std::abs(predicted - current) / interval, std::abs(predicted - truth) / interval};
}

// Average precision of one class: rank events by the class score descending
// (ties keep input order) and average the precision at each positive. Returns
// nothing when the class has no positives (undefined AP, excluded from mAP).
inline std::optional<double> average_precision(const std::vector<double>& scores,
                                               const std::vector<int>& truths, int class_id) {
  if (scores.size() != truths.size() || scores.empty())
    throw std::invalid_argument("average_precision: length mismatch or empty input");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  double positives_seen = 0.0, precision_sum = 0.0;
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    if (truths[order[rank]] == class_id) {
      positives_seen += 1.0;
      precision_sum += positives_seen / static_cast<double>(rank + 1);
    }
  }
  if (positives_seen == 0.0) return std::nullopt;
  return precision_sum / positives_seen;
}

// ---------------------------------------------------------------------------
// Aggregated evaluation report

struct TransitionSample {
  double current_time = 0.0;
  double truth_time = 0.0;
  std::array<double, 2> truth_location{0.0, 0.0};
  int truth_class = -1;
  std::optional<double> predicted_time;
  std::optional<std::array<double, 2>> predicted_location;
  std::optional<std::vector<double>> class_scores;  // one score per class
};

struct EvalReport {
  std::size_t n_transitions = 0;
  std::optional<double> time_mae_ms;       // milliseconds
  std::optional<double> space_mae;         // distance units
  std::optional<double> mdr_as_written;
  std::optional<double> mdr_error;
  std::map<std::string, double> per_class_ap;
  std::vector<std::string> excluded_classes;  // no positives in the evaluation set
  std::optional<double> map;
};

inline EvalReport build_report(const std::vector<TransitionSample>& samples,
                               const std::vector<std::string>& class_names) {
  if (samples.empty()) throw std::invalid_argument("build_report: no transitions");
  EvalReport report;
  report.n_transitions = samples.size();

  std::vector<double> pred_t, truth_t;
  double dr_written_sum = 0.0, dr_error_sum = 0.0;
  std::size_t n_time = 0;
  std::vector<std::array<double, 2>> pred_loc, truth_loc;
  std::vector<int> truths;
  std::vector<std::vector<double>> scores;
  for (const auto& s : samples) {
    if (s.predicted_time) {
      pred_t.push_back(*s.predicted_time);
      truth_t.push_back(s.truth_time);
      const auto dr = deviation_rate(*s.predicted_time, s.current_time, s.truth_time);
      dr_written_sum += dr.as_written;
      dr_error_sum += dr.error;
      ++n_time;
    }
    if (s.predicted_location) {
      pred_loc.push_back(*s.predicted_location);
      truth_loc.push_back(s.truth_location);
    }
    if (s.class_scores) {
      if (s.class_scores->size() != class_names.size())
        throw std::invalid_argument("build_report: class score vector has the wrong length");
      scores.push_back(*s.class_scores);
      truths.push_back(s.truth_class);
    }
  }

  if (n_time > 0) {
    report.time_mae_ms = 1000.0 * mae(pred_t, truth_t);
    report.mdr_as_written = dr_written_sum / static_cast<double>(n_time);
    report.mdr_error = dr_error_sum / static_cast<double>(n_time);
  }
  if (!pred_loc.empty()) report.space_mae = space_mae(pred_loc, truth_loc);
  if (!scores.empty()) {
    double ap_sum = 0.0;
    std::size_t ap_count = 0;
    for (std::size_t k = 0; k < class_names.size(); ++k) {
      std::vector<double> class_scores(scores.size());
      for (std::size_t i = 0; i < scores.size(); ++i) class_scores[i] = scores[i][k];
      const auto ap = average_precision(class_scores, truths, static_cast<int>(k));
      if (ap) {
        report.per_class_ap[class_names[k]] = *ap;
        ap_sum += *ap;
        ++ap_count;
      } else {
        report.excluded_classes.push_back(class_names[k]);
      }
    }
    if (ap_count > 0) report.map = ap_sum / static_cast<double>(ap_count);
  }
  return report;
}

// --- serialization (JSON object and a flat CSV row with identical numbers) ---

inline nlohmann::json report_to_json(const EvalReport& r) {
  auto opt = [](const std::optional<double>& v) {
    return v ? nlohmann::json(*v) : nlohmann::json();
  };
  return {{"n_transitions", r.n_transitions},
          {"time_mae_ms", opt(r.time_mae_ms)},
          {"space_mae", opt(r.space_mae)},
          {"mdr_as_written", opt(r.mdr_as_written)},
          {"mdr_error", opt(r.mdr_error)},
          {"headline_metric", "mdr_error"},
          {"per_class_ap", r.per_class_ap},
          {"excluded_classes", r.excluded_classes},
          {"map", opt(r.map)}};
}

namespace detail {

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace detail

inline std::string report_to_csv(const EvalReport& r) {
  std::string header = "n_transitions,time_mae_ms,space_mae,mdr_as_written,mdr_error,map";
  std::string row = std::to_string(r.n_transitions);
  auto cell = [&](const std::optional<double>& v) {
    row += ',';
    if (v) row += detail::format_double(*v);
  };
  cell(r.time_mae_ms);
  cell(r.space_mae);
  cell(r.mdr_as_written);
  cell(r.mdr_error);
  cell(r.map);
  for (const auto& [cls, ap] : r.per_class_ap) {
    header += ",ap_" + cls;
    row += ',' + detail::format_double(ap);
  }
  return header + "\n" + row + "\n";
}

}  // namespace tpp::metrics
