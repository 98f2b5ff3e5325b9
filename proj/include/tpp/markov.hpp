#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

// k-order Markov chain over action categories with per-transition mean space
// shifts and backoff prediction down to corpus-wide majority vote.

namespace tpp::markov {

struct MarkedEvent {
  std::string category;
  double x = 0.0, y = 0.0;
};

using MarkedSequence = std::vector<MarkedEvent>;

struct ShiftStats {
  double sum_x = 0.0, sum_y = 0.0;
  std::size_t count = 0;
  std::array<double, 2> mean() const {
    if (count == 0) return {0.0, 0.0};
    return {sum_x / static_cast<double>(count), sum_y / static_cast<double>(count)};
  }
};

struct TransitionStats {
  std::map<std::string, std::size_t> next_counts;
  std::map<std::string, ShiftStats> shifts;  // accumulated per next category
};

// Contexts of every length 1..k are stored so that backoff can shorten the
// conditioning window without refitting.
struct MarkovTable {
  std::size_t order = 1;
  std::map<std::vector<std::string>, TransitionStats> table;
  std::map<std::string, std::size_t> category_counts;  // all events, for majority vote
  std::map<std::string, ShiftStats> shift_into;        // corpus-wide shifts per successor
};

inline MarkovTable fit_markov(const std::vector<MarkedSequence>& sequences, std::size_t k) {
  if (k < 1) throw std::invalid_argument("fit_markov: order must be >= 1");
  MarkovTable t;
  t.order = k;
  std::size_t total_events = 0;
  for (const auto& seq : sequences) {
    for (std::size_t i = 0; i < seq.size(); ++i) {
      ++t.category_counts[seq[i].category];
      ++total_events;
      if (i == 0) continue;
      const double dx = seq[i].x - seq[i - 1].x;
      const double dy = seq[i].y - seq[i - 1].y;
      auto& corpus_shift = t.shift_into[seq[i].category];
      corpus_shift.sum_x += dx;
      corpus_shift.sum_y += dy;
      ++corpus_shift.count;
      for (std::size_t len = 1; len <= std::min(k, i); ++len) {
        std::vector<std::string> context;
        for (std::size_t j = i - len; j < i; ++j) context.push_back(seq[j].category);
        auto& stats = t.table[context];
        ++stats.next_counts[seq[i].category];
        auto& shift = stats.shifts[seq[i].category];
        shift.sum_x += dx;
        shift.sum_y += dy;
        ++shift.count;
      }
    }
  }
  if (total_events == 0) throw std::invalid_argument("fit_markov: empty corpus");
  return t;
}

struct MarkovPrediction {
  std::string category;
  std::array<double, 2> location{0.0, 0.0};
  std::map<std::string, double> distribution;  // normalized scores at the resolved level
  std::size_t context_length = 0;              // 0 means majority vote
};

namespace detail {

// Argmax over counts; equal counts resolve to the lexicographically smallest
// category (std::map iterates in that order).
inline std::string argmax_category(const std::map<std::string, std::size_t>& counts) {
  std::string best;
  std::size_t best_count = 0;
  for (const auto& [cat, n] : counts) {
    if (n > best_count) {
      best = cat;
      best_count = n;
    }
  }
  return best;
}

inline std::map<std::string, double> normalize(const std::map<std::string, std::size_t>& counts) {
  double total = 0.0;
  for (const auto& [cat, n] : counts) total += static_cast<double>(n);
  std::map<std::string, double> dist;
  for (const auto& [cat, n] : counts) dist[cat] = static_cast<double>(n) / total;
  return dist;
}

}  // namespace detail

// Prediction with suffix-truncation backoff: use the most recent k
// categories; when the context is unseen (or the history is shorter), drop
// the oldest entry and retry, terminating at corpus-wide majority vote. The
// predicted location adds the mean space shift of the selected transition.
inline MarkovPrediction predict_markov(const MarkovTable& t,
                                       const std::vector<std::string>& history,
                                       std::array<double, 2> current) {
  if (t.category_counts.empty()) throw std::invalid_argument("predict_markov: empty table");
  const std::size_t max_len = std::min(t.order, history.size());
  for (std::size_t len = max_len; len >= 1; --len) {
    const std::vector<std::string> context(history.end() - static_cast<std::ptrdiff_t>(len),
                                           history.end());
    const auto it = t.table.find(context);
    if (it == t.table.end() || it->second.next_counts.empty()) continue;
    MarkovPrediction pred;
    pred.category = detail::argmax_category(it->second.next_counts);
    pred.distribution = detail::normalize(it->second.next_counts);
    pred.context_length = len;
    const auto shift_it = it->second.shifts.find(pred.category);
    const auto shift = shift_it == it->second.shifts.end() ? std::array<double, 2>{0.0, 0.0}
                                                           : shift_it->second.mean();
    pred.location = {current[0] + shift[0], current[1] + shift[1]};
    return pred;
  }
  // 0-order: majority vote; the shift is the corpus-wide mean into the
  // predicted category.
  MarkovPrediction pred;
  pred.category = detail::argmax_category(t.category_counts);
  pred.distribution = detail::normalize(t.category_counts);
  pred.context_length = 0;
  const auto it = t.shift_into.find(pred.category);
  const auto shift = it == t.shift_into.end() ? std::array<double, 2>{0.0, 0.0}
                                              : it->second.mean();
  pred.location = {current[0] + shift[0], current[1] + shift[1]};
  return pred;
}

// ---------------------------------------------------------------------------
// JSON serialization

inline nlohmann::json table_to_json(const MarkovTable& t) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& [context, stats] : t.table) {
    nlohmann::json shifts;
    for (const auto& [cat, s] : stats.shifts)
      shifts[cat] = {{"sum", {s.sum_x, s.sum_y}}, {"count", s.count}};
    entries.push_back(
        {{"context", context}, {"next", stats.next_counts}, {"shifts", shifts}});
  }
  nlohmann::json shift_into;
  for (const auto& [cat, s] : t.shift_into)
    shift_into[cat] = {{"sum", {s.sum_x, s.sum_y}}, {"count", s.count}};
  return {{"format", "tpp-model"},
          {"version", 1},
          {"model_type", "markov"},
          {"order", t.order},
          {"category_counts", t.category_counts},
          {"shift_into", shift_into},
          {"entries", entries}};
}

inline MarkovTable table_from_json(const nlohmann::json& j) {
  if (j.value("model_type", "") != "markov")
    throw std::invalid_argument("not a markov table file");
  if (j.value("version", 0) != 1) throw std::invalid_argument("unsupported markov table version");
  MarkovTable t;
  t.order = j.at("order").get<std::size_t>();
  t.category_counts = j.at("category_counts").get<std::map<std::string, std::size_t>>();
  auto parse_shift = [](const nlohmann::json& s) {
    ShiftStats out;
    out.sum_x = s.at("sum")[0].get<double>();
    out.sum_y = s.at("sum")[1].get<double>();
    out.count = s.at("count").get<std::size_t>();
    return out;
  };
  for (const auto& [cat, s] : j.at("shift_into").items()) t.shift_into[cat] = parse_shift(s);
  for (const auto& entry : j.at("entries")) {
    TransitionStats stats;
    stats.next_counts = entry.at("next").get<std::map<std::string, std::size_t>>();
    for (const auto& [cat, s] : entry.at("shifts").items()) stats.shifts[cat] = parse_shift(s);
    t.table[entry.at("context").get<std::vector<std::string>>()] = stats;
  }
  return t;
}

}  // namespace tpp::markov
