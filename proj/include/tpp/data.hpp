#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "tpp/classical.hpp"
#include "tpp/random.hpp"

// Domain data model, dataset ingestion and validation, frame-stream
// construction from agent trajectories, and the synthetic sequence generator.

namespace tpp::data {

struct Frame {
  double t = 0.0;               // seconds
  std::vector<double> features; // e.g. concatenated agent (x, y) coordinates
};

struct Event {
  std::size_t frame_index = 0;
  double t = 0.0;    // equals the indexed frame's timestamp
  int category = 0;  // index into the dataset class table
  double x = 0.0, y = 0.0;
};

struct EventSequence {
  std::string id;
  std::vector<Frame> frames;
  std::vector<Event> events;
};

struct Dataset {
  std::vector<EventSequence> sequences;
  std::vector<std::string> class_names;
  std::string time_unit = "seconds";
  std::string distance_unit = "feet";
  double frame_rate = 0.0;
  nlohmann::json provenance;  // resolved generator config + seed, if any

  int class_index(const std::string& name) const {
    for (std::size_t i = 0; i < class_names.size(); ++i)
      if (class_names[i] == name) return static_cast<int>(i);
    return -1;
  }
};

// Event times of one sequence as a point process history (origin = first
// frame time).
inline classical::History to_history(const EventSequence& seq) {
  classical::History h;
  h.origin = seq.frames.empty() ? 0.0 : seq.frames.front().t;
  for (const auto& e : seq.events) h.event_times.push_back(e.t);
  return h;
}

// ---------------------------------------------------------------------------
// Validation

struct ValidationError {
  std::string sequence_id;  // empty for dataset-level problems
  std::string field;
  std::string message;
};

// Checks every structural invariant; returns one entry per violation. An
// empty result means the dataset is usable (no partial acceptance).
inline std::vector<ValidationError> validate_dataset(const Dataset& ds) {
  std::vector<ValidationError> errors;
  auto add = [&](const std::string& id, const std::string& field, const std::string& msg) {
    errors.push_back({id, field, msg});
  };

  if (ds.class_names.empty()) add("", "classes", "class table is empty");
  for (std::size_t i = 0; i < ds.class_names.size(); ++i)
    for (std::size_t j = i + 1; j < ds.class_names.size(); ++j)
      if (ds.class_names[i] == ds.class_names[j])
        add("", "classes", "duplicate class name " + ds.class_names[i]);
  if (!(ds.frame_rate > 0.0)) add("", "frame_rate", "frame rate must be positive");

  std::size_t dataset_dim = 0;
  bool dim_seen = false;
  for (const auto& seq : ds.sequences) {
    if (seq.frames.empty()) {
      add(seq.id, "frames", "sequence has no frames");
      continue;
    }
    for (std::size_t f = 0; f < seq.frames.size(); ++f) {
      const auto& fr = seq.frames[f];
      if (!std::isfinite(fr.t)) add(seq.id, "frames.t", "non-finite frame time");
      if (f > 0 && !(fr.t > seq.frames[f - 1].t)) {
        add(seq.id, "frames.t", "frame times not strictly increasing at index " +
                                    std::to_string(f));
        break;
      }
    }
    const std::size_t dim = seq.frames.front().features.size();
    if (!dim_seen) {
      dataset_dim = dim;
      dim_seen = true;
    } else if (dim != dataset_dim) {
      add(seq.id, "frames.features", "feature dimension differs from the rest of the dataset");
    }
    for (const auto& fr : seq.frames) {
      if (fr.features.size() != dim) {
        add(seq.id, "frames.features", "feature dimension varies within the sequence");
        break;
      }
      for (double v : fr.features)
        if (!std::isfinite(v)) {
          add(seq.id, "frames.features", "non-finite feature value");
          break;
        }
    }

    if (seq.events.empty()) add(seq.id, "events", "sequence has no events");
    std::size_t prev_idx = 0;
    bool first = true;
    for (const auto& ev : seq.events) {
      if (ev.frame_index >= seq.frames.size()) {
        add(seq.id, "events.frame",
            "event frame index " + std::to_string(ev.frame_index) + " beyond frame count " +
                std::to_string(seq.frames.size()));
        continue;
      }
      if (!first && ev.frame_index <= prev_idx)
        add(seq.id, "events.frame", "event frame indices not strictly increasing");
      prev_idx = ev.frame_index;
      first = false;
      if (ev.t != seq.frames[ev.frame_index].t)
        add(seq.id, "events.t", "event time does not equal its frame's time");
      if (ev.category < 0 || ev.category >= static_cast<int>(ds.class_names.size()))
        add(seq.id, "events.category", "category index out of range");
      if (!std::isfinite(ev.x) || !std::isfinite(ev.y))
        add(seq.id, "events.location", "non-finite event location");
    }
  }
  return errors;
}

// ---------------------------------------------------------------------------
// JSONL dataset files
//
// Data file: one JSON object per line,
//   {"id": str, "frames": [{"t": float, "features": [float...]}],
//    "events": [{"frame": int, "t": float, "category": str, "x": float, "y": float}]}
// Header file: {"format": "tpp-dataset", "version": 1, "classes": [str...],
//   "time_unit": str, "distance_unit": str, "frame_rate": float,
//   "provenance": object|null}

inline void save_dataset(const Dataset& ds, const std::string& data_path,
                         const std::string& header_path) {
  nlohmann::json header{{"format", "tpp-dataset"},
                        {"version", 1},
                        {"classes", ds.class_names},
                        {"time_unit", ds.time_unit},
                        {"distance_unit", ds.distance_unit},
                        {"frame_rate", ds.frame_rate},
                        {"provenance", ds.provenance.is_null() ? nlohmann::json() : ds.provenance}};
  std::ofstream hout(header_path);
  if (!hout) throw std::runtime_error("cannot write " + header_path);
  hout << header.dump(2) << "\n";

  std::ofstream out(data_path);
  if (!out) throw std::runtime_error("cannot write " + data_path);
  for (const auto& seq : ds.sequences) {
    nlohmann::json frames = nlohmann::json::array();
    for (const auto& fr : seq.frames)
      frames.push_back({{"t", fr.t}, {"features", fr.features}});
    nlohmann::json events = nlohmann::json::array();
    for (const auto& ev : seq.events)
      events.push_back({{"frame", ev.frame_index},
                        {"t", ev.t},
                        {"category", ds.class_names.at(static_cast<std::size_t>(ev.category))},
                        {"x", ev.x},
                        {"y", ev.y}});
    out << nlohmann::json{{"id", seq.id}, {"frames", frames}, {"events", events}}.dump() << "\n";
  }
}

inline Dataset load_dataset(const std::string& data_path, const std::string& header_path) {
  std::ifstream hin(header_path);
  if (!hin) throw std::runtime_error("cannot read " + header_path);
  nlohmann::json header = nlohmann::json::parse(hin);
  if (header.value("format", "") != "tpp-dataset")
    throw std::runtime_error(header_path + ": not a tpp-dataset header");
  if (header.value("version", 0) != 1)
    throw std::runtime_error(header_path + ": unsupported dataset version");

  Dataset ds;
  ds.class_names = header.at("classes").get<std::vector<std::string>>();
  ds.time_unit = header.value("time_unit", "seconds");
  ds.distance_unit = header.value("distance_unit", "feet");
  ds.frame_rate = header.at("frame_rate").get<double>();
  if (header.contains("provenance") && !header["provenance"].is_null())
    ds.provenance = header["provenance"];

  std::ifstream in(data_path);
  if (!in) throw std::runtime_error("cannot read " + data_path);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw std::runtime_error(data_path + ":" + std::to_string(line_no) + ": " + e.what());
    }
    EventSequence seq;
    seq.id = j.at("id").get<std::string>();
    for (const auto& fr : j.at("frames"))
      seq.frames.push_back({fr.at("t").get<double>(),
                            fr.at("features").get<std::vector<double>>()});
    for (const auto& ev : j.at("events")) {
      const std::string cat = ev.at("category").get<std::string>();
      const int idx = ds.class_index(cat);
      if (idx < 0)
        throw std::runtime_error(data_path + ":" + std::to_string(line_no) +
                                 ": category not in header class table: " + cat);
      seq.events.push_back({ev.at("frame").get<std::size_t>(), ev.at("t").get<double>(), idx,
                            ev.at("x").get<double>(), ev.at("y").get<double>()});
    }
    ds.sequences.push_back(std::move(seq));
  }
  return ds;
}

// ---------------------------------------------------------------------------
// Frame construction from agent trajectories

struct AgentTrack {
  std::string id;
  std::vector<std::array<double, 3>> samples;  // (t, x, y), strictly increasing t
};

// Concatenation order: reference agent first (when declared), then the others
// by distance to the reference, ascending; ties break on the agent id.
struct OrderingRule {
  std::optional<std::string> reference_id;
};

namespace detail {

inline std::array<double, 2> interpolate(const AgentTrack& track, double t) {
  const auto& s = track.samples;
  auto it = std::lower_bound(s.begin(), s.end(), t,
                             [](const std::array<double, 3>& a, double v) { return a[0] < v; });
  if (it == s.end()) {
    if (t == s.back()[0]) return {s.back()[1], s.back()[2]};
    throw std::invalid_argument("build_frames: extrapolation beyond sampled range for agent " +
                                track.id);
  }
  if ((*it)[0] == t) return {(*it)[1], (*it)[2]};
  if (it == s.begin())
    throw std::invalid_argument("build_frames: extrapolation beyond sampled range for agent " +
                                track.id);
  const auto& hi = *it;
  const auto& lo = *(it - 1);
  const double w = (t - lo[0]) / (hi[0] - lo[0]);
  return {lo[1] + w * (hi[1] - lo[1]), lo[2] + w * (hi[2] - lo[2])};
}

}  // namespace detail

inline std::vector<Frame> build_frames(const std::vector<AgentTrack>& tracks, double frame_rate,
                                       const OrderingRule& rule = {}) {
  if (tracks.empty()) throw std::invalid_argument("build_frames: no agent tracks");
  if (!(frame_rate > 0.0)) throw std::invalid_argument("build_frames: frame rate must be positive");

  double start = std::numeric_limits<double>::infinity();
  double end = -std::numeric_limits<double>::infinity();
  for (const auto& tr : tracks) {
    if (tr.samples.empty())
      throw std::invalid_argument("build_frames: agent " + tr.id + " has no samples");
    for (std::size_t i = 1; i < tr.samples.size(); ++i)
      if (!(tr.samples[i][0] > tr.samples[i - 1][0]))
        throw std::invalid_argument("build_frames: agent " + tr.id +
                                    " samples not strictly increasing in time");
    start = std::min(start, tr.samples.front()[0]);
    end = std::max(end, tr.samples.back()[0]);
  }
  // All tracks must span the window; interior gaps interpolate linearly.
  for (const auto& tr : tracks)
    if (tr.samples.front()[0] > start || tr.samples.back()[0] < end)
      throw std::invalid_argument("build_frames: extrapolation beyond sampled range for agent " +
                                  tr.id);

  const AgentTrack* reference = nullptr;
  if (rule.reference_id) {
    for (const auto& tr : tracks)
      if (tr.id == *rule.reference_id) reference = &tr;
    if (!reference)
      throw std::invalid_argument("build_frames: reference agent not found: " +
                                  *rule.reference_id);
  }

  std::vector<Frame> frames;
  const double dt = 1.0 / frame_rate;
  for (std::size_t k = 0;; ++k) {
    const double t = start + static_cast<double>(k) * dt;
    if (t > end + 1e-9 * dt) break;
    Frame frame;
    frame.t = t;
    std::vector<std::pair<const AgentTrack*, std::array<double, 2>>> positions;
    for (const auto& tr : tracks) positions.push_back({&tr, detail::interpolate(tr, t)});

    if (reference) {
      std::array<double, 2> ref_pos{};
      for (const auto& [tr, pos] : positions)
        if (tr == reference) ref_pos = pos;
      std::stable_sort(positions.begin(), positions.end(), [&](const auto& a, const auto& b) {
        if (a.first == reference) return b.first != reference;
        if (b.first == reference) return false;
        const double da = std::hypot(a.second[0] - ref_pos[0], a.second[1] - ref_pos[1]);
        const double db = std::hypot(b.second[0] - ref_pos[0], b.second[1] - ref_pos[1]);
        if (da != db) return da < db;
        return a.first->id < b.first->id;
      });
    }
    for (const auto& [tr, pos] : positions) {
      frame.features.push_back(pos[0]);
      frame.features.push_back(pos[1]);
    }
    frames.push_back(std::move(frame));
    if (end == start) break;  // single-instant window
  }
  return frames;
}

// ---------------------------------------------------------------------------
// Synthetic generator
//
// Stands in for tracking datasets: a Markov chain over categories drives both
// the waiting times (exponential, rate of the category that opens the
// interval) and the spatial drift (per-category mean shift plus noise,
// clipped to the court). Frames carry the noisily interpolated position.

struct CategorySpec {
  std::string name;
  double rate = 1.0;                         // events per second while this category is active
  std::array<double, 2> mean_shift{0.0, 0.0};  // drift into the next event of this category
  double shift_noise = 1.0;
};

struct SynthConfig {
  std::size_t sequences = 100;
  std::size_t events_per_sequence = 10;
  std::vector<CategorySpec> categories;
  std::vector<std::vector<double>> transition_matrix;  // rows sum to 1
  double frame_rate = 10.0;
  double feature_noise = 0.1;
  std::array<double, 2> start_location{47.0, 25.0};
  std::array<double, 4> court{0.0, 0.0, 94.0, 50.0};  // x_min, y_min, x_max, y_max
  std::uint64_t seed = 1;

  void validate() const {
    if (sequences < 1) throw std::invalid_argument("SynthConfig: sequences must be >= 1");
    if (events_per_sequence < 1)
      throw std::invalid_argument("SynthConfig: events_per_sequence must be >= 1");
    if (categories.empty()) throw std::invalid_argument("SynthConfig: no categories");
    for (const auto& c : categories) {
      if (c.name.empty()) throw std::invalid_argument("SynthConfig: empty category name");
      if (!(c.rate > 0.0))
        throw std::invalid_argument("SynthConfig: category " + c.name + " needs a positive rate");
      if (c.shift_noise < 0.0)
        throw std::invalid_argument("SynthConfig: negative shift noise for " + c.name);
    }
    for (std::size_t i = 0; i < categories.size(); ++i)
      for (std::size_t j = i + 1; j < categories.size(); ++j)
        if (categories[i].name == categories[j].name)
          throw std::invalid_argument("SynthConfig: duplicate category " + categories[i].name);
    if (transition_matrix.size() != categories.size())
      throw std::invalid_argument("SynthConfig: transition matrix must be K x K");
    for (const auto& row : transition_matrix) {
      if (row.size() != categories.size())
        throw std::invalid_argument("SynthConfig: transition matrix must be K x K");
      double sum = 0.0;
      for (double p : row) {
        if (p < 0.0) throw std::invalid_argument("SynthConfig: negative transition probability");
        sum += p;
      }
      if (std::abs(sum - 1.0) > 1e-9)
        throw std::invalid_argument("SynthConfig: transition matrix rows must sum to 1");
    }
    if (!(frame_rate > 0.0)) throw std::invalid_argument("SynthConfig: frame rate must be positive");
    if (feature_noise < 0.0) throw std::invalid_argument("SynthConfig: negative feature noise");
    if (!(court[2] > court[0]) || !(court[3] > court[1]))
      throw std::invalid_argument("SynthConfig: degenerate court rectangle");
  }

  nlohmann::json to_json() const {
    nlohmann::json cats = nlohmann::json::array();
    for (const auto& c : categories)
      cats.push_back({{"name", c.name},
                      {"rate", c.rate},
                      {"mean_shift", c.mean_shift},
                      {"shift_noise", c.shift_noise}});
    return {{"sequences", sequences},
            {"events_per_sequence", events_per_sequence},
            {"categories", cats},
            {"transition_matrix", transition_matrix},
            {"frame_rate", frame_rate},
            {"feature_noise", feature_noise},
            {"start_location", start_location},
            {"court", court},
            {"seed", seed}};
  }

  static SynthConfig from_json(const nlohmann::json& j) {
    SynthConfig c;
    c.sequences = j.value("sequences", c.sequences);
    c.events_per_sequence = j.value("events_per_sequence", c.events_per_sequence);
    if (j.contains("categories")) {
      c.categories.clear();
      for (const auto& cat : j.at("categories")) {
        CategorySpec spec;
        spec.name = cat.at("name").get<std::string>();
        spec.rate = cat.at("rate").get<double>();
        if (cat.contains("mean_shift")) spec.mean_shift = cat.at("mean_shift");
        spec.shift_noise = cat.value("shift_noise", spec.shift_noise);
        c.categories.push_back(spec);
      }
    }
    if (j.contains("transition_matrix"))
      c.transition_matrix = j.at("transition_matrix").get<std::vector<std::vector<double>>>();
    c.frame_rate = j.value("frame_rate", c.frame_rate);
    c.feature_noise = j.value("feature_noise", c.feature_noise);
    if (j.contains("start_location")) c.start_location = j.at("start_location");
    if (j.contains("court")) c.court = j.at("court");
    c.seed = j.value("seed", c.seed);
    return c;
  }
};

inline Dataset generate_synthetic(const SynthConfig& config) {
  config.validate();
  const std::size_t K = config.categories.size();
  Rng rng(config.seed);

  Dataset ds;
  for (const auto& c : config.categories) ds.class_names.push_back(c.name);
  ds.frame_rate = config.frame_rate;
  ds.provenance = {{"generator", "synthetic"}, {"config", config.to_json()}};

  const double dt = 1.0 / config.frame_rate;
  auto clip = [&](double v, double lo, double hi) { return std::min(std::max(v, lo), hi); };

  for (std::size_t s = 0; s < config.sequences; ++s) {
    EventSequence seq;
    {
      std::ostringstream name;
      name << "seq-" << std::setw(4) << std::setfill('0') << s;
      seq.id = name.str();
    }

    // Category chain; the interval into event i uses the rate of the category
    // active while waiting (the previous event's category; the first interval
    // has no predecessor and uses its own event's rate).
    std::vector<std::size_t> cats(config.events_per_sequence);
    cats[0] = rng.integer(K);
    for (std::size_t i = 1; i < cats.size(); ++i) {
      const double u = rng.uniform();
      double acc = 0.0;
      std::size_t next = K - 1;
      for (std::size_t k = 0; k < K; ++k) {
        acc += config.transition_matrix[cats[i - 1]][k];
        if (u < acc) {
          next = k;
          break;
        }
      }
      cats[i] = next;
    }

    std::vector<double> raw_times(config.events_per_sequence);
    double t = 0.0;
    for (std::size_t i = 0; i < cats.size(); ++i) {
      const std::size_t rate_of = i == 0 ? cats[0] : cats[i - 1];
      t += rng.exponential(config.categories[rate_of].rate);
      raw_times[i] = t;
    }

    std::vector<std::array<double, 2>> locs(config.events_per_sequence);
    std::array<double, 2> prev = config.start_location;
    for (std::size_t i = 0; i < cats.size(); ++i) {
      const auto& spec = config.categories[cats[i]];
      locs[i][0] = clip(prev[0] + spec.mean_shift[0] + rng.normal(0.0, spec.shift_noise),
                        config.court[0], config.court[2]);
      locs[i][1] = clip(prev[1] + spec.mean_shift[1] + rng.normal(0.0, spec.shift_noise),
                        config.court[1], config.court[3]);
      prev = locs[i];
    }

    // Snap events onto the frame grid, keeping indices strictly increasing
    // and strictly after frame 0.
    std::vector<std::size_t> frame_idx(config.events_per_sequence);
    std::size_t prev_idx = 0;
    for (std::size_t i = 0; i < cats.size(); ++i) {
      const auto idx = static_cast<std::size_t>(
          std::max<long long>(std::llround(raw_times[i] * config.frame_rate),
                              static_cast<long long>(prev_idx) + 1));
      frame_idx[i] = idx;
      prev_idx = idx;
    }

    const std::size_t n_frames = frame_idx.back() + 1;
    seq.frames.resize(n_frames);
    std::vector<double> event_t(config.events_per_sequence);
    for (std::size_t i = 0; i < cats.size(); ++i)
      event_t[i] = static_cast<double>(frame_idx[i]) * dt;

    // Piecewise-linear position through the event locations (from the start
    // location at t = 0), with observation noise on every frame.
    std::size_t next_event = 0;
    std::array<double, 2> seg_from = config.start_location;
    double seg_t0 = 0.0;
    for (std::size_t f = 0; f < n_frames; ++f) {
      const double tf = static_cast<double>(f) * dt;
      while (next_event < cats.size() && tf > event_t[next_event]) {
        seg_from = locs[next_event];
        seg_t0 = event_t[next_event];
        ++next_event;
      }
      std::array<double, 2> pos;
      if (next_event >= cats.size()) {
        pos = locs.back();
      } else {
        const double seg_t1 = event_t[next_event];
        const double w = seg_t1 > seg_t0 ? (tf - seg_t0) / (seg_t1 - seg_t0) : 1.0;
        pos = {seg_from[0] + w * (locs[next_event][0] - seg_from[0]),
               seg_from[1] + w * (locs[next_event][1] - seg_from[1])};
      }
      seq.frames[f].t = tf;
      seq.frames[f].features = {pos[0] + rng.normal(0.0, config.feature_noise),
                                pos[1] + rng.normal(0.0, config.feature_noise)};
    }

    for (std::size_t i = 0; i < cats.size(); ++i)
      seq.events.push_back({frame_idx[i], event_t[i], static_cast<int>(cats[i]), locs[i][0],
                            locs[i][1]});
    ds.sequences.push_back(std::move(seq));
  }
  return ds;
}

}  // namespace tpp::data
