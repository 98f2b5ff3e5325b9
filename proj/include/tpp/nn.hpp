#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "tpp/autodiff.hpp"

// LSTM cells, frame-level feature extraction with per-player pooling, and the
// two-level recurrent network with skip connections from the frame stream to
// the event stream.

namespace tpp::nn {

// ---------------------------------------------------------------------------
// LSTM

struct LstmCellParams {
  int wx = -1, wh = -1, b = -1;  // ParamStore ids; gates stacked [i, f, o, g]
  std::size_t input_dim = 0, hidden_dim = 0;
};

inline LstmCellParams add_lstm_cell(ParamStore& store, const std::string& prefix,
                                    std::size_t input_dim, std::size_t hidden_dim,
                                    double forget_bias = 1.0) {
  LstmCellParams p;
  p.input_dim = input_dim;
  p.hidden_dim = hidden_dim;
  p.wx = store.add(prefix + ".wx", 4 * hidden_dim, input_dim);
  p.wh = store.add(prefix + ".wh", 4 * hidden_dim, hidden_dim);
  p.b = store.add(prefix + ".b", 4 * hidden_dim, 1, Init::zeros);
  auto& bias = store.entry(p.b).value;
  for (std::size_t i = hidden_dim; i < 2 * hidden_dim; ++i) bias[i] = forget_bias;
  return p;
}

// One gated update; returns (h', c').
inline std::pair<int, int> lstm_step(Tape& tape, const LstmCellParams& p, int x, int h, int c) {
  if (tape.val(x).size() != p.input_dim || tape.val(h).size() != p.hidden_dim ||
      tape.val(c).size() != p.hidden_dim)
    throw std::invalid_argument("lstm_step: dimension mismatch");
  const std::size_t H = p.hidden_dim;
  const int pre = tape.lincomb2(tape.param(p.wx), x, tape.param(p.wh), h, tape.param(p.b));
  const int gi = tape.sigmoid(tape.slice(pre, 0, H));
  const int gf = tape.sigmoid(tape.slice(pre, H, H));
  const int go = tape.sigmoid(tape.slice(pre, 2 * H, H));
  const int gc = tape.tanh_(tape.slice(pre, 3 * H, H));
  const int c_new = tape.add(tape.mul(gf, c), tape.mul(gi, gc));
  const int h_new = tape.mul(go, tape.tanh_(c_new));
  return {h_new, c_new};
}

// ---------------------------------------------------------------------------
// Frame-level feature extraction

enum class Activation { linear, tanh, relu };

inline std::string activation_name(Activation a) {
  switch (a) {
    case Activation::linear: return "linear";
    case Activation::tanh: return "tanh";
    case Activation::relu: return "relu";
  }
  throw std::logic_error("activation_name: unknown activation");
}

inline Activation activation_from_name(const std::string& s) {
  if (s == "linear") return Activation::linear;
  if (s == "tanh") return Activation::tanh;
  if (s == "relu") return Activation::relu;
  throw std::invalid_argument("unknown activation: " + s);
}

// Single-layer perceptron shared across players (or applied to the whole
// frame feature vector, depending on the pipeline configuration).
struct FrameEncoderParams {
  int w = -1, b = -1;
  std::size_t in_dim = 0, out_dim = 0;
  Activation activation = Activation::tanh;
  std::size_t player_cap = 4;  // per-player mode only
};

inline FrameEncoderParams add_frame_encoder(ParamStore& store, const std::string& prefix,
                                            std::size_t in_dim, std::size_t out_dim,
                                            Activation activation = Activation::tanh,
                                            std::size_t player_cap = 4) {
  FrameEncoderParams p;
  p.in_dim = in_dim;
  p.out_dim = out_dim;
  p.activation = activation;
  p.player_cap = player_cap;
  p.w = store.add(prefix + ".w", out_dim, in_dim);
  p.b = store.add(prefix + ".b", out_dim, 1, Init::zeros);
  return p;
}

inline int apply_activation(Tape& tape, Activation act, int x) {
  switch (act) {
    case Activation::linear: return x;
    case Activation::tanh: return tape.tanh_(x);
    case Activation::relu: return tape.relu(x);
  }
  throw std::logic_error("apply_activation: unknown activation");
}

inline int apply_perceptron(Tape& tape, const FrameEncoderParams& p, int x) {
  return apply_activation(tape, p.activation, tape.affine(tape.param(p.w), x, tape.param(p.b)));
}

// Players with the highest closeness centrality (reciprocal of the summed
// Euclidean distance to all others in the complete graph). Ties break toward
// the lower index; returned indices are ascending.
inline std::vector<std::size_t> select_players_closeness(
    const std::vector<std::array<double, 2>>& positions, std::size_t n_p) {
  if (positions.empty()) throw std::invalid_argument("select_players_closeness: empty positions");
  if (n_p < 1) throw std::invalid_argument("select_players_closeness: n_p must be >= 1");
  if (positions.size() <= n_p) {
    std::vector<std::size_t> all(positions.size());
    std::iota(all.begin(), all.end(), 0);
    return all;
  }
  // Highest closeness == smallest distance sum, so rank by the sum directly.
  std::vector<double> dist_sum(positions.size(), 0.0);
  for (std::size_t i = 0; i < positions.size(); ++i)
    for (std::size_t j = 0; j < positions.size(); ++j) {
      if (i == j) continue;
      dist_sum[i] += std::hypot(positions[i][0] - positions[j][0],
                                positions[i][1] - positions[j][1]);
    }
  std::vector<std::size_t> order(positions.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return dist_sum[a] < dist_sum[b]; });
  order.resize(n_p);
  std::sort(order.begin(), order.end());
  return order;
}

// Shared perceptron per player followed by element-wise max pooling. More
// players than the cap are reduced by closeness-centrality selection; fewer
// are padded with zeroed coordinate entries.
inline int encode_frame(Tape& tape, const FrameEncoderParams& p,
                        const std::vector<std::array<double, 2>>& players) {
  if (players.empty()) throw std::invalid_argument("encode_frame: empty player list");
  if (p.in_dim != 2) throw std::invalid_argument("encode_frame: per-player encoder needs in_dim 2");
  std::vector<std::array<double, 2>> selected;
  if (players.size() > p.player_cap) {
    for (std::size_t idx : select_players_closeness(players, p.player_cap))
      selected.push_back(players[idx]);
  } else {
    selected = players;
  }
  while (selected.size() < p.player_cap) selected.push_back({0.0, 0.0});
  std::vector<int> encoded;
  encoded.reserve(selected.size());
  for (const auto& xy : selected)
    encoded.push_back(apply_perceptron(tape, p, tape.input({xy[0], xy[1]})));
  return tape.maxpool(encoded);
}

// ---------------------------------------------------------------------------
// Hierarchical RNN

struct HierRnnParams {
  LstmCellParams lower, higher;
};

inline HierRnnParams add_hier_rnn(ParamStore& store, const std::string& prefix,
                                  std::size_t input_dim, std::size_t hidden_lower,
                                  std::size_t hidden_higher) {
  HierRnnParams p;
  p.lower = add_lstm_cell(store, prefix + ".lower", input_dim, hidden_lower);
  p.higher = add_lstm_cell(store, prefix + ".higher", hidden_lower, hidden_higher);
  return p;
}

struct HierStates {
  std::vector<int> event_states;  // higher-level hidden state after each event
  int initial_state = -1;         // higher-level hidden state before any event
};

// The lower LSTM consumes every frame in order; at each event frame its
// hidden state is passed up as the input of one higher-level step.
inline HierStates hier_forward(Tape& tape, const HierRnnParams& p,
                               const std::vector<int>& frame_inputs,
                               const std::vector<std::size_t>& event_frames) {
  for (std::size_t i = 0; i < event_frames.size(); ++i) {
    if (event_frames[i] >= frame_inputs.size())
      throw std::invalid_argument("hier_forward: event frame index out of range");
    if (i > 0 && event_frames[i] <= event_frames[i - 1])
      throw std::invalid_argument("hier_forward: event frames must be strictly increasing");
  }
  HierStates out;
  int h_lo = tape.zeros(p.lower.hidden_dim);
  int c_lo = tape.zeros(p.lower.hidden_dim);
  int h_hi = tape.zeros(p.higher.hidden_dim);
  int c_hi = tape.zeros(p.higher.hidden_dim);
  out.initial_state = h_hi;
  std::size_t next_event = 0;
  for (std::size_t f = 0; f < frame_inputs.size(); ++f) {
    std::tie(h_lo, c_lo) = lstm_step(tape, p.lower, frame_inputs[f], h_lo, c_lo);
    if (next_event < event_frames.size() && event_frames[next_event] == f) {
      std::tie(h_hi, c_hi) = lstm_step(tape, p.higher, h_lo, h_hi, c_hi);
      out.event_states.push_back(h_hi);
      ++next_event;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Gradient verification

// Compares reverse-mode gradients with central finite differences over every
// parameter component. `loss(true)` must run forward + backward and leave the
// gradients in the store; `loss(false)` runs forward only. Returns the largest
// relative error (with a small absolute floor for near-zero gradients).
inline double grad_check(ParamStore& store, const std::function<double(bool)>& loss,
                         double eps = 1e-5) {
  store.zero_grads();
  loss(true);
  std::vector<std::vector<double>> analytic;
  for (std::size_t e = 0; e < store.count(); ++e)
    analytic.push_back(store.entry(static_cast<int>(e)).grad);

  double worst = 0.0;
  for (std::size_t e = 0; e < store.count(); ++e) {
    auto& value = store.entry(static_cast<int>(e)).value;
    for (std::size_t k = 0; k < value.size(); ++k) {
      const double saved = value[k];
      const double h = eps * std::max(1.0, std::abs(saved));
      value[k] = saved + h;
      const double up = loss(false);
      value[k] = saved - h;
      const double down = loss(false);
      value[k] = saved;
      const double fd = (up - down) / (2.0 * h);
      const double ad = analytic[e][k];
      const double err = std::abs(fd - ad) / std::max({std::abs(fd), std::abs(ad), 1e-3});
      worst = std::max(worst, err);
    }
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Checkpoint serialization (versioned JSON, row-major values)

inline nlohmann::json params_to_json(const ParamStore& store) {
  nlohmann::json arr = nlohmann::json::array();
  for (std::size_t e = 0; e < store.count(); ++e) {
    const auto& entry = store.entry(static_cast<int>(e));
    arr.push_back({{"name", entry.name},
                   {"rows", entry.rows},
                   {"cols", entry.cols},
                   {"values", entry.value}});
  }
  return arr;
}

inline void params_from_json(ParamStore& store, const nlohmann::json& arr) {
  if (!arr.is_array() || arr.size() != store.count())
    throw std::invalid_argument("params_from_json: parameter list does not match the model");
  for (const auto& item : arr) {
    const int id = store.find(item.at("name").get<std::string>());
    if (id < 0)
      throw std::invalid_argument("params_from_json: unknown parameter " +
                                  item.at("name").get<std::string>());
    auto& entry = store.entry(id);
    if (item.at("rows").get<std::size_t>() != entry.rows ||
        item.at("cols").get<std::size_t>() != entry.cols)
      throw std::invalid_argument("params_from_json: shape mismatch for " + entry.name);
    const auto values = item.at("values").get<std::vector<double>>();
    if (values.size() != entry.value.size())
      throw std::invalid_argument("params_from_json: value count mismatch for " + entry.name);
    entry.value = values;
  }
}

}  // namespace tpp::nn
