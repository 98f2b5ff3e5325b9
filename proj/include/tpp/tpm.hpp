#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "tpp/data.hpp"
#include "tpp/nn.hpp"
#include "tpp/numerics.hpp"

// The neural temporal point process model (TPM): a hierarchical RNN backbone
// with an intensity head (explicit or implicit time dependence), a category
// softmax head and a bivariate-Gaussian space-shift head, trained by joint
// maximum likelihood. A squared-error regression head stands in as the
// non-probabilistic baseline for the time component.

namespace tpp::tpm {

enum class HeadKind { A, B, regression };

inline std::string head_name(HeadKind k) {
  switch (k) {
    case HeadKind::A: return "A";
    case HeadKind::B: return "B";
    case HeadKind::regression: return "regression";
  }
  throw std::logic_error("head_name: unknown head");
}

inline HeadKind head_from_name(const std::string& s) {
  if (s == "A") return HeadKind::A;
  if (s == "B") return HeadKind::B;
  if (s == "regression") return HeadKind::regression;
  throw std::invalid_argument("unknown head kind: " + s);
}

struct TpmConfig {
  HeadKind head = HeadKind::B;
  std::size_t hidden_lower = 24;
  std::size_t hidden_higher = 24;
  std::size_t encoder_dim = 16;
  nn::Activation encoder_activation = nn::Activation::tanh;
  bool per_player_encoder = false;  // treat features as (x, y) pairs, pool across players
  std::size_t player_cap = 4;
  double sigma_x = 2.0, sigma_y = 2.0;  // fixed space-shift standard deviations (feet)
  std::array<double, 2> first_event_anchor{0.0, 0.0};
  std::uint64_t seed = 1;
  std::size_t epochs = 200;
  double learning_rate = 0.02;

  void validate() const {
    if (!(sigma_x > 0.0) || !(sigma_y > 0.0))
      throw std::invalid_argument("TpmConfig: sigma_x and sigma_y must be positive");
    if (hidden_lower == 0 || hidden_higher == 0 || encoder_dim == 0)
      throw std::invalid_argument("TpmConfig: zero-sized layer");
    if (epochs == 0) throw std::invalid_argument("TpmConfig: epochs must be >= 1");
    if (!(learning_rate > 0.0)) throw std::invalid_argument("TpmConfig: non-positive learning rate");
  }

  nlohmann::json to_json() const {
    return {{"head", head_name(head)},
            {"hidden_lower", hidden_lower},
            {"hidden_higher", hidden_higher},
            {"encoder_dim", encoder_dim},
            {"encoder_activation", nn::activation_name(encoder_activation)},
            {"per_player_encoder", per_player_encoder},
            {"player_cap", player_cap},
            {"sigma_x", sigma_x},
            {"sigma_y", sigma_y},
            {"first_event_anchor", first_event_anchor},
            {"seed", seed},
            {"epochs", epochs},
            {"learning_rate", learning_rate}};
  }

  static TpmConfig from_json(const nlohmann::json& j) {
    TpmConfig c;
    if (j.contains("head")) c.head = head_from_name(j.at("head").get<std::string>());
    c.hidden_lower = j.value("hidden_lower", c.hidden_lower);
    c.hidden_higher = j.value("hidden_higher", c.hidden_higher);
    c.encoder_dim = j.value("encoder_dim", c.encoder_dim);
    if (j.contains("encoder_activation"))
      c.encoder_activation = nn::activation_from_name(j.at("encoder_activation"));
    c.per_player_encoder = j.value("per_player_encoder", c.per_player_encoder);
    c.player_cap = j.value("player_cap", c.player_cap);
    c.sigma_x = j.value("sigma_x", c.sigma_x);
    c.sigma_y = j.value("sigma_y", c.sigma_y);
    if (j.contains("first_event_anchor")) c.first_event_anchor = j.at("first_event_anchor");
    c.seed = j.value("seed", c.seed);
    c.epochs = j.value("epochs", c.epochs);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    return c;
  }
};

// --- plain-value head views (inference and direct formula tests) ---

struct IntensityHeadA {
  std::vector<double> v;
  double rho = 0.0;  // w = exp(rho) keeps the time slope positive by construction
  double b = 0.0;
  double w() const { return std::max(std::exp(rho), 1e-300); }
};

struct IntensityHeadB {
  std::vector<double> w;
  double b = 0.0;
};

struct CategoryHead {
  std::size_t num_classes = 0, hidden = 0;
  std::vector<double> w;  // K x H row-major
  std::vector<double> b;  // K
};

struct SpaceHead {
  std::vector<double> w;  // 2 x H row-major
  std::vector<double> b;  // 2
  double sigma_x = 2.0, sigma_y = 2.0;
};

namespace detail {

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("head/hidden dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace detail

// lambda_A*(t) = exp(v h_j + w (t - t_j) + b), w > 0.
inline double log_intensity_a(const IntensityHeadA& head, const std::vector<double>& h, double t,
                              double t_j) {
  if (t < t_j) throw std::domain_error("intensity_a: t precedes t_j");
  return detail::dot(head.v, h) + head.w() * (t - t_j) + head.b;
}

inline double intensity_a(const IntensityHeadA& head, const std::vector<double>& h, double t,
                          double t_j) {
  return std::exp(log_intensity_a(head, h, t, t_j));
}

// lambda_B*(t) = exp(w h_j + b), constant in t.
inline double intensity_b(const IntensityHeadB& head, const std::vector<double>& h) {
  return std::exp(detail::dot(head.w, h) + head.b);
}

// log f*_A(t_next): s + w dt - e^s dt phi(w dt), with phi(x) = expm1(x)/x.
inline double time_log_likelihood_a(const IntensityHeadA& head, const std::vector<double>& h,
                                    double t_j, double t_next) {
  if (!(t_next > t_j) && t_next != t_j)
    throw std::domain_error("time_log_likelihood: t_next must not precede t_j");
  const double dt = t_next - t_j;
  const double s = detail::dot(head.v, h) + head.b;
  const double wd = head.w() * dt;
  return (s + wd) - (std::exp(s) * dt) * nn::Tape::phi(wd);
}

// log f*_B(t_next): q - e^q dt.
inline double time_log_likelihood_b(const IntensityHeadB& head, const std::vector<double>& h,
                                    double t_j, double t_next) {
  if (!(t_next > t_j) && t_next != t_j)
    throw std::domain_error("time_log_likelihood: t_next must not precede t_j");
  const double q = detail::dot(head.w, h) + head.b;
  return q - std::exp(q) * (t_next - t_j);
}

// Softmax class probabilities; stable against large logits.
inline std::vector<double> category_distribution(const CategoryHead& head,
                                                 const std::vector<double>& h) {
  if (h.size() != head.hidden) throw std::invalid_argument("category head: hidden size mismatch");
  std::vector<double> logits(head.num_classes);
  for (std::size_t k = 0; k < head.num_classes; ++k) {
    double acc = head.b[k];
    for (std::size_t j = 0; j < head.hidden; ++j) acc += head.w[k * head.hidden + j] * h[j];
    logits[k] = acc;
  }
  double mx = logits[0];
  for (double v : logits) mx = std::max(mx, v);
  double z = 0.0;
  for (double v : logits) z += std::exp(v - mx);
  std::vector<double> probs(logits.size());
  for (std::size_t k = 0; k < logits.size(); ++k) probs[k] = std::exp(logits[k] - mx) / z;
  return probs;
}

// Cross-entropy against the one-hot truth: log p_hat[true_class].
inline double category_log_likelihood(const CategoryHead& head, const std::vector<double>& h,
                                      int true_class) {
  if (true_class < 0 || static_cast<std::size_t>(true_class) >= head.num_classes)
    throw std::invalid_argument("category_log_likelihood: class index out of range");
  std::vector<double> logits(head.num_classes);
  for (std::size_t k = 0; k < head.num_classes; ++k) {
    double acc = head.b[k];
    for (std::size_t j = 0; j < head.hidden; ++j) acc += head.w[k * head.hidden + j] * h[j];
    logits[k] = acc;
  }
  double mx = logits[0];
  for (double v : logits) mx = std::max(mx, v);
  double z = 0.0;
  for (double v : logits) z += std::exp(v - mx);
  return logits[static_cast<std::size_t>(true_class)] - mx - std::log(z);
}

inline std::array<double, 2> space_mean(const SpaceHead& head, const std::vector<double>& h) {
  std::array<double, 2> mu{head.b[0], head.b[1]};
  for (std::size_t j = 0; j < h.size(); ++j) {
    mu[0] += head.w[j] * h[j];
    mu[1] += head.w[h.size() + j] * h[j];
  }
  return mu;
}

// Full log density of the diagonal bivariate Gaussian space shift.
inline double space_log_likelihood(const SpaceHead& head, const std::vector<double>& h,
                                   std::array<double, 2> shift) {
  if (!std::isfinite(shift[0]) || !std::isfinite(shift[1]))
    throw std::invalid_argument("space_log_likelihood: non-finite shift");
  const auto mu = space_mean(head, h);
  const double dx = (shift[0] - mu[0]) / head.sigma_x;
  const double dy = (shift[1] - mu[1]) / head.sigma_y;
  return -std::log(2.0 * 3.14159265358979323846 * head.sigma_x * head.sigma_y) -
         0.5 * (dx * dx + dy * dy);
}

// ---------------------------------------------------------------------------
// Model

class TrainingDiverged : public std::runtime_error {
 public:
  TrainingDiverged(std::size_t epoch, double value)
      : std::runtime_error("training diverged at epoch " + std::to_string(epoch) +
                           " (objective = " + std::to_string(value) + ")"),
        epoch(epoch) {}
  std::size_t epoch;
};

struct TpmModel {
  TpmConfig config;
  std::size_t feature_dim = 0;
  std::size_t num_classes = 0;
  std::vector<std::string> class_names;
  double dt_scale = 1.0;  // mean training interval; intervals are modeled in these units
  // Per-feature affine normalization fitted on the training frames (identity
  // until trained). Keeps raw court coordinates from saturating the encoder.
  std::vector<double> feature_shift, feature_scale;

  nn::ParamStore store;
  nn::FrameEncoderParams encoder;
  nn::HierRnnParams rnn;
  int time_v = -1, time_rho = -1, time_b = -1;  // head A
  int time_w = -1;                              // head B / regression slope
  int cat_w = -1, cat_b = -1;
  int space_w = -1, space_b = -1;

  TpmModel() : store(0) {}

  std::size_t hidden() const { return config.hidden_higher; }

  IntensityHeadA head_a() const {
    if (config.head != HeadKind::A) throw std::logic_error("model has no A head");
    return {store.entry(time_v).value, store.entry(time_rho).value[0],
            store.entry(time_b).value[0]};
  }
  IntensityHeadB head_b() const {
    if (config.head != HeadKind::B) throw std::logic_error("model has no B head");
    return {store.entry(time_w).value, store.entry(time_b).value[0]};
  }
  CategoryHead category_head() const {
    return {num_classes, hidden(), store.entry(cat_w).value, store.entry(cat_b).value};
  }
  SpaceHead space_head() const {
    return {store.entry(space_w).value, store.entry(space_b).value, config.sigma_x,
            config.sigma_y};
  }
};

inline TpmModel build_model(const TpmConfig& config, std::size_t feature_dim,
                            std::vector<std::string> class_names) {
  config.validate();
  if (feature_dim == 0) throw std::invalid_argument("build_model: zero feature dimension");
  if (class_names.empty()) throw std::invalid_argument("build_model: no classes");
  if (config.per_player_encoder && feature_dim % 2 != 0)
    throw std::invalid_argument("build_model: per-player encoder needs (x, y) feature pairs");

  TpmModel m;
  m.config = config;
  m.feature_dim = feature_dim;
  m.num_classes = class_names.size();
  m.class_names = std::move(class_names);
  m.store = nn::ParamStore(config.seed);

  const std::size_t enc_in = config.per_player_encoder ? 2 : feature_dim;
  m.encoder = nn::add_frame_encoder(m.store, "encoder", enc_in, config.encoder_dim,
                                    config.encoder_activation, config.player_cap);
  m.rnn = nn::add_hier_rnn(m.store, "rnn", config.encoder_dim, config.hidden_lower,
                           config.hidden_higher);
  const std::size_t H = config.hidden_higher;
  switch (config.head) {
    case HeadKind::A:
      m.time_v = m.store.add("time.v", 1, H);
      m.time_rho = m.store.add("time.rho", 1, 1, nn::Init::zeros);  // w = exp(rho) = 1 at start
      m.time_b = m.store.add("time.b", 1, 1, nn::Init::zeros);
      break;
    case HeadKind::B:
    case HeadKind::regression:
      m.time_w = m.store.add("time.w", 1, H);
      m.time_b = m.store.add("time.b", 1, 1, nn::Init::zeros);
      break;
  }
  m.cat_w = m.store.add("category.w", m.num_classes, H);
  m.cat_b = m.store.add("category.b", m.num_classes, 1, nn::Init::zeros);
  m.space_w = m.store.add("space.w", 2, H);
  m.space_b = m.store.add("space.b", 2, 1, nn::Init::zeros);
  m.feature_shift.assign(feature_dim, 0.0);
  m.feature_scale.assign(feature_dim, 1.0);
  return m;
}

namespace detail {

inline std::vector<int> build_frame_inputs(nn::Tape& tape, const TpmModel& model,
                                           const data::EventSequence& seq) {
  std::vector<int> inputs;
  inputs.reserve(seq.frames.size());
  for (const auto& frame : seq.frames) {
    if (frame.features.size() != model.feature_dim)
      throw std::invalid_argument("sequence feature dimension does not match the model");
    if (model.config.per_player_encoder) {
      std::vector<std::array<double, 2>> players;
      for (std::size_t i = 0; i + 1 < frame.features.size(); i += 2)
        players.push_back({frame.features[i], frame.features[i + 1]});
      inputs.push_back(nn::encode_frame(tape, model.encoder, players));
    } else {
      inputs.push_back(nn::apply_perceptron(tape, model.encoder, tape.input(frame.features)));
    }
  }
  return inputs;
}

struct SequenceLoss {
  int node = -1;
  std::size_t terms = 0;
};

// Sum over events of the per-event loss. Event i is predicted from the state
// after event i-1 (the zero initial state for the first event); the time
// target is the interval since the previous event (sequence origin for the
// first), rescaled by dt_scale; the space target is the shift from the
// previous event location (the configured anchor for the first).
inline SequenceLoss build_sequence_loss(nn::Tape& tape, const TpmModel& model,
                                        const data::EventSequence& seq) {
  if (seq.events.empty()) throw std::invalid_argument("sequence has no events");
  const auto frame_inputs = build_frame_inputs(tape, model, seq);
  std::vector<std::size_t> event_frames;
  for (const auto& ev : seq.events) event_frames.push_back(ev.frame_index);
  const auto states = nn::hier_forward(tape, model.rnn, frame_inputs, event_frames);

  const double origin = seq.frames.front().t;
  int loss = tape.scalar(0.0);
  for (std::size_t i = 0; i < seq.events.size(); ++i) {
    const int h = i == 0 ? states.initial_state : states.event_states[i - 1];
    const auto& ev = seq.events[i];
    const double prev_t = i == 0 ? origin : seq.events[i - 1].t;
    const double tau = (ev.t - prev_t) / model.dt_scale;

    int time_term;  // log-likelihood (A/B) or negated squared error (regression)
    if (model.config.head == HeadKind::A) {
      const int s = tape.add(tape.dot(tape.param(model.time_v), h), tape.param(model.time_b));
      const int w = tape.s_exp(tape.param(model.time_rho));
      const int wd = tape.s_scale(w, tau);
      const int hazard_mass =
          tape.mul(tape.mul(tape.s_exp(s), tape.scalar(tau)), tape.s_phi(wd));
      time_term = tape.sub(tape.add(s, wd), hazard_mass);
    } else if (model.config.head == HeadKind::B) {
      const int q = tape.add(tape.dot(tape.param(model.time_w), h), tape.param(model.time_b));
      time_term = tape.sub(q, tape.mul(tape.s_exp(q), tape.scalar(tau)));
    } else {
      const int pred = tape.add(tape.dot(tape.param(model.time_w), h), tape.param(model.time_b));
      const int diff = tape.sub(pred, tape.scalar(tau));
      time_term = tape.s_scale(tape.mul(diff, diff), -1.0);  // enters the loss as +MSE
    }

    const int logits = tape.affine(tape.param(model.cat_w), h, tape.param(model.cat_b));
    const int cat_term =
        tape.pick(tape.log_softmax(logits), static_cast<std::size_t>(ev.category));

    const double prev_x = i == 0 ? model.config.first_event_anchor[0] : seq.events[i - 1].x;
    const double prev_y = i == 0 ? model.config.first_event_anchor[1] : seq.events[i - 1].y;
    const int mu = tape.affine(tape.param(model.space_w), h, tape.param(model.space_b));
    const int diff = tape.sub(tape.input({ev.x - prev_x, ev.y - prev_y}), mu);
    const int dx = tape.pick(diff, 0);
    const int dy = tape.pick(diff, 1);
    const int space_term = tape.add(
        tape.s_scale(tape.mul(dx, dx), -0.5 / (model.config.sigma_x * model.config.sigma_x)),
        tape.s_scale(tape.mul(dy, dy), -0.5 / (model.config.sigma_y * model.config.sigma_y)));

    const int ll = tape.add(tape.add(time_term, cat_term), space_term);
    loss = tape.sub(loss, ll);
  }
  return {loss, seq.events.size()};
}

}  // namespace detail

// Joint negative log-likelihood of one sequence (normalization constants
// dropped, as during training). The space term is space_log_likelihood plus
// its additive constant log(2 pi sigma_x sigma_y).
inline double joint_nll(const TpmModel& model, const data::EventSequence& seq) {
  if (model.config.head == HeadKind::regression)
    throw std::logic_error("joint_nll: regression baseline has no likelihood");
  nn::Tape tape(const_cast<nn::ParamStore*>(&model.store));
  return tape.value0(detail::build_sequence_loss(tape, model, seq).node);
}

// ---------------------------------------------------------------------------
// Training

struct TrainLogEntry {
  std::size_t epoch;
  double objective;  // mean per-event NLL (mean squared-error mix for regression)
};

struct TrainResult {
  TpmModel model;
  std::vector<TrainLogEntry> log;
};

namespace detail {

struct Adam {
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  std::size_t t = 0;
  std::vector<std::vector<double>> m, v;

  explicit Adam(const nn::ParamStore& store) {
    for (std::size_t e = 0; e < store.count(); ++e) {
      const std::size_t n = store.entry(static_cast<int>(e)).value.size();
      m.emplace_back(n, 0.0);
      v.emplace_back(n, 0.0);
    }
  }

  void step(nn::ParamStore& store, double lr) {
    ++t;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    for (std::size_t e = 0; e < store.count(); ++e) {
      auto& entry = store.entry(static_cast<int>(e));
      for (std::size_t k = 0; k < entry.value.size(); ++k) {
        const double g = entry.grad[k];
        m[e][k] = beta1 * m[e][k] + (1.0 - beta1) * g;
        v[e][k] = beta2 * v[e][k] + (1.0 - beta2) * g * g;
        entry.value[k] -= lr * (m[e][k] / bc1) / (std::sqrt(v[e][k] / bc2) + eps);
      }
    }
  }
};

}  // namespace detail

// Full-batch gradient training of the joint objective; deterministic for a
// fixed seed. The log records the mean per-event objective of each epoch
// (evaluated before that epoch's update).
inline TrainResult train(const data::Dataset& dataset, const TpmConfig& config) {
  if (dataset.sequences.empty()) throw std::invalid_argument("train: empty dataset");
  for (const auto& seq : dataset.sequences)
    if (seq.events.empty() || seq.frames.empty())
      throw std::invalid_argument("train: sequence without frames or events: " + seq.id);

  TrainResult result;
  result.model = build_model(config, dataset.sequences.front().frames.front().features.size(),
                             dataset.class_names);
  TpmModel& model = result.model;

  double dt_sum = 0.0;
  std::size_t dt_count = 0;
  for (const auto& seq : dataset.sequences) {
    double prev = seq.frames.front().t;
    for (const auto& ev : seq.events) {
      dt_sum += ev.t - prev;
      prev = ev.t;
      ++dt_count;
    }
  }
  model.dt_scale = dt_count > 0 && dt_sum > 0.0 ? dt_sum / static_cast<double>(dt_count) : 1.0;

  detail::Adam optimizer(model.store);
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    model.store.zero_grads();
    double total = 0.0;
    std::size_t terms = 0;
    for (const auto& seq : dataset.sequences) {
      nn::Tape tape(&model.store);
      const auto loss = detail::build_sequence_loss(tape, model, seq);
      tape.backward(loss.node);
      total += tape.value0(loss.node);
      terms += loss.terms;
    }
    const double mean = total / static_cast<double>(terms);
    if (!std::isfinite(mean)) throw TrainingDiverged(epoch, mean);
    for (std::size_t e = 0; e < model.store.count(); ++e) {
      auto& grad = model.store.entry(static_cast<int>(e)).grad;
      for (auto& g : grad) g /= static_cast<double>(terms);
    }
    optimizer.step(model.store, config.learning_rate);
    result.log.push_back({epoch, mean});
  }
  return result;
}

// Same backbone with the scalar squared-error time head.
inline TrainResult train_regression_baseline(const data::Dataset& dataset, TpmConfig config) {
  config.head = HeadKind::regression;
  return train(dataset, config);
}

// ---------------------------------------------------------------------------
// Inference

// Expected next-event time. Head A evaluates the closed form
// t_j + e^eta E1(eta) / w with eta = e^{v h + b} / w; the scaled exponential
// integral keeps the product finite for large eta, and past the overflow-safe
// range the asymptotic limit e^{-(v h + b)} applies. Head B is
// t_j + e^{-(w h + b)}. Times are in seconds (dt_scale is applied).
inline double predict_time(const TpmModel& model, const std::vector<double>& h, double t_j) {
  double interval_tau;
  switch (model.config.head) {
    case HeadKind::A: {
      const auto head = model.head_a();
      const double s = detail::dot(head.v, h) + head.b;
      const double w = head.w();
      const double log_eta = s - std::log(w);
      if (log_eta > 690.0) {
        interval_tau = std::exp(-s);
      } else {
        interval_tau = numerics::exp_integral_e1_scaled(std::exp(log_eta)) / w;
      }
      break;
    }
    case HeadKind::B: {
      const auto head = model.head_b();
      interval_tau = std::exp(-(detail::dot(head.w, h) + head.b));
      break;
    }
    case HeadKind::regression: {
      const double pred =
          detail::dot(model.store.entry(model.time_w).value, h) +
          model.store.entry(model.time_b).value[0];
      // Negative predicted intervals clamp to a millisecond.
      return t_j + std::max(pred * model.dt_scale, 1e-3);
    }
    default: throw std::logic_error("predict_time: unknown head");
  }
  return t_j + interval_tau * model.dt_scale;
}

// Most confident class; exact score ties resolve to the lowest index.
inline std::pair<int, std::vector<double>> predict_category(const TpmModel& model,
                                                            const std::vector<double>& h) {
  const auto probs = category_distribution(model.category_head(), h);
  std::size_t best = 0;
  for (std::size_t k = 1; k < probs.size(); ++k)
    if (probs[k] > probs[best]) best = k;
  return {static_cast<int>(best), probs};
}

// Expected space shift added to the current position.
inline std::array<double, 2> predict_location(const TpmModel& model, const std::vector<double>& h,
                                              std::array<double, 2> current) {
  const auto mu = space_mean(model.space_head(), h);
  return {current[0] + mu[0], current[1] + mu[1]};
}

// Density of the next arrival time in seconds at t >= t_j.
inline double time_density(const TpmModel& model, const std::vector<double>& h, double t_j,
                           double t) {
  const double tau = (t - t_j) / model.dt_scale;
  double ll;
  if (model.config.head == HeadKind::A) {
    ll = time_log_likelihood_a(model.head_a(), h, 0.0, tau);
  } else if (model.config.head == HeadKind::B) {
    ll = time_log_likelihood_b(model.head_b(), h, 0.0, tau);
  } else {
    throw std::logic_error("time_density: regression baseline has no density");
  }
  return std::exp(ll) / model.dt_scale;
}

struct ForwardStates {
  std::vector<std::vector<double>> event_states;
  std::vector<double> initial_state;
};

// Teacher-forced hidden states: one per event, conditioned on the full
// ground-truth frame stream (causality makes this equal to conditioning on
// the prefix only).
inline ForwardStates forward_states(const TpmModel& model, const data::EventSequence& seq) {
  nn::Tape tape(const_cast<nn::ParamStore*>(&model.store));
  const auto frame_inputs = detail::build_frame_inputs(tape, model, seq);
  std::vector<std::size_t> event_frames;
  for (const auto& ev : seq.events) event_frames.push_back(ev.frame_index);
  const auto states = nn::hier_forward(tape, model.rnn, frame_inputs, event_frames);
  ForwardStates out;
  out.initial_state = tape.val(states.initial_state);
  for (int id : states.event_states) out.event_states.push_back(tape.val(id));
  return out;
}

struct PredictionRecord {
  std::size_t transition_index = 0;  // predicts event transition_index + 1
  double current_time = 0.0;
  double predicted_time = 0.0;
  int predicted_category = 0;
  std::vector<double> category_distribution;
  std::array<double, 2> predicted_location{0.0, 0.0};
  std::vector<std::pair<double, double>> time_density;  // optional (t, f) samples
};

struct DensityOptions {
  std::size_t points = 400;
  double span_multiplier = 5.0;  // grid covers [t_j, t_j + span x predicted interval]
};

// One prediction per transition: event j+1 from the ground-truth history
// through event j, for j = 0 .. m-2.
inline std::vector<PredictionRecord> evaluate_teacher_forced(
    const TpmModel& model, const data::EventSequence& seq,
    const DensityOptions* density = nullptr) {
  if (seq.events.size() < 2)
    throw std::invalid_argument("evaluate_teacher_forced: need at least two events");
  const auto states = forward_states(model, seq);
  std::vector<PredictionRecord> records;
  for (std::size_t i = 0; i + 1 < seq.events.size(); ++i) {
    const auto& h = states.event_states[i];
    const auto& ev = seq.events[i];
    PredictionRecord rec;
    rec.transition_index = i;
    rec.current_time = ev.t;
    rec.predicted_time = predict_time(model, h, ev.t);
    const auto [cls, dist] = predict_category(model, h);
    rec.predicted_category = cls;
    rec.category_distribution = dist;
    rec.predicted_location = predict_location(model, h, {ev.x, ev.y});
    if (density && model.config.head != HeadKind::regression) {
      const double span = density->span_multiplier * (rec.predicted_time - ev.t);
      const std::size_t n = std::max<std::size_t>(density->points, 2);
      for (std::size_t k = 0; k < n; ++k) {
        const double t = ev.t + span * static_cast<double>(k) / static_cast<double>(n - 1);
        rec.time_density.push_back({t, time_density(model, h, ev.t, t)});
      }
    }
    records.push_back(std::move(rec));
  }
  return records;
}

// ---------------------------------------------------------------------------
// Checkpoints

inline nlohmann::json model_to_json(const TpmModel& model) {
  return {{"format", "tpp-checkpoint"},
          {"version", 1},
          {"model_type", "tpm"},
          {"config", model.config.to_json()},
          {"feature_dim", model.feature_dim},
          {"classes", model.class_names},
          {"dt_scale", model.dt_scale},
          {"params", nn::params_to_json(model.store)}};
}

inline TpmModel model_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "tpp-checkpoint")
    throw std::invalid_argument("not a tpp-checkpoint file");
  if (j.value("version", 0) != 1) throw std::invalid_argument("unsupported checkpoint version");
  if (j.value("model_type", "") != "tpm")
    throw std::invalid_argument("checkpoint does not hold a tpm model");
  const auto config = TpmConfig::from_json(j.at("config"));
  TpmModel model = build_model(config, j.at("feature_dim").get<std::size_t>(),
                               j.at("classes").get<std::vector<std::string>>());
  model.dt_scale = j.at("dt_scale").get<double>();
  nn::params_from_json(model.store, j.at("params"));
  return model;
}

}  // namespace tpp::tpm
