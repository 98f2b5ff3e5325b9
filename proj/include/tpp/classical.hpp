#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "tpp/numerics.hpp"
#include "tpp/optim.hpp"
#include "tpp/random.hpp"

// Classical temporal point processes: Poisson, Hawkes and self-correcting.
// Each family provides its conditional intensity, a closed-form compensator
// (the integrated intensity since the last event), simulation by Ogata
// thinning, pooled maximum-likelihood fitting and expected-next-time
// prediction.

namespace tpp::classical {

struct PoissonParams {
  double lambda;  // events per unit time
  void validate() const {
    if (!(lambda > 0.0) || !std::isfinite(lambda))
      throw std::invalid_argument("PoissonParams: lambda must be positive");
  }
};

struct HawkesParams {
  double lambda;  // base rate
  double alpha;   // excitation jump
  double gamma;   // exponential decay of the excitation
  void validate() const {
    if (!(lambda > 0.0) || !(alpha > 0.0) || !(gamma > 0.0))
      throw std::invalid_argument("HawkesParams: lambda, alpha, gamma must be positive");
  }
};

struct SelfCorrectingParams {
  double mu;     // exponential growth rate of the intensity
  double alpha;  // inhibition per event
  void validate() const {
    if (!(mu > 0.0) || !(alpha > 0.0))
      throw std::invalid_argument("SelfCorrectingParams: mu, alpha must be positive");
  }
};

using ClassicalModel = std::variant<PoissonParams, HawkesParams, SelfCorrectingParams>;

enum class Family { poisson, hawkes, self_correcting };

inline std::string family_name(Family f) {
  switch (f) {
    case Family::poisson: return "poisson";
    case Family::hawkes: return "hawkes";
    case Family::self_correcting: return "selfcorrecting";
  }
  throw std::logic_error("family_name: unknown family");
}

inline Family family_from_name(const std::string& name) {
  if (name == "poisson") return Family::poisson;
  if (name == "hawkes") return Family::hawkes;
  if (name == "selfcorrecting") return Family::self_correcting;
  throw std::invalid_argument("unknown point process family: " + name);
}

// Event history of one sequence. The self-correcting intensity grows with
// time elapsed since `origin`, so all timestamps are interpreted relative to
// the sequence start.
struct History {
  double origin = 0.0;
  std::vector<double> event_times;

  void validate() const {
    double prev = origin;
    bool first = true;
    for (double t : event_times) {
      if (!std::isfinite(t)) throw std::invalid_argument("History: non-finite event time");
      if (t < origin) throw std::invalid_argument("History: event before origin");
      if (!first && t <= prev)
        throw std::invalid_argument("History: event times must be strictly increasing");
      prev = t;
      first = false;
    }
  }

  double last_time() const { return event_times.empty() ? origin : event_times.back(); }
  std::size_t size() const { return event_times.size(); }
};

namespace detail {

// Hawkes excitation sum S = sum_i exp(-gamma (t - t_i)) over the given
// events; `t` must be >= every event time.
inline double hawkes_excitation(const HawkesParams& p, double t, const std::vector<double>& times,
                                bool include_events_at_t) {
  double s = 0.0;
  for (double ti : times) {
    if (ti < t || (include_events_at_t && ti == t)) s += std::exp(-p.gamma * (t - ti));
  }
  return s;
}

}  // namespace detail

// Conditional intensity at time t given the history. Uses the left-continuous
// convention: events exactly at t are not yet counted.
inline double intensity(const ClassicalModel& model, double t, const History& history) {
  history.validate();
  if (t < history.last_time())
    throw std::domain_error("intensity: t precedes the last event in the history");
  return std::visit(
      [&](const auto& p) -> double {
        using T = std::decay_t<decltype(p)>;
        p.validate();
        if constexpr (std::is_same_v<T, PoissonParams>) {
          return p.lambda;
        } else if constexpr (std::is_same_v<T, HawkesParams>) {
          return p.lambda + p.alpha * detail::hawkes_excitation(p, t, history.event_times, false);
        } else {
          double count = 0.0;
          for (double ti : history.event_times)
            if (ti < t) count += 1.0;
          return std::exp(p.mu * (t - history.origin) - p.alpha * count);
        }
      },
      model);
}

// Integrated intensity over (t_j, t], t_j = last event (or origin). Closed
// form per family; no quadrature in hot paths.
inline double compensator(const ClassicalModel& model, double t, const History& history) {
  history.validate();
  const double t_j = history.last_time();
  if (t < t_j) throw std::domain_error("compensator: t precedes the last event");
  const double dt = t - t_j;
  return std::visit(
      [&](const auto& p) -> double {
        using T = std::decay_t<decltype(p)>;
        p.validate();
        if constexpr (std::is_same_v<T, PoissonParams>) {
          return p.lambda * dt;
        } else if constexpr (std::is_same_v<T, HawkesParams>) {
          const double s_j = detail::hawkes_excitation(p, t_j, history.event_times, true);
          return p.lambda * dt + (p.alpha / p.gamma) * s_j * (-std::expm1(-p.gamma * dt));
        } else {
          const double n = static_cast<double>(history.size());
          const double a = p.mu * (t_j - history.origin) - p.alpha * n;
          // (exp(mu (t - origin) - alpha n) - exp(mu (t_j - origin) - alpha n)) / mu,
          // computed from the segment-start log-intensity to avoid overflow.
          return std::exp(a) * std::expm1(p.mu * dt) / p.mu;
        }
      },
      model);
}

struct PdfCdf {
  double density;
  double cumulative;
};

// f*(t) and F*(t) for the next arrival. The density uses the right-continuous
// intensity so that events located exactly at the last event time contribute.
inline PdfCdf next_event_pdf_cdf(const ClassicalModel& model, double t, const History& history) {
  const double comp = compensator(model, t, history);
  const double t_j = history.last_time();
  const double lam = std::visit(
      [&](const auto& p) -> double {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, PoissonParams>) {
          return p.lambda;
        } else if constexpr (std::is_same_v<T, HawkesParams>) {
          const double s_j = detail::hawkes_excitation(p, t_j, history.event_times, true);
          return p.lambda + p.alpha * s_j * std::exp(-p.gamma * (t - t_j));
        } else {
          return std::exp(p.mu * (t - history.origin) -
                          p.alpha * static_cast<double>(history.size()));
        }
      },
      model);
  const double surv = std::exp(-comp);
  return {lam * surv, 1.0 - surv};
}

// ---------------------------------------------------------------------------
// Intensity validity (positivity + divergence of the compensator)

struct ValidityReport {
  bool positive = true;
  double min_intensity = std::numeric_limits<double>::infinity();
  std::vector<double> horizons;
  std::vector<double> compensators;  // cumulative integral at each horizon
  bool diverges = false;             // compensator still growing at the last horizon
  double cdf_at_last = 0.0;          // F*(T_max) = 1 - exp(-compensator)
  bool cdf_reaches_one = false;      // cdf_at_last >= 1 - epsilon
  bool valid = false;
};

// Checks whether a scalar intensity function defines a proper next-event
// distribution: lambda must stay positive and its integral must keep growing
// along the horizon schedule (a plateau means F*(inf) < 1).
inline ValidityReport validate_intensity(const std::function<double(double)>& lambda_fn,
                                         double t_j, const std::vector<double>& horizons,
                                         double epsilon = 1e-6) {
  if (horizons.empty()) throw std::invalid_argument("validate_intensity: empty horizon schedule");
  double prev = t_j;
  for (double h : horizons) {
    if (!(h > prev)) throw std::invalid_argument("validate_intensity: horizons must increase past t_j");
    prev = h;
  }

  ValidityReport report;
  report.horizons = horizons;
  double left = t_j, total = 0.0;
  for (double h : horizons) {
    for (int i = 0; i <= 64; ++i) {
      const double t = left + (h - left) * i / 64.0;
      const double v = lambda_fn(t);
      report.min_intensity = std::min(report.min_intensity, v);
      if (!(v > 0.0)) report.positive = false;
    }
    total += numerics::integrate_or_throw(lambda_fn, left, h,
                                          numerics::Tolerance{1e-12, 1e-10, 4000});
    report.compensators.push_back(total);
    left = h;
  }
  const std::size_t m = report.compensators.size();
  if (m >= 2) {
    const double before = report.compensators[m - 2];
    const double growth = (report.compensators[m - 1] - before) / std::max(before, 1e-300);
    report.diverges = growth >= 1e-6;
  } else {
    report.diverges = report.compensators.back() > 1.0 / epsilon;
  }
  report.cdf_at_last = 1.0 - std::exp(-report.compensators.back());
  report.cdf_reaches_one = report.cdf_at_last >= 1.0 - epsilon;
  report.valid = report.positive && report.diverges;
  return report;
}

// ---------------------------------------------------------------------------
// Simulation by Ogata thinning

struct LocalBound {
  double bound;        // intensity upper bound from the query time
  double valid_until;  // bound holds on (t, valid_until]
};

// Generic thinning driver for custom intensities. `intensity_fn` receives the
// candidate time and the accepted events so far; `bound_fn` must dominate the
// intensity on its validity window. A missing bound is an unsupported model.
inline std::vector<double> sample_thinning_fn(
    const std::function<double(double, const std::vector<double>&)>& intensity_fn,
    const std::function<LocalBound(double, const std::vector<double>&)>& bound_fn,
    double t_start, double t_end, std::uint64_t seed) {
  if (!(t_start < t_end)) throw std::invalid_argument("sample_thinning: t_start must precede t_end");
  if (!bound_fn)
    throw std::invalid_argument("sample_thinning: model provides no local intensity upper bound");
  Rng rng(seed);
  std::vector<double> times;
  double s = t_start;
  while (s < t_end) {
    const LocalBound lb = bound_fn(s, times);
    if (!(lb.bound > 0.0)) throw std::runtime_error("sample_thinning: non-positive bound");
    if (!(lb.valid_until > s)) throw std::runtime_error("sample_thinning: empty bound window");
    const double window_end = std::min(lb.valid_until, t_end);
    const double cand = s + rng.exponential(lb.bound);
    if (cand > window_end) {
      if (window_end >= t_end) break;
      s = window_end;
      continue;
    }
    const double u = rng.uniform() * lb.bound;
    if (u <= intensity_fn(cand, times)) times.push_back(cand);
    s = cand;
  }
  return times;
}

// Family-specific thinning with incremental excitation state.
inline std::vector<double> sample_thinning(const ClassicalModel& model, double t_start,
                                           double t_end, std::uint64_t seed) {
  if (!(t_start < t_end)) throw std::invalid_argument("sample_thinning: t_start must precede t_end");
  std::visit([](const auto& p) { p.validate(); }, model);
  Rng rng(seed);
  std::vector<double> times;

  if (const auto* p = std::get_if<PoissonParams>(&model)) {
    // The constant intensity is its own tight bound; every proposal lands.
    double s = t_start;
    while (true) {
      const double cand = s + rng.exponential(p->lambda);
      if (cand > t_end) break;
      times.push_back(cand);
      s = cand;
    }
    return times;
  }

  if (const auto* p = std::get_if<HawkesParams>(&model)) {
    double s = t_start;
    double excitation = 0.0;  // sum of exp(-gamma (s - t_i)) over accepted events
    while (s < t_end) {
      const double bound = p->lambda + p->alpha * excitation;
      const double delta = rng.exponential(bound);
      const double cand = s + delta;
      if (cand > t_end) break;
      const double decayed = excitation * std::exp(-p->gamma * delta);
      const double lam = p->lambda + p->alpha * decayed;
      const double u = rng.uniform() * bound;
      excitation = decayed;
      if (u <= lam) {
        times.push_back(cand);
        excitation += 1.0;
      }
      s = cand;
    }
    return times;
  }

  const auto& p = std::get<SelfCorrectingParams>(model);
  double s = t_start;
  std::size_t n = 0;
  const double window = std::log(2.0) / p.mu;  // intensity at most doubles per window
  while (s < t_end) {
    const double lam_s = std::exp(p.mu * (s - t_start) - p.alpha * static_cast<double>(n));
    const double bound = 2.0 * lam_s;
    const double window_end = std::min(s + window, t_end);
    const double cand = s + rng.exponential(bound);
    if (cand > window_end) {
      if (window_end >= t_end) break;
      s = window_end;
      continue;
    }
    const double lam = std::exp(p.mu * (cand - t_start) - p.alpha * static_cast<double>(n));
    const double u = rng.uniform() * bound;
    if (u <= lam) {
      times.push_back(cand);
      ++n;
    }
    s = cand;
  }
  return times;
}

// ---------------------------------------------------------------------------
// Pooled maximum likelihood

// Log-likelihood of the event times, pooled over sequences. The observation
// window of each sequence ends at its last event, so there is no terminal
// survival term: ll = sum_i log f*(t_i).
inline double log_likelihood(const ClassicalModel& model, const std::vector<History>& sequences) {
  std::visit([](const auto& p) { p.validate(); }, model);
  double ll = 0.0;
  for (const auto& h : sequences) {
    h.validate();
    if (h.event_times.empty()) continue;

    if (const auto* p = std::get_if<PoissonParams>(&model)) {
      ll += static_cast<double>(h.size()) * std::log(p->lambda) -
            p->lambda * (h.last_time() - h.origin);
    } else if (const auto* p = std::get_if<HawkesParams>(&model)) {
      double a = 0.0;  // excitation sum just before event i
      double prev = 0.0;
      const double t_n = h.last_time();
      for (std::size_t i = 0; i < h.size(); ++i) {
        const double t = h.event_times[i];
        if (i > 0) a = std::exp(-p->gamma * (t - prev)) * (a + 1.0);
        ll += std::log(p->lambda + p->alpha * a);
        // expm1 keeps the compensator accurate deep into the gamma -> 0 regime
        // the optimizer may probe.
        ll -= (p->alpha / p->gamma) * (-std::expm1(-p->gamma * (t_n - t)));
        prev = t;
      }
      ll -= p->lambda * (t_n - h.origin);
    } else {
      const auto& sp = std::get<SelfCorrectingParams>(model);
      double prev = 0.0;
      for (std::size_t i = 0; i < h.size(); ++i) {
        const double si = h.event_times[i] - h.origin;
        const double k = static_cast<double>(i);
        const double base = std::exp(sp.mu * prev - sp.alpha * k);
        ll += sp.mu * si - sp.alpha * k - base * std::expm1(sp.mu * (si - prev)) / sp.mu;
        prev = si;
      }
    }
  }
  return ll;
}

struct FitResult {
  ClassicalModel model;
  bool converged = false;
  std::size_t iterations = 0;
  double grad_norm = 0.0;
  double log_lik = -std::numeric_limits<double>::infinity();
};

namespace detail {

struct LlGrad {
  double ll;
  std::vector<double> grad;  // with respect to the raw (positive) parameters
};

inline LlGrad hawkes_ll_grad(const HawkesParams& p, const std::vector<History>& seqs) {
  LlGrad out{0.0, {0.0, 0.0, 0.0}};  // d/dlambda, d/dalpha, d/dgamma
  for (const auto& h : seqs) {
    if (h.event_times.empty()) continue;
    const double t_n = h.last_time();
    double a = 0.0, b = 0.0, prev = 0.0;
    for (std::size_t i = 0; i < h.size(); ++i) {
      const double t = h.event_times[i];
      if (i > 0) {
        const double d = t - prev;
        const double e = std::exp(-p.gamma * d);
        b = e * (b + d * (a + 1.0));
        a = e * (a + 1.0);
      }
      const double lam = p.lambda + p.alpha * a;
      out.ll += std::log(lam);
      out.grad[0] += 1.0 / lam;
      out.grad[1] += a / lam;
      out.grad[2] += -p.alpha * b / lam;

      const double u = t_n - t;
      const double eu = std::exp(-p.gamma * u);
      const double em = -std::expm1(-p.gamma * u);  // 1 - e^{-gamma u}, cancellation-free
      out.ll -= (p.alpha / p.gamma) * em;
      out.grad[1] -= em / p.gamma;
      out.grad[2] += (p.alpha / (p.gamma * p.gamma)) * em - (p.alpha / p.gamma) * u * eu;
      prev = t;
    }
    out.ll -= p.lambda * (t_n - h.origin);
    out.grad[0] -= t_n - h.origin;
  }
  return out;
}

inline LlGrad self_correcting_ll_grad(const SelfCorrectingParams& p,
                                      const std::vector<History>& seqs) {
  LlGrad out{0.0, {0.0, 0.0}};  // d/dmu, d/dalpha
  for (const auto& h : seqs) {
    if (h.event_times.empty()) continue;
    double prev = 0.0;
    for (std::size_t i = 0; i < h.size(); ++i) {
      const double si = h.event_times[i] - h.origin;
      const double k = static_cast<double>(i);
      const double d = si - prev;
      const double start = std::exp(p.mu * prev - p.alpha * k);  // intensity at segment start
      const double diff = start * std::expm1(p.mu * d);          // E_i - S_i, cancellation-free
      out.ll += p.mu * si - p.alpha * k - diff / p.mu;
      // s_i E_i - s_{i-1} S_i = s_i (E_i - S_i) + S_i (s_i - s_{i-1})
      out.grad[0] += si + diff / (p.mu * p.mu) - (si * diff + start * d) / p.mu;
      out.grad[1] += -k + k * diff / p.mu;
      prev = si;
    }
  }
  return out;
}

}  // namespace detail

// Maximum likelihood fit pooled over all sequences. Poisson is closed form;
// Hawkes and self-correcting run BFGS on log-parameters (positivity by
// construction) with analytic gradients.
inline FitResult fit_mle(const std::vector<History>& sequences, Family family) {
  std::size_t total_events = 0;
  double total_time = 0.0;
  for (const auto& h : sequences) {
    h.validate();
    total_events += h.size();
    total_time += h.last_time() - h.origin;
  }
  if (total_events == 0) throw std::invalid_argument("fit_mle: no events in the data");

  if (family == Family::poisson) {
    if (!(total_time > 0.0))
      throw std::invalid_argument("fit_mle: zero observed time, Poisson rate undefined");
    FitResult res;
    res.model = PoissonParams{static_cast<double>(total_events) / total_time};
    res.converged = true;
    res.log_lik = log_likelihood(res.model, sequences);
    return res;
  }

  const double rate = total_time > 0.0 ? static_cast<double>(total_events) / total_time : 1.0;
  optim::BfgsOptions opts;
  opts.grad_tol = 1e-6;
  opts.max_iterations = 600;

  FitResult res;
  if (family == Family::hawkes) {
    auto objective = [&](const std::vector<double>& x, std::vector<double>& grad) {
      const HawkesParams p{std::exp(x[0]), std::exp(x[1]), std::exp(x[2])};
      const auto lg = detail::hawkes_ll_grad(p, sequences);
      grad = {-lg.grad[0] * p.lambda, -lg.grad[1] * p.alpha, -lg.grad[2] * p.gamma};
      return -lg.ll;
    };
    const std::vector<double> x0 = {std::log(0.5 * rate), std::log(0.5), std::log(1.0)};
    const auto r = optim::bfgs_minimize(objective, x0, opts);
    res.model = HawkesParams{std::exp(r.x[0]), std::exp(r.x[1]), std::exp(r.x[2])};
    res.converged = r.converged;
    res.iterations = r.iterations;
    res.grad_norm = r.grad_norm;
    res.log_lik = -r.value;
    return res;
  }

  auto objective = [&](const std::vector<double>& x, std::vector<double>& grad) {
    const SelfCorrectingParams p{std::exp(x[0]), std::exp(x[1])};
    const auto lg = detail::self_correcting_ll_grad(p, sequences);
    grad = {-lg.grad[0] * p.mu, -lg.grad[1] * p.alpha};
    return -lg.ll;
  };
  // Start on the stationarity manifold mu = alpha * rate to keep the
  // exponentials in the likelihood from overflowing on long sequences.
  const std::vector<double> x0 = {std::log(std::max(0.7 * rate, 1e-9)), std::log(0.7)};
  const auto r = optim::bfgs_minimize(objective, x0, opts);
  res.model = SelfCorrectingParams{std::exp(r.x[0]), std::exp(r.x[1])};
  res.converged = r.converged;
  res.iterations = r.iterations;
  res.grad_norm = r.grad_norm;
  res.log_lik = -r.value;
  return res;
}

// Expected time of the next event: t_j + integral of dt * f*(t_j + dt).
// Poisson is closed form; the other families integrate their closed-form
// density numerically.
inline double expected_next_time(const ClassicalModel& model, const History& history) {
  history.validate();
  const double t_j = history.last_time();
  if (const auto* p = std::get_if<PoissonParams>(&model)) {
    p->validate();
    return t_j + 1.0 / p->lambda;
  }
  const auto mean = numerics::integrate_adaptive(
      [&](double dt) { return dt * next_event_pdf_cdf(model, t_j + dt, history).density; }, 0.0,
      std::numeric_limits<double>::infinity(), numerics::Tolerance{1e-12, 1e-9, 6000});
  if (!mean.converged || !std::isfinite(mean.value))
    throw numerics::QuadratureError("expected_next_time: divergent or non-convergent integral",
                                    mean.value, mean.error_bound);
  return t_j + mean.value;
}

}  // namespace tpp::classical
