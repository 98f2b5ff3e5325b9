// Command-line driver: simulate | train | fit | evaluate | export-arrival-pattern.
//
// Every command reads an optional JSON config file (its own section, or the
// whole object) with explicit flags taking precedence, runs fully seeded, and
// embeds the resolved configuration in its output files. Errors leave a
// machine-readable JSON object on stderr; exit codes: 2 config/validation,
// 3 I/O or file format, 4 numeric/training failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <array>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "tpp/classical.hpp"
#include "tpp/data.hpp"
#include "tpp/markov.hpp"
#include "tpp/metrics.hpp"
#include "tpp/tpm.hpp"

namespace {

using nlohmann::json;

class CliError : public std::exception {
 public:
  CliError(int code, std::string message, json detail = {})
      : code(code), message(std::move(message)), detail(std::move(detail)) {}
  const char* what() const noexcept override { return message.c_str(); }
  int code;
  std::string message;
  json detail;
};

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw CliError(3, "cannot write " + path);
  out << content;
  if (!out) throw CliError(3, "write failed for " + path);
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CliError(3, "cannot read " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw CliError(3, path + ": " + e.what());
  }
}

// Config file section for a command: an explicit --section name, the
// command's own key, or the whole object.
json config_section(const std::string& path, const std::string& command,
                    const std::string& section) {
  if (path.empty()) return json::object();
  const json whole = read_json_file(path);
  if (!section.empty()) {
    if (!whole.contains(section))
      throw CliError(2, "config file has no section '" + section + "'");
    return whole.at(section);
  }
  if (whole.contains(command)) return whole.at(command);
  return whole;
}

std::string data_file(const std::string& prefix) { return prefix + ".jsonl"; }
std::string header_file(const std::string& prefix) { return prefix + ".header.json"; }

tpp::data::Dataset load_validated(const std::string& prefix) {
  tpp::data::Dataset ds;
  try {
    ds = tpp::data::load_dataset(data_file(prefix), header_file(prefix));
  } catch (const std::runtime_error& e) {
    throw CliError(3, e.what());
  }
  const auto errors = tpp::data::validate_dataset(ds);
  if (!errors.empty()) {
    json violations = json::array();
    for (const auto& e : errors)
      violations.push_back({{"sequence", e.sequence_id}, {"field", e.field},
                            {"message", e.message}});
    throw CliError(2, "dataset validation failed", {{"violations", violations}});
  }
  return ds;
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateArgs {
  std::string config_path, section, out = "dataset";
  std::string mode;  // synth | poisson | hawkes | selfcorrecting
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> sequences;
  std::optional<double> t_end, frame_rate;
  std::optional<double> lambda, alpha, gamma, mu;
};

void run_simulate(const SimulateArgs& args) {
  json cfg = config_section(args.config_path, "simulate", args.section);
  const std::string mode = args.mode.empty() ? cfg.value("mode", "synth") : args.mode;

  tpp::data::Dataset ds;
  json resolved;
  if (mode == "synth") {
    tpp::data::SynthConfig synth;
    try {
      synth = tpp::data::SynthConfig::from_json(cfg);
    } catch (const json::exception& e) {
      throw CliError(2, std::string("invalid synthetic config: ") + e.what());
    }
    if (args.seed) synth.seed = *args.seed;
    if (args.sequences) synth.sequences = *args.sequences;
    if (args.frame_rate) synth.frame_rate = *args.frame_rate;
    synth.validate();
    ds = tpp::data::generate_synthetic(synth);
    resolved = {{"mode", "synth"}, {"config", synth.to_json()}, {"seed", synth.seed}};
  } else {
    const auto family = tpp::classical::family_from_name(mode);
    const double t_end = args.t_end.value_or(cfg.value("t_end", 100.0));
    const double frame_rate = args.frame_rate.value_or(cfg.value("frame_rate", 20.0));
    const std::size_t sequences = args.sequences.value_or(cfg.value("sequences", std::size_t{50}));
    const std::uint64_t seed = args.seed.value_or(cfg.value("seed", std::uint64_t{1}));
    if (!(t_end > 0.0) || !(frame_rate > 0.0) || sequences < 1)
      throw CliError(2, "simulate: t_end, frame_rate and sequences must be positive");

    tpp::classical::ClassicalModel model;
    json params;
    if (family == tpp::classical::Family::poisson) {
      const double lambda = args.lambda.value_or(cfg.value("lambda", 1.0));
      model = tpp::classical::PoissonParams{lambda};
      params = {{"lambda", lambda}};
    } else if (family == tpp::classical::Family::hawkes) {
      const double lambda = args.lambda.value_or(cfg.value("lambda", 0.5));
      const double alpha = args.alpha.value_or(cfg.value("alpha", 0.8));
      const double gamma = args.gamma.value_or(cfg.value("gamma", 1.2));
      model = tpp::classical::HawkesParams{lambda, alpha, gamma};
      params = {{"lambda", lambda}, {"alpha", alpha}, {"gamma", gamma}};
    } else {
      const double mu = args.mu.value_or(cfg.value("mu", 1.0));
      const double alpha = args.alpha.value_or(cfg.value("alpha", 0.5));
      model = tpp::classical::SelfCorrectingParams{mu, alpha};
      params = {{"mu", mu}, {"alpha", alpha}};
    }
    try {
      std::visit([](const auto& p) { p.validate(); }, model);
    } catch (const std::invalid_argument& e) {
      throw CliError(2, e.what());
    }

    // Marker-only sequences: a single "event" class on a fixed frame grid.
    ds.class_names = {"event"};
    ds.frame_rate = frame_rate;
    const double dt = 1.0 / frame_rate;
    for (std::size_t s = 0; s < sequences; ++s) {
      const auto times = tpp::classical::sample_thinning(model, 0.0, t_end, seed + s);
      if (times.empty()) continue;  // no events, nothing to learn from
      tpp::data::EventSequence seq;
      seq.id = "seq-" + std::to_string(s);
      std::vector<std::size_t> idx;
      std::size_t prev = 0;
      for (double t : times) {
        const auto k = static_cast<std::size_t>(std::max<long long>(
            std::llround(t * frame_rate), static_cast<long long>(prev) + 1));
        idx.push_back(k);
        prev = k;
      }
      for (std::size_t f = 0; f <= idx.back(); ++f)
        seq.frames.push_back({static_cast<double>(f) * dt, {0.0}});
      for (std::size_t e = 0; e < idx.size(); ++e)
        seq.events.push_back({idx[e], static_cast<double>(idx[e]) * dt, 0, 0.0, 0.0});
      ds.sequences.push_back(std::move(seq));
    }
    if (ds.sequences.empty()) throw CliError(4, "simulate: no sequence produced any event");
    resolved = {{"mode", mode},      {"params", params},         {"t_end", t_end},
                {"frame_rate", frame_rate}, {"sequences", sequences}, {"seed", seed}};
  }

  ds.provenance = {{"command", "simulate"}, {"resolved", resolved}};
  const auto errors = tpp::data::validate_dataset(ds);
  if (!errors.empty()) throw CliError(4, "generated dataset failed validation");
  try {
    tpp::data::save_dataset(ds, data_file(args.out), header_file(args.out));
  } catch (const std::runtime_error& e) {
    throw CliError(3, e.what());
  }
  std::cout << json{{"written", {data_file(args.out), header_file(args.out)}},
                    {"sequences", ds.sequences.size()}}
                   .dump()
            << "\n";
}

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
  std::string config_path, section, data, out = "model";
  std::string head;  // A | B
  bool regression = false;
  std::optional<std::size_t> epochs;
  std::optional<double> learning_rate;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> hidden, encoder_dim;
};

void run_train(const TrainArgs& args) {
  if (args.data.empty()) throw CliError(2, "train: --data is required");
  json cfg = config_section(args.config_path, "train", args.section);

  tpp::tpm::TpmConfig config;
  try {
    config = tpp::tpm::TpmConfig::from_json(cfg);
  } catch (const std::exception& e) {
    throw CliError(2, std::string("invalid train config: ") + e.what());
  }
  if (!args.head.empty()) config.head = tpp::tpm::head_from_name(args.head);
  if (args.regression) config.head = tpp::tpm::HeadKind::regression;
  if (args.epochs) config.epochs = *args.epochs;
  if (args.learning_rate) config.learning_rate = *args.learning_rate;
  if (args.seed) config.seed = *args.seed;
  if (args.hidden) config.hidden_lower = config.hidden_higher = *args.hidden;
  if (args.encoder_dim) config.encoder_dim = *args.encoder_dim;
  try {
    config.validate();
  } catch (const std::invalid_argument& e) {
    throw CliError(2, e.what());
  }

  const auto dataset = load_validated(args.data);
  tpp::tpm::TrainResult result;
  try {
    result = tpp::tpm::train(dataset, config);
  } catch (const tpp::tpm::TrainingDiverged& e) {
    throw CliError(4, e.what(), {{"epoch", e.epoch}});
  } catch (const std::invalid_argument& e) {
    throw CliError(2, e.what());
  }

  json checkpoint = tpp::tpm::model_to_json(result.model);
  checkpoint["provenance"] = {{"command", "train"}, {"data", args.data}};
  write_file(args.out + ".json", checkpoint.dump(2) + "\n");

  json entries = json::array();
  for (const auto& e : result.log)
    entries.push_back({{"epoch", e.epoch}, {"objective", e.objective}});
  const json log{{"format", "tpp-train-log"},
                 {"config", config.to_json()},
                 {"entries", entries}};
  write_file(args.out + ".log.json", log.dump(2) + "\n");
  std::cout << json{{"written", {args.out + ".json", args.out + ".log.json"}},
                    {"final_objective", result.log.back().objective}}
                   .dump()
            << "\n";
}

// ---------------------------------------------------------------------------
// fit

struct FitArgs {
  std::string config_path, section, data, out = "fit";
  std::string family;
  std::optional<std::size_t> markov_k;
};

void run_fit(const FitArgs& args) {
  if (args.data.empty()) throw CliError(2, "fit: --data is required");
  json cfg = config_section(args.config_path, "fit", args.section);
  const std::string family =
      args.family.empty() ? cfg.value("family", std::string{}) : args.family;
  std::optional<std::size_t> markov_k = args.markov_k;
  if (!markov_k && cfg.contains("markov_k")) markov_k = cfg["markov_k"].get<std::size_t>();
  if (family.empty() == !markov_k)
    throw CliError(2, "fit: choose exactly one of --family or --markov-k");

  const auto dataset = load_validated(args.data);
  json out;
  if (markov_k) {
    std::vector<tpp::markov::MarkedSequence> corpus;
    for (const auto& seq : dataset.sequences) {
      tpp::markov::MarkedSequence ms;
      for (const auto& ev : seq.events)
        ms.push_back({dataset.class_names.at(static_cast<std::size_t>(ev.category)), ev.x, ev.y});
      corpus.push_back(std::move(ms));
    }
    tpp::markov::MarkovTable table;
    try {
      table = tpp::markov::fit_markov(corpus, *markov_k);
    } catch (const std::invalid_argument& e) {
      throw CliError(2, e.what());
    }
    out = tpp::markov::table_to_json(table);
  } else {
    std::vector<tpp::classical::History> histories;
    for (const auto& seq : dataset.sequences) histories.push_back(tpp::data::to_history(seq));
    tpp::classical::FitResult fit;
    try {
      fit = tpp::classical::fit_mle(histories, tpp::classical::family_from_name(family));
    } catch (const std::invalid_argument& e) {
      throw CliError(2, e.what());
    }
    json params;
    if (const auto* p = std::get_if<tpp::classical::PoissonParams>(&fit.model)) {
      params = {{"lambda", p->lambda}};
    } else if (const auto* p = std::get_if<tpp::classical::HawkesParams>(&fit.model)) {
      params = {{"lambda", p->lambda}, {"alpha", p->alpha}, {"gamma", p->gamma}};
    } else {
      const auto& sc = std::get<tpp::classical::SelfCorrectingParams>(fit.model);
      params = {{"mu", sc.mu}, {"alpha", sc.alpha}};
    }
    out = {{"format", "tpp-model"},
           {"version", 1},
           {"model_type", "classical"},
           {"family", family},
           {"params", params},
           {"fit",
            {{"converged", fit.converged},
             {"iterations", fit.iterations},
             {"grad_norm", fit.grad_norm},
             {"log_lik", fit.log_lik}}}};
  }
  out["provenance"] = {{"command", "fit"}, {"data", args.data}};
  write_file(args.out + ".json", out.dump(2) + "\n");
  std::cout << json{{"written", {args.out + ".json"}}}.dump() << "\n";
}

// ---------------------------------------------------------------------------
// evaluate + export

tpp::classical::ClassicalModel classical_from_json(const json& j) {
  const std::string family = j.at("family").get<std::string>();
  const json& p = j.at("params");
  switch (tpp::classical::family_from_name(family)) {
    case tpp::classical::Family::poisson:
      return tpp::classical::PoissonParams{p.at("lambda").get<double>()};
    case tpp::classical::Family::hawkes:
      return tpp::classical::HawkesParams{p.at("lambda").get<double>(),
                                          p.at("alpha").get<double>(),
                                          p.at("gamma").get<double>()};
    case tpp::classical::Family::self_correcting:
      return tpp::classical::SelfCorrectingParams{p.at("mu").get<double>(),
                                                  p.at("alpha").get<double>()};
  }
  throw CliError(2, "unknown classical family: " + family);
}

// Per-transition samples for one sequence under the given model file.
std::vector<tpp::metrics::TransitionSample> evaluate_sequence(
    const json& model_json, const std::string& model_type, const tpp::data::Dataset& dataset,
    const tpp::data::EventSequence& seq, const tpp::tpm::TpmModel* tpm_model) {
  std::vector<tpp::metrics::TransitionSample> samples;
  if (seq.events.size() < 2) return samples;
  const std::size_t n_transitions = seq.events.size() - 1;
  samples.resize(n_transitions);
  for (std::size_t i = 0; i < n_transitions; ++i) {
    auto& s = samples[i];
    const auto& cur = seq.events[i];
    const auto& nxt = seq.events[i + 1];
    s.current_time = cur.t;
    s.truth_time = nxt.t;
    s.truth_location = {nxt.x, nxt.y};
    s.truth_class = nxt.category;
  }

  if (model_type == "tpm") {
    const auto records = tpp::tpm::evaluate_teacher_forced(*tpm_model, seq);
    for (std::size_t i = 0; i < n_transitions; ++i) {
      samples[i].predicted_time = records[i].predicted_time;
      samples[i].predicted_location = records[i].predicted_location;
      samples[i].class_scores = records[i].category_distribution;
    }
  } else if (model_type == "classical") {
    const auto model = classical_from_json(model_json);
    tpp::classical::History hist = tpp::data::to_history(seq);
    for (std::size_t i = 0; i < n_transitions; ++i) {
      tpp::classical::History prefix{hist.origin,
                                     {hist.event_times.begin(),
                                      hist.event_times.begin() + static_cast<std::ptrdiff_t>(i + 1)}};
      samples[i].predicted_time = tpp::classical::expected_next_time(model, prefix);
    }
  } else if (model_type == "markov") {
    const auto table = tpp::markov::table_from_json(model_json);
    std::vector<std::string> history;
    for (std::size_t i = 0; i < n_transitions; ++i) {
      const auto& cur = seq.events[i];
      history.push_back(dataset.class_names.at(static_cast<std::size_t>(cur.category)));
      const auto pred = tpp::markov::predict_markov(table, history, {cur.x, cur.y});
      samples[i].predicted_location = pred.location;
      std::vector<double> scores(dataset.class_names.size(), 0.0);
      for (const auto& [cat, p] : pred.distribution) {
        const int idx = dataset.class_index(cat);
        if (idx >= 0) scores[static_cast<std::size_t>(idx)] = p;
      }
      samples[i].class_scores = scores;
    }
  } else if (model_type == "oracle") {
    // Ground-truth injection, for exercising the metrics pipeline.
    for (std::size_t i = 0; i < n_transitions; ++i) {
      samples[i].predicted_time = samples[i].truth_time;
      samples[i].predicted_location = samples[i].truth_location;
      std::vector<double> scores(dataset.class_names.size(), 0.0);
      scores[static_cast<std::size_t>(samples[i].truth_class)] = 1.0;
      samples[i].class_scores = scores;
    }
  } else {
    throw CliError(2, "unsupported model_type: " + model_type);
  }
  return samples;
}

struct EvaluateArgs {
  std::string config_path, section, data, model, out = "report";
};

void run_evaluate(const EvaluateArgs& args) {
  if (args.data.empty() || args.model.empty())
    throw CliError(2, "evaluate: --data and --model are required");
  const auto dataset = load_validated(args.data);
  const json model_json = read_json_file(args.model);
  const std::string model_type = model_json.value("model_type", "");

  std::unique_ptr<tpp::tpm::TpmModel> tpm_model;
  if (model_type == "tpm") {
    try {
      tpm_model = std::make_unique<tpp::tpm::TpmModel>(tpp::tpm::model_from_json(model_json));
    } catch (const std::invalid_argument& e) {
      throw CliError(2, e.what());
    }
    if (tpm_model->class_names != dataset.class_names)
      throw CliError(2, "model and dataset class tables do not match");
  }

  std::vector<tpp::metrics::TransitionSample> samples;
  for (const auto& seq : dataset.sequences) {
    const auto batch =
        evaluate_sequence(model_json, model_type, dataset, seq, tpm_model.get());
    samples.insert(samples.end(), batch.begin(), batch.end());
  }
  if (samples.empty()) throw CliError(2, "evaluate: no transitions in the dataset");

  tpp::metrics::EvalReport report;
  try {
    report = tpp::metrics::build_report(samples, dataset.class_names);
  } catch (const std::invalid_argument& e) {
    throw CliError(2, e.what());
  }
  json out{{"format", "tpp-eval-report"},
           {"report", tpp::metrics::report_to_json(report)},
           {"provenance",
            {{"command", "evaluate"}, {"data", args.data}, {"model", args.model}}}};
  write_file(args.out + ".json", out.dump(2) + "\n");
  write_file(args.out + ".csv", tpp::metrics::report_to_csv(report));
  std::cout << json{{"written", {args.out + ".json", args.out + ".csv"}}}.dump() << "\n";
}

struct ExportArgs {
  std::string config_path, section, data, model, out = "arrival";
  std::size_t points = 400;
};

void run_export(const ExportArgs& args) {
  if (args.data.empty() || args.model.empty())
    throw CliError(2, "export-arrival-pattern: --data and --model are required");
  const auto dataset = load_validated(args.data);
  const json model_json = read_json_file(args.model);
  if (model_json.value("model_type", "") != "tpm")
    throw CliError(2, "export-arrival-pattern needs a tpm checkpoint");
  tpp::tpm::TpmModel model;
  try {
    model = tpp::tpm::model_from_json(model_json);
  } catch (const std::invalid_argument& e) {
    throw CliError(2, e.what());
  }
  if (model.class_names != dataset.class_names)
    throw CliError(2, "model and dataset class tables do not match");
  if (model.config.head == tpp::tpm::HeadKind::regression)
    throw CliError(2, "the regression baseline defines no time density");

  tpp::tpm::DensityOptions density;
  density.points = args.points;

  json out_json = json::array();
  std::string csv = "sequence,transition,current_time,truth_time,predicted_time,t,density\n";
  char buf[256];
  for (const auto& seq : dataset.sequences) {
    if (seq.events.size() < 2) continue;
    const auto records = tpp::tpm::evaluate_teacher_forced(model, seq, &density);
    for (const auto& rec : records) {
      const double truth = seq.events[rec.transition_index + 1].t;
      json grid = json::array(), dens = json::array();
      for (const auto& [t, f] : rec.time_density) {
        grid.push_back(t);
        dens.push_back(f);
        std::snprintf(buf, sizeof(buf), "%s,%zu,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                      seq.id.c_str(), rec.transition_index, rec.current_time, truth,
                      rec.predicted_time, t, f);
        csv += buf;
      }
      out_json.push_back({{"sequence", seq.id},
                          {"transition", rec.transition_index},
                          {"current_time", rec.current_time},
                          {"truth_time", truth},
                          {"predicted_time", rec.predicted_time},
                          {"grid", grid},
                          {"density", dens}});
    }
  }
  if (out_json.empty()) throw CliError(2, "export-arrival-pattern: no transitions to export");

  json wrapper{{"format", "tpp-arrival-pattern"},
               {"provenance",
                {{"command", "export-arrival-pattern"},
                 {"data", args.data},
                 {"model", args.model},
                 {"points", args.points}}},
               {"transitions", out_json}};
  write_file(args.out + ".json", wrapper.dump(2) + "\n");
  write_file(args.out + ".csv", csv);
  std::cout << json{{"written", {args.out + ".json", args.out + ".csv"}}}.dump() << "\n";
}

void emit_error(int code, const std::string& message, const json& detail = {}) {
  json err{{"error", {{"code", code}, {"message", message}}}};
  if (!detail.is_null() && !detail.empty()) err["error"]["detail"] = detail;
  std::cerr << err.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Temporal point process toolkit: simulation, fitting, training and evaluation"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Generate a synthetic or classical dataset");
  sim_cmd->add_option("--config", sim.config_path, "JSON config file");
  sim_cmd->add_option("--section", sim.section, "config section to use");
  sim_cmd->add_option("--out", sim.out, "output path prefix");
  sim_cmd->add_option("--mode", sim.mode, "synth | poisson | hawkes | selfcorrecting");
  sim_cmd->add_option("--seed", sim.seed, "random seed");
  sim_cmd->add_option("--sequences", sim.sequences, "number of sequences");
  sim_cmd->add_option("--t-end", sim.t_end, "simulation horizon (classical modes)");
  sim_cmd->add_option("--frame-rate", sim.frame_rate, "frames per second");
  sim_cmd->add_option("--lambda", sim.lambda, "base rate");
  sim_cmd->add_option("--alpha", sim.alpha, "excitation / inhibition");
  sim_cmd->add_option("--gamma", sim.gamma, "excitation decay");
  sim_cmd->add_option("--mu", sim.mu, "self-correcting growth rate");

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "Train the neural point process model");
  train_cmd->add_option("--config", train.config_path, "JSON config file");
  train_cmd->add_option("--section", train.section, "config section to use");
  train_cmd->add_option("--data", train.data, "dataset path prefix")->required();
  train_cmd->add_option("--out", train.out, "checkpoint path prefix");
  train_cmd->add_option("--head", train.head, "intensity head: A | B");
  train_cmd->add_flag("--baseline-regression", train.regression,
                      "train the squared-error regression baseline instead");
  train_cmd->add_option("--epochs", train.epochs, "training epochs");
  train_cmd->add_option("--lr", train.learning_rate, "learning rate");
  train_cmd->add_option("--seed", train.seed, "random seed");
  train_cmd->add_option("--hidden", train.hidden, "hidden size of both recurrent levels");
  train_cmd->add_option("--encoder-dim", train.encoder_dim, "frame encoder output size");

  FitArgs fit;
  auto* fit_cmd = app.add_subcommand("fit", "Fit a classical point process or Markov baseline");
  fit_cmd->add_option("--config", fit.config_path, "JSON config file");
  fit_cmd->add_option("--section", fit.section, "config section to use");
  fit_cmd->add_option("--data", fit.data, "dataset path prefix")->required();
  fit_cmd->add_option("--out", fit.out, "output path prefix");
  fit_cmd->add_option("--family", fit.family, "poisson | hawkes | selfcorrecting");
  fit_cmd->add_option("--markov-k", fit.markov_k, "fit a k-order Markov table instead");

  EvaluateArgs eval;
  auto* eval_cmd = app.add_subcommand("evaluate", "Teacher-forced evaluation of a model");
  eval_cmd->add_option("--config", eval.config_path, "JSON config file");
  eval_cmd->add_option("--section", eval.section, "config section to use");
  eval_cmd->add_option("--data", eval.data, "dataset path prefix")->required();
  eval_cmd->add_option("--model", eval.model, "model file (checkpoint, fit output, or oracle)")
      ->required();
  eval_cmd->add_option("--out", eval.out, "report path prefix");

  ExportArgs exp;
  auto* exp_cmd = app.add_subcommand("export-arrival-pattern",
                                     "Export per-transition time densities for plotting");
  exp_cmd->add_option("--config", exp.config_path, "JSON config file");
  exp_cmd->add_option("--section", exp.section, "config section to use");
  exp_cmd->add_option("--data", exp.data, "dataset path prefix")->required();
  exp_cmd->add_option("--model", exp.model, "tpm checkpoint")->required();
  exp_cmd->add_option("--out", exp.out, "export path prefix");
  exp_cmd->add_option("--points", exp.points, "grid points per transition");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    emit_error(2, e.what());
    return 2;
  }

  try {
    if (sim_cmd->parsed()) run_simulate(sim);
    if (train_cmd->parsed()) run_train(train);
    if (fit_cmd->parsed()) run_fit(fit);
    if (eval_cmd->parsed()) run_evaluate(eval);
    if (exp_cmd->parsed()) run_export(exp);
  } catch (const CliError& e) {
    emit_error(e.code, e.message, e.detail);
    return e.code;
  } catch (const tpp::tpm::TrainingDiverged& e) {
    emit_error(4, e.what());
    return 4;
  } catch (const tpp::numerics::QuadratureError& e) {
    emit_error(4, e.what());
    return 4;
  } catch (const std::invalid_argument& e) {
    emit_error(2, e.what());
    return 2;
  } catch (const json::exception& e) {
    emit_error(3, e.what());
    return 3;
  } catch (const std::runtime_error& e) {
    emit_error(3, e.what());
    return 3;
  } catch (const std::exception& e) {
    emit_error(1, e.what());
    return 1;
  }
  return 0;
}
