#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "tpp/metrics.hpp"
#include "tpp/random.hpp"

using namespace tpp::metrics;

TEST_CASE("mae", "[metrics]") {
  CHECK(mae({1.0, 2.0}, {1.5, 2.5}) == 0.5);
  CHECK(mae({3.0, -1.0, 7.0}, {3.0, -1.0, 7.0}) == 0.0);
  CHECK_THROWS_AS(mae({1.0}, {1.0, 2.0}), std::invalid_argument);
  CHECK_THROWS_AS(mae({}, {}), std::invalid_argument);
  CHECK(space_mae({{0.0, 0.0}}, {{3.0, 4.0}}) == 5.0);
}

TEST_CASE("deviation_rate reports both readings", "[metrics]") {
  const auto perfect = deviation_rate(2.0, 1.0, 2.0);
  CHECK(perfect.as_written == 1.0);
  CHECK(perfect.error == 0.0);

  const auto stuck = deviation_rate(1.0, 1.0, 2.0);
  CHECK(stuck.as_written == 0.0);
  CHECK(stuck.error == 1.0);

  const auto over = deviation_rate(3.0, 0.0, 2.0);
  CHECK(over.as_written == 1.5);
  CHECK(over.error == 0.5);

  CHECK_THROWS_AS(deviation_rate(1.0, 2.0, 2.0), std::invalid_argument);

  // Scale invariance: multiplying all three times by c changes nothing.
  tpp::Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const double cur = rng.uniform(0.0, 10.0);
    const double truth = cur + rng.uniform(0.1, 5.0);
    const double pred = cur + rng.uniform(-1.0, 6.0);
    const double c = rng.uniform(0.1, 50.0);
    const auto base = deviation_rate(pred, cur, truth);
    const auto scaled = deviation_rate(c * pred, c * cur, c * truth);
    CHECK(scaled.as_written == Catch::Approx(base.as_written).epsilon(1e-12));
    CHECK(scaled.error == Catch::Approx(base.error).epsilon(1e-12));
  }
}

TEST_CASE("average_precision", "[metrics]") {
  // Perfect ranking: all positives above all negatives.
  CHECK(average_precision({0.9, 0.8, 0.2, 0.1}, {1, 1, 0, 0}, 1).value() == 1.0);
  // Hand-enumerated precision at positives.
  CHECK(average_precision({0.9, 0.8, 0.1}, {1, 0, 1}, 1).value() ==
        Catch::Approx((1.0 + 2.0 / 3.0) / 2.0).epsilon(1e-12));
  CHECK(average_precision({0.9, 0.8, 0.1}, {1, 0, 1}, 1).value() ==
        Catch::Approx(0.83333).margin(1e-5));
  // Single positive event.
  CHECK(average_precision({0.42}, {3}, 3).value() == 1.0);
  // No positives: undefined.
  CHECK_FALSE(average_precision({0.9, 0.1}, {0, 0}, 1).has_value());
  CHECK_THROWS_AS(average_precision({}, {}, 0), std::invalid_argument);

  // Invariance under strictly monotone score transformations.
  tpp::Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> scores;
    std::vector<int> truths;
    for (int i = 0; i < 30; ++i) {
      scores.push_back(rng.uniform(-3.0, 3.0));
      truths.push_back(static_cast<int>(rng.integer(3)));
    }
    const auto base = average_precision(scores, truths, 1);
    std::vector<double> warped(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i)
      warped[i] = std::exp(0.7 * scores[i]) + 2.0;
    const auto transformed = average_precision(warped, truths, 1);
    REQUIRE(base.has_value());
    CHECK(transformed.value() == Catch::Approx(base.value()).epsilon(1e-12));
  }
}

TEST_CASE("build_report aggregates per-transition values as plain means", "[metrics]") {
  tpp::Rng rng(21);
  std::vector<TransitionSample> samples;
  std::vector<DeviationRate> rates;
  const std::vector<std::string> classes = {"a", "b", "c"};
  for (int i = 0; i < 50; ++i) {
    TransitionSample s;
    s.current_time = rng.uniform(0.0, 5.0);
    s.truth_time = s.current_time + rng.uniform(0.2, 3.0);
    s.truth_location = {rng.uniform(0, 90), rng.uniform(0, 50)};
    s.truth_class = static_cast<int>(rng.integer(2));  // class c never appears
    s.predicted_time = s.current_time + rng.uniform(0.1, 4.0);
    s.predicted_location = std::array<double, 2>{rng.uniform(0, 90), rng.uniform(0, 50)};
    s.class_scores = std::vector<double>{rng.uniform(), rng.uniform(), rng.uniform()};
    rates.push_back(deviation_rate(*s.predicted_time, s.current_time, s.truth_time));
    samples.push_back(s);
  }
  const auto report = build_report(samples, classes);
  CHECK(report.n_transitions == 50);

  double sum_w = 0.0, sum_e = 0.0;
  for (const auto& r : rates) {
    sum_w += r.as_written;
    sum_e += r.error;
  }
  CHECK(std::abs(*report.mdr_as_written - sum_w / 50.0) <= 1e-12);
  CHECK(std::abs(*report.mdr_error - sum_e / 50.0) <= 1e-12);

  // Class c has no positives: excluded from mAP, noted in the report.
  CHECK(report.per_class_ap.count("c") == 0);
  REQUIRE(report.excluded_classes.size() == 1);
  CHECK(report.excluded_classes[0] == "c");
  REQUIRE(report.map.has_value());
  CHECK(*report.map == Catch::Approx((report.per_class_ap.at("a") +
                                      report.per_class_ap.at("b")) / 2.0).epsilon(1e-12));
}

TEST_CASE("perfect predictor scores perfectly", "[metrics]") {
  std::vector<TransitionSample> samples;
  const std::vector<std::string> classes = {"a", "b"};
  for (int i = 0; i < 10; ++i) {
    TransitionSample s;
    s.current_time = i;
    s.truth_time = i + 1.0;
    s.truth_location = {1.0 * i, 2.0 * i};
    s.truth_class = i % 2;
    s.predicted_time = s.truth_time;
    s.predicted_location = s.truth_location;
    std::vector<double> scores(2, 0.0);
    scores[static_cast<std::size_t>(s.truth_class)] = 1.0;
    s.class_scores = scores;
    samples.push_back(s);
  }
  const auto report = build_report(samples, classes);
  CHECK(*report.time_mae_ms == 0.0);
  CHECK(*report.space_mae == 0.0);
  CHECK(*report.mdr_as_written == 1.0);
  CHECK(*report.mdr_error == 0.0);
  CHECK(*report.map == 1.0);
}

TEST_CASE("report JSON and CSV carry identical numbers", "[metrics]") {
  std::vector<TransitionSample> samples;
  tpp::Rng rng(31);
  for (int i = 0; i < 7; ++i) {
    TransitionSample s;
    s.current_time = rng.uniform(0.0, 2.0);
    s.truth_time = s.current_time + rng.uniform(0.3, 2.0);
    s.truth_location = {rng.uniform(0, 10), rng.uniform(0, 10)};
    s.truth_class = static_cast<int>(rng.integer(2));
    s.predicted_time = s.current_time + rng.uniform(0.1, 3.0);
    s.predicted_location = std::array<double, 2>{rng.uniform(0, 10), rng.uniform(0, 10)};
    s.class_scores = std::vector<double>{rng.uniform(), rng.uniform()};
    samples.push_back(s);
  }
  const auto report = build_report(samples, {"a", "b"});
  const auto j = report_to_json(report);
  const std::string csv = report_to_csv(report);

  // Parse the CSV row back and compare against the JSON values.
  const auto nl = csv.find('\n');
  const std::string header = csv.substr(0, nl);
  std::string row = csv.substr(nl + 1);
  if (!row.empty() && row.back() == '\n') row.pop_back();
  auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (true) {
      const auto comma = s.find(',', pos);
      out.push_back(s.substr(pos, comma - pos));
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    return out;
  };
  const auto cols = split(header);
  const auto cells = split(row);
  REQUIRE(cols.size() == cells.size());
  for (std::size_t i = 0; i < cols.size(); ++i) {
    if (cols[i] == "n_transitions") {
      CHECK(std::stoull(cells[i]) == j["n_transitions"].get<std::size_t>());
    } else if (cols[i].rfind("ap_", 0) == 0) {
      CHECK(std::stod(cells[i]) == j["per_class_ap"][cols[i].substr(3)].get<double>());
    } else {
      CHECK(std::stod(cells[i]) == j[cols[i]].get<double>());
    }
  }
}
