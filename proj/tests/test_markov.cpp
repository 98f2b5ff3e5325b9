#include <catch2/catch_amalgamated.hpp>

#include "tpp/markov.hpp"
#include "tpp/random.hpp"

using namespace tpp::markov;

namespace {

MarkedSequence seq_of(const std::vector<std::string>& cats) {
  MarkedSequence s;
  for (std::size_t i = 0; i < cats.size(); ++i)
    s.push_back({cats[i], static_cast<double>(i), 0.0});
  return s;
}

}  // namespace

TEST_CASE("fit_markov counts transitions by hand-checkable corpora", "[markov]") {
  const auto t = fit_markov({seq_of({"A", "B", "A", "B"})}, 1);
  REQUIRE(t.table.count({"A"}) == 1);
  REQUIRE(t.table.count({"B"}) == 1);
  CHECK(t.table.at({"A"}).next_counts.at("B") == 2);
  CHECK(t.table.at({"B"}).next_counts.at("A") == 1);

  const auto t2 = fit_markov({seq_of({"A", "B", "C"})}, 2);
  REQUIRE(t2.table.count({"A", "B"}) == 1);
  CHECK(t2.table.at({"A", "B"}).next_counts.at("C") == 1);

  CHECK_THROWS_AS(fit_markov({}, 1), std::invalid_argument);
  CHECK_THROWS_AS(fit_markov({seq_of({"A", "B"})}, 0), std::invalid_argument);
}

TEST_CASE("fit_markov accumulates mean space shifts", "[markov]") {
  // Two A->B transitions with shifts (1, 0) and (3, 0).
  MarkedSequence s1 = {{"A", 0.0, 0.0}, {"B", 1.0, 0.0}};
  MarkedSequence s2 = {{"A", 10.0, 5.0}, {"B", 13.0, 5.0}};
  const auto t = fit_markov({s1, s2}, 1);
  const auto shift = t.table.at({"A"}).shifts.at("B").mean();
  CHECK(shift[0] == 2.0);
  CHECK(shift[1] == 0.0);

  const auto pred = predict_markov(t, {"A"}, {100.0, 50.0});
  CHECK(pred.category == "B");
  CHECK(pred.location[0] == 102.0);
  CHECK(pred.location[1] == 50.0);
}

TEST_CASE("predict_markov follows deterministic transitions", "[markov]") {
  const auto t = fit_markov({seq_of({"A", "B", "A", "B"})}, 1);
  CHECK(predict_markov(t, {"B", "A"}, {0, 0}).category == "B");
  CHECK(predict_markov(t, {"A", "B"}, {0, 0}).category == "A");
}

TEST_CASE("predict_markov backs off to majority vote", "[markov]") {
  const auto t = fit_markov({seq_of({"A", "B", "A", "B", "A"})}, 1);
  const auto pred = predict_markov(t, {"X"}, {0, 0});
  CHECK(pred.category == "A");  // corpus majority: A appears 3 times, B twice
  CHECK(pred.context_length == 0);

  // Short history equals using all available history.
  const auto t3 = fit_markov({seq_of({"A", "B", "C", "A", "B", "C"})}, 3);
  const auto short_hist = predict_markov(t3, {"A", "B"}, {0, 0});
  const auto long_hist = predict_markov(t3, {"Z", "A", "B"}, {0, 0});  // Z unseen, backs off
  CHECK(short_hist.category == "C");
  CHECK(long_hist.category == short_hist.category);
}

TEST_CASE("predict_markov breaks ties lexicographically", "[markov]") {
  // One A->B and one A->C transition: tie, resolved to B.
  MarkedSequence s = {{"A", 0, 0}, {"B", 1, 0}, {"A", 2, 0}, {"C", 3, 0}};
  const auto t = fit_markov({s}, 1);
  CHECK(predict_markov(t, {"A"}, {0, 0}).category == "B");

  // 0-order tie between equally frequent categories.
  const auto t0 = fit_markov({seq_of({"D", "C", "D", "C"})}, 1);
  CHECK(predict_markov(t0, {"unseen"}, {0, 0}).category == "C");
}

TEST_CASE("predict_markov never fails and reproduces stored argmaxes", "[markov]") {
  tpp::Rng rng(7);
  const std::vector<std::string> alphabet = {"A", "B", "C", "D"};
  for (std::size_t k : {1, 2, 3}) {
    // Random corpus of <= 100 events.
    std::vector<MarkedSequence> corpus;
    std::size_t total = 0;
    while (total < 90) {
      MarkedSequence s;
      const std::size_t len = 2 + rng.integer(10);
      for (std::size_t i = 0; i < len; ++i)
        s.push_back({alphabet[rng.integer(alphabet.size())], rng.uniform(0, 90),
                     rng.uniform(0, 50)});
      total += len;
      corpus.push_back(s);
    }
    const auto t = fit_markov(corpus, k);

    // All stored counts are at least one.
    for (const auto& [ctx, stats] : t.table) {
      CHECK(!ctx.empty());
      CHECK(ctx.size() <= k);
      for (const auto& [cat, n] : stats.next_counts) CHECK(n >= 1);
    }

    // Fully observed contexts reproduce the empirical argmax.
    for (const auto& [ctx, stats] : t.table) {
      if (ctx.size() != k) continue;
      const auto pred = predict_markov(t, ctx, {0, 0});
      std::size_t best = 0;
      std::string best_cat;
      for (const auto& [cat, n] : stats.next_counts)
        if (n > best) {
          best = n;
          best_cat = cat;
        }
      CHECK(pred.category == best_cat);
      CHECK(pred.context_length == k);
    }

    // Arbitrary garbage histories resolve via the backoff chain.
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<std::string> hist;
      for (std::size_t i = 0; i < rng.integer(5); ++i) hist.push_back("junk");
      const auto pred = predict_markov(t, hist, {0, 0});
      CHECK(!pred.category.empty());
    }
  }
}

TEST_CASE("0-order prediction equals the corpus-wide modal category", "[markov]") {
  const auto t = fit_markov({seq_of({"B", "B", "A", "C", "B"})}, 2);
  const auto pred = predict_markov(t, {}, {1.0, 2.0});
  CHECK(pred.category == "B");
  CHECK(pred.context_length == 0);
}

TEST_CASE("markov table JSON round trip", "[markov]") {
  MarkedSequence s = {{"A", 0, 0}, {"B", 2, 1}, {"A", 5, 1}, {"C", 6, 3}};
  const auto t = fit_markov({s}, 2);
  const auto j = nlohmann::json::parse(table_to_json(t).dump());
  const auto back = table_from_json(j);
  CHECK(back.order == t.order);
  CHECK(back.category_counts == t.category_counts);
  REQUIRE(back.table.size() == t.table.size());
  for (const auto& [ctx, stats] : t.table) {
    REQUIRE(back.table.count(ctx) == 1);
    CHECK(back.table.at(ctx).next_counts == stats.next_counts);
    for (const auto& [cat, shift] : stats.shifts) {
      CHECK(back.table.at(ctx).shifts.at(cat).sum_x == shift.sum_x);
      CHECK(back.table.at(ctx).shifts.at(cat).count == shift.count);
    }
  }
  // Predictions agree after the round trip.
  const auto a = predict_markov(t, {"A"}, {3, 3});
  const auto b = predict_markov(back, {"A"}, {3, 3});
  CHECK(a.category == b.category);
  CHECK(a.location == b.location);

  auto bad = nlohmann::json::parse(table_to_json(t).dump());
  bad["model_type"] = "tpm";
  CHECK_THROWS_AS(table_from_json(bad), std::invalid_argument);
}
