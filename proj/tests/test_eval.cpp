#include <doctest.h>

#include "derail/error.hpp"
#include "derail/eval.hpp"
#include "support.hpp"

using namespace derail;
using namespace derail::test;

namespace {

PredictionOutcome scored(std::int64_t number, double p, ScdStrategy s = ScdStrategy::LeastToMostScd) {
  DerailmentPrediction pred;
  pred.thread_ref = {"a/b", number};
  pred.strategy = s;
  pred.probability = p;
  pred.scd_summary = "s";
  return {pred.thread_ref, s, pred, std::nullopt};
}

PredictionOutcome failed(std::int64_t number, Errc code = Errc::ParseFailure) {
  return {{"a/b", number}, ScdStrategy::LeastToMostScd, std::nullopt, PredictionFailure{code, "predict", "x"}};
}

std::map<ThreadRef, bool> labels(std::initializer_list<std::pair<std::int64_t, bool>> l) {
  std::map<ThreadRef, bool> out;
  for (auto [n, v] : l) out[{"a/b", n}] = v;
  return out;
}

const EvaluationRow& row_at(const EvaluationReport& r, double t) {
  for (const auto& row : r.rows) {
    if (row.threshold == t) return row;
  }
  throw std::runtime_error("no row");
}

}  // namespace

TEST_CASE("metric formulas") {
  CHECK(f1_from(0.76, 0.65).has_value());
  CHECK(round2(*f1_from(0.76, 0.65)) == 0.70);
  CHECK(round2(*f1_from(0.58, 0.81)) == 0.68);
  CHECK(round2(*f1_from(0.20, 0.76)) == 0.32);
  CHECK_FALSE(f1_from(0, 0).has_value());

  ConfusionCounts perfect{3, 0, 2, 0};
  CHECK(precision(perfect) == 1.0);
  CHECK(recall(perfect) == 1.0);
  CHECK(f1(perfect) == 1.0);

  ConfusionCounts none{0, 0, 4, 2};
  CHECK_FALSE(precision(none).has_value());
  CHECK(recall(none) == 0.0);
  CHECK_FALSE(f1(none).has_value());

  CHECK(round2(0.125) == 0.13);
  CHECK(round2(0.675) == 0.68);
  CHECK(round2(-0.125) == -0.13);
}

TEST_CASE("sweep on the 8-thread tally") {
  // Positives 0.85, 0.50, 0.45, 0.20; negatives 0.70, 0.49, 0.10 and a parse failure.
  const std::vector<PredictionOutcome> outcomes = {scored(1, 0.85), scored(2, 0.50), scored(3, 0.45),
                                                   scored(4, 0.20), scored(5, 0.70), scored(6, 0.49),
                                                   scored(7, 0.10), failed(8)};
  const auto l = labels({{1, true}, {2, true}, {3, true}, {4, true}, {5, false}, {6, false}, {7, false}, {8, false}});
  const auto r = sweep(outcomes, l);
  REQUIRE(r.rows.size() == 3);
  CHECK(row_at(r, 0.4).counts == ConfusionCounts{3, 2, 2, 1});
  CHECK(row_at(r, 0.5).counts == ConfusionCounts{2, 1, 3, 2});
  CHECK(row_at(r, 0.6).counts == ConfusionCounts{1, 1, 3, 3});
  CHECK(r.parse_failure_count == 1);
  CHECK(r.summaries.at(ScdStrategy::LeastToMostScd).positives == 4);
  CHECK(r.summaries.at(ScdStrategy::LeastToMostScd).negatives == 4);

  const auto excl = sweep(outcomes, l, kDefaultThresholds, FailurePolicy::Exclude);
  CHECK(row_at(excl, 0.5).counts == ConfusionCounts{2, 1, 2, 2});
  CHECK(excl.summaries.at(ScdStrategy::LeastToMostScd).excluded == 1);
}

TEST_CASE("sweep edge cases") {
  const std::vector<PredictionOutcome> ones = {scored(1, 1.0), scored(2, 1.0)};
  auto r = sweep(ones, labels({{1, true}, {2, true}}), {0.5});
  CHECK(r.rows[0].counts.tp == 2);
  CHECK(r.rows[0].f1 == 1.0);

  const std::vector<PredictionOutcome> mixed = {scored(1, 0.0), scored(2, 0.3), scored(3, 0.9)};
  r = sweep(mixed, labels({{1, true}, {2, true}, {3, false}}), {0.0});
  CHECK(r.rows[0].recall == 1.0);

  CHECK_THROWS_AS(sweep(mixed, labels({{1, true}})), Error);
  const std::vector<PredictionOutcome> dup = {scored(1, 0.3), scored(1, 0.4)};
  try {
    sweep(dup, labels({{1, true}}));
    FAIL("expected DuplicateThread");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::DuplicateThread);
  }
  // The same thread under two strategies is fine.
  const std::vector<PredictionOutcome> two = {scored(1, 0.3), scored(1, 0.4, ScdStrategy::GenericScd)};
  CHECK(sweep(two, labels({{1, true}})).rows.size() == 6);

  r = sweep(mixed, labels({{1, true}, {2, true}, {3, false}}), {});
  CHECK(r.rows.empty());
  const std::string table = render_report(r);
  CHECK(table.rfind("Model", 0) == 0);
}

TEST_CASE("rows are sorted by strategy then threshold") {
  const std::vector<PredictionOutcome> two = {scored(1, 0.3, ScdStrategy::LeastToMostScd),
                                              scored(1, 0.4, ScdStrategy::GenericScd)};
  const auto r = sweep(two, labels({{1, true}}), {0.6, 0.4, 0.5, 0.4});
  CHECK(r.thresholds == std::vector<double>{0.4, 0.5, 0.6});
  REQUIRE(r.rows.size() == 6);
  CHECK(r.rows[0].strategy == ScdStrategy::GenericScd);
  CHECK(r.rows[0].threshold == 0.4);
  CHECK(r.rows[2].threshold == 0.6);
  CHECK(r.rows[3].strategy == ScdStrategy::LeastToMostScd);
}

TEST_CASE("labels from the corpus") {
  const auto corpus = load_corpus(fixture("analytics_corpus.jsonl"));
  const auto l = derailment_labels(corpus);
  CHECK(l.size() == 7);
  CHECK(l.at({"acme/widgets", 101}) == true);
  CHECK(l.at({"acme/widgets", 201}) == false);
  CHECK_FALSE(l.count({"acme/gadgets", 104}));
  CHECK_FALSE(l.count({"acme/gadgets", 106}));

  std::vector<PredictionOutcome> outcomes = {
      {{"acme/widgets", 101}, ScdStrategy::LeastToMostScd, std::nullopt, PredictionFailure{}},
      {{"acme/gadgets", 104}, ScdStrategy::LeastToMostScd, std::nullopt, PredictionFailure{}}};
  outcomes[0].failure.reset();
  outcomes[0].prediction = DerailmentPrediction{};
  outcomes[0].prediction->thread_ref = {"acme/widgets", 101};
  outcomes[0].prediction->probability = 0.9;
  const auto r = evaluate_against_corpus(outcomes, corpus);
  CHECK(r.skipped_unlabeled == 1);
  CHECK(row_at(r, 0.5).counts.tp == 1);

  outcomes.push_back(scored(12345, 0.2));
  CHECK_THROWS_AS(evaluate_against_corpus(outcomes, corpus), Error);
}

TEST_CASE("cohens_kappa") {
  const std::vector<bool> a = {true, true, false, false};
  const std::vector<bool> b = {true, false, false, false};
  CHECK(*cohens_kappa(a, b) == doctest::Approx(0.5));
  CHECK(*cohens_kappa(a, a) == doctest::Approx(1.0));
  CHECK_FALSE(cohens_kappa({true, true}, {true, true}).has_value());
  try {
    cohens_kappa(a, {true});
    FAIL("expected LengthMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::LengthMismatch);
  }
  CHECK_THROWS_AS(cohens_kappa({}, {}), Error);
}

TEST_CASE("report table and JSON agree") {
  const std::vector<PredictionOutcome> outcomes = {scored(1, 0.85), scored(2, 0.50), scored(3, 0.45),
                                                   scored(4, 0.20), scored(5, 0.70), scored(6, 0.49),
                                                   scored(7, 0.10), failed(8)};
  const auto l = labels({{1, true}, {2, true}, {3, true}, {4, true}, {5, false}, {6, false}, {7, false}, {8, false}});
  const auto r = sweep(outcomes, l);
  const std::string table = render_report(r);
  const std::string expected_rows =
      "Model               T (>=)  Precision  Recall     F1\n"
      "Least-to-most SCD   0.40    0.60       0.75       0.67\n"
      "Least-to-most SCD   0.50    0.67       0.50       0.57\n"
      "Least-to-most SCD   0.60    0.50       0.25       0.33\n";
  CHECK(table.rfind(expected_rows, 0) == 0);

  const json j = to_json(r);
  REQUIRE(j["rows"].size() == 3);
  CHECK(j["rows"][1]["threshold"] == 0.5);
  CHECK(j["rows"][1]["precision"] == 0.67);
  CHECK(j["rows"][1]["recall"] == 0.5);
  CHECK(j["rows"][1]["f1"] == 0.57);
  CHECK(j["rows"][1]["tp"] == 2);
  CHECK(j["parse_failure_count"] == 1);

  const std::vector<PredictionOutcome> all_low = {scored(1, 0.1), scored(2, 0.1)};
  const auto undefined = sweep(all_low, labels({{1, true}, {2, false}}), {0.5});
  CHECK(render_report(undefined).find("—") != std::string::npos);
  CHECK(to_json(undefined)["rows"][0]["precision"].is_null());
}
