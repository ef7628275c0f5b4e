#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "derail/corpus.hpp"
#include "derail/predictor.hpp"

namespace derail {

struct ConfusionCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;

  std::size_t total() const { return tp + fp + tn + fn; }
  bool operator==(const ConfusionCounts&) const = default;
};

/// nullopt marks an undefined metric (empty denominator).
std::optional<double> precision(const ConfusionCounts& c);
std::optional<double> recall(const ConfusionCounts& c);
std::optional<double> f1(const ConfusionCounts& c);
/// 2pr / (p + r); nullopt when p + r == 0.
std::optional<double> f1_from(double p, double r);

/// Rounds half away from zero to two decimals.
double round2(double v);

enum class FailurePolicy { CountAsNegative, Exclude };

struct EvaluationRow {
  ScdStrategy strategy = ScdStrategy::LeastToMostScd;
  double threshold = 0.5;
  ConfusionCounts counts;
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> f1;
};

struct StrategySummary {
  std::size_t positives = 0;
  std::size_t negatives = 0;
  std::size_t failures = 0;        // outcomes without a probability
  std::size_t parse_failures = 0;  // subset of failures with Errc::ParseFailure
  std::size_t excluded = 0;        // failures left out under FailurePolicy::Exclude
};

struct EvaluationReport {
  std::vector<double> thresholds;
  FailurePolicy failure_policy = FailurePolicy::CountAsNegative;
  std::vector<EvaluationRow> rows;  // sorted by (strategy, threshold)
  std::map<ScdStrategy, StrategySummary> summaries;
  std::size_t parse_failure_count = 0;
  std::size_t skipped_unlabeled = 0;  // outcomes for threads outside the evaluation set
};

inline const std::vector<double> kDefaultThresholds = {0.4, 0.5, 0.6};

/// true for DerailedToxic, false for NonToxic. Abrupt toxic threads and
/// threads whose first comment is toxic have no label.
std::map<ThreadRef, bool> derailment_labels(std::span<const ConversationThread> corpus);

/// Per strategy and threshold, classifies each outcome with
/// classify(p, t) and tallies against `labels`. Errc::MissingLabel for an
/// outcome whose thread has no label, Errc::DuplicateThread for a repeated
/// (strategy, thread).
EvaluationReport sweep(std::span<const PredictionOutcome> outcomes, const std::map<ThreadRef, bool>& labels,
                       const std::vector<double>& thresholds = kDefaultThresholds,
                       FailurePolicy policy = FailurePolicy::CountAsNegative);

/// sweep over the corpus labels. Outcomes for corpus threads without a label
/// are skipped and counted; outcomes for threads missing from the corpus are
/// Errc::MissingLabel.
EvaluationReport evaluate_against_corpus(std::span<const PredictionOutcome> outcomes,
                                         std::span<const ConversationThread> corpus,
                                         const std::vector<double>& thresholds = kDefaultThresholds,
                                         FailurePolicy policy = FailurePolicy::CountAsNegative);

/// (p_o - p_e) / (1 - p_e) with p_e from the marginals. nullopt when p_e == 1.
/// Errc::LengthMismatch for unequal lengths, Errc::InvalidArgument when empty.
std::optional<double> cohens_kappa(const std::vector<bool>& a, const std::vector<bool>& b);

std::string_view display_name(ScdStrategy s);

/// Model / T / Precision / Recall / F1 table, two decimals, "—" when undefined.
std::string render_report(const EvaluationReport& report);
json to_json(const EvaluationReport& report);

}  // namespace derail
