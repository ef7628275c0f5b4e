#include "derail/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "derail/error.hpp"

namespace derail {
namespace {

std::optional<double> ratio(std::size_t num, std::size_t den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

std::string fmt2(const std::optional<double>& v) {
  if (!v) return "\xE2\x80\x94";  // em dash
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", round2(*v));
  return buf;
}

json json2(const std::optional<double>& v) { return v ? json(round2(*v)) : json(nullptr); }

// Pads by display width; "—" is three bytes but one column.
std::string pad(const std::string& s, std::size_t width) {
  std::size_t cols = 0;
  for (unsigned char c : s) {
    if ((c & 0xC0) != 0x80) ++cols;
  }
  return cols >= width ? s : s + std::string(width - cols, ' ');
}

}  // namespace

std::optional<double> precision(const ConfusionCounts& c) { return ratio(c.tp, c.tp + c.fp); }
std::optional<double> recall(const ConfusionCounts& c) { return ratio(c.tp, c.tp + c.fn); }

std::optional<double> f1_from(double p, double r) {
  if (p + r <= 0.0) return std::nullopt;
  return 2.0 * p * r / (p + r);
}

std::optional<double> f1(const ConfusionCounts& c) {
  const auto p = precision(c);
  const auto r = recall(c);
  if (!p || !r) return std::nullopt;
  return f1_from(*p, *r);
}

double round2(double v) {
  // Half away from zero, tolerant of representation error (0.125 -> 0.13).
  return std::round(v * 100.0 + (v >= 0 ? 1e-9 : -1e-9)) / 100.0;
}

std::map<ThreadRef, bool> derailment_labels(std::span<const ConversationThread> corpus) {
  std::map<ThreadRef, bool> labels;
  for (const auto& t : corpus) {
    if (!t.valid_for_derailment()) continue;
    const CorpusPartition p = partition(t);
    if (p == CorpusPartition::DerailedToxic) labels[t.ref()] = true;
    if (p == CorpusPartition::NonToxic) labels[t.ref()] = false;
  }
  return labels;
}

EvaluationReport sweep(std::span<const PredictionOutcome> outcomes, const std::map<ThreadRef, bool>& labels,
                       const std::vector<double>& thresholds, FailurePolicy policy) {
  for (double t : thresholds) {
    if (!(t >= 0.0 && t <= 1.0)) throw Error(Errc::InvalidArgument, "threshold outside [0, 1]");
  }
  EvaluationReport report;
  report.thresholds = thresholds;
  std::sort(report.thresholds.begin(), report.thresholds.end());
  report.thresholds.erase(std::unique(report.thresholds.begin(), report.thresholds.end()), report.thresholds.end());
  report.failure_policy = policy;

  std::set<std::pair<ScdStrategy, ThreadRef>> seen;
  std::map<ScdStrategy, std::vector<std::pair<std::optional<double>, bool>>> scored;  // probability, label
  for (const auto& o : outcomes) {
    if (!seen.emplace(o.strategy, o.thread_ref).second) {
      throw Error(Errc::DuplicateThread, "duplicate prediction for " + o.thread_ref.to_string() + " (" +
                                             std::string(to_string(o.strategy)) + ")");
    }
    auto label = labels.find(o.thread_ref);
    if (label == labels.end()) {
      throw Error(Errc::MissingLabel, "no label for " + o.thread_ref.to_string());
    }
    StrategySummary& s = report.summaries[o.strategy];
    if (!o.prediction) {
      ++s.failures;
      if (o.failure && o.failure->code == Errc::ParseFailure) {
        ++s.parse_failures;
        ++report.parse_failure_count;
      }
      if (policy == FailurePolicy::Exclude) {
        ++s.excluded;
        continue;
      }
    }
    (label->second ? s.positives : s.negatives) += 1;
    scored[o.strategy].emplace_back(o.prediction ? std::optional(o.prediction->probability) : std::nullopt,
                                    label->second);
  }

  for (const auto& [strategy, items] : scored) {
    for (double t : report.thresholds) {
      EvaluationRow row;
      row.strategy = strategy;
      row.threshold = t;
      for (const auto& [prob, positive] : items) {
        const bool predicted = prob && classify(*prob, t);
        if (predicted) {
          (positive ? row.counts.tp : row.counts.fp) += 1;
        } else {
          (positive ? row.counts.fn : row.counts.tn) += 1;
        }
      }
      row.precision = precision(row.counts);
      row.recall = recall(row.counts);
      row.f1 = f1(row.counts);
      report.rows.push_back(row);
    }
  }
  return report;
}

EvaluationReport evaluate_against_corpus(std::span<const PredictionOutcome> outcomes,
                                         std::span<const ConversationThread> corpus,
                                         const std::vector<double>& thresholds, FailurePolicy policy) {
  const auto labels = derailment_labels(corpus);
  std::set<ThreadRef> known;
  for (const auto& t : corpus) known.insert(t.ref());
  std::vector<PredictionOutcome> kept;
  std::size_t skipped = 0;
  for (const auto& o : outcomes) {
    if (!labels.count(o.thread_ref) && known.count(o.thread_ref)) {
      ++skipped;
      continue;
    }
    kept.push_back(o);
  }
  EvaluationReport report = sweep(kept, labels, thresholds, policy);
  report.skipped_unlabeled = skipped;
  return report;
}

std::optional<double> cohens_kappa(const std::vector<bool>& a, const std::vector<bool>& b) {
  if (a.size() != b.size()) {
    throw Error(Errc::LengthMismatch, "label sequences differ in length (" + std::to_string(a.size()) + " vs " +
                                          std::to_string(b.size()) + ")");
  }
  if (a.empty()) throw Error(Errc::InvalidArgument, "cohens_kappa needs at least one label pair");
  const double n = static_cast<double>(a.size());
  std::size_t agree = 0, a_true = 0, b_true = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] == b[i]) ++agree;
    if (a[i]) ++a_true;
    if (b[i]) ++b_true;
  }
  const double p_o = static_cast<double>(agree) / n;
  const double pa = static_cast<double>(a_true) / n;
  const double pb = static_cast<double>(b_true) / n;
  const double p_e = pa * pb + (1.0 - pa) * (1.0 - pb);
  if (p_e >= 1.0) return std::nullopt;
  return (p_o - p_e) / (1.0 - p_e);
}

std::string_view display_name(ScdStrategy s) {
  switch (s) {
    case ScdStrategy::GenericScd: return "Generic SCD";
    case ScdStrategy::FewShotScd: return "Few-shot SCD";
    case ScdStrategy::LeastToMostScd: return "Least-to-most SCD";
  }
  return "unknown";
}

std::string render_report(const EvaluationReport& report) {
  constexpr std::size_t kModel = 20, kT = 8, kCol = 11;
  std::string out = pad("Model", kModel) + pad("T (>=)", kT) + pad("Precision", kCol) + pad("Recall", kCol) + "F1\n";
  for (const auto& row : report.rows) {
    out += pad(std::string(display_name(row.strategy)), kModel) + pad(fmt2(row.threshold), kT) +
           pad(fmt2(row.precision), kCol) + pad(fmt2(row.recall), kCol) + fmt2(row.f1) + "\n";
  }
  if (!report.summaries.empty()) {
    out += "\n";
    for (const auto& [strategy, s] : report.summaries) {
      out += std::string(display_name(strategy)) + ": " + std::to_string(s.positives) + " positive, " +
             std::to_string(s.negatives) + " negative, " + std::to_string(s.failures) + " failed (" +
             std::to_string(s.parse_failures) + " parse failures" +
             (report.failure_policy == FailurePolicy::Exclude ? ", excluded" : ", counted as negative") + ")\n";
    }
  }
  return out;
}

json to_json(const EvaluationReport& report) {
  json j;
  j["thresholds"] = json::array();
  for (double t : report.thresholds) j["thresholds"].push_back(round2(t));
  j["failure_policy"] = report.failure_policy == FailurePolicy::Exclude ? "exclude" : "count_as_negative";
  j["parse_failure_count"] = report.parse_failure_count;
  j["skipped_unlabeled"] = report.skipped_unlabeled;
  j["rows"] = json::array();
  for (const auto& row : report.rows) {
    j["rows"].push_back({{"strategy", std::string(to_string(row.strategy))},
                         {"threshold", round2(row.threshold)},
                         {"tp", row.counts.tp},
                         {"fp", row.counts.fp},
                         {"tn", row.counts.tn},
                         {"fn", row.counts.fn},
                         {"precision", json2(row.precision)},
                         {"recall", json2(row.recall)},
                         {"f1", json2(row.f1)}});
  }
  j["datasets"] = json::object();
  for (const auto& [strategy, s] : report.summaries) {
    j["datasets"][std::string(to_string(strategy))] = {{"positives", s.positives},
                                                        {"negatives", s.negatives},
                                                        {"failures", s.failures},
                                                        {"parse_failures", s.parse_failures},
                                                        {"excluded", s.excluded}};
  }
  return j;
}

}  // namespace derail
