#include "derail/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "derail/error.hpp"
#include "enum_names.hpp"

namespace derail {
namespace {

using namespace std::chrono_literals;

constexpr detail::NameTable<TimingBucket, 7> kBucketNames{{
    {TimingBucket::LtOneHour, "lt_1h"},
    {TimingBucket::OneToThreeHours, "1h_3h"},
    {TimingBucket::ThreeToSixHours, "3h_6h"},
    {TimingBucket::SixToTwelveHours, "6h_12h"},
    {TimingBucket::TwelveToTwentyFourHours, "12h_24h"},
    {TimingBucket::OneToSevenDays, "1d_7d"},
    {TimingBucket::GtOneWeek, "gt_1w"},
}};

constexpr detail::NameTable<TimingBucket, 7> kBucketLabels{{
    {TimingBucket::LtOneHour, "< 1 hour"},
    {TimingBucket::OneToThreeHours, "1-3 hours"},
    {TimingBucket::ThreeToSixHours, "3-6 hours"},
    {TimingBucket::SixToTwelveHours, "6-12 hours"},
    {TimingBucket::TwelveToTwentyFourHours, "12-24 hours"},
    {TimingBucket::OneToSevenDays, "1-7 days"},
    {TimingBucket::GtOneWeek, "> 1 week"},
}};

constexpr detail::NameTable<LabelCategory, 6> kLabelCategoryNames{{
    {LabelCategory::Bug, "bug"},
    {LabelCategory::FeatureEnhancement, "feature_enhancement"},
    {LabelCategory::HelpWanted, "help_wanted"},
    {LabelCategory::WontfixRejected, "wontfix_rejected"},
    {LabelCategory::PositiveStatus, "positive_status"},
    {LabelCategory::Other, "other"},
}};

constexpr detail::NameTable<CommentClass, 6> kCommentClassNames{{
    {CommentClass::AllComments, "all_comments"},
    {CommentClass::ToxicThreadComments, "toxic_thread_comments"},
    {CommentClass::NonToxicThreadComments, "non_toxic_thread_comments"},
    {CommentClass::FirstToxic, "first_toxic_comments"},
    {CommentClass::DerailmentPoints, "derailment_points"},
    {CommentClass::TbdfComments, "tbdf_comments"},
}};

// Lowercase words of a label or keyword, punctuation dropped.
std::vector<std::string> label_words(std::string_view s) {
  std::vector<std::string> words;
  std::string cur;
  for (char c : s) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    } else if (!cur.empty()) {
      words.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) words.push_back(std::move(cur));
  return words;
}

bool contains_sequence(const std::vector<std::string>& hay, const std::vector<std::string>& needle) {
  if (needle.empty() || needle.size() > hay.size()) return false;
  return std::search(hay.begin(), hay.end(), needle.begin(), needle.end()) != hay.end();
}

Seconds gap_before(const ConversationThread& t, std::size_t idx) {
  return t.comments[idx].created_at - t.comments[idx - 1].created_at;
}

// Accumulates one comment population.
struct RateAccumulator {
  std::size_t total = 0;
  std::size_t mention = 0;
  std::size_t quote = 0;
  std::size_t both = 0;
  std::map<Cue, std::size_t> cues;

  void add(const FeatureVector& f) {
    ++total;
    if (!f.mentions.empty()) ++mention;
    if (f.has_quote) ++quote;
    if (f.has_first_person && f.has_second_person) ++both;
    for (Cue c : kAllCues) {
      if (f.has(c)) ++cues[c];
    }
  }

  ClassRates rates() const {
    ClassRates r;
    r.mention = {mention, total};
    r.quote = {quote, total};
    r.both_pronouns = {both, total};
    for (Cue c : kAllCues) {
      auto it = cues.find(c);
      r.cues[c] = {it == cues.end() ? 0 : it->second, total};
    }
    return r;
  }
};

RoleCounts role_counts(std::size_t contributors, std::size_t externals) {
  return {contributors, externals, {externals, contributors + externals}};
}

json optional_json(const std::optional<std::size_t>& v) { return v ? json(*v) : json(nullptr); }

std::string fmt_fraction(const Fraction& f) {
  char buf[64];
  if (auto p = f.percent()) {
    std::snprintf(buf, sizeof buf, "%zu (%.2f%%)", f.numerator, *p);
  } else {
    std::snprintf(buf, sizeof buf, "%zu (-)", f.numerator);
  }
  return buf;
}

std::string fmt_ratio(const Fraction& f) {
  char buf[64];
  if (auto p = f.percent()) {
    std::snprintf(buf, sizeof buf, "%zu/%zu (%.2f%%)", f.numerator, f.denominator, *p);
  } else {
    std::snprintf(buf, sizeof buf, "%zu/%zu (-)", f.numerator, f.denominator);
  }
  return buf;
}

std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

}  // namespace

std::string_view to_string(TimingBucket b) { return detail::name_of(kBucketNames, b); }
std::string_view label(TimingBucket b) { return detail::name_of(kBucketLabels, b); }
std::string_view to_string(LabelCategory c) { return detail::name_of(kLabelCategoryNames, c); }
std::string_view to_string(CommentClass c) { return detail::name_of(kCommentClassNames, c); }

TimingBucket timing_bucket(Seconds delta) {
  if (delta <= 0s) {
    throw Error(Errc::NonPositiveDelta, "time delta must be positive, got " + std::to_string(delta.count()) + "s");
  }
  if (delta < 1h) return TimingBucket::LtOneHour;
  if (delta < 3h) return TimingBucket::OneToThreeHours;
  if (delta < 6h) return TimingBucket::ThreeToSixHours;
  if (delta < 12h) return TimingBucket::SixToTwelveHours;
  if (delta < 24h) return TimingBucket::TwelveToTwentyFourHours;
  if (delta < 7 * 24h) return TimingBucket::OneToSevenDays;
  return TimingBucket::GtOneWeek;
}

std::optional<double> Fraction::value() const {
  if (denominator == 0) return std::nullopt;
  return static_cast<double>(numerator) / static_cast<double>(denominator);
}

std::optional<double> Fraction::percent() const {
  auto v = value();
  if (!v) return std::nullopt;
  return std::round(*v * 10000.0) / 100.0;
}

std::optional<std::size_t> lower_median(std::vector<std::size_t> values) {
  if (values.empty()) return std::nullopt;
  const auto mid = values.begin() + static_cast<std::ptrdiff_t>((values.size() - 1) / 2);
  std::nth_element(values.begin(), mid, values.end());
  return *mid;
}

std::optional<double> lower_median(std::vector<double> values) {
  if (values.empty()) return std::nullopt;
  const auto mid = values.begin() + static_cast<std::ptrdiff_t>((values.size() - 1) / 2);
  std::nth_element(values.begin(), mid, values.end());
  return *mid;
}

TimingHistogram first_toxic_timing(std::span<const ConversationThread> corpus) {
  TimingHistogram hist;
  for (TimingBucket b : kAllTimingBuckets) hist[b] = {};
  for (const auto& t : corpus) {
    if (!t.valid_for_derailment()) continue;
    const auto toxic = t.first_toxic_index();
    if (!toxic) continue;
    const Seconds gap = gap_before(t, *toxic);
    std::vector<std::size_t> gaps;
    for (std::size_t i = 1; i < t.comments.size(); ++i) {
      gaps.push_back(static_cast<std::size_t>(gap_before(t, i).count()));
    }
    const std::size_t median_gap = *lower_median(std::move(gaps));
    TimingRow& row = hist[gap > 0s ? timing_bucket(gap) : TimingBucket::LtOneHour];
    ++row.count;
    if (static_cast<std::size_t>(gap.count()) < median_gap) ++row.shorter_than_thread_median;
  }
  return hist;
}

std::optional<DerailmentStats> derailment_stats(std::span<const ConversationThread> corpus) {
  DerailmentStats s;
  std::vector<std::size_t> distances;
  std::size_t within = 0;
  std::map<Tbdf, std::size_t> tbdf_counts;
  for (const auto& t : corpus) {
    if (!t.valid_for_derailment() || partition(t) != CorpusPartition::DerailedToxic) continue;
    const std::size_t toxic = *t.first_toxic_index();
    const std::size_t derail = *t.derailment_index();
    distances.push_back(toxic - derail);
    if (t.comments[toxic].created_at - t.comments[derail].created_at <= 8h) ++within;
    for (Tbdf f : t.comments[derail].tbdfs) ++tbdf_counts[f];
  }
  if (distances.empty()) return std::nullopt;
  s.derailed_threads = distances.size();
  s.distance_median = *lower_median(distances);
  s.within_8h = {within, s.derailed_threads};
  for (Tbdf f : kAllTbdfs) s.tbdf_distribution[f] = {tbdf_counts[f], s.derailed_threads};
  return s;
}

LabelSynonyms LabelSynonyms::defaults() {
  LabelSynonyms s;
  s.keywords[LabelCategory::Bug] = {"bug", "defect", "crash", "regression", "error", "broken"};
  s.keywords[LabelCategory::FeatureEnhancement] = {"feature",  "enhancement", "suggestion",
                                                   "proposal", "idea",        "improvement"};
  s.keywords[LabelCategory::HelpWanted] = {"help wanted", "help needed", "needs help"};
  s.keywords[LabelCategory::WontfixRejected] = {"wontfix", "wont fix", "won t fix", "rejected",
                                                "declined", "not planned", "invalid"};
  s.keywords[LabelCategory::PositiveStatus] = {"approved", "completed", "accepted", "fixed",
                                               "resolved", "done",      "merged"};
  return s;
}

LabelCategoryCounts label_categories(std::span<const ConversationThread> corpus, const LabelSynonyms& synonyms) {
  LabelCategoryCounts out;
  std::map<LabelCategory, std::size_t> counts;
  for (const auto& t : corpus) {
    if (t.labels.empty()) continue;
    ++out.labeled_threads;
    std::set<LabelCategory> matched;
    for (const auto& l : t.labels) {
      const auto words = label_words(l);
      for (const auto& [category, keywords] : synonyms.keywords) {
        for (const auto& k : keywords) {
          if (contains_sequence(words, label_words(k))) matched.insert(category);
        }
      }
    }
    if (matched.empty()) matched.insert(LabelCategory::Other);
    for (auto c : matched) ++counts[c];
  }
  for (LabelCategory c : kAllLabelCategories) out.categories[c] = {counts[c], out.labeled_threads};
  return out;
}

std::optional<Fraction> CorpusStats::mention_rate(CommentClass c) const {
  auto it = class_rates.find(c);
  if (it == class_rates.end()) return std::nullopt;
  return it->second.mention;
}

std::optional<Fraction> CorpusStats::quote_rate(CommentClass c) const {
  auto it = class_rates.find(c);
  if (it == class_rates.end()) return std::nullopt;
  return it->second.quote;
}

std::optional<Fraction> CorpusStats::pronoun_rate(CommentClass c, Cue pronoun) const {
  auto it = class_rates.find(c);
  if (it == class_rates.end()) return std::nullopt;
  return it->second.cues.at(pronoun);
}

std::optional<Fraction> CorpusStats::cue_prevalence(CommentClass c, Cue cue) const {
  return pronoun_rate(c, cue);
}

CorpusStats compute_stats(std::span<const ConversationThread> corpus, const LexiconSet& lexicons,
                          const LabelSynonyms& synonyms) {
  if (corpus.empty()) throw Error(Errc::EmptyCorpus, "cannot compute statistics over an empty corpus");
  lexicons.validate();

  CorpusStats s;
  s.thread_count = corpus.size();

  std::vector<ConversationThread> valid;
  for (const auto& t : corpus) {
    if (t.valid_for_derailment()) {
      valid.push_back(t);
    } else {
      ++s.excluded_first_comment_toxic;
    }
  }

  std::map<CommentClass, RateAccumulator> acc;
  std::map<CorpusPartition, std::size_t> ext_comments, all_comments;
  std::map<CorpusPartition, std::vector<double>> contributor_shares;
  std::map<CorpusPartition, std::pair<std::size_t, std::size_t>> initiators;  // contributor, external
  std::size_t first_toxic_contrib = 0, first_toxic_ext = 0;
  std::vector<std::size_t> toxic_lengths, non_toxic_lengths, first_positions, after_first, toxic_per_thread;
  std::map<std::size_t, std::size_t> within_k;
  std::size_t multi_toxic = 0;
  std::map<CorpusPartition, std::vector<std::size_t>> second_person_per_thread;
  std::map<CorpusPartition, std::size_t> no_second_person;
  std::map<Tbdf, std::pair<std::size_t, std::size_t>> tbdf_tox;  // toxic, total
  std::size_t tbdf_comments = 0, tbdf_comments_toxic = 0;
  std::vector<ConversationThread> toxic_threads;
  std::map<TriggerType, std::size_t> triggers;
  std::size_t abrupt_vi = 0;

  for (const auto& t : valid) {
    const CorpusPartition part = partition(t);
    const bool toxic = part != CorpusPartition::NonToxic;
    const CorpusPartition coarse = toxic ? CorpusPartition::Toxic : CorpusPartition::NonToxic;
    if (toxic) {
      ++s.toxic_threads;
      toxic_threads.push_back(t);
      (part == CorpusPartition::DerailedToxic ? s.derailed_threads : s.abrupt_threads) += 1;
    } else {
      ++s.non_toxic_threads;
    }

    std::vector<FeatureVector> features;
    features.reserve(t.comments.size());
    for (const auto& c : t.comments) features.push_back(extract_features(c, lexicons));

    // comment populations
    std::size_t second_person_comments = 0;
    for (std::size_t i = 0; i < t.comments.size(); ++i) {
      const auto& c = t.comments[i];
      acc[CommentClass::AllComments].add(features[i]);
      acc[toxic ? CommentClass::ToxicThreadComments : CommentClass::NonToxicThreadComments].add(features[i]);
      if (features[i].has_second_person) ++second_person_comments;
      if (toxic && !c.tbdfs.empty()) {
        acc[CommentClass::TbdfComments].add(features[i]);
        ++tbdf_comments;
        if (c.is_toxic) ++tbdf_comments_toxic;
        for (Tbdf f : c.tbdfs) {
          ++tbdf_tox[f].second;
          if (c.is_toxic) ++tbdf_tox[f].first;
        }
      }
    }
    second_person_per_thread[coarse].push_back(second_person_comments);
    if (second_person_comments == 0) ++no_second_person[coarse];

    // roles
    if (t.has_author_info()) {
      std::size_t ext = 0;
      for (const auto& c : t.comments) {
        if (c.role() == AuthorRole::ExternalParticipant) ++ext;
      }
      const std::size_t n = t.comments.size();
      std::vector<CorpusPartition> parts{coarse};
      if (toxic) parts.push_back(part);
      for (auto p : parts) {
        ext_comments[p] += ext;
        all_comments[p] += n;
        contributor_shares[p].push_back(static_cast<double>(n - ext) / static_cast<double>(n));
        auto& [contrib_init, ext_init] = initiators[p];
        (t.comments.front().role() == AuthorRole::ExternalParticipant ? ext_init : contrib_init) += 1;
      }
    } else {
      ++s.threads_without_author_info;
    }

    if (!toxic) {
      non_toxic_lengths.push_back(t.comments.size());
      continue;
    }

    // toxic-thread structure
    const std::size_t first = *t.first_toxic_index();
    acc[CommentClass::FirstToxic].add(features[first]);
    if (t.has_author_info()) {
      (t.comments[first].role() == AuthorRole::ExternalParticipant ? first_toxic_ext : first_toxic_contrib) += 1;
    }
    toxic_lengths.push_back(t.comments.size());
    first_positions.push_back(first + 1);
    for (std::size_t k : {3u, 5u, 7u, 10u}) {
      if (first + 1 <= k) ++within_k[k];
    }
    after_first.push_back(t.comments.size() - first - 1);
    const auto n_toxic = static_cast<std::size_t>(
        std::count_if(t.comments.begin(), t.comments.end(), [](const Comment& c) { return c.is_toxic; }));
    toxic_per_thread.push_back(n_toxic);
    if (n_toxic > 1) ++multi_toxic;

    if (part == CorpusPartition::DerailedToxic) {
      acc[CommentClass::DerailmentPoints].add(features[*t.derailment_index()]);
      if (t.trigger) ++triggers[*t.trigger];
    } else {
      const auto& tb = t.comments[first].tbdfs;
      if (tb.count(Tbdf::Vulgarity) || tb.count(Tbdf::Insulting)) ++abrupt_vi;
    }
  }

  for (const auto& [p, n] : all_comments) {
    s.role_comment_shares[p] = {ext_comments[p], n};
    s.median_contributor_comment_share[p] = *lower_median(contributor_shares[p]);
    s.initiator_role_counts[p] = role_counts(initiators[p].first, initiators[p].second);
  }
  if (first_toxic_contrib + first_toxic_ext > 0) {
    s.first_toxic_author_role_counts = role_counts(first_toxic_contrib, first_toxic_ext);
  }

  s.median_thread_length_toxic = lower_median(toxic_lengths);
  s.median_thread_length_non_toxic = lower_median(non_toxic_lengths);
  s.first_toxic_position_median = lower_median(first_positions);
  s.median_comments_after_first_toxic = lower_median(after_first);
  s.median_toxic_comments_per_thread = lower_median(toxic_per_thread);
  if (s.toxic_threads > 0) {
    for (std::size_t k : {3u, 5u, 7u, 10u}) s.first_toxic_within[k] = {within_k[k], s.toxic_threads};
    s.timing_histogram = first_toxic_timing(valid);
  }
  s.multi_toxic_threads = {multi_toxic, s.toxic_threads};

  for (const auto& [c, a] : acc) {
    if (a.total > 0) s.class_rates[c] = a.rates();
  }
  for (const auto& [p, v] : second_person_per_thread) {
    s.median_second_person_comments_per_thread[p] = *lower_median(v);
    s.threads_without_second_person[p] = {no_second_person[p], v.size()};
  }

  for (Tbdf f : kAllTbdfs) s.tbdf_toxicity_rates[f] = {tbdf_tox[f].first, tbdf_tox[f].second};
  s.tbdf_comments_toxic = {tbdf_comments_toxic, tbdf_comments};

  if (s.toxic_threads > 0) s.label_category_counts = label_categories(toxic_threads, synonyms);

  s.derailment = derailment_stats(valid);
  if (s.derailed_threads > 0) {
    for (TriggerType tr : kAllTriggers) s.trigger_distribution[tr] = {triggers[tr], s.derailed_threads};
  }
  if (s.abrupt_threads > 0) s.abrupt_vulgar_or_insulting = Fraction{abrupt_vi, s.abrupt_threads};
  return s;
}

json to_json(const Fraction& f) {
  auto p = f.percent();
  return json{{"numerator", f.numerator}, {"denominator", f.denominator}, {"percent", p ? json(*p) : json(nullptr)}};
}

namespace {

json role_counts_json(const RoleCounts& r) {
  return json{{"project_contributor", r.project_contributor},
              {"external_participant", r.external_participant},
              {"external_share", to_json(r.external_share)}};
}

template <typename K, typename V, typename F>
json map_json(const std::map<K, V>& m, F&& value) {
  json j = json::object();
  for (const auto& [k, v] : m) j[std::string(to_string(k))] = value(v);
  return j;
}

}  // namespace

json to_json(const CorpusStats& s) {
  json j;
  j["median_convention"] = s.median_convention;
  j["universe"] = {{"threads", s.thread_count},
                   {"excluded_first_comment_toxic", s.excluded_first_comment_toxic},
                   {"toxic_threads", s.toxic_threads},
                   {"derailed_threads", s.derailed_threads},
                   {"abrupt_threads", s.abrupt_threads},
                   {"non_toxic_threads", s.non_toxic_threads},
                   {"threads_without_author_info", s.threads_without_author_info}};
  j["role_comment_shares"] = map_json(s.role_comment_shares, [](const Fraction& f) { return to_json(f); });
  j["median_contributor_comment_share"] = map_json(s.median_contributor_comment_share, [](double d) { return d; });
  j["initiator_role_counts"] = map_json(s.initiator_role_counts, role_counts_json);
  j["first_toxic_author_role_counts"] =
      s.first_toxic_author_role_counts ? role_counts_json(*s.first_toxic_author_role_counts) : json(nullptr);
  j["median_thread_length"] = {{"toxic", optional_json(s.median_thread_length_toxic)},
                               {"non_toxic", optional_json(s.median_thread_length_non_toxic)}};
  json within = json::object();
  for (const auto& [k, f] : s.first_toxic_within) within[std::to_string(k)] = to_json(f);
  j["first_toxic_position"] = {{"median", optional_json(s.first_toxic_position_median)},
                               {"within_first", within},
                               {"median_comments_after", optional_json(s.median_comments_after_first_toxic)},
                               {"multi_toxic_threads", to_json(s.multi_toxic_threads)},
                               {"median_toxic_comments_per_thread", optional_json(s.median_toxic_comments_per_thread)}};
  if (s.timing_histogram) {
    json rows = json::array();
    for (const auto& [b, row] : *s.timing_histogram) {
      rows.push_back({{"bucket", std::string(to_string(b))},
                      {"label", std::string(label(b))},
                      {"count", row.count},
                      {"shorter_than_thread_median", row.shorter_than_thread_median}});
    }
    j["timing_histogram"] = rows;
  } else {
    j["timing_histogram"] = nullptr;
  }
  json classes = json::object();
  for (const auto& [c, r] : s.class_rates) {
    classes[std::string(to_string(c))] = {{"mention", to_json(r.mention)},
                                          {"quote", to_json(r.quote)},
                                          {"both_pronouns", to_json(r.both_pronouns)},
                                          {"cues", map_json(r.cues, [](const Fraction& f) { return to_json(f); })}};
  }
  j["comment_class_rates"] = classes;
  j["median_second_person_comments_per_thread"] =
      map_json(s.median_second_person_comments_per_thread, [](std::size_t v) { return v; });
  j["threads_without_second_person"] =
      map_json(s.threads_without_second_person, [](const Fraction& f) { return to_json(f); });
  j["tbdf_toxicity_rates"] = map_json(s.tbdf_toxicity_rates, [](const Fraction& f) { return to_json(f); });
  j["tbdf_comments_toxic"] = to_json(s.tbdf_comments_toxic);
  if (s.label_category_counts) {
    j["label_category_counts"] = {
        {"labeled_threads", s.label_category_counts->labeled_threads},
        {"categories", map_json(s.label_category_counts->categories, [](const Fraction& f) { return to_json(f); })}};
  } else {
    j["label_category_counts"] = nullptr;
  }
  if (s.derailment) {
    j["derailment"] = {{"derailed_threads", s.derailment->derailed_threads},
                       {"distance_median", s.derailment->distance_median},
                       {"within_8h", to_json(s.derailment->within_8h)},
                       {"tbdf_distribution",
                        map_json(s.derailment->tbdf_distribution, [](const Fraction& f) { return to_json(f); })}};
  } else {
    j["derailment"] = nullptr;
  }
  j["trigger_distribution"] = map_json(s.trigger_distribution, [](const Fraction& f) { return to_json(f); });
  j["abrupt_vulgar_or_insulting"] = s.abrupt_vulgar_or_insulting ? to_json(*s.abrupt_vulgar_or_insulting) : json(nullptr);
  return j;
}

std::string render_stats_table(const CorpusStats& s) {
  std::ostringstream out;
  auto opt = [](const std::optional<std::size_t>& v) { return v ? std::to_string(*v) : std::string("-"); };
  out << "Corpus: " << s.thread_count << " threads (" << s.toxic_threads << " toxic: " << s.derailed_threads
      << " derailed, " << s.abrupt_threads << " abrupt; " << s.non_toxic_threads << " non-toxic; "
      << s.excluded_first_comment_toxic << " excluded)\n";
  out << "Median convention: " << s.median_convention << "\n\n";

  if (auto it = s.initiator_role_counts.find(CorpusPartition::Toxic); it != s.initiator_role_counts.end()) {
    out << "External initiators (toxic):      " << fmt_ratio(it->second.external_share) << "\n";
  }
  if (auto it = s.initiator_role_counts.find(CorpusPartition::NonToxic); it != s.initiator_role_counts.end()) {
    out << "External initiators (non-toxic):  " << fmt_ratio(it->second.external_share) << "\n";
  }
  if (s.first_toxic_author_role_counts) {
    const auto& r = *s.first_toxic_author_role_counts;
    out << "First toxic by contributors:      "
        << fmt_ratio({r.project_contributor, r.project_contributor + r.external_participant}) << "\n";
  }
  out << "Median thread length:             " << opt(s.median_thread_length_toxic) << " (toxic) vs "
      << opt(s.median_thread_length_non_toxic) << " (non-toxic)\n";
  out << "Median first toxic position:      " << opt(s.first_toxic_position_median) << "\n";
  if (s.derailment) {
    out << "Derailment distance median:       " << s.derailment->distance_median << "\n";
    out << "Toxic within 8h of derailment:    " << fmt_ratio(s.derailment->within_8h) << "\n";
  }
  out << "\n";

  if (s.timing_histogram) {
    std::size_t total = 0;
    for (const auto& [b, row] : *s.timing_histogram) total += row.count;
    out << pad("Passed time since previous comment", 36) << pad("Count (%)", 18) << "Shorter than median timeframe\n";
    for (const auto& [b, row] : *s.timing_histogram) {
      out << pad(std::string(label(b)), 36) << pad(fmt_fraction({row.count, total}), 18)
          << fmt_ratio({row.shorter_than_thread_median, row.count}) << "\n";
    }
    out << "\n";
  }

  auto column = [&](CommentClass c) -> const ClassRates* {
    auto it = s.class_rates.find(c);
    return it == s.class_rates.end() ? nullptr : &it->second;
  };
  const ClassRates* all = column(CommentClass::AllComments);
  const ClassRates* dp = column(CommentClass::DerailmentPoints);
  const ClassRates* tb = column(CommentClass::TbdfComments);
  auto header = [](const ClassRates* r) { return r ? std::to_string(r->mention.denominator) : std::string("-"); };
  auto cell = [](const ClassRates* r, Cue cue) {
    if (!r) return std::string("-");
    char buf[32];
    auto p = r->cues.at(cue).percent();
    std::snprintf(buf, sizeof buf, "%.2f%%", p.value_or(0.0));
    return std::string(buf);
  };
  out << pad("Linguistic features", 24) << pad("All (" + header(all) + ")", 16)
      << pad("Derailment point (" + header(dp) + ")", 26) << "TBDF (" << header(tb) << ")\n";
  for (Cue cue : kAllCues) {
    out << pad(std::string(to_string(cue)), 24) << pad(cell(all, cue), 16) << pad(cell(dp, cue), 26) << cell(tb, cue)
        << "\n";
  }
  return out.str();
}

}  // namespace derail
