#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "derail/corpus.hpp"
#include "derail/lingfeat.hpp"
#include "derail/timeutil.hpp"

namespace derail {

/// Gap between a comment and its predecessor. Half-open [lower, upper).
enum class TimingBucket {
  LtOneHour,
  OneToThreeHours,
  ThreeToSixHours,
  SixToTwelveHours,
  TwelveToTwentyFourHours,
  OneToSevenDays,
  GtOneWeek,
};

inline constexpr std::array<TimingBucket, 7> kAllTimingBuckets = {
    TimingBucket::LtOneHour,        TimingBucket::OneToThreeHours,         TimingBucket::ThreeToSixHours,
    TimingBucket::SixToTwelveHours, TimingBucket::TwelveToTwentyFourHours, TimingBucket::OneToSevenDays,
    TimingBucket::GtOneWeek,
};

std::string_view to_string(TimingBucket b);
// Human label as printed in reports ("< 1 hour", "1-3 hours", ...).
std::string_view label(TimingBucket b);

/// Errc::NonPositiveDelta for delta <= 0.
TimingBucket timing_bucket(Seconds delta);

/// A count over an explicit universe, so every percentage can be audited.
struct Fraction {
  std::size_t numerator = 0;
  std::size_t denominator = 0;

  std::optional<double> value() const;
  // 100 * value, rounded to two decimals.
  std::optional<double> percent() const;
  bool operator==(const Fraction&) const = default;
};

/// Lower median: element (n-1)/2 of the sorted sample. nullopt when empty.
std::optional<std::size_t> lower_median(std::vector<std::size_t> values);
std::optional<double> lower_median(std::vector<double> values);

inline constexpr std::string_view kMedianConvention = "lower";

struct TimingRow {
  std::size_t count = 0;
  std::size_t shorter_than_thread_median = 0;
  bool operator==(const TimingRow&) const = default;
};

using TimingHistogram = std::map<TimingBucket, TimingRow>;

/// Per toxic thread: the gap before the first toxic comment, bucketed, and
/// whether that gap is strictly shorter than the thread's median gap between
/// consecutive comments. Threads whose first comment is toxic are skipped.
/// A zero-second gap is counted in LtOneHour.
TimingHistogram first_toxic_timing(std::span<const ConversationThread> corpus);

struct DerailmentStats {
  std::size_t derailed_threads = 0;
  std::size_t distance_median = 0;  // first toxic index - derailment index
  Fraction within_8h;               // wall-clock gap <= 8 h
  std::map<Tbdf, Fraction> tbdf_distribution;
};

/// Over DerailedToxic threads only; nullopt when there are none.
std::optional<DerailmentStats> derailment_stats(std::span<const ConversationThread> corpus);

enum class LabelCategory { Bug, FeatureEnhancement, HelpWanted, WontfixRejected, PositiveStatus, Other };

inline constexpr std::array<LabelCategory, 6> kAllLabelCategories = {
    LabelCategory::Bug,          LabelCategory::FeatureEnhancement, LabelCategory::HelpWanted,
    LabelCategory::WontfixRejected, LabelCategory::PositiveStatus,  LabelCategory::Other,
};

std::string_view to_string(LabelCategory c);

/// Keyword lists per category. A label matches a keyword when the keyword's
/// words appear consecutively in the label (case and punctuation ignored).
struct LabelSynonyms {
  std::map<LabelCategory, std::vector<std::string>> keywords;
  static LabelSynonyms defaults();
};

struct LabelCategoryCounts {
  std::size_t labeled_threads = 0;
  std::map<LabelCategory, Fraction> categories;  // denominator: labeled_threads
};

/// Threads without labels are outside the universe. A thread counts once in
/// every category any of its labels matches; Other only when none matched.
LabelCategoryCounts label_categories(std::span<const ConversationThread> corpus,
                                     const LabelSynonyms& synonyms = LabelSynonyms::defaults());

/// Comment populations the reference and cue rates are computed over.
enum class CommentClass {
  AllComments,
  ToxicThreadComments,
  NonToxicThreadComments,
  FirstToxic,
  DerailmentPoints,
  TbdfComments,
};

inline constexpr std::array<CommentClass, 6> kAllCommentClasses = {
    CommentClass::AllComments, CommentClass::ToxicThreadComments, CommentClass::NonToxicThreadComments,
    CommentClass::FirstToxic,  CommentClass::DerailmentPoints,    CommentClass::TbdfComments,
};

std::string_view to_string(CommentClass c);

struct ClassRates {
  Fraction mention;
  Fraction quote;
  Fraction both_pronouns;
  std::map<Cue, Fraction> cues;
};

struct RoleCounts {
  std::size_t project_contributor = 0;
  std::size_t external_participant = 0;
  Fraction external_share;
};

struct CorpusStats {
  std::string median_convention{kMedianConvention};

  std::size_t thread_count = 0;
  std::size_t excluded_first_comment_toxic = 0;
  std::size_t toxic_threads = 0;
  std::size_t derailed_threads = 0;
  std::size_t abrupt_threads = 0;
  std::size_t non_toxic_threads = 0;
  std::size_t threads_without_author_info = 0;

  // Share of comments by external participants, per partition.
  std::map<CorpusPartition, Fraction> role_comment_shares;
  std::map<CorpusPartition, double> median_contributor_comment_share;
  std::map<CorpusPartition, RoleCounts> initiator_role_counts;
  std::optional<RoleCounts> first_toxic_author_role_counts;

  std::optional<std::size_t> median_thread_length_toxic;
  std::optional<std::size_t> median_thread_length_non_toxic;
  // 1-based position of the first toxic comment.
  std::optional<std::size_t> first_toxic_position_median;
  std::map<std::size_t, Fraction> first_toxic_within;  // keys 3, 5, 7, 10
  std::optional<std::size_t> median_comments_after_first_toxic;
  Fraction multi_toxic_threads;
  std::optional<std::size_t> median_toxic_comments_per_thread;

  std::optional<TimingHistogram> timing_histogram;

  std::map<CommentClass, ClassRates> class_rates;  // only non-empty classes
  std::map<CorpusPartition, std::size_t> median_second_person_comments_per_thread;
  std::map<CorpusPartition, Fraction> threads_without_second_person;

  std::map<Tbdf, Fraction> tbdf_toxicity_rates;
  Fraction tbdf_comments_toxic;

  std::optional<LabelCategoryCounts> label_category_counts;  // toxic threads

  std::optional<DerailmentStats> derailment;
  std::map<TriggerType, Fraction> trigger_distribution;  // denominator: derailed threads
  std::optional<Fraction> abrupt_vulgar_or_insulting;

  std::optional<Fraction> mention_rate(CommentClass c) const;
  std::optional<Fraction> quote_rate(CommentClass c) const;
  std::optional<Fraction> pronoun_rate(CommentClass c, Cue pronoun) const;
  // Lexical-cue prevalence for one population (All, DerailmentPoints, TbdfComments).
  std::optional<Fraction> cue_prevalence(CommentClass c, Cue cue) const;
};

/// Everything above from an annotated corpus. Errc::EmptyCorpus when empty.
/// Threads whose first comment is toxic are counted in
/// excluded_first_comment_toxic and left out of all statistics. Role figures
/// skip deleted threads (every author a ghost).
CorpusStats compute_stats(std::span<const ConversationThread> corpus,
                          const LexiconSet& lexicons = LexiconSet::defaults(),
                          const LabelSynonyms& synonyms = LabelSynonyms::defaults());

json to_json(const Fraction& f);
json to_json(const CorpusStats& stats);

/// Plain-text report: summary lines, the first-toxic timing table and the
/// lexical-cue table.
std::string render_stats_table(const CorpusStats& stats);

}  // namespace derail
