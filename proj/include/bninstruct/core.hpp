#pragma once

#include <array>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace bninstruct {

using json = nlohmann::ordered_json;

// Closed set of module error codes. The CLI prints these verbatim.
enum class ErrorCode {
  io_error,
  parse_error,
  duplicate_id,
  empty_pool,
  insufficient_pool,
  rejected_pair,
  backend_unreachable,
  rate_limited,
  backend_error,
  malformed_reply,
  precondition_violation,
  empty_drafts,
  no_words,
  empty_text,
  config_error,
  max_rounds_exhausted,
  schema_mismatch,
  corruption,
  encoding_error,
  empty_results,
  all_requests_failed,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail);

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

// The ten seed categories c1..c10.
enum class Category {
  c1 = 1, c2, c3, c4, c5, c6, c7, c8, c9, c10
};

inline constexpr std::size_t kCategoryCount = 10;
inline constexpr std::array<Category, kCategoryCount> kAllCategories = {
    Category::c1, Category::c2, Category::c3, Category::c4, Category::c5,
    Category::c6, Category::c7, Category::c8, Category::c9, Category::c10};

std::string to_string(Category c);
std::optional<Category> parse_category(std::string_view s);
/// Human-readable domain name, used in prompts.
std::string_view category_title(Category c);
inline std::size_t category_index(Category c) { return static_cast<std::size_t>(c) - 1; }

enum class Complexity { basic, intermediate, advanced };
inline constexpr std::array<Complexity, 3> kAllComplexities = {
    Complexity::basic, Complexity::intermediate, Complexity::advanced};
std::string_view to_string(Complexity c);
std::optional<Complexity> parse_complexity(std::string_view s);
inline std::size_t complexity_index(Complexity c) { return static_cast<std::size_t>(c); }

enum class TaskType { open_ended, classification, generation };
inline constexpr std::array<TaskType, 3> kAllTaskTypes = {
    TaskType::open_ended, TaskType::classification, TaskType::generation};
std::string_view to_string(TaskType t);
std::optional<TaskType> parse_task_type(std::string_view s);
inline std::size_t task_type_index(TaskType t) { return static_cast<std::size_t>(t); }

enum class Origin { human, bootstrapped };
std::string_view to_string(Origin o);
std::optional<Origin> parse_origin(std::string_view s);

struct SeedTask {
  std::string id;
  std::string text;
  Category category = Category::c1;
  Complexity complexity = Complexity::basic;
  Origin origin = Origin::human;

  bool operator==(const SeedTask&) const = default;
};

struct InstructionCandidate {
  std::string id;
  std::string text;
  Category category = Category::c1;
  int round = 0;
  std::optional<TaskType> task_type;
};

struct JudgeVerdict {
  double grammar = 0.0;    // [0, 1]
  double bias = 0.0;       // [-1, 1], 0 is neutral
  double coherence = 0.0;  // [0, 1]
  bool factual = false;
  bool format_ok = false;
  bool regional_ok = false;
  bool gender_ok = false;
  bool political_ok = false;
  TaskType task_type = TaskType::open_ended;
  Complexity complexity = Complexity::basic;

  bool operator==(const JudgeVerdict&) const = default;
};

struct ResponseDraft {
  std::string text;
  double coherence = 0.0;  // [0, 1]
  // Full judge result the coherence was read from, reused when filtering.
  std::optional<JudgeVerdict> verdict;
};

// Machine-readable failure codes attached to a FilterReport.
namespace reason {
inline constexpr std::string_view kNoWords = "no_words";
inline constexpr std::string_view kWordRatio = "word_ratio_below_threshold";
inline constexpr std::string_view kUnicode = "unicode_inconsistent";
inline constexpr std::string_view kGrammar = "grammar_below_threshold";
inline constexpr std::string_view kReligiousBias = "religious_bias";
inline constexpr std::string_view kRegionalBias = "regional_bias";
inline constexpr std::string_view kGenderBias = "gender_bias";
inline constexpr std::string_view kPoliticalBias = "political_bias";
inline constexpr std::string_view kTooShort = "too_short";
inline constexpr std::string_view kCoherence = "coherence_below_threshold";
inline constexpr std::string_view kNotFactual = "not_factual";
inline constexpr std::string_view kBadFormat = "bad_format";
inline constexpr std::string_view kTooSimilar = "too_similar";
inline constexpr std::string_view kLowDiversity = "low_lexical_diversity";
inline constexpr std::string_view kDuplicateResponse = "duplicate_response";

inline constexpr std::array<std::string_view, 15> kAll = {
    kNoWords, kWordRatio, kUnicode, kGrammar, kReligiousBias,
    kRegionalBias, kGenderBias, kPoliticalBias, kTooShort, kCoherence,
    kNotFactual, kBadFormat, kTooSimilar, kLowDiversity, kDuplicateResponse};
}  // namespace reason

struct FilterReport {
  bool language_ok = false;
  bool cultural_ok = false;
  bool quality_ok = false;
  bool novelty_ok = false;
  bool accepted = false;
  std::vector<std::string> reasons;
  std::map<std::string, double> measurements;

  // Builds a report whose verdict is the conjunction of the four flags.
  static FilterReport make(bool language, bool cultural, bool quality, bool novelty,
                           std::vector<std::string> reasons,
                           std::map<std::string, double> measurements);

  bool has_reason(std::string_view code) const;
  bool operator==(const FilterReport&) const = default;
};

struct InstructPair {
  std::string id;
  std::string instruction;
  std::string response;
  TaskType task_type = TaskType::open_ended;
  Category category = Category::c1;
  Complexity complexity = Complexity::basic;
  int round = 0;
  FilterReport report;
  JudgeVerdict verdict;

  bool operator==(const InstructPair&) const = default;
};

// Codes returned by validate_pair.
namespace violation {
inline constexpr std::string_view kEmptyInstruction = "empty_instruction";
inline constexpr std::string_view kEmptyResponse = "empty_response";
inline constexpr std::string_view kScoreOutOfRange = "score_out_of_range";
inline constexpr std::string_view kConjunction = "conjunction_violated";
inline constexpr std::string_view kMissingReason = "missing_reason";
}  // namespace violation

/// Checks every type invariant of a pair. Empty result means well-formed.
std::vector<std::string> validate_pair(const InstructPair& pair);

std::string make_id(int round, std::size_t index);

// JSON mapping. Readers throw Error(parse_error) on schema violations.
json to_json(const SeedTask& t);
json to_json(const JudgeVerdict& v);
json to_json(const FilterReport& r);
json to_json(const InstructPair& p);
SeedTask seed_from_json(const json& j);
JudgeVerdict verdict_from_json(const json& j);
FilterReport report_from_json(const json& j);
InstructPair pair_from_json(const json& j);

/// Reads a dataset JSONL file.
std::vector<InstructPair> read_pairs(const std::string& path);
/// Writes one pair per line; the output is byte-stable for equal inputs.
void write_pairs(const std::string& path, const std::vector<InstructPair>& pairs);

}  // namespace bninstruct
