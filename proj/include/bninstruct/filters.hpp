#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "bninstruct/core.hpp"

namespace bninstruct {

/// Acceptance thresholds. Defaults are the published filter values.
struct Thresholds {
  double word_ratio = 0.95;  // minimum Bengali word share
  double grammar = 0.8;      // minimum judge grammar score
  double bias = 0.1;         // maximum |bias|
  double coherence = 0.8;    // minimum coherence
  double similarity = 0.7;   // maximum trigram similarity to any indexed instruction
  double ttr = 0.4;          // minimum type-token ratio

  bool operator==(const Thresholds&) const = default;
};

/// Minimum response length in words, per task type.
struct LengthPolicy {
  int open_ended = 50;
  int classification = 5;
  int generation = 80;

  int min_words(TaskType t) const;
  bool operator==(const LengthPolicy&) const = default;
};

json to_json(const Thresholds& t);
Thresholds thresholds_from_json(const json& j);
json to_json(const LengthPolicy& p);
LengthPolicy length_policy_from_json(const json& j);

// ---------------------------------------------------------------------------
// Text metrics

/// Share of Bengali words among alphabetic whitespace tokens, after fenced
/// code blocks are removed. A word is Bengali when at least half of its
/// alphabetic characters lie in U+0980..U+09FF. Throws Error(no_words).
double bengali_word_ratio(std::string_view text);

/// True when every character outside fenced code blocks is Bengali-block,
/// whitespace, ASCII punctuation, a danda, or a digit.
bool unicode_consistency(std::string_view text);

/// Sorted, de-duplicated character trigrams of an already normalized text,
/// each packed as three 21-bit code points.
std::vector<std::uint64_t> trigram_set(std::string_view normalized);

/// Jaccard similarity of character-trigram sets over normalized text. Texts
/// under three characters compare by equality. Throws Error(empty_text).
double trigram_similarity(std::string_view a, std::string_view b);

/// Distinct / total word tokens (NFC, punctuation stripped per token).
/// Throws Error(no_words).
double type_token_ratio(std::string_view text);

/// Number of whitespace-separated tokens.
std::size_t word_count(std::string_view text);

// ---------------------------------------------------------------------------
// Novelty index

// Previously seen instructions (seeds and accepted pairs) and accepted
// responses. Single writer; readers must not overlap with insert().
class NoveltyIndex {
 public:
  struct Entry {
    std::string id;
    Category category = Category::c1;
    std::string instruction;  // normalized
    std::vector<std::uint64_t> trigrams;
    std::string response;     // normalized, empty for seeds
  };

  /// Throws Error(duplicate_id).
  void insert(std::string id, Category category, std::string_view instruction,
              std::string_view response = {});

  bool contains(const std::string& id) const { return ids_.count(id) > 0; }
  std::size_t size() const { return entries_.size(); }
  const std::vector<Entry>& entries() const { return entries_; }

  /// Highest trigram similarity between the instruction and any entry; 0 when empty.
  double max_similarity(std::string_view instruction) const;
  /// True if a same-category entry has this response (after normalization).
  bool has_response(Category category, std::string_view response) const;

 private:
  std::vector<Entry> entries_;
  std::unordered_set<std::string> ids_;
  std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> postings_;
  std::unordered_set<std::string> short_instructions_;
  std::array<std::unordered_set<std::string>, kCategoryCount> responses_;
};

// ---------------------------------------------------------------------------
// Criteria

struct CriterionOutcome {
  bool passed = false;
  std::vector<std::string> reasons;
  std::map<std::string, double> measurements;
};

CriterionOutcome language_filter(std::string_view instruction, std::string_view response,
                                 const JudgeVerdict& verdict, const Thresholds& t = {});
CriterionOutcome cultural_filter(const JudgeVerdict& verdict, const Thresholds& t = {});
CriterionOutcome quality_filter(std::string_view instruction, std::string_view response,
                                TaskType task_type, const JudgeVerdict& verdict,
                                const LengthPolicy& policy = {}, const Thresholds& t = {});
CriterionOutcome novelty_filter(std::string_view instruction, std::string_view response,
                                Category category, const NoveltyIndex& index,
                                const Thresholds& t = {});

struct PairUnderTest {
  std::string_view instruction;
  std::string_view response;
  TaskType task_type = TaskType::open_ended;
  Category category = Category::c1;
};

/// Runs all four criteria (no short-circuit) and combines them. On acceptance
/// the caller inserts the pair into the index.
FilterReport accept(const PairUnderTest& pair, const JudgeVerdict& verdict,
                    const NoveltyIndex& index, const LengthPolicy& policy = {},
                    const Thresholds& t = {});

}  // namespace bninstruct
