#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bninstruct/core.hpp"

namespace bninstruct {

struct CorpusStats {
  std::size_t files = 0;
  std::size_t tokens = 0;
  std::size_t sentences = 0;

  double tokens_per_sentence() const {
    return sentences == 0 ? 0.0 : static_cast<double>(tokens) / static_cast<double>(sentences);
  }
  CorpusStats& operator+=(const CorpusStats& other);
  bool operator==(const CorpusStats&) const = default;
};

CorpusStats operator+(CorpusStats a, const CorpusStats& b);

/// Token and sentence counts for one text (files = 0).
///
/// Tokens are whitespace-separated units. A sentence ends at a danda, '?',
/// '!' or '.' that is followed (after any closing quotes or brackets) by
/// whitespace or the end of the text, provided the segment holds something
/// besides terminators. A non-empty trailing segment is a sentence too.
CorpusStats text_stats(std::string_view utf8);

/// Throws io_error, or encoding_error naming the file and byte offset.
CorpusStats file_stats(const std::string& path);
CorpusStats corpus_stats(std::span<const std::string> paths);

/// Regular files under dir, recursively, in sorted path order.
std::vector<std::string> list_corpus_files(const std::string& dir);

json to_json(const CorpusStats& stats);

struct ReportPolicy {
  std::array<double, 3> complexity_targets = {0.40, 0.40, 0.20};
  double complexity_tolerance = 0.05;
  double task_type_tolerance = 0.10;  // negative disables the task-type flags
};

struct DatasetReport {
  std::size_t total = 0;
  std::array<std::size_t, kCategoryCount> per_category{};
  std::array<double, 3> per_complexity{};
  std::array<double, 3> per_task_type{};
  std::optional<double> acceptance_rate;
  std::vector<std::string> flags;
};

/// Distribution summary of a generated dataset; empty input yields an empty
/// report with no flags.
DatasetReport dataset_report(std::span<const InstructPair> pairs,
                             std::optional<double> acceptance_rate = std::nullopt,
                             const ReportPolicy& policy = {});

json to_json(const DatasetReport& report);

}  // namespace bninstruct
