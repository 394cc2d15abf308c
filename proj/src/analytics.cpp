#include "bninstruct/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>

#include "bninstruct/unicode.hpp"

namespace bninstruct {

CorpusStats& CorpusStats::operator+=(const CorpusStats& o) {
  files += o.files;
  tokens += o.tokens;
  sentences += o.sentences;
  return *this;
}

CorpusStats operator+(CorpusStats a, const CorpusStats& b) { return a += b; }

namespace {

bool is_terminator(char32_t c) {
  return c == kDanda || c == U'?' || c == U'!' || c == U'.';
}

bool is_closer(char32_t c) {
  return c == U'"' || c == U'\'' || c == U')' || c == U']' || c == U'}' || c == 0x2019 ||
         c == 0x201D || c == 0x00BB;
}

}  // namespace

CorpusStats text_stats(std::string_view utf8) {
  const auto text = decode_utf8(utf8);
  CorpusStats s;
  s.tokens = split_whitespace(std::u32string_view(text)).size();

  bool content = false;  // segment holds a non-whitespace, non-terminator char
  std::size_t i = 0;
  while (i < text.size()) {
    const char32_t c = text[i];
    if (is_terminator(c)) {
      std::size_t j = i + 1;
      while (j < text.size() && is_closer(text[j])) ++j;
      if (j == text.size() || is_space(text[j])) {
        if (content) ++s.sentences;
        content = false;
        i = j;
        continue;
      }
    } else if (!is_space(c)) {
      content = true;
    }
    ++i;
  }
  if (content) ++s.sentences;
  return s;
}

CorpusStats file_stats(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io_error, "cannot open " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(ErrorCode::io_error, "read failed for " + path);
  if (auto bad = find_invalid_utf8(bytes)) {
    throw Error(ErrorCode::encoding_error,
                path + ": invalid UTF-8 at byte offset " + std::to_string(*bad));
  }
  auto s = text_stats(bytes);
  s.files = 1;
  return s;
}

CorpusStats corpus_stats(std::span<const std::string> paths) {
  CorpusStats total;
  for (const auto& p : paths) total += file_stats(p);
  return total;
}

std::vector<std::string> list_corpus_files(const std::string& dir) {
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) {
    throw Error(ErrorCode::io_error, "not a directory: " + dir);
  }
  std::vector<std::string> out;
  for (auto it = std::filesystem::recursive_directory_iterator(dir, ec);
       !ec && it != std::filesystem::recursive_directory_iterator(); it.increment(ec)) {
    if (it->is_regular_file()) out.push_back(it->path().string());
  }
  if (ec) throw Error(ErrorCode::io_error, "cannot list " + dir + ": " + ec.message());
  std::sort(out.begin(), out.end());
  return out;
}

json to_json(const CorpusStats& s) {
  return json{{"files", s.files},
              {"tokens", s.tokens},
              {"sentences", s.sentences},
              {"tokens_per_sentence", s.tokens_per_sentence()}};
}

DatasetReport dataset_report(std::span<const InstructPair> pairs,
                             std::optional<double> acceptance_rate, const ReportPolicy& policy) {
  DatasetReport r;
  r.acceptance_rate = acceptance_rate;
  r.total = pairs.size();
  if (pairs.empty()) return r;

  std::array<std::size_t, 3> complexity{}, types{};
  for (const auto& p : pairs) {
    ++r.per_category[category_index(p.category)];
    ++complexity[complexity_index(p.complexity)];
    ++types[task_type_index(p.task_type)];
  }
  const double n = static_cast<double>(pairs.size());
  for (std::size_t i = 0; i < 3; ++i) {
    r.per_complexity[i] = static_cast<double>(complexity[i]) / n;
    r.per_task_type[i] = static_cast<double>(types[i]) / n;
  }

  constexpr double eps = 1e-9;
  for (auto c : kAllCategories) {
    if (r.per_category[category_index(c)] == 0) r.flags.push_back("category_missing:" + to_string(c));
  }
  for (auto c : kAllComplexities) {
    const auto i = complexity_index(c);
    if (std::abs(r.per_complexity[i] - policy.complexity_targets[i]) >
        policy.complexity_tolerance + eps) {
      r.flags.push_back("complexity_out_of_tolerance:" + std::string(to_string(c)));
    }
  }
  if (policy.task_type_tolerance >= 0) {
    for (auto t : kAllTaskTypes) {
      const auto i = task_type_index(t);
      if (std::abs(r.per_task_type[i] - 1.0 / 3.0) > policy.task_type_tolerance + eps) {
        r.flags.push_back("task_type_out_of_tolerance:" + std::string(to_string(t)));
      }
    }
  }
  return r;
}

json to_json(const DatasetReport& r) {
  json cats = json::object();
  json mix = json::object();
  json types = json::object();
  if (r.total > 0) {
    for (auto c : kAllCategories) cats[to_string(c)] = r.per_category[category_index(c)];
    for (auto c : kAllComplexities) mix[std::string(to_string(c))] = r.per_complexity[complexity_index(c)];
    for (auto t : kAllTaskTypes) types[std::string(to_string(t))] = r.per_task_type[task_type_index(t)];
  }
  json out{{"total", r.total},
           {"per_category", cats},
           {"per_complexity", mix},
           {"per_task_type", types}};
  out["acceptance_rate"] = r.acceptance_rate ? json(*r.acceptance_rate) : json(nullptr);
  out["flags"] = r.flags;
  return out;
}

}  // namespace bninstruct
