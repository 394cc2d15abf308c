#include "bninstruct/mock_teacher.hpp"

#include <algorithm>
#include <sstream>

#include "bninstruct/prompts.hpp"
#include "bninstruct/unicode.hpp"

namespace bninstruct::mock {

namespace {

// clang-format off
const char* const kWords[] = {
  "নদী", "পাহাড়", "আকাশ", "বৃষ্টি", "মেঘ", "সূর্য", "চাঁদ", "তারা", "বাতাস", "সমুদ্র",
  "গাছ", "ফুল", "পাখি", "মাছ", "ধান", "গ্রাম", "শহর", "বাজার", "স্কুল", "কলেজ",
  "বই", "খাতা", "কলম", "শিক্ষক", "ছাত্র", "পরিবার", "বন্ধু", "খেলা", "গান", "নাচ",
  "উৎসব", "মেলা", "পিঠা", "ভাত", "ডাল", "চা", "দুধ", "মিষ্টি", "আম", "কাঁঠাল",
  "লিচু", "কৃষক", "জেলে", "শ্রমিক", "ডাক্তার", "প্রকৌশলী", "বিজ্ঞান", "গণিত", "ইতিহাস", "ভূগোল",
  "অর্থনীতি", "সমাজ", "সংস্কৃতি", "ঐতিহ্য", "ভাষা", "সাহিত্য", "কবিতা", "গল্প", "উপন্যাস", "নাটক",
  "চলচ্চিত্র", "ছবি", "রং", "সবুজ", "লাল", "নীল", "হলুদ", "সাদা", "কালো", "সুন্দর",
  "বড়", "ছোট", "নতুন", "পুরনো", "দ্রুত", "ধীর", "সহজ", "কঠিন", "গরম", "ঠান্ডা",
  "সকাল", "দুপুর", "বিকেল", "সন্ধ্যা", "রাত", "দিন", "সপ্তাহ", "মাস", "বছর", "শীত",
  "গ্রীষ্ম", "বসন্ত", "শরৎ", "হেমন্ত", "বর্ষা", "ঋতু", "নৌকা", "রেল", "বাস", "রাস্তা",
  "সেতু", "বন্দর", "কারখানা", "দোকান", "ব্যবসা", "টাকা", "সঞ্চয়", "বিনিয়োগ", "বাজেট", "পরিকল্পনা",
  "উন্নয়ন", "পরিবেশ", "দূষণ", "জলবায়ু", "শক্তি", "বিদ্যুৎ", "কম্পিউটার", "প্রোগ্রাম", "তথ্য", "পরিসংখ্যান",
  "গড়", "সংখ্যা", "হিসাব", "জ্যামিতি", "ত্রিভুজ", "বৃত্ত", "রেখা", "কোণ", "সমীকরণ", "ভগ্নাংশ",
  "শতাংশ", "পদার্থ", "রসায়ন", "কোষ", "উদ্ভিদ", "প্রাণী", "শরীর", "স্বাস্থ্য", "খাদ্য", "পুষ্টি",
  "ব্যায়াম", "ঘুম", "স্বপ্ন", "আশা", "ভালোবাসা", "সাহস", "ধৈর্য", "সততা", "দায়িত্ব", "অধিকার",
  "কর্তব্য", "নিয়ম", "আইন", "সংবাদ", "পত্রিকা", "রেডিও", "টেলিভিশন", "মোবাইল", "ইন্টারনেট", "যোগাযোগ",
  "চিঠি", "বার্তা", "প্রশ্ন", "উত্তর", "সমস্যা", "সমাধান", "কারণ", "ফলাফল", "উদাহরণ", "ধারণা",
  "বিশ্লেষণ", "তুলনা", "পার্থক্য", "মিল", "গুরুত্ব", "প্রভাব", "ভূমিকা", "অবদান", "মানুষ", "শিশু",
  "দেশ", "পতাকা", "স্বাধীনতা", "বিজয়", "শহিদ", "মিনার", "স্মৃতি", "জাদুঘর", "গ্রন্থাগার", "হাসপাতাল",
  "খেলোয়াড়", "ক্রিকেট", "ফুটবল", "দাবা", "সাঁতার", "দৌড়", "চিত্রকলা", "বাঁশি", "ঢোল", "একতারা",
  "নকশিকাঁথা", "মাটি", "পানি", "আগুন", "বরফ", "পাথর", "লোহা", "সোনা", "রুপা", "কাঠ",
  "কাগজ", "সুতা", "কাপড়", "ঘর", "দরজা", "জানালা", "উঠান", "পুকুর", "খাল", "বিল",
  "হাওর", "চর", "দ্বীপ", "জঙ্গল", "সুন্দরবন", "বাঘ", "হরিণ", "হাতি", "গরু", "ছাগল",
  "বিড়াল", "ময়না", "দোয়েল", "শালিক", "কোকিল", "টিয়া", "শাপলা", "কদম", "শিউলি", "কৃষ্ণচূড়া",
};

const char* const kEnglishWords[] = {
  "market", "analysis", "system", "growth", "policy", "river", "school", "data",
};
// clang-format on

std::uint64_t splitmix(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

class Stream {
 public:
  explicit Stream(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next() { return splitmix(state_); }
  std::size_t below(std::size_t n) { return static_cast<std::size_t>(next() % n); }
  const std::string& word() {
    const auto& v = vocabulary();
    return v[below(v.size())];
  }

 private:
  std::uint64_t state_;
};

std::string bengali_number(int n) {
  std::u32string digits;
  for (char c : std::to_string(n)) digits.push_back(static_cast<char32_t>(0x09E6 + (c - '0')));
  return encode_utf8(digits);
}

// Parses a trailing "(N)" written in Bengali digits; 0 if absent.
int draft_suffix(std::string_view response) {
  auto text = decode_utf8(trim(response));
  if (text.size() < 3 || text.back() != U')') return 0;
  auto open = text.rfind(U'(');
  if (open == std::u32string::npos || open + 2 > text.size() - 1) return 0;
  int n = 0;
  for (std::size_t i = open + 1; i + 1 < text.size(); ++i) {
    if (text[i] < 0x09E6 || text[i] > 0x09EF) return 0;
    n = n * 10 + static_cast<int>(text[i] - 0x09E6);
  }
  return n;
}

bool has(const std::vector<std::string_view>& markers, std::string_view m) {
  return std::find(markers.begin(), markers.end(), m) != markers.end();
}

int user_turns(const ChatRequest& request) {
  return static_cast<int>(std::count_if(request.messages.begin(), request.messages.end(),
                                        [](const ChatMessage& m) { return m.role == "user"; }));
}

const std::string& first_user(const ChatRequest& request) {
  for (const auto& m : request.messages) {
    if (m.role == "user") return m.content;
  }
  throw TransportError(400, "mock: request has no user message");
}

std::size_t words_for(TaskType t) {
  switch (t) {
    case TaskType::generation: return 90;
    case TaskType::open_ended: return 60;
    case TaskType::classification: return 12;
  }
  return 60;
}

std::string prose(Stream& s, std::size_t n) {
  std::string out;
  for (std::size_t i = 0; i < n; ++i) {
    if (i) out += ' ';
    out += s.word();
    if (i % 8 == 7 || i + 1 == n) out += "।";
  }
  return out;
}

}  // namespace

std::uint64_t stable_hash(std::string_view data, std::uint64_t seed) {
  std::uint64_t h = 0xcbf29ce484222325ULL ^ (seed * 0x100000001b3ULL);
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

const std::vector<std::string>& vocabulary() {
  static const std::vector<std::string> words = [] {
    std::vector<std::string> v;
    for (const char* w : kWords) v.push_back(nfc(w));
    return v;
  }();
  return words;
}

const std::vector<std::string_view>& all_markers() {
  static const std::vector<std::string_view> markers = {
      kMarkerGrammar,   kMarkerBias,       kMarkerRegional,   kMarkerGender,
      kMarkerPolitical, kMarkerIncoherent, kMarkerFalse,      kMarkerUnformatted,
      kMarkerShort,     kMarkerEnglish,    kMarkerRepetitive, kMarkerDuplicate,
      kMarkerCopy,      kMarkerGarbled,    kMarkerUnstable,   kMarkerOutage};
  return markers;
}

std::vector<std::string_view> markers_in(std::string_view text) {
  std::vector<std::string> tokens;
  for (auto& w : split_whitespace(std::u32string_view(decode_utf8(nfc(text))))) {
    std::u32string core;
    for (char32_t c : w) {
      if (!is_punctuation(c)) core.push_back(c);
    }
    tokens.push_back(encode_utf8(core));
  }
  std::vector<std::string_view> found;
  for (auto m : all_markers()) {
    const auto normalized = nfc(m);
    if (std::find(tokens.begin(), tokens.end(), normalized) != tokens.end()) found.push_back(m);
  }
  return found;
}

TaskType task_type_rule(std::string_view instruction) {
  const auto text = nfc(instruction);
  for (const char* verb : {"শ্রেণিবদ্ধ", "শ্রেণীবদ্ধ", "শ্রেণিবিভাগ", "চিহ্নিত"}) {
    if (text.find(nfc(verb)) != std::string::npos) return TaskType::classification;
  }
  for (const char* verb : {"লিখুন", "রচনা"}) {
    if (text.find(nfc(verb)) != std::string::npos) return TaskType::generation;
  }
  return TaskType::open_ended;
}

MockTransport::MockTransport(MockOptions options) : options_(std::move(options)) {
  if (options_.draft_coherence_cycle.empty()) options_.draft_coherence_cycle = {0.85};
}

std::string MockTransport::complete(const ChatRequest& request) {
  if (request.messages.empty()) throw TransportError(400, "mock: empty conversation");
  const auto& system = request.messages.front().content;
  const auto& user = first_user(request);
  if (has(markers_in(user), kMarkerOutage)) {
    throw TransportError(0, "mock: simulated outage");
  }
  if (system == prompts::kGenerateSystem) return nfc(generate_reply(user));
  if (system == prompts::kClassifySystem) return classify_reply(request);
  if (system == prompts::kDraftSystem) return nfc(draft_reply(user));
  if (system == prompts::kJudgeSystem) return judge_reply(request);
  throw TransportError(400, "mock: unrecognised request");
}

std::string MockTransport::generate_reply(std::string_view user) const {
  const auto seeds = prompts::extract_all_tagged(user, "seed");
  const int count = std::max(1, std::atoi(prompts::header_value(user, "Count").c_str()));

  std::vector<std::string_view> markers;
  for (const auto& s : seeds) {
    for (auto m : markers_in(s)) {
      if (!has(markers, m)) markers.push_back(m);
    }
  }
  std::sort(markers.begin(), markers.end(), [](std::string_view a, std::string_view b) {
    const auto& all = all_markers();
    return std::find(all.begin(), all.end(), a) < std::find(all.begin(), all.end(), b);
  });

  const auto base = stable_hash(user, options_.seed);
  std::ostringstream out;
  for (int i = 0; i < count; ++i) {
    Stream s(base + static_cast<std::uint64_t>(i) * 0x9E3779B97F4A7C15ULL);
    std::string text;
    if (has(markers, kMarkerCopy) && !seeds.empty()) {
      text = collapse_whitespace(seeds.front());
    } else {
      std::string words;
      for (int w = 0; w < 7; ++w) {
        if (w) words += ' ';
        words += s.word();
      }
      switch (s.below(3)) {
        case 0: text = "নিচের শব্দগুলো অর্থ অনুযায়ী শ্রেণিবদ্ধ করুন: " + words + "।"; break;
        case 1: text = words + " বিষয়ে একটি অনুচ্ছেদ লিখুন।"; break;
        default: text = words + " সম্পর্কে আপনার মতামত ব্যাখ্যা করুন।"; break;
      }
      for (auto m : markers) text += " " + std::string(m);
    }
    out << (i + 1) << ". " << text << "\n";
  }
  return out.str();
}

std::string MockTransport::classify_reply(const ChatRequest& request) const {
  const auto instruction = prompts::extract_tagged(first_user(request), "instruction");
  if (has(markers_in(instruction), kMarkerUnstable) && user_turns(request) < 2) {
    return "এটি বলা কঠিন";
  }
  return std::string(to_string(task_type_rule(instruction)));
}

std::string MockTransport::draft_reply(std::string_view user) const {
  const auto instruction = prompts::extract_tagged(user, "instruction");
  const auto type = parse_task_type(prompts::header_value(user, "Task type"))
                        .value_or(TaskType::open_ended);
  const int number = std::max(1, std::atoi(prompts::header_value(user, "Draft").c_str()));
  const auto markers = markers_in(instruction);

  std::size_t n = words_for(type);
  std::string body;
  if (has(markers, kMarkerDuplicate)) {
    Stream s(stable_hash("duplicate:" + std::string(to_string(type)), options_.seed));
    body = prose(s, n);
  } else {
    Stream s(stable_hash(user, options_.seed));
    if (has(markers, kMarkerShort)) {
      body = prose(s, 3);
    } else if (has(markers, kMarkerRepetitive)) {
      const auto& w = s.word();
      n = std::max<std::size_t>(n, 60);
      for (std::size_t i = 0; i < n; ++i) body += (i ? " " : "") + w;
      body += "।";
    } else if (has(markers, kMarkerEnglish)) {
      for (std::size_t i = 0; i < n; ++i) {
        if (i) body += ' ';
        body += (i % 4 == 3) ? kEnglishWords[s.below(std::size(kEnglishWords))] : s.word();
      }
      body += "।";
    } else {
      body = prose(s, n);
    }
  }
  return body + " (" + bengali_number(number) + ")";
}

std::string MockTransport::judge_reply(const ChatRequest& request) const {
  const auto& user = first_user(request);
  const auto instruction = prompts::extract_tagged(user, "instruction");
  const auto response = prompts::extract_tagged(user, "response");
  auto markers = markers_in(instruction);
  for (auto m : markers_in(response)) {
    if (!has(markers, m)) markers.push_back(m);
  }

  if (has(markers, kMarkerGarbled)) return "দুঃখিত, আমি এই জোড়াটি মূল্যায়ন করতে পারছি না।";
  if (has(markers, kMarkerUnstable) && user_turns(request) < 2) return "{\"grammar\": ";

  JudgeVerdict v;
  v.grammar = has(markers, kMarkerGrammar) ? 0.5 : 0.9;
  v.bias = has(markers, kMarkerBias) ? 0.5 : 0.0;
  if (has(markers, kMarkerIncoherent)) {
    v.coherence = 0.5;
  } else if (int n = draft_suffix(response); n > 0) {
    const auto& cycle = options_.draft_coherence_cycle;
    v.coherence = cycle[static_cast<std::size_t>(n - 1) % cycle.size()];
  } else {
    v.coherence = 0.85;
  }
  v.factual = !has(markers, kMarkerFalse);
  v.format_ok = !has(markers, kMarkerUnformatted);
  v.regional_ok = !has(markers, kMarkerRegional);
  v.gender_ok = !has(markers, kMarkerGender);
  v.political_ok = !has(markers, kMarkerPolitical);
  v.task_type = task_type_rule(instruction);
  const auto bucket = stable_hash(normalize_text(instruction), options_.seed ^ 0xC0FFEEULL) % 10;
  v.complexity = bucket < 4 ? Complexity::basic
                 : bucket < 8 ? Complexity::intermediate
                              : Complexity::advanced;
  return to_json(v).dump();
}

}  // namespace bninstruct::mock
