#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "bninstruct/teacher.hpp"

// Deterministic stand-in for both teacher roles.
//
// Every reply is a pure function of (request content, run seed). The mock
// recognises which operation a request belongs to from its system prompt.
//
//   generate  numbered Bengali instructions built from a word list; the
//             template (and so the task type) and words come from a hash of
//             the prompt and the item index.
//   classify  keyed on the imperative verb: a classification verb wins, then
//             a writing verb, otherwise open_ended.
//   draft     Bengali prose sized for the task type, ending in "(N)" with the
//             draft number in Bengali digits.
//   judge     grammar 0.9, bias 0.0, coherence 0.85, all flags true. A draft
//             suffix "(N)" selects coherence from the cycle instead.
//
// Marker tokens placed in seed texts are copied into every generated
// instruction, and from there steer the draft and judge replies so that each
// filter branch can be triggered.
namespace bninstruct::mock {

inline constexpr std::string_view kMarkerGrammar = "ব্যাকরণত্রুটি";     // grammar 0.5
inline constexpr std::string_view kMarkerBias = "পক্ষপাতদুষ্ট";         // bias 0.5
inline constexpr std::string_view kMarkerRegional = "আঞ্চলিকপক্ষপাত";   // regional_ok false
inline constexpr std::string_view kMarkerGender = "লিঙ্গপক্ষপাত";       // gender_ok false
inline constexpr std::string_view kMarkerPolitical = "দলীয়পক্ষপাত";     // political_ok false
inline constexpr std::string_view kMarkerIncoherent = "অসংলগ্ন";        // coherence 0.5
inline constexpr std::string_view kMarkerFalse = "ভুলতথ্য";             // factual false
inline constexpr std::string_view kMarkerUnformatted = "বিন্যাসহীন";    // format_ok false
inline constexpr std::string_view kMarkerShort = "সংক্ষিপ্ত";           // three-word drafts
inline constexpr std::string_view kMarkerEnglish = "ইংরেজিমিশ্র";       // English words in drafts
inline constexpr std::string_view kMarkerRepetitive = "একঘেয়ে";         // one word repeated
inline constexpr std::string_view kMarkerDuplicate = "পুনরাবৃত্ত";       // same draft for every instruction
inline constexpr std::string_view kMarkerCopy = "অনুলিপি";              // instruction copies a seed
inline constexpr std::string_view kMarkerGarbled = "অবোধ্য";            // judge never answers JSON
inline constexpr std::string_view kMarkerUnstable = "অস্থির";           // bad first reply, good re-ask
inline constexpr std::string_view kMarkerOutage = "বিভ্রাট";            // transport failure

/// All markers, in the fixed order they are appended to instructions.
const std::vector<std::string_view>& all_markers();

/// Markers appearing as whitespace-separated tokens (punctuation ignored).
std::vector<std::string_view> markers_in(std::string_view text);

/// Mock task typing rule, shared by the classify and judge replies.
TaskType task_type_rule(std::string_view instruction);

/// The mock's word list (NFC).
const std::vector<std::string>& vocabulary();

struct MockOptions {
  std::uint64_t seed = 0;
  std::vector<double> draft_coherence_cycle = {0.7, 0.9, 0.8};
};

class MockTransport : public ChatTransport {
 public:
  explicit MockTransport(MockOptions options = {});
  std::string complete(const ChatRequest& request) override;

 private:
  std::string generate_reply(std::string_view user) const;
  std::string classify_reply(const ChatRequest& request) const;
  std::string draft_reply(std::string_view user) const;
  std::string judge_reply(const ChatRequest& request) const;

  MockOptions options_;
};

/// FNV-1a 64; stable across platforms, used to key the mock's choices.
std::uint64_t stable_hash(std::string_view data, std::uint64_t seed = 0);

}  // namespace bninstruct::mock
