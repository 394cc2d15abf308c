#include "bninstruct/prompts.hpp"

namespace bninstruct::prompts {

const std::string_view kGenerateSystem =
    "You write new task instructions in Bengali for an instruction-tuning dataset. "
    "Each instruction must be self-contained, written in Bengali script, culturally "
    "grounded, and clearly different from the example tasks you are shown.";

const std::string_view kClassifySystem =
    "You label task instructions by the kind of answer they expect: open_ended "
    "(explanations, opinions, analysis), classification (choosing among labels or "
    "categories), or generation (producing new text such as stories, essays, code).";

const std::string_view kDraftSystem =
    "You answer Bengali task instructions thoroughly and accurately. Respond in "
    "Bengali only, except inside fenced code blocks when code is required.";

const std::string_view kJudgeSystem =
    "You review Bengali instruction-response pairs for a training dataset. Reply "
    "with exactly one JSON object and nothing else, using these fields:\n"
    "  \"grammar\": number in [0,1], grammatical correctness of the Bengali text\n"
    "  \"bias\": number in [-1,1], religious slant of the pair; 0 means neutral\n"
    "  \"coherence\": number in [0,1], how well the response addresses the instruction\n"
    "  \"factual\": boolean, every factual claim agrees with Bengali Wikipedia\n"
    "  \"format_ok\": boolean, uses proper paragraph breaks, lists or code blocks\n"
    "  \"regional_ok\": boolean, favours no particular region or dialect\n"
    "  \"gender_ok\": boolean, pronouns and roles are balanced\n"
    "  \"political_ok\": boolean, free of partisan content\n"
    "  \"task_type\": one of \"open_ended\", \"classification\", \"generation\"\n"
    "  \"complexity\": one of \"basic\", \"intermediate\", \"advanced\", judged by "
    "linguistic complexity and cognitive demand";

std::vector<ChatMessage> generate(const GenerationRequest& request, int round) {
  std::string user;
  user += "Batch: r" + std::to_string(round) + "\n";
  user += "Category: " + to_string(request.target_category) + " (" +
          std::string(category_title(request.target_category)) + ")\n";
  user += "Count: " + std::to_string(request.batch_size) + "\n";
  user += "Example tasks:\n";
  for (const auto& seed : request.seeds) {
    user += "<seed>\n" + seed.text + "\n</seed>\n";
  }
  user += "Write " + std::to_string(request.batch_size) +
          " new, distinct instructions for the category above. Reply with a numbered "
          "list, one instruction per line, formatted as \"1. ...\". Do not include answers.";
  return {{"system", std::string(kGenerateSystem)}, {"user", std::move(user)}};
}

std::vector<ChatMessage> classify(std::string_view instruction) {
  std::string user = "<instruction>\n" + std::string(instruction) + "\n</instruction>\n" +
                     "Label the instruction as open_ended, classification, or generation. "
                     "Reply with the label only.";
  return {{"system", std::string(kClassifySystem)}, {"user", std::move(user)}};
}

std::vector<ChatMessage> classify_reask(std::vector<ChatMessage> conversation,
                                        std::string_view bad_reply) {
  conversation.push_back({"assistant", std::string(bad_reply)});
  conversation.push_back(
      {"user",
       "That reply is not one of the allowed labels. Reply with exactly one word: "
       "open_ended, classification, or generation."});
  return conversation;
}

std::vector<ChatMessage> draft(std::string_view instruction, TaskType task_type,
                               int draft_number, int draft_count) {
  std::string user = "Task type: " + std::string(to_string(task_type)) + "\n" +
                     "Draft: " + std::to_string(draft_number) + " of " +
                     std::to_string(draft_count) + "\n" + "<instruction>\n" +
                     std::string(instruction) + "\n</instruction>\n" +
                     "Write a complete response in Bengali. Use paragraphs, lists or fenced "
                     "code blocks where they help.";
  return {{"system", std::string(kDraftSystem)}, {"user", std::move(user)}};
}

std::vector<ChatMessage> judge(std::string_view instruction, std::string_view response) {
  std::string user = "<instruction>\n" + std::string(instruction) + "\n</instruction>\n" +
                     "<response>\n" + std::string(response) + "\n</response>";
  return {{"system", std::string(kJudgeSystem)}, {"user", std::move(user)}};
}

std::vector<ChatMessage> judge_reask(std::vector<ChatMessage> conversation,
                                     std::string_view bad_reply) {
  conversation.push_back({"assistant", std::string(bad_reply)});
  conversation.push_back(
      {"user",
       "That reply was not a single JSON object with all required fields. Reply again "
       "with only the JSON object."});
  return conversation;
}

std::vector<std::string> extract_all_tagged(std::string_view text, std::string_view tag) {
  const std::string open = "<" + std::string(tag) + ">\n";
  const std::string close = "\n</" + std::string(tag) + ">";
  std::vector<std::string> out;
  std::size_t pos = 0;
  for (;;) {
    auto b = text.find(open, pos);
    if (b == std::string_view::npos) break;
    b += open.size();
    auto e = text.find(close, b);
    if (e == std::string_view::npos) break;
    out.emplace_back(text.substr(b, e - b));
    pos = e + close.size();
  }
  return out;
}

std::string extract_tagged(std::string_view text, std::string_view tag) {
  auto all = extract_all_tagged(text, tag);
  return all.empty() ? std::string() : all.front();
}

std::string header_value(std::string_view text, std::string_view key) {
  const std::string prefix = std::string(key) + ": ";
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    auto line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    if (line.rfind(prefix, 0) == 0) return std::string(line.substr(prefix.size()));
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  return {};
}

}  // namespace bninstruct::prompts
