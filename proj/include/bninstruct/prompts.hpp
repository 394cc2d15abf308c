#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "bninstruct/teacher.hpp"

// Prompt texts for the generator and judge roles. Each builder returns the
// full message list for one request; re-ask builders extend a conversation.
namespace bninstruct::prompts {

extern const std::string_view kGenerateSystem;
extern const std::string_view kClassifySystem;
extern const std::string_view kDraftSystem;
extern const std::string_view kJudgeSystem;

std::vector<ChatMessage> generate(const GenerationRequest& request, int round);
std::vector<ChatMessage> classify(std::string_view instruction);
std::vector<ChatMessage> classify_reask(std::vector<ChatMessage> conversation,
                                        std::string_view bad_reply);
std::vector<ChatMessage> draft(std::string_view instruction, TaskType task_type,
                               int draft_number, int draft_count);
std::vector<ChatMessage> judge(std::string_view instruction, std::string_view response);
std::vector<ChatMessage> judge_reask(std::vector<ChatMessage> conversation,
                                     std::string_view bad_reply);

/// Text between <tag> and </tag> on their own lines, or empty.
std::string extract_tagged(std::string_view text, std::string_view tag);
std::vector<std::string> extract_all_tagged(std::string_view text, std::string_view tag);
/// Value of a "Key: value" header line, or empty.
std::string header_value(std::string_view text, std::string_view key);

}  // namespace bninstruct::prompts
