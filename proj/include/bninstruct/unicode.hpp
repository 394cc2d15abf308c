#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

// UTF-8 helpers shared by the filters, analytics and eval graders.
namespace bninstruct {

/// Byte offset of the first malformed UTF-8 sequence, if any.
std::optional<std::size_t> find_invalid_utf8(std::string_view bytes);

/// Decodes UTF-8. Throws Error(encoding_error) naming the byte offset.
std::u32string decode_utf8(std::string_view bytes);
std::string encode_utf8(std::u32string_view text);

/// Canonical composition (NFC).
std::string nfc(std::string_view text);

bool is_space(char32_t c);
bool is_alphabetic(char32_t c);
bool is_punctuation(char32_t c);

inline bool in_bengali_block(char32_t c) { return c >= 0x0980 && c <= 0x09FF; }
inline constexpr char32_t kDanda = 0x0964;
inline constexpr char32_t kDoubleDanda = 0x0965;

std::string trim(std::string_view text);
/// Trims and collapses every run of whitespace to a single ASCII space.
std::string collapse_whitespace(std::string_view text);
/// NFC followed by whitespace collapsing; the comparison form for novelty checks.
std::string normalize_text(std::string_view text);

std::vector<std::u32string> split_whitespace(std::u32string_view text);
std::vector<std::string> split_whitespace(std::string_view text);

/// Removes fenced code blocks: a line whose trimmed form starts with ``` opens a
/// block and the next such line closes it; both fence lines go with the block.
/// An unclosed fence is left in place.
std::string strip_code_blocks(std::string_view text);

}  // namespace bninstruct
