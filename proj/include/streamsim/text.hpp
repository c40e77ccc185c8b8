#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace streamsim {

// Decode UTF-8 into code points. Malformed bytes are passed through one byte
// at a time instead of throwing, so arbitrary user text never aborts a run.
std::vector<char32_t> utf8_decode(std::string_view text);
std::string utf8_encode(std::span<const char32_t> cps);
long count_codepoints(std::string_view text);

bool is_ascii_space(char32_t cp);

// Collapse whitespace runs to single spaces and strip the ends.
std::string normalize_whitespace(std::string_view text);

std::vector<std::string> split_words(std::string_view text);
std::string join_words(std::span<const std::string> words, std::string_view sep = " ");

std::string ascii_lower(std::string_view text);

}  // namespace streamsim
