#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace icmt::text {

enum class TokenScheme { Whitespace, Mteval13a };

struct TokenSequence {
    std::vector<std::string> tokens;
    TokenScheme scheme = TokenScheme::Whitespace;

    std::size_t size() const noexcept { return tokens.size(); }
    bool empty() const noexcept { return tokens.empty(); }
    /// Tokens joined with single spaces.
    std::string joined() const;
};

/// Splits on runs of Unicode whitespace (the same set Python's str.split() uses).
TokenSequence tokenize_whitespace(std::string_view text);

/// mteval-v13a tokenization, byte-compatible with sacreBLEU's `13a` tokenizer.
TokenSequence tokenize_13a(std::string_view text);

/// Number of whitespace tokens.
std::size_t word_count(std::string_view text);

/// Unicode lowercase using the simple case mappings (plus U+0130).
std::string to_lower(std::string_view text);

/// Removes trailing Unicode whitespace.
std::string_view rstrip(std::string_view text);

/// Removes leading and trailing Unicode whitespace.
std::string_view trim(std::string_view text);

bool is_space(char32_t cp) noexcept;

} // namespace icmt::text
