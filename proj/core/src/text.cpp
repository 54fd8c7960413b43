#include "icmt/text.hpp"

#include <algorithm>
#include <cstdint>
#include <iterator>

namespace icmt::text {

namespace {

struct Decoded {
    char32_t cp;
    std::size_t len;
};

// Invalid sequences decode as a single opaque byte so they are never
// mistaken for whitespace and are copied through unchanged.
Decoded decode(std::string_view s, std::size_t i) noexcept
{
    const auto b0 = static_cast<unsigned char>(s[i]);
    if (b0 < 0x80) {
        return {b0, 1};
    }
    std::size_t len = 0;
    char32_t cp = 0;
    if ((b0 & 0xE0) == 0xC0) {
        len = 2;
        cp = b0 & 0x1F;
    } else if ((b0 & 0xF0) == 0xE0) {
        len = 3;
        cp = b0 & 0x0F;
    } else if ((b0 & 0xF8) == 0xF0) {
        len = 4;
        cp = b0 & 0x07;
    } else {
        return {0xFFFD, 1};
    }
    if (i + len > s.size()) {
        return {0xFFFD, 1};
    }
    for (std::size_t k = 1; k < len; ++k) {
        const auto b = static_cast<unsigned char>(s[i + k]);
        if ((b & 0xC0) != 0x80) {
            return {0xFFFD, 1};
        }
        cp = (cp << 6) | (b & 0x3F);
    }
    return {cp, len};
}

void encode(char32_t cp, std::string& out)
{
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

struct LowerRun {
    std::uint32_t first;
    std::uint32_t last;
    std::uint32_t stride;
    std::int32_t delta;
};

constexpr LowerRun kLowerRuns[] = {
#include "unicode_lower_table.inc"
};

char32_t lower_cp(char32_t cp) noexcept
{
    if (cp < 0x80) {
        return (cp >= 'A' && cp <= 'Z') ? cp + 32 : cp;
    }
    const auto it = std::upper_bound(std::begin(kLowerRuns), std::end(kLowerRuns), cp,
                                     [](char32_t v, const LowerRun& r) { return v < r.first; });
    if (it == std::begin(kLowerRuns)) {
        return cp;
    }
    const auto& run = *std::prev(it);
    if (cp > run.last || (cp - run.first) % run.stride != 0) {
        return cp;
    }
    return static_cast<char32_t>(static_cast<std::int64_t>(cp) + run.delta);
}

struct CodeRange {
    std::uint32_t first;
    std::uint32_t last;
};

constexpr CodeRange kCaseIgnorable[] = {
#include "unicode_case_ignorable.inc"
};

constexpr CodeRange kCased[] = {
#include "unicode_cased.inc"
};

template <std::size_t N>
bool in_ranges(const CodeRange (&ranges)[N], char32_t cp) noexcept
{
    const auto it = std::upper_bound(std::begin(ranges), std::end(ranges), cp,
                                     [](char32_t v, const CodeRange& r) { return v < r.first; });
    return it != std::begin(ranges) && cp <= std::prev(it)->last;
}

bool case_ignorable(char32_t cp) noexcept { return in_ranges(kCaseIgnorable, cp); }
bool cased(char32_t cp) noexcept { return in_ranges(kCased, cp); }

/// Final_Sigma: a cased letter (then case-ignorables) before, and no
/// case-ignorables followed by a cased letter after.
bool final_sigma(bool cased_before, std::string_view text, std::size_t after)
{
    if (!cased_before) {
        return false;
    }
    while (after < text.size()) {
        const auto d = decode(text, after);
        if (!case_ignorable(d.cp)) {
            return !cased(d.cp);
        }
        after += d.len;
    }
    return true;
}

template <typename Fn>
void for_each_token(std::string_view s, Fn&& fn)
{
    std::size_t i = 0;
    std::size_t start = std::string_view::npos;
    while (i < s.size()) {
        const auto d = decode(s, i);
        if (is_space(d.cp)) {
            if (start != std::string_view::npos) {
                fn(s.substr(start, i - start));
                start = std::string_view::npos;
            }
        } else if (start == std::string_view::npos) {
            start = i;
        }
        i += d.len;
    }
    if (start != std::string_view::npos) {
        fn(s.substr(start));
    }
}

bool is_digit(char c) noexcept { return c >= '0' && c <= '9'; }

// [\{-\~\[-\` -\&\(-\+\:-\@\/]
bool is_13a_symbol(char c) noexcept
{
    return (c >= '{' && c <= '~') || (c >= '[' && c <= '`') || (c >= ' ' && c <= '&') ||
           (c >= '(' && c <= '+') || (c >= ':' && c <= '@') || c == '/';
}

void replace_all(std::string& s, std::string_view from, std::string_view to)
{
    std::string out;
    out.reserve(s.size());
    std::size_t pos = 0;
    while (true) {
        const auto hit = s.find(from, pos);
        if (hit == std::string::npos) {
            break;
        }
        out.append(s, pos, hit - pos);
        out.append(to);
        pos = hit + from.size();
    }
    out.append(s, pos);
    s = std::move(out);
}

} // namespace

std::string TokenSequence::joined() const
{
    std::string out;
    for (const auto& t : tokens) {
        if (!out.empty()) {
            out.push_back(' ');
        }
        out += t;
    }
    return out;
}

bool is_space(char32_t cp) noexcept
{
    switch (cp) {
    case 0x09: case 0x0A: case 0x0B: case 0x0C: case 0x0D:
    case 0x1C: case 0x1D: case 0x1E: case 0x1F: case 0x20:
    case 0x85: case 0xA0: case 0x1680:
    case 0x2028: case 0x2029: case 0x202F: case 0x205F: case 0x3000:
        return true;
    default:
        return cp >= 0x2000 && cp <= 0x200A;
    }
}

TokenSequence tokenize_whitespace(std::string_view text)
{
    TokenSequence seq{{}, TokenScheme::Whitespace};
    for_each_token(text, [&](std::string_view tok) { seq.tokens.emplace_back(tok); });
    return seq;
}

std::size_t word_count(std::string_view text)
{
    std::size_t n = 0;
    for_each_token(text, [&](std::string_view) { ++n; });
    return n;
}

TokenSequence tokenize_13a(std::string_view text)
{
    std::string line(text);
    replace_all(line, "<skipped>", "");
    replace_all(line, "-\n", "");
    replace_all(line, "\n", " ");
    if (line.find('&') != std::string::npos) {
        replace_all(line, "&quot;", "\"");
        replace_all(line, "&amp;", "&");
        replace_all(line, "&lt;", "<");
        replace_all(line, "&gt;", ">");
    }
    line = " " + line + " ";

    // Each pass mirrors one re.sub: a left-to-right scan over non-overlapping
    // matches. Byte-wise scanning yields the same result on UTF-8 because
    // every literal in the patterns is ASCII.
    std::string out;
    out.reserve(line.size() * 2);
    for (char c : line) {
        if (is_13a_symbol(c)) {
            out.push_back(' ');
            out.push_back(c);
            out.push_back(' ');
        } else {
            out.push_back(c);
        }
    }
    line.swap(out);

    // ([^0-9])([\.,]) -> \1 \2 (space after)
    out.clear();
    for (std::size_t i = 0; i < line.size();) {
        if (i + 1 < line.size() && !is_digit(line[i]) && (line[i + 1] == '.' || line[i + 1] == ',')) {
            out.push_back(line[i]);
            out.push_back(' ');
            out.push_back(line[i + 1]);
            out.push_back(' ');
            i += 2;
        } else {
            out.push_back(line[i++]);
        }
    }
    line.swap(out);

    // ([\.,])([^0-9]) -> " \1 \2"
    out.clear();
    for (std::size_t i = 0; i < line.size();) {
        if (i + 1 < line.size() && (line[i] == '.' || line[i] == ',') && !is_digit(line[i + 1])) {
            out.push_back(' ');
            out.push_back(line[i]);
            out.push_back(' ');
            out.push_back(line[i + 1]);
            i += 2;
        } else {
            out.push_back(line[i++]);
        }
    }
    line.swap(out);

    // ([0-9])(-) -> \1 \2 (space after)
    out.clear();
    for (std::size_t i = 0; i < line.size();) {
        if (i + 1 < line.size() && is_digit(line[i]) && line[i + 1] == '-') {
            out.push_back(line[i]);
            out.push_back(' ');
            out.push_back('-');
            out.push_back(' ');
            i += 2;
        } else {
            out.push_back(line[i++]);
        }
    }

    TokenSequence seq{{}, TokenScheme::Mteval13a};
    for_each_token(out, [&](std::string_view tok) { seq.tokens.emplace_back(tok); });
    return seq;
}

std::string to_lower(std::string_view text)
{
    std::string out;
    out.reserve(text.size());
    bool cased_before = false;
    for (std::size_t i = 0; i < text.size();) {
        const auto d = decode(text, i);
        if (d.cp == 0xFFFD && d.len == 1 && static_cast<unsigned char>(text[i]) >= 0x80) {
            out.push_back(text[i]);
        } else if (d.cp == 0x03A3) {
            encode(final_sigma(cased_before, text, i + d.len) ? 0x03C2 : 0x03C3, out);
        } else if (d.cp == 0x0130) {
            // LATIN CAPITAL LETTER I WITH DOT ABOVE -> i + COMBINING DOT ABOVE
            out.push_back('i');
            encode(0x0307, out);
        } else {
            encode(lower_cp(d.cp), out);
        }
        if (!case_ignorable(d.cp)) {
            cased_before = cased(d.cp);
        }
        i += d.len;
    }
    return out;
}

std::string_view rstrip(std::string_view text)
{
    // Walk forward remembering where the last non-space code point ended.
    std::size_t end = 0;
    for (std::size_t i = 0; i < text.size();) {
        const auto d = decode(text, i);
        i += d.len;
        if (!is_space(d.cp)) {
            end = i;
        }
    }
    return text.substr(0, end);
}

std::string_view trim(std::string_view text)
{
    text = rstrip(text);
    std::size_t i = 0;
    while (i < text.size()) {
        const auto d = decode(text, i);
        if (!is_space(d.cp)) {
            break;
        }
        i += d.len;
    }
    return text.substr(i);
}

} // namespace icmt::text
