#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "chatload/format.hpp"
#include "chatload/types.hpp"

namespace chatload {
namespace detail {

// Minimal UTF-8 decoder. Malformed bytes decode to U+FFFD and advance by one,
// so classification is total over arbitrary input.
inline char32_t utf8_next(std::string_view s, std::size_t& i) {
  const auto b0 = static_cast<unsigned char>(s[i]);
  std::size_t len = 1;
  char32_t cp = 0xFFFD;
  if (b0 < 0x80) {
    cp = b0;
  } else if ((b0 & 0xE0) == 0xC0) {
    len = 2;
    cp = b0 & 0x1F;
  } else if ((b0 & 0xF0) == 0xE0) {
    len = 3;
    cp = b0 & 0x0F;
  } else if ((b0 & 0xF8) == 0xF0) {
    len = 4;
    cp = b0 & 0x07;
  } else {
    i += 1;
    return 0xFFFD;
  }
  if (i + len > s.size()) {
    i += 1;
    return 0xFFFD;
  }
  for (std::size_t k = 1; k < len; ++k) {
    const auto b = static_cast<unsigned char>(s[i + k]);
    if ((b & 0xC0) != 0x80) {
      i += 1;
      return 0xFFFD;
    }
    cp = (cp << 6) | (b & 0x3F);
  }
  i += len;
  return cp;
}

inline bool in_ranges(char32_t cp, const std::vector<EmojiRange>& ranges) {
  for (const EmojiRange& r : ranges) {
    if (cp >= r.lo && cp <= r.hi) return true;
  }
  return false;
}

inline bool is_space_cp(char32_t cp) {
  return cp == U' ' || cp == U'\t' || cp == U'\n' || cp == U'\r' || cp == U'\f' || cp == U'\v' ||
         cp == 0x00A0 || cp == 0x200E || cp == 0x200F || cp == 0xFEFF;
}

inline bool is_link_token(std::string_view token) {
  return token.starts_with("http://") || token.starts_with("https://") || token.starts_with("www.");
}

// Removes every occurrence of each marker; reports whether any was found.
inline std::string strip_markers(std::string_view text, const std::vector<std::string>& markers, bool& found) {
  std::string out(text);
  found = false;
  for (const std::string& marker : markers) {
    if (marker.empty()) continue;
    std::size_t pos = 0;
    while ((pos = out.find(marker, pos)) != std::string::npos) {
      out.erase(pos, marker.size());
      found = true;
    }
  }
  return out;
}

}  // namespace detail

/// Number of code points left after removing media markers and trimming
/// surrounding whitespace; 0 for pure media messages.
inline std::uint32_t text_length(std::string_view text, const FormatConfig& fmt) {
  bool media = false;
  const std::string stripped = detail::strip_markers(text, fmt.media_markers, media);
  // trim by code point
  std::vector<std::pair<char32_t, std::size_t>> cps;  // (cp, byte offset)
  std::size_t i = 0;
  while (i < stripped.size()) {
    const std::size_t at = i;
    cps.emplace_back(detail::utf8_next(stripped, i), at);
  }
  std::size_t lo = 0, hi = cps.size();
  while (lo < hi && detail::is_space_cp(cps[lo].first)) ++lo;
  while (hi > lo && detail::is_space_cp(cps[hi - 1].first)) --hi;
  return static_cast<std::uint32_t>(hi - lo);
}

/// Total classification of a payload:
///   media — a configured marker occurs;
///   link  — a whitespace-separated token starts with http://, https:// or www.;
///   emoji — any code point falls in a configured emoji range;
///   text  — any non-marker, non-link, non-emoji, non-whitespace character remains.
inline ContentFlags classify_content(std::string_view text, const FormatConfig& fmt) {
  ContentFlags flags;
  const std::string stripped = detail::strip_markers(text, fmt.media_markers, flags.has_media);

  std::size_t i = 0;
  const std::string_view body = stripped;
  while (i < body.size()) {
    // skip whitespace between tokens
    std::size_t j = i;
    const char32_t cp = detail::utf8_next(body, j);
    if (detail::is_space_cp(cp)) {
      i = j;
      continue;
    }
    // token: run up to the next whitespace code point
    const std::size_t tok_start = i;
    std::size_t tok_end = i;
    while (tok_end < body.size()) {
      std::size_t k = tok_end;
      if (detail::is_space_cp(detail::utf8_next(body, k))) break;
      tok_end = k;
    }
    const std::string_view token = body.substr(tok_start, tok_end - tok_start);
    if (detail::is_link_token(token)) {
      flags.has_link = true;
    } else {
      std::size_t t = 0;
      while (t < token.size()) {
        const char32_t tcp = detail::utf8_next(token, t);
        if (detail::in_ranges(tcp, fmt.emoji_ranges)) {
          flags.has_emoji = true;
        } else if (!detail::is_space_cp(tcp)) {
          flags.has_text = true;
        }
      }
    }
    i = tok_end;
  }
  return flags;
}

}  // namespace chatload
