#pragma once

#include <cctype>
#include <cstdint>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "chatload/classify.hpp"
#include "chatload/format.hpp"
#include "chatload/types.hpp"

namespace chatload {
namespace detail {

// Civil date -> days since 1970-01-01 (proleptic Gregorian).
inline std::int64_t days_from_civil(int y, int m, int d) {
  y -= m <= 2;
  const int era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153u * static_cast<unsigned>(m + (m > 2 ? -3 : 9)) + 2u) / 5u + static_cast<unsigned>(d) - 1u;
  const unsigned doe = yoe * 365u + yoe / 4u - yoe / 100u + doy;
  return static_cast<std::int64_t>(era) * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

// Compiled form of a strftime-like timestamp pattern. Supported fields:
//   %d day  %m month  %Y 4-digit year  %y 2-digit year (2000-based)
//   %H hour 0-23  %I hour 1-12  %M minute  %S second (truncated)  %p AM/PM
// Any other character matches literally.
struct TsPattern {
  struct Tok {
    char field = '\0';  // '\0' means literal
    char literal = '\0';
  };
  std::vector<Tok> toks;
  bool has_ampm = false;

  static TsPattern compile(std::string_view pattern) {
    TsPattern p;
    for (std::size_t i = 0; i < pattern.size(); ++i) {
      if (pattern[i] == '%' && i + 1 < pattern.size()) {
        const char f = pattern[i + 1];
        switch (f) {
          case 'd': case 'm': case 'Y': case 'y': case 'H': case 'I': case 'M': case 'S': case 'p':
            p.toks.push_back({f, '\0'});
            if (f == 'p') p.has_ampm = true;
            ++i;
            continue;
          case '%':
            p.toks.push_back({'\0', '%'});
            ++i;
            continue;
          default:
            throw config_error(std::string("timestamp pattern: unknown field %") + f);
        }
      }
      p.toks.push_back({'\0', pattern[i]});
    }
    if (p.toks.empty()) throw config_error("timestamp pattern: empty");
    return p;
  }

  // Parses a timestamp at the start of `line`. On success returns minutes
  // since epoch (local wall clock, minute-truncated) and sets `consumed`.
  std::optional<Minute> match(std::string_view line, std::size_t& consumed) const {
    std::size_t pos = 0;
    int day = 1, month = 1, year = 1970, hour = 0, minute = 0;
    bool pm = false, am = false;

    auto read_int = [&](int max_digits, int& out) -> bool {
      std::size_t start = pos;
      int v = 0;
      while (pos < line.size() && pos - start < static_cast<std::size_t>(max_digits) &&
             std::isdigit(static_cast<unsigned char>(line[pos]))) {
        v = v * 10 + (line[pos] - '0');
        ++pos;
      }
      if (pos == start) return false;
      out = v;
      return true;
    };

    for (const Tok& t : toks) {
      if (t.field == '\0') {
        if (pos >= line.size() || line[pos] != t.literal) return std::nullopt;
        ++pos;
        continue;
      }
      int v = 0;
      switch (t.field) {
        case 'd':
          if (!read_int(2, v) || v < 1 || v > 31) return std::nullopt;
          day = v;
          break;
        case 'm':
          if (!read_int(2, v) || v < 1 || v > 12) return std::nullopt;
          month = v;
          break;
        case 'Y':
          if (!read_int(4, v) || v < 1000) return std::nullopt;
          year = v;
          break;
        case 'y':
          if (!read_int(2, v)) return std::nullopt;
          year = 2000 + v;
          break;
        case 'H':
          if (!read_int(2, v) || v > 23) return std::nullopt;
          hour = v;
          break;
        case 'I':
          if (!read_int(2, v) || v < 1 || v > 12) return std::nullopt;
          hour = v;
          break;
        case 'M':
          if (!read_int(2, v) || v > 59) return std::nullopt;
          minute = v;
          break;
        case 'S':
          if (!read_int(2, v) || v > 60) return std::nullopt;
          break;  // sub-minute detail is truncated away
        case 'p': {
          if (pos + 2 > line.size()) return std::nullopt;
          const char c0 = static_cast<char>(std::toupper(static_cast<unsigned char>(line[pos])));
          const char c1 = static_cast<char>(std::toupper(static_cast<unsigned char>(line[pos + 1])));
          if (c1 != 'M' || (c0 != 'A' && c0 != 'P')) return std::nullopt;
          (c0 == 'P' ? pm : am) = true;
          pos += 2;
          break;
        }
      }
    }
    if (has_ampm) {
      if (pm && hour != 12) hour += 12;
      if (am && hour == 12) hour = 0;
    }
    consumed = pos;
    return days_from_civil(year, month, day) * 1440 + hour * 60 + minute;
  }
};

inline std::string_view strip_invisible_prefix(std::string_view line) {
  // exports often carry a BOM or LTR marks ahead of the timestamp
  while (true) {
    if (line.starts_with("\xEF\xBB\xBF")) {
      line.remove_prefix(3);
    } else if (line.starts_with("\xE2\x80\x8E") || line.starts_with("\xE2\x80\x8F")) {
      line.remove_prefix(3);
    } else {
      return line;
    }
  }
}

}  // namespace detail

/// What the parser skipped or collapsed, for auditing a run.
struct ParseReport {
  std::uint64_t total_lines = 0;
  std::uint64_t message_count = 0;
  std::uint64_t continuation_lines = 0;
  std::uint64_t system_lines = 0;
  struct Skip {
    std::uint64_t line_no = 0;
    std::string reason;
  };
  std::vector<Skip> skipped;
};

struct ParseResult {
  MessageLog log;
  ParseReport report;
};

/// Parses a WhatsApp-style text export into a message log.
///
/// A header line is `<timestamp><entry_separator><speaker><speaker_delimiter><payload>`.
/// Lines that do not start with a timestamp continue the previous message's
/// payload. Header lines without a speaker delimiter are service notices
/// (joins, subject changes): they are dropped, counted, and close any open
/// message, so a continuation right after one lands in the skip report.
///
/// Raw text is classified and discarded; only flags and length are kept.
/// Timestamps are converted from the export's wall clock to epoch minutes
/// using fmt.tz_offset_min.
inline ParseResult parse_export(std::istream& in, const FormatConfig& fmt, const std::string& group_id) {
  const detail::TsPattern pattern = detail::TsPattern::compile(fmt.timestamp_pattern);
  ParseResult result;
  result.log.group_id = group_id;

  struct Pending {
    std::string user;
    Minute ts = 0;
    std::string text;
    bool open = false;
  } pending;

  auto flush = [&]() {
    if (!pending.open) return;
    Message msg;
    msg.user_id = pending.user;
    msg.ts_min = pending.ts;
    msg.content = classify_content(pending.text, fmt);
    if (!msg.content.any()) msg.content.has_text = true;  // blank payload counts as empty text
    msg.text_len = text_length(pending.text, fmt);
    result.log.messages.push_back(std::move(msg));
    result.report.message_count += 1;
    pending = Pending{};
  };

  std::string raw;
  std::uint64_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    result.report.total_lines += 1;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    const std::string_view line = detail::strip_invisible_prefix(raw);

    std::size_t consumed = 0;
    const std::optional<Minute> local_min = pattern.match(line, consumed);
    const bool is_header = local_min.has_value() && line.substr(consumed).starts_with(fmt.entry_separator);

    if (!is_header) {
      if (pending.open) {
        pending.text += '\n';
        pending.text += line;
        result.report.continuation_lines += 1;
      } else if (line_no == 1) {
        throw parse_error("line 1: does not match the configured timestamp pattern");
      } else {
        result.report.skipped.push_back({line_no, "no preceding message to continue"});
      }
      continue;
    }

    flush();
    const std::string_view rest = line.substr(consumed + fmt.entry_separator.size());
    const std::size_t delim = rest.find(fmt.speaker_delimiter);
    if (delim == std::string_view::npos || delim == 0) {
      result.report.system_lines += 1;  // service notice, no speaker
      continue;
    }
    pending.user = std::string(rest.substr(0, delim));
    pending.ts = *local_min - fmt.tz_offset_min;
    pending.text = std::string(rest.substr(delim + fmt.speaker_delimiter.size()));
    pending.open = true;
  }
  flush();
  result.log.normalize();
  return result;
}

}  // namespace chatload
