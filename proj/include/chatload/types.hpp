#pragma once

#include <algorithm>
#include <cstdint>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace chatload {

// Minutes since the Unix epoch. The data model has no sub-minute resolution.
using Minute = std::int64_t;

// Raised when input data cannot be parsed (exports, canonical records, rosters).
struct parse_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Raised when a configuration value violates its contract.
struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Content categories of a message. Flags are independent; a message may
/// combine several (e.g. text plus a link). At least one must be set.
struct ContentFlags {
  bool has_text = false;
  bool has_media = false;
  bool has_emoji = false;
  bool has_link = false;

  bool any() const { return has_text || has_media || has_emoji || has_link; }

  bool operator==(const ContentFlags&) const = default;

  /// Compact code used by the canonical record format: a subset of "tmel"
  /// in that fixed order ("t" text, "m" media, "e" emoji, "l" link).
  std::string code() const {
    std::string s;
    if (has_text) s += 't';
    if (has_media) s += 'm';
    if (has_emoji) s += 'e';
    if (has_link) s += 'l';
    return s;
  }

  static ContentFlags from_code(std::string_view code) {
    ContentFlags f;
    for (char c : code) {
      switch (c) {
        case 't': f.has_text = true; break;
        case 'm': f.has_media = true; break;
        case 'e': f.has_emoji = true; break;
        case 'l': f.has_link = true; break;
        default:
          throw parse_error("unknown content flag code: '" + std::string(1, c) + "'");
      }
    }
    if (!f.any()) throw parse_error("empty content flags");
    return f;
  }
};

/// One chat event. Raw text never survives ingestion; only the flags and the
/// payload length are kept.
struct Message {
  std::string user_id;
  Minute ts_min = 0;
  ContentFlags content;
  std::uint32_t text_len = 0;

  bool operator==(const Message&) const = default;
};

/// A group's message stream, sorted by timestamp (ties keep input order).
struct MessageLog {
  std::string group_id;
  std::vector<Message> messages;
  Minute period_start = 0;
  Minute period_end = 0;

  bool empty() const { return messages.empty(); }
  std::size_t size() const { return messages.size(); }

  /// Restores the ordering/period invariants after bulk insertion.
  void normalize() {
    std::stable_sort(messages.begin(), messages.end(),
                     [](const Message& a, const Message& b) { return a.ts_min < b.ts_min; });
    if (messages.empty()) {
      period_start = period_end = 0;
    } else {
      period_start = messages.front().ts_min;
      period_end = messages.back().ts_min;
    }
  }
};

/// Group membership metadata. Members that never post are the passive users.
struct Roster {
  std::string group_id;
  std::set<std::string> members;
  std::set<std::string> admins;
  std::string category;  // free-form label, e.g. "political"

  void validate() const {
    for (const auto& a : admins) {
      if (!members.contains(a)) throw parse_error("roster admin not in members: " + a);
    }
  }
};

/// Sessionization thresholds in minutes. The defaults are the conventional
/// ones for this workload family: 15 for users, 81 for groups.
struct Thresholds {
  Minute user_threshold = 15;
  Minute group_threshold = 81;
};

}  // namespace chatload
