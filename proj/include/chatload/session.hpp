#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "chatload/types.hpp"

namespace chatload {

// Sessionization is gap splitting: a session is a maximal run of messages in
// which no two consecutive ones are separated by more than the threshold.
// A gap exactly equal to the threshold stays inside the session ("does not
// exceed"); the first strictly larger gap closes it.

/// Maximal run of one user's messages. `message_indices` point into the
/// MessageLog the session was built from.
struct UserSession {
  std::string user_id;
  Minute start = 0;
  Minute end = 0;
  std::vector<std::size_t> message_indices;

  Minute duration() const { return end - start; }
  std::size_t message_count() const { return message_indices.size(); }

  bool operator==(const UserSession&) const = default;
};

/// Maximal run of the pooled group stream.
struct GroupSession {
  Minute start = 0;
  Minute end = 0;
  std::map<std::string, std::uint64_t> per_user_counts;

  Minute duration() const { return end - start; }
  std::uint64_t message_count() const {
    std::uint64_t n = 0;
    for (const auto& [_, c] : per_user_counts) n += c;
    return n;
  }
  std::size_t user_count() const { return per_user_counts.size(); }

  bool operator==(const GroupSession&) const = default;
};

struct GapEntry {
  Minute gap = 0;
  std::uint64_t frequency = 0;

  bool operator==(const GapEntry&) const = default;
};

/// Distinct positive inter-message gaps with their occurrence counts,
/// sorted by gap ascending.
using GapHistogram = std::vector<GapEntry>;

/// Splits each user's message stream at gaps > threshold. The result is
/// grouped by user (lexicographic) and chronological within each user.
inline std::vector<UserSession> build_user_sessions(const MessageLog& log, Minute user_threshold) {
  if (user_threshold <= 0) throw std::invalid_argument("build_user_sessions: threshold must be positive");
  std::map<std::string, std::vector<std::size_t>> per_user;
  for (std::size_t i = 0; i < log.messages.size(); ++i) {
    per_user[log.messages[i].user_id].push_back(i);
  }
  std::vector<UserSession> sessions;
  for (const auto& [user, indices] : per_user) {
    UserSession cur;
    cur.user_id = user;
    for (std::size_t idx : indices) {
      const Minute ts = log.messages[idx].ts_min;
      if (cur.message_indices.empty()) {
        cur.start = ts;
      } else if (ts - log.messages[cur.message_indices.back()].ts_min > user_threshold) {
        cur.end = log.messages[cur.message_indices.back()].ts_min;
        sessions.push_back(std::move(cur));
        cur = UserSession{};
        cur.user_id = user;
        cur.start = ts;
      }
      cur.message_indices.push_back(idx);
    }
    if (!cur.message_indices.empty()) {
      cur.end = log.messages[cur.message_indices.back()].ts_min;
      sessions.push_back(std::move(cur));
    }
  }
  return sessions;
}

/// Splits the pooled group stream at gaps > threshold.
inline std::vector<GroupSession> build_group_sessions(const MessageLog& log, Minute group_threshold) {
  if (group_threshold <= 0) throw std::invalid_argument("build_group_sessions: threshold must be positive");
  std::vector<GroupSession> sessions;
  GroupSession cur;
  bool open = false;
  Minute last_ts = 0;
  for (const Message& m : log.messages) {
    if (!open) {
      cur = GroupSession{};
      cur.start = m.ts_min;
      open = true;
    } else if (m.ts_min - last_ts > group_threshold) {
      cur.end = last_ts;
      sessions.push_back(std::move(cur));
      cur = GroupSession{};
      cur.start = m.ts_min;
    }
    cur.per_user_counts[m.user_id] += 1;
    last_ts = m.ts_min;
  }
  if (open) {
    cur.end = last_ts;
    sessions.push_back(std::move(cur));
  }
  return sessions;
}

/// Tally of the distinct silence gaps in the pooled stream. Zero-minute gaps
/// (same-minute messages) carry no silence information and are excluded.
inline GapHistogram silence_gap_histogram(const MessageLog& log) {
  if (log.messages.size() < 2) throw std::invalid_argument("silence_gap_histogram: insufficient data (need >= 2 messages)");
  std::map<Minute, std::uint64_t> tally;
  for (std::size_t i = 1; i < log.messages.size(); ++i) {
    const Minute gap = log.messages[i].ts_min - log.messages[i - 1].ts_min;
    if (gap > 0) tally[gap] += 1;
  }
  GapHistogram hist;
  hist.reserve(tally.size());
  for (const auto& [gap, freq] : tally) hist.push_back({gap, freq});
  return hist;
}

/// Threshold selection at the elbow of the gap/frequency curve: both axes
/// are min-max normalized to [0,1] and the answer is the smallest gap whose
/// point lies on or below the identity line. Normalization makes the result
/// invariant under uniform scaling of the frequencies.
inline Minute elbow_threshold(const GapHistogram& hist) {
  if (hist.empty()) throw std::invalid_argument("elbow_threshold: empty histogram");
  if (hist.size() == 1) return hist.front().gap;  // degenerate elbow
  const double x_min = static_cast<double>(hist.front().gap);
  const double x_max = static_cast<double>(hist.back().gap);
  double y_min = static_cast<double>(hist.front().frequency);
  double y_max = y_min;
  for (const GapEntry& e : hist) {
    y_min = std::min(y_min, static_cast<double>(e.frequency));
    y_max = std::max(y_max, static_cast<double>(e.frequency));
  }
  for (const GapEntry& e : hist) {
    const double x = (static_cast<double>(e.gap) - x_min) / (x_max - x_min);
    const double y = y_max == y_min ? 0.0 : (static_cast<double>(e.frequency) - y_min) / (y_max - y_min);
    if (y <= x) return e.gap;
  }
  return hist.back().gap;  // unreachable: the last point always satisfies y <= 1 = x
}

/// Per-minute count of user sessions covering each minute of a group
/// session, plus the maximum over the window.
struct ConcurrencyProfile {
  std::vector<std::pair<Minute, std::uint32_t>> per_minute;
  std::uint32_t max = 0;
};

inline ConcurrencyProfile concurrency_profile(std::span<const UserSession> user_sessions, const GroupSession& gs) {
  ConcurrencyProfile profile;
  const Minute lo = gs.start;
  const Minute hi = gs.end;
  const std::size_t width = static_cast<std::size_t>(hi - lo) + 1;
  std::vector<std::int32_t> delta(width + 1, 0);
  for (const UserSession& us : user_sessions) {
    const Minute s = std::max(us.start, lo);
    const Minute e = std::min(us.end, hi);
    if (s > e) continue;
    delta[static_cast<std::size_t>(s - lo)] += 1;
    delta[static_cast<std::size_t>(e - lo) + 1] -= 1;
  }
  profile.per_minute.reserve(width);
  std::int32_t running = 0;
  for (std::size_t i = 0; i < width; ++i) {
    running += delta[i];
    const auto count = static_cast<std::uint32_t>(running);
    profile.per_minute.emplace_back(lo + static_cast<Minute>(i), count);
    profile.max = std::max(profile.max, count);
  }
  return profile;
}

}  // namespace chatload
