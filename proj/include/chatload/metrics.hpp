#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "chatload/session.hpp"
#include "chatload/types.hpp"

namespace chatload {

/// a(j) = t(j+1) - t(j) over the pooled stream; length n-1, values >= 0.
inline std::vector<Minute> message_iat(const MessageLog& log) {
  std::vector<Minute> iats;
  if (log.messages.size() < 2) return iats;
  iats.reserve(log.messages.size() - 1);
  for (std::size_t i = 1; i < log.messages.size(); ++i) {
    iats.push_back(log.messages[i].ts_min - log.messages[i - 1].ts_min);
  }
  return iats;
}

struct ActivityRatioBin {
  Minute bin_start = 0;
  std::uint64_t messages = 0;
  std::uint32_t active_users = 0;
  double ratio = 0.0;  // messages / distinct senders in the bin
};

/// r(t): messages over distinct senders per time bin. Empty bins are omitted.
inline std::vector<ActivityRatioBin> activity_ratio(const MessageLog& log, Minute bin = 60) {
  if (bin <= 0) throw std::invalid_argument("activity_ratio: bin must be positive");
  std::map<Minute, std::pair<std::uint64_t, std::set<std::string>>> bins;
  for (const Message& m : log.messages) {
    Minute start = (m.ts_min / bin) * bin;
    if (m.ts_min < 0 && m.ts_min % bin != 0) start -= bin;  // floor for negatives
    auto& [count, users] = bins[start];
    count += 1;
    users.insert(m.user_id);
  }
  std::vector<ActivityRatioBin> out;
  out.reserve(bins.size());
  for (const auto& [start, cu] : bins) {
    const auto& [count, users] = cu;
    out.push_back({start, count, static_cast<std::uint32_t>(users.size()),
                   static_cast<double>(count) / static_cast<double>(users.size())});
  }
  return out;
}

enum class DayPeriod : std::uint8_t { early_hours = 0, morning = 1, afternoon = 2, evening = 3 };

constexpr std::array<DayPeriod, 4> kDayPeriods = {DayPeriod::early_hours, DayPeriod::morning,
                                                  DayPeriod::afternoon, DayPeriod::evening};

inline const char* to_string(DayPeriod p) {
  switch (p) {
    case DayPeriod::early_hours: return "early_hours";
    case DayPeriod::morning: return "morning";
    case DayPeriod::afternoon: return "afternoon";
    case DayPeriod::evening: return "evening";
  }
  return "?";
}

namespace detail {
// Hour of day in local time; tz_offset shifts the epoch-based clock.
inline int local_hour(Minute ts_min, int tz_offset_min) {
  const Minute local = ts_min + tz_offset_min;
  Minute of_day = local % 1440;
  if (of_day < 0) of_day += 1440;
  return static_cast<int>(of_day / 60);
}

inline DayPeriod period_of_hour(int hour) {
  return static_cast<DayPeriod>(hour / 6);  // 00-05, 06-11, 12-17, 18-23
}
}  // namespace detail

struct DayPeriodStats {
  DayPeriod period = DayPeriod::early_hours;
  std::optional<double> mean_iat_min;  // absent when no samples fall in the period
  std::uint64_t sample_count = 0;
};

/// Buckets each IAT by the local-time period of its earlier message and
/// averages per period.
inline std::array<DayPeriodStats, 4> day_period_iat(const MessageLog& log, int tz_offset_min) {
  std::array<double, 4> sums{};
  std::array<std::uint64_t, 4> counts{};
  for (std::size_t i = 1; i < log.messages.size(); ++i) {
    const Minute iat = log.messages[i].ts_min - log.messages[i - 1].ts_min;
    const int hour = detail::local_hour(log.messages[i - 1].ts_min, tz_offset_min);
    const auto p = static_cast<std::size_t>(detail::period_of_hour(hour));
    sums[p] += static_cast<double>(iat);
    counts[p] += 1;
  }
  std::array<DayPeriodStats, 4> out;
  for (std::size_t p = 0; p < 4; ++p) {
    out[p].period = static_cast<DayPeriod>(p);
    out[p].sample_count = counts[p];
    if (counts[p] > 0) out[p].mean_iat_min = sums[p] / static_cast<double>(counts[p]);
  }
  return out;
}

struct FlagCounts {
  std::uint64_t text = 0;
  std::uint64_t media = 0;
  std::uint64_t emoji = 0;
  std::uint64_t link = 0;
  std::uint64_t total = 0;

  void add(const ContentFlags& f) {
    text += f.has_text;
    media += f.has_media;
    emoji += f.has_emoji;
    link += f.has_link;
    total += 1;
  }
};

/// Per-flag counts and percentages, overall and per day period. Flags
/// overlap, so the percentages may sum past 100.
struct ContentBreakdown {
  FlagCounts overall;
  std::array<FlagCounts, 4> per_period;  // indexed by DayPeriod

  static double pct(std::uint64_t part, std::uint64_t total) {
    return total == 0 ? 0.0 : 100.0 * static_cast<double>(part) / static_cast<double>(total);
  }
};

inline ContentBreakdown content_breakdown(const MessageLog& log, int tz_offset_min = 0) {
  ContentBreakdown b;
  for (const Message& m : log.messages) {
    b.overall.add(m.content);
    const int hour = detail::local_hour(m.ts_min, tz_offset_min);
    b.per_period[static_cast<std::size_t>(detail::period_of_hour(hour))].add(m.content);
  }
  return b;
}

/// The five per-user metrics.
struct UserMetrics {
  std::string user_id;
  std::uint64_t msg_count = 0;
  double msg_pct = 0.0;
  std::uint64_t group_session_count = 0;
  double group_session_pct = 0.0;
  std::uint64_t user_session_count = 0;
};

inline std::vector<UserMetrics> user_metrics(const MessageLog& log,
                                             std::span<const UserSession> user_sessions,
                                             std::span<const GroupSession> group_sessions) {
  std::map<std::string, UserMetrics> per_user;
  for (const Message& m : log.messages) {
    auto& um = per_user[m.user_id];
    um.user_id = m.user_id;
    um.msg_count += 1;
  }
  for (const UserSession& us : user_sessions) {
    per_user[us.user_id].user_session_count += 1;
  }
  for (const GroupSession& gs : group_sessions) {
    for (const auto& [user, _] : gs.per_user_counts) {
      per_user[user].group_session_count += 1;
    }
  }
  const auto total_msgs = static_cast<double>(log.messages.size());
  const auto total_sessions = static_cast<double>(group_sessions.size());
  std::vector<UserMetrics> out;
  out.reserve(per_user.size());
  for (auto& [_, um] : per_user) {
    if (total_msgs > 0) um.msg_pct = 100.0 * static_cast<double>(um.msg_count) / total_msgs;
    if (total_sessions > 0) um.group_session_pct = 100.0 * static_cast<double>(um.group_session_count) / total_sessions;
    out.push_back(std::move(um));
  }
  return out;
}

/// Per user session: message count and duration.
struct UserSessionMetrics {
  std::uint64_t msg_count = 0;
  Minute duration_min = 0;
};

inline std::vector<UserSessionMetrics> user_session_metrics(std::span<const UserSession> sessions) {
  std::vector<UserSessionMetrics> out;
  out.reserve(sessions.size());
  for (const UserSession& s : sessions) {
    out.push_back({s.message_count(), s.duration()});
  }
  return out;
}

/// T_off between consecutive sessions of the same user (end -> next start).
/// Sessions must be grouped per user and chronological, as built by
/// build_user_sessions.
inline std::vector<Minute> user_toff(std::span<const UserSession> sessions) {
  std::vector<Minute> out;
  for (std::size_t i = 1; i < sessions.size(); ++i) {
    if (sessions[i].user_id != sessions[i - 1].user_id) continue;
    out.push_back(sessions[i].start - sessions[i - 1].end);
  }
  return out;
}

/// T_off between consecutive group sessions.
inline std::vector<Minute> group_toff(std::span<const GroupSession> sessions) {
  std::vector<Minute> out;
  for (std::size_t i = 1; i < sessions.size(); ++i) {
    out.push_back(sessions[i].start - sessions[i - 1].end);
  }
  return out;
}

/// Shannon entropy of per-user message shares, normalized by log2 of the
/// participant count. A single-speaker session has entropy 0 (maximal
/// dominance); the uniform split over >= 2 users reaches 1.
inline double session_entropy(const GroupSession& gs) {
  if (gs.per_user_counts.empty()) throw std::invalid_argument("session_entropy: empty session");
  const std::size_t k = gs.per_user_counts.size();
  if (k == 1) return 0.0;
  const auto total = static_cast<double>(gs.message_count());
  double h = 0.0;
  for (const auto& [_, count] : gs.per_user_counts) {
    const double p = static_cast<double>(count) / total;
    h -= p * std::log2(p);
  }
  return h / std::log2(static_cast<double>(k));
}

/// The six per-group-session metrics.
struct GroupSessionMetrics {
  Minute start = 0;
  Minute end = 0;
  std::uint64_t msg_count = 0;
  double msg_coverage_pct = 0.0;
  std::uint32_t user_count = 0;
  double user_coverage_pct = 0.0;  // of the group's active users
  double entropy_norm = 0.0;
  Minute duration_min = 0;
};

inline std::vector<GroupSessionMetrics> group_session_metrics(std::span<const GroupSession> sessions,
                                                              std::uint32_t active_user_count,
                                                              std::uint64_t total_messages) {
  std::vector<GroupSessionMetrics> out;
  out.reserve(sessions.size());
  for (const GroupSession& gs : sessions) {
    GroupSessionMetrics m;
    m.start = gs.start;
    m.end = gs.end;
    m.msg_count = gs.message_count();
    m.msg_coverage_pct = total_messages == 0 ? 0.0 : 100.0 * static_cast<double>(m.msg_count) / static_cast<double>(total_messages);
    m.user_count = static_cast<std::uint32_t>(gs.user_count());
    m.user_coverage_pct = active_user_count == 0 ? 0.0 : 100.0 * static_cast<double>(m.user_count) / static_cast<double>(active_user_count);
    m.entropy_norm = session_entropy(gs);
    m.duration_min = gs.duration();
    out.push_back(m);
  }
  return out;
}

}  // namespace chatload
