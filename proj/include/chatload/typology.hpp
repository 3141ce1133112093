#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>

#include "chatload/metrics.hpp"
#include "chatload/types.hpp"

namespace chatload {

/// Cutoffs for the participation quadrants. Only the interested-audience
/// rule (>10% of sessions, <0.1% of messages) is canonical; msg_pct_high
/// separates heavy posters from the rest and is configurable.
struct RoleThresholds {
  double session_pct_high = 10.0;
  double msg_pct_low = 0.1;
  double msg_pct_high = 5.0;

  void validate() const {
    if (!(session_pct_high > 0.0 && session_pct_high < 100.0))
      throw config_error("role thresholds: session_pct_high must be in (0,100)");
    if (!(msg_pct_low > 0.0 && msg_pct_high < 100.0))
      throw config_error("role thresholds: msg percentages must be in (0,100)");
    if (!(msg_pct_low < msg_pct_high))
      throw config_error("role thresholds: msg_pct_low must be below msg_pct_high");
  }
};

enum class UserRole : std::uint8_t { host, interested_audience, opinionated, casual, passive };

inline const char* to_string(UserRole r) {
  switch (r) {
    case UserRole::host: return "host";
    case UserRole::interested_audience: return "interested_audience";
    case UserRole::opinionated: return "opinionated";
    case UserRole::casual: return "casual";
    case UserRole::passive: return "passive";
  }
  return "?";
}

/// Quadrant classification over (group-session participation, message share).
/// Roster members that never posted are passive. Every user in
/// roster-union-senders gets exactly one role.
inline std::map<std::string, UserRole> classify_users(std::span<const UserMetrics> metrics,
                                                      const std::optional<Roster>& roster,
                                                      const RoleThresholds& th = {}) {
  th.validate();
  std::map<std::string, UserRole> roles;
  for (const UserMetrics& m : metrics) {
    const bool many_sessions = m.group_session_pct > th.session_pct_high;
    UserRole role;
    if (many_sessions && m.msg_pct < th.msg_pct_low) {
      role = UserRole::interested_audience;
    } else if (m.msg_pct >= th.msg_pct_high) {
      role = many_sessions ? UserRole::host : UserRole::opinionated;
    } else {
      role = UserRole::casual;
    }
    roles[m.user_id] = role;
  }
  if (roster) {
    for (const std::string& member : roster->members) {
      if (!roles.contains(member)) roles[member] = UserRole::passive;
    }
  }
  return roles;
}

}  // namespace chatload
