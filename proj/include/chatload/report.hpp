#pragma once

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "chatload/canonical.hpp"
#include "chatload/metrics.hpp"
#include "chatload/session.hpp"
#include "chatload/statfit.hpp"
#include "chatload/typology.hpp"
#include "chatload/types.hpp"

namespace chatload {

struct AnalyzeConfig {
  Thresholds thresholds{};            // user 15 / group 81 unless configured
  bool auto_group_threshold = false;  // derive the group threshold per group via the elbow heuristic
  int tz_offset_min = 0;
  Minute activity_bin = 60;
  RoleThresholds roles{};

  void validate() const {
    if (thresholds.user_threshold <= 0) throw config_error("analyze: user threshold must be positive");
    if (!auto_group_threshold && thresholds.group_threshold <= 0) throw config_error("analyze: group threshold must be positive");
    if (activity_bin <= 0) throw config_error("analyze: activity bin must be positive");
    roles.validate();
  }
};

namespace detail {

inline std::string fmt_double(double v) {
  char buf[40];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

inline double round2(double v) { return std::round(v * 100.0) / 100.0; }

inline nlohmann::ordered_json json_cdf(const CdfSeries& cdf) {
  auto arr = nlohmann::ordered_json::array();
  for (const CdfPoint& p : cdf) arr.push_back({p.value, p.cum_prob});
  return arr;
}

inline nlohmann::ordered_json json_summary(const SummaryStats& s) {
  nlohmann::ordered_json j;
  j["count"] = s.count;
  j["mean"] = s.mean;
  j["stddev"] = s.stddev;
  j["min"] = s.min;
  j["max"] = s.max;
  j["p5"] = s.p5;
  j["p25"] = s.p25;
  j["p50"] = s.p50;
  j["p75"] = s.p75;
  j["p95"] = s.p95;
  return j;
}

template <typename T>
nlohmann::ordered_json json_dist(const std::vector<T>& values) {
  nlohmann::ordered_json j;
  if (values.empty()) {
    j["empty"] = true;
    return j;
  }
  std::vector<double> vals(values.begin(), values.end());
  j["summary"] = json_summary(summary_stats(vals));
  j["cdf"] = json_cdf(ecdf(vals));
  return j;
}

}  // namespace detail

/// Everything the analyzer derives for one group, ready for serialization.
struct GroupAnalysis {
  std::string group_id;
  bool empty = false;
  Minute group_threshold_used = 0;
  std::optional<Minute> elbow_value;

  std::vector<UserSession> user_sessions;
  std::vector<GroupSession> group_sessions;
  GapHistogram gap_histogram;
  std::vector<Minute> iats;
  std::vector<ActivityRatioBin> activity;
  std::array<DayPeriodStats, 4> day_periods{};
  ContentBreakdown content;
  std::vector<UserMetrics> users;
  std::vector<UserSessionMetrics> user_session_stats;
  std::vector<Minute> user_toffs;
  std::vector<Minute> group_toffs;
  std::vector<GroupSessionMetrics> group_session_stats;
  std::vector<std::uint32_t> session_concurrency;  // max per group session
  std::vector<RankedUser> ranked;
  std::optional<ZipfFit> zipf;
  std::map<std::string, UserRole> roles;
  std::uint32_t active_users = 0;
  std::optional<std::uint32_t> passive_users;

  nlohmann::ordered_json report;
};

namespace detail {

inline nlohmann::ordered_json config_json(const AnalyzeConfig& cfg, const GroupAnalysis& a) {
  nlohmann::ordered_json j;
  j["user_threshold_min"] = cfg.thresholds.user_threshold;
  j["group_threshold_mode"] = cfg.auto_group_threshold ? "auto" : "fixed";
  j["group_threshold_min"] = a.group_threshold_used;
  if (a.elbow_value) {
    j["elbow_threshold_min"] = *a.elbow_value;
  } else if (cfg.auto_group_threshold) {
    j["elbow_threshold_min"] = nullptr;
  }
  j["tz_offset_min"] = cfg.tz_offset_min;
  j["activity_bin_min"] = cfg.activity_bin;
  j["role_thresholds"] = {{"session_pct_high", cfg.roles.session_pct_high},
                          {"msg_pct_low", cfg.roles.msg_pct_low},
                          {"msg_pct_high", cfg.roles.msg_pct_high}};
  return j;
}

}  // namespace detail

/// Runs the full metric suite over one group's log.
inline GroupAnalysis analyze_group(const MessageLog& log, const std::optional<Roster>& roster, const AnalyzeConfig& cfg) {
  cfg.validate();
  GroupAnalysis a;
  a.group_id = log.group_id;

  for (std::size_t p = 0; p < 4; ++p) a.day_periods[p].period = static_cast<DayPeriod>(p);

  if (log.empty()) {
    a.empty = true;
    a.group_threshold_used = cfg.thresholds.group_threshold;
    if (roster) a.passive_users = static_cast<std::uint32_t>(roster->members.size());
    nlohmann::ordered_json r;
    r["group"] = a.group_id;
    r["empty"] = true;
    r["messages"] = 0;
    r["active_users"] = 0;
    r["passive_users"] = roster ? nlohmann::ordered_json(*a.passive_users) : nlohmann::ordered_json(nullptr);
    r["config"] = detail::config_json(cfg, a);
    r["message_layer"] = {{"empty", true}};
    r["user_layer"] = {{"empty", true}};
    r["group_layer"] = {{"empty", true}};
    r["typology"] = {{"empty", true}};
    a.report = std::move(r);
    return a;
  }

  // sessionization
  a.user_sessions = build_user_sessions(log, cfg.thresholds.user_threshold);
  if (log.size() >= 2) a.gap_histogram = silence_gap_histogram(log);
  if (cfg.auto_group_threshold && !a.gap_histogram.empty()) {
    a.elbow_value = elbow_threshold(a.gap_histogram);
    a.group_threshold_used = *a.elbow_value;
  } else {
    a.group_threshold_used = cfg.thresholds.group_threshold;
  }
  a.group_sessions = build_group_sessions(log, a.group_threshold_used);

  // metric layers
  a.iats = message_iat(log);
  a.activity = activity_ratio(log, cfg.activity_bin);
  a.day_periods = day_period_iat(log, cfg.tz_offset_min);
  a.content = content_breakdown(log, cfg.tz_offset_min);
  a.users = user_metrics(log, a.user_sessions, a.group_sessions);
  a.user_session_stats = user_session_metrics(a.user_sessions);
  a.user_toffs = user_toff(a.user_sessions);
  a.group_toffs = group_toff(a.group_sessions);
  a.active_users = static_cast<std::uint32_t>(a.users.size());
  a.group_session_stats = group_session_metrics(a.group_sessions, a.active_users, log.size());
  a.session_concurrency.reserve(a.group_sessions.size());
  for (const GroupSession& gs : a.group_sessions) {
    a.session_concurrency.push_back(concurrency_profile(a.user_sessions, gs).max);
  }

  std::map<std::string, std::uint64_t> counts;
  for (const UserMetrics& u : a.users) counts[u.user_id] = u.msg_count;
  a.ranked = rank_frequency(counts);
  if (a.ranked.size() >= 2) a.zipf = zipf_fit(a.ranked);

  a.roles = classify_users(a.users, roster, cfg.roles);
  if (roster) {
    std::uint32_t passive = 0;
    for (const auto& [_, role] : a.roles) {
      if (role == UserRole::passive) ++passive;
    }
    a.passive_users = passive;
  }

  // report document
  nlohmann::ordered_json r;
  r["group"] = a.group_id;
  r["period"] = {{"start_min", log.period_start}, {"end_min", log.period_end}};
  r["messages"] = log.size();
  r["active_users"] = a.active_users;
  r["passive_users"] = a.passive_users ? nlohmann::ordered_json(*a.passive_users) : nlohmann::ordered_json(nullptr);
  if (roster && !roster->category.empty()) r["category"] = roster->category;
  r["config"] = detail::config_json(cfg, a);

  {
    nlohmann::ordered_json ml;
    ml["iat"] = detail::json_dist(a.iats);
    auto periods = nlohmann::ordered_json::array();
    for (const DayPeriodStats& p : a.day_periods) {
      nlohmann::ordered_json pj;
      pj["period"] = to_string(p.period);
      pj["mean_iat_min"] = p.mean_iat_min ? nlohmann::ordered_json(*p.mean_iat_min) : nlohmann::ordered_json(nullptr);
      pj["samples"] = p.sample_count;
      periods.push_back(std::move(pj));
    }
    ml["day_period_iat"] = std::move(periods);
    auto content_json = [&](const FlagCounts& c) {
      nlohmann::ordered_json cj;
      cj["messages"] = c.total;
      cj["counts"] = {{"text", c.text}, {"media", c.media}, {"emoji", c.emoji}, {"link", c.link}};
      cj["pct"] = {{"text", detail::round2(ContentBreakdown::pct(c.text, c.total))},
                   {"media", detail::round2(ContentBreakdown::pct(c.media, c.total))},
                   {"emoji", detail::round2(ContentBreakdown::pct(c.emoji, c.total))},
                   {"link", detail::round2(ContentBreakdown::pct(c.link, c.total))}};
      return cj;
    };
    nlohmann::ordered_json content;
    content["overall"] = content_json(a.content.overall);
    for (std::size_t p = 0; p < 4; ++p) {
      content[to_string(static_cast<DayPeriod>(p))] = content_json(a.content.per_period[p]);
    }
    ml["content"] = std::move(content);
    auto ratio = nlohmann::ordered_json::array();
    for (const ActivityRatioBin& b : a.activity) ratio.push_back({b.bin_start, b.ratio});
    ml["activity_ratio"] = std::move(ratio);
    r["message_layer"] = std::move(ml);
  }

  {
    nlohmann::ordered_json ul;
    auto users = nlohmann::ordered_json::array();
    std::vector<double> msg_counts, msg_pcts, gs_counts, gs_pcts, us_counts;
    for (const UserMetrics& u : a.users) {
      nlohmann::ordered_json uj;
      uj["user"] = u.user_id;
      uj["msg_count"] = u.msg_count;
      uj["msg_pct"] = detail::round2(u.msg_pct);
      uj["group_session_count"] = u.group_session_count;
      uj["group_session_pct"] = detail::round2(u.group_session_pct);
      uj["user_session_count"] = u.user_session_count;
      users.push_back(std::move(uj));
      msg_counts.push_back(static_cast<double>(u.msg_count));
      msg_pcts.push_back(u.msg_pct);
      gs_counts.push_back(static_cast<double>(u.group_session_count));
      gs_pcts.push_back(u.group_session_pct);
      us_counts.push_back(static_cast<double>(u.user_session_count));
    }
    ul["users"] = std::move(users);
    ul["cdf"] = {{"msg_count", detail::json_cdf(ecdf(msg_counts))},
                 {"msg_pct", detail::json_cdf(ecdf(msg_pcts))},
                 {"group_session_count", detail::json_cdf(ecdf(gs_counts))},
                 {"group_session_pct", detail::json_cdf(ecdf(gs_pcts))},
                 {"user_session_count", detail::json_cdf(ecdf(us_counts))}};
    nlohmann::ordered_json sessions;
    sessions["count"] = a.user_sessions.size();
    std::vector<double> sess_msgs, sess_durs;
    for (const UserSessionMetrics& s : a.user_session_stats) {
      sess_msgs.push_back(static_cast<double>(s.msg_count));
      sess_durs.push_back(static_cast<double>(s.duration_min));
    }
    sessions["messages"] = detail::json_dist(sess_msgs);
    sessions["duration_min"] = detail::json_dist(sess_durs);
    ul["sessions"] = std::move(sessions);
    ul["toff"] = detail::json_dist(a.user_toffs);
    auto rank = nlohmann::ordered_json::array();
    for (const RankedUser& ru : a.ranked) rank.push_back({ru.rank, ru.frequency});
    ul["rank_frequency"] = std::move(rank);
    if (a.zipf) {
      ul["zipf"] = {{"slope", a.zipf->slope},
                    {"intercept", a.zipf->intercept},
                    {"r2", a.zipf->r2},
                    {"n_points", a.zipf->n_points}};
    } else {
      ul["zipf"] = nullptr;
    }
    r["user_layer"] = std::move(ul);
  }

  {
    nlohmann::ordered_json gl;
    gl["threshold_min"] = a.group_threshold_used;
    auto hist = nlohmann::ordered_json::array();
    for (const GapEntry& e : a.gap_histogram) hist.push_back({e.gap, e.frequency});
    gl["gap_histogram"] = std::move(hist);
    auto sessions = nlohmann::ordered_json::array();
    std::vector<double> msgs, cov, users_n, users_cov, entropy, dur;
    for (std::size_t i = 0; i < a.group_session_stats.size(); ++i) {
      const GroupSessionMetrics& m = a.group_session_stats[i];
      nlohmann::ordered_json sj;
      sj["start_min"] = m.start;
      sj["end_min"] = m.end;
      sj["messages"] = m.msg_count;
      sj["msg_coverage_pct"] = detail::round2(m.msg_coverage_pct);
      sj["users"] = m.user_count;
      sj["user_coverage_pct"] = detail::round2(m.user_coverage_pct);
      sj["entropy_norm"] = m.entropy_norm;
      sj["duration_min"] = m.duration_min;
      sj["max_concurrency"] = a.session_concurrency[i];
      sessions.push_back(std::move(sj));
      msgs.push_back(static_cast<double>(m.msg_count));
      cov.push_back(m.msg_coverage_pct);
      users_n.push_back(static_cast<double>(m.user_count));
      users_cov.push_back(m.user_coverage_pct);
      entropy.push_back(m.entropy_norm);
      dur.push_back(static_cast<double>(m.duration_min));
    }
    gl["sessions"] = std::move(sessions);
    gl["session_count"] = a.group_sessions.size();
    gl["cdf"] = {{"messages", detail::json_cdf(ecdf(msgs))},
                 {"msg_coverage_pct", detail::json_cdf(ecdf(cov))},
                 {"users", detail::json_cdf(ecdf(users_n))},
                 {"user_coverage_pct", detail::json_cdf(ecdf(users_cov))},
                 {"entropy_norm", detail::json_cdf(ecdf(entropy))},
                 {"duration_min", detail::json_cdf(ecdf(dur))}};
    gl["toff"] = detail::json_dist(a.group_toffs);
    gl["max_concurrent_user_sessions"] =
        a.session_concurrency.empty() ? 0u : *std::max_element(a.session_concurrency.begin(), a.session_concurrency.end());
    r["group_layer"] = std::move(gl);
  }

  {
    nlohmann::ordered_json ty;
    nlohmann::ordered_json roles;
    std::map<std::string, std::uint32_t> role_counts;
    for (const auto& [user, role] : a.roles) {
      roles[user] = to_string(role);
      role_counts[to_string(role)] += 1;
    }
    ty["roles"] = std::move(roles);
    ty["counts"] = role_counts;
    r["typology"] = std::move(ty);
  }

  a.report = std::move(r);
  return a;
}

// ---- file emission ---------------------------------------------------------

namespace detail {

inline void atomic_write(const std::filesystem::path& path, const std::string& content) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
  }
  std::filesystem::rename(tmp, path);
}

inline std::string csv_pct(double v) { return fmt_double(round2(v)); }

}  // namespace detail

/// Writes report.json, the per-distribution CSVs and the session/histogram
/// JSONL views into `dir`. Files are written atomically (write-then-rename).
inline void write_group_outputs(const GroupAnalysis& a, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  using detail::atomic_write;
  using detail::csv_pct;
  using detail::fmt_double;

  atomic_write(dir / "report.json", a.report.dump(2) + "\n");

  std::string s;
  s = "iat_min\n";
  for (Minute v : a.iats) s += std::to_string(v) + "\n";
  atomic_write(dir / "message_iat.csv", s);

  s = "bin_start_min,messages,active_users,ratio\n";
  for (const ActivityRatioBin& b : a.activity) {
    s += std::to_string(b.bin_start) + "," + std::to_string(b.messages) + "," + std::to_string(b.active_users) + "," +
         fmt_double(b.ratio) + "\n";
  }
  atomic_write(dir / "activity_ratio.csv", s);

  s = "period,mean_iat_min,samples\n";
  for (const DayPeriodStats& p : a.day_periods) {
    s += std::string(to_string(p.period)) + "," + (p.mean_iat_min ? fmt_double(*p.mean_iat_min) : "") + "," +
         std::to_string(p.sample_count) + "\n";
  }
  atomic_write(dir / "day_period_iat.csv", s);

  s = "scope,flag,count,pct\n";
  auto content_rows = [&](const char* scope, const FlagCounts& c) {
    const std::pair<const char*, std::uint64_t> rows[] = {{"text", c.text}, {"media", c.media}, {"emoji", c.emoji}, {"link", c.link}};
    for (const auto& [flag, count] : rows) {
      s += std::string(scope) + "," + flag + "," + std::to_string(count) + "," + csv_pct(ContentBreakdown::pct(count, c.total)) + "\n";
    }
  };
  content_rows("overall", a.content.overall);
  for (std::size_t p = 0; p < 4; ++p) content_rows(to_string(static_cast<DayPeriod>(p)), a.content.per_period[p]);
  atomic_write(dir / "content_breakdown.csv", s);

  s = "user,msg_count,msg_pct,group_session_count,group_session_pct,user_session_count\n";
  for (const UserMetrics& u : a.users) {
    s += u.user_id + "," + std::to_string(u.msg_count) + "," + csv_pct(u.msg_pct) + "," + std::to_string(u.group_session_count) +
         "," + csv_pct(u.group_session_pct) + "," + std::to_string(u.user_session_count) + "\n";
  }
  atomic_write(dir / "user_metrics.csv", s);

  s = "user,start_min,end_min,messages,duration_min\n";
  for (const UserSession& us : a.user_sessions) {
    s += us.user_id + "," + std::to_string(us.start) + "," + std::to_string(us.end) + "," + std::to_string(us.message_count()) +
         "," + std::to_string(us.duration()) + "\n";
  }
  atomic_write(dir / "user_sessions.csv", s);

  s = "toff_min\n";
  for (Minute v : a.user_toffs) s += std::to_string(v) + "\n";
  atomic_write(dir / "user_toff.csv", s);

  s = "start_min,end_min,messages,msg_coverage_pct,users,user_coverage_pct,entropy_norm,duration_min,max_concurrency\n";
  for (std::size_t i = 0; i < a.group_session_stats.size(); ++i) {
    const GroupSessionMetrics& m = a.group_session_stats[i];
    s += std::to_string(m.start) + "," + std::to_string(m.end) + "," + std::to_string(m.msg_count) + "," +
         csv_pct(m.msg_coverage_pct) + "," + std::to_string(m.user_count) + "," + csv_pct(m.user_coverage_pct) + "," +
         fmt_double(m.entropy_norm) + "," + std::to_string(m.duration_min) + "," + std::to_string(a.session_concurrency[i]) + "\n";
  }
  atomic_write(dir / "group_sessions.csv", s);

  s = "toff_min\n";
  for (Minute v : a.group_toffs) s += std::to_string(v) + "\n";
  atomic_write(dir / "group_toff.csv", s);

  s = "gap_min,count\n";
  for (const GapEntry& e : a.gap_histogram) s += std::to_string(e.gap) + "," + std::to_string(e.frequency) + "\n";
  atomic_write(dir / "gap_histogram.csv", s);

  s = "rank,frequency,fitted\n";
  for (const RankedUser& ru : a.ranked) {
    s += std::to_string(ru.rank) + "," + std::to_string(ru.frequency) + "," +
         (a.zipf ? fmt_double(a.zipf->fitted(static_cast<double>(ru.rank))) : "") + "\n";
  }
  atomic_write(dir / "rank_frequency.csv", s);

  s = "user,msg_pct,session_pct,role\n";
  {
    std::map<std::string, const UserMetrics*> by_user;
    for (const UserMetrics& u : a.users) by_user[u.user_id] = &u;
    for (const auto& [user, role] : a.roles) {
      const UserMetrics* u = by_user.count(user) ? by_user.at(user) : nullptr;
      s += user + "," + csv_pct(u ? u->msg_pct : 0.0) + "," + csv_pct(u ? u->group_session_pct : 0.0) + "," + to_string(role) + "\n";
    }
  }
  atomic_write(dir / "roles.csv", s);

  std::ostringstream jsonl;
  write_user_sessions(jsonl, a.user_sessions, a.group_id);
  atomic_write(dir / "sessions_user.jsonl", jsonl.str());
  jsonl.str("");
  write_group_sessions(jsonl, a.group_sessions, a.group_id);
  atomic_write(dir / "sessions_group.jsonl", jsonl.str());
  jsonl.str("");
  write_gap_histogram(jsonl, a.gap_histogram, a.group_id);
  atomic_write(dir / "gap_histogram.jsonl", jsonl.str());
}

}  // namespace chatload
