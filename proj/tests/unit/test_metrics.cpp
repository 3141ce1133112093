#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "chatload/metrics.hpp"
#include "chatload/statfit.hpp"

using namespace chatload;

namespace {

MessageLog make_log(const std::vector<std::pair<std::string, Minute>>& entries, ContentFlags flags = {true, false, false, false}) {
  MessageLog log;
  log.group_id = "g";
  for (const auto& [user, ts] : entries) {
    Message m;
    m.user_id = user;
    m.ts_min = ts;
    m.content = flags;
    log.messages.push_back(std::move(m));
  }
  log.normalize();
  return log;
}

MessageLog random_log(std::mt19937_64& rng, std::size_t max_messages = 120, int max_users = 8) {
  std::vector<std::pair<std::string, Minute>> entries;
  const std::size_t n = 2 + rng() % max_messages;
  Minute ts = 0;
  for (std::size_t i = 0; i < n; ++i) {
    ts += static_cast<Minute>(rng() % 50);
    entries.emplace_back("u" + std::to_string(rng() % static_cast<std::uint64_t>(max_users)), ts);
  }
  return make_log(entries);
}

}  // namespace

TEST_CASE("message IAT basics") {
  CHECK(message_iat(make_log({{"a", 0}, {"a", 3}, {"a", 10}})) == std::vector<Minute>{3, 7});
  CHECK(message_iat(make_log({{"a", 9}, {"b", 9}})) == std::vector<Minute>{0});
  CHECK(message_iat(make_log({{"a", 5}})).empty());
}

TEST_CASE("message IAT telescopes and matches pairwise differences") {
  std::mt19937_64 rng(1);
  for (int iter = 0; iter < 30; ++iter) {
    const MessageLog log = random_log(rng);
    const auto iats = message_iat(log);
    REQUIRE(iats.size() == log.size() - 1);
    Minute sum = 0;
    for (std::size_t i = 0; i < iats.size(); ++i) {
      CHECK(iats[i] == log.messages[i + 1].ts_min - log.messages[i].ts_min);
      sum += iats[i];
    }
    CHECK(sum == log.period_end - log.period_start);
  }
}

TEST_CASE("activity ratio per bin") {
  // 10 messages by 2 users inside one hourly bin
  std::vector<std::pair<std::string, Minute>> entries;
  for (int i = 0; i < 5; ++i) entries.emplace_back("a", 10 + i);
  for (int i = 0; i < 5; ++i) entries.emplace_back("b", 20 + i);
  const auto bins = activity_ratio(make_log(entries), 60);
  REQUIRE(bins.size() == 1);
  CHECK(bins[0].bin_start == 0);
  CHECK(bins[0].ratio == doctest::Approx(5.0));

  const auto single = activity_ratio(make_log({{"a", 90}}), 60);
  REQUIRE(single.size() == 1);
  CHECK(single[0].bin_start == 60);
  CHECK(single[0].ratio == doctest::Approx(1.0));
}

TEST_CASE("activity ratio three-bin fixture") {
  // bin 0: 3 msgs / 1 user = 3; bin 120: 4 msgs / 2 users = 2; bin 240: 1/1
  const MessageLog log = make_log({{"a", 0}, {"a", 30}, {"a", 59}, {"a", 120}, {"a", 130}, {"b", 140}, {"b", 150}, {"c", 250}});
  const auto bins = activity_ratio(log, 60);
  REQUIRE(bins.size() == 3);
  CHECK(bins[0].bin_start == 0);
  CHECK(bins[0].ratio == doctest::Approx(3.0));
  CHECK(bins[1].bin_start == 120);
  CHECK(bins[1].ratio == doctest::Approx(2.0));
  CHECK(bins[2].bin_start == 240);
  CHECK(bins[2].ratio == doctest::Approx(1.0));
  CHECK_THROWS_AS(activity_ratio(log, 0), std::invalid_argument);
}

TEST_CASE("day period IAT attribution") {
  // both messages 09:xx local -> morning only
  const auto morning = day_period_iat(make_log({{"a", 9 * 60}, {"a", 9 * 60 + 30}}), 0);
  CHECK(morning[1].sample_count == 1);
  REQUIRE(morning[1].mean_iat_min.has_value());
  CHECK(*morning[1].mean_iat_min == doctest::Approx(30.0));
  CHECK(morning[0].sample_count == 0);
  CHECK_FALSE(morning[0].mean_iat_min.has_value());

  // 05:59 -> 06:01 counts for the earlier endpoint (early_hours)
  const auto boundary = day_period_iat(make_log({{"a", 5 * 60 + 59}, {"a", 6 * 60 + 1}}), 0);
  CHECK(boundary[0].sample_count == 1);
  CHECK(*boundary[0].mean_iat_min == doctest::Approx(2.0));
  CHECK(boundary[1].sample_count == 0);
}

TEST_CASE("day period IAT matches a bucket-then-average oracle") {
  std::mt19937_64 rng(8);
  for (int iter = 0; iter < 20; ++iter) {
    const MessageLog log = random_log(rng);
    const int tz = static_cast<int>(rng() % 1440) - 720;
    const auto got = day_period_iat(log, tz);
    std::array<std::vector<double>, 4> buckets;
    for (std::size_t i = 1; i < log.size(); ++i) {
      Minute local = log.messages[i - 1].ts_min + tz;
      Minute of_day = ((local % 1440) + 1440) % 1440;
      buckets[static_cast<std::size_t>(of_day / 360)].push_back(
          static_cast<double>(log.messages[i].ts_min - log.messages[i - 1].ts_min));
    }
    for (std::size_t p = 0; p < 4; ++p) {
      CHECK(got[p].sample_count == buckets[p].size());
      if (!buckets[p].empty()) {
        double mean = 0;
        for (double v : buckets[p]) mean += v;
        mean /= static_cast<double>(buckets[p].size());
        CHECK(*got[p].mean_iat_min == doctest::Approx(mean));
      }
    }
  }
}

TEST_CASE("content breakdown percentages") {
  MessageLog log;
  log.group_id = "g";
  auto push = [&](ContentFlags f) {
    Message m;
    m.user_id = "a";
    m.ts_min = static_cast<Minute>(log.messages.size());
    m.content = f;
    log.messages.push_back(m);
  };
  push({true, false, false, false});
  push({true, false, false, false});
  push({true, false, false, false});
  push({false, true, false, false});
  log.normalize();
  const ContentBreakdown b = content_breakdown(log);
  CHECK(ContentBreakdown::pct(b.overall.text, b.overall.total) == doctest::Approx(75.0));
  CHECK(ContentBreakdown::pct(b.overall.media, b.overall.total) == doctest::Approx(25.0));
}

TEST_CASE("overlapping flags can sum past 100 percent") {
  MessageLog log = make_log({{"a", 0}}, ContentFlags{true, false, false, true});
  const ContentBreakdown b = content_breakdown(log);
  CHECK(ContentBreakdown::pct(b.overall.text, b.overall.total) == doctest::Approx(100.0));
  CHECK(ContentBreakdown::pct(b.overall.link, b.overall.total) == doctest::Approx(100.0));
}

TEST_CASE("type-count tally on a top-8-shaped corpus") {
  // 69,914 messages shaped like the usual public-group mix:
  // 43,019 text-only, 11,862 media-only, 7,842 emoji-only,
  // 2,150 text+media, 5,041 text+link
  MessageLog log;
  log.group_id = "g";
  Minute ts = 0;
  auto push_n = [&](std::size_t n, ContentFlags f) {
    for (std::size_t i = 0; i < n; ++i) {
      Message m;
      m.user_id = "u";
      m.ts_min = ts++;
      m.content = f;
      log.messages.push_back(m);
    }
  };
  push_n(43019, {true, false, false, false});
  push_n(11862, {false, true, false, false});
  push_n(7842, {false, false, true, false});
  push_n(2150, {true, true, false, false});
  push_n(5041, {true, false, false, true});
  log.normalize();
  const ContentBreakdown b = content_breakdown(log);
  CHECK(b.overall.total == 69914);
  CHECK(b.overall.text == 50210);
  CHECK(b.overall.media == 14012);
  CHECK(b.overall.emoji == 7842);
  CHECK(b.overall.link == 5041);
  const double media_pct = ContentBreakdown::pct(b.overall.media, b.overall.total);
  CHECK(media_pct >= 20.0);  // "at least 20%" territory
  CHECK(media_pct == doctest::Approx(20.04).epsilon(1e-3));
  CHECK(ContentBreakdown::pct(b.overall.emoji, b.overall.total) == doctest::Approx(11.2).epsilon(2e-3));
  // multi-flag messages push the per-type sum above the message count,
  // by exactly the number of extra flags
  CHECK(b.overall.text + b.overall.media + b.overall.emoji + b.overall.link == b.overall.total + 2150 + 5041);
}

TEST_CASE("single-flag messages make the tally exact") {
  MessageLog log = make_log({{"a", 0}, {"b", 1}, {"c", 2}});
  const ContentBreakdown b = content_breakdown(log);
  CHECK(b.overall.text + b.overall.media + b.overall.emoji + b.overall.link == b.overall.total);
}

TEST_CASE("user metrics five fields") {
  std::vector<std::pair<std::string, Minute>> entries;
  for (int i = 0; i < 25; ++i) entries.emplace_back("a", i);
  for (int i = 0; i < 75; ++i) entries.emplace_back("b", 1000 + i);
  const MessageLog log = make_log(entries);
  const auto us = build_user_sessions(log, 15);
  const auto gs = build_group_sessions(log, 81);
  const auto metrics = user_metrics(log, us, gs);
  REQUIRE(metrics.size() == 2);
  CHECK(metrics[0].user_id == "a");
  CHECK(metrics[0].msg_count == 25);
  CHECK(metrics[0].msg_pct == doctest::Approx(25.0));
  REQUIRE(gs.size() == 2);
  CHECK(metrics[0].group_session_count == 1);
  CHECK(metrics[0].group_session_pct == doctest::Approx(50.0));
  CHECK(metrics[0].user_session_count == 1);  // 1-minute gaps never split
}

TEST_CASE("user metrics match a brute-force recount on random traces") {
  std::mt19937_64 rng(21);
  for (int iter = 0; iter < 30; ++iter) {
    const MessageLog log = random_log(rng);
    const auto us = build_user_sessions(log, 15);
    const auto gs = build_group_sessions(log, 40);
    const auto metrics = user_metrics(log, us, gs);

    double pct_sum = 0.0;
    for (const UserMetrics& m : metrics) {
      std::uint64_t msgs = 0;
      for (const Message& msg : log.messages) msgs += msg.user_id == m.user_id;
      CHECK(m.msg_count == msgs);
      std::uint64_t sess = 0;
      for (const UserSession& s : us) sess += s.user_id == m.user_id;
      CHECK(m.user_session_count == sess);
      std::uint64_t in_gs = 0;
      for (const GroupSession& g : gs) in_gs += g.per_user_counts.contains(m.user_id);
      CHECK(m.group_session_count == in_gs);
      CHECK(m.msg_pct == doctest::Approx(100.0 * static_cast<double>(msgs) / static_cast<double>(log.size())));
      pct_sum += m.msg_pct;
    }
    CHECK(pct_sum == doctest::Approx(100.0).epsilon(1e-9));
  }
}

TEST_CASE("user session metrics") {
  const MessageLog log = make_log({{"a", 0}, {"a", 10}, {"b", 500}});
  const auto us = build_user_sessions(log, 15);
  const auto m = user_session_metrics(us);
  REQUIRE(m.size() == 2);
  CHECK(m[0].msg_count == 2);
  CHECK(m[0].duration_min == 10);
  CHECK(m[1].msg_count == 1);
  CHECK(m[1].duration_min == 0);
}

TEST_CASE("user T_off basics and floor property") {
  const MessageLog log = make_log({{"a", 0}, {"a", 10}, {"a", 40}, {"a", 45}});
  const auto us = build_user_sessions(log, 15);
  REQUIRE(us.size() == 2);
  CHECK(user_toff(us) == std::vector<Minute>{30});

  const auto single = build_user_sessions(make_log({{"a", 3}}), 15);
  CHECK(user_toff(single).empty());

  std::mt19937_64 rng(55);
  for (int iter = 0; iter < 30; ++iter) {
    const MessageLog rlog = random_log(rng);
    const Minute threshold = 1 + static_cast<Minute>(rng() % 30);
    const auto sessions = build_user_sessions(rlog, threshold);
    for (Minute toff : user_toff(sessions)) CHECK(toff > threshold);
  }
}

TEST_CASE("group T_off basics and floor property") {
  const MessageLog log = make_log({{"a", 0}, {"b", 40}, {"a", 300}});
  const auto gs = build_group_sessions(log, 81);
  CHECK(group_toff(gs) == std::vector<Minute>{260});
  const auto one = build_group_sessions(make_log({{"a", 0}}), 81);
  CHECK(group_toff(one).empty());

  std::mt19937_64 rng(56);
  for (int iter = 0; iter < 30; ++iter) {
    const MessageLog rlog = random_log(rng);
    const Minute threshold = 1 + static_cast<Minute>(rng() % 30);
    const auto sessions = build_group_sessions(rlog, threshold);
    for (Minute toff : group_toff(sessions)) CHECK(toff > threshold);
  }
}

TEST_CASE("session entropy frozen values") {
  GroupSession gs;
  gs.per_user_counts = {{"a", 7}};
  CHECK(session_entropy(gs) == 0.0);  // single speaker

  gs.per_user_counts = {{"a", 5}, {"b", 5}};
  CHECK(session_entropy(gs) == doctest::Approx(1.0).epsilon(1e-12));

  gs.per_user_counts = {{"a", 3}, {"b", 1}};
  // H = -(0.75 log2 0.75 + 0.25 log2 0.25) = 0.811278, normalizer log2(2) = 1
  CHECK(session_entropy(gs) == doctest::Approx(0.811278).epsilon(1e-6));

  gs.per_user_counts = {};
  CHECK_THROWS_AS(session_entropy(gs), std::invalid_argument);
}

TEST_CASE("session entropy matches direct formula evaluation") {
  std::mt19937_64 rng(71);
  for (int iter = 0; iter < 500; ++iter) {
    GroupSession gs;
    const int k = 1 + static_cast<int>(rng() % 12);
    for (int u = 0; u < k; ++u) gs.per_user_counts["u" + std::to_string(u)] = 1 + rng() % 50;
    const double got = session_entropy(gs);
    CHECK(got >= 0.0);
    CHECK(got <= 1.0 + 1e-12);
    if (k == 1) {
      CHECK(got == 0.0);
      continue;
    }
    long double total = 0;
    for (const auto& [_, c] : gs.per_user_counts) total += c;
    long double h = 0;
    for (const auto& [_, c] : gs.per_user_counts) {
      const long double p = static_cast<long double>(c) / total;
      h -= p * std::log2(p);
    }
    const long double expect = h / std::log2(static_cast<long double>(k));
    CHECK(std::abs(got - static_cast<double>(expect)) < 1e-12);
  }
}

TEST_CASE("group session metrics and coverage identity") {
  std::vector<std::pair<std::string, Minute>> entries;
  for (int i = 0; i < 10; ++i) entries.emplace_back("a", i);
  for (int i = 0; i < 90; ++i) entries.emplace_back(i % 2 ? "a" : "b", 1000 + i);
  const MessageLog log = make_log(entries);
  const auto gs = build_group_sessions(log, 81);
  REQUIRE(gs.size() == 2);
  const auto metrics = group_session_metrics(gs, 2, log.size());
  CHECK(metrics[0].msg_count == 10);
  CHECK(metrics[0].msg_coverage_pct == doctest::Approx(10.0));
  CHECK(metrics[0].user_count == 1);
  CHECK(metrics[0].user_coverage_pct == doctest::Approx(50.0));
  CHECK(metrics[1].user_coverage_pct == doctest::Approx(100.0));
  CHECK(metrics[0].msg_coverage_pct + metrics[1].msg_coverage_pct == doctest::Approx(100.0).epsilon(1e-9));
}

TEST_CASE("metrics are invariant under pseudonym relabeling") {
  std::mt19937_64 rng(303);
  const MessageLog log = random_log(rng, 80, 6);
  MessageLog relabeled = log;
  for (Message& m : relabeled.messages) m.user_id = "zz_" + m.user_id;

  const auto gs_a = build_group_sessions(log, 40);
  const auto gs_b = build_group_sessions(relabeled, 40);
  REQUIRE(gs_a.size() == gs_b.size());
  for (std::size_t i = 0; i < gs_a.size(); ++i) {
    CHECK(session_entropy(gs_a[i]) == doctest::Approx(session_entropy(gs_b[i])));
  }

  auto sorted_pcts = [](const std::vector<UserMetrics>& ms) {
    std::vector<double> v;
    for (const auto& m : ms) v.push_back(m.msg_pct);
    std::sort(v.begin(), v.end());
    return v;
  };
  const auto m_a = sorted_pcts(user_metrics(log, build_user_sessions(log, 15), gs_a));
  const auto m_b = sorted_pcts(user_metrics(relabeled, build_user_sessions(relabeled, 15), gs_b));
  REQUIRE(m_a.size() == m_b.size());
  for (std::size_t i = 0; i < m_a.size(); ++i) CHECK(m_a[i] == doctest::Approx(m_b[i]));
}
