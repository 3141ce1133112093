#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "chatload/metrics.hpp"
#include "chatload/session.hpp"
#include "chatload/statfit.hpp"
#include "chatload/types.hpp"

namespace chatload {

/// Duration distribution, parameterized in minutes. For lognormal, `mean` is
/// the actual mean (mu = ln(mean) - sigma^2/2) so both families read the same.
struct DistSpec {
  enum class Family { exponential, lognormal } family = Family::exponential;
  double mean = 1.0;
  double sigma = 0.5;  // log-space shape, lognormal only

  void validate(const char* what) const {
    if (!(mean > 0.0)) throw config_error(std::string(what) + ": mean must be positive");
    if (family == Family::lognormal && !(sigma > 0.0))
      throw config_error(std::string(what) + ": sigma must be positive");
  }

  static DistSpec from_json(const nlohmann::json& j, const char* what) {
    DistSpec d;
    const std::string family = j.value("family", "exponential");
    if (family == "exponential") {
      d.family = Family::exponential;
    } else if (family == "lognormal") {
      d.family = Family::lognormal;
    } else {
      throw config_error(std::string(what) + ": unknown family '" + family + "'");
    }
    if (j.contains("mean")) d.mean = j.at("mean").get<double>();
    if (j.contains("sigma")) d.sigma = j.at("sigma").get<double>();
    d.validate(what);
    return d;
  }
};

/// Deterministic sampler. The uniform source and both transforms are spelled
/// out here, so a seed pins the byte-exact output everywhere mt19937_64 does.
class Sampler {
 public:
  explicit Sampler(std::uint64_t seed) : rng_(seed) {}

  double uniform01() {  // [0, 1)
    return static_cast<double>(rng_() >> 11) * 0x1.0p-53;
  }

  double sample(const DistSpec& d) {
    switch (d.family) {
      case DistSpec::Family::exponential:
        return -d.mean * std::log1p(-uniform01());
      case DistSpec::Family::lognormal: {
        const double u1 = 1.0 - uniform01();  // (0, 1]
        const double u2 = uniform01();
        const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
        const double mu = std::log(d.mean) - 0.5 * d.sigma * d.sigma;
        return std::exp(mu + d.sigma * z);
      }
    }
    return 0.0;
  }

 private:
  std::mt19937_64 rng_;
};

struct GeneratorParams {
  std::string group_id = "synthetic";
  std::uint32_t n_users = 0;
  Minute horizon_min = 0;
  DistSpec on_duration{DistSpec::Family::exponential, 30.0, 0.5};
  DistSpec off_duration{DistSpec::Family::exponential, 600.0, 0.5};
  DistSpec intra_session_iat{DistSpec::Family::exponential, 2.0, 0.5};
  double user_activity_skew = 0.0;  // user u's message rate scales as u^-s
  std::vector<std::pair<ContentFlags, double>> content_mix = default_content_mix();
  std::uint64_t seed = 0;

  static std::vector<std::pair<ContentFlags, double>> default_content_mix() {
    return {
        {ContentFlags::from_code("t"), 0.72},
        {ContentFlags::from_code("m"), 0.20},
        {ContentFlags::from_code("e"), 0.05},
        {ContentFlags::from_code("tl"), 0.03},
    };
  }

  void validate() const {
    on_duration.validate("on_duration");
    off_duration.validate("off_duration");
    intra_session_iat.validate("intra_session_iat");
    if (user_activity_skew < 0.0) throw config_error("generator: skew must be >= 0");
    if (content_mix.empty()) throw config_error("generator: content_mix is empty");
    double sum = 0.0;
    for (const auto& [flags, p] : content_mix) {
      if (!flags.any()) throw config_error("generator: content_mix pattern without flags");
      if (p < 0.0) throw config_error("generator: content_mix probability < 0");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw config_error("generator: content_mix probabilities must sum to 1");
  }

  static GeneratorParams from_json(const nlohmann::json& j) {
    GeneratorParams p;
    try {
      if (j.contains("group")) p.group_id = j.at("group").get<std::string>();
      if (j.contains("n_users")) p.n_users = j.at("n_users").get<std::uint32_t>();
      if (j.contains("horizon_min")) p.horizon_min = j.at("horizon_min").get<Minute>();
      if (j.contains("on")) p.on_duration = DistSpec::from_json(j.at("on"), "on");
      if (j.contains("off")) p.off_duration = DistSpec::from_json(j.at("off"), "off");
      if (j.contains("iat")) p.intra_session_iat = DistSpec::from_json(j.at("iat"), "iat");
      if (j.contains("skew")) p.user_activity_skew = j.at("skew").get<double>();
      if (j.contains("seed")) p.seed = j.at("seed").get<std::uint64_t>();
      if (j.contains("content_mix")) {
        p.content_mix.clear();
        for (const auto& [code, prob] : j.at("content_mix").items()) {
          p.content_mix.emplace_back(ContentFlags::from_code(code), prob.get<double>());
        }
      }
    } catch (const nlohmann::json::exception& e) {
      throw config_error(std::string("generator params: ") + e.what());
    }
    p.validate();
    return p;
  }
};

/// What the generator knows that the estimators must recover.
struct GeneratorTruth {
  std::uint64_t on_period_count = 0;                 // ON periods that emitted messages
  std::map<std::string, std::uint64_t> msg_counts;   // per synthetic user
  double off_mean_configured = 0.0;
  double skew = 0.0;
};

struct GeneratedTrace {
  MessageLog log;
  GeneratorTruth truth;
};

namespace detail {
inline std::string synthetic_user_id(std::uint32_t index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "u%05u", index);
  return buf;
}
}  // namespace detail

/// Alternating renewal simulation: per user, OFF then ON periods tile the
/// horizon; the first OFF is shortened by a uniform factor so users do not
/// start in lockstep. Every ON period opens with a message and continues at
/// sampled IATs until the period (or horizon) ends; timestamps are truncated
/// to whole minutes, so same-minute messages are legal and kept distinct.
/// User u's message rate is scaled by u^-skew via its IAT mean.
inline GeneratedTrace generate_trace_with_truth(const GeneratorParams& params) {
  params.validate();
  GeneratedTrace out;
  out.log.group_id = params.group_id;
  out.truth.off_mean_configured = params.off_duration.mean;
  out.truth.skew = params.user_activity_skew;
  if (params.n_users == 0 || params.horizon_min <= 0) {
    out.log.normalize();
    return out;
  }

  Sampler sampler(params.seed);
  std::vector<double> cum;
  cum.reserve(params.content_mix.size());
  double acc = 0.0;
  for (const auto& [_, p] : params.content_mix) {
    acc += p;
    cum.push_back(acc);
  }

  const auto horizon = static_cast<double>(params.horizon_min);
  for (std::uint32_t u = 1; u <= params.n_users; ++u) {
    const std::string user = detail::synthetic_user_id(u);
    const double iat_scale = std::pow(static_cast<double>(u), params.user_activity_skew);
    DistSpec iat = params.intra_session_iat;
    iat.mean *= iat_scale;

    double t = sampler.uniform01() * sampler.sample(params.off_duration);
    while (t < horizon) {
      // ON period; always opens with a message
      const double on_len = sampler.sample(params.on_duration);
      const double on_end = std::min(t + on_len, horizon);
      auto emit = [&](double at) {
        Message m;
        m.user_id = user;
        m.ts_min = static_cast<Minute>(at);
        const double pick = sampler.uniform01();
        std::size_t ci = 0;
        while (ci + 1 < cum.size() && pick >= cum[ci]) ++ci;
        m.content = params.content_mix[ci].first;
        m.text_len = m.content.has_text
                         ? static_cast<std::uint32_t>(1.0 + std::min(sampler.sample({DistSpec::Family::exponential, 40.0, 0.5}), 1999.0))
                         : 0u;
        out.log.messages.push_back(std::move(m));
        out.truth.msg_counts[user] += 1;
      };
      emit(t);
      for (double mt = t + sampler.sample(iat); mt < on_end; mt += sampler.sample(iat)) {
        emit(mt);
      }
      out.truth.on_period_count += 1;
      t = on_end + sampler.sample(params.off_duration);
    }
  }
  out.log.normalize();
  return out;
}

inline MessageLog generate_trace(const GeneratorParams& params) {
  return generate_trace_with_truth(params).log;
}

/// Generate -> sessionize -> compare the estimators against the generator's
/// ground truth. Meaningful when the OFF mean is well above the threshold
/// and the IAT mean is well below it.
struct RoundTripReport {
  std::uint64_t generated_on_periods = 0;
  std::uint64_t recovered_user_sessions = 0;
  double session_count_rel_err = 0.0;
  double configured_off_mean = 0.0;
  double recovered_toff_mean = 0.0;
  double toff_rel_err = 0.0;
  double expected_zipf_slope = 0.0;
  std::optional<double> fitted_zipf_slope;
  std::optional<double> fitted_zipf_r2;
  std::optional<double> zipf_slope_abs_err;
  std::uint64_t messages = 0;
};

inline RoundTripReport round_trip_check(const GeneratorParams& params, Minute user_threshold) {
  const GeneratedTrace trace = generate_trace_with_truth(params);
  const std::vector<UserSession> sessions = build_user_sessions(trace.log, user_threshold);

  RoundTripReport report;
  report.messages = trace.log.size();
  report.generated_on_periods = trace.truth.on_period_count;
  report.recovered_user_sessions = sessions.size();
  if (report.generated_on_periods > 0) {
    report.session_count_rel_err =
        std::abs(static_cast<double>(report.recovered_user_sessions) - static_cast<double>(report.generated_on_periods)) /
        static_cast<double>(report.generated_on_periods);
  }

  report.configured_off_mean = trace.truth.off_mean_configured;
  const std::vector<Minute> toffs = user_toff(sessions);
  if (!toffs.empty()) {
    double sum = 0.0;
    for (Minute v : toffs) sum += static_cast<double>(v);
    report.recovered_toff_mean = sum / static_cast<double>(toffs.size());
    report.toff_rel_err = std::abs(report.recovered_toff_mean - report.configured_off_mean) / report.configured_off_mean;
  }

  report.expected_zipf_slope = -trace.truth.skew;
  if (trace.truth.msg_counts.size() >= 2) {
    const auto ranked = rank_frequency(trace.truth.msg_counts);
    const ZipfFit fit = zipf_fit(ranked);
    report.fitted_zipf_slope = fit.slope;
    report.fitted_zipf_r2 = fit.r2;
    report.zipf_slope_abs_err = std::abs(fit.slope - report.expected_zipf_slope);
  }
  return report;
}

}  // namespace chatload
