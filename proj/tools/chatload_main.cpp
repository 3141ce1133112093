// chatload CLI: parse | analyze | fit | generate | roundtrip
//
// Exit codes: 0 success, 1 internal error, 2 usage or configuration error.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "chatload/chatload.hpp"

namespace fs = std::filesystem;
using namespace chatload;

namespace {

constexpr const char* kFormatEnvVar = "CHATLOAD_FORMAT";

FormatConfig resolve_format(const std::string& format_path) {
  if (!format_path.empty()) return FormatConfig::load_file(format_path);
  if (const char* env = std::getenv(kFormatEnvVar); env != nullptr && *env != '\0') {
    return FormatConfig::load_file(env);
  }
  return FormatConfig{};
}

void atomic_write_file(const fs::path& path, const std::string& content) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
  }
  fs::rename(tmp, path);
}

struct ParseOpts {
  std::vector<std::string> inputs;
  std::string format_path;
  std::string group_override;
  std::string salt;
  std::string out_dir = ".";
  std::optional<int> tz_offset_min;  // overrides the format config
};

int cmd_parse(const ParseOpts& opt) {
  FormatConfig fmt = resolve_format(opt.format_path);
  if (opt.tz_offset_min) fmt.tz_offset_min = *opt.tz_offset_min;
  if (opt.inputs.size() > 1 && !opt.group_override.empty()) {
    throw config_error("--group is only valid with a single input file");
  }
  fs::create_directories(opt.out_dir);
  for (const std::string& input : opt.inputs) {
    if (!fs::exists(input)) throw config_error("input not found: " + input);
    std::ifstream in(input, std::ios::binary);
    if (!in) throw config_error("cannot open " + input);
    const std::string group = opt.group_override.empty() ? fs::path(input).stem().string() : opt.group_override;

    ParseResult result;
    try {
      result = parse_export(in, fmt, group);
    } catch (const parse_error& e) {
      throw parse_error(input + ": " + e.what());
    }
    result.log = anonymize(result.log, opt.salt);

    std::ostringstream canonical;
    write_canonical(canonical, result.log);
    atomic_write_file(fs::path(opt.out_dir) / (group + ".jsonl"), canonical.str());

    nlohmann::ordered_json rj;
    rj["input"] = input;
    rj["group"] = group;
    rj["total_lines"] = result.report.total_lines;
    rj["messages"] = result.report.message_count;
    rj["continuation_lines"] = result.report.continuation_lines;
    rj["system_lines"] = result.report.system_lines;
    auto skips = nlohmann::ordered_json::array();
    for (const auto& skip : result.report.skipped) {
      skips.push_back({{"line", skip.line_no}, {"reason", skip.reason}});
    }
    rj["skipped"] = std::move(skips);
    atomic_write_file(fs::path(opt.out_dir) / (group + ".parse_report.json"), rj.dump(2) + "\n");

    std::cout << group << ": " << result.report.message_count << " messages, " << result.report.system_lines
              << " system lines, " << result.report.skipped.size() << " skipped\n";
  }
  return 0;
}

struct AnalyzeOpts {
  std::vector<std::string> inputs;
  std::vector<std::string> roster_paths;
  std::string group_threshold = "81";
  Minute user_threshold = 15;
  int tz_offset_min = 0;
  Minute activity_bin = 60;
  std::string salt;
  std::string out_dir = "out";
  RoleThresholds roles{};
};

int cmd_analyze(const AnalyzeOpts& opt) {
  // canonical logs, merged across files by group id
  std::map<std::string, MessageLog> groups;
  for (const std::string& input : opt.inputs) {
    if (!fs::exists(input)) throw config_error("input not found: " + input);
    std::ifstream in(input, std::ios::binary);
    if (!in) throw config_error("cannot open " + input);
    std::vector<MessageLog> logs = read_canonical(in);
    if (logs.empty()) {
      const std::string stem = fs::path(input).stem().string();
      groups.try_emplace(stem, MessageLog{stem, {}, 0, 0});
      continue;
    }
    for (MessageLog& log : logs) {
      MessageLog& dst = groups.try_emplace(log.group_id, MessageLog{log.group_id, {}, 0, 0}).first->second;
      dst.messages.insert(dst.messages.end(), log.messages.begin(), log.messages.end());
    }
  }
  for (auto& [_, log] : groups) log.normalize();

  std::map<std::string, Roster> rosters;
  for (const std::string& path : opt.roster_paths) {
    if (!fs::exists(path)) throw config_error("roster not found: " + path);
    std::ifstream in(path, std::ios::binary);
    const Roster roster = anonymize(load_roster(in), opt.salt);
    if (!groups.contains(roster.group_id)) {
      std::cerr << "note: roster " << path << " names group '" << roster.group_id << "' which has no log; ignored\n";
      continue;
    }
    rosters[roster.group_id] = roster;
  }

  AnalyzeConfig cfg;
  cfg.thresholds.user_threshold = opt.user_threshold;
  cfg.tz_offset_min = opt.tz_offset_min;
  cfg.activity_bin = opt.activity_bin;
  cfg.roles = opt.roles;

  bool auto_mean = false;
  if (opt.group_threshold == "auto") {
    cfg.auto_group_threshold = true;
  } else if (opt.group_threshold == "auto-mean") {
    auto_mean = true;
  } else {
    try {
      std::size_t pos = 0;
      cfg.thresholds.group_threshold = std::stoll(opt.group_threshold, &pos);
      if (pos != opt.group_threshold.size()) throw std::invalid_argument("");
    } catch (const std::exception&) {
      throw config_error("--group-threshold must be a positive integer, 'auto' or 'auto-mean'");
    }
  }
  cfg.validate();

  // auto-mean: average the per-group elbows, then apply one value to all
  std::map<std::string, Minute> elbows;
  if (auto_mean) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& [id, log] : groups) {
      if (log.size() < 2) continue;
      const Minute e = elbow_threshold(silence_gap_histogram(log));
      elbows[id] = e;
      sum += static_cast<double>(e);
      n += 1;
    }
    if (n == 0) throw config_error("--group-threshold auto-mean: no group has enough messages for the elbow heuristic");
    cfg.thresholds.group_threshold = static_cast<Minute>(std::llround(sum / static_cast<double>(n)));
  }

  std::vector<std::pair<std::string, std::future<GroupAnalysis>>> jobs;
  for (const auto& [id, log] : groups) {
    std::optional<Roster> roster;
    if (auto it = rosters.find(id); it != rosters.end()) roster = it->second;
    const MessageLog* log_ptr = &log;
    jobs.emplace_back(id, std::async(std::launch::async, [log_ptr, roster, cfg]() { return analyze_group(*log_ptr, roster, cfg); }));
  }
  for (auto& [id, fut] : jobs) {
    GroupAnalysis analysis = fut.get();
    if (auto_mean) {
      analysis.report["config"]["group_threshold_mode"] = "auto-mean";
      analysis.report["config"]["elbow_threshold_min"] =
          elbows.count(id) ? nlohmann::ordered_json(elbows.at(id)) : nlohmann::ordered_json(nullptr);
    }
    write_group_outputs(analysis, fs::path(opt.out_dir) / id);
    std::cout << id << ": " << (analysis.empty ? 0 : groups.at(id).size()) << " messages, "
              << analysis.group_sessions.size() << " group sessions, threshold " << analysis.group_threshold_used
              << " min -> " << (fs::path(opt.out_dir) / id).string() << "\n";
  }
  return 0;
}

struct FitOpts {
  std::string input;
  std::string out_dir;
};

int cmd_fit(const FitOpts& opt) {
  if (!fs::exists(opt.input)) throw config_error("input not found: " + opt.input);
  std::ifstream in(opt.input, std::ios::binary);
  const std::vector<MessageLog> logs = read_canonical(in);
  if (logs.empty()) throw config_error("no messages in " + opt.input);
  for (const MessageLog& log : logs) {
    std::map<std::string, std::uint64_t> counts;
    for (const Message& m : log.messages) counts[m.user_id] += 1;
    const auto ranked = rank_frequency(counts);
    nlohmann::ordered_json j;
    j["group"] = log.group_id;
    j["users"] = ranked.size();
    if (ranked.size() >= 2) {
      const ZipfFit fit = zipf_fit(ranked);
      j["zipf"] = {{"slope", fit.slope}, {"intercept", fit.intercept}, {"r2", fit.r2}, {"n_points", fit.n_points}};
    } else {
      j["zipf"] = nullptr;
    }
    std::cout << j.dump() << "\n";
    if (!opt.out_dir.empty()) {
      fs::create_directories(opt.out_dir);
      std::string csv = "rank,frequency,fitted\n";
      std::optional<ZipfFit> fit;
      if (ranked.size() >= 2) fit = zipf_fit(ranked);
      for (const RankedUser& ru : ranked) {
        csv += std::to_string(ru.rank) + "," + std::to_string(ru.frequency) + "," +
               (fit ? detail::fmt_double(fit->fitted(static_cast<double>(ru.rank))) : "") + "\n";
      }
      atomic_write_file(fs::path(opt.out_dir) / (log.group_id + "_rank_frequency.csv"), csv);
    }
  }
  return 0;
}

struct GenerateOpts {
  std::string params_path;
  std::string out_path = "trace.jsonl";
  std::optional<std::uint64_t> seed;
};

GeneratorParams load_params(const std::string& path, std::optional<std::uint64_t> seed_override) {
  if (!fs::exists(path)) throw config_error("params not found: " + path);
  std::ifstream in(path, std::ios::binary);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw config_error(std::string("generator params: ") + e.what());
  }
  GeneratorParams params = GeneratorParams::from_json(j);
  if (seed_override) params.seed = *seed_override;
  return params;
}

int cmd_generate(const GenerateOpts& opt) {
  const GeneratorParams params = load_params(opt.params_path, opt.seed);
  const MessageLog log = generate_trace(params);
  std::ostringstream canonical;
  write_canonical(canonical, log);
  atomic_write_file(opt.out_path, canonical.str());
  std::cout << log.group_id << ": " << log.size() << " messages -> " << opt.out_path << "\n";
  return 0;
}

struct RoundtripOpts {
  std::string params_path;
  Minute user_threshold = 15;
  std::optional<std::uint64_t> seed;
};

int cmd_roundtrip(const RoundtripOpts& opt) {
  const GeneratorParams params = load_params(opt.params_path, opt.seed);
  if (opt.user_threshold <= 0) throw config_error("--user-threshold must be positive");
  const RoundTripReport rep = round_trip_check(params, opt.user_threshold);
  nlohmann::ordered_json j;
  j["messages"] = rep.messages;
  j["generated_on_periods"] = rep.generated_on_periods;
  j["recovered_user_sessions"] = rep.recovered_user_sessions;
  j["session_count_rel_err"] = rep.session_count_rel_err;
  j["configured_off_mean"] = rep.configured_off_mean;
  j["recovered_toff_mean"] = rep.recovered_toff_mean;
  j["toff_rel_err"] = rep.toff_rel_err;
  j["expected_zipf_slope"] = rep.expected_zipf_slope;
  j["fitted_zipf_slope"] = rep.fitted_zipf_slope ? nlohmann::ordered_json(*rep.fitted_zipf_slope) : nlohmann::ordered_json(nullptr);
  j["fitted_zipf_r2"] = rep.fitted_zipf_r2 ? nlohmann::ordered_json(*rep.fitted_zipf_r2) : nlohmann::ordered_json(nullptr);
  j["zipf_slope_abs_err"] =
      rep.zipf_slope_abs_err ? nlohmann::ordered_json(*rep.zipf_slope_abs_err) : nlohmann::ordered_json(nullptr);
  std::cout << j.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"chatload: group-chat workload characterization toolkit"};
  app.require_subcommand(1);

  ParseOpts parse_opts;
  CLI::App* parse_cmd = app.add_subcommand("parse", "Parse text exports into canonical records");
  parse_cmd->add_option("inputs", parse_opts.inputs, "export files")->required()->expected(-1);
  parse_cmd->add_option("--format", parse_opts.format_path, "format config JSON (default: $" + std::string(kFormatEnvVar) + ")");
  parse_cmd->add_option("--group", parse_opts.group_override, "group id (default: file stem; single input only)");
  parse_cmd->add_option("--salt", parse_opts.salt, "anonymization salt");
  parse_cmd->add_option("--out", parse_opts.out_dir, "output directory");
  int parse_tz = 0;
  CLI::Option* parse_tz_opt = parse_cmd->add_option("--tz-offset", parse_tz, "export wall-clock offset in minutes (overrides the format config)");

  AnalyzeOpts analyze_opts;
  CLI::App* analyze_cmd = app.add_subcommand("analyze", "Run the metric suite over canonical logs");
  analyze_cmd->add_option("inputs", analyze_opts.inputs, "canonical .jsonl files")->required()->expected(-1);
  analyze_cmd->add_option("--roster", analyze_opts.roster_paths, "roster JSON (repeatable)");
  analyze_cmd->add_option("--user-threshold", analyze_opts.user_threshold, "user session threshold, minutes");
  analyze_cmd->add_option("--group-threshold", analyze_opts.group_threshold, "group threshold: minutes, 'auto' or 'auto-mean'");
  analyze_cmd->add_option("--tz-offset", analyze_opts.tz_offset_min, "minutes to add to timestamps for local time");
  analyze_cmd->add_option("--bin", analyze_opts.activity_bin, "activity ratio bin, minutes");
  analyze_cmd->add_option("--salt", analyze_opts.salt, "salt used when the logs were parsed (for roster matching)");
  analyze_cmd->add_option("--out", analyze_opts.out_dir, "output directory");
  analyze_cmd->add_option("--role-session-high", analyze_opts.roles.session_pct_high, "session %% cutoff for frequent participants");
  analyze_cmd->add_option("--role-msg-low", analyze_opts.roles.msg_pct_low, "message %% below which frequent participants are audience");
  analyze_cmd->add_option("--role-msg-high", analyze_opts.roles.msg_pct_high, "message %% above which users are heavy posters");

  FitOpts fit_opts;
  CLI::App* fit_cmd = app.add_subcommand("fit", "Rank-frequency Zipf fit of a canonical log");
  fit_cmd->add_option("input", fit_opts.input, "canonical .jsonl file")->required();
  fit_cmd->add_option("--out", fit_opts.out_dir, "directory for rank_frequency CSVs");

  GenerateOpts gen_opts;
  CLI::App* gen_cmd = app.add_subcommand("generate", "Synthesize a trace from ON/OFF model params");
  gen_cmd->add_option("--params", gen_opts.params_path, "generator params JSON")->required();
  gen_cmd->add_option("--out", gen_opts.out_path, "output canonical file");
  std::uint64_t gen_seed = 0;
  CLI::Option* gen_seed_opt = gen_cmd->add_option("--seed", gen_seed, "override the seed from the params file");

  RoundtripOpts rt_opts;
  CLI::App* rt_cmd = app.add_subcommand("roundtrip", "Generate, sessionize and compare against ground truth");
  rt_cmd->add_option("--params", rt_opts.params_path, "generator params JSON")->required();
  rt_cmd->add_option("--user-threshold", rt_opts.user_threshold, "user session threshold, minutes");
  std::uint64_t rt_seed = 0;
  CLI::Option* rt_seed_opt = rt_cmd->add_option("--seed", rt_seed, "override the seed from the params file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (parse_tz_opt->count() > 0) parse_opts.tz_offset_min = parse_tz;
  if (gen_seed_opt->count() > 0) gen_opts.seed = gen_seed;
  if (rt_seed_opt->count() > 0) rt_opts.seed = rt_seed;

  try {
    if (parse_cmd->parsed()) return cmd_parse(parse_opts);
    if (analyze_cmd->parsed()) return cmd_analyze(analyze_opts);
    if (fit_cmd->parsed()) return cmd_fit(fit_opts);
    if (gen_cmd->parsed()) return cmd_generate(gen_opts);
    if (rt_cmd->parsed()) return cmd_roundtrip(rt_opts);
  } catch (const config_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const parse_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
