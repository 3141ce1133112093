// End-to-end tests for the chatload binary. Each case shells out to the
// built CLI and inspects exit codes and produced files.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

const std::string kCli = CHATLOAD_CLI_PATH;
const fs::path kFixtures = CHATLOAD_FIXTURES_DIR;

struct RunResult {
  int exit_code = -1;
  std::string out;
};

RunResult run(const std::string& args) {
  const fs::path out_file = fs::temp_directory_path() / "chatload_cli_stdout.txt";
  const std::string cmd = kCli + " " + args + " > " + out_file.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  RunResult r;
#ifdef _WIN32
  r.exit_code = status;
#else
  r.exit_code = WEXITSTATUS(status);
#endif
  std::ifstream in(out_file);
  std::stringstream buf;
  buf << in.rdbuf();
  r.out = buf.str();
  return r;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::size_t line_count(const fs::path& p) {
  const std::string content = slurp(p);
  return static_cast<std::size_t>(std::count(content.begin(), content.end(), '\n'));
}

}  // namespace

TEST_CASE("no subcommand is a usage error") {
  CHECK(run("").exit_code == 2);
  CHECK(run("--help").exit_code == 0);
}

TEST_CASE("parse: fixture export produces the expected canonical file") {
  const fs::path dir = fresh_dir("cl_parse");
  const RunResult r = run("parse " + (kFixtures / "export_n1.txt").string() + " --group n1 --out " + dir.string());
  CHECK(r.exit_code == 0);
  CHECK(fs::exists(dir / "n1.jsonl"));
  CHECK(line_count(dir / "n1.jsonl") == 9);  // hand count from the fixture

  const auto report = nlohmann::json::parse(slurp(dir / "n1.parse_report.json"));
  CHECK(report.at("messages") == 9);
  CHECK(report.at("system_lines") == 1);
  CHECK(report.at("continuation_lines") == 1);
  CHECK(report.at("skipped").empty());
  // pseudonymized, never the raw name
  CHECK(slurp(dir / "n1.jsonl").find("Alice") == std::string::npos);
}

TEST_CASE("parse: empty file gives an empty log and zero skips") {
  const fs::path dir = fresh_dir("cl_parse_empty");
  const fs::path empty = dir / "empty.txt";
  std::ofstream(empty).close();
  const RunResult r = run("parse " + empty.string() + " --out " + dir.string());
  CHECK(r.exit_code == 0);
  CHECK(fs::exists(dir / "empty.jsonl"));
  CHECK(line_count(dir / "empty.jsonl") == 0);
  const auto report = nlohmann::json::parse(slurp(dir / "empty.parse_report.json"));
  CHECK(report.at("skipped").empty());
}

TEST_CASE("parse: bad format config is a usage error (exit 2)") {
  const fs::path dir = fresh_dir("cl_badfmt");
  const fs::path bad = dir / "bad.json";
  std::ofstream(bad) << "{ not json";
  const RunResult r = run("parse " + (kFixtures / "export_n1.txt").string() + " --format " + bad.string() + " --out " + dir.string());
  CHECK(r.exit_code == 2);
}

TEST_CASE("parse: missing input is a usage error") {
  CHECK(run("parse /nonexistent/file.txt").exit_code == 2);
}

TEST_CASE("parse: garbage first line fails with a parse error") {
  const fs::path dir = fresh_dir("cl_garbage");
  std::ofstream(dir / "bad.txt") << "random garbage\n";
  const RunResult r = run("parse " + (dir / "bad.txt").string() + " --out " + dir.string());
  CHECK(r.exit_code == 2);
  CHECK(r.out.find("line 1") != std::string::npos);
}

TEST_CASE("parse: explicit format file matches the defaults") {
  const fs::path dir = fresh_dir("cl_fmt");
  const RunResult r = run("parse " + (kFixtures / "export_n1.txt").string() + " --group n1 --format " +
                          (kFixtures / "format_br.json").string() + " --out " + dir.string());
  CHECK(r.exit_code == 0);
  CHECK(line_count(dir / "n1.jsonl") == 9);
}

TEST_CASE("analyze: fixture pipeline produces a report") {
  const fs::path parse_dir = fresh_dir("cl_an_parse");
  REQUIRE(run("parse " + (kFixtures / "export_n1.txt").string() + " --group n1 --out " + parse_dir.string()).exit_code == 0);
  const fs::path out = fresh_dir("cl_an_out");
  const RunResult r = run("analyze " + (parse_dir / "n1.jsonl").string() + " --roster " + (kFixtures / "roster_n1.json").string() +
                          " --out " + out.string());
  CHECK(r.exit_code == 0);
  const fs::path report_path = out / "n1" / "report.json";
  REQUIRE(fs::exists(report_path));
  const auto report = nlohmann::json::parse(slurp(report_path));
  CHECK(report.at("group") == "n1");
  CHECK(report.at("messages") == 9);
  CHECK(report.at("active_users") == 3);
  CHECK(report.at("passive_users") == 1);  // Davi never posts
  CHECK(report.at("category") == "non-political");
  CHECK(report["config"]["group_threshold_min"] == 81);
}

TEST_CASE("analyze: missing input exits 2") {
  CHECK(run("analyze /nonexistent/canonical.jsonl").exit_code == 2);
}

TEST_CASE("analyze: empty canonical input yields an empty-marked report, exit 0") {
  const fs::path dir = fresh_dir("cl_an_empty");
  std::ofstream(dir / "ghost.jsonl").close();
  const RunResult r = run("analyze " + (dir / "ghost.jsonl").string() + " --out " + (dir / "out").string());
  CHECK(r.exit_code == 0);
  const auto report = nlohmann::json::parse(slurp(dir / "out" / "ghost" / "report.json"));
  CHECK(report.at("empty") == true);
  CHECK(report.at("messages") == 0);
}

TEST_CASE("analyze: repeat runs are byte-identical") {
  const fs::path parse_dir = fresh_dir("cl_det_parse");
  REQUIRE(run("parse " + (kFixtures / "export_n1.txt").string() + " --group n1 --out " + parse_dir.string()).exit_code == 0);
  const fs::path out1 = fresh_dir("cl_det_1");
  const fs::path out2 = fresh_dir("cl_det_2");
  REQUIRE(run("analyze " + (parse_dir / "n1.jsonl").string() + " --out " + out1.string()).exit_code == 0);
  REQUIRE(run("analyze " + (parse_dir / "n1.jsonl").string() + " --out " + out2.string()).exit_code == 0);
  std::size_t compared = 0;
  for (const auto& entry : fs::recursive_directory_iterator(out1)) {
    if (!entry.is_regular_file()) continue;
    const fs::path rel = fs::relative(entry.path(), out1);
    CHECK_MESSAGE(slurp(entry.path()) == slurp(out2 / rel), rel.string());
    ++compared;
  }
  CHECK(compared >= 16);
}

TEST_CASE("analyze: auto threshold is recorded in the report") {
  const fs::path parse_dir = fresh_dir("cl_auto_parse");
  REQUIRE(run("parse " + (kFixtures / "export_n1.txt").string() + " --group n1 --out " + parse_dir.string()).exit_code == 0);
  const fs::path out = fresh_dir("cl_auto_out");
  const RunResult r =
      run("analyze " + (parse_dir / "n1.jsonl").string() + " --group-threshold auto --out " + out.string());
  CHECK(r.exit_code == 0);
  const auto report = nlohmann::json::parse(slurp(out / "n1" / "report.json"));
  CHECK(report["config"]["group_threshold_mode"] == "auto");
  CHECK(report["config"]["elbow_threshold_min"] == report["config"]["group_threshold_min"]);
}

TEST_CASE("parse: format config resolves from the environment variable") {
  const fs::path dir = fresh_dir("cl_env");
  const fs::path out_file = fs::temp_directory_path() / "chatload_cli_stdout.txt";
  const std::string cmd = "CHATLOAD_FORMAT=" + (kFixtures / "format_br.json").string() + " " + kCli + " parse " +
                          (kFixtures / "export_n1.txt").string() + " --group n1 --out " + dir.string() + " > " +
                          out_file.string() + " 2>&1";
  CHECK(WEXITSTATUS(std::system(cmd.c_str())) == 0);
  CHECK(line_count(dir / "n1.jsonl") == 9);

  const std::string bad = "CHATLOAD_FORMAT=/nonexistent/fmt.json " + kCli + " parse " +
                          (kFixtures / "export_n1.txt").string() + " --out " + dir.string() + " > " + out_file.string() +
                          " 2>&1";
  CHECK(WEXITSTATUS(std::system(bad.c_str())) == 2);
}

TEST_CASE("parse: tz offset flag shifts timestamps") {
  const fs::path dir = fresh_dir("cl_tz");
  REQUIRE(run("parse " + (kFixtures / "export_n1.txt").string() + " --group n1 --out " + dir.string()).exit_code == 0);
  REQUIRE(run("parse " + (kFixtures / "export_n1.txt").string() + " --group shifted --tz-offset -180 --out " + dir.string())
              .exit_code == 0);
  const auto base = nlohmann::json::parse(slurp(dir / "n1.jsonl").substr(0, slurp(dir / "n1.jsonl").find('\n')));
  const auto shifted = nlohmann::json::parse(slurp(dir / "shifted.jsonl").substr(0, slurp(dir / "shifted.jsonl").find('\n')));
  CHECK(shifted.at("ts_min").get<long long>() - base.at("ts_min").get<long long>() == 180);
}

TEST_CASE("analyze: auto-mean applies one averaged elbow to all groups") {
  const fs::path dir = fresh_dir("cl_automean");
  const std::string params = (kFixtures / "gen_params_small.json").string();
  REQUIRE(run("generate --params " + params + " --out " + (dir / "a.jsonl").string()).exit_code == 0);
  REQUIRE(run("generate --params " + params + " --seed 11 --out " + (dir / "b.jsonl").string()).exit_code == 0);
  // second file needs its own group key: rewrite it
  std::string b = slurp(dir / "b.jsonl");
  std::string rewritten;
  std::istringstream lines(b);
  for (std::string line; std::getline(lines, line);) {
    auto j = nlohmann::json::parse(line);
    j["group"] = "syn2";
    rewritten += j.dump() + "\n";
  }
  std::ofstream(dir / "b.jsonl", std::ios::binary) << rewritten;

  const RunResult r = run("analyze " + (dir / "a.jsonl").string() + " " + (dir / "b.jsonl").string() +
                          " --group-threshold auto-mean --out " + (dir / "out").string());
  CHECK(r.exit_code == 0);
  const auto ra = nlohmann::json::parse(slurp(dir / "out" / "syn" / "report.json"));
  const auto rb = nlohmann::json::parse(slurp(dir / "out" / "syn2" / "report.json"));
  CHECK(ra["config"]["group_threshold_mode"] == "auto-mean");
  CHECK(ra["config"]["group_threshold_min"] == rb["config"]["group_threshold_min"]);  // one shared value
  CHECK(ra["config"].contains("elbow_threshold_min"));
}

TEST_CASE("analyze: bogus threshold value exits 2") {
  const fs::path dir = fresh_dir("cl_bogus");
  std::ofstream(dir / "x.jsonl").close();
  CHECK(run("analyze " + (dir / "x.jsonl").string() + " --group-threshold soon").exit_code == 2);
}

TEST_CASE("generate: seeded runs are reproducible, seed override changes output") {
  const fs::path dir = fresh_dir("cl_gen");
  const std::string params = (kFixtures / "gen_params_small.json").string();
  REQUIRE(run("generate --params " + params + " --out " + (dir / "a.jsonl").string()).exit_code == 0);
  REQUIRE(run("generate --params " + params + " --out " + (dir / "b.jsonl").string()).exit_code == 0);
  CHECK(slurp(dir / "a.jsonl") == slurp(dir / "b.jsonl"));
  CHECK(line_count(dir / "a.jsonl") > 0);
  REQUIRE(run("generate --params " + params + " --seed 99 --out " + (dir / "c.jsonl").string()).exit_code == 0);
  CHECK(slurp(dir / "c.jsonl") != slurp(dir / "a.jsonl"));
}

TEST_CASE("generate: invalid params exit 2") {
  const fs::path dir = fresh_dir("cl_gen_bad");
  std::ofstream(dir / "bad.json") << R"({"n_users": 5, "on": {"family": "weibull"}})";
  CHECK(run("generate --params " + (dir / "bad.json").string()).exit_code == 2);
  CHECK(run("generate --params /nonexistent.json").exit_code == 2);
}

TEST_CASE("generated traces re-ingest through analyze") {
  const fs::path dir = fresh_dir("cl_gen_an");
  const std::string params = (kFixtures / "gen_params_small.json").string();
  REQUIRE(run("generate --params " + params + " --out " + (dir / "syn.jsonl").string()).exit_code == 0);
  const RunResult r = run("analyze " + (dir / "syn.jsonl").string() + " --out " + (dir / "out").string());
  CHECK(r.exit_code == 0);
  const auto report = nlohmann::json::parse(slurp(dir / "out" / "syn" / "report.json"));
  CHECK(report.at("messages").get<std::uint64_t>() == line_count(dir / "syn.jsonl"));
}

TEST_CASE("fit: prints a zipf line per group") {
  const fs::path dir = fresh_dir("cl_fit");
  const std::string params = (kFixtures / "gen_params_small.json").string();
  REQUIRE(run("generate --params " + params + " --out " + (dir / "syn.jsonl").string()).exit_code == 0);
  const RunResult r = run("fit " + (dir / "syn.jsonl").string() + " --out " + dir.string());
  CHECK(r.exit_code == 0);
  const auto j = nlohmann::json::parse(r.out.substr(0, r.out.find('\n')));
  CHECK(j.contains("zipf"));
  CHECK(fs::exists(dir / "syn_rank_frequency.csv"));
}

TEST_CASE("roundtrip: prints a discrepancy report") {
  const std::string params = (kFixtures / "gen_params_small.json").string();
  const RunResult r = run("roundtrip --params " + params + " --user-threshold 15");
  CHECK(r.exit_code == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j.contains("session_count_rel_err"));
  CHECK(j.contains("fitted_zipf_slope"));
  CHECK(j.at("messages").get<std::uint64_t>() > 0);
}
