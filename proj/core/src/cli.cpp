#include "cfl/cli.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <sstream>

#include "cfl/engine.hpp"
#include "cfl/metrics.hpp"
#include "cfl/scenario.hpp"

namespace cfl {

namespace {

constexpr int kOk = 0;
constexpr int kInvalid = 1;
constexpr int kRuntime = 2;

std::string policy_list() {
  std::string s;
  for (auto p : all_policies()) {
    if (!s.empty()) s += ", ";
    s += to_string(p);
  }
  return s;
}

std::vector<std::string> split_list(const std::vector<std::string>& items) {
  std::vector<std::string> out;
  for (const auto& item : items) {
    std::stringstream ss(item);
    std::string part;
    while (std::getline(ss, part, ',')) {
      if (!part.empty()) out.push_back(part);
    }
  }
  return out;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write " + path.string());
  f << text;
  if (!f) throw Error("cannot write " + path.string());
}

}  // namespace

int execute_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Cooperative federated learning simulator", "cfl_sim"};
  app.require_subcommand(1);

  std::string scenario_path;
  std::string policy_name;
  std::vector<std::string> policy_names;
  std::uint64_t seed = 0;
  std::string out_dir;

  auto* run = app.add_subcommand("run", "Run one policy on a scenario");
  run->add_option("--scenario", scenario_path, "Scenario JSON file")->required();
  run->add_option("--policy", policy_name, "Policy name")->required();
  run->add_option("--seed", seed, "Root seed")->required();
  run->add_option("--out", out_dir, "Output directory")->required();

  auto* compare = app.add_subcommand("compare", "Run several policies on the same seed");
  compare->add_option("--scenario", scenario_path, "Scenario JSON file")->required();
  compare->add_option("--policies", policy_names, "Comma separated policy names")
      ->required()
      ->expected(1, -1);
  compare->add_option("--seed", seed, "Root seed")->required();
  compare->add_option("--out", out_dir, "Output directory")->required();

  auto* validate = app.add_subcommand("validate", "Check a scenario file");
  validate->add_option("--scenario", scenario_path, "Scenario JSON file")->required();

  std::vector<std::string> argv(args.rbegin(), args.rend());
  try {
    app.parse(argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kInvalid;
  }

  std::vector<Policy> policies;
  if (run->parsed()) policy_names = {policy_name};
  for (const auto& name : split_list(policy_names)) {
    auto p = parse_policy(name);
    if (!p) {
      err << "error: unknown policy '" << name << "'; valid policies: " << policy_list() << "\n";
      return kInvalid;
    }
    policies.push_back(*p);
  }

  ScenarioConfig config;
  try {
    config = load_scenario(scenario_path);
  } catch (const ConfigError& e) {
    err << "error: " << scenario_path << ": " << e.what() << "\n";
    return kInvalid;
  }
  if (validate->parsed()) {
    out << "ok: " << scenario_path << "\n";
    return kOk;
  }

  try {
    std::vector<RunReport> reports;
    for (Policy p : policies) {
      reports.push_back(run_scenario(config, p, seed));
      for (const auto& path : write_metrics(reports.back(), out_dir)) out << path.string() << "\n";
    }
    if (compare->parsed()) {
      const auto path = std::filesystem::path(out_dir) / ("summary_" + std::to_string(seed) + ".csv");
      write_file(path, summary_csv(reports));
      out << path.string() << "\n";
    }
    for (const auto& r : reports) {
      if (!r.valid) {
        err << "error: " << to_string(r.policy) << ": " << r.error << "\n";
        return kRuntime;
      }
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kRuntime;
  }
  return kOk;
}

}  // namespace cfl
