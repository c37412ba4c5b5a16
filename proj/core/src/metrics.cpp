#include "cfl/metrics.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cfl/errors.hpp"

namespace cfl {

std::string format_real(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", value);
  return buf;
}

double round_to_export(double value) { return std::strtod(format_real(value).c_str(), nullptr); }

std::string metrics_csv(const RunReport& report) {
  std::ostringstream out;
  out << kMetricsHeader << '\n';
  const std::string policy(to_string(report.policy));
  for (const auto& m : report.rounds) {
    out << m.round << ',' << policy << ',' << format_real(m.global_loss) << ','
        << format_real(m.global_accuracy) << ',' << format_real(m.cost.comp_energy_j) << ','
        << format_real(m.cost.comm_energy_j) << ',' << format_real(m.cum_energy_j) << ','
        << format_real(m.cost.round_delay_s) << ',' << format_real(m.cum_delay_s) << ','
        << m.cost.bytes_transmitted << ',' << m.aggregation_server << '\n';
  }
  return out.str();
}

std::string report_json(const RunReport& report) {
  using json = nlohmann::json;
  json rounds = json::array();
  for (const auto& m : report.rounds) {
    rounds.push_back({{"round", m.round},
                      {"global_loss", m.global_loss},
                      {"global_accuracy", m.global_accuracy},
                      {"comp_energy_j", m.cost.comp_energy_j},
                      {"comm_energy_j", m.cost.comm_energy_j},
                      {"round_delay_s", m.cost.round_delay_s},
                      {"bytes_tx", m.cost.bytes_transmitted},
                      {"active_participants", m.active_participants},
                      {"agg_server", m.aggregation_server},
                      {"aggregation_delay_s", m.aggregation_delay_s},
                      {"cum_energy_j", m.cum_energy_j},
                      {"cum_delay_s", m.cum_delay_s}});
  }
  json targets = json::array();
  for (const auto& t : report.time_to_target) {
    json entry{{"target", t.target}, {"reached", t.hit.has_value()}};
    if (t.hit) {
      entry["rounds"] = t.hit->rounds;
      entry["seconds"] = t.hit->seconds;
      entry["joules"] = t.hit->joules;
    }
    targets.push_back(std::move(entry));
  }
  json root{{"scenario_hash", report.scenario_hash},
            {"policy", std::string(to_string(report.policy))},
            {"seed", report.seed},
            {"valid", report.valid},
            {"error", report.error},
            {"initial", {{"global_loss", report.initial.loss}, {"global_accuracy", report.initial.accuracy}}},
            {"rounds", std::move(rounds)},
            {"cumulative", {{"energy_j", report.cum_energy_j}, {"delay_s", report.cum_delay_s}}},
            {"time_to_target", std::move(targets)}};
  return root.dump(2) + "\n";
}

namespace {

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << content;
  if (!out) throw Error("failed writing " + path.string());
}

}  // namespace

std::vector<std::filesystem::path> write_metrics(const RunReport& report,
                                                 const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const std::string stem = std::string(to_string(report.policy)) + "_" + std::to_string(report.seed);
  const auto csv = dir / (stem + ".csv");
  const auto js = dir / (stem + ".json");
  write_file(csv, metrics_csv(report));
  write_file(js, report_json(report));
  return {csv, js};
}

std::string summary_csv(std::span<const RunReport> reports) {
  std::ostringstream out;
  out << "policy,seed,valid,rounds,final_loss,final_accuracy,cum_energy_j,cum_delay_s,bytes_tx";
  std::vector<double> targets;
  if (!reports.empty()) {
    for (const auto& t : reports.front().time_to_target) targets.push_back(t.target);
  }
  for (double t : targets) {
    const std::string tag = format_real(t);
    out << ",rounds_to_" << tag << ",delay_to_" << tag << "_s,energy_to_" << tag << "_j";
  }
  out << '\n';
  for (const auto& r : reports) {
    std::uint64_t bytes = 0;
    for (const auto& m : r.rounds) bytes += m.cost.bytes_transmitted;
    const double loss = r.rounds.empty() ? r.initial.loss : r.rounds.back().global_loss;
    const double acc = r.rounds.empty() ? r.initial.accuracy : r.rounds.back().global_accuracy;
    out << to_string(r.policy) << ',' << r.seed << ',' << (r.valid ? 1 : 0) << ',' << r.rounds.size()
        << ',' << format_real(loss) << ',' << format_real(acc) << ',' << format_real(r.cum_energy_j)
        << ',' << format_real(r.cum_delay_s) << ',' << bytes;
    for (const auto& t : r.time_to_target) {
      if (t.hit) {
        out << ',' << t.hit->rounds << ',' << format_real(t.hit->seconds) << ','
            << format_real(t.hit->joules);
      } else {
        out << ",,,";
      }
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace cfl
