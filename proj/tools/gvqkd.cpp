// gvqkd: run, sweep and report orthogonal-state QKD simulations.
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "gvqkd/driver.hpp"
#include "gvqkd/runspec.hpp"

namespace {

using gvqkd::RunSpec;

// Flag name -> config key. Flags override the config file.
const std::vector<std::pair<std::string, std::string>> kSessionFlags{
    {"--protocol", "protocol"},        {"--distance", "distance"},       {"--tau", "tau"},
    {"--schedule", "schedule"},        {"--window", "window"},           {"--announce", "announce"},
    {"--paths", "paths"},              {"--bits", "bits"},               {"--test-fraction", "test_fraction"},
    {"--epsilon", "epsilon"},          {"--seed", "seed"},               {"--attack", "attack"},
    {"--center", "attack.center"},     {"--guess", "attack.guess"},      {"--eve-x", "attack.eve_x"},
    {"--jitter", "attack.jitter"},     {"--resend-angle", "attack.resend_angle"},
    {"--resend-phase", "attack.resend_phase"}, {"--angle-scale", "attack.angle_scale"},
    {"--sessions", "ensemble.sessions"}, {"--jobs", "ensemble.jobs"}, {"--out", "output.dir"}};

const std::vector<std::pair<std::string, std::string>> kSweepFlags{
    {"--axis", "sweep.axis"},         {"--values", "sweep.values"},   {"--samples", "sweep.samples"},
    {"--sample-bits", "sweep.sample_bits"}, {"--eps-d", "frontier.eps_d"}, {"--eps-i", "frontier.eps_i"}};

struct FlagSet {
  std::string config_path;
  std::map<std::string, std::string> values;  // key -> text
  std::vector<std::pair<std::string, CLI::Option*>> options;
};

void add_flags(CLI::App* app, FlagSet& flags, const std::vector<std::pair<std::string, std::string>>& table) {
  for (const auto& [flag, key] : table)
    flags.options.emplace_back(key, app->add_option(flag, flags.values[key], "sets " + key));
}

// Resolution order: defaults, config file, environment, flags.
RunSpec resolve(const FlagSet& flags) {
  RunSpec spec;
  spec.session.tau = -1;  // unset marker, resolved below
  if (!flags.config_path.empty()) {
    std::ifstream in(flags.config_path);
    if (!in) throw gvqkd::SpecError("config", "cannot read " + flags.config_path);
    std::stringstream text;
    text << in.rdbuf();
    spec = gvqkd::parse_config_text(text.str(), spec);
  }
  if (const char* env = std::getenv(gvqkd::kOutDirEnv); env && *env) gvqkd::set_key(spec, "output.dir", env);
  for (const auto& [key, opt] : flags.options)
    if (opt->count() > 0) gvqkd::set_key(spec, key, flags.values.at(key));
  if (spec.session.tau < 0) spec.session.tau = spec.session.layout == gvqkd::PathLayout::Separated ? 0 : 4;
  return spec;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Orthogonal-state QKD simulator with a spacetime causality model"};
  app.require_subcommand(1);

  FlagSet run_flags;
  auto* run = app.add_subcommand("run", "run one session or an ensemble");
  run->add_option("--config", run_flags.config_path, "key = value configuration file");
  add_flags(run, run_flags, kSessionFlags);

  FlagSet sweep_flags;
  auto* sweep = app.add_subcommand("sweep", "sweep tau, window, epsilon, or sample causal attacks");
  sweep->add_option("--config", sweep_flags.config_path, "key = value configuration file");
  add_flags(sweep, sweep_flags, kSessionFlags);
  add_flags(sweep, sweep_flags, kSweepFlags);

  std::vector<std::string> report_paths;
  auto* report = app.add_subcommand("report", "tabulate run summaries");
  report->add_option("paths", report_paths, "run directories or summary.json files")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : gvqkd::kExitError;
  }

  try {
    if (*run) return gvqkd::cmd_run(resolve(run_flags), std::cout, std::cerr);
    if (*sweep) return gvqkd::cmd_sweep(resolve(sweep_flags), std::cout, std::cerr);
    std::vector<std::filesystem::path> paths(report_paths.begin(), report_paths.end());
    return gvqkd::cmd_report(paths, std::cout, std::cerr);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return gvqkd::kExitError;
  }
}
