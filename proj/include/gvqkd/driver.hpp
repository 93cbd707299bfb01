// Batch driver behind the gvqkd command: ensembles, sweeps, frontier runs
// and their on-disk outputs.
#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "gvqkd/adversary.hpp"
#include "gvqkd/analysis.hpp"
#include "gvqkd/protocol.hpp"
#include "gvqkd/runspec.hpp"

namespace gvqkd {

inline constexpr int kExitClean = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitCompromised = 2;

/// Environment variable overriding the output directory of a config file.
inline constexpr const char* kOutDirEnv = "GVQKD_OUT_DIR";

/// Seed of session `index` in an ensemble.
std::uint64_t session_seed(std::uint64_t base, std::int64_t index);

/// Builds the attack named in `spec` for one session. Null for "none".
std::unique_ptr<AttackStrategy> make_attack(const RunSpec& spec, const SessionConfig& config);

/// Runs fn(0..n-1) on `jobs` threads. Rethrows the exception of the lowest
/// failing index.
void parallel_for(std::int64_t n, int jobs, const std::function<void(std::int64_t)>& fn);

using SessionSink = std::function<void(std::int64_t index, const SessionResult& result)>;

/// Runs spec.sessions sessions with seeds session_seed(seed, i). Reports
/// come back in index order; `sink` sees every full result (possibly from a
/// worker thread).
std::vector<RunReport> run_ensemble(const RunSpec& spec, const SessionSink& sink = {});

struct SweepRow {
  std::string axis;
  double value = 0.0;
  EnsembleStats stats;
  std::int64_t timing_anomalies = 0;
  double sifted_fraction = 0.0;
  Verdict verdict = Verdict::Clean;
};

/// One row per value of spec.sweep_axis (tau, window or epsilon).
std::vector<SweepRow> run_sweep(const RunSpec& spec);
std::string sweep_csv_row(const RunSpec& spec, const SweepRow& row);

struct FrontierRun {
  std::vector<FrontierSample> causal;
  FrontierSample witness;          // superluminal, random schedule
  FrontierSample known_schedule;   // dummy attack, needs the schedule
  FrontierResult result;           // over causal samples plus the witness
};

/// spec.samples sampled causal attacks on GV with random times, each over
/// spec.sample_bits bits, plus the two reference attacks.
FrontierRun run_frontier(const RunSpec& spec);

/// Subcommands. Each returns an exit code and reports errors on `err`.
int cmd_run(const RunSpec& spec, std::ostream& out, std::ostream& err);
int cmd_sweep(const RunSpec& spec, std::ostream& out, std::ostream& err);
int cmd_report(const std::vector<std::filesystem::path>& paths, std::ostream& out, std::ostream& err);

}  // namespace gvqkd
