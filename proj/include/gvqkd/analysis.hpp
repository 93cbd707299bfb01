// Statistics over sessions: Eve's information, timing anomalies, ensemble
// aggregation and the information/disturbance frontier.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "gvqkd/protocol.hpp"
#include "gvqkd/transcript.hpp"

namespace gvqkd {

/// Eve's "no guess" symbol.
inline constexpr int kAbstain = -1;

/// Plug-in estimate of I(A;E) in bits from the empirical joint distribution.
/// Guesses take values {0, 1, kAbstain}. Throws on empty or unequal input.
double mutual_information(std::span<const int> alice_bits, std::span<const int> eve_guesses);

double binary_entropy(double p);

struct TimingAnomaly {
  std::int64_t bit = -1;
  int wavepacket = 0;
  double observed = 0.0;
  double nominal = 0.0;
  double deviation = 0.0;
};

/// Flags every arrival with |observed - nominal| > epsilon.
std::vector<TimingAnomaly> timing_anomaly_scan(const Transcript& transcript, const SessionConfig& config);

struct MeanError {
  double mean = 0.0;
  double stderr_ = 0.0;
};

MeanError mean_and_stderr(std::span<const double> xs);

struct EnsembleStats {
  std::int64_t n_sessions = 0;
  MeanError qber;
  MeanError detection_probability;
  MeanError mi_bits;
  double anomaly_rate = 0.0;  // anomalous arrivals per bit
  std::int64_t compromised_sessions = 0;
};

EnsembleStats aggregate(std::span<const RunReport> reports);

struct FrontierSample {
  std::int64_t index = 0;
  double detection = 0.0;
  double mi_bits = 0.0;
  std::int64_t violations = 0;
  std::string label;  // attack name / knowledge requirement
};

struct FrontierThresholds {
  double detection = 0.01;  // eps_D
  double mi_bits = 0.05;    // eps_I
};

struct FrontierResult {
  /// Upper envelope: max MI among samples with detection <= x, at each
  /// distinct detection value. Non-decreasing in both coordinates.
  std::vector<std::pair<double, double>> envelope;
  /// Samples with detection < eps_D and MI > eps_I.
  std::vector<FrontierSample> counterexamples;
  /// True when every counterexample carries at least one causality violation.
  bool counterexamples_explained = true;
};

/// Requires at least 100 samples.
FrontierResult frontier(std::span<const FrontierSample> samples, FrontierThresholds thresholds = {});

// CSV and summary output. Column sets are fixed.

inline constexpr const char* kSessionCsvHeader =
    "session,seed,protocol,attack,schedule,n_bits,qber,test_qber,detection_probability,eve_mi_bits,"
    "timing_anomalies,inconclusive,sifted_key_length,sifted_fraction,access_window_ratio,"
    "causality_violations,verdict";
inline constexpr const char* kFrontierCsvHeader =
    "sample,detection_probability,eve_mi_bits,causality_violations,label";
inline constexpr const char* kSweepCsvHeader =
    "axis,value,protocol,attack,qber,detection_probability,eve_mi_bits,timing_anomalies,"
    "sifted_fraction,verdict";

std::string session_csv_row(std::int64_t session, const SessionConfig& config, const std::string& attack,
                            const RunReport& report);
std::string frontier_csv_row(const FrontierSample& s);

}  // namespace gvqkd
