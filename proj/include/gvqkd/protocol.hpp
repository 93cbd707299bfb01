// Alice and Bob for GV, GV2 and BB84: schedules, emission, announcements,
// Bob's interferometer, sifting and the session orchestrator.
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gvqkd/quantum.hpp"
#include "gvqkd/spacetime.hpp"
#include "gvqkd/transcript.hpp"

namespace gvqkd {

class AttackStrategy;

enum class ProtocolKind : std::uint8_t { GV, GV2, BB84 };
enum class SchedulePolicy : std::uint8_t { KnownTimes, RandomTimes };
enum class AnnouncementPolicy : std::uint8_t { AfterFirstArrival, AfterBothArrivals };
enum class PathLayout : std::uint8_t { Colinear, Separated };
enum class Basis : std::uint8_t { Rectilinear, Diagonal };
enum class Verdict : std::uint8_t { Clean, Compromised };

std::string_view to_string(ProtocolKind k);
std::string_view to_string(SchedulePolicy p);
std::string_view to_string(AnnouncementPolicy p);
std::string_view to_string(PathLayout p);
std::string_view to_string(Basis b);
std::string_view to_string(Verdict v);

struct SessionConfig {
  ProtocolKind kind = ProtocolKind::GV;
  double distance = 10.0;  // light-bins
  int tau = 4;             // bins
  SchedulePolicy schedule = SchedulePolicy::RandomTimes;
  int window = 0;          // RandomTimes slot width; 0 selects 64 * max(tau, 1)
  AnnouncementPolicy announcement = AnnouncementPolicy::AfterFirstArrival;
  PathLayout layout = PathLayout::Colinear;
  std::int64_t n_bits = 1000;
  double test_fraction = 0.5;
  double epsilon = 0.05;   // timing tolerance, bins
  std::uint64_t seed = 1;

  int effective_window() const;
  /// Spacing guard between consecutive bits: 2 * (tau + epsilon).
  double guard_gap() const;
  GeometryConfig geometry() const;
  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
};

struct ScheduleEntry {
  double send_time = 0.0;
  int interferometer = 1;  // GV2 only
  Basis basis = Basis::Rectilinear;  // BB84 only
};

using Schedule = std::vector<ScheduleEntry>;

/// Send times plus the per-bit secret choices (interferometer, basis).
Schedule make_schedule(const SessionConfig& config, Rng& rng);

/// First-wavepacket and second-wavepacket channel modes for an interferometer.
std::pair<ModeLabel, ModeLabel> channel_modes(const SessionConfig& config, int interferometer);
/// 1 for first-wavepacket paths (A, A2), 2 for (B, B2); BB84 uses 1 only.
int wavepacket_of(const SessionConfig& config, const ModeLabel& m);

/// Where and when a channel mode last left a sender, and how far its
/// arrival at Bob will deviate from the nominal time.
struct Departure {
  Event event;
  double deviation = 0.0;
};

/// One photon (Alice's or Eve's dummy) together with the routing state of
/// each of its channel modes.
struct PhotonRegister {
  PureState state = PureState::vacuum();
  std::map<ModeLabel, Departure> in_flight;
};

struct Emission {
  ModeLabel mode;
  int wavepacket;
  Event event;
};

struct AliceEmission {
  PhotonRegister photon;
  std::vector<Emission> emissions;
};

/// Alice's photon for one bit. The second wavepacket leaves tau bins after
/// the first; for BB84 both polarization modes leave together.
AliceEmission alice_emit(int bit, const SessionConfig& config, const ScheduleEntry& entry);

struct ClassicalMessage {
  Event release;
  std::string payload;
};

/// Per-bit announcement. Returns nothing for GV under KnownTimes, whose
/// schedule is published before the session. For BB84 the release is after
/// Bob's detection confirmation returns to Alice.
std::optional<ClassicalMessage> alice_announce(const SessionConfig& config, const ScheduleEntry& entry);
/// Message published before the session under KnownTimes.
std::optional<ClassicalMessage> schedule_publication(const SessionConfig& config);

struct Arrival {
  ModeLabel mode;
  int wavepacket = 0;
  Event at;
  double nominal = 0.0;
  double deviation = 0.0;
  Event cause;
};

struct BobResult {
  std::optional<int> bit;  // nullopt = inconclusive
  std::vector<double> arrival_times;
  Basis basis = Basis::Rectilinear;
};

/// Bob's interferometer or polarization analyzer. `announced` is the
/// interferometer number for GV2; `bob_basis` is used for BB84 only.
BobResult bob_receive_and_measure(const PureState& incoming, const std::vector<Arrival>& arrivals,
                                  int announced, Basis bob_basis, const SessionConfig& config,
                                  Rng& rng);

struct BitRecord {
  int alice_bit = 0;
  ScheduleEntry entry;
  Basis bob_basis = Basis::Rectilinear;
  std::optional<int> bob_bit;
  std::optional<int> eve_guess;
  bool sifted = false;
  bool timing_anomaly = false;
};

struct SiftResult {
  std::vector<int> alice_key;
  std::vector<int> bob_key;
  std::vector<std::size_t> test_positions;  // indices into the session's bits
  std::size_t test_errors = 0;
  double test_qber = 0.0;
  std::size_t timing_anomalies = 0;
  std::size_t inconclusive = 0;
  Verdict verdict = Verdict::Clean;
};

SiftResult sift_and_test(const std::vector<BitRecord>& bits, const Transcript& transcript,
                         const SessionConfig& config, Rng& rng);

struct RunReport {
  std::int64_t n_bits = 0;
  double qber = 0.0;       // over every sifted bit
  double test_qber = 0.0;  // over the disclosed sample
  double eve_mutual_information_bits = 0.0;
  double detection_probability = 0.0;
  std::int64_t timing_anomaly_count = 0;
  std::int64_t inconclusive_count = 0;
  std::int64_t sifted_key_length = 0;
  double sifted_fraction = 0.0;
  double access_window_ratio = 0.0;
  std::int64_t causality_violations = 0;
  Verdict verdict = Verdict::Clean;
};

struct SessionResult {
  Transcript transcript;
  std::vector<BitRecord> bits;
  SiftResult sift;
  RunReport report;
  std::vector<Violation> violations;
};

class CausalityError : public std::runtime_error {
 public:
  explicit CausalityError(std::vector<Violation> v);
  const std::vector<Violation>& violations() const { return violations_; }

 private:
  std::vector<Violation> violations_;
};

/// Runs a full session. Deterministic in (config, attack parameters).
/// Throws CausalityError when an attack without the superluminal flag
/// produces a violation.
SessionResult run_session(const SessionConfig& config, AttackStrategy* attack = nullptr);

/// Independent random streams for the parties, derived from one seed.
enum class Stream : std::uint64_t { Alice = 1, Schedule, Bob, Eve, Sifting, Sampler };
Rng make_stream(std::uint64_t seed, Stream s);
std::uint64_t splitmix64(std::uint64_t x);

}  // namespace gvqkd
