// Eavesdropping strategies. Eve acts only through EveContext, which places
// every operation at a spacetime event on her station's worldline and logs
// it with the event its information came from.
#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "gvqkd/protocol.hpp"
#include "gvqkd/quantum.hpp"
#include "gvqkd/spacetime.hpp"

namespace gvqkd {

enum class Knowledge : std::uint8_t { None = 0, Schedule = 1, InterferometerChoice = 2 };

constexpr Knowledge operator|(Knowledge a, Knowledge b) {
  return static_cast<Knowledge>(static_cast<std::uint8_t>(a) | static_cast<std::uint8_t>(b));
}
constexpr bool has(Knowledge set, Knowledge k) {
  return (static_cast<std::uint8_t>(set) & static_cast<std::uint8_t>(k)) != 0;
}

/// Raised when a strategy needs the send times but the schedule is random.
class UnknownScheduleError : public std::invalid_argument {
 public:
  UnknownScheduleError() : std::invalid_argument("UNKNOWN_SCHEDULE: attack requires known sending times") {}
};

/// Raised when a strategy touches information it did not declare.
class CapabilityError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

enum class Register : std::uint8_t { Alice, Dummy };

/// Per-bit view of the channel as Eve sees it from her station.
class EveContext {
 public:
  struct Setup {
    const SessionConfig* config = nullptr;
    std::int64_t bit_index = 0;
    ScheduleEntry entry;
    Point2 station;
    Knowledge granted = Knowledge::None;
    bool superluminal = false;
    PhotonRegister* alice = nullptr;
    std::optional<ClassicalMessage> announcement;
    std::vector<TranscriptEntry>* log = nullptr;
    Rng* rng = nullptr;
  };

  explicit EveContext(Setup setup);

  std::int64_t bit_index() const { return s_.bit_index; }
  ProtocolKind kind() const { return s_.config->kind; }
  int tau() const { return s_.config->tau; }
  double distance() const { return s_.config->distance; }
  SchedulePolicy schedule_policy() const { return s_.config->schedule; }
  std::pair<ModeLabel, ModeLabel> channel_modes(int interferometer) const;
  Rng& rng() { return *s_.rng; }

  /// Requires Knowledge::Schedule. Empty under RandomTimes.
  std::optional<double> send_time() const;

  /// Swaps a passing channel mode into a fresh memory mode at the moment it
  /// passes the station. Returns the memory label.
  ModeLabel capture(const ModeLabel& channel_mode);
  /// Eve's own photon, expressed over memory (ancilla) modes.
  void prepare_dummy(const PureState& state);
  /// Unitary over memory modes of a register.
  void apply(Register r, const UnitaryOp& u);
  /// Projective measurement over memory modes; the complement (channel
  /// modes and vacuum) is outcome projectors.size().
  std::size_t measure(Register r, const std::vector<std::vector<ModeLabel>>& projectors);
  /// Sends a memory mode onward as `channel_mode`, no earlier than the mode's
  /// nominal slot and no earlier than the memory was last touched.
  void release(Register r, const ModeLabel& memory, const ModeLabel& channel_mode, double hold = 0.0);

  /// The bit's announcement as received at the station, causally.
  std::optional<std::string> read_announcement();
  /// Test-only: the announcement at the moment the first wavepacket passes.
  std::optional<std::string> peek_announcement_superluminal();

  void guess(int bit) { guess_ = bit; }

  std::optional<int> eve_guess() const { return guess_; }
  const std::optional<PhotonRegister>& dummy() const { return dummy_; }
  double station_excess() const { return excess_; }

 private:
  PhotonRegister& reg(Register r);
  double nominal_pass(const ModeLabel& channel_mode) const;
  /// Time of an operation on `modes`: no earlier than Eve's previous
  /// operation or the modes' last use. Marks the modes as touched.
  double op_time(Register r, const std::vector<ModeLabel>& modes, std::optional<Event>& cause);
  /// Holds `t` back to the latest information handed to the strategy.
  void after_information(double& t, std::optional<Event>& cause) const;
  void learn(double t);
  void log(EntryKind kind, double t, const std::optional<Event>& cause, std::string payload, int wp = 0);
  double first_pass() const;

  Setup s_;
  double upstream_ = 0.0;
  double excess_ = 0.0;
  double eve_time_;
  int next_memory_ = 0;
  std::map<ModeLabel, double> touched_;
  std::map<ModeLabel, double> dummy_touched_;
  std::optional<PhotonRegister> dummy_;
  std::optional<Event> schedule_learned_at_;
  std::optional<Event> informed_;
  bool schedule_known_ = false;
  std::optional<int> guess_;
};

class AttackStrategy {
 public:
  AttackStrategy(std::string name, Knowledge required, Point2 station, bool superluminal = false);
  virtual ~AttackStrategy() = default;

  const std::string& name() const { return name_; }
  Knowledge required_knowledge() const { return required_; }
  Point2 station() const { return station_; }
  bool superluminal() const { return superluminal_; }

  /// Called once per bit while the photon is in flight.
  virtual void on_bit(EveContext& ctx) = 0;

 private:
  std::string name_;
  Knowledge required_;
  Point2 station_;
  bool superluminal_;
};

/// Default station: the midpoint of the line.
Point2 default_station(const SessionConfig& config);

/// Measures the first wavepacket's occupancy and forwards a reconstruction
/// (cos a |A> + e^{i phi} sin a |B>). For BB84 it measures the whole qubit
/// in the rectilinear basis and resends the eigenstate.
std::unique_ptr<AttackStrategy> intercept_first_only(const SessionConfig& config,
                                                     double resend_angle = 0.0,
                                                     double resend_phase = 0.0,
                                                     std::optional<Point2> station = {});

/// BB84 intercept-resend in a uniformly random basis.
std::unique_ptr<AttackStrategy> intercept_resend(const SessionConfig& config,
                                                 std::optional<Point2> station = {});

/// Dummy-particle attack on GV. Throws UnknownScheduleError unless
/// KnownTimes. `jitter` shifts the dummy's departures (bins, >= 0).
std::unique_ptr<AttackStrategy> dummy_particle(const SessionConfig& config, double jitter = 0.0,
                                               std::optional<Point2> station = {});

struct GuessPolicy {
  bool uniform = true;
  int fixed = 1;
};

std::unique_ptr<AttackStrategy> dummy_particle_gv2(const SessionConfig& config, GuessPolicy guess,
                                                   std::optional<Point2> station = {});

/// Both separated paths brought to `center` by mirrors, measured jointly in
/// the coding basis and re-emitted toward Bob.
std::unique_ptr<AttackStrategy> mirror_team(const SessionConfig& config, Point2 center);

/// Lateness every arrival acquires through `center`.
double detour_excess(const SessionConfig& config, Point2 center);

/// Random causal attack family: local unitaries coupling each passing
/// wavepacket to two memory modes, with on-time forwarding and a final
/// measurement of the memory. Not exhaustive over causal attacks.
struct SamplerParams {
  double angle_scale = 1.5707963267948966;  // angles drawn uniformly in [0, scale)
  bool identity = false;
};

struct SampledAttackAngles {
  std::vector<double> first;   // 6 angles, first wavepacket + memory
  std::vector<double> second;  // 6 angles, second wavepacket + memory
  std::vector<double> readout; // 2 angles, memory readout basis
  double station_x = 0.0;
};

std::unique_ptr<AttackStrategy> causal_attack_sampler(const SessionConfig& config,
                                                      const SamplerParams& params, Rng& rng);
std::unique_ptr<AttackStrategy> sampled_attack(const SessionConfig& config,
                                               const SampledAttackAngles& angles);

/// Dummy attack that learns each send time from the announcement before the
/// announcement could have reached it. Flagged superluminal.
std::unique_ptr<AttackStrategy> superluminal_witness(const SessionConfig& config,
                                                     std::optional<Point2> station = {});

/// Unitary on three modes built from six angles (three rotations with phases).
UnitaryOp three_mode_unitary(const ModeLabel& m0, const ModeLabel& m1, const ModeLabel& m2,
                             const std::vector<double>& angles);

}  // namespace gvqkd
