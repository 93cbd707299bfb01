#include "gvqkd/adversary.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>

#include "gvqkd/analysis.hpp"

namespace gvqkd {

namespace {

constexpr double kNever = -std::numeric_limits<double>::infinity();
constexpr double kEmptyMode = 1e-15;

bool on_segment(const SessionConfig& config, Point2 p) {
  const auto g = config.geometry();
  const double lo = std::min(g.alice_x, g.bob_x);
  const double hi = std::max(g.alice_x, g.bob_x);
  return p.y == 0.0 && p.x >= lo && p.x <= hi;
}

double station_excess(const SessionConfig& config, Point2 station) {
  if (on_segment(config, station)) return 0.0;
  const auto g = config.geometry();
  const PathPolyline detour{{{g.alice_x, 0.0}, station, {g.bob_x, 0.0}}};
  return flight_time(detour, g.c_signal) - flight_time(PathPolyline::straight(g.alice_x, g.bob_x), g.c_signal);
}

UnitaryOp swap_modes(const ModeLabel& a, const ModeLabel& b) {
  MatrixC u = MatrixC::Zero(3, 3);
  u(0, 0) = 1.0;
  u(1, 2) = 1.0;
  u(2, 1) = 1.0;
  return {ModeBasis({a, b}), std::move(u)};
}

UnitaryOp two_mode_rotation(const ModeLabel& m0, const ModeLabel& m1, double theta, double phi) {
  MatrixC u = MatrixC::Identity(3, 3);
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  u(1, 1) = c;
  u(2, 1) = std::polar(s, phi);
  u(1, 2) = -std::polar(s, -phi);
  u(2, 2) = c;
  return {ModeBasis({m0, m1}), std::move(u)};
}

class LambdaStrategy final : public AttackStrategy {
 public:
  LambdaStrategy(std::string name, Knowledge k, Point2 station, bool superluminal,
                 std::function<void(EveContext&)> body)
      : AttackStrategy(std::move(name), k, station, superluminal), body_(std::move(body)) {}

  void on_bit(EveContext& ctx) override { body_(ctx); }

 private:
  std::function<void(EveContext&)> body_;
};

const ModeLabel kDummyFirst = ancilla(100);
const ModeLabel kDummySecond = ancilla(101);
const ModeLabel kSpare = ancilla(50);
const ModeLabel kMemory0 = ancilla(60);
const ModeLabel kMemory1 = ancilla(61);

// Captures Alice's photon in interferometer pairs `pairs`, measures it in the
// coding basis and returns (pair index, bit), or nullopt if no photon was found.
std::optional<std::pair<int, int>> measure_coding_basis(EveContext& ctx, const std::vector<int>& pairs) {
  std::vector<std::pair<ModeLabel, ModeLabel>> held;
  for (int k : pairs) held.emplace_back(ctx.capture(ctx.channel_modes(k).first), ModeLabel{});
  for (std::size_t i = 0; i < pairs.size(); ++i) held[i].second = ctx.capture(ctx.channel_modes(pairs[i]).second);
  std::vector<std::vector<ModeLabel>> projectors;
  for (const auto& [a, b] : held) {
    ctx.apply(Register::Alice, beam_splitter_5050(a, b, a, b));
    projectors.push_back({a});
    projectors.push_back({b});
  }
  const auto k = ctx.measure(Register::Alice, projectors);
  if (k >= projectors.size()) return std::nullopt;
  return std::pair{static_cast<int>(k / 2), static_cast<int>(k % 2)};
}

}  // namespace

// --------------------------------------------------------------- EveContext

EveContext::EveContext(Setup setup) : s_(std::move(setup)), eve_time_(kNever) {
  if (!s_.config || !s_.alice || !s_.log || !s_.rng) throw std::invalid_argument("EveContext: incomplete setup");
  const auto g = s_.config->geometry();
  upstream_ = std::hypot(s_.station.x - g.alice_x, s_.station.y) / g.c_signal;
  excess_ = gvqkd::station_excess(*s_.config, s_.station);
  schedule_known_ = has(s_.granted, Knowledge::Schedule) && s_.config->schedule == SchedulePolicy::KnownTimes;
}

std::pair<ModeLabel, ModeLabel> EveContext::channel_modes(int interferometer) const {
  return gvqkd::channel_modes(*s_.config, interferometer);
}

std::optional<double> EveContext::send_time() const {
  if (!has(s_.granted, Knowledge::Schedule)) throw CapabilityError("send_time requires declared schedule knowledge");
  if (s_.config->schedule != SchedulePolicy::KnownTimes) return std::nullopt;
  return s_.entry.send_time;
}

PhotonRegister& EveContext::reg(Register r) {
  if (r == Register::Alice) return *s_.alice;
  if (!dummy_) throw std::logic_error("no dummy photon prepared");
  return *dummy_;
}

double EveContext::nominal_pass(const ModeLabel& m) const {
  return s_.entry.send_time + m.time_bin + upstream_;
}

double EveContext::first_pass() const { return s_.entry.send_time + upstream_; }

void EveContext::log(EntryKind kind, double t, const std::optional<Event>& cause, std::string payload, int wp) {
  s_.log->push_back({{s_.station.x, t}, kind, s_.bit_index, wp, cause, std::move(payload)});
}

void EveContext::after_information(double& t, std::optional<Event>& cause) const {
  if (informed_ && informed_->t > t) {
    t = informed_->t;
    cause = informed_;
  }
}

void EveContext::learn(double t) {
  if (!informed_ || informed_->t < t) informed_ = Event{s_.station.x, t};
}

ModeLabel EveContext::capture(const ModeLabel& channel_mode) {
  if (channel_mode.path == Path::Ancilla) throw std::invalid_argument("capture: not a channel mode");
  PhotonRegister& a = *s_.alice;
  const double alice_x = s_.config->geometry().alice_x;
  double t = nominal_pass(channel_mode);
  std::optional<Event> cause;
  if (const auto it = a.in_flight.find(channel_mode); it != a.in_flight.end()) {
    const Event dep = it->second.event;
    t = dep.x == alice_x ? dep.t + upstream_ : dep.t;
    cause = dep;
    a.in_flight.erase(it);
  }
  // The choice to capture may depend on what Eve knows; the photon does not wait.
  if (informed_ && informed_->t > t) cause = informed_;
  const ModeLabel mem = ancilla(next_memory_++);
  a.state = gvqkd::apply(swap_modes(channel_mode, mem), a.state);
  const int wp = wavepacket_of(*s_.config, channel_mode);
  if (excess_ != 0.0) log(EntryKind::EveReroute, t, cause, "mode=" + to_string(channel_mode), wp);
  log(EntryKind::EveCapture, t, cause, "mode=" + to_string(channel_mode) + " into=" + to_string(mem), wp);
  touched_[mem] = t;
  return mem;
}

void EveContext::prepare_dummy(const PureState& state) {
  for (const auto& m : state.basis().modes())
    if (m.path != Path::Ancilla) throw std::invalid_argument("prepare_dummy: state must live in memory modes");
  dummy_ = PhotonRegister{state, {}};
  const double t = first_pass();
  for (const auto& m : state.basis().modes()) dummy_touched_[m] = t;
  log(EntryKind::EveStore, t, std::nullopt, "dummy");
}

namespace {

void require_memory(const std::vector<ModeLabel>& modes, const char* what) {
  for (const auto& m : modes)
    if (m.path != Path::Ancilla)
      throw CapabilityError(std::string(what) + ": " + to_string(m) + " is a channel mode; capture it first");
}

}  // namespace

double EveContext::op_time(Register r, const std::vector<ModeLabel>& modes, std::optional<Event>& cause) {
  auto& touched = r == Register::Alice ? touched_ : dummy_touched_;
  double latest = kNever;
  for (const auto& m : modes)
    if (const auto it = touched.find(m); it != touched.end()) latest = std::max(latest, it->second);
  if (latest != kNever) cause = Event{s_.station.x, latest};
  double t = std::max(eve_time_, latest);
  if (t == kNever) t = first_pass();
  after_information(t, cause);
  eve_time_ = t;
  for (const auto& m : modes) touched[m] = t;
  return t;
}

void EveContext::apply(Register r, const UnitaryOp& u) {
  require_memory(u.basis().modes(), "apply");
  PhotonRegister& p = reg(r);
  std::optional<Event> cause;
  const double t = op_time(r, u.basis().modes(), cause);
  p.state = gvqkd::apply(u, p.state);
  log(EntryKind::EveApplyUnitary, t, cause, r == Register::Alice ? "register=alice" : "register=dummy");
}

std::size_t EveContext::measure(Register r, const std::vector<std::vector<ModeLabel>>& projectors) {
  std::vector<ModeLabel> listed;
  for (const auto& p : projectors) listed.insert(listed.end(), p.begin(), p.end());
  require_memory(listed, "measure");
  PhotonRegister& p = reg(r);
  std::optional<Event> cause;
  const double t = op_time(r, listed, cause);

  std::vector<ModeLabel> rest;
  for (const auto& m : p.state.basis().modes())
    if (std::find(listed.begin(), listed.end(), m) == listed.end()) rest.push_back(m);
  auto all = projectors;
  all.push_back(rest);
  auto result = gvqkd::measure(p.state, all, projectors.size(), *s_.rng);
  p.state = std::move(result.collapsed);
  log(EntryKind::EveMeasure, t, cause, "outcome=" + std::to_string(result.outcome));
  learn(t);
  return result.outcome;
}

void EveContext::release(Register r, const ModeLabel& memory, const ModeLabel& channel_mode, double hold) {
  if (memory.path != Path::Ancilla) throw std::invalid_argument("release: source must be a memory mode");
  if (channel_mode.path == Path::Ancilla) throw std::invalid_argument("release: target must be a channel mode");
  if (hold < 0.0) throw std::invalid_argument("release: hold must be non-negative");
  PhotonRegister& p = reg(r);
  if (const auto it = p.in_flight.find(channel_mode); it != p.in_flight.end()) {
    if (std::norm(p.state.amplitude(channel_mode)) > kEmptyMode)
      throw std::logic_error("release: channel slot " + to_string(channel_mode) + " is occupied");
    p.in_flight.erase(it);
  }

  auto& touched = r == Register::Alice ? touched_ : dummy_touched_;
  double ready = kNever;
  if (const auto it = touched.find(memory); it != touched.end()) ready = it->second;
  std::optional<Event> cause;
  if (ready != kNever) cause = Event{s_.station.x, ready};
  if (r == Register::Dummy) {
    // A fresh photon can only be put on schedule by someone who knows it.
    if (!schedule_known_ && !schedule_learned_at_) throw UnknownScheduleError();
    if (schedule_learned_at_ && schedule_learned_at_->t > ready) {
      ready = schedule_learned_at_->t;
      cause = schedule_learned_at_;
    }
  }
  after_information(ready, cause);
  const double nominal = nominal_pass(channel_mode);
  const double departure = std::max(nominal, ready) + hold;
  const double deviation = (departure - nominal) + excess_;

  p.state = gvqkd::apply(swap_modes(memory, channel_mode), p.state);
  p.in_flight[channel_mode] = {{s_.station.x, departure}, deviation};
  log(EntryKind::EveEmit, departure, cause, "mode=" + to_string(channel_mode) + " from=" + to_string(memory),
      wavepacket_of(*s_.config, channel_mode));
}

std::optional<std::string> EveContext::read_announcement() {
  const ProtocolKind k = s_.config->kind;
  if (k == ProtocolKind::GV && !has(s_.granted, Knowledge::Schedule))
    throw CapabilityError("reading send times requires declared schedule knowledge");
  if (k == ProtocolKind::GV2 && !has(s_.granted, Knowledge::InterferometerChoice))
    throw CapabilityError("reading the interferometer requires declared interferometer knowledge");
  if (!s_.announcement) return std::nullopt;
  const Event release = s_.announcement->release;
  const double t = release.t + std::abs(s_.station.x - release.x) / s_.config->geometry().c_signal;
  log(EntryKind::EveRead, t, release, s_.announcement->payload);
  learn(t);
  if (k == ProtocolKind::GV) schedule_learned_at_ = Event{s_.station.x, t};
  return s_.announcement->payload;
}

std::optional<std::string> EveContext::peek_announcement_superluminal() {
  if (!s_.superluminal) throw CapabilityError("superluminal read on a causal strategy");
  if (!s_.announcement) return std::nullopt;
  const double t = first_pass();
  log(EntryKind::EveRead, t, s_.announcement->release, s_.announcement->payload);
  learn(t);
  if (s_.config->kind == ProtocolKind::GV) schedule_learned_at_ = Event{s_.station.x, t};
  return s_.announcement->payload;
}

// ------------------------------------------------------------- strategies

AttackStrategy::AttackStrategy(std::string name, Knowledge required, Point2 station, bool superluminal)
    : name_(std::move(name)), required_(required), station_(station), superluminal_(superluminal) {}

Point2 default_station(const SessionConfig& config) {
  const auto g = config.geometry();
  return {0.5 * (g.alice_x + g.bob_x), 0.0};
}

double detour_excess(const SessionConfig& config, Point2 center) { return station_excess(config, center); }

std::unique_ptr<AttackStrategy> intercept_first_only(const SessionConfig& config, double resend_angle,
                                                     double resend_phase, std::optional<Point2> station) {
  const bool bb84 = config.kind == ProtocolKind::BB84;
  const int pairs = config.kind == ProtocolKind::GV2 ? 2 : 1;
  return std::make_unique<LambdaStrategy>(
      "intercept-first", Knowledge::None, station.value_or(default_station(config)), false,
      [bb84, pairs, resend_angle, resend_phase](EveContext& ctx) {
        if (bb84) {
          const auto [a, b] = ctx.channel_modes(1);
          const auto ma = ctx.capture(a);
          const auto mb = ctx.capture(b);
          const auto k = ctx.measure(Register::Alice, {{ma}, {mb}});
          ctx.guess(k < 2 ? static_cast<int>(k) : kAbstain);
          ctx.release(Register::Alice, ma, a);
          ctx.release(Register::Alice, mb, b);
          return;
        }
        std::vector<ModeLabel> first, held;
        std::vector<std::vector<ModeLabel>> projectors;
        for (int k = 1; k <= pairs; ++k) {
          first.push_back(ctx.channel_modes(k).first);
          held.push_back(ctx.capture(first.back()));
          projectors.push_back({held.back()});
        }
        const auto k = ctx.measure(Register::Alice, projectors);
        const bool found = k < projectors.size();
        ctx.guess(found ? 0 : 1);
        if (found && resend_angle != 0.0)
          ctx.apply(Register::Alice, two_mode_rotation(held[k], kSpare, resend_angle, resend_phase));
        for (std::size_t i = 0; i < held.size(); ++i) ctx.release(Register::Alice, held[i], first[i]);
        if (found && resend_angle != 0.0)
          ctx.release(Register::Alice, kSpare, ctx.channel_modes(static_cast<int>(k) + 1).second);
      });
}

std::unique_ptr<AttackStrategy> intercept_resend(const SessionConfig& config, std::optional<Point2> station) {
  if (config.kind != ProtocolKind::BB84) throw std::invalid_argument("intercept_resend: BB84 only");
  return std::make_unique<LambdaStrategy>(
      "intercept-resend", Knowledge::None, station.value_or(default_station(config)), false, [](EveContext& ctx) {
        const auto [a, b] = ctx.channel_modes(1);
        const auto ma = ctx.capture(a);
        const auto mb = ctx.capture(b);
        const bool diagonal = uniform_index(ctx.rng(), 2) == 1;
        if (diagonal) ctx.apply(Register::Alice, beam_splitter_5050(ma, mb, ma, mb));
        const auto k = ctx.measure(Register::Alice, {{ma}, {mb}});
        ctx.guess(k < 2 ? static_cast<int>(k) : kAbstain);
        if (diagonal) ctx.apply(Register::Alice, beam_splitter_5050(ma, mb, ma, mb));
        ctx.release(Register::Alice, ma, a);
        ctx.release(Register::Alice, mb, b);
      });
}

namespace {

void dummy_body(EveContext& ctx, const std::vector<int>& pairs, int guess_pair, double jitter) {
  const auto [first, second] = ctx.channel_modes(guess_pair);
  ctx.prepare_dummy(encode_bit(0, kDummyFirst, kDummySecond));
  ctx.release(Register::Dummy, kDummyFirst, first, jitter);
  const auto found = measure_coding_basis(ctx, pairs);
  const int bit = found ? found->second : 0;
  if (bit == 1) ctx.apply(Register::Dummy, phase_shift(kDummySecond, std::numbers::pi));
  ctx.release(Register::Dummy, kDummySecond, second, jitter);
  ctx.guess(found ? bit : kAbstain);
}

}  // namespace

std::unique_ptr<AttackStrategy> dummy_particle(const SessionConfig& config, double jitter,
                                               std::optional<Point2> station) {
  if (config.kind != ProtocolKind::GV) throw std::invalid_argument("dummy_particle: GV only");
  if (config.schedule != SchedulePolicy::KnownTimes) throw UnknownScheduleError();
  if (jitter < 0.0) throw std::invalid_argument("dummy_particle: jitter must be non-negative");
  return std::make_unique<LambdaStrategy>("dummy", Knowledge::Schedule, station.value_or(default_station(config)),
                                          false, [jitter](EveContext& ctx) {
                                            if (!ctx.send_time()) throw UnknownScheduleError();
                                            dummy_body(ctx, {1}, 1, jitter);
                                          });
}

std::unique_ptr<AttackStrategy> dummy_particle_gv2(const SessionConfig& config, GuessPolicy guess,
                                                   std::optional<Point2> station) {
  if (config.kind != ProtocolKind::GV2) throw std::invalid_argument("dummy_particle_gv2: GV2 only");
  if (config.schedule != SchedulePolicy::KnownTimes) throw UnknownScheduleError();
  if (!guess.uniform && guess.fixed != 1 && guess.fixed != 2)
    throw std::invalid_argument("dummy_particle_gv2: fixed guess must be 1 or 2");
  return std::make_unique<LambdaStrategy>(
      "dummy-gv2", Knowledge::Schedule, station.value_or(default_station(config)), false, [guess](EveContext& ctx) {
        if (!ctx.send_time()) throw UnknownScheduleError();
        // The dummy's interferometer is fixed before Alice's choice is public.
        const int g = guess.uniform ? 1 + static_cast<int>(uniform_index(ctx.rng(), 2)) : guess.fixed;
        dummy_body(ctx, {1, 2}, g, 0.0);
      });
}

std::unique_ptr<AttackStrategy> mirror_team(const SessionConfig& config, Point2 center) {
  if (config.kind != ProtocolKind::GV) throw std::invalid_argument("mirror_team: GV only");
  if (config.tau != 0) throw std::invalid_argument("mirror_team: requires tau = 0");
  if (config.layout != PathLayout::Separated) throw std::invalid_argument("mirror_team: requires separated paths");
  if (on_segment(config, center))
    throw std::invalid_argument("mirror_team: center on the Alice-Bob segment has no joint access");
  return std::make_unique<LambdaStrategy>("mirror-team", Knowledge::None, center, false, [](EveContext& ctx) {
    const auto [a, b] = ctx.channel_modes(1);
    const auto ma = ctx.capture(a);
    const auto mb = ctx.capture(b);
    ctx.apply(Register::Alice, beam_splitter_5050(ma, mb, ma, mb));
    const auto k = ctx.measure(Register::Alice, {{ma}, {mb}});
    ctx.guess(k < 2 ? static_cast<int>(k) : kAbstain);
    ctx.apply(Register::Alice, beam_splitter_5050(ma, mb, ma, mb));
    ctx.release(Register::Alice, ma, a);
    ctx.release(Register::Alice, mb, b);
  });
}

UnitaryOp three_mode_unitary(const ModeLabel& m0, const ModeLabel& m1, const ModeLabel& m2,
                             const std::vector<double>& angles) {
  if (angles.size() != 6) throw std::invalid_argument("three_mode_unitary: need six angles");
  const UnitaryOp g01 = two_mode_rotation(m0, m1, angles[0], angles[1]);
  const UnitaryOp g02 = two_mode_rotation(m0, m2, angles[2], angles[3]);
  const UnitaryOp g12 = two_mode_rotation(m1, m2, angles[4], angles[5]);
  return compose(g12, compose(g02, g01));
}

std::unique_ptr<AttackStrategy> sampled_attack(const SessionConfig& config, const SampledAttackAngles& angles) {
  if (config.kind != ProtocolKind::GV) throw std::invalid_argument("sampled_attack: GV only");
  if (angles.first.size() != 6 || angles.second.size() != 6 || angles.readout.size() != 2)
    throw std::invalid_argument("sampled_attack: wrong angle counts");
  return std::make_unique<LambdaStrategy>(
      "sampler", Knowledge::None, Point2{angles.station_x, 0.0}, false, [angles](EveContext& ctx) {
        const auto [a, b] = ctx.channel_modes(1);
        const auto ma = ctx.capture(a);
        ctx.apply(Register::Alice, three_mode_unitary(ma, kMemory0, kMemory1, angles.first));
        ctx.release(Register::Alice, ma, a);
        const auto mb = ctx.capture(b);
        ctx.apply(Register::Alice, three_mode_unitary(mb, kMemory0, kMemory1, angles.second));
        ctx.release(Register::Alice, mb, b);
        ctx.apply(Register::Alice, two_mode_rotation(kMemory0, kMemory1, angles.readout[0], angles.readout[1]));
        const auto k = ctx.measure(Register::Alice, {{kMemory0}, {kMemory1}});
        ctx.guess(k < 2 ? static_cast<int>(k) : kAbstain);
      });
}

std::unique_ptr<AttackStrategy> causal_attack_sampler(const SessionConfig& config, const SamplerParams& params,
                                                      Rng& rng) {
  SampledAttackAngles angles;
  const double two_pi = 2.0 * std::numbers::pi;
  auto draw = [&](std::vector<double>& out, std::size_t n) {
    for (std::size_t i = 0; i < n; i += 2) {
      const double theta = params.angle_scale * uniform01(rng);
      const double phi = two_pi * uniform01(rng);
      out.push_back(params.identity ? 0.0 : theta);
      out.push_back(phi);
    }
  };
  draw(angles.first, 6);
  draw(angles.second, 6);
  draw(angles.readout, 2);
  const auto g = config.geometry();
  angles.station_x = g.alice_x + (g.bob_x - g.alice_x) * uniform01(rng);
  return sampled_attack(config, angles);
}

std::unique_ptr<AttackStrategy> superluminal_witness(const SessionConfig& config, std::optional<Point2> station) {
  if (config.kind != ProtocolKind::GV) throw std::invalid_argument("superluminal_witness: GV only");
  if (config.schedule != SchedulePolicy::RandomTimes)
    throw std::invalid_argument("superluminal_witness: meaningful only under random times");
  return std::make_unique<LambdaStrategy>("superluminal", Knowledge::None, station.value_or(default_station(config)),
                                          true, [](EveContext& ctx) {
                                            if (!ctx.peek_announcement_superluminal())
                                              throw std::logic_error("superluminal_witness: no announcement");
                                            dummy_body(ctx, {1}, 1, 0.0);
                                          });
}

}  // namespace gvqkd
