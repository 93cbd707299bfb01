#include "gvqkd/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "gvqkd/adversary.hpp"
#include "gvqkd/analysis.hpp"

namespace gvqkd {

namespace {

// Probability mass below this is treated as an empty wavepacket.
constexpr double kEmptyMode = 1e-15;

std::string mode_payload(const ModeLabel& m, double nominal, double deviation) {
  return "mode=" + to_string(m) + " nominal=" + format_double(nominal) + " dev=" + format_double(deviation);
}

}  // namespace

std::string_view to_string(ProtocolKind k) {
  switch (k) {
    case ProtocolKind::GV: return "gv";
    case ProtocolKind::GV2: return "gv2";
    case ProtocolKind::BB84: return "bb84";
  }
  return "?";
}

std::string_view to_string(SchedulePolicy p) { return p == SchedulePolicy::KnownTimes ? "known" : "random"; }
std::string_view to_string(AnnouncementPolicy p) {
  return p == AnnouncementPolicy::AfterFirstArrival ? "first" : "both";
}
std::string_view to_string(PathLayout p) { return p == PathLayout::Colinear ? "colinear" : "separated"; }
std::string_view to_string(Basis b) { return b == Basis::Rectilinear ? "rectilinear" : "diagonal"; }
std::string_view to_string(Verdict v) { return v == Verdict::Clean ? "CLEAN" : "COMPROMISED"; }

// ------------------------------------------------------------------ config

int SessionConfig::effective_window() const { return window > 0 ? window : 64 * std::max(tau, 1); }

double SessionConfig::guard_gap() const { return 2.0 * (tau + epsilon); }

GeometryConfig SessionConfig::geometry() const { return {0.0, distance, {}, 1.0}; }

void SessionConfig::validate() const {
  if (!(distance > 0.0) || !std::isfinite(distance)) throw std::invalid_argument("distance must be positive");
  if (tau < 0) throw std::invalid_argument("tau must be non-negative");
  if (n_bits < 1) throw std::invalid_argument("bits must be at least 1");
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw std::invalid_argument("test_fraction must lie in (0,1)");
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) throw std::invalid_argument("epsilon must be non-negative");
  if (window < 0) throw std::invalid_argument("window must be non-negative");
  if (schedule == SchedulePolicy::RandomTimes && effective_window() <= tau)
    throw std::invalid_argument("window must exceed tau");
}

// ---------------------------------------------------------------- streams

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

Rng make_stream(std::uint64_t seed, Stream s) {
  return Rng(splitmix64(splitmix64(seed) + static_cast<std::uint64_t>(s)));
}

// --------------------------------------------------------------- schedule

Schedule make_schedule(const SessionConfig& config, Rng& rng) {
  Schedule out(static_cast<std::size_t>(config.n_bits));
  const double guard = std::ceil(config.guard_gap());
  const double spacing = std::max(1.0, config.tau + guard);
  const int window = config.effective_window();
  const double slot = window + guard;
  for (std::size_t i = 0; i < out.size(); ++i) {
    auto& e = out[i];
    if (config.schedule == SchedulePolicy::KnownTimes) {
      e.send_time = 1.0 + spacing * static_cast<double>(i);
    } else {
      const auto offset = uniform_index(rng, static_cast<std::uint64_t>(window - config.tau));
      e.send_time = 1.0 + slot * static_cast<double>(i) + static_cast<double>(offset);
    }
    if (config.kind == ProtocolKind::GV2) e.interferometer = 1 + static_cast<int>(uniform_index(rng, 2));
    if (config.kind == ProtocolKind::BB84) e.basis = uniform_index(rng, 2) == 0 ? Basis::Rectilinear : Basis::Diagonal;
  }
  return out;
}

std::pair<ModeLabel, ModeLabel> channel_modes(const SessionConfig& config, int interferometer) {
  if (config.kind == ProtocolKind::BB84) return {mode(Path::A), mode(Path::B)};
  if (interferometer == 2) return {mode(Path::A2), mode(Path::B2, config.tau)};
  return {mode(Path::A), mode(Path::B, config.tau)};
}

int wavepacket_of(const SessionConfig& config, const ModeLabel& m) {
  switch (m.path) {
    case Path::A:
    case Path::A2: return 1;
    case Path::B:
    case Path::B2: return config.kind == ProtocolKind::BB84 ? 1 : 2;
    case Path::Ancilla: return 0;
  }
  return 0;
}

// ------------------------------------------------------------------ Alice

AliceEmission alice_emit(int bit, const SessionConfig& config, const ScheduleEntry& entry) {
  if (bit != 0 && bit != 1) throw std::invalid_argument("alice_emit: bit must be 0 or 1");
  if (config.kind == ProtocolKind::GV2 && entry.interferometer != 1 && entry.interferometer != 2)
    throw std::invalid_argument("alice_emit: interferometer must be 1 or 2");
  if (!std::isfinite(entry.send_time) || entry.send_time < 0.0)
    throw std::invalid_argument("alice_emit: invalid send time");

  const auto [first, second] = channel_modes(config, entry.interferometer);
  PureState state = PureState::vacuum();
  if (config.kind == ProtocolKind::BB84 && entry.basis == Basis::Rectilinear)
    state = PureState::single(bit == 0 ? first : second);
  else
    state = encode_bit(bit, first, second);

  AliceEmission out;
  const double alice_x = config.geometry().alice_x;
  for (const auto& m : state.basis().modes()) {
    if (std::norm(state.amplitude(m)) <= kEmptyMode) continue;
    const Event ev{alice_x, entry.send_time + m.time_bin};
    out.emissions.push_back({m, wavepacket_of(config, m), ev});
    out.photon.in_flight[m] = {ev, 0.0};
  }
  out.photon.state = std::move(state);
  return out;
}

std::optional<ClassicalMessage> alice_announce(const SessionConfig& config, const ScheduleEntry& entry) {
  const double alice_x = config.geometry().alice_x;
  const double L = config.distance;
  const double first_arrival = entry.send_time + L;
  const double both_arrived = entry.send_time + config.tau + L;
  const double release =
      config.announcement == AnnouncementPolicy::AfterFirstArrival ? first_arrival : both_arrived;
  switch (config.kind) {
    case ProtocolKind::GV:
      if (config.schedule == SchedulePolicy::KnownTimes) return std::nullopt;
      return ClassicalMessage{{alice_x, release}, "send_time=" + format_double(entry.send_time)};
    case ProtocolKind::GV2:
      return ClassicalMessage{{alice_x, release}, "interferometer=" + std::to_string(entry.interferometer)};
    case ProtocolKind::BB84:
      // Bob's detection confirmation has to come back first.
      return ClassicalMessage{{alice_x, entry.send_time + 2.0 * L}, "basis=" + std::string(to_string(entry.basis))};
  }
  return std::nullopt;
}

std::optional<ClassicalMessage> schedule_publication(const SessionConfig& config) {
  if (config.schedule != SchedulePolicy::KnownTimes) return std::nullopt;
  return ClassicalMessage{{config.geometry().alice_x, 0.0}, "schedule=published"};
}

// -------------------------------------------------------------------- Bob

BobResult bob_receive_and_measure(const PureState& incoming, const std::vector<Arrival>& arrivals,
                                  int announced, Basis bob_basis, const SessionConfig& config, Rng& rng) {
  BobResult out;
  out.basis = bob_basis;
  for (const auto& a : arrivals) {
    if (!incoming.basis().contains(a.mode))
      throw std::invalid_argument("bob_receive_and_measure: arrival in unknown mode " + to_string(a.mode));
    out.arrival_times.push_back(a.at.t);
  }
  if (arrivals.empty()) return out;

  PureState s = incoming;
  ModeLabel det0;
  ModeLabel det1;
  if (config.kind == ProtocolKind::BB84) {
    det0 = mode(Path::A);
    det1 = mode(Path::B);
    if (bob_basis == Basis::Diagonal) s = apply(beam_splitter_5050(det0, det1, det0, det1), s);
  } else {
    if (config.kind == ProtocolKind::GV2 && announced != 1 && announced != 2)
      throw std::invalid_argument("bob_receive_and_measure: bad interferometer announcement");
    const auto [first, second] = channel_modes(config, config.kind == ProtocolKind::GV ? 1 : announced);
    // Bob holds the first wavepacket back by tau so both meet at his splitter.
    s = apply(delay(first, config.tau), s);
    det0 = ModeLabel{first.path, 0, config.tau};
    det1 = second;
    s = apply(beam_splitter_5050(det0, det1, det0, det1), s);
  }

  std::vector<ModeLabel> rest;
  for (const auto& m : s.basis().modes())
    if (m != det0 && m != det1) rest.push_back(m);
  const auto r = measure(s, {{det0}, {det1}, rest}, 2, rng);
  if (r.outcome < 2) out.bit = static_cast<int>(r.outcome);
  return out;
}

// ---------------------------------------------------------------- sifting

SiftResult sift_and_test(const std::vector<BitRecord>& bits, const Transcript& transcript,
                         const SessionConfig& config, Rng& rng) {
  SiftResult out;
  std::vector<std::size_t> sifted;
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (!bits[i].bob_bit) ++out.inconclusive;
    if (bits[i].sifted) sifted.push_back(i);
  }

  const auto n_test = std::min<std::size_t>(
      sifted.size(), static_cast<std::size_t>(std::llround(config.test_fraction * static_cast<double>(sifted.size()))));
  std::vector<std::size_t> pool = sifted;
  for (std::size_t k = 0; k < n_test; ++k) {
    const auto j = k + uniform_index(rng, pool.size() - k);
    std::swap(pool[k], pool[j]);
  }
  out.test_positions.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(n_test));
  std::sort(out.test_positions.begin(), out.test_positions.end());

  std::size_t t = 0;
  for (const auto i : sifted) {
    const auto& b = bits[i];
    if (t < out.test_positions.size() && out.test_positions[t] == i) {
      ++t;
      if (*b.bob_bit != b.alice_bit) ++out.test_errors;
      continue;
    }
    out.alice_key.push_back(b.alice_bit);
    out.bob_key.push_back(*b.bob_bit);
  }
  out.test_qber = n_test == 0 ? 0.0 : static_cast<double>(out.test_errors) / static_cast<double>(n_test);
  out.timing_anomalies = timing_anomaly_scan(transcript, config).size();
  const bool flagged = out.test_errors > 0 || out.timing_anomalies > 0 || out.inconclusive > 0;
  out.verdict = flagged ? Verdict::Compromised : Verdict::Clean;
  return out;
}

// ---------------------------------------------------------------- session

CausalityError::CausalityError(std::vector<Violation> v)
    : std::runtime_error([&] {
        std::string msg = "causality violation";
        if (!v.empty())
          msg += " (bit " + std::to_string(v.front().bit) + "): " + v.front().reason + " from (" +
                 format_double(v.front().cause.x) + "," + format_double(v.front().cause.t) + ") to (" +
                 format_double(v.front().effect.x) + "," + format_double(v.front().effect.t) + ")";
        return msg;
      }()),
      violations_(std::move(v)) {}

namespace {

std::vector<int> balanced_bits(std::int64_t n, Rng& rng) {
  std::vector<int> bits(static_cast<std::size_t>(n), 0);
  for (std::size_t i = 0; i < bits.size() / 2; ++i) bits[i] = 1;
  if (bits.size() % 2 == 1) bits.back() = static_cast<int>(uniform_index(rng, 2));
  for (std::size_t i = bits.size(); i > 1; --i) std::swap(bits[i - 1], bits[uniform_index(rng, i)]);
  return bits;
}

}  // namespace

SessionResult run_session(const SessionConfig& config, AttackStrategy* attack) {
  config.validate();
  if (attack && has(attack->required_knowledge(), Knowledge::Schedule) &&
      config.schedule != SchedulePolicy::KnownTimes)
    throw UnknownScheduleError();

  Rng alice_rng = make_stream(config.seed, Stream::Alice);
  Rng schedule_rng = make_stream(config.seed, Stream::Schedule);
  Rng bob_rng = make_stream(config.seed, Stream::Bob);
  Rng eve_rng = make_stream(config.seed, Stream::Eve);
  Rng sift_rng = make_stream(config.seed, Stream::Sifting);

  const std::vector<int> alice_bits = balanced_bits(config.n_bits, alice_rng);
  const Schedule schedule = make_schedule(config, schedule_rng);
  GeometryConfig geometry = config.geometry();
  if (attack) geometry.eve_positions.push_back(attack->station().x);

  SessionResult result;
  auto& log = result.transcript.entries;
  log.reserve(static_cast<std::size_t>(config.n_bits) * 12);
  if (const auto pub = schedule_publication(config))
    log.push_back({pub->release, EntryKind::SchedulePublish, -1, 0, std::nullopt, pub->payload});

  const double L = config.distance;
  const double bob_x = geometry.bob_x;
  result.bits.reserve(alice_bits.size());

  for (std::size_t i = 0; i < alice_bits.size(); ++i) {
    const auto bit_index = static_cast<std::int64_t>(i);
    const ScheduleEntry& entry = schedule[i];
    BitRecord rec;
    rec.alice_bit = alice_bits[i];
    rec.entry = entry;

    AliceEmission em = alice_emit(rec.alice_bit, config, entry);
    for (const auto& e : em.emissions)
      log.push_back({e.event, EntryKind::Emit, bit_index, e.wavepacket, std::nullopt, "mode=" + to_string(e.mode)});
    auto announcement = alice_announce(config, entry);

    std::optional<PhotonRegister> dummy;
    if (attack) {
      EveContext ctx({&config, bit_index, entry, attack->station(), attack->required_knowledge(),
                      attack->superluminal(), &em.photon, announcement, &log, &eve_rng});
      attack->on_bit(ctx);
      rec.eve_guess = ctx.eve_guess();
      if (ctx.dummy() && !ctx.dummy()->in_flight.empty()) dummy = ctx.dummy();
    }

    if (dummy) {
      for (const auto& [m, dep] : em.photon.in_flight)
        if (std::norm(em.photon.state.amplitude(m)) > kEmptyMode)
          throw std::logic_error("two photons reach Bob; multi-photon states are not modeled");
    }
    const PhotonRegister& incoming = dummy ? *dummy : em.photon;

    std::vector<Arrival> arrivals;
    for (const auto& [m, dep] : incoming.in_flight) {
      if (std::norm(incoming.state.amplitude(m)) <= kEmptyMode) continue;
      const double nominal = entry.send_time + m.time_bin + L;
      Arrival a{m, wavepacket_of(config, m), {bob_x, nominal + dep.deviation}, nominal, dep.deviation, dep.event};
      arrivals.push_back(a);
      if (std::abs(dep.deviation) > config.epsilon) rec.timing_anomaly = true;
    }
    std::sort(arrivals.begin(), arrivals.end(), [](const Arrival& a, const Arrival& b) { return a.at.t < b.at.t; });
    for (const auto& a : arrivals)
      log.push_back({a.at, EntryKind::Arrive, bit_index, a.wavepacket, a.cause, mode_payload(a.mode, a.nominal, a.deviation)});

    if (config.kind == ProtocolKind::BB84)
      rec.bob_basis = uniform_index(bob_rng, 2) == 0 ? Basis::Rectilinear : Basis::Diagonal;
    const BobResult bob = bob_receive_and_measure(incoming.state, arrivals, entry.interferometer, rec.bob_basis, config, bob_rng);
    rec.bob_bit = bob.bit;

    Event detect{bob_x, entry.send_time + config.tau + L};
    std::optional<Event> detect_cause;
    if (!arrivals.empty()) {
      detect = arrivals.back().at;
      detect_cause = arrivals.back().at;
    }
    log.push_back({detect, EntryKind::Detect, bit_index, 0, detect_cause,
                   bob.bit ? "outcome=" + std::to_string(*bob.bit) : std::string("outcome=inconclusive")});

    if (announcement) {
      std::optional<Event> cause;
      if (config.kind == ProtocolKind::BB84) {
        const Event confirm_rx{geometry.alice_x, detect.t + L};
        log.push_back({detect, EntryKind::Announce, bit_index, 0, detect_cause, "confirm"});
        log.push_back({confirm_rx, EntryKind::AnnounceReceive, bit_index, 0, detect, "confirm"});
        announcement->release.t = std::max(announcement->release.t, confirm_rx.t);
        cause = confirm_rx;
      }
      log.push_back({announcement->release, EntryKind::Announce, bit_index, 0, cause, announcement->payload});
      log.push_back({{bob_x, announcement->release.t + L}, EntryKind::AnnounceReceive, bit_index, 0,
                     announcement->release, announcement->payload});
    }

    rec.sifted = rec.bob_bit.has_value() &&
                 (config.kind != ProtocolKind::BB84 || rec.bob_basis == entry.basis);
    result.bits.push_back(rec);
  }

  result.transcript.finalize();
  result.violations = check_attack_causality(result.transcript, geometry);
  if (!result.violations.empty() && !(attack && attack->superluminal()))
    throw CausalityError(result.violations);

  result.sift = sift_and_test(result.bits, result.transcript, config, sift_rng);

  RunReport& rep = result.report;
  rep.n_bits = config.n_bits;
  std::size_t sifted = 0, errors = 0, eligible = 0, flagged = 0;
  std::vector<int> guesses;
  guesses.reserve(alice_bits.size());
  for (const auto& b : result.bits) {
    const bool error = b.sifted && *b.bob_bit != b.alice_bit;
    if (b.sifted) ++sifted;
    if (error) ++errors;
    if (b.sifted || !b.bob_bit || b.timing_anomaly) ++eligible;
    if (error || !b.bob_bit || b.timing_anomaly) ++flagged;
    guesses.push_back(b.eve_guess.value_or(kAbstain));
  }
  rep.qber = sifted == 0 ? 0.0 : static_cast<double>(errors) / static_cast<double>(sifted);
  rep.test_qber = result.sift.test_qber;
  rep.eve_mutual_information_bits = mutual_information(alice_bits, guesses);
  rep.detection_probability = eligible == 0 ? 0.0 : static_cast<double>(flagged) / static_cast<double>(eligible);
  rep.timing_anomaly_count = static_cast<std::int64_t>(result.sift.timing_anomalies);
  rep.inconclusive_count = static_cast<std::int64_t>(result.sift.inconclusive);
  rep.sifted_key_length = static_cast<std::int64_t>(sifted);
  rep.sifted_fraction = static_cast<double>(sifted) / static_cast<double>(config.n_bits);
  if (config.kind != ProtocolKind::BB84) {
    const Event e1{geometry.alice_x, 0.0};
    const Event e2{geometry.alice_x, static_cast<double>(config.tau)};
    rep.access_window_ratio = simultaneous_flight(e1, e2, bob_x).length() / (L + config.tau);
  }
  rep.causality_violations = static_cast<std::int64_t>(result.violations.size());
  rep.verdict = result.sift.verdict;
  return result;
}

}  // namespace gvqkd
