#include "gvqkd/runspec.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "gvqkd/transcript.hpp"

namespace gvqkd {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

double to_double(std::string_view key, std::string_view v) {
  v = trim(v);
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size() || !std::isfinite(out))
    throw SpecError(std::string(key), "expected a number, got '" + std::string(v) + "'");
  return out;
}

std::int64_t to_int(std::string_view key, std::string_view v) {
  v = trim(v);
  std::int64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size())
    throw SpecError(std::string(key), "expected an integer, got '" + std::string(v) + "'");
  return out;
}

std::vector<double> to_list(std::string_view key, std::string_view v) {
  std::vector<double> out;
  v = trim(v);
  if (v.empty()) return out;
  std::size_t start = 0;
  while (true) {
    const auto pos = v.find(',', start);
    out.push_back(to_double(key, v.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string join(const std::vector<double>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? "," : "") + format_double(xs[i]);
  return out;
}

[[noreturn]] void bad_choice(std::string_view key, std::string_view v, std::string_view options) {
  throw SpecError(std::string(key), "unknown value '" + std::string(v) + "' (expected " + std::string(options) + ")");
}

}  // namespace

bool RunSpec::operator==(const RunSpec& o) const { return to_config_text(*this) == to_config_text(o); }

const std::vector<std::string>& spec_keys() {
  static const std::vector<std::string> keys{
      "protocol",        "distance",           "tau",          "schedule",      "window",
      "announce",        "paths",              "bits",         "test_fraction", "epsilon",
      "seed",            "attack",             "attack.center", "attack.guess", "attack.eve_x",
      "attack.jitter",   "attack.resend_angle", "attack.resend_phase", "attack.angle_scale",
      "ensemble.sessions", "ensemble.jobs",    "output.dir",   "sweep.axis",    "sweep.values",
      "sweep.samples",   "sweep.sample_bits",  "frontier.eps_d", "frontier.eps_i"};
  return keys;
}

void set_key(RunSpec& spec, std::string_view key, std::string_view raw) {
  const std::string_view v = trim(raw);
  auto& s = spec.session;
  if (key == "protocol") {
    if (v == "gv") s.kind = ProtocolKind::GV;
    else if (v == "gv2") s.kind = ProtocolKind::GV2;
    else if (v == "bb84") s.kind = ProtocolKind::BB84;
    else bad_choice(key, v, "gv|gv2|bb84");
  } else if (key == "distance") {
    s.distance = to_double(key, v);
    if (!(s.distance > 0.0)) throw SpecError("distance", "must be positive");
  } else if (key == "tau") {
    const auto t = to_int(key, v);
    if (t < 0 || t > 1'000'000) throw SpecError("tau", "must lie in [0, 1e6]");
    s.tau = static_cast<int>(t);
  } else if (key == "schedule") {
    if (v == "known") s.schedule = SchedulePolicy::KnownTimes;
    else if (v == "random") s.schedule = SchedulePolicy::RandomTimes;
    else bad_choice(key, v, "known|random");
  } else if (key == "window") {
    const auto w = to_int(key, v);
    if (w < 0 || w > 100'000'000) throw SpecError("window", "must lie in [0, 1e8]");
    s.window = static_cast<int>(w);
  } else if (key == "announce") {
    if (v == "first") s.announcement = AnnouncementPolicy::AfterFirstArrival;
    else if (v == "both") s.announcement = AnnouncementPolicy::AfterBothArrivals;
    else bad_choice(key, v, "first|both");
  } else if (key == "paths") {
    if (v == "colinear") s.layout = PathLayout::Colinear;
    else if (v == "separated") s.layout = PathLayout::Separated;
    else bad_choice(key, v, "colinear|separated");
  } else if (key == "bits") {
    s.n_bits = to_int(key, v);
    if (s.n_bits < 1) throw SpecError("bits", "must be at least 1");
  } else if (key == "test_fraction") {
    s.test_fraction = to_double(key, v);
    if (!(s.test_fraction > 0.0 && s.test_fraction < 1.0)) throw SpecError("test_fraction", "must lie in (0,1)");
  } else if (key == "epsilon") {
    s.epsilon = to_double(key, v);
    if (s.epsilon < 0.0) throw SpecError("epsilon", "must be non-negative");
  } else if (key == "seed") {
    const auto x = to_int(key, v);
    if (x < 0) throw SpecError("seed", "must be non-negative");
    s.seed = static_cast<std::uint64_t>(x);
  } else if (key == "attack") {
    if (std::find(std::begin(kAttackNames), std::end(kAttackNames), v) == std::end(kAttackNames))
      bad_choice(key, v, "none|intercept-first|intercept-resend|dummy|dummy-gv2|mirror-team|sampler|superluminal");
    spec.attack = std::string(v);
  } else if (key == "attack.center") {
    const auto xs = to_list(key, v);
    if (xs.size() != 2) throw SpecError("attack.center", "expected x,y");
    spec.center = {xs[0], xs[1]};
  } else if (key == "attack.guess") {
    if (v == "uniform") spec.guess = {true, 1};
    else if (v == "1") spec.guess = {false, 1};
    else if (v == "2") spec.guess = {false, 2};
    else bad_choice(key, v, "uniform|1|2");
  } else if (key == "attack.eve_x") {
    if (v == "auto") spec.eve_x.reset();
    else spec.eve_x = to_double(key, v);
  } else if (key == "attack.jitter") {
    spec.dummy_jitter = to_double(key, v);
    if (spec.dummy_jitter < 0.0) throw SpecError("attack.jitter", "must be non-negative");
  } else if (key == "attack.resend_angle") {
    spec.resend_angle = to_double(key, v);
  } else if (key == "attack.resend_phase") {
    spec.resend_phase = to_double(key, v);
  } else if (key == "attack.angle_scale") {
    spec.angle_scale = to_double(key, v);
    if (spec.angle_scale < 0.0) throw SpecError("attack.angle_scale", "must be non-negative");
  } else if (key == "ensemble.sessions") {
    spec.sessions = to_int(key, v);
    if (spec.sessions < 1) throw SpecError("ensemble.sessions", "must be at least 1");
  } else if (key == "ensemble.jobs") {
    const auto j = to_int(key, v);
    if (j < 1 || j > 1024) throw SpecError("ensemble.jobs", "must lie in [1, 1024]");
    spec.jobs = static_cast<int>(j);
  } else if (key == "output.dir") {
    if (v.empty()) throw SpecError("output.dir", "must not be empty");
    spec.out_dir = std::string(v);
  } else if (key == "sweep.axis") {
    if (v != "tau" && v != "window" && v != "epsilon" && v != "samples") bad_choice(key, v, "tau|window|epsilon|samples");
    spec.sweep_axis = std::string(v);
  } else if (key == "sweep.values") {
    spec.sweep_values = to_list(key, v);
  } else if (key == "sweep.samples") {
    spec.samples = to_int(key, v);
    if (spec.samples < 1) throw SpecError("sweep.samples", "must be at least 1");
  } else if (key == "sweep.sample_bits") {
    spec.sample_bits = to_int(key, v);
    if (spec.sample_bits < 1) throw SpecError("sweep.sample_bits", "must be at least 1");
  } else if (key == "frontier.eps_d") {
    spec.frontier_detection = to_double(key, v);
  } else if (key == "frontier.eps_i") {
    spec.frontier_mi = to_double(key, v);
  } else {
    throw SpecError(std::string(key), "unknown key");
  }
}

RunSpec parse_config_text(std::string_view text, RunSpec base) {
  std::size_t start = 0;
  std::size_t lineno = 0;
  while (start <= text.size()) {
    const auto end = text.find('\n', start);
    std::string_view line = text.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start);
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (!line.empty()) {
      const auto eq = line.find('=');
      if (eq == std::string_view::npos)
        throw SpecError(std::string(line), "line " + std::to_string(lineno) + " is not key = value");
      set_key(base, trim(line.substr(0, eq)), line.substr(eq + 1));
    }
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  return base;
}

std::string to_config_text(const RunSpec& spec) {
  const auto& s = spec.session;
  std::ostringstream out;
  out << "protocol = " << to_string(s.kind) << '\n'
      << "distance = " << format_double(s.distance) << '\n'
      << "tau = " << s.tau << '\n'
      << "schedule = " << to_string(s.schedule) << '\n'
      << "window = " << s.window << '\n'
      << "announce = " << to_string(s.announcement) << '\n'
      << "paths = " << to_string(s.layout) << '\n'
      << "bits = " << s.n_bits << '\n'
      << "test_fraction = " << format_double(s.test_fraction) << '\n'
      << "epsilon = " << format_double(s.epsilon) << '\n'
      << "seed = " << s.seed << '\n'
      << "attack = " << spec.attack << '\n'
      << "attack.center = " << format_double(spec.center.x) << ',' << format_double(spec.center.y) << '\n'
      << "attack.guess = " << (spec.guess.uniform ? std::string("uniform") : std::to_string(spec.guess.fixed)) << '\n'
      << "attack.eve_x = " << (spec.eve_x ? format_double(*spec.eve_x) : std::string("auto")) << '\n'
      << "attack.jitter = " << format_double(spec.dummy_jitter) << '\n'
      << "attack.resend_angle = " << format_double(spec.resend_angle) << '\n'
      << "attack.resend_phase = " << format_double(spec.resend_phase) << '\n'
      << "attack.angle_scale = " << format_double(spec.angle_scale) << '\n'
      << "ensemble.sessions = " << spec.sessions << '\n'
      << "ensemble.jobs = " << spec.jobs << '\n'
      << "output.dir = " << spec.out_dir << '\n'
      << "sweep.axis = " << spec.sweep_axis << '\n'
      << "sweep.values = " << join(spec.sweep_values) << '\n'
      << "sweep.samples = " << spec.samples << '\n'
      << "sweep.sample_bits = " << spec.sample_bits << '\n'
      << "frontier.eps_d = " << format_double(spec.frontier_detection) << '\n'
      << "frontier.eps_i = " << format_double(spec.frontier_mi) << '\n';
  return out.str();
}

void validate(const RunSpec& spec) {
  try {
    spec.session.validate();
  } catch (const std::invalid_argument& e) {
    throw SpecError("session", e.what());
  }
  const auto kind = spec.session.kind;
  const auto& a = spec.attack;
  if ((a == "dummy" || a == "mirror-team" || a == "sampler" || a == "superluminal") && kind != ProtocolKind::GV)
    throw SpecError("attack", a + " requires protocol gv");
  if (a == "dummy-gv2" && kind != ProtocolKind::GV2) throw SpecError("attack", "dummy-gv2 requires protocol gv2");
  if (a == "intercept-resend" && kind != ProtocolKind::BB84)
    throw SpecError("attack", "intercept-resend requires protocol bb84");
  if ((a == "dummy" || a == "dummy-gv2") && spec.session.schedule != SchedulePolicy::KnownTimes)
    throw SpecError("schedule", "UNKNOWN_SCHEDULE: " + a + " requires schedule = known");
  if (a == "mirror-team") {
    if (spec.session.layout != PathLayout::Separated) throw SpecError("paths", "mirror-team requires paths = separated");
    if (spec.session.tau != 0) throw SpecError("tau", "mirror-team requires tau = 0");
  }
  if (a == "superluminal" && spec.session.schedule != SchedulePolicy::RandomTimes)
    throw SpecError("schedule", "superluminal witness requires schedule = random");
}

}  // namespace gvqkd
