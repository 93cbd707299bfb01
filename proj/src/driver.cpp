#include "gvqkd/driver.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <sstream>
#include <thread>

#include "json.hpp"

namespace gvqkd {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Log-uniform range for the sampler's per-sample angle scale.
constexpr double kMinAngleScale = 1e-3;
constexpr double kMaxAngleScale = std::numbers::pi / 2.0;

std::optional<Point2> station_of(const RunSpec& spec) {
  if (!spec.eve_x) return std::nullopt;
  return Point2{*spec.eve_x, 0.0};
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

json report_json(const RunReport& r) {
  return json{{"n_bits", r.n_bits},
              {"qber", r.qber},
              {"test_qber", r.test_qber},
              {"eve_mi_bits", r.eve_mutual_information_bits},
              {"detection_probability", r.detection_probability},
              {"timing_anomalies", r.timing_anomaly_count},
              {"inconclusive", r.inconclusive_count},
              {"sifted_key_length", r.sifted_key_length},
              {"sifted_fraction", r.sifted_fraction},
              {"access_window_ratio", r.access_window_ratio},
              {"causality_violations", r.causality_violations},
              {"verdict", std::string(to_string(r.verdict))}};
}

json stats_json(const EnsembleStats& s) {
  auto me = [](const MeanError& m) { return json{{"mean", m.mean}, {"stderr", m.stderr_}}; };
  return json{{"sessions", s.n_sessions},
              {"qber", me(s.qber)},
              {"detection_probability", me(s.detection_probability)},
              {"eve_mi_bits", me(s.mi_bits)},
              {"anomaly_rate", s.anomaly_rate},
              {"compromised_sessions", s.compromised_sessions}};
}

json sample_json(const FrontierSample& s) {
  return json{{"detection_probability", s.detection},
              {"eve_mi_bits", s.mi_bits},
              {"causality_violations", s.violations},
              {"label", s.label}};
}

FrontierSample to_sample(std::int64_t index, const RunReport& r, std::string label) {
  return FrontierSample{index, r.detection_probability, r.eve_mutual_information_bits, r.causality_violations,
                        std::move(label)};
}

Verdict overall(const std::vector<RunReport>& reports) {
  for (const auto& r : reports)
    if (r.verdict == Verdict::Compromised) return Verdict::Compromised;
  return Verdict::Clean;
}

}  // namespace

std::uint64_t session_seed(std::uint64_t base, std::int64_t index) {
  return index == 0 ? base : splitmix64(base ^ splitmix64(static_cast<std::uint64_t>(index)));
}

std::unique_ptr<AttackStrategy> make_attack(const RunSpec& spec, const SessionConfig& config) {
  const auto& a = spec.attack;
  const auto station = station_of(spec);
  if (a == "none") return nullptr;
  if (a == "intercept-first") return intercept_first_only(config, spec.resend_angle, spec.resend_phase, station);
  if (a == "intercept-resend") return intercept_resend(config, station);
  if (a == "dummy") return dummy_particle(config, spec.dummy_jitter, station);
  if (a == "dummy-gv2") return dummy_particle_gv2(config, spec.guess, station);
  if (a == "mirror-team") return mirror_team(config, spec.center);
  if (a == "sampler") {
    Rng rng = make_stream(config.seed, Stream::Sampler);
    return causal_attack_sampler(config, SamplerParams{spec.angle_scale, false}, rng);
  }
  if (a == "superluminal") return superluminal_witness(config, station);
  throw SpecError("attack", "unknown attack '" + a + "'");
}

void parallel_for(std::int64_t n, int jobs, const std::function<void(std::int64_t)>& fn) {
  if (n <= 0) return;
  const int workers = static_cast<int>(std::min<std::int64_t>(std::max(jobs, 1), n));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
  std::atomic<std::int64_t> next{0};
  auto work = [&] {
    for (std::int64_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[static_cast<std::size_t>(i)] = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
}

std::vector<RunReport> run_ensemble(const RunSpec& spec, const SessionSink& sink) {
  validate(spec);
  std::vector<RunReport> reports(static_cast<std::size_t>(spec.sessions));
  parallel_for(spec.sessions, spec.jobs, [&](std::int64_t i) {
    SessionConfig config = spec.session;
    config.seed = session_seed(spec.session.seed, i);
    auto attack = make_attack(spec, config);
    const SessionResult result = run_session(config, attack.get());
    reports[static_cast<std::size_t>(i)] = result.report;
    if (sink) sink(i, result);
  });
  return reports;
}

std::vector<SweepRow> run_sweep(const RunSpec& spec) {
  if (spec.sweep_values.empty()) throw SpecError("sweep.values", "empty grid");
  std::vector<SweepRow> rows;
  for (const double value : spec.sweep_values) {
    RunSpec point = spec;
    if (spec.sweep_axis == "tau") {
      set_key(point, "tau", std::to_string(std::llround(value)));
    } else if (spec.sweep_axis == "window") {
      set_key(point, "window", std::to_string(std::llround(value)));
    } else if (spec.sweep_axis == "epsilon") {
      point.session.epsilon = value;
      if (value < 0.0) throw SpecError("sweep.values", "epsilon must be non-negative");
    } else {
      throw SpecError("sweep.axis", "axis '" + spec.sweep_axis + "' is not a session parameter");
    }
    const auto reports = run_ensemble(point);
    SweepRow row;
    row.axis = spec.sweep_axis;
    row.value = value;
    row.stats = aggregate(reports);
    for (const auto& r : reports) {
      row.timing_anomalies += r.timing_anomaly_count;
      row.sifted_fraction += r.sifted_fraction / static_cast<double>(reports.size());
    }
    row.verdict = overall(reports);
    rows.push_back(row);
  }
  return rows;
}

std::string sweep_csv_row(const RunSpec& spec, const SweepRow& row) {
  std::ostringstream out;
  out << row.axis << ',' << format_double(row.value) << ',' << to_string(spec.session.kind) << ',' << spec.attack
      << ',' << format_double(row.stats.qber.mean) << ',' << format_double(row.stats.detection_probability.mean)
      << ',' << format_double(row.stats.mi_bits.mean) << ',' << row.timing_anomalies << ','
      << format_double(row.sifted_fraction) << ',' << to_string(row.verdict);
  return out.str();
}

FrontierRun run_frontier(const RunSpec& spec) {
  if (spec.session.kind != ProtocolKind::GV) throw SpecError("protocol", "frontier sampling requires protocol gv");
  if (spec.session.schedule != SchedulePolicy::RandomTimes)
    throw SpecError("schedule", "frontier sampling requires schedule = random");
  SessionConfig base = spec.session;
  base.n_bits = spec.sample_bits;
  base.validate();

  FrontierRun run;
  run.causal.resize(static_cast<std::size_t>(spec.samples));
  parallel_for(spec.samples, spec.jobs, [&](std::int64_t i) {
    SessionConfig config = base;
    config.seed = session_seed(base.seed, i);
    Rng rng = make_stream(config.seed, Stream::Sampler);
    const double u = uniform01(rng);
    const double scale = kMinAngleScale * std::pow(kMaxAngleScale / kMinAngleScale, u);
    auto attack = causal_attack_sampler(config, SamplerParams{scale, false}, rng);
    const auto result = run_session(config, attack.get());
    run.causal[static_cast<std::size_t>(i)] = to_sample(i, result.report, "causal");
  });

  {
    auto attack = superluminal_witness(base, station_of(spec));
    run.witness = to_sample(spec.samples, run_session(base, attack.get()).report, "superluminal");
  }
  {
    SessionConfig known = base;
    known.schedule = SchedulePolicy::KnownTimes;
    auto attack = dummy_particle(known, 0.0, station_of(spec));
    run.known_schedule = to_sample(spec.samples + 1, run_session(known, attack.get()).report, "dummy[requires:schedule]");
  }

  std::vector<FrontierSample> evaluated = run.causal;
  evaluated.push_back(run.witness);
  run.result = frontier(evaluated, FrontierThresholds{spec.frontier_detection, spec.frontier_mi});
  return run;
}

int cmd_run(const RunSpec& spec, std::ostream& out, std::ostream& err) {
  try {
    validate(spec);
    const fs::path dir = spec.out_dir;
    fs::create_directories(dir);
    write_file(dir / "config.cfg", to_config_text(spec));

    const auto reports = run_ensemble(spec, [&](std::int64_t i, const SessionResult& result) {
      std::ostringstream log;
      write_transcript(log, result.transcript);
      const auto name = i == 0 ? std::string("transcript.log") : "transcript_" + std::to_string(i) + ".log";
      write_file(dir / name, log.str());
    });

    std::string csv = std::string(kSessionCsvHeader) + '\n';
    json sessions = json::array();
    for (std::size_t i = 0; i < reports.size(); ++i) {
      SessionConfig config = spec.session;
      config.seed = session_seed(spec.session.seed, static_cast<std::int64_t>(i));
      csv += session_csv_row(static_cast<std::int64_t>(i), config, spec.attack, reports[i]) + '\n';
      json row = report_json(reports[i]);
      row["seed"] = config.seed;
      sessions.push_back(std::move(row));
    }
    write_file(dir / "sessions.csv", csv);

    const auto stats = aggregate(reports);
    const Verdict verdict = overall(reports);
    const json summary{{"protocol", std::string(to_string(spec.session.kind))},
                       {"attack", spec.attack},
                       {"schedule", std::string(to_string(spec.session.schedule))},
                       {"paths", std::string(to_string(spec.session.layout))},
                       {"tau", spec.session.tau},
                       {"distance", spec.session.distance},
                       {"epsilon", spec.session.epsilon},
                       {"seed", spec.session.seed},
                       {"n_bits", spec.session.n_bits},
                       {"aggregate", stats_json(stats)},
                       {"sessions", sessions},
                       {"verdict", std::string(to_string(verdict))}};
    write_file(dir / "summary.json", summary.dump(2) + '\n');

    const auto& r0 = reports.front();
    out << "protocol=" << to_string(spec.session.kind) << " attack=" << spec.attack
        << " sessions=" << spec.sessions << '\n'
        << "qber=" << format_double(stats.qber.mean) << " detection=" << format_double(stats.detection_probability.mean)
        << " mi=" << format_double(stats.mi_bits.mean) << " anomalies=" << r0.timing_anomaly_count
        << " sifted_fraction=" << format_double(r0.sifted_fraction) << '\n'
        << "verdict=" << to_string(verdict) << '\n';
    return verdict == Verdict::Compromised ? kExitCompromised : kExitClean;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitError;
  }
}

int cmd_sweep(const RunSpec& spec, std::ostream& out, std::ostream& err) {
  try {
    validate(spec);
    const fs::path dir = spec.out_dir;
    if (spec.sweep_axis == "samples") {
      const auto run = run_frontier(spec);
      fs::create_directories(dir);
      write_file(dir / "config.cfg", to_config_text(spec));
      std::string csv = std::string(kFrontierCsvHeader) + '\n';
      for (const auto& s : run.causal) csv += frontier_csv_row(s) + '\n';
      csv += frontier_csv_row(run.witness) + '\n';
      csv += frontier_csv_row(run.known_schedule) + '\n';
      write_file(dir / "frontier.csv", csv);

      json envelope = json::array();
      for (const auto& [d, mi] : run.result.envelope) envelope.push_back(json::array({d, mi}));
      json counter = json::array();
      for (const auto& s : run.result.counterexamples) counter.push_back(sample_json(s));
      const json summary{{"samples", spec.samples},
                         {"sample_bits", spec.sample_bits},
                         {"eps_d", spec.frontier_detection},
                         {"eps_i", spec.frontier_mi},
                         {"envelope", envelope},
                         {"counterexamples", counter},
                         {"counterexamples_explained", run.result.counterexamples_explained},
                         {"witness", sample_json(run.witness)},
                         {"known_schedule", sample_json(run.known_schedule)}};
      write_file(dir / "frontier_summary.json", summary.dump(2) + '\n');
      out << "samples=" << spec.samples << " counterexamples=" << run.result.counterexamples.size()
          << " explained=" << (run.result.counterexamples_explained ? "yes" : "no") << '\n';
      return kExitClean;
    }

    const auto rows = run_sweep(spec);
    fs::create_directories(dir);
    write_file(dir / "config.cfg", to_config_text(spec));
    std::string csv = std::string(kSweepCsvHeader) + '\n';
    for (const auto& row : rows) csv += sweep_csv_row(spec, row) + '\n';
    write_file(dir / "sweep.csv", csv);
    out << csv;
    return kExitClean;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitError;
  }
}

int cmd_report(const std::vector<fs::path>& paths, std::ostream& out, std::ostream& err) {
  std::vector<fs::path> summaries;
  for (const auto& p : paths) {
    std::error_code ec;
    if (fs::is_regular_file(p, ec)) {
      summaries.push_back(p);
    } else if (fs::is_directory(p, ec)) {
      if (fs::exists(p / "summary.json")) summaries.push_back(p / "summary.json");
      std::vector<fs::path> nested;
      for (const auto& entry : fs::directory_iterator(p, ec))
        if (entry.is_directory() && fs::exists(entry.path() / "summary.json")) nested.push_back(entry.path() / "summary.json");
      std::sort(nested.begin(), nested.end());
      summaries.insert(summaries.end(), nested.begin(), nested.end());
    } else {
      err << "error: no such file or directory: " << p.string() << '\n';
      return kExitError;
    }
  }
  if (summaries.empty()) {
    err << "error: no run summaries found\n";
    return kExitError;
  }

  out << std::left << std::setw(28) << "run" << std::setw(6) << "proto" << std::setw(18) << "attack" << std::setw(8)
      << "sched" << std::right << std::setw(10) << "qber" << std::setw(11) << "detection" << std::setw(10) << "mi"
      << std::setw(10) << "sifted" << std::setw(10) << "anomaly" << "  verdict\n";
  for (const auto& path : summaries) {
    json s;
    try {
      std::ifstream in(path);
      s = json::parse(in);
      const auto& agg = s.at("aggregate");
      const auto& first = s.at("sessions").at(0);
      auto num = [](double v) {
        std::ostringstream o;
        o << std::fixed << std::setprecision(4) << v;
        return o.str();
      };
      out << std::left << std::setw(28) << path.parent_path().filename().string() << std::setw(6)
          << s.at("protocol").get<std::string>() << std::setw(18) << s.at("attack").get<std::string>() << std::setw(8)
          << s.at("schedule").get<std::string>() << std::right << std::setw(10)
          << num(agg.at("qber").at("mean").get<double>()) << std::setw(11)
          << num(agg.at("detection_probability").at("mean").get<double>()) << std::setw(10)
          << num(agg.at("eve_mi_bits").at("mean").get<double>()) << std::setw(10)
          << num(first.at("sifted_fraction").get<double>()) << std::setw(10)
          << num(agg.at("anomaly_rate").get<double>()) << "  " << s.at("verdict").get<std::string>() << '\n';
    } catch (const std::exception& e) {
      err << "error: " << path.string() << ": " << e.what() << '\n';
      return kExitError;
    }
  }
  return kExitClean;
}

}  // namespace gvqkd
