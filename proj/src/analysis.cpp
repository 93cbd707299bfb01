#include "gvqkd/analysis.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <stdexcept>

namespace gvqkd {

double binary_entropy(double p) {
  if (p <= 0.0 || p >= 1.0) return 0.0;
  return -p * std::log2(p) - (1.0 - p) * std::log2(1.0 - p);
}

double mutual_information(std::span<const int> alice_bits, std::span<const int> eve_guesses) {
  if (alice_bits.empty()) throw std::invalid_argument("mutual_information: empty input");
  if (alice_bits.size() != eve_guesses.size())
    throw std::invalid_argument("mutual_information: sequences differ in length");
  std::array<std::array<double, 3>, 2> joint{};
  for (std::size_t i = 0; i < alice_bits.size(); ++i) {
    const int a = alice_bits[i];
    const int e = eve_guesses[i];
    if (a != 0 && a != 1) throw std::invalid_argument("mutual_information: alice bit outside {0,1}");
    if (e != 0 && e != 1 && e != kAbstain) throw std::invalid_argument("mutual_information: bad guess symbol");
    joint[static_cast<std::size_t>(a)][e == kAbstain ? 2u : static_cast<std::size_t>(e)] += 1.0;
  }
  const double n = static_cast<double>(alice_bits.size());
  std::array<double, 2> pa{};
  std::array<double, 3> pe{};
  for (std::size_t a = 0; a < 2; ++a)
    for (std::size_t e = 0; e < 3; ++e) {
      joint[a][e] /= n;
      pa[a] += joint[a][e];
      pe[e] += joint[a][e];
    }
  double mi = 0.0;
  for (std::size_t a = 0; a < 2; ++a)
    for (std::size_t e = 0; e < 3; ++e)
      if (joint[a][e] > 0.0) mi += joint[a][e] * std::log2(joint[a][e] / (pa[a] * pe[e]));
  return std::clamp(mi, 0.0, 1.0);
}

namespace {

double payload_field(const std::string& payload, std::string_view key) {
  const std::string needle = std::string(key) + "=";
  std::size_t pos = 0;
  while ((pos = payload.find(needle, pos)) != std::string::npos) {
    if (pos == 0 || payload[pos - 1] == ' ') break;
    ++pos;
  }
  if (pos == std::string::npos) throw std::invalid_argument("arrival payload lacks " + needle);
  const char* begin = payload.data() + pos + needle.size();
  const char* end = payload.data() + payload.size();
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc{}) throw std::invalid_argument("arrival payload has a bad " + needle);
  return v;
}

}  // namespace

std::vector<TimingAnomaly> timing_anomaly_scan(const Transcript& transcript, const SessionConfig& config) {
  std::vector<TimingAnomaly> out;
  for (const auto& e : transcript.entries) {
    if (e.kind != EntryKind::Arrive) continue;
    const double dev = payload_field(e.payload, "dev");
    if (std::abs(dev) > config.epsilon)
      out.push_back({e.bit, e.wavepacket, e.at.t, payload_field(e.payload, "nominal"), dev});
  }
  return out;
}

MeanError mean_and_stderr(std::span<const double> xs) {
  if (xs.empty()) return {};
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  if (xs.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  const double var = ss / static_cast<double>(xs.size() - 1);
  return {mean, std::sqrt(var / static_cast<double>(xs.size()))};
}

EnsembleStats aggregate(std::span<const RunReport> reports) {
  EnsembleStats s;
  s.n_sessions = static_cast<std::int64_t>(reports.size());
  std::vector<double> q, d, mi;
  double anomalies = 0.0, bits = 0.0;
  for (const auto& r : reports) {
    q.push_back(r.qber);
    d.push_back(r.detection_probability);
    mi.push_back(r.eve_mutual_information_bits);
    anomalies += static_cast<double>(r.timing_anomaly_count);
    bits += static_cast<double>(r.n_bits);
    if (r.verdict == Verdict::Compromised) ++s.compromised_sessions;
  }
  s.qber = mean_and_stderr(q);
  s.detection_probability = mean_and_stderr(d);
  s.mi_bits = mean_and_stderr(mi);
  s.anomaly_rate = bits > 0.0 ? anomalies / bits : 0.0;
  return s;
}

FrontierResult frontier(std::span<const FrontierSample> samples, FrontierThresholds thresholds) {
  if (samples.size() < 100) throw std::invalid_argument("frontier: need at least 100 samples");
  std::vector<FrontierSample> sorted(samples.begin(), samples.end());
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const FrontierSample& a, const FrontierSample& b) { return a.detection < b.detection; });
  FrontierResult out;
  double best = 0.0;
  for (const auto& s : sorted) {
    best = std::max(best, s.mi_bits);
    if (!out.envelope.empty() && out.envelope.back().first == s.detection)
      out.envelope.back().second = best;
    else
      out.envelope.emplace_back(s.detection, best);
    if (s.detection < thresholds.detection && s.mi_bits > thresholds.mi_bits) {
      out.counterexamples.push_back(s);
      if (s.violations < 1) out.counterexamples_explained = false;
    }
  }
  return out;
}

std::string session_csv_row(std::int64_t session, const SessionConfig& config, const std::string& attack,
                            const RunReport& r) {
  std::string row = std::to_string(session) + "," + std::to_string(config.seed) + "," +
                    std::string(to_string(config.kind)) + "," + attack + "," +
                    std::string(to_string(config.schedule)) + "," + std::to_string(r.n_bits) + ",";
  row += format_double(r.qber) + "," + format_double(r.test_qber) + "," + format_double(r.detection_probability) +
         "," + format_double(r.eve_mutual_information_bits) + "," + std::to_string(r.timing_anomaly_count) + "," +
         std::to_string(r.inconclusive_count) + "," + std::to_string(r.sifted_key_length) + "," +
         format_double(r.sifted_fraction) + "," + format_double(r.access_window_ratio) + "," +
         std::to_string(r.causality_violations) + "," + std::string(to_string(r.verdict));
  return row;
}

std::string frontier_csv_row(const FrontierSample& s) {
  return std::to_string(s.index) + "," + format_double(s.detection) + "," + format_double(s.mi_bits) + "," +
         std::to_string(s.violations) + "," + s.label;
}

}  // namespace gvqkd
