#include "gvqkd/spacetime.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "gvqkd/transcript.hpp"

namespace gvqkd {

bool causally_precedes(const Event& e1, const Event& e2, double c) {
  return e2.t - e1.t >= std::abs(e2.x - e1.x) / c - kCausalSlack;
}

double PathPolyline::length() const {
  double total = 0.0;
  for (std::size_t k = 1; k < vertices.size(); ++k)
    total += std::hypot(vertices[k].x - vertices[k - 1].x, vertices[k].y - vertices[k - 1].y);
  return total;
}

double flight_time(const PathPolyline& path, double c) {
  if (path.vertices.size() < 2) throw std::invalid_argument("flight_time: need at least two vertices");
  return path.length() / c;
}

bool is_subluminal(const std::vector<Event>& worldline, double c) {
  for (std::size_t k = 1; k < worldline.size(); ++k)
    if (!causally_precedes(worldline[k - 1], worldline[k], c)) return false;
  return true;
}

double GeometryConfig::distance() const { return std::abs(bob_x - alice_x); }

void GeometryConfig::validate() const {
  if (alice_x == bob_x) throw std::invalid_argument("geometry: alice_x equals bob_x");
  if (!(c_signal > 0.0)) throw std::invalid_argument("geometry: c_signal must be positive");
}

Interval access_window(double eve_x, const Event& emission1, const Event& emission2,
                       const Event& bob_arrival, double c) {
  const double first_here = emission1.t + std::abs(eve_x - emission1.x) / c;
  const double second_here = emission2.t + std::abs(eve_x - emission2.x) / c;
  return {std::max(first_here, second_here), bob_arrival.t - std::abs(bob_arrival.x - eve_x) / c};
}

Interval simultaneous_flight(const Event& emission1, const Event& emission2, double bob_x,
                             double c) {
  const double arrive1 = emission1.t + std::abs(bob_x - emission1.x) / c;
  const double arrive2 = emission2.t + std::abs(bob_x - emission2.x) / c;
  return {std::max(emission1.t, emission2.t), std::min(arrive1, arrive2)};
}

std::vector<Violation> check_attack_causality(const Transcript& transcript,
                                              const GeometryConfig& geometry) {
  if (!transcript.complete) throw std::invalid_argument("transcript is not complete");
  std::vector<Violation> out;
  for (std::size_t k = 0; k < transcript.entries.size(); ++k) {
    const auto& e = transcript.entries[k];
    if (k > 0 && e.at.t < transcript.entries[k - 1].at.t)
      throw std::invalid_argument("transcript timestamps decrease at line " + std::to_string(k + 1));
    if (e.cause && !causally_precedes(*e.cause, e.at, geometry.c_signal)) {
      out.push_back({*e.cause, e.at, e.bit,
                     std::string(to_string(e.kind)) + " depends on a spacelike or later event"});
    }
    if (is_eve_operation(e.kind)) {
      const bool on_station =
          std::any_of(geometry.eve_positions.begin(), geometry.eve_positions.end(),
                      [&](double x) { return std::abs(x - e.at.x) <= kCausalSlack; });
      if (!on_station)
        out.push_back({e.at, e.at, e.bit, std::string(to_string(e.kind)) + " off every Eve station"});
    }
  }
  return out;
}

}  // namespace gvqkd
