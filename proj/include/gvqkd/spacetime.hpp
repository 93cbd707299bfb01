// Flat 1+1 spacetime bookkeeping. Distances are in light-bins and times in
// bins, so the signal speed is 1 unless a geometry says otherwise.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace gvqkd {

struct Transcript;

struct Event {
  double x = 0.0;
  double t = 0.0;

  bool operator==(const Event&) const = default;
};

/// Slack absorbed when comparing separations built from square roots.
inline constexpr double kCausalSlack = 1e-9;

/// True iff a signal at speed `c` leaving e1 can reach e2.
bool causally_precedes(const Event& e1, const Event& e2, double c = 1.0);

/// Planar point; y is nonzero only for off-axis detours.
struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

struct PathPolyline {
  std::vector<Point2> vertices;

  static PathPolyline straight(double from_x, double to_x) { return {{{from_x, 0.0}, {to_x, 0.0}}}; }
  double length() const;
};

double flight_time(const PathPolyline& path, double c = 1.0);

/// Worldline check: each consecutive pair of events separated by at most c.
bool is_subluminal(const std::vector<Event>& worldline, double c = 1.0);

struct GeometryConfig {
  double alice_x = 0.0;
  double bob_x = 10.0;
  std::vector<double> eve_positions;
  double c_signal = 1.0;

  double distance() const;
  void validate() const;
};

struct Interval {
  double begin = 0.0;
  double end = 0.0;

  bool empty() const { return end < begin; }
  double length() const { return empty() ? 0.0 : end - begin; }
};

/// Times at which a station at `eve_x` holds both wavepackets and can still
/// get a signal to Bob by `bob_arrival`. Starts when the later wavepacket
/// passes the station, ends at the last departure that reaches
/// bob_arrival.x by bob_arrival.t.
Interval access_window(double eve_x, const Event& emission1, const Event& emission2,
                       const Event& bob_arrival, double c = 1.0);

/// Interval during which both wavepackets are in the channel between their
/// emission and their arrival at `bob_x`.
Interval simultaneous_flight(const Event& emission1, const Event& emission2, double bob_x,
                             double c = 1.0);

struct Violation {
  Event cause;
  Event effect;
  std::int64_t bit = -1;
  std::string reason;
};

/// Every information flow recorded in the transcript must respect the light
/// cone, and every Eve operation must sit on one of the geometry's stations.
/// Throws std::invalid_argument for an incomplete or unordered transcript.
std::vector<Violation> check_attack_causality(const Transcript& transcript,
                                              const GeometryConfig& geometry);

}  // namespace gvqkd
