// Shared helpers for the unit tests.
#pragma once

#include <cmath>
#include <complex>
#include <vector>

#include "gvqkd/quantum.hpp"

namespace gvqkd::test {

inline constexpr double kRt2 = 0.70710678118654752440;

inline bool near(std::complex<double> a, std::complex<double> b, double tol = 1e-12) {
  return std::abs(a - b) <= tol;
}

inline bool same_state(const PureState& a, const PureState& b, double tol = 1e-12) {
  if (!near(a.vacuum_amplitude(), b.vacuum_amplitude(), tol)) return false;
  for (const auto& m : a.basis().modes())
    if (!near(a.amplitude(m), b.amplitude(m), tol)) return false;
  for (const auto& m : b.basis().modes())
    if (!near(a.amplitude(m), b.amplitude(m), tol)) return false;
  return true;
}

inline PureState superposition(const std::vector<ModeLabel>& modes, const std::vector<std::complex<double>>& amps) {
  VectorC v = VectorC::Zero(static_cast<Eigen::Index>(modes.size()) + 1);
  for (std::size_t k = 0; k < amps.size(); ++k) v(static_cast<Eigen::Index>(k) + 1) = amps[k];
  return {ModeBasis(modes), v};
}

// Appends the projector onto every remaining mode of `s`; vacuum goes there too.
inline std::vector<std::vector<ModeLabel>> completed(std::vector<std::vector<ModeLabel>> projectors,
                                                    const PureState& s) {
  std::vector<ModeLabel> rest;
  for (const auto& m : s.basis().modes()) {
    bool listed = false;
    for (const auto& p : projectors)
      for (const auto& q : p) listed = listed || q == m;
    if (!listed) rest.push_back(m);
  }
  projectors.push_back(rest);
  return projectors;
}

}  // namespace gvqkd::test
