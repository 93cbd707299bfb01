// Single-photon quantum kernel: labeled optical modes, pure states in the
// zero/one-photon sector, unitary optical elements, reduced states and
// projective measurement.
//
// Every basis carries an implicit vacuum element at index 0; mode k of a
// ModeBasis lives at index k + 1 of the amplitude vector.
#pragma once

#include <complex>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace gvqkd {

using Complex = std::complex<double>;
using VectorC = Eigen::VectorXcd;
using MatrixC = Eigen::MatrixXcd;

inline constexpr double kStateTolerance = 1e-12;
inline constexpr double kUnitaryTolerance = 1e-10;

/// Deterministic random stream used by every sampling routine.
using Rng = std::mt19937_64;

/// Uniform double in [0, 1) built from the top 53 bits, so results do not
/// depend on the standard library's distribution implementation.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform integer in [0, n). Uses rejection so the result is unbiased.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("uniform_index: empty range");
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
  std::uint64_t x = rng();
  while (x >= limit) x = rng();
  return x % n;
}

class BasisError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class Path : std::uint8_t { A, B, A2, B2, Ancilla };

struct ModeLabel {
  Path path = Path::A;
  int index = 0;     // ancilla number; 0 for the optical paths
  int time_bin = 0;  // in units of the global bin width

  auto operator<=>(const ModeLabel&) const = default;
};

inline ModeLabel mode(Path p, int time_bin = 0) { return {p, 0, time_bin}; }
inline ModeLabel ancilla(int k, int time_bin = 0) { return {Path::Ancilla, k, time_bin}; }

std::string to_string(Path p);
std::string to_string(const ModeLabel& m);

/// Ordered list of distinct mode labels.
class ModeBasis {
 public:
  ModeBasis() = default;
  explicit ModeBasis(std::vector<ModeLabel> modes);

  std::size_t size() const { return modes_.size(); }
  /// Vector dimension including vacuum.
  Eigen::Index dim() const { return static_cast<Eigen::Index>(modes_.size()) + 1; }
  const std::vector<ModeLabel>& modes() const { return modes_; }
  const ModeLabel& operator[](std::size_t k) const { return modes_[k]; }

  /// Vector index of the label (vacuum excluded), or -1.
  Eigen::Index index_of(const ModeLabel& m) const;
  bool contains(const ModeLabel& m) const { return index_of(m) >= 0; }

  /// This basis followed by any labels of `other` not already present.
  ModeBasis merged(const ModeBasis& other) const;

  bool operator==(const ModeBasis&) const = default;

 private:
  std::vector<ModeLabel> modes_;
};

class PureState {
 public:
  PureState(ModeBasis basis, VectorC amplitudes);

  static PureState vacuum();
  static PureState single(const ModeLabel& m);

  const ModeBasis& basis() const { return basis_; }
  const VectorC& amplitudes() const { return amps_; }

  Complex vacuum_amplitude() const { return amps_(0); }
  /// Zero for labels outside the basis.
  Complex amplitude(const ModeLabel& m) const;
  double norm() const { return amps_.norm(); }

  /// Same state expressed over `target`, which must contain this basis.
  PureState embedded(const ModeBasis& target) const;

 private:
  ModeBasis basis_;
  VectorC amps_;
};

class DensityOp {
 public:
  DensityOp(ModeBasis basis, MatrixC matrix);

  static DensityOp projector(const PureState& s);

  const ModeBasis& basis() const { return basis_; }
  const MatrixC& matrix() const { return rho_; }
  Complex trace() const { return rho_.trace(); }

 private:
  ModeBasis basis_;
  MatrixC rho_;
};

class UnitaryOp {
 public:
  UnitaryOp(ModeBasis basis, MatrixC matrix);

  static UnitaryOp identity(const ModeBasis& basis);

  const ModeBasis& basis() const { return basis_; }
  const MatrixC& matrix() const { return u_; }

  UnitaryOp adjoint() const { return {basis_, u_.adjoint()}; }
  /// Identity on any labels of `target` this operator does not declare.
  UnitaryOp embedded(const ModeBasis& target) const;

 private:
  ModeBasis basis_;
  MatrixC u_;
};

/// (|A,0> + (-1)^bit |B,0>) / sqrt 2.
PureState encode_bit(int bit);
/// Same coding state over an arbitrary pair of modes.
PureState encode_bit(int bit, const ModeLabel& first, const ModeLabel& second);

Complex inner_product(const PureState& lhs, const PureState& rhs);

/// 50/50 beam splitter: in1 -> (out1 + out2)/sqrt2, in2 -> (out1 - out2)/sqrt2.
/// Output labels may coincide with input labels; the remaining columns are
/// completed to an orthonormal set.
UnitaryOp beam_splitter_5050(const ModeLabel& in1, const ModeLabel& in2,
                             const ModeLabel& out1, const ModeLabel& out2);

/// Moves the content of `m` to the same path `bins` later. Realized as the
/// transposition of the two slots, so the later slot must be empty for the
/// relabeling reading to hold.
UnitaryOp delay(const ModeLabel& m, int bins);

/// Phase e^{i phi} on a single mode.
UnitaryOp phase_shift(const ModeLabel& m, double phi);

/// U(s) over the union of both bases; U acts as identity outside its basis.
PureState apply(const UnitaryOp& u, const PureState& s);
/// Composition: first `first`, then `second`.
UnitaryOp compose(const UnitaryOp& second, const UnitaryOp& first);

/// Reduced operator on `keep` plus vacuum.
DensityOp partial_trace(const PureState& s, std::span<const ModeLabel> keep);
DensityOp partial_trace(const DensityOp& rho, std::span<const ModeLabel> keep);

double trace_distance(const DensityOp& r1, const DensityOp& r2);

struct MeasurementResult {
  std::size_t outcome;
  PureState collapsed;
};

/// Projective measurement over a partition of the state's basis. The vacuum
/// belongs to outcome `vacuum_outcome`. Labels listed in a projector but
/// absent from the basis carry zero amplitude and are accepted.
MeasurementResult measure(const PureState& s,
                          const std::vector<std::vector<ModeLabel>>& projectors,
                          std::size_t vacuum_outcome, Rng& rng);

/// Outcome probabilities of the same measurement, without sampling.
std::vector<double> outcome_probabilities(
    const PureState& s, const std::vector<std::vector<ModeLabel>>& projectors,
    std::size_t vacuum_outcome);

bool is_unitary(const UnitaryOp& u, double tol = kUnitaryTolerance);
bool is_density_operator(const DensityOp& rho, double tol = kStateTolerance);

}  // namespace gvqkd
