#include "gvqkd/quantum.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace gvqkd {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
// Constructor-level validation is looser than the identities checked in
// tests so that long operator chains do not trip on accumulated rounding.
constexpr double kValidationTolerance = 1e-9;
constexpr double kNegligibleProbability = 1e-14;

VectorC basis_vector(Eigen::Index dim, Eigen::Index k) {
  VectorC v = VectorC::Zero(dim);
  v(k) = 1.0;
  return v;
}

}  // namespace

std::string to_string(Path p) {
  switch (p) {
    case Path::A: return "A";
    case Path::B: return "B";
    case Path::A2: return "A2";
    case Path::B2: return "B2";
    case Path::Ancilla: return "E";
  }
  return "?";
}

std::string to_string(const ModeLabel& m) {
  std::string s = to_string(m.path);
  if (m.path == Path::Ancilla) s += std::to_string(m.index);
  return s + "@" + std::to_string(m.time_bin);
}

// ---------------------------------------------------------------- ModeBasis

ModeBasis::ModeBasis(std::vector<ModeLabel> modes) : modes_(std::move(modes)) {
  std::set<ModeLabel> seen;
  for (const auto& m : modes_) {
    if (m.time_bin < 0) throw BasisError("negative time bin in " + to_string(m));
    if (!seen.insert(m).second) throw BasisError("duplicate mode " + to_string(m));
  }
}

Eigen::Index ModeBasis::index_of(const ModeLabel& m) const {
  const auto it = std::find(modes_.begin(), modes_.end(), m);
  if (it == modes_.end()) return -1;
  return static_cast<Eigen::Index>(it - modes_.begin()) + 1;
}

ModeBasis ModeBasis::merged(const ModeBasis& other) const {
  std::vector<ModeLabel> out = modes_;
  for (const auto& m : other.modes_)
    if (!contains(m)) out.push_back(m);
  return ModeBasis(std::move(out));
}

// ---------------------------------------------------------------- PureState

PureState::PureState(ModeBasis basis, VectorC amplitudes)
    : basis_(std::move(basis)), amps_(std::move(amplitudes)) {
  if (amps_.size() != basis_.dim()) throw BasisError("amplitude vector does not match basis");
  if (std::abs(amps_.norm() - 1.0) > kValidationTolerance)
    throw std::invalid_argument("state is not normalized");
}

PureState PureState::vacuum() { return {ModeBasis{}, basis_vector(1, 0)}; }

PureState PureState::single(const ModeLabel& m) {
  return {ModeBasis({m}), basis_vector(2, 1)};
}

Complex PureState::amplitude(const ModeLabel& m) const {
  const auto k = basis_.index_of(m);
  return k < 0 ? Complex{} : amps_(k);
}

PureState PureState::embedded(const ModeBasis& target) const {
  if (target == basis_) return *this;
  VectorC out = VectorC::Zero(target.dim());
  out(0) = amps_(0);
  for (std::size_t k = 0; k < basis_.size(); ++k) {
    const auto j = target.index_of(basis_[k]);
    if (j < 0) throw BasisError("target basis lacks " + to_string(basis_[k]));
    out(j) = amps_(static_cast<Eigen::Index>(k) + 1);
  }
  return {target, std::move(out)};
}

// ---------------------------------------------------------------- DensityOp

DensityOp::DensityOp(ModeBasis basis, MatrixC matrix)
    : basis_(std::move(basis)), rho_(std::move(matrix)) {
  if (rho_.rows() != basis_.dim() || rho_.cols() != basis_.dim())
    throw BasisError("density matrix does not match basis");
}

DensityOp DensityOp::projector(const PureState& s) {
  return {s.basis(), s.amplitudes() * s.amplitudes().adjoint()};
}

// ---------------------------------------------------------------- UnitaryOp

UnitaryOp::UnitaryOp(ModeBasis basis, MatrixC matrix)
    : basis_(std::move(basis)), u_(std::move(matrix)) {
  if (u_.rows() != basis_.dim() || u_.cols() != basis_.dim())
    throw BasisError("unitary matrix does not match basis");
  if (!is_unitary(*this, kValidationTolerance)) throw std::invalid_argument("matrix is not unitary");
}

UnitaryOp UnitaryOp::identity(const ModeBasis& basis) {
  return {basis, MatrixC::Identity(basis.dim(), basis.dim())};
}

UnitaryOp UnitaryOp::embedded(const ModeBasis& target) const {
  if (target == basis_) return *this;
  std::vector<Eigen::Index> map(static_cast<std::size_t>(basis_.dim()));
  map[0] = 0;
  for (std::size_t k = 0; k < basis_.size(); ++k) {
    const auto j = target.index_of(basis_[k]);
    if (j < 0) throw BasisError("target basis lacks " + to_string(basis_[k]));
    map[k + 1] = j;
  }
  MatrixC out = MatrixC::Identity(target.dim(), target.dim());
  for (Eigen::Index r = 0; r < basis_.dim(); ++r)
    for (Eigen::Index c = 0; c < basis_.dim(); ++c)
      out(map[static_cast<std::size_t>(r)], map[static_cast<std::size_t>(c)]) = u_(r, c);
  return {target, std::move(out)};
}

// --------------------------------------------------------------- operations

PureState encode_bit(int bit) { return encode_bit(bit, mode(Path::A), mode(Path::B)); }

PureState encode_bit(int bit, const ModeLabel& first, const ModeLabel& second) {
  if (bit != 0 && bit != 1) throw std::invalid_argument("bit must be 0 or 1");
  VectorC v = VectorC::Zero(3);
  v(1) = kInvSqrt2;
  v(2) = bit == 0 ? kInvSqrt2 : -kInvSqrt2;
  return {ModeBasis({first, second}), std::move(v)};
}

Complex inner_product(const PureState& lhs, const PureState& rhs) {
  const ModeBasis common = lhs.basis().merged(rhs.basis());
  return lhs.embedded(common).amplitudes().dot(rhs.embedded(common).amplitudes());
}

UnitaryOp beam_splitter_5050(const ModeLabel& in1, const ModeLabel& in2,
                             const ModeLabel& out1, const ModeLabel& out2) {
  if (in1 == in2 || out1 == out2) throw BasisError("beam splitter ports must be distinct");
  std::vector<ModeLabel> labels{in1, in2};
  for (const auto& m : {out1, out2})
    if (std::find(labels.begin(), labels.end(), m) == labels.end()) labels.push_back(m);
  ModeBasis basis(labels);
  const Eigen::Index n = basis.dim();
  const auto o1 = basis.index_of(out1);
  const auto o2 = basis.index_of(out2);

  MatrixC u = MatrixC::Zero(n, n);
  u(0, 0) = 1.0;
  u(o1, 1) = kInvSqrt2;
  u(o2, 1) = kInvSqrt2;
  u(o1, 2) = kInvSqrt2;
  u(o2, 2) = -kInvSqrt2;

  // Complete the remaining columns by Gram-Schmidt over the standard basis.
  Eigen::Index candidate = 1;
  for (Eigen::Index col = 3; col < n; ++col) {
    for (; candidate < n; ++candidate) {
      VectorC v = basis_vector(n, candidate);
      for (Eigen::Index k = 0; k < col; ++k) v -= u.col(k).dot(v) * u.col(k);
      if (v.norm() > 1e-8) {
        u.col(col) = v / v.norm();
        ++candidate;
        break;
      }
    }
  }
  return {std::move(basis), std::move(u)};
}

UnitaryOp delay(const ModeLabel& m, int bins) {
  if (bins < 0) throw std::invalid_argument("delay must be non-negative");
  if (bins == 0) return UnitaryOp::identity(ModeBasis({m}));
  ModeLabel later = m;
  later.time_bin += bins;
  MatrixC u = MatrixC::Zero(3, 3);
  u(0, 0) = 1.0;
  u(2, 1) = 1.0;
  u(1, 2) = 1.0;
  return {ModeBasis({m, later}), std::move(u)};
}

UnitaryOp phase_shift(const ModeLabel& m, double phi) {
  MatrixC u = MatrixC::Identity(2, 2);
  u(1, 1) = std::polar(1.0, phi);
  return {ModeBasis({m}), std::move(u)};
}

PureState apply(const UnitaryOp& u, const PureState& s) {
  const ModeBasis target = s.basis().merged(u.basis());
  const UnitaryOp ue = u.embedded(target);
  return {target, ue.matrix() * s.embedded(target).amplitudes()};
}

UnitaryOp compose(const UnitaryOp& second, const UnitaryOp& first) {
  const ModeBasis target = first.basis().merged(second.basis());
  return {target, second.embedded(target).matrix() * first.embedded(target).matrix()};
}

DensityOp partial_trace(const PureState& s, std::span<const ModeLabel> keep) {
  return partial_trace(DensityOp::projector(s), keep);
}

DensityOp partial_trace(const DensityOp& rho, std::span<const ModeLabel> keep) {
  if (keep.empty()) throw std::invalid_argument("partial_trace: empty keep set");
  const ModeBasis kept(std::vector<ModeLabel>(keep.begin(), keep.end()));
  std::vector<Eigen::Index> idx{0};
  for (const auto& m : kept.modes()) {
    const auto k = rho.basis().index_of(m);
    if (k < 0) throw BasisError("partial_trace: " + to_string(m) + " not in basis");
    idx.push_back(k);
  }
  const auto n = static_cast<Eigen::Index>(idx.size());
  const MatrixC& full = rho.matrix();
  MatrixC out(n, n);
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index c = 0; c < n; ++c)
      out(r, c) = full(idx[static_cast<std::size_t>(r)], idx[static_cast<std::size_t>(c)]);
  // A photon in a traced-out mode leaves the kept modes empty.
  for (Eigen::Index k = 1; k < full.rows(); ++k)
    if (std::find(idx.begin(), idx.end(), k) == idx.end()) out(0, 0) += full(k, k);
  return {kept, std::move(out)};
}

double trace_distance(const DensityOp& r1, const DensityOp& r2) {
  if (!(r1.basis() == r2.basis())) throw BasisError("trace_distance: basis mismatch");
  const MatrixC diff = r1.matrix() - r2.matrix();
  const Eigen::SelfAdjointEigenSolver<MatrixC> solver(diff, Eigen::EigenvaluesOnly);
  const double d = 0.5 * solver.eigenvalues().cwiseAbs().sum();
  return std::clamp(d, 0.0, 1.0);
}

namespace {

std::vector<std::size_t> outcome_of_index(const ModeBasis& basis,
                                          const std::vector<std::vector<ModeLabel>>& projectors,
                                          std::size_t vacuum_outcome) {
  if (vacuum_outcome >= projectors.size())
    throw std::invalid_argument("measure: vacuum outcome out of range");
  constexpr auto kUnassigned = static_cast<std::size_t>(-1);
  std::vector<std::size_t> owner(static_cast<std::size_t>(basis.dim()), kUnassigned);
  owner[0] = vacuum_outcome;
  std::set<ModeLabel> listed;
  for (std::size_t k = 0; k < projectors.size(); ++k) {
    for (const auto& m : projectors[k]) {
      if (!listed.insert(m).second)
        throw std::invalid_argument("measure: projectors overlap on " + to_string(m));
      const auto j = basis.index_of(m);
      if (j >= 0) owner[static_cast<std::size_t>(j)] = k;
    }
  }
  for (std::size_t j = 1; j < owner.size(); ++j)
    if (owner[j] == kUnassigned)
      throw std::invalid_argument("measure: projectors do not cover " + to_string(basis[j - 1]));
  return owner;
}

}  // namespace

std::vector<double> outcome_probabilities(const PureState& s,
                                          const std::vector<std::vector<ModeLabel>>& projectors,
                                          std::size_t vacuum_outcome) {
  const auto owner = outcome_of_index(s.basis(), projectors, vacuum_outcome);
  std::vector<double> p(projectors.size(), 0.0);
  for (std::size_t j = 0; j < owner.size(); ++j)
    p[owner[j]] += std::norm(s.amplitudes()(static_cast<Eigen::Index>(j)));
  return p;
}

MeasurementResult measure(const PureState& s, const std::vector<std::vector<ModeLabel>>& projectors,
                          std::size_t vacuum_outcome, Rng& rng) {
  std::vector<double> p = outcome_probabilities(s, projectors, vacuum_outcome);
  const auto owner = outcome_of_index(s.basis(), projectors, vacuum_outcome);
  // Rounding residue from exact cancellations is not a physical outcome.
  for (auto& pk : p)
    if (pk < kNegligibleProbability) pk = 0.0;

  const double r = uniform01(rng);
  std::size_t outcome = projectors.size();
  double cumulative = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (p[k] <= 0.0) continue;
    cumulative += p[k];
    outcome = k;
    if (r < cumulative) break;
  }

  VectorC collapsed = s.amplitudes();
  for (std::size_t j = 0; j < owner.size(); ++j)
    if (owner[j] != outcome) collapsed(static_cast<Eigen::Index>(j)) = 0.0;
  collapsed /= collapsed.norm();
  return {outcome, PureState(s.basis(), std::move(collapsed))};
}

bool is_unitary(const UnitaryOp& u, double tol) {
  const MatrixC& m = u.matrix();
  return (m.adjoint() * m - MatrixC::Identity(m.rows(), m.cols())).cwiseAbs().maxCoeff() <= tol;
}

bool is_density_operator(const DensityOp& rho, double tol) {
  const MatrixC& m = rho.matrix();
  if ((m - m.adjoint()).cwiseAbs().maxCoeff() > tol) return false;
  if (std::abs(m.trace() - Complex{1.0}) > tol) return false;
  const Eigen::SelfAdjointEigenSolver<MatrixC> solver(m, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff() >= -tol;
}

}  // namespace gvqkd
