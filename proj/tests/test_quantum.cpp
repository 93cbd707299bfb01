#include <array>
#include <cmath>
#include <numbers>

#include "doctest.h"
#include "gvqkd/quantum.hpp"
#include "test_support.hpp"

using namespace gvqkd;
using gvqkd::test::kRt2;
using gvqkd::test::near;
using gvqkd::test::same_state;

namespace {

const ModeLabel A0 = mode(Path::A, 0);
const ModeLabel B0 = mode(Path::B, 0);

PureState random_state(const std::vector<ModeLabel>& modes, Rng& rng, bool with_vacuum) {
  VectorC v = VectorC::Zero(static_cast<Eigen::Index>(modes.size()) + 1);
  for (Eigen::Index k = with_vacuum ? 0 : 1; k < v.size(); ++k)
    v(k) = {uniform01(rng) - 0.5, uniform01(rng) - 0.5};
  v /= v.norm();
  return {ModeBasis(modes), v};
}

}  // namespace

TEST_SUITE("quantum") {
  TEST_CASE("coding states") {
    const auto s0 = encode_bit(0);
    const auto s1 = encode_bit(1);
    CHECK(near(s0.amplitude(A0), kRt2));
    CHECK(near(s0.amplitude(B0), kRt2));
    CHECK(near(s1.amplitude(A0), kRt2));
    CHECK(near(s1.amplitude(B0), -kRt2));
    CHECK(near(s0.vacuum_amplitude(), 0.0));
    CHECK(near(inner_product(s0, s1), 0.0));
    CHECK(near(inner_product(s0, s0), 1.0));
    CHECK_THROWS_AS(encode_bit(2), std::invalid_argument);
  }

  TEST_CASE("beam splitter matches the hand-computed 2x2 action") {
    const auto out1 = ancilla(0);
    const auto out2 = ancilla(1);
    const auto bs = beam_splitter_5050(A0, B0, out1, out2);
    CHECK(is_unitary(bs));
    const MatrixC prod = bs.matrix().adjoint() * bs.matrix();
    CHECK((prod - MatrixC::Identity(prod.rows(), prod.cols())).norm() < 1e-12);

    CHECK(same_state(apply(bs, encode_bit(0)), PureState::single(out1)));
    CHECK(same_state(apply(bs, encode_bit(1)), PureState::single(out2)));
    const auto from_a = apply(bs, PureState::single(A0));
    CHECK(near(from_a.amplitude(out1), kRt2));
    CHECK(near(from_a.amplitude(out2), kRt2));
    const auto from_b = apply(bs, PureState::single(B0));
    CHECK(near(from_b.amplitude(out1), kRt2));
    CHECK(near(from_b.amplitude(out2), -kRt2));
  }

  TEST_CASE("beam splitter sharing input and output ports stays unitary") {
    const auto bs = beam_splitter_5050(A0, B0, A0, B0);
    CHECK(is_unitary(bs));
    const auto bs3 = beam_splitter_5050(A0, B0, A0, ancilla(3));
    CHECK(is_unitary(bs3));
    CHECK(same_state(apply(bs3, encode_bit(1)), PureState::single(ancilla(3))));
  }

  TEST_CASE("delay relabels time bins") {
    const auto id = delay(B0, 0);
    const auto s = encode_bit(0);
    CHECK(same_state(apply(id, s), s));
    CHECK(same_state(apply(delay(B0, 3), PureState::single(B0)), PureState::single(mode(Path::B, 3))));

    const auto d = apply(delay(B0, 2), encode_bit(0));
    CHECK(near(d.amplitude(A0), kRt2));
    CHECK(near(d.amplitude(mode(Path::B, 2)), kRt2));
    CHECK(near(d.amplitude(B0), 0.0));
    CHECK_THROWS(delay(B0, -1));
  }

  TEST_CASE("apply with identity and inverse") {
    Rng rng(3);
    const std::vector<ModeLabel> modes{A0, B0, ancilla(0)};
    const auto s = random_state(modes, rng, true);
    CHECK(same_state(apply(UnitaryOp::identity(s.basis()), s), s));
    const auto u = compose(phase_shift(A0, 0.7), beam_splitter_5050(A0, B0, A0, ancilla(0)));
    CHECK(same_state(apply(u, apply(u.adjoint(), s)), s));
  }

  TEST_CASE("norm preservation under every constructor") {
    Rng rng(11);
    const std::vector<ModeLabel> pool{A0, B0, mode(Path::A, 2), mode(Path::B, 2), ancilla(0), ancilla(1)};
    for (int trial = 0; trial < 500; ++trial) {
      const auto i = uniform_index(rng, pool.size());
      auto j = uniform_index(rng, pool.size() - 1);
      if (j >= i) ++j;
      std::vector<UnitaryOp> ops{beam_splitter_5050(pool[i], pool[j], pool[j], pool[i]),
                                 delay(pool[i], static_cast<int>(uniform_index(rng, 4))),
                                 phase_shift(pool[j], 2.0 * std::numbers::pi * uniform01(rng))};
      ops.push_back(compose(ops[0], ops[2]));
      const auto s = random_state(pool, rng, trial % 2 == 0);
      for (const auto& u : ops) {
        CHECK(is_unitary(u));
        CHECK(std::abs(apply(u, s).norm() - 1.0) <= 1e-12);
      }
    }
  }

  TEST_CASE("reduced state of the first wavepacket is independent of the bit") {
    const std::array keep{A0};
    const auto rp = partial_trace(encode_bit(0), keep);
    const auto rm = partial_trace(encode_bit(1), keep);
    MatrixC half = MatrixC::Zero(2, 2);
    half(0, 0) = 0.5;
    half(1, 1) = 0.5;
    CHECK((rp.matrix() - half).norm() < 1e-12);
    CHECK((rm.matrix() - half).norm() < 1e-12);
    CHECK(trace_distance(rp, rm) <= 1e-12);
    CHECK(is_density_operator(rp));

    const auto occupied = partial_trace(PureState::single(A0), keep);
    MatrixC one = MatrixC::Zero(2, 2);
    one(1, 1) = 1.0;
    CHECK((occupied.matrix() - one).norm() < 1e-12);
  }

  TEST_CASE("reduced-state identity holds for shifted and separated modes") {
    for (int tau : {0, 1, 5, 30}) {
      const auto a = mode(Path::A2, 0);
      const auto b = mode(Path::B2, tau);
      const std::array keep{a};
      CHECK(trace_distance(partial_trace(encode_bit(0, a, b), keep), partial_trace(encode_bit(1, a, b), keep)) <=
            1e-12);
    }
  }

  TEST_CASE("trace distance examples") {
    const ModeBasis basis({A0});
    MatrixC m0 = MatrixC::Zero(2, 2);
    m0(0, 0) = 1.0;
    MatrixC m1 = MatrixC::Zero(2, 2);
    m1(1, 1) = 1.0;
    const DensityOp r0(basis, m0);
    const DensityOp r1(basis, m1);
    CHECK(std::abs(trace_distance(r0, r1) - 1.0) < 1e-12);
    CHECK(trace_distance(r0, r0) < 1e-12);
    // Pure states: sqrt(1 - |<a|b>|^2).
    VectorC v(2);
    v << kRt2, kRt2;
    const DensityOp plus = DensityOp::projector(PureState(basis, v));
    CHECK(std::abs(trace_distance(plus, r0) - kRt2) < 1e-12);
  }

  TEST_CASE("partial trace over all modes is the projector") {
    Rng rng(5);
    const std::vector<ModeLabel> modes{A0, B0, mode(Path::B, 4), ancilla(2)};
    for (int trial = 0; trial < 50; ++trial) {
      const auto s = random_state(modes, rng, trial % 3 == 0);
      const auto rho = partial_trace(s, modes);
      const auto proj = DensityOp::projector(s);
      CHECK(rho.basis() == proj.basis());
      CHECK((rho.matrix() - proj.matrix()).norm() < 1e-12);
    }
  }

  TEST_CASE("partial trace of a density operator composes") {
    Rng rng(6);
    const std::vector<ModeLabel> modes{A0, B0, ancilla(0)};
    const auto s = random_state(modes, rng, true);
    const std::array two{A0, B0};
    const std::array one{A0};
    const auto direct = partial_trace(s, one);
    const auto staged = partial_trace(partial_trace(s, two), one);
    CHECK((direct.matrix() - staged.matrix()).norm() < 1e-12);
  }

  TEST_CASE("measurement examples") {
    Rng rng(1);
    const std::vector<std::vector<ModeLabel>> ab{{A0}, {B0}, {}};
    for (int k = 0; k < 100; ++k) CHECK(measure(PureState::single(A0), ab, 2, rng).outcome == 0);
    const auto probs = outcome_probabilities(encode_bit(0), ab, 2);
    REQUIRE(probs.size() == 3);
    CHECK(std::abs(probs[0] - 0.5) < 1e-12);
    CHECK(std::abs(probs[1] - 0.5) < 1e-12);
    CHECK(std::abs(probs[2]) < 1e-12);
    const auto r = measure(encode_bit(1), ab, 2, rng);
    CHECK(std::abs(std::abs(r.collapsed.amplitude(r.outcome == 0 ? A0 : B0)) - 1.0) < 1e-12);
  }

  TEST_CASE("interferometer decodes each bit deterministically") {
    for (int tau : {0, 1, 4, 30}) {
      for (int b : {0, 1}) {
        const auto first = mode(Path::A, 0);
        const auto second = mode(Path::B, tau);
        const auto det0 = ancilla(0, tau);
        const auto det1 = ancilla(1, tau);
        auto s = encode_bit(b, first, second);
        s = apply(delay(first, tau), s);
        s = apply(beam_splitter_5050(mode(Path::A, tau), second, det0, det1), s);
        const auto p = outcome_probabilities(s, gvqkd::test::completed({{det0}, {det1}}, s), 2);
        CHECK(std::abs(p[static_cast<std::size_t>(b)] - 1.0) <= 1e-12);
        CHECK(std::abs(p[static_cast<std::size_t>(1 - b)]) <= 1e-12);
      }
    }
  }

  TEST_CASE("Born statistics over 1e5 samples") {
    Rng rng(2024);
    const double theta = 0.4;
    const auto s = gvqkd::test::superposition({A0, B0, ancilla(0)},
                                              {std::cos(theta) * kRt2, std::sin(theta), std::cos(theta) * kRt2});
    const std::vector<std::vector<ModeLabel>> proj{{A0}, {B0, ancilla(0)}, {}};
    const auto probs = outcome_probabilities(s, proj, 2);
    const int n = 100000;
    std::array<int, 3> counts{};
    for (int k = 0; k < n; ++k) ++counts[measure(s, proj, 2, rng).outcome];
    for (std::size_t o = 0; o < 3; ++o) {
      const double p = probs[o];
      const double se = std::sqrt(p * (1.0 - p) / n);
      CHECK(std::abs(counts[o] / double(n) - p) <= 3.0 * se + 1e-12);
    }
  }

  TEST_CASE("basis errors") {
    CHECK_THROWS_AS(ModeBasis({A0, A0}), BasisError);
    CHECK_THROWS_AS(beam_splitter_5050(A0, A0, B0, ancilla(0)), BasisError);
    VectorC v = VectorC::Zero(3);
    v(1) = 1.0;
    v(2) = 1.0;
    CHECK_THROWS(PureState(ModeBasis({A0, B0}), v));
  }
}
