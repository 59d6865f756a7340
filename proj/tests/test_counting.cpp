// Copyright 2026 The QLR Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "qlr/counting.hpp"
#include "qlr/fermion_operator.hpp"
#include "qlr/oracle.hpp"
#include "support/dense_models.hpp"

using namespace qlr;
namespace ts = testing_support;

namespace {

struct Model {
  int sites;
  QubitOperator h;
  ComplexMatrix hd;
  double e0;
  ComplexVector psi;
  QubitOperator omega;
};

Model hubbard_model(int L, double U, int n_up, int n_down, int site, Spin spin) {
  Model m{L, jordan_wigner(build_hubbard(L, 1.0, U, 0.0), L), {}, 0.0, {}, QubitOperator(2 * L)};
  m.hd = m.h.to_dense();
  std::tie(m.e0, m.psi) = sector_ground_state(m.h, L, n_up, n_down);
  m.omega = jordan_wigner(FermionOperator::create(site, spin), L);
  return m;
}

// Two qubits, H0 with eigenvalues -3, -1, 1, 3 in a rotated basis: every
// phase is a multiple of 1/8, so a 3-bit readout is exact.
struct ExactPhaseSetup {
  ComplexMatrix h0;
  ComplexVector psi;
  QubitOperator op;
};

ExactPhaseSetup exact_phase_setup() {
  std::srand(31);
  const ComplexMatrix v =
      Eigen::HouseholderQR<ComplexMatrix>(ComplexMatrix::Random(4, 4)).householderQ();
  RealVector ev(4);
  ev << -3.0, -1.0, 1.0, 3.0;
  ExactPhaseSetup s;
  s.h0 = v * ev.asDiagonal() * v.adjoint();
  s.psi = v.col(0);
  s.op = QubitOperator(2);
  s.op.add_term(PauliWord::parse("XI"), 0.5);
  s.op.add_term(PauliWord::parse("ZZ"), -0.3);
  s.op.add_term(PauliWord::parse("IY"), 0.2);
  return s;
}

double three_sigma(double p, double n) { return 3.0 * std::sqrt(p * (1.0 - p) / n) + 1e-12; }

// Monic recursion with b_k = beta_k^2, coefficient vectors in powers of x.
std::vector<std::vector<double>> monic(int n, const std::vector<double>& a,
                                       const std::vector<double>& b) {
  std::vector<std::vector<double>> p = {{1.0}};
  for (int k = 0; k < n; ++k) {
    std::vector<double> next(p[k].size() + 1, 0.0);
    for (std::size_t i = 0; i < p[k].size(); ++i) {
      next[i + 1] += p[k][i];
      next[i] -= a[k] * p[k][i];
    }
    if (k > 0) {
      for (std::size_t i = 0; i < p[k - 1].size(); ++i) next[i] -= b[k - 1] * p[k - 1][i];
    }
    p.push_back(next);
  }
  return p;
}

double hankel(const std::vector<double>& u, const std::vector<double>& v,
              const std::vector<double>& mu, int shift) {
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    for (std::size_t j = 0; j < v.size(); ++j) s += u[i] * v[j] * mu[i + j + shift];
  }
  return s;
}

ComplexMatrix dense_poly(const ComplexMatrix& h, const std::vector<double>& c) {
  ComplexMatrix out = ComplexMatrix::Zero(h.rows(), h.cols());
  ComplexMatrix pw = ComplexMatrix::Identity(h.rows(), h.cols());
  for (double ck : c) {
    out += ck * pw;
    pw = pw * h;
  }
  return out;
}

CountingSettings quick(std::int64_t shots, std::uint64_t seed) {
  CountingSettings s;
  s.shots = shots;
  s.seed = seed;
  s.d = 20;
  s.d_match = 20;
  return s;
}

}  // namespace

TEST(LanczosPolynomial, ThreeTermRecursion) {
  TridiagonalSpectrum s;
  s.push_alpha(0.5);
  s.push_alpha(-1.0);
  s.push_alpha(2.0);
  s.push_beta(0.7);
  s.push_beta(1.1);
  const std::vector<double> a = {0.5, -1.0, 2.0};
  const std::vector<double> b = {0.49, 1.21};
  const auto ref = monic(3, a, b);
  for (int n = 0; n <= 3; ++n) {
    const auto p = lanczos_polynomial(n, s);
    ASSERT_EQ(p.size(), ref[n].size());
    for (std::size_t k = 0; k < p.size(); ++k) EXPECT_NEAR(p[k], ref[n][k], 1e-14);
  }
  EXPECT_THROW(lanczos_polynomial(4, s), InvalidArgument);
}

TEST(BuildGn, BaseCaseIsOmega) {
  const Model m = hubbard_model(2, 4.0, 1, 1, 0, Spin::Up);
  const GnOperator g = build_gn(0, TridiagonalSpectrum{}, m.h, m.omega);
  EXPECT_LT((g.dense() - m.omega.to_dense()).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(BuildGn, CoefficientFreeLimitIsPower) {
  const Model m = hubbard_model(2, 4.0, 1, 1, 0, Spin::Up);
  TridiagonalSpectrum s;
  s.push_alpha(0.0);
  s.push_alpha(0.0);
  s.push_beta(0.0);
  const GnOperator g = build_gn(2, s, m.h, m.omega);
  const ComplexMatrix expect = m.hd * m.hd * m.omega.to_dense();
  EXPECT_LT((g.dense() - expect).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LT((g.lcu.reconstructed().to_dense() - expect).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(BuildGn, ClosedFormsAndRecursionVectors) {
  // the closed forms carry one scalar per level, b_k, which in the
  // residual-norm convention is beta_k^2
  for (const Model& m : {hubbard_model(2, 4.0, 1, 1, 0, Spin::Up),
                         hubbard_model(3, 4.0, 1, 1, 1, Spin::Down)}) {
    const ComplexVector start = m.omega.apply(m.psi);
    const auto run = lanczos_run(m.hd, start, 8);
    const auto& sp = run.spectrum;
    const int top = std::min<int>(4, static_cast<int>(sp.depth()) - 1);
    const ComplexMatrix id = ComplexMatrix::Identity(m.hd.rows(), m.hd.cols());
    const ComplexMatrix om = m.omega.to_dense();
    auto shifted = [&](int k) { return ComplexMatrix(m.hd - sp.alpha[k] * id); };
    auto b = [&](int k) { return sp.beta[k - 1] * sp.beta[k - 1]; };
    std::vector<ComplexMatrix> closed = {
        om,
        shifted(0) * om,
        (shifted(1) * shifted(0) - b(1) * id) * om,
        (shifted(2) * (shifted(1) * shifted(0) - b(1) * id) - b(2) * shifted(0)) * om,
    };
    double norm = run.start_norm;
    for (int n = 0; n <= top; ++n) {
      const GnOperator g = build_gn(n, sp.prefix(static_cast<std::size_t>(n)), m.h, m.omega);
      if (n < 4) {
        EXPECT_LT((g.dense() - closed[n]).cwiseAbs().maxCoeff(), 1e-10) << n;
      }
      if (n > 0) norm *= sp.beta[n - 1];
      const ComplexVector expect = norm * run.basis.col(n);
      EXPECT_LT((g.dense() * m.psi - expect).norm(), 1e-8) << "L=" << m.sites << " n=" << n;
    }
  }
}

TEST(BuildGn, RejectsMissingPrefix) {
  const Model m = hubbard_model(2, 4.0, 1, 1, 0, Spin::Up);
  TridiagonalSpectrum s;
  s.push_alpha(0.0);
  EXPECT_THROW(build_gn(2, s, m.h, m.omega), InvalidArgument);
}

TEST(CountedOperators, ExpectationsMatchDenseForms) {
  const Model m = hubbard_model(2, 4.0, 1, 1, 0, Spin::Up);
  const ComplexVector start = m.omega.apply(m.psi);
  const auto sp = classical_lanczos(m.hd, start, 6);
  const ComplexMatrix om = m.omega.to_dense();
  for (int n = 0; n < 3; ++n) {
    const auto pref = sp.prefix(static_cast<std::size_t>(n) + 1);
    const ComplexVector pn = dense_poly(m.hd, lanczos_polynomial(n, pref)) * om * m.psi;
    const Complex a = m.psi.dot(alpha_operator(n, pref, m.h, m.omega).apply(m.psi));
    EXPECT_NEAR(a.real(), pn.dot(m.hd * pn).real(), 1e-10);
    EXPECT_NEAR(a.imag(), 0.0, 1e-12);
    if (n == 0) continue;
    const ComplexVector pm = dense_poly(m.hd, lanczos_polynomial(n - 1, pref)) * om * m.psi;
    const Complex c = m.psi.dot(beta_operator(n, pref, m.h, m.omega).apply(m.psi));
    EXPECT_NEAR(c.real(), pn.squaredNorm(), 1e-10);
    EXPECT_NEAR(c.real(), pm.dot(m.hd * pn).real(), 1e-10);
  }
}

TEST(EnergyReference, ExactPhasesAcceptOnlyTheReferenceLevel) {
  const auto s = exact_phase_setup();
  const auto ref = EnergyReference::build(s.h0, -3.0, 3, 3);
  ASSERT_EQ(ref.accept_probability.size(), 4u);
  EXPECT_NEAR(ref.accept_probability[0], 1.0, 1e-12);
  for (int k = 1; k < 4; ++k) EXPECT_NEAR(ref.accept_probability[k], 0.0, 1e-12);
  EXPECT_THROW(EnergyReference::build(s.h0, -3.0, 3, 4), InvalidArgument);
}

TEST(CountingSetup, GapWindowAndDegeneracy) {
  const auto s = exact_phase_setup();
  const auto dec = normalize_and_shift(s.op);
  const auto report = check_counting_setup(EnergyReference::build(s.h0, -3.0, 3, 3), s.psi, dec);
  EXPECT_EQ(report.reachable_states, 4u);
  EXPECT_NEAR(report.gap, 2.0, 1e-12);
  EXPECT_LT(report.window, report.gap);
  // one matched bit cannot separate -3 from -1
  EXPECT_THROW(check_counting_setup(EnergyReference::build(s.h0, -3.0, 3, 1), s.psi, dec),
               InvalidArgument);
  // not an eigenstate
  EXPECT_THROW(check_counting_setup(EnergyReference::build(s.h0, -3.0, 3, 3),
                                    ts::random_state(4, 2), dec),
               InvalidArgument);
  // degenerate reference level
  ComplexMatrix flat = ComplexMatrix::Zero(4, 4);
  flat(2, 2) = flat(3, 3) = 1.0;
  ComplexVector e0 = ComplexVector::Zero(4);
  e0[0] = 1.0;
  EXPECT_THROW(check_counting_setup(EnergyReference::build(flat, 0.0, 3, 3), e0, dec),
               Unsupported);
}

TEST(CountingSetup, TwoSiteHubbardPassesAtDefaultWidth) {
  const Model m = hubbard_model(2, 4.0, 1, 1, 0, Spin::Up);
  const auto ref = EnergyReference::build(m.hd, m.e0, 20, 20);
  const auto op = alpha_operator(0, TridiagonalSpectrum{}, m.h, m.omega);
  const auto report = check_counting_setup(ref, m.psi, normalize_and_shift(op));
  EXPECT_LT(report.window, report.gap);
}

TEST(CountingRound, IdentityAlwaysAcceptsOnBothBackends) {
  const auto s = exact_phase_setup();
  const auto ref = EnergyReference::build(s.h0, -3.0, 3, 3);
  const auto dec = normalize_and_shift(QubitOperator::identity(2));
  for (auto backend : {CountingBackend::Compressed, CountingBackend::FullRegister}) {
    auto c = make_counter(backend, dec, ref, s.psi, s.psi);
    RandomStream rng(3);
    const auto tally = run_shots(*c, 200, 20, rng, "id", nullptr);
    EXPECT_EQ(tally.accepts, 200);
    EXPECT_EQ(tally.rejects, 0);
    EXPECT_NEAR(fidelity(c->system_state(), s.psi), 1.0, 1e-12);
  }
}

TEST(CountingRound, FullRegisterReadsSystemWithSpreadPhase) {
  // a reference energy off the phase grid leaves E in a superposition
  auto s = exact_phase_setup();
  const ComplexMatrix v = s.h0;
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(v);
  RealVector ev(4);
  ev << -2.7, -1.0, 1.0, 3.0;
  const ComplexMatrix h0 = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
  const ComplexVector psi = es.eigenvectors().col(0);
  const auto ref = EnergyReference::build(h0, -2.7, 3, 3);
  const auto dec = normalize_and_shift(QubitOperator::identity(2));
  auto c = make_counter(CountingBackend::FullRegister, dec, ref, psi, psi);
  RandomStream rng(5);
  run_shots(*c, 20, 20, rng, "id", nullptr);
  EXPECT_NEAR(fidelity(c->system_state(), psi), 1.0, 1e-12);
}

TEST(CountingRound, OrthogonalImageNeverAccepts) {
  // diagonal H0 so that X on qubit 0 maps the reference into another level
  ComplexMatrix h0 = ComplexMatrix::Zero(4, 4);
  h0.diagonal() << -3.0, -1.0, 1.0, 3.0;
  ComplexVector e0 = ComplexVector::Zero(4);
  e0[0] = 1.0;
  const auto ref = EnergyReference::build(h0, -3.0, 3, 3);
  QubitOperator x(2);
  x.add_term(PauliWord::parse("XI"), 1.0);
  const auto dec = lcu_decompose(x);
  for (auto backend : {CountingBackend::Compressed, CountingBackend::FullRegister}) {
    auto c = make_counter(backend, dec, ref, e0, e0);
    RandomStream rng(4);
    const auto tally = run_shots(*c, 100, 20, rng, "x", nullptr);
    EXPECT_EQ(tally.accepts, 0);
    EXPECT_EQ(tally.rejects + tally.aborted, 100);
  }
}

TEST(CountingRound, EigenstateAcceptanceDecodesToEnergy) {
  const auto s = exact_phase_setup();
  const auto ref = EnergyReference::build(s.h0, -3.0, 3, 3);
  QubitOperator h(2);
  // any Hermitian operator with psi as eigenvector: the projector-weighted H0
  const ComplexMatrix target = s.h0;
  for (const char* w : {"II", "XI", "YI", "ZI", "IX", "IY", "IZ", "XX", "XY", "XZ", "YX",
                        "YY", "YZ", "ZX", "ZY", "ZZ"}) {
    const Complex c = (ts::pauli_string(w).adjoint() * target).trace() / 4.0;
    h.add_term(PauliWord::parse(w), c);
  }
  const auto dec = normalize_and_shift(h);
  const double p = std::pow((-3.0 + dec.shift) / dec.scale, 2);
  auto c = make_counter(CountingBackend::Compressed, dec, ref, s.psi, s.psi);
  RandomStream rng(5);
  const int shots = 20000;
  const auto tally = run_shots(*c, shots, 50, rng, "h", nullptr);
  EXPECT_NEAR(tally.frequency(), p, three_sigma(p, tally.shots));
  const auto e = decode(tally, dec.scale, dec.shift);
  EXPECT_NEAR(e.expectation, -3.0, 3.0 * e.expectation_stderr + 1e-12);
}

TEST(CountingRound, BackendsAgreeOnExactPhases) {
  const auto s = exact_phase_setup();
  const auto dec = normalize_and_shift(s.op);
  const double amp = s.psi.dot(dec.encoded_dense() * s.psi).real();
  const double p = amp * amp;
  for (int d_match : {3, 2}) {
    const auto ref = EnergyReference::build(s.h0, -3.0, 3, d_match);
    double freq[2];
    int i = 0;
    for (auto backend : {CountingBackend::Compressed, CountingBackend::FullRegister}) {
      auto c = make_counter(backend, dec, ref, s.psi, s.psi);
      RandomStream rng(100 + static_cast<std::uint64_t>(i));
      const auto tally = run_shots(*c, 4000, 50, rng, "op", nullptr);
      EXPECT_EQ(tally.aborted, 0);
      EXPECT_NEAR(tally.frequency(), p, three_sigma(p, tally.shots)) << to_string(backend);
      EXPECT_NEAR(fidelity(c->system_state(), s.psi), 1.0, 1e-9) << to_string(backend);
      freq[i++] = tally.frequency();
    }
    EXPECT_NEAR(freq[0], freq[1], std::sqrt(2.0) * three_sigma(p, 4000));
  }
}

TEST(Recovery, FirstStepFollowsTwoByTwoBlock) {
  const auto s = exact_phase_setup();
  const auto dec = normalize_and_shift(s.op);
  const double amp = s.psi.dot(dec.encoded_dense() * s.psi).real();
  const double p = amp * amp;
  const auto ref = EnergyReference::build(s.h0, -3.0, 3, 3);
  auto c = make_counter(CountingBackend::Compressed, dec, ref, s.psi, s.psi);
  RandomStream rng(7);
  const auto tally = run_shots(*c, 40000, 50, rng, "op", nullptr);
  ASSERT_GT(tally.rejects, 1000);
  const double first = static_cast<double>(tally.recovery_steps[1]) / tally.rejects;
  EXPECT_NEAR(first, 1.0 - p, three_sigma(1.0 - p, tally.rejects));
  EXPECT_EQ(std::accumulate(tally.recovery_steps.begin(), tally.recovery_steps.end(),
                            std::int64_t{0}),
            tally.rejects);
}

TEST(Recovery, SurvivalIsGeometricInTheAcceptance) {
  // each step fails with the acceptance probability itself
  const auto s = exact_phase_setup();
  const auto dec = normalize_and_shift(s.op);
  const double amp = s.psi.dot(dec.encoded_dense() * s.psi).real();
  const double p = amp * amp;
  const auto ref = EnergyReference::build(s.h0, -3.0, 3, 3);
  auto c = make_counter(CountingBackend::Compressed, dec, ref, s.psi, s.psi);
  RandomStream rng(8);
  const auto tally = run_shots(*c, 40000, 50, rng, "op", nullptr);
  std::int64_t alive = tally.rejects + tally.aborted;
  for (int k = 1; k <= 3; ++k) {
    const double before = static_cast<double>(alive);
    alive -= tally.recovery_steps[static_cast<std::size_t>(k)];
    EXPECT_NEAR(alive / before, p, three_sigma(p, before)) << "k=" << k;
  }
}

TEST(Recovery, SurvivalRespectsBoundFromTheThirdStep) {
  // with acceptance near 1/4 the first two steps sit above the bound; see
  // the acceptance suite for the full table
  const Model m = hubbard_model(2, 4.0, 1, 1, 0, Spin::Up);
  const auto ref = EnergyReference::build(m.hd, m.e0, 20, 20);
  const auto dec = normalize_and_shift(alpha_operator(0, TridiagonalSpectrum{}, m.h, m.omega));
  auto c = make_counter(CountingBackend::Compressed, dec, ref, m.psi, m.psi);
  RandomStream rng(8);
  const auto tally = run_shots(*c, 40000, 50, rng, "a0", nullptr);
  ASSERT_GT(tally.rejects, 5000);
  std::int64_t alive = tally.rejects + tally.aborted;
  const double total = static_cast<double>(alive);
  for (int k = 1; k <= 20; ++k) {
    alive -= tally.recovery_steps[static_cast<std::size_t>(k)];
    if (k < 3) continue;
    const double frac = alive / total;
    const double bound = 1.0 / (2.0 * std::exp(1.0) * (k + 1));
    EXPECT_LE(frac, bound + three_sigma(bound, total)) << "k=" << k;
  }
}

TEST(Recovery, FullRegisterLoopRestoresRegisters) {
  const auto s = exact_phase_setup();
  const auto dec = normalize_and_shift(s.op);
  const LcuCircuit circuit(dec);
  const RegisterLayout layout{2, 3, circuit.ancilla_qubits()};
  ComplexMatrix phase = (s.h0 + 3.0 * ComplexMatrix::Identity(4, 4)) / 8.0;
  const PhaseEstimator est(phase, 3);
  ComplexVector full = ComplexVector::Zero(Eigen::Index{1} << layout.total_qubits());
  full.head(4) = s.psi;
  StateVector state(layout.total_qubits(), full);
  qpe(state, layout, est, EnergyRegister::E);
  RandomStream rng(9);
  int rejected = 0;
  for (int shot = 0; shot < 200; ++shot) {
    if (!counting_round(state, circuit, layout, est, 3, rng)) {
      ++rejected;
      const auto used = recover(state, circuit, layout, est, 3, rng, 50);
      ASSERT_TRUE(used.has_value());
      EXPECT_GE(*used, 1);
    }
    EXPECT_NEAR(state.norm_squared(), 1.0, 1e-9);
  }
  EXPECT_GT(rejected, 0);
  EXPECT_NEAR(fidelity(state.slice(2, 0), s.psi), 1.0, 1e-9);
}

TEST(Tally, InvariantsAndMerge) {
  const auto s = exact_phase_setup();
  const auto dec = normalize_and_shift(s.op);
  const auto ref = EnergyReference::build(s.h0, -3.0, 3, 3);
  auto c = make_counter(CountingBackend::Compressed, dec, ref, s.psi, s.psi);
  RandomStream rng(10);
  std::vector<ShotRecord> trace;
  const auto a = run_shots(*c, 500, 50, rng, "op", &trace);
  const auto b = run_shots(*c, 300, 50, rng, "op", &trace);
  EXPECT_EQ(a.accepts + a.rejects, a.shots);
  EXPECT_EQ(a.shots + a.aborted, 500);
  CountingTally m = a;
  m.merge(b);
  EXPECT_EQ(m.accepts, a.accepts + b.accepts);
  EXPECT_EQ(m.shots, a.shots + b.shots);
  EXPECT_EQ(trace.size(), 800u);
  std::ostringstream os;
  write_trace(os, trace);
  EXPECT_EQ(os.str().substr(0, os.str().find('\n')), "label,shot,accepted,recovery_steps,aborted");
  EXPECT_THROW(run_shots(*c, 0, 50, rng, "op", nullptr), InvalidArgument);
}

TEST(Decode, SquareRootRuleAndBinomialError) {
  CountingTally t;
  t.accepts = 2500;
  t.rejects = 7500;
  t.shots = 10000;
  const auto e = decode(t, 4.0, 1.0);
  EXPECT_DOUBLE_EQ(e.raw_frequency, 0.25);
  EXPECT_DOUBLE_EQ(e.expectation, 4.0 * 0.5 - 1.0);
  EXPECT_DOUBLE_EQ(e.expectation_stderr, 4.0 * std::sqrt(0.75 / 40000.0));
  const auto again = decode(t, 4.0, 1.0);
  EXPECT_EQ(again.expectation, e.expectation);
  EXPECT_THROW(decode(CountingTally{}, 1.0, 0.0), Error);
}

TEST(LanczosCounter, AlphaZeroOfEigenstateIsItsEnergy) {
  const Model m = hubbard_model(2, 4.0, 1, 1, 0, Spin::Up);
  const auto ref = EnergyReference::build(m.hd, m.e0, 20, 20);
  LanczosCounter counter(m.h, QubitOperator::identity(4), m.psi, ref, quick(20000, 3));
  const auto e = counter.count_alpha(0, TridiagonalSpectrum{}, 1.0);
  EXPECT_NEAR(e.value, m.e0, 3.0 * e.stderr + 1e-12);
  TridiagonalSpectrum pre;
  pre.push_alpha(m.e0);
  const auto b = counter.count_beta(1, pre, 1.0);
  EXPECT_NEAR(b.value, 0.0, 3.0 * b.stderr + 1e-12);
  EXPECT_NEAR(fidelity(counter.system_state(), m.psi), 1.0, 1e-9);
}

TEST(LanczosCounter, ZeroHamiltonianGivesZeroAlpha) {
  const Model m = hubbard_model(2, 4.0, 1, 1, 0, Spin::Up);
  const auto ref = EnergyReference::build(m.hd, m.e0, 20, 20);
  // only an identity part, which centering removes
  LanczosCounter counter(QubitOperator::identity(4, 0.0), m.omega, m.psi, ref, quick(2000, 4));
  EXPECT_DOUBLE_EQ(counter.hamiltonian_offset(), 0.0);
  const auto e = counter.count_alpha(0, TridiagonalSpectrum{}, 0.5);
  EXPECT_DOUBLE_EQ(e.value, 0.0);
}

TEST(LanczosCounter, CountedCoefficientsMatchOracle) {
  const Model m = hubbard_model(2, 4.0, 1, 1, 0, Spin::Up);
  const auto oracle = classical_lanczos(m.hd, m.omega.apply(m.psi), 8);
  const auto ref = EnergyReference::build(m.hd, m.e0, 20, 20);
  LanczosCounter counter(m.h, m.omega, m.psi, ref, quick(20000, 5));
  const auto run = counter.run(2, 1e-8);
  ASSERT_EQ(run.spectrum.depth(), 2u);
  EXPECT_EQ(run.stop_reason, "depth");
  for (std::size_t n = 0; n < 2; ++n) {
    EXPECT_NEAR(run.spectrum.alpha[n], oracle.alpha[n], 3.0 * run.spectrum.alpha_stderr[n]) << n;
    EXPECT_EQ(run.spectrum.alpha_provenance[n], Provenance::Counted);
  }
  EXPECT_NEAR(run.spectrum.beta[0], oracle.beta[0], 3.0 * run.spectrum.beta_stderr[0]);
  EXPECT_NEAR(run.norm0, m.omega.apply(m.psi).squaredNorm(), 3.0 * run.norm0_stderr);
  EXPECT_EQ(run.raw.size(), 4u);
  EXPECT_NEAR(fidelity(counter.system_state(), m.psi), 1.0, 1e-9);
}

TEST(LanczosCounter, RejectsMismatchedInputs) {
  const Model m = hubbard_model(2, 4.0, 1, 1, 0, Spin::Up);
  const auto ref = EnergyReference::build(m.hd, m.e0, 20, 20);
  EXPECT_THROW(LanczosCounter(m.h, QubitOperator::identity(3), m.psi, ref, quick(10, 1)),
               InvalidArgument);
  EXPECT_THROW(LanczosCounter(m.h, m.omega, 2.0 * m.psi, ref, quick(10, 1)), InvalidArgument);
  LanczosCounter counter(m.h, m.omega, m.psi, ref, quick(10, 1));
  EXPECT_THROW(counter.run(0, 1e-8), InvalidArgument);
}

TEST(CountOverlap, NumberOperatorAndHopping) {
  const Model m = hubbard_model(2, 4.0, 1, 1, 0, Spin::Up);
  const auto ref = EnergyReference::build(m.hd, m.e0, 20, 20);
  LanczosCounter counter(m.h, QubitOperator::identity(4), m.psi, ref, quick(20000, 6));
  const auto c0 = FermionOperator::annihilate(0, Spin::Up);
  const auto c1 = FermionOperator::annihilate(1, Spin::Up);
  for (const auto& op : {FermionOperator::create(0, Spin::Up) * c0,
                         FermionOperator::create(1, Spin::Up) * c0,
                         FermionOperator::create(0, Spin::Up) * c1}) {
    const QubitOperator q = jordan_wigner(op, 2);
    const Complex exact = m.psi.dot(q.apply(m.psi));
    const auto est = count_overlap(counter, q);
    EXPECT_NEAR(est.value.real(), exact.real(), 3.0 * est.stderr_re + 1e-12);
    EXPECT_NEAR(est.value.imag(), exact.imag(), 3.0 * est.stderr_im + 1e-12);
  }
  const Complex n0 = m.psi.dot(jordan_wigner(FermionOperator::number(0, Spin::Up), 2).apply(m.psi));
  EXPECT_GE(n0.real(), 0.0);
  EXPECT_LE(n0.real(), 1.0);
  EXPECT_NEAR(fidelity(counter.system_state(), m.psi), 1.0, 1e-9);
}

TEST(CountOverlap, VacuumHasNoOccupation) {
  const QubitOperator h = jordan_wigner(build_hubbard(2, 1.0, 4.0, 0.0), 2);
  ComplexVector vac = ComplexVector::Zero(16);
  vac[0] = 1.0;
  const auto ref = EnergyReference::build(h.to_dense(), 0.0, 20, 20);
  LanczosCounter counter(h, QubitOperator::identity(4), vac, ref, quick(2000, 7));
  const auto est =
      count_overlap(counter, jordan_wigner(FermionOperator::number(1, Spin::Down), 2));
  EXPECT_NEAR(est.value.real(), 0.0, 3.0 * est.stderr_re + 1e-12);
  EXPECT_NEAR(est.value.imag(), 0.0, 1e-12);
}

TEST(Moments, RecoveredFromExactRawValues) {
  const Model m = hubbard_model(2, 4.0, 1, 1, 0, Spin::Up);
  const ComplexVector start = m.omega.apply(m.psi);
  std::vector<double> mu;
  ComplexVector w = start;
  for (int k = 0; k < 7; ++k) {
    mu.push_back(start.dot(w).real());
    w = m.hd * w;
  }
  const auto sp = classical_lanczos(m.hd, start, 3);
  std::vector<double> a(sp.alpha), b = sp.beta_sq();
  const auto p = monic(3, a, b);
  std::vector<double> raw = {mu[0]};
  for (int n = 0; n < 3; ++n) {
    if (n > 0) raw.push_back(hankel(p[n - 1], p[n], mu, 1));
    raw.push_back(hankel(p[n], p[n], mu, 1));
  }
  const auto got = moments_from_raw(raw);
  ASSERT_EQ(got.size(), raw.size());
  for (std::size_t k = 0; k < got.size(); ++k) EXPECT_NEAR(got[k], mu[k], 1e-9 * std::abs(mu[k]) + 1e-12);
}

TEST(PropagateErrors, MatchesMonteCarloOfSequentialEstimation) {
  // moments of a small spectral measure; the raw sequence is generated the
  // way the counter does it: each raw value uses polynomials built from the
  // previously estimated values
  const std::vector<double> nodes = {-1.3, -0.2, 0.6, 1.9};
  const std::vector<double> weights = {0.3, 0.2, 0.35, 0.15};
  std::vector<double> mu(8, 0.0);
  for (std::size_t k = 0; k < mu.size(); ++k) {
    for (std::size_t i = 0; i < nodes.size(); ++i) mu[k] += weights[i] * std::pow(nodes[i], k);
  }
  const std::size_t count = 6;  // c0 a0 c1 a1 c2 a2
  auto simulate = [&](const std::vector<double>& noise) {
    std::vector<double> raw = {mu[0] + noise[0]};
    for (std::size_t k = 1; k < count; ++k) {
      std::vector<double> a, b;
      for (std::size_t j = 1; j < k; ++j) {
        if (j % 2 == 1) a.push_back(raw[j] / raw[j - 1]);
        else b.push_back(raw[j] / raw[j - 2]);
      }
      const int n = static_cast<int>(k / 2);
      const auto p = monic(n, a, b);
      const double exact = k % 2 == 1 ? hankel(p[n], p[n], mu, 1) : hankel(p[n - 1], p[n], mu, 1);
      raw.push_back(exact + noise[k]);
    }
    return raw;
  };
  const std::vector<double> clean = simulate(std::vector<double>(count, 0.0));
  std::vector<double> sigma(count);
  for (std::size_t k = 0; k < count; ++k) sigma[k] = 2e-4 * std::max(std::abs(clean[k]), 0.05);
  const auto [alpha_se, beta_se] = propagate_errors(clean, sigma);
  ASSERT_EQ(alpha_se.size(), 3u);
  ASSERT_EQ(beta_se.size(), 2u);

  std::mt19937_64 gen(12);
  std::normal_distribution<double> normal;
  const int reps = 4000;
  std::vector<double> sa(3, 0.0), sa2(3, 0.0), sb(2, 0.0), sb2(2, 0.0);
  for (int r = 0; r < reps; ++r) {
    std::vector<double> noise(count);
    for (std::size_t k = 0; k < count; ++k) noise[k] = sigma[k] * normal(gen);
    const auto raw = simulate(noise);
    for (std::size_t n = 0; n < 3; ++n) {
      const double a = raw[2 * n + 1] / raw[2 * n];
      sa[n] += a;
      sa2[n] += a * a;
    }
    for (std::size_t n = 1; n < 3; ++n) {
      const double b = std::sqrt(raw[2 * n] / raw[2 * n - 2]);
      sb[n - 1] += b;
      sb2[n - 1] += b * b;
    }
  }
  auto sd = [&](double s, double s2) { return std::sqrt(s2 / reps - (s / reps) * (s / reps)); };
  // 4000 replicates give the sample deviation to about 2.2%
  for (std::size_t n = 0; n < 3; ++n) {
    EXPECT_NEAR(sd(sa[n], sa2[n]) / alpha_se[n], 1.0, 0.08) << "alpha " << n;
  }
  for (std::size_t n = 0; n < 2; ++n) {
    EXPECT_NEAR(sd(sb[n], sb2[n]) / beta_se[n], 1.0, 0.08) << "beta " << n + 1;
  }
  EXPECT_THROW(propagate_errors(clean, std::vector<double>(2, 0.0)), InvalidArgument);
}
