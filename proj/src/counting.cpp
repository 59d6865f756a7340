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

#include "qlr/counting.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <set>

#include <Eigen/Eigenvalues>

namespace qlr {

namespace {

std::vector<double> poly_mul(const std::vector<double>& a,
                             const std::vector<double>& b) {
  if (a.empty() || b.empty()) return {};
  std::vector<double> out(a.size() + b.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
  }
  return out;
}

std::vector<double> shift_up(const std::vector<double>& p) {
  std::vector<double> out(p.size() + 1, 0.0);
  std::copy(p.begin(), p.end(), out.begin() + 1);
  return out;
}

double coefficient_weight(const QubitOperator& op) {
  double w = 0.0;
  for (const auto& [word, c] : op.terms()) w += std::abs(c);
  return w;
}

QubitOperator prune_relative(const QubitOperator& op) {
  return op.pruned(1e-14 * std::max(1.0, coefficient_weight(op)));
}

// Monic polynomials p_0..p_n from alpha and b = beta^2.
std::vector<std::vector<double>> monic_family(int n, const std::vector<double>& alpha,
                                              const std::vector<double>& b) {
  std::vector<std::vector<double>> p;
  p.push_back({1.0});
  for (int k = 0; k < n; ++k) {
    std::vector<double> next = shift_up(p.back());
    for (std::size_t i = 0; i < p.back().size(); ++i) {
      next[i] -= alpha[static_cast<std::size_t>(k)] * p.back()[i];
    }
    if (k > 0) {
      const auto& prev = p[static_cast<std::size_t>(k - 1)];
      for (std::size_t i = 0; i < prev.size(); ++i) {
        next[i] -= b[static_cast<std::size_t>(k - 1)] * prev[i];
      }
    }
    p.push_back(std::move(next));
  }
  return p;
}

void require_prefix(int n, const TridiagonalSpectrum& prefix) {
  if (n < 0) throw InvalidArgument("negative recursion index");
  if (static_cast<int>(prefix.alpha.size()) < n ||
      static_cast<int>(prefix.beta.size()) < std::max(n - 1, 0)) {
    throw InvalidArgument("spectrum prefix is missing coefficients for G_n");
  }
}

}  // namespace

std::vector<double> lanczos_polynomial(int n, const TridiagonalSpectrum& prefix) {
  require_prefix(n, prefix);
  return monic_family(n, prefix.alpha, prefix.beta_sq()).back();
}

GnOperator build_gn(int n, const TridiagonalSpectrum& prefix,
                    const QubitOperator& hamiltonian, const QubitOperator& omega) {
  GnOperator g;
  g.n = n;
  g.polynomial = lanczos_polynomial(n, prefix);
  g.hamiltonian = hamiltonian;
  g.omega = omega;
  const auto h_powers = powers(hamiltonian, n);
  g.compiled = prune_relative(polynomial(h_powers, g.polynomial) * omega);
  g.lcu = lcu_decompose(g.compiled);
  return g;
}

QubitOperator sandwich(const QubitOperator& omega, const QubitOperator& hamiltonian,
                       const std::vector<double>& q) {
  const auto h_powers = powers(hamiltonian, static_cast<int>(q.size()) - 1);
  const QubitOperator inner = polynomial(h_powers, q);
  return prune_relative(omega.adjoint() * inner * omega);
}

QubitOperator alpha_operator(int n, const TridiagonalSpectrum& prefix,
                             const QubitOperator& hamiltonian,
                             const QubitOperator& omega) {
  const auto p = lanczos_polynomial(n, prefix);
  return sandwich(omega, hamiltonian, poly_mul(p, shift_up(p)));
}

QubitOperator beta_operator(int n, const TridiagonalSpectrum& prefix,
                            const QubitOperator& hamiltonian,
                            const QubitOperator& omega) {
  if (n < 1) throw InvalidArgument("beta_n needs n >= 1");
  require_prefix(n, prefix);
  const auto family = monic_family(n, prefix.alpha, prefix.beta_sq());
  return sandwich(omega, hamiltonian,
                  poly_mul(family[static_cast<std::size_t>(n - 1)],
                           shift_up(family[static_cast<std::size_t>(n)])));
}

EnergyReference EnergyReference::build(const ComplexMatrix& h0, double energy,
                                       int d, int d_match) {
  if (d_match < 1 || d_match > d) throw InvalidArgument("d_match must be in [1, d]");
  if (d - d_match > 20) throw Unsupported("too many ignored readout bits");
  if (!is_hermitian(h0)) throw InvalidArgument("QPE Hamiltonian is not Hermitian");
  EnergyReference ref;
  ref.h0 = h0;
  ref.energy = energy;
  ref.d = d;
  ref.d_match = d_match;
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(h0);
  ref.eigenvectors = solver.eigenvectors();
  const RealVector& ev = solver.eigenvalues();
  ref.eigenvalues.assign(ev.data(), ev.data() + ev.size());
  const double lo = std::min(ev.minCoeff(), energy);
  const double hi = std::max(ev.maxCoeff(), energy);
  ref.scaling = PhaseScaling::fit(energy, lo, hi, d);

  const int ignored = d - d_match;
  const auto x_ref = static_cast<std::uint64_t>(ref.scaling.reference_index);
  const std::uint64_t head = (x_ref >> ignored) << ignored;
  for (double lambda : ref.eigenvalues) {
    const double phase = ref.scaling.phase(lambda);
    double p = 0.0;
    for (std::uint64_t r = 0; r < (std::uint64_t{1} << ignored); ++r) {
      p += std::norm(PhaseEstimator::amplitude(phase, d, head | r, 0));
    }
    ref.accept_probability.push_back(std::min(p, 1.0));
  }
  return ref;
}

SetupReport check_counting_setup(const EnergyReference& ref,
                                 const ComplexVector& psi,
                                 const LcuDecomposition& dec) {
  const Eigen::Index dim = ref.h0.rows();
  if (psi.size() != dim) throw InvalidArgument("state does not match QPE Hamiltonian");
  const double scale = std::max(1.0, std::abs(ref.energy));
  if ((ref.h0 * psi - ref.energy * psi).norm() > 1e-8 * scale) {
    throw InvalidArgument("reference state is not an eigenstate of H0 at energy E");
  }

  std::vector<char> seen(static_cast<std::size_t>(dim), 0);
  std::vector<std::uint64_t> frontier;
  for (Eigen::Index b = 0; b < dim; ++b) {
    if (std::abs(psi[b]) > 1e-14) {
      seen[static_cast<std::size_t>(b)] = 1;
      frontier.push_back(static_cast<std::uint64_t>(b));
    }
  }
  while (!frontier.empty()) {
    const std::uint64_t b = frontier.back();
    frontier.pop_back();
    for (const auto& w : dec.words) {
      const std::uint64_t c = b ^ w.x;
      if (c < static_cast<std::uint64_t>(dim) && !seen[c]) {
        seen[c] = 1;
        frontier.push_back(c);
      }
    }
  }
  std::vector<Eigen::Index> reachable;
  for (Eigen::Index b = 0; b < dim; ++b) {
    if (seen[static_cast<std::size_t>(b)]) reachable.push_back(b);
  }

  SetupReport report;
  report.reachable_states = reachable.size();
  report.window = ref.scaling.window(ref.d_match);
  report.gap = std::numeric_limits<double>::infinity();
  std::vector<ComplexVector> level;
  for (std::size_t k = 0; k < ref.eigenvalues.size(); ++k) {
    ComplexVector restricted(static_cast<Eigen::Index>(reachable.size()));
    for (std::size_t r = 0; r < reachable.size(); ++r) {
      restricted[static_cast<Eigen::Index>(r)] =
          ref.eigenvectors(reachable[r], static_cast<Eigen::Index>(k));
    }
    if (restricted.squaredNorm() < 1e-20) continue;
    const double dist = std::abs(ref.eigenvalues[k] - ref.energy);
    if (dist <= 1e-9 * scale) {
      level.push_back(restricted);
    } else {
      report.gap = std::min(report.gap, dist);
    }
  }
  if (!level.empty()) {
    ComplexMatrix m(level.front().size(), static_cast<Eigen::Index>(level.size()));
    for (std::size_t c = 0; c < level.size(); ++c) m.col(static_cast<Eigen::Index>(c)) = level[c];
    Eigen::ColPivHouseholderQR<ComplexMatrix> qr(m);
    qr.setThreshold(1e-8);
    if (qr.rank() > 1) {
      throw Unsupported(
          "reference energy is degenerate on the reachable states; ensemble "
          "averaging over degenerate levels is not implemented");
    }
  }
  if (!(report.gap > report.window)) {
    throw InvalidArgument(
        "accepted energy window is not smaller than the gap to the next level; "
        "increase d_match");
  }
  return report;
}

CountingBackend parse_backend(const std::string& text) {
  if (text == "compressed") return CountingBackend::Compressed;
  if (text == "full" || text == "full-register") return CountingBackend::FullRegister;
  throw InvalidArgument("unknown counting backend '" + text + "'");
}

const char* to_string(CountingBackend b) {
  return b == CountingBackend::Compressed ? "compressed" : "full-register";
}

bool energy_check(StateVector& state, const RegisterLayout& layout,
                  const PhaseEstimator& est, int d_match, RandomStream& rng) {
  qpe(state, layout, est, EnergyRegister::EPrime);
  const int d = layout.d;
  const int e_off = layout.e_offset();
  const int ep_off = layout.e_prime_offset();
  const int a_off = layout.ancilla_offset();
  const std::uint64_t dmask = (std::uint64_t{1} << d) - 1;
  const std::uint64_t amask = (std::uint64_t{1} << layout.n_ancilla) - 1;
  state.flip_where(layout.pointer(), [&](std::uint64_t i) {
    const bool mismatch =
        !readouts_match((i >> e_off) & dmask, (i >> ep_off) & dmask, d, d_match);
    return mismatch || ((i >> a_off) & amask) != 0;
  });
  const int bit = state.measure(layout.pointer(), rng);
  inverse_qpe(state, layout, est, EnergyRegister::EPrime);
  if (bit == 1) state.flip_where(layout.pointer(), [](std::uint64_t) { return true; });
  return bit == 0;
}

bool counting_round(StateVector& state, const LcuCircuit& circuit,
                    const RegisterLayout& layout, const PhaseEstimator& est,
                    int d_match, RandomStream& rng) {
  if (state.probability_zero(layout.ancilla_offset(), layout.n_ancilla) < 1.0 - 1e-12 ||
      state.probability_one(layout.pointer()) > 1e-12) {
    throw InvalidArgument("ancillas or pointer are not reset");
  }
  circuit.apply(state, 0, layout.ancilla_offset());
  return energy_check(state, layout, est, d_match, rng);
}

std::optional<int> recover(StateVector& state, const LcuCircuit& circuit,
                           const RegisterLayout& layout, const PhaseEstimator& est,
                           int d_match, RandomStream& rng, int k_max) {
  for (int k = 1; k <= k_max; ++k) {
    if (k % 2 == 1) {
      circuit.apply_adjoint(state, 0, layout.ancilla_offset());
    } else {
      circuit.apply(state, 0, layout.ancilla_offset());
    }
    if (energy_check(state, layout, est, d_match, rng)) return k;
  }
  return std::nullopt;
}

namespace {

ComplexVector padded(const ComplexVector& system, int extra_qubits) {
  ComplexVector v = ComplexVector::Zero(system.size() << extra_qubits);
  v.head(system.size()) = system;
  return v;
}

class CompressedCounter final : public Counter {
 public:
  CompressedCounter(const LcuDecomposition& dec, const EnergyReference& ref,
                    const ComplexVector& psi, const ComplexVector& reference)
      : circuit_(dec),
        ref_(ref),
        n_system_(dec.n_qubits),
        reference_(reference),
        state_(dec.n_qubits + circuit_.ancilla_qubits(),
               padded(psi.normalized(), circuit_.ancilla_qubits())) {
    const auto m = static_cast<Eigen::Index>(ref.accept_probability.size());
    accept_ = RealVector(m);
    for (Eigen::Index k = 0; k < m; ++k) {
      accept_[k] = ref.accept_probability[static_cast<std::size_t>(k)];
    }
  }

  bool round(RandomStream& rng) override {
    circuit_.apply(state_, 0, n_system_);
    return check(rng);
  }

  bool recovery_step(int k, RandomStream& rng) override {
    if (k % 2 == 1) {
      circuit_.apply_adjoint(state_, 0, n_system_);
    } else {
      circuit_.apply(state_, 0, n_system_);
    }
    return check(rng);
  }

  void reprepare() override {
    state_ = StateVector(state_.n_qubits(),
                         padded(reference_.normalized(), circuit_.ancilla_qubits()));
  }

  ComplexVector system_state() const override {
    const Eigen::Index sys = Eigen::Index{1} << n_system_;
    const ComplexVector& amps = state_.amplitudes();
    if (amps.tail(amps.size() - sys).squaredNorm() > 1e-10) {
      throw Error("ancillas are not reset; system state is entangled");
    }
    return amps.head(sys).normalized();
  }

 private:
  // QPE into E', comparator, pointer measurement and QPE^dagger, applied as
  // the equivalent two-outcome instrument in the H0 eigenbasis. The
  // residual E' amplitude left by off-grid phases is dropped.
  bool check(RandomStream& rng) {
    const Eigen::Index sys = Eigen::Index{1} << n_system_;
    ComplexVector amps = state_.amplitudes();
    const ComplexVector coeffs = ref_.eigenvectors.adjoint() * amps.head(sys);
    double p_accept = 0.0;
    for (Eigen::Index k = 0; k < coeffs.size(); ++k) {
      p_accept += std::norm(coeffs[k]) * accept_[k];
    }
    const bool accept = rng.uniform() < p_accept;
    if (accept) {
      ComplexVector kept = coeffs.cwiseProduct(accept_.cast<Complex>());
      amps.setZero();
      amps.head(sys) = ref_.eigenvectors * kept;
    } else {
      ComplexVector kept =
          coeffs.cwiseProduct((RealVector::Ones(coeffs.size()) - accept_).cast<Complex>());
      amps.head(sys) = ref_.eigenvectors * kept;
    }
    amps.normalize();
    state_ = StateVector(state_.n_qubits(), std::move(amps));
    return accept;
  }

  LcuCircuit circuit_;
  const EnergyReference& ref_;
  int n_system_;
  ComplexVector reference_;
  StateVector state_;
  RealVector accept_;
};

class FullRegisterCounter final : public Counter {
 public:
  FullRegisterCounter(const LcuDecomposition& dec, const EnergyReference& ref,
                      const ComplexVector& psi, const ComplexVector& reference)
      : circuit_(dec),
        layout_{dec.n_qubits, ref.d, circuit_.ancilla_qubits()},
        estimator_(phase_matrix(ref), ref.d),
        d_match_(ref.d_match),
        reference_(reference),
        state_(1) {
    layout_.validate();
    prepare(psi);
  }

  bool round(RandomStream& rng) override {
    return counting_round(state_, circuit_, layout_, estimator_, d_match_, rng);
  }

  bool recovery_step(int k, RandomStream& rng) override {
    if (k % 2 == 1) {
      circuit_.apply_adjoint(state_, 0, layout_.ancilla_offset());
    } else {
      circuit_.apply(state_, 0, layout_.ancilla_offset());
    }
    return energy_check(state_, layout_, estimator_, d_match_, rng);
  }

  void reprepare() override { prepare(reference_); }

  ComplexVector system_state() const override {
    // The E register keeps the phase estimate of psi, which is spread over
    // several values when the phase is not dyadic. Read the system from its
    // reduced density matrix.
    const Eigen::Index rows = Eigen::Index{1} << layout_.n_system;
    const Eigen::Map<const ComplexMatrix> m(state_.amplitudes().data(), rows,
                                            state_.dim() / rows);
    const Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(m * m.adjoint());
    if (es.eigenvalues()(rows - 1) < 1.0 - 1e-9) {
      throw Error("registers are not reset; system state is entangled");
    }
    return es.eigenvectors().col(rows - 1);
  }

  const StateVector& state() const { return state_; }

 private:
  static ComplexMatrix phase_matrix(const EnergyReference& ref) {
    const Eigen::Index n = ref.h0.rows();
    const double offset =
        static_cast<double>(ref.scaling.reference_index) * std::ldexp(1.0, -ref.d);
    return (ref.h0 - ref.energy * ComplexMatrix::Identity(n, n)) / ref.scaling.width +
           offset * ComplexMatrix::Identity(n, n);
  }

  void prepare(const ComplexVector& psi) {
    ComplexVector amps = ComplexVector::Zero(Eigen::Index{1} << layout_.total_qubits());
    amps.head(psi.size()) = psi.normalized();
    state_ = StateVector(layout_.total_qubits(), std::move(amps));
    qpe(state_, layout_, estimator_, EnergyRegister::E);
  }

  LcuCircuit circuit_;
  RegisterLayout layout_;
  PhaseEstimator estimator_;
  int d_match_;
  ComplexVector reference_;
  StateVector state_;
};

}  // namespace

std::unique_ptr<Counter> make_counter(CountingBackend backend,
                                      const LcuDecomposition& dec,
                                      const EnergyReference& ref,
                                      const ComplexVector& psi,
                                      const ComplexVector& reference) {
  if (psi.size() != (Eigen::Index{1} << dec.n_qubits) || reference.size() != psi.size()) {
    throw InvalidArgument("state does not match the operator's qubit count");
  }
  if (backend == CountingBackend::Compressed) {
    return std::make_unique<CompressedCounter>(dec, ref, psi, reference);
  }
  return std::make_unique<FullRegisterCounter>(dec, ref, psi, reference);
}

void write_trace(std::ostream& os, const std::vector<ShotRecord>& records) {
  os << "label,shot,accepted,recovery_steps,aborted\n";
  for (const auto& r : records) {
    os << r.label << ',' << r.shot << ',' << (r.accepted ? 1 : 0) << ','
       << r.recovery_steps << ',' << (r.aborted ? 1 : 0) << '\n';
  }
}

double CountingTally::frequency() const {
  return shots > 0 ? static_cast<double>(accepts) / static_cast<double>(shots) : 0.0;
}

void CountingTally::merge(const CountingTally& other) {
  accepts += other.accepts;
  rejects += other.rejects;
  aborted += other.aborted;
  shots += other.shots;
  if (recovery_steps.size() < other.recovery_steps.size()) {
    recovery_steps.resize(other.recovery_steps.size(), 0);
  }
  for (std::size_t k = 0; k < other.recovery_steps.size(); ++k) {
    recovery_steps[k] += other.recovery_steps[k];
  }
}

CountingTally run_shots(Counter& counter, std::int64_t shots, int k_max,
                        RandomStream& rng, const std::string& label,
                        std::vector<ShotRecord>* trace) {
  if (shots < 1) throw InvalidArgument("shot count must be positive");
  if (k_max < 1) throw InvalidArgument("k_max must be positive");
  CountingTally tally;
  tally.recovery_steps.assign(static_cast<std::size_t>(k_max) + 1, 0);
  for (std::int64_t s = 0; s < shots; ++s) {
    ShotRecord rec{label, s, false, 0, false};
    if (counter.round(rng)) {
      rec.accepted = true;
      ++tally.accepts;
      ++tally.shots;
    } else {
      int used = 0;
      for (int k = 1; k <= k_max; ++k) {
        if (counter.recovery_step(k, rng)) {
          used = k;
          break;
        }
      }
      if (used == 0) {
        rec.aborted = true;
        ++tally.aborted;
        counter.reprepare();
      } else {
        rec.recovery_steps = used;
        ++tally.rejects;
        ++tally.shots;
        ++tally.recovery_steps[static_cast<std::size_t>(used)];
      }
    }
    if (trace) trace->push_back(std::move(rec));
  }
  return tally;
}

CoefficientEstimate decode(const CountingTally& tally, double scale, double shift) {
  if (tally.shots < 1) throw Error("no completed shots to decode");
  CoefficientEstimate e;
  e.tally = tally;
  e.raw_frequency = tally.frequency();
  e.scale = scale;
  e.shift = shift;
  const double n = static_cast<double>(tally.shots);
  e.expectation = scale * std::sqrt(e.raw_frequency) - shift;
  e.expectation_stderr = scale * std::sqrt((1.0 - e.raw_frequency) / (4.0 * n));
  e.value = e.expectation;
  e.stderr = e.expectation_stderr;
  return e;
}

LanczosCounter::LanczosCounter(const QubitOperator& hamiltonian,
                               const QubitOperator& omega, const ComplexVector& psi,
                               const EnergyReference& ref,
                               const CountingSettings& settings)
    : h_(hamiltonian),
      omega_(omega),
      psi_(psi),
      state_(psi),
      ref_(ref),
      settings_(settings) {
  if (hamiltonian.n_qubits() != omega.n_qubits()) {
    throw InvalidArgument("Hamiltonian and start operator act on different qubits");
  }
  if (psi.size() != (Eigen::Index{1} << hamiltonian.n_qubits()) ||
      std::abs(psi.squaredNorm() - 1.0) > 1e-10) {
    throw InvalidArgument("reference state must be normalized on the system qubits");
  }
  if (!hamiltonian.is_hermitian(1e-12)) {
    throw InvalidArgument("counting Hamiltonian must be Hermitian");
  }
  offset_ = hamiltonian.coefficient(PauliWord::identity()).real();
  h_.add_term(PauliWord::identity(), -offset_);
}

TridiagonalSpectrum LanczosCounter::centered(const TridiagonalSpectrum& prefix) const {
  TridiagonalSpectrum out = prefix;
  for (double& a : out.alpha) a -= offset_;
  return out;
}

CoefficientEstimate LanczosCounter::count_expectation(const QubitOperator& op,
                                                      const std::string& label) {
  const LcuDecomposition dec = normalize_and_shift(op);
  check_counting_setup(ref_, psi_, dec);
  auto counter = make_counter(settings_.backend, dec, ref_, state_, psi_);
  RandomStream rng = RandomStream::substream(settings_.seed, stream_id_++);
  const CountingTally tally = run_shots(*counter, settings_.shots, settings_.k_max,
                                        rng, label, settings_.trace ? &trace_ : nullptr);
  aborted_ += tally.aborted;
  state_ = counter->system_state();
  return decode(tally, dec.scale, dec.shift);
}

CoefficientEstimate LanczosCounter::count_norm() {
  return count_expectation(prune_relative(omega_.adjoint() * omega_), "norm");
}

CoefficientEstimate LanczosCounter::count_alpha(int n, const TridiagonalSpectrum& prefix,
                                                double norm0) {
  require_prefix(n, prefix);
  const QubitOperator op = alpha_operator(n, centered(prefix), h_, omega_);
  CoefficientEstimate e = count_expectation(op, "alpha_" + std::to_string(n));
  double normalizer = norm0;
  for (int k = 0; k < n; ++k) {
    normalizer *= prefix.beta[static_cast<std::size_t>(k)] * prefix.beta[static_cast<std::size_t>(k)];
  }
  if (!(normalizer > 0.0)) throw Error("alpha normalizer is not positive");
  e.normalizer = normalizer;
  e.value = e.expectation / normalizer + offset_;
  e.stderr = e.expectation_stderr / normalizer;
  return e;
}

CoefficientEstimate LanczosCounter::count_beta(int n, const TridiagonalSpectrum& prefix,
                                               double norm0) {
  require_prefix(n, prefix);
  const QubitOperator op = beta_operator(n, centered(prefix), h_, omega_);
  CoefficientEstimate e = count_expectation(op, "beta_" + std::to_string(n));
  double normalizer = norm0;
  for (int k = 0; k + 1 < n; ++k) {
    normalizer *= prefix.beta[static_cast<std::size_t>(k)] * prefix.beta[static_cast<std::size_t>(k)];
  }
  if (!(normalizer > 0.0)) throw Error("beta normalizer is not positive");
  e.normalizer = normalizer;
  const double ratio = e.expectation / normalizer;
  e.value = std::sqrt(std::max(ratio, 0.0));
  e.stderr = e.value > 0.0 ? e.expectation_stderr / (2.0 * e.value * normalizer)
                           : std::sqrt(e.expectation_stderr / normalizer);
  return e;
}

CountedLanczos LanczosCounter::run(int depth, double beta_tol) {
  if (depth < 1) throw InvalidArgument("depth must be at least 1");
  CountedLanczos out;
  const CoefficientEstimate e0 = count_norm();
  out.estimates.push_back(e0);
  out.norm0 = e0.expectation;
  out.norm0_stderr = e0.expectation_stderr;
  out.raw.push_back(e0.expectation);
  out.raw_stderr.push_back(e0.expectation_stderr);
  out.stop_reason = "depth";
  if (!(out.norm0 > settings_.zero_sigma * out.norm0_stderr) || out.norm0 <= 0.0) {
    out.stop_reason = "start vector vanishes";
    out.aborted_shots = aborted_;
    return out;
  }
  for (int n = 0; n < depth; ++n) {
    if (n > 0) {
      const CoefficientEstimate eb = count_beta(n, out.spectrum, out.norm0);
      out.estimates.push_back(eb);
      if (eb.value < beta_tol ||
          eb.expectation <= settings_.zero_sigma * eb.expectation_stderr) {
        out.stop_reason = "beta below tolerance at level " + std::to_string(n);
        break;
      }
      out.raw.push_back(eb.expectation);
      out.raw_stderr.push_back(eb.expectation_stderr);
      out.spectrum.push_beta(eb.value, Provenance::Counted, eb.stderr);
    }
    const CoefficientEstimate ea = count_alpha(n, out.spectrum, out.norm0);
    out.estimates.push_back(ea);
    out.raw.push_back(ea.expectation);
    out.raw_stderr.push_back(ea.expectation_stderr);
    out.spectrum.push_alpha(ea.value, Provenance::Counted, ea.stderr);
  }
  const auto [alpha_se, beta_se] = propagate_errors(out.raw, out.raw_stderr);
  for (std::size_t k = 0; k < alpha_se.size(); ++k) out.spectrum.alpha_stderr[k] = alpha_se[k];
  for (std::size_t k = 0; k < beta_se.size(); ++k) out.spectrum.beta_stderr[k] = beta_se[k];
  out.aborted_shots = aborted_;
  return out;
}

namespace {

// Plug-in alpha and b = beta^2 implied by raw[0..count).
void theta_from_raw(const std::vector<double>& raw, std::size_t count,
                    std::vector<double>& alpha, std::vector<double>& b) {
  alpha.clear();
  b.clear();
  for (std::size_t k = 1; k < count; ++k) {
    if (k % 2 == 1) {
      alpha.push_back(raw[k] / raw[k - 1]);
    } else {
      b.push_back(raw[k] / raw[k - 2]);
    }
  }
}

// Polynomial pair whose Hankel form gives raw quantity k >= 1:
// odd k = 2n+1 -> (p_n, x p_n); even k = 2n -> (p_{n-1}, x p_n).
std::pair<std::vector<double>, std::vector<double>> raw_pair(
    std::size_t k, const std::vector<double>& alpha, const std::vector<double>& b) {
  const int n = static_cast<int>(k / 2);
  const auto family = monic_family(n, alpha, b);
  if (k % 2 == 1) {
    return {family[static_cast<std::size_t>(n)], shift_up(family[static_cast<std::size_t>(n)])};
  }
  return {family[static_cast<std::size_t>(n - 1)], shift_up(family[static_cast<std::size_t>(n)])};
}

double hankel_form(const std::vector<double>& u, const std::vector<double>& v,
                   const std::vector<double>& mu, std::size_t skip_top) {
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    for (std::size_t j = 0; j < v.size(); ++j) {
      if (i + j == skip_top) continue;
      s += u[i] * v[j] * mu[i + j];
    }
  }
  return s;
}

double predict_raw(std::size_t k, const std::vector<double>& raw_prefix_source,
                   const std::vector<double>& mu) {
  if (k == 0) return mu[0];
  std::vector<double> alpha;
  std::vector<double> b;
  theta_from_raw(raw_prefix_source, k, alpha, b);
  const auto [u, v] = raw_pair(k, alpha, b);
  return hankel_form(u, v, mu, std::numeric_limits<std::size_t>::max());
}

}  // namespace

std::vector<double> moments_from_raw(const std::vector<double>& raw) {
  std::vector<double> mu(raw.size(), 0.0);
  if (raw.empty()) return mu;
  mu[0] = raw[0];
  std::vector<double> alpha;
  std::vector<double> b;
  for (std::size_t k = 1; k < raw.size(); ++k) {
    theta_from_raw(raw, k, alpha, b);
    const auto [u, v] = raw_pair(k, alpha, b);
    // v = x p_n is monic of degree k - deg(u); the top moment index is k.
    mu[k] = raw[k] - hankel_form(u, v, mu, k);
  }
  return mu;
}

std::pair<std::vector<double>, std::vector<double>> propagate_errors(
    const std::vector<double>& raw, const std::vector<double>& raw_stderr) {
  const std::size_t m = raw.size();
  if (raw_stderr.size() != m) throw InvalidArgument("raw value and error counts differ");
  const std::vector<double> mu = moments_from_raw(raw);

  RealMatrix lmat = RealMatrix::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
  for (std::size_t k = 1; k < m; ++k) {
    for (std::size_t l = 0; l < k; ++l) {
      const double h = 1e-6 * std::max(std::abs(raw[l]), 1e-6);
      std::vector<double> up = raw;
      std::vector<double> down = raw;
      up[l] += h;
      down[l] -= h;
      lmat(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(l)) =
          (predict_raw(k, up, mu) - predict_raw(k, down, mu)) / (2.0 * h);
    }
  }
  RealMatrix noise = RealMatrix::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
  for (std::size_t k = 0; k < m; ++k) {
    noise(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k)) = raw_stderr[k] * raw_stderr[k];
  }
  const RealMatrix prop =
      (RealMatrix::Identity(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m)) - lmat)
          .triangularView<Eigen::Lower>()
          .solve(RealMatrix::Identity(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m)));
  const RealMatrix cov = prop * noise * prop.transpose();

  // alpha_n = raw[2n+1] / raw[2n]; beta_n = sqrt(raw[2n] / raw[2n-2]).
  std::vector<double> alpha_se;
  std::vector<double> beta_se;
  auto variance = [&](const std::vector<std::pair<std::size_t, double>>& grad) {
    double v = 0.0;
    for (const auto& [i, gi] : grad) {
      for (const auto& [j, gj] : grad) {
        v += gi * gj * cov(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      }
    }
    return std::sqrt(std::max(v, 0.0));
  };
  for (std::size_t k = 1; k < m; ++k) {
    if (k % 2 == 1) {
      const double c = raw[k - 1];
      alpha_se.push_back(variance({{k, 1.0 / c}, {k - 1, -raw[k] / (c * c)}}));
    } else {
      const double prev = raw[k - 2];
      const double beta = std::sqrt(std::max(raw[k] / prev, 0.0));
      if (beta == 0.0) {
        beta_se.push_back(std::numeric_limits<double>::infinity());
        continue;
      }
      beta_se.push_back(variance({{k, 1.0 / (2.0 * beta * prev)},
                                  {k - 2, -raw[k] / (2.0 * beta * prev * prev)}}));
    }
  }
  return {alpha_se, beta_se};
}

ComplexEstimate count_overlap(LanczosCounter& counter, const QubitOperator& op) {
  const QubitOperator plus = op + op.adjoint();
  const QubitOperator minus = (op - op.adjoint()) * kI;
  const CoefficientEstimate ep = counter.count_expectation(plus, "overlap_plus");
  const CoefficientEstimate em = counter.count_expectation(minus, "overlap_minus");
  ComplexEstimate out;
  out.value = Complex{ep.expectation, -em.expectation} * 0.5;
  out.stderr_re = 0.5 * ep.expectation_stderr;
  out.stderr_im = 0.5 * em.expectation_stderr;
  return out;
}

}  // namespace qlr
