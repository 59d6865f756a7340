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

#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "qlr/lcu.hpp"
#include "qlr/oracle.hpp"
#include "qlr/qubit_operator.hpp"
#include "qlr/statevector.hpp"

namespace qlr {

/// Monic Lanczos polynomial p_n in powers of H, built by
/// p_{k+1} = (x - alpha_k) p_k - beta_k^2 p_{k-1}.
std::vector<double> lanczos_polynomial(int n, const TridiagonalSpectrum& prefix);

/// G_n = p_n(H) Omega, the operator producing the n-th (unnormalized)
/// Lanczos vector from the reference state.
struct GnOperator {
  int n = 0;
  std::vector<double> polynomial;  // coefficient of H^k at index k
  QubitOperator hamiltonian;
  QubitOperator omega;
  QubitOperator compiled;
  LcuDecomposition lcu;

  ComplexMatrix dense() const { return compiled.to_dense(); }
};

GnOperator build_gn(int n, const TridiagonalSpectrum& prefix,
                    const QubitOperator& hamiltonian, const QubitOperator& omega);

/// Omega^dagger q(H) Omega for a real polynomial q.
QubitOperator sandwich(const QubitOperator& omega, const QubitOperator& hamiltonian,
                       const std::vector<double>& q);

/// Counted operator whose expectation is <p_n H p_n>.
QubitOperator alpha_operator(int n, const TridiagonalSpectrum& prefix,
                             const QubitOperator& hamiltonian,
                             const QubitOperator& omega);
/// Counted operator whose expectation is <p_{n-1} H p_n> = |p_n|^2.
QubitOperator beta_operator(int n, const TridiagonalSpectrum& prefix,
                            const QubitOperator& hamiltonian,
                            const QubitOperator& omega);

/// QPE data for the reference Hamiltonian H0: its eigenbasis, the phase
/// map, and the probability that each eigenvector passes the pointer check.
struct EnergyReference {
  ComplexMatrix h0;
  double energy = 0.0;
  int d = 0;
  int d_match = 0;
  PhaseScaling scaling;
  ComplexMatrix eigenvectors;
  std::vector<double> eigenvalues;
  std::vector<double> accept_probability;

  static EnergyReference build(const ComplexMatrix& h0, double energy, int d,
                               int d_match);
};

struct SetupReport {
  std::size_t reachable_states = 0;
  double window = 0.0;
  double gap = 0.0;  // distance from E to the nearest other reachable level
};

/// Checks that the reference state is an H0 eigenvector, that its energy
/// level is nondegenerate on the basis states reachable under `dec`, and
/// that the accepted window is narrower than the gap. Throws Unsupported on
/// a degenerate level and InvalidArgument otherwise.
SetupReport check_counting_setup(const EnergyReference& ref,
                                 const ComplexVector& psi,
                                 const LcuDecomposition& dec);

enum class CountingBackend { Compressed, FullRegister };

CountingBackend parse_backend(const std::string& text);
const char* to_string(CountingBackend b);

/// One state-preserving counting experiment on a fixed operator.
class Counter {
 public:
  virtual ~Counter() = default;
  /// Apply the operator, check the energy, measure the pointer.
  virtual bool round(RandomStream& rng) = 0;
  /// Recovery step k >= 1: alternately W^dagger and W, then the check.
  /// Returns true once the pointer reads 0.
  virtual bool recovery_step(int k, RandomStream& rng) = 0;
  /// Resets to |psi> with clean registers (after an aborted shot).
  virtual void reprepare() = 0;
  /// System amplitudes; every other register must be back in |0>.
  virtual ComplexVector system_state() const = 0;
};

/// `psi` is the current system state, which need not be exactly the
/// reference vector the counter re-prepares on abort.
std::unique_ptr<Counter> make_counter(CountingBackend backend,
                                      const LcuDecomposition& dec,
                                      const EnergyReference& ref,
                                      const ComplexVector& psi,
                                      const ComplexVector& reference);

/// Full-register round on the Fig. 1 layout: W, QPE into E', pointer flag
/// for (E' mismatch or ancilla != 0), measure, QPE^dagger, reset pointer.
bool counting_round(StateVector& state, const LcuCircuit& circuit,
                    const RegisterLayout& layout, const PhaseEstimator& est,
                    int d_match, RandomStream& rng);
/// The energy check alone (no operator), as used inside recovery.
bool energy_check(StateVector& state, const RegisterLayout& layout,
                  const PhaseEstimator& est, int d_match, RandomStream& rng);
/// Recovery loop on the full register. Returns the number of steps used, or
/// nullopt when k_max is exhausted.
std::optional<int> recover(StateVector& state, const LcuCircuit& circuit,
                           const RegisterLayout& layout, const PhaseEstimator& est,
                           int d_match, RandomStream& rng, int k_max);

struct ShotRecord {
  std::string label;
  std::int64_t shot = 0;
  bool accepted = false;
  int recovery_steps = 0;  // 0 when accepted
  bool aborted = false;
};

void write_trace(std::ostream& os, const std::vector<ShotRecord>& records);

struct CountingTally {
  std::int64_t accepts = 0;
  std::int64_t rejects = 0;
  std::int64_t aborted = 0;
  std::int64_t shots = 0;  // accepts + rejects
  /// recovery_steps[k] = rejected shots that needed exactly k steps.
  std::vector<std::int64_t> recovery_steps;

  double frequency() const;
  void merge(const CountingTally& other);
};

CountingTally run_shots(Counter& counter, std::int64_t shots, int k_max,
                        RandomStream& rng, const std::string& label,
                        std::vector<ShotRecord>* trace);

/// Decoded counting result. `expectation` = scale * sqrt(raw_frequency) -
/// shift is the counted <A>; `value` is the coefficient derived from it
/// (expectation / normalizer for alpha, sqrt of that for beta).
struct CoefficientEstimate {
  double value = 0.0;
  double raw_frequency = 0.0;
  double stderr = 0.0;
  double scale = 1.0;
  double shift = 0.0;
  double expectation = 0.0;
  double expectation_stderr = 0.0;
  double normalizer = 1.0;
  CountingTally tally;
};

/// scale * sqrt(f) - shift with its delta-method standard error.
CoefficientEstimate decode(const CountingTally& tally, double scale, double shift);

struct CountingSettings {
  std::int64_t shots = 100000;
  int k_max = 50;
  int d = 20;
  int d_match = 20;
  CountingBackend backend = CountingBackend::Compressed;
  bool trace = false;
  std::uint64_t seed = 1;
  /// run() also stops once a counted |p_n|^2 is within this many standard
  /// errors of zero. 0 disables the test.
  double zero_sigma = 2.0;
};

/// Result of a sequential counted Lanczos run.
struct CountedLanczos {
  TridiagonalSpectrum spectrum;   // counted values with propagated stderr
  double norm0 = 0.0;             // <Omega^dagger Omega>
  double norm0_stderr = 0.0;
  std::vector<double> raw;        // c_0, a_0, c_1, a_1, ...
  std::vector<double> raw_stderr; // shot noise only
  std::vector<CoefficientEstimate> estimates;
  std::string stop_reason;
  std::int64_t aborted_shots = 0;
};

/// Counting driver bound to one Hamiltonian, start operator and reference
/// state. The Hamiltonian is centered (identity part removed) before any
/// operator is compiled; reported alphas add it back.
class LanczosCounter {
 public:
  LanczosCounter(const QubitOperator& hamiltonian, const QubitOperator& omega,
                 const ComplexVector& psi, const EnergyReference& ref,
                 const CountingSettings& settings);

  /// c_0 = <Omega^dagger Omega>.
  CoefficientEstimate count_norm();
  /// alpha_n from <p_n H p_n> / (norm0 prod_k beta_k^2).
  CoefficientEstimate count_alpha(int n, const TridiagonalSpectrum& prefix,
                                  double norm0);
  /// beta_n from sqrt(<p_{n-1} H p_n> / (norm0 prod_{k<n} beta_k^2)).
  CoefficientEstimate count_beta(int n, const TridiagonalSpectrum& prefix,
                                 double norm0);
  /// Counts <A> for a Hermitian A.
  CoefficientEstimate count_expectation(const QubitOperator& op,
                                        const std::string& label);

  /// alpha_0..alpha_{depth-1}, stopping early when a counted beta falls
  /// below beta_tol or |p_n|^2 is statistically zero.
  CountedLanczos run(int depth, double beta_tol);

  const ComplexVector& system_state() const { return state_; }
  const ComplexVector& reference_state() const { return psi_; }
  const std::vector<ShotRecord>& trace() const { return trace_; }
  std::int64_t aborted_shots() const { return aborted_; }
  double hamiltonian_offset() const { return offset_; }

 private:
  TridiagonalSpectrum centered(const TridiagonalSpectrum& prefix) const;

  QubitOperator h_;
  QubitOperator omega_;
  double offset_ = 0.0;
  ComplexVector psi_;
  ComplexVector state_;
  EnergyReference ref_;
  CountingSettings settings_;
  std::uint64_t stream_id_ = 0;
  std::int64_t aborted_ = 0;
  std::vector<ShotRecord> trace_;
};

/// Raw counted quantities -> moments mu_k = <Omega^dagger H^k Omega> given
/// the plug-in coefficients, solved level by level.
std::vector<double> moments_from_raw(const std::vector<double>& raw);

/// Standard errors of alpha_0..alpha_{D-1} and beta_1..beta_{D-1} from the
/// raw shot-noise errors, propagated through the dependence of each counted
/// operator on the earlier estimates.
std::pair<std::vector<double>, std::vector<double>> propagate_errors(
    const std::vector<double>& raw, const std::vector<double>& raw_stderr);

/// <A> for A = c^dagger_j c_i style operators via the Hermitian pair
/// A + A^dagger and i(A - A^dagger): <A> = (<plus> - i <minus>) / 2.
struct ComplexEstimate {
  Complex value;
  double stderr_re = 0.0;
  double stderr_im = 0.0;
};
ComplexEstimate count_overlap(LanczosCounter& counter, const QubitOperator& op);

}  // namespace qlr
