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
#include <functional>
#include <iosfwd>
#include <random>
#include <span>
#include <vector>

#include "qlr/lcu.hpp"
#include "qlr/types.hpp"

namespace qlr {

/// Largest register the statevector simulator will allocate.
inline constexpr int kMaxSimulatedQubits = 24;

/// Qubit layout, low to high: system, E (d bits), E' (d bits), LCU
/// ancillas, pointer.
struct RegisterLayout {
  int n_system = 0;
  int d = 0;
  int n_ancilla = 0;

  int total_qubits() const { return n_system + 2 * d + n_ancilla + 1; }
  int e_offset() const { return n_system; }
  int e_prime_offset() const { return n_system + d; }
  int ancilla_offset() const { return n_system + 2 * d; }
  int pointer() const { return n_system + 2 * d + n_ancilla; }

  void validate() const;
};

enum class EnergyRegister { E, EPrime };

/// Seeded mt19937_64 with a draw counter.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed);

  /// Independent stream for worker `id` under a master seed.
  static RandomStream substream(std::uint64_t master_seed, std::uint64_t id);

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform();
  std::uint64_t next();

  std::uint64_t seed() const { return seed_; }
  std::uint64_t counter() const { return counter_; }

 private:
  std::mt19937_64 engine_;
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

/// Dense amplitudes over n qubits; qubit q is bit q of the basis index.
class StateVector {
 public:
  explicit StateVector(int n_qubits);
  /// Takes ownership of `amplitudes`, which must have unit norm.
  StateVector(int n_qubits, ComplexVector amplitudes);

  int n_qubits() const { return n_qubits_; }
  Eigen::Index dim() const { return amps_.size(); }
  const ComplexVector& amplitudes() const { return amps_; }
  double norm_squared() const { return amps_.squaredNorm(); }

  /// Applies a 2^k x 2^k unitary; targets[0] is the least significant
  /// bit of the matrix index.
  void apply_matrix(const ComplexMatrix& u, std::span<const int> targets);
  /// Pauli word on qubits [offset, offset + width) scaled by a phase.
  void apply_pauli(const PauliWord& word, int offset, Complex phase = 1.0);
  /// Flips `target` on every basis state where `predicate(index)` holds.
  void flip_where(int target, const std::function<bool(std::uint64_t)>& predicate);

  double probability_one(int qubit) const;
  /// Probability that qubits [offset, offset + width) all read 0.
  double probability_zero(int offset, int width) const;

  int measure(int qubit, RandomStream& rng);
  /// Two-outcome measurement of "register is all zero". Returns true on
  /// the all-zero outcome and collapses accordingly.
  bool measure_zero(int offset, int width, RandomStream& rng);

  /// Amplitudes of qubits [0, n_low) with every higher qubit fixed to the
  /// bits of `high_value`.
  ComplexVector slice(int n_low, std::uint64_t high_value) const;

  void dump(std::ostream& os) const;

 private:
  void renormalize();

  int n_qubits_;
  ComplexVector amps_;
};

/// PREPARE/SELECT block encoding of an LcuDecomposition:
/// W = PREPARE^dagger SELECT PREPARE, with PREPARE a Householder reflection
/// sending |0> to sum_l sqrt(w_l) |l>. <0|W|0> on the ancillas equals the
/// encoded operator.
class LcuCircuit {
 public:
  explicit LcuCircuit(const LcuDecomposition& dec);

  int ancilla_qubits() const { return n_ancilla_; }
  const LcuDecomposition& decomposition() const { return dec_; }

  /// Applies W with the system at [system_offset, +n_qubits) and the
  /// ancillas at [ancilla_offset, +ancilla_qubits()).
  void apply(StateVector& state, int system_offset, int ancilla_offset) const;
  /// Applies W^dagger.
  void apply_adjoint(StateVector& state, int system_offset,
                     int ancilla_offset) const;

  /// W as a dense matrix over (ancilla x system), system in the low bits.
  ComplexMatrix dense() const;

 private:
  void apply_prepare(StateVector& state, int ancilla_offset) const;
  void apply_select(StateVector& state, int system_offset, int ancilla_offset,
                    bool adjoint) const;

  LcuDecomposition dec_;
  int n_ancilla_;
  // PREPARE = I - 2 u u^dagger with unit u (empty when PREPARE = I).
  ComplexVector reflector_;
};

/// Applies the LCU and measures the ancillas. On success (all zero) the
/// system holds encoded * state, renormalized; otherwise the ancillas hold
/// the collapsed failure branch and the caller must recover.
bool apply_lcu(StateVector& state, const RegisterLayout& layout,
               const LcuCircuit& circuit, RandomStream& rng);

/// Maps energies onto d-bit phases. The reference energy lands exactly on
/// a grid point and the whole spectrum fits in [0, 1).
struct PhaseScaling {
  double reference = 0.0;
  double width = 1.0;
  int d = 0;
  std::int64_t reference_index = 0;

  static PhaseScaling fit(double reference, double e_min, double e_max, int d);

  double phase(double energy) const;
  /// Width of the energy window accepted when the top d_match bits must
  /// agree.
  double window(int d_match) const;
};

/// Textbook QPE readout amplitudes for a Hermitian H0 given in phase units:
/// register |y> goes to sum_x M_k[x][y] |x> on eigenvector k, with
/// M_k[x][y] = 2^-d sum_j (-1)^{j.y} exp(2 pi i j (phi_k - x / 2^d)).
class PhaseEstimator {
 public:
  /// `h_phase` must have every eigenvalue in [0, 1).
  PhaseEstimator(const ComplexMatrix& h_phase, int d);

  int bits() const { return d_; }
  const ComplexMatrix& eigenvectors() const { return vecs_; }
  const std::vector<double>& phases() const { return phases_; }

  static Complex amplitude(double phase, int d, std::uint64_t x, std::uint64_t y);
  static ComplexMatrix readout_unitary(double phase, int d);
  /// |M[x][0]|^2 over x.
  static std::vector<double> readout_distribution(double phase, int d);

 private:
  int d_;
  ComplexMatrix vecs_;
  std::vector<double> phases_;
  std::vector<ComplexMatrix> readouts_;

  friend void qpe(StateVector&, const RegisterLayout&, const PhaseEstimator&,
                  EnergyRegister);
  friend void inverse_qpe(StateVector&, const RegisterLayout&,
                          const PhaseEstimator&, EnergyRegister);
};

void qpe(StateVector& state, const RegisterLayout& layout,
         const PhaseEstimator& est, EnergyRegister target);
void inverse_qpe(StateVector& state, const RegisterLayout& layout,
                 const PhaseEstimator& est, EnergyRegister target);

/// XORs onto the pointer the OR over the top d_match bits of E xor E'.
void cnot_compare(StateVector& state, const RegisterLayout& layout, int d_match);

/// True when the top d_match bits of two d-bit readouts agree.
bool readouts_match(std::uint64_t a, std::uint64_t b, int d, int d_match);

}  // namespace qlr
