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
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "qlr/qubit_operator.hpp"
#include "qlr/types.hpp"

namespace qlr {

enum class Provenance { Oracle, Counted };

const char* to_string(Provenance p);

/// Lanczos coefficients alpha_0..alpha_N and beta_1..beta_N.
///
/// beta[k] holds beta_{k+1}. Entries from the classical recursion carry
/// stderr 0; counted entries carry their propagated standard error, or
/// +inf when unconstrained.
struct TridiagonalSpectrum {
  std::vector<double> alpha;
  std::vector<double> beta;
  std::vector<Provenance> alpha_provenance;
  std::vector<Provenance> beta_provenance;
  std::vector<double> alpha_stderr;
  std::vector<double> beta_stderr;

  std::size_t depth() const { return alpha.size(); }
  bool empty() const { return alpha.empty(); }

  void push_alpha(double value, Provenance p = Provenance::Oracle,
                  double stderr = 0.0);
  void push_beta(double value, Provenance p = Provenance::Oracle,
                 double stderr = 0.0);

  /// First `n` levels: alpha_0..alpha_{n-1}, beta_1..beta_{n-1}.
  TridiagonalSpectrum prefix(std::size_t n) const;
  std::vector<double> beta_sq() const;

  /// Throws InvalidArgument if the length or sign invariants are broken.
  void validate() const;
};

/// CSV with columns n,alpha,beta,provenance,stderr_alpha,stderr_beta.
void write_csv(std::ostream& os, const TridiagonalSpectrum& spec);

/// Lowest eigenpair of the tridiagonal matrix; gamma has unit norm and
/// gamma[0] >= 0.
struct KrylovGroundState {
  std::vector<double> gamma;
  double energy = 0.0;
  std::size_t basis_dim = 0;
};

struct TridiagonalEigen {
  std::vector<double> eigenvalues;  // ascending
  KrylovGroundState ground;
};

TridiagonalEigen tridiagonal_eigs(const TridiagonalSpectrum& spec);

/// Lowest eigenpair of a dense Hermitian matrix. The eigenvector's largest
/// component is made real and positive.
std::pair<double, ComplexVector> dense_ground_state(const ComplexMatrix& h);

bool is_hermitian(const ComplexMatrix& m, double tol = 1e-10);

/// Computational basis states of 2*n_sites qubits with the given number of
/// spin-up and spin-down electrons, ascending.
std::vector<std::uint64_t> sector_states(int n_sites, int n_up, int n_down);

/// Ground state of `h` restricted to a particle-number sector, embedded
/// back into the full 2^(2 n_sites) space.
std::pair<double, ComplexVector> sector_ground_state(const QubitOperator& h,
                                                    int n_sites, int n_up,
                                                    int n_down);

/// Lanczos vectors alongside the coefficients.
struct LanczosRun {
  TridiagonalSpectrum spectrum;
  ComplexMatrix basis;  // columns are orthonormal Lanczos vectors
  double start_norm = 0.0;
};

/// Standard Lanczos with full reorthogonalization. Produces at most
/// max_steps + 1 levels and stops once a residual norm drops below tol.
LanczosRun lanczos_run(const ComplexMatrix& h, const ComplexVector& start,
                       int max_steps, double tol = 1e-12);

TridiagonalSpectrum classical_lanczos(const ComplexMatrix& h,
                                      const ComplexVector& start,
                                      int max_steps, double tol = 1e-12);

/// <in|(omega - H + s i eta)^{-1}|in> by a direct linear solve per point.
std::vector<Complex> reference_resolvent(const ComplexMatrix& h,
                                         const ComplexVector& in,
                                         std::span<const double> omega_grid,
                                         double eta,
                                         Branch branch = Branch::Retarded);

/// <v|H|v> for a dense Hermitian H (real part).
double expectation(const ComplexMatrix& h, const ComplexVector& v);

/// |<a|b>|^2 / (|a|^2 |b|^2).
double fidelity(const ComplexVector& a, const ComplexVector& b);

}  // namespace qlr
