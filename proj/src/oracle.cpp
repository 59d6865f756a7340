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

#include "qlr/oracle.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <iomanip>
#include <ostream>

#include <Eigen/Eigenvalues>

namespace qlr {

const char* to_string(Provenance p) {
  return p == Provenance::Oracle ? "oracle" : "counted";
}

void TridiagonalSpectrum::push_alpha(double value, Provenance p,
                                     double stderr) {
  alpha.push_back(value);
  alpha_provenance.push_back(p);
  alpha_stderr.push_back(stderr);
}

void TridiagonalSpectrum::push_beta(double value, Provenance p, double stderr) {
  beta.push_back(value);
  beta_provenance.push_back(p);
  beta_stderr.push_back(stderr);
}

TridiagonalSpectrum TridiagonalSpectrum::prefix(std::size_t n) const {
  TridiagonalSpectrum out;
  const std::size_t na = std::min(n, alpha.size());
  for (std::size_t k = 0; k < na; ++k) {
    out.push_alpha(alpha[k], alpha_provenance[k], alpha_stderr[k]);
  }
  for (std::size_t k = 0; k + 1 < na && k < beta.size(); ++k) {
    out.push_beta(beta[k], beta_provenance[k], beta_stderr[k]);
  }
  return out;
}

std::vector<double> TridiagonalSpectrum::beta_sq() const {
  std::vector<double> out(beta.size());
  for (std::size_t k = 0; k < beta.size(); ++k) out[k] = beta[k] * beta[k];
  return out;
}

void TridiagonalSpectrum::validate() const {
  if (!alpha.empty() && beta.size() + 1 != alpha.size()) {
    throw InvalidArgument("tridiagonal spectrum needs len(beta) = len(alpha) - 1");
  }
  if (alpha.empty() && !beta.empty()) {
    throw InvalidArgument("tridiagonal spectrum has beta without alpha");
  }
  if (alpha_provenance.size() != alpha.size() ||
      alpha_stderr.size() != alpha.size() ||
      beta_provenance.size() != beta.size() ||
      beta_stderr.size() != beta.size()) {
    throw InvalidArgument("tridiagonal spectrum bookkeeping is inconsistent");
  }
  for (double b : beta) {
    if (!(b >= 0.0)) throw InvalidArgument("beta entries must be nonnegative");
  }
}

void write_csv(std::ostream& os, const TridiagonalSpectrum& spec) {
  os << "n,alpha,beta,provenance,stderr_alpha,stderr_beta\n";
  os << std::setprecision(17);
  for (std::size_t n = 0; n < spec.depth(); ++n) {
    os << n << ',' << spec.alpha[n] << ',';
    if (n > 0) os << spec.beta[n - 1];
    os << ',' << to_string(spec.alpha_provenance[n]) << ','
       << spec.alpha_stderr[n] << ',';
    if (n > 0) os << spec.beta_stderr[n - 1];
    os << '\n';
  }
}

TridiagonalEigen tridiagonal_eigs(const TridiagonalSpectrum& spec) {
  if (spec.empty()) throw InvalidArgument("empty tridiagonal spectrum");
  spec.validate();
  const auto n = static_cast<Eigen::Index>(spec.depth());
  RealVector diag(n);
  RealVector sub(std::max<Eigen::Index>(n - 1, 0));
  for (Eigen::Index k = 0; k < n; ++k) diag[k] = spec.alpha[static_cast<std::size_t>(k)];
  for (Eigen::Index k = 0; k + 1 < n; ++k) sub[k] = spec.beta[static_cast<std::size_t>(k)];

  TridiagonalEigen out;
  if (n == 1) {
    out.eigenvalues = {diag[0]};
    out.ground = {{1.0}, diag[0], 1};
    return out;
  }
  Eigen::SelfAdjointEigenSolver<RealMatrix> solver;
  solver.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) {
    throw Error("tridiagonal eigensolver did not converge");
  }
  const RealVector& evals = solver.eigenvalues();
  out.eigenvalues.assign(evals.data(), evals.data() + n);
  RealVector g = solver.eigenvectors().col(0);
  if (g[0] < 0.0) g = -g;
  out.ground.gamma.assign(g.data(), g.data() + n);
  out.ground.energy = evals[0];
  out.ground.basis_dim = static_cast<std::size_t>(n);
  return out;
}

bool is_hermitian(const ComplexMatrix& m, double tol) {
  if (m.rows() != m.cols()) return false;
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  return (m - m.adjoint()).cwiseAbs().maxCoeff() <= tol * scale;
}

std::pair<double, ComplexVector> dense_ground_state(const ComplexMatrix& h) {
  if (h.rows() != h.cols() || h.rows() == 0) {
    throw InvalidArgument("dense_ground_state needs a nonempty square matrix");
  }
  if (h.rows() > (Eigen::Index{1} << kMaxDenseQubits)) {
    throw Unsupported("dense_ground_state is capped at dimension 4096");
  }
  if (!is_hermitian(h)) throw InvalidArgument("matrix is not Hermitian");
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(h);
  if (solver.info() != Eigen::Success) {
    throw Error("dense eigensolver did not converge");
  }
  ComplexVector v = solver.eigenvectors().col(0);
  Eigen::Index imax = 0;
  v.cwiseAbs().maxCoeff(&imax);
  v *= std::conj(v[imax]) / std::abs(v[imax]);
  return {solver.eigenvalues()[0], v};
}

std::vector<std::uint64_t> sector_states(int n_sites, int n_up, int n_down) {
  if (n_sites < 1 || 2 * n_sites > kMaxDenseQubits) {
    throw InvalidArgument("sector site count out of range");
  }
  if (n_up < 0 || n_up > n_sites || n_down < 0 || n_down > n_sites) {
    throw InvalidArgument("sector particle numbers out of range");
  }
  const std::uint64_t half = (std::uint64_t{1} << n_sites) - 1;
  std::vector<std::uint64_t> out;
  for (std::uint64_t b = 0; b < (std::uint64_t{1} << (2 * n_sites)); ++b) {
    if (std::popcount(b & half) == n_up &&
        std::popcount(b >> n_sites) == n_down) {
      out.push_back(b);
    }
  }
  return out;
}

std::pair<double, ComplexVector> sector_ground_state(const QubitOperator& h,
                                                    int n_sites, int n_up,
                                                    int n_down) {
  if (h.n_qubits() != 2 * n_sites) {
    throw InvalidArgument("operator qubit count does not match 2 * n_sites");
  }
  const auto states = sector_states(n_sites, n_up, n_down);
  const ComplexMatrix full = h.to_dense();
  const auto m = static_cast<Eigen::Index>(states.size());
  ComplexMatrix block(m, m);
  for (Eigen::Index r = 0; r < m; ++r) {
    for (Eigen::Index c = 0; c < m; ++c) {
      block(r, c) = full(static_cast<Eigen::Index>(states[static_cast<std::size_t>(r)]),
                         static_cast<Eigen::Index>(states[static_cast<std::size_t>(c)]));
    }
  }
  const auto [e0, v] = dense_ground_state(block);
  ComplexVector out = ComplexVector::Zero(full.rows());
  for (Eigen::Index r = 0; r < m; ++r) {
    out[static_cast<Eigen::Index>(states[static_cast<std::size_t>(r)])] = v[r];
  }
  return {e0, out};
}

LanczosRun lanczos_run(const ComplexMatrix& h, const ComplexVector& start,
                       int max_steps, double tol) {
  if (h.rows() != h.cols() || h.rows() != start.size()) {
    throw InvalidArgument("Lanczos start vector does not match the matrix");
  }
  if (!is_hermitian(h)) throw InvalidArgument("Lanczos needs a Hermitian matrix");
  if (max_steps < 0) throw InvalidArgument("negative Lanczos step count");
  LanczosRun run;
  run.start_norm = start.norm();
  if (run.start_norm == 0.0) throw InvalidArgument("zero Lanczos start vector");

  const Eigen::Index dim = h.rows();
  const Eigen::Index max_levels =
      std::min<Eigen::Index>(dim, static_cast<Eigen::Index>(max_steps) + 1);
  ComplexMatrix basis(dim, max_levels);
  basis.col(0) = start / run.start_norm;
  Eigen::Index levels = 0;
  for (Eigen::Index n = 0; n < max_levels; ++n) {
    ComplexVector w = h * basis.col(n);
    const double a = basis.col(n).dot(w).real();
    run.spectrum.push_alpha(a);
    levels = n + 1;
    if (n + 1 == max_levels) break;
    w -= a * basis.col(n);
    if (n > 0) w -= run.spectrum.beta.back() * basis.col(n - 1);
    // Two passes of classical Gram-Schmidt against every earlier vector.
    for (int pass = 0; pass < 2; ++pass) {
      const ComplexMatrix q = basis.leftCols(n + 1);
      w -= q * (q.adjoint() * w);
    }
    const double b = w.norm();
    if (b < tol) break;
    run.spectrum.push_beta(b);
    basis.col(n + 1) = w / b;
  }
  run.basis = basis.leftCols(levels);
  return run;
}

TridiagonalSpectrum classical_lanczos(const ComplexMatrix& h,
                                      const ComplexVector& start,
                                      int max_steps, double tol) {
  return lanczos_run(h, start, max_steps, tol).spectrum;
}

std::vector<Complex> reference_resolvent(const ComplexMatrix& h,
                                         const ComplexVector& in,
                                         std::span<const double> omega_grid,
                                         double eta, Branch branch) {
  if (!(eta > 0.0)) throw InvalidArgument("eta must be positive");
  if (h.rows() != h.cols() || h.rows() != in.size()) {
    throw InvalidArgument("resolvent vector does not match the matrix");
  }
  std::vector<Complex> out;
  out.reserve(omega_grid.size());
  const ComplexMatrix id = ComplexMatrix::Identity(h.rows(), h.cols());
  const Complex broadening{0.0, branch_sign(branch) * eta};
  for (double omega : omega_grid) {
    if (in.squaredNorm() == 0.0) {
      out.emplace_back(0.0, 0.0);
      continue;
    }
    const ComplexMatrix a = (omega + broadening) * id - h;
    const ComplexVector x = a.partialPivLu().solve(in);
    out.push_back(in.dot(x));
  }
  return out;
}

double expectation(const ComplexMatrix& h, const ComplexVector& v) {
  return v.dot(h * v).real();
}

double fidelity(const ComplexVector& a, const ComplexVector& b) {
  const double na = a.squaredNorm();
  const double nb = b.squaredNorm();
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::norm(a.dot(b)) / (na * nb);
}

}  // namespace qlr
