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

// Reference constructions built straight from matrices, without the
// library's operator algebra.

#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace testing_support {

using cd = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;

inline Mat pauli(char p) {
  Mat m(2, 2);
  switch (p) {
    case 'I': m << 1, 0, 0, 1; break;
    case 'X': m << 0, 1, 1, 0; break;
    case 'Y': m << 0, cd(0, -1), cd(0, 1), 0; break;
    case 'Z': m << 1, 0, 0, -1; break;
  }
  return m;
}

inline Mat kron(const Mat& a, const Mat& b) {
  Mat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

// Character q of `word` acts on qubit q (bit q of the basis index).
inline Mat pauli_string(const std::string& word) {
  Mat m = Mat::Identity(1, 1);
  for (char c : word) m = kron(pauli(c), m);
  return m;
}

// Mode order: site s spin up -> s, spin down -> L + s.
inline int mode_index(int site, int spin, int n_sites) { return spin * n_sites + site; }

// Annihilator (dagger = false) or creator on `mode` in the occupation basis,
// sign (-1)^(occupied modes below).
inline Mat ladder(int mode, bool dagger, int n_modes) {
  const Eigen::Index dim = Eigen::Index{1} << n_modes;
  Mat m = Mat::Zero(dim, dim);
  for (std::uint64_t b = 0; b < static_cast<std::uint64_t>(dim); ++b) {
    const bool occ = (b >> mode) & 1u;
    if (occ == dagger) continue;
    const std::uint64_t image = b ^ (std::uint64_t{1} << mode);
    const int below = std::popcount(b & ((std::uint64_t{1} << mode) - 1));
    m(static_cast<Eigen::Index>(image), static_cast<Eigen::Index>(b)) = (below % 2) ? -1.0 : 1.0;
  }
  return m;
}

inline Mat hubbard(int L, double t, double U, double mu) {
  const int n = 2 * L;
  const Eigen::Index dim = Eigen::Index{1} << n;
  Mat h = Mat::Zero(dim, dim);
  for (int spin = 0; spin < 2; ++spin) {
    for (int s = 0; s + 1 < L; ++s) {
      const int a = mode_index(s, spin, L);
      const int b = mode_index(s + 1, spin, L);
      h -= t * (ladder(a, true, n) * ladder(b, false, n) + ladder(b, true, n) * ladder(a, false, n));
    }
    for (int s = 0; s < L; ++s) {
      const int a = mode_index(s, spin, L);
      h -= mu * ladder(a, true, n) * ladder(a, false, n);
    }
  }
  for (int s = 0; s < L; ++s) {
    const int u = mode_index(s, 0, L);
    const int d = mode_index(s, 1, L);
    h += U * (ladder(u, true, n) * ladder(u, false, n)) * (ladder(d, true, n) * ladder(d, false, n));
  }
  return h;
}

// Orthonormal Krylov basis of {v, Hv, H^2 v, ...} by repeated Gram-Schmidt
// on explicit powers; stops when the new direction vanishes.
inline Mat krylov_basis(const Mat& h, const Vec& v, int max_dim, double tol = 1e-9) {
  std::vector<Vec> q;
  Vec w = v;
  for (int k = 0; k < max_dim; ++k) {
    Vec r = w;
    for (int pass = 0; pass < 3; ++pass) {
      for (const auto& x : q) r -= x.dot(r) * x;
    }
    if (r.norm() < tol * std::max(1.0, w.norm())) break;
    q.push_back(r.normalized());
    w = h * q.back();
  }
  Mat out(v.size(), static_cast<Eigen::Index>(q.size()));
  for (std::size_t k = 0; k < q.size(); ++k) out.col(static_cast<Eigen::Index>(k)) = q[k];
  return out;
}

// <a| (z - H)^{-1} |b> by eigendecomposition.
inline cd resolvent_element(const Mat& h, const Vec& a, const Vec& b, cd z) {
  Eigen::SelfAdjointEigenSolver<Mat> es(h);
  const Vec ca = es.eigenvectors().adjoint() * a;
  const Vec cb = es.eigenvectors().adjoint() * b;
  cd g = 0.0;
  for (Eigen::Index k = 0; k < ca.size(); ++k) {
    g += std::conj(ca[k]) * cb[k] / (z - es.eigenvalues()[k]);
  }
  return g;
}

inline Vec random_state(int dim, unsigned seed) {
  std::srand(seed);
  Vec v = Vec::Random(dim);
  return v.normalized();
}

}  // namespace testing_support
