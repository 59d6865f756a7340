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

#include <sstream>

#include <gtest/gtest.h>

#include "qlr/fermion_operator.hpp"
#include "qlr/lcu.hpp"
#include "qlr/oracle.hpp"
#include "qlr/qubit_operator.hpp"
#include "support/dense_models.hpp"

using namespace qlr;
namespace ts = testing_support;

namespace {

double max_abs(const ComplexMatrix& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

TEST(PauliWord, ProductMatchesDenseMatrices) {
  const std::vector<std::string> words = {"IX", "YZ", "ZZ", "XY", "YY", "IZ", "XI"};
  for (const auto& a : words) {
    for (const auto& b : words) {
      Complex phase;
      const PauliWord p = multiply(PauliWord::parse(a), PauliWord::parse(b), phase);
      const ComplexMatrix lhs = ts::pauli_string(a) * ts::pauli_string(b);
      const ComplexMatrix rhs = phase * ts::pauli_string(p.to_string(2));
      EXPECT_LT(max_abs(lhs - rhs), 1e-14) << a << " * " << b;
    }
  }
}

TEST(QubitOperator, DenseMatchesKroneckerExpansion) {
  QubitOperator op(3);
  op.add_term(PauliWord::parse("XYZ"), {0.5, -0.25});
  op.add_term(PauliWord::parse("IIZ"), 2.0);
  op.add_term(PauliWord::parse("YII"), {0.0, 1.0});
  const ComplexMatrix expect = Complex{0.5, -0.25} * ts::pauli_string("XYZ") +
                               2.0 * ts::pauli_string("IIZ") +
                               Complex{0.0, 1.0} * ts::pauli_string("YII");
  EXPECT_LT(max_abs(op.to_dense() - expect), 1e-14);
  const ComplexVector v = ts::random_state(8, 3);
  EXPECT_LT((op.apply(v) - expect * v).norm(), 1e-13);
}

TEST(QubitOperator, DuplicateWordsMergeAndCancel) {
  QubitOperator op(2);
  op.add_term(PauliWord::parse("XZ"), 1.5);
  op.add_term(PauliWord::parse("XZ"), -1.5);
  EXPECT_TRUE(op.empty());
  op.add_term(PauliWord::parse("ZZ"), 1.0);
  op.add_term(PauliWord::parse("ZZ"), 2.0);
  EXPECT_EQ(op.size(), 1u);
  EXPECT_EQ(op.coefficient(PauliWord::parse("ZZ")), Complex(3.0));
}

TEST(QubitOperator, TextRoundTrip) {
  QubitOperator op(3);
  op.add_term(PauliWord::parse("XYZ"), {0.1, -0.3});
  op.add_term(PauliWord::parse("III"), 1.0 / 3.0);
  std::stringstream ss;
  op.write_text(ss);
  EXPECT_EQ(QubitOperator::read_text(ss), op);
}

TEST(QubitOperator, PolynomialMatchesDensePowers) {
  const QubitOperator h = jordan_wigner(build_hubbard(2, 1.0, 4.0, 0.3), 2);
  const auto hp = powers(h, 3);
  const std::vector<double> coeffs = {0.5, -1.0, 0.25, 2.0};
  const ComplexMatrix hd = h.to_dense();
  const ComplexMatrix expect = 0.5 * ComplexMatrix::Identity(16, 16) - hd +
                               0.25 * hd * hd + 2.0 * hd * hd * hd;
  EXPECT_LT(max_abs(polynomial(hp, coeffs).to_dense() - expect), 1e-10);
}

TEST(FermionOperator, SelfNegationIsEmpty) {
  const FermionOperator h = build_hubbard(3, 1.0, 2.0, 0.5);
  EXPECT_TRUE((h - h).empty());
  EXPECT_TRUE((h + h * Complex(-1.0)).empty());
}

TEST(FermionOperator, NormalOrderingGivesCanonicalEquality) {
  // c0 c1^dagger = -c1^dagger c0
  FermionOperator a;
  a.add_product({{0, Spin::Up, false}, {1, Spin::Up, true}}, 1.0);
  FermionOperator b;
  b.add_product({{1, Spin::Up, true}, {0, Spin::Up, false}}, -1.0);
  EXPECT_EQ(a, b);
  // c c^dagger = 1 - c^dagger c
  const FermionOperator c = FermionOperator::annihilate(0, Spin::Down) *
                            FermionOperator::create(0, Spin::Down);
  EXPECT_EQ(c, FermionOperator::identity() - FermionOperator::number(0, Spin::Down));
}

TEST(Hubbard, SingleSiteWithoutInteractionIsEmpty) {
  EXPECT_TRUE(build_hubbard(1, 0.7, 0.0, 0.0).empty());
  EXPECT_THROW(build_hubbard(0, 1.0, 1.0, 0.0), InvalidArgument);
}

TEST(Hubbard, JordanWignerMatchesOccupationBasis) {
  for (int L = 1; L <= 3; ++L) {
    const ComplexMatrix h = jordan_wigner(build_hubbard(L, 1.0, 4.0, 0.3), L).to_dense();
    EXPECT_LT(max_abs(h - ts::hubbard(L, 1.0, 4.0, 0.3)), 1e-12) << "L=" << L;
    EXPECT_TRUE(is_hermitian(h, 1e-14));
  }
}

TEST(Hubbard, TwoSiteHoppingOneBodyLevels) {
  // one up electron, nothing else: eigenvalues of the hopping matrix
  const ComplexMatrix h = jordan_wigner(build_hubbard(2, 1.0, 0.0, 0.0), 2).to_dense();
  const auto states = sector_states(2, 1, 0);
  ComplexMatrix block(2, 2);
  for (int r = 0; r < 2; ++r) {
    for (int c = 0; c < 2; ++c) block(r, c) = h(states[r], states[c]);
  }
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(block);
  EXPECT_NEAR(es.eigenvalues()[0], -1.0, 1e-12);
  EXPECT_NEAR(es.eigenvalues()[1], 1.0, 1e-12);
}

TEST(Hubbard, TwoSiteHalfFillingGroundEnergy) {
  const QubitOperator h = jordan_wigner(build_hubbard(2, 1.0, 4.0, 0.0), 2);
  const auto [e0, psi] = sector_ground_state(h, 2, 1, 1);
  // closed form from the 4x4 singlet block
  EXPECT_NEAR(e0, 2.0 - 2.0 * std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(psi.norm(), 1.0, 1e-12);
}

TEST(JordanWigner, CanonicalAnticommutators) {
  const int L = 3;
  for (int i = 0; i < 2 * L; ++i) {
    for (int j = 0; j < 2 * L; ++j) {
      const int si = i % L, sj = j % L;
      const Spin pi = i < L ? Spin::Up : Spin::Down;
      const Spin pj = j < L ? Spin::Up : Spin::Down;
      const ComplexMatrix a = jordan_wigner(FermionOperator::annihilate(si, pi), L).to_dense();
      const ComplexMatrix b = jordan_wigner(FermionOperator::create(sj, pj), L).to_dense();
      const ComplexMatrix ac = a * b + b * a;
      const ComplexMatrix expect =
          (i == j ? 1.0 : 0.0) * ComplexMatrix::Identity(a.rows(), a.cols());
      EXPECT_LT(max_abs(ac - expect), 1e-14) << i << "," << j;
      const ComplexMatrix aa = a * jordan_wigner(FermionOperator::annihilate(sj, pj), L).to_dense();
      const ComplexMatrix aa2 = jordan_wigner(FermionOperator::annihilate(sj, pj), L).to_dense() * a;
      EXPECT_LT(max_abs(aa + aa2), 1e-14);
    }
  }
}

TEST(JordanWigner, AnticommutatorIsSymbolicIdentity) {
  const auto c0 = FermionOperator::annihilate(0, Spin::Up);
  const auto c0d = FermionOperator::create(0, Spin::Up);
  const auto c1d = FermionOperator::create(1, Spin::Up);
  EXPECT_EQ(jordan_wigner(c0 * c0d + c0d * c0, 2), QubitOperator::identity(4));
  EXPECT_TRUE(jordan_wigner(c0 * c1d + c1d * c0, 2).empty());
}

TEST(JordanWigner, NumberOperatorIsHalfIMinusZ) {
  const QubitOperator n = jordan_wigner(FermionOperator::number(0, Spin::Up), 1);
  QubitOperator expect(2);
  expect.add_term(PauliWord::identity(), 0.5);
  expect.add_term(PauliWord::parse("ZI"), -0.5);
  EXPECT_EQ(n, expect);
}

TEST(JordanWigner, RejectsOutOfRangeSites) {
  EXPECT_THROW(jordan_wigner(FermionOperator::create(2, Spin::Up), 2), InvalidArgument);
}

TEST(HermitianSplit, PartsAreHermitianAndRecombine) {
  const auto c = FermionOperator::annihilate(1, Spin::Down);
  const auto [plus, minus] = hermitian_split(c);
  EXPECT_TRUE(plus.is_hermitian());
  EXPECT_TRUE(minus.is_hermitian());
  EXPECT_EQ(recombine_annihilator(plus, minus), c);
  EXPECT_EQ(recombine_creator(plus, minus), FermionOperator::create(1, Spin::Down));
  // the split of c and of c^dagger is the same pair
  const auto [p2, m2] = hermitian_split(FermionOperator::create(1, Spin::Down));
  EXPECT_EQ(p2, plus);
  EXPECT_EQ(m2, minus);
  EXPECT_THROW(hermitian_split(FermionOperator::number(0, Spin::Up)), InvalidArgument);
}

TEST(HermitianSplit, SingleModePlusHasUnitNorm) {
  const auto [plus, minus] = hermitian_split(FermionOperator::create(0, Spin::Up));
  const ComplexMatrix p = jordan_wigner(plus, 1).to_dense();
  Eigen::JacobiSVD<ComplexMatrix> svd(p);
  EXPECT_NEAR(svd.singularValues()[0], 1.0, 1e-14);
  const ComplexMatrix m = jordan_wigner(minus, 1).to_dense();
  EXPECT_LT(max_abs(m - m.adjoint()), 1e-15);
}

TEST(NormalizeAndShift, SingleZ) {
  const auto dec = normalize_and_shift(QubitOperator::from_word(1, PauliWord::parse("Z")));
  EXPECT_DOUBLE_EQ(dec.shift, 1.0);
  EXPECT_DOUBLE_EQ(dec.scale, 2.0);
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(dec.encoded_dense());
  EXPECT_NEAR(es.eigenvalues()[0], 0.0, 1e-15);
  EXPECT_NEAR(es.eigenvalues()[1], 1.0, 1e-15);
}

TEST(NormalizeAndShift, ZeroOperator) {
  const auto dec = normalize_and_shift(QubitOperator(2));
  EXPECT_DOUBLE_EQ(dec.scale, 1.0);
  EXPECT_DOUBLE_EQ(dec.shift, 0.0);
  EXPECT_LT(max_abs(dec.encoded_dense()), 1e-15);
}

TEST(NormalizeAndShift, RejectsNonHermitian) {
  const QubitOperator c = jordan_wigner(FermionOperator::annihilate(0, Spin::Up), 1);
  EXPECT_THROW(normalize_and_shift(c), InvalidArgument);
}

TEST(NormalizeAndShift, PropertiesOnModels) {
  for (int L = 1; L <= 3; ++L) {
    for (double U : {0.0, 2.0, 4.0}) {
      const QubitOperator h = jordan_wigner(build_hubbard(L, 1.0, U, 0.4), L);
      if (h.empty()) continue;
      const auto dec = normalize_and_shift(h);
      const ComplexMatrix enc = dec.encoded_dense();
      Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(enc);
      EXPECT_GE(es.eigenvalues().minCoeff(), -1e-12);
      EXPECT_LE(es.eigenvalues().maxCoeff(), 1.0 + 1e-12);
      const ComplexMatrix back =
          dec.scale * enc - dec.shift * ComplexMatrix::Identity(enc.rows(), enc.cols());
      EXPECT_LT(max_abs(back - h.to_dense()), 1e-12);
      // the Pauli-weight bound contains the true spectral range
      Eigen::SelfAdjointEigenSolver<ComplexMatrix> hs(h.to_dense());
      EXPECT_LE(-dec.shift, hs.eigenvalues().minCoeff() + 1e-12);
      EXPECT_GE(dec.scale - dec.shift, hs.eigenvalues().maxCoeff() - 1e-12);
      double wsum = 0.0;
      for (double w : dec.weights) {
        EXPECT_GE(w, 0.0);
        wsum += w;
      }
      EXPECT_NEAR(wsum, 1.0, 1e-12);
    }
  }
}

TEST(LcuDecompose, ReconstructsNonHermitianOperators) {
  const QubitOperator op = jordan_wigner(FermionOperator::annihilate(1, Spin::Up) *
                                             FermionOperator::create(0, Spin::Down),
                                         2);
  const auto dec = lcu_decompose(op);
  EXPECT_DOUBLE_EQ(dec.shift, 0.0);
  EXPECT_LT(max_abs(dec.reconstructed().to_dense() - op.to_dense()), 1e-14);
  for (const auto& p : dec.phases) EXPECT_NEAR(std::abs(p), 1.0, 1e-15);
}
