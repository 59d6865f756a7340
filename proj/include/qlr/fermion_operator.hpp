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

#include <compare>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "qlr/qubit_operator.hpp"
#include "qlr/types.hpp"

namespace qlr {

enum class Spin : int { Up = 0, Down = 1 };

Spin parse_spin(const std::string& text);
const char* to_string(Spin s);

/// One ladder operator c_{site,spin} or its adjoint.
struct LadderFactor {
  int site = 0;
  Spin spin = Spin::Up;
  bool dagger = false;

  friend bool operator==(const LadderFactor&, const LadderFactor&) = default;
};

/// Sum of products of fermionic ladder operators.
///
/// Terms are kept normal ordered: creators to the left of annihilators, each
/// group sorted by ascending (site, spin). Two operators are equal iff their
/// term maps are.
class FermionOperator {
 public:
  using Product = std::vector<LadderFactor>;

  FermionOperator() = default;

  static FermionOperator identity(Complex coeff = 1.0);
  static FermionOperator annihilate(int site, Spin spin);
  static FermionOperator create(int site, Spin spin);
  static FermionOperator number(int site, Spin spin);

  /// Adds coeff * (f_0 f_1 ... f_k), normal ordering as needed.
  void add_product(const Product& factors, Complex coeff);

  const std::map<Product, Complex, bool (*)(const Product&, const Product&)>&
  terms() const {
    return terms_;
  }
  bool empty() const { return terms_.empty(); }
  std::size_t size() const { return terms_.size(); }

  FermionOperator& operator+=(const FermionOperator& other);
  FermionOperator& operator-=(const FermionOperator& other);
  FermionOperator& operator*=(Complex scalar);
  friend FermionOperator operator+(FermionOperator a, const FermionOperator& b) {
    return a += b;
  }
  friend FermionOperator operator-(FermionOperator a, const FermionOperator& b) {
    return a -= b;
  }
  friend FermionOperator operator*(FermionOperator a, Complex s) {
    return a *= s;
  }
  friend FermionOperator operator*(Complex s, FermionOperator a) {
    return a *= s;
  }
  friend FermionOperator operator*(const FermionOperator& a,
                                   const FermionOperator& b);
  friend bool operator==(const FermionOperator& a, const FermionOperator& b);

  FermionOperator adjoint() const;
  bool is_hermitian(double tol = 1e-12) const;

  /// Largest site index referenced, or -1 for a scalar operator.
  int max_site() const;

  std::string to_string() const;

 private:
  static bool product_less(const Product& a, const Product& b);
  void accumulate(const Product& canonical, Complex coeff);

  std::map<Product, Complex, bool (*)(const Product&, const Product&)> terms_{
      &FermionOperator::product_less};
};

/// Open-boundary Hubbard chain:
///   H = -t sum_{i,s} (c†_{i s} c_{i+1 s} + h.c.) + U sum_i n_{i↑} n_{i↓}
///       - mu sum_{i,s} n_{i s}
FermionOperator build_hubbard(int n_sites, double t, double U, double mu);

/// Hopping and chemical-potential part of the Hubbard chain (U = 0).
FermionOperator build_hubbard_kinetic(int n_sites, double t, double mu);
/// U sum_i n_{i↑} n_{i↓}.
FermionOperator build_hubbard_interaction(int n_sites, double U);

/// Jordan–Wigner image on 2 * n_sites qubits. Spin-up modes occupy qubits
/// 0..n_sites-1 and spin-down modes n_sites..2*n_sites-1.
QubitOperator jordan_wigner(const FermionOperator& op, int n_sites);

/// Qubit carrying mode (site, spin) under the ordering above.
int mode_qubit(int site, Spin spin, int n_sites);

/// Hermitian pair (B + B†, i(B - B†)) of an arbitrary operator B, so that
/// B = (plus - i minus) / 2 and B† = (plus + i minus) / 2.
std::pair<FermionOperator, FermionOperator> hermitian_parts(
    const FermionOperator& b);

/// Hermitian pair of a single ladder operator:
///   plus = c† + c,  minus = i (c† - c).
/// Composite inputs are rejected.
std::pair<FermionOperator, FermionOperator> hermitian_split(
    const FermionOperator& ladder);

/// (plus + i minus) / 2, the annihilator of a split pair.
FermionOperator recombine_annihilator(const FermionOperator& plus,
                                      const FermionOperator& minus);
/// (plus - i minus) / 2, the creator of a split pair.
FermionOperator recombine_creator(const FermionOperator& plus,
                                  const FermionOperator& minus);

}  // namespace qlr
