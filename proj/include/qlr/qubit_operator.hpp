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
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qlr/types.hpp"

namespace qlr {

/// A tensor product of single-qubit Paulis stored as X and Z bit masks.
///
/// Qubit q is bit q of both masks. The word represents
/// i^{|x & z|} X^x Z^z, so every word (including Y factors) is Hermitian
/// and unitary.
struct PauliWord {
  std::uint32_t x = 0;
  std::uint32_t z = 0;

  static PauliWord identity() { return {}; }
  static PauliWord single(int qubit, char pauli);
  /// Parses e.g. "IXYZ"; character q acts on qubit q.
  static PauliWord parse(std::string_view text);

  bool is_identity() const { return x == 0 && z == 0; }
  std::string to_string(int n_qubits) const;

  /// Applies the word to computational basis state |b>, returning the
  /// phase and writing the image basis index to `out`.
  Complex apply(std::uint64_t b, std::uint64_t& out) const;

  friend bool operator==(const PauliWord&, const PauliWord&) = default;
  friend auto operator<=>(const PauliWord&, const PauliWord&) = default;
};

/// Product of two words: a * b = phase * result.
PauliWord multiply(const PauliWord& a, const PauliWord& b, Complex& phase);

/// Sum of Pauli words with complex coefficients on a fixed number of qubits.
/// Duplicate words are merged on insertion; exact zeros are pruned.
class QubitOperator {
 public:
  using TermMap = std::map<PauliWord, Complex>;

  explicit QubitOperator(int n_qubits = 0);

  static QubitOperator identity(int n_qubits, Complex coeff = 1.0);
  static QubitOperator from_word(int n_qubits, PauliWord word,
                                 Complex coeff = 1.0);

  int n_qubits() const { return n_qubits_; }
  const TermMap& terms() const { return terms_; }
  std::size_t size() const { return terms_.size(); }
  bool empty() const { return terms_.empty(); }

  void add_term(PauliWord word, Complex coeff);
  Complex coefficient(const PauliWord& word) const;

  QubitOperator& operator+=(const QubitOperator& other);
  QubitOperator& operator-=(const QubitOperator& other);
  QubitOperator& operator*=(Complex scalar);
  friend QubitOperator operator+(QubitOperator a, const QubitOperator& b) {
    return a += b;
  }
  friend QubitOperator operator-(QubitOperator a, const QubitOperator& b) {
    return a -= b;
  }
  friend QubitOperator operator*(QubitOperator a, Complex s) { return a *= s; }
  friend QubitOperator operator*(Complex s, QubitOperator a) { return a *= s; }
  friend QubitOperator operator*(const QubitOperator& a,
                                 const QubitOperator& b);

  QubitOperator adjoint() const;

  /// Drops terms with |coeff| <= tol.
  QubitOperator pruned(double tol) const;

  /// True when every coefficient has |Im| <= tol (words are Hermitian).
  bool is_hermitian(double tol = 1e-12) const;

  /// Sum of |coeff| over non-identity words.
  double non_identity_weight() const;

  ComplexMatrix to_dense() const;
  /// y = op * v without forming the dense matrix.
  ComplexVector apply(const ComplexVector& v) const;

  /// Line format: `coeff_re coeff_im pauli_word`, one term per line.
  void write_text(std::ostream& os) const;
  static QubitOperator read_text(std::istream& is);

  friend bool operator==(const QubitOperator&, const QubitOperator&) = default;

 private:
  void check_compatible(const QubitOperator& other) const;

  int n_qubits_;
  TermMap terms_;
};

/// op^0 .. op^max_power; index k holds op^k.
std::vector<QubitOperator> powers(const QubitOperator& op, int max_power,
                                  double prune_tol = 1e-13);

/// Real polynomial sum_k coeffs[k] * H^k built from precomputed powers.
QubitOperator polynomial(std::span<const QubitOperator> h_powers,
                         std::span<const double> coeffs);

}  // namespace qlr
