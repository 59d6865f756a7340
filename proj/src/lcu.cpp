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

#include "qlr/lcu.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

namespace qlr {

namespace {

// Encodes the zero operator as (I - I) / 2.
LcuDecomposition zero_encoding(const QubitOperator& op) {
  LcuDecomposition dec;
  dec.n_qubits = op.n_qubits();
  dec.words = {PauliWord::identity(), PauliWord::identity()};
  dec.phases = {1.0, -1.0};
  dec.weights = {0.5, 0.5};
  dec.scale = 1.0;
  dec.shift = 0.0;
  dec.source = op;
  return dec;
}

double coefficient_norm(const QubitOperator& op) {
  double n = 0.0;
  for (const auto& [w, c] : op.terms()) n += std::abs(c);
  return n;
}

}  // namespace

int LcuDecomposition::ancilla_qubits() const {
  if (words.size() <= 2) return 1;
  return std::bit_width(words.size() - 1);
}

QubitOperator LcuDecomposition::encoded() const {
  QubitOperator op(n_qubits);
  for (std::size_t l = 0; l < words.size(); ++l) {
    op.add_term(words[l], weights[l] * phases[l]);
  }
  return op;
}

QubitOperator LcuDecomposition::reconstructed() const {
  QubitOperator op = encoded() * Complex{scale, 0.0};
  op.add_term(PauliWord::identity(), -shift);
  return op;
}

ComplexMatrix LcuDecomposition::encoded_dense() const {
  return encoded().to_dense();
}

LcuDecomposition normalize_and_shift(const QubitOperator& op) {
  const double tol = 1e-10 * std::max(1.0, coefficient_norm(op));
  if (!op.is_hermitian(tol)) {
    throw InvalidArgument(
        "normalize_and_shift needs a Hermitian operator; split it first");
  }
  const double a_id = op.coefficient(PauliWord::identity()).real();
  const double weight = op.non_identity_weight();

  if (weight == 0.0) {
    if (a_id == 0.0) return zero_encoding(op);
    LcuDecomposition dec;
    dec.n_qubits = op.n_qubits();
    dec.words = {PauliWord::identity()};
    dec.phases = {1.0};
    dec.weights = {1.0};
    dec.scale = std::abs(a_id);
    dec.shift = a_id > 0.0 ? 0.0 : 2.0 * std::abs(a_id);
    dec.source = op;
    return dec;
  }

  LcuDecomposition dec;
  dec.n_qubits = op.n_qubits();
  dec.shift = weight - a_id;
  dec.scale = 2.0 * weight;
  dec.source = op;
  dec.words.push_back(PauliWord::identity());
  dec.phases.push_back(1.0);
  dec.weights.push_back(0.5);
  for (const auto& [w, c] : op.terms()) {
    if (w.is_identity()) continue;
    const double re = c.real();
    dec.words.push_back(w);
    dec.phases.push_back(re < 0.0 ? -1.0 : 1.0);
    dec.weights.push_back(std::abs(re) / dec.scale);
  }
  return dec;
}

LcuDecomposition lcu_decompose(const QubitOperator& op) {
  const double norm = coefficient_norm(op);
  if (norm == 0.0) return zero_encoding(op);
  LcuDecomposition dec;
  dec.n_qubits = op.n_qubits();
  dec.scale = norm;
  dec.shift = 0.0;
  dec.source = op;
  for (const auto& [w, c] : op.terms()) {
    dec.words.push_back(w);
    dec.phases.push_back(c / std::abs(c));
    dec.weights.push_back(std::abs(c) / norm);
  }
  return dec;
}

}  // namespace qlr
