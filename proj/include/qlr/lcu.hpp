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

#include <vector>

#include "qlr/qubit_operator.hpp"

namespace qlr {

/// Operator written as scale * (sum_l weight_l * phase_l * word_l) - shift * I.
///
/// `weights` are nonnegative and sum to at most 1, so the encoded operator
/// sum_l weight_l * phase_l * word_l has spectral norm <= 1 and can be
/// block encoded by a PREPARE/SELECT pair.
struct LcuDecomposition {
  int n_qubits = 0;
  std::vector<PauliWord> words;
  std::vector<Complex> phases;  // unit modulus
  std::vector<double> weights;
  double scale = 1.0;
  double shift = 0.0;
  QubitOperator source;

  std::size_t size() const { return words.size(); }
  /// Ancilla qubits needed to index the terms (at least 1).
  int ancilla_qubits() const;

  /// sum_l weight_l * phase_l * word_l.
  QubitOperator encoded() const;
  /// scale * encoded - shift * I.
  QubitOperator reconstructed() const;
  ComplexMatrix encoded_dense() const;
};

/// Hermitian input only. Picks shift c and scale s so that (op + c I) / s is
/// positive semidefinite with norm <= 1, using the Pauli-weight bound
/// c = sum_{P != I} |a_P| - a_I, s = 2 sum_{P != I} |a_P|.
LcuDecomposition normalize_and_shift(const QubitOperator& op);

/// General (possibly non-Hermitian) operator with shift 0 and
/// scale = sum |a_P|.
LcuDecomposition lcu_decompose(const QubitOperator& op);

}  // namespace qlr
