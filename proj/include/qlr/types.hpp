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

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace qlr {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;

inline constexpr Complex kI{0.0, 1.0};

/// Largest Hilbert space the dense oracle will touch (12 qubits).
inline constexpr int kMaxDenseQubits = 12;

/// Sign of the broadening in omega +/- i*eta.
enum class Branch { Retarded, Advanced };

inline double branch_sign(Branch b) { return b == Branch::Retarded ? 1.0 : -1.0; }

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input: wrong shapes, out-of-range indices, violated preconditions.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// The requested configuration is outside what the simulator supports.
class Unsupported : public Error {
 public:
  using Error::Error;
};

}  // namespace qlr
