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

#include "qlr/qubit_operator.hpp"

#include <bit>
#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

namespace qlr {

namespace {

constexpr double kMergeTol = 1e-14;
constexpr int kMaxQubits = 32;

Complex i_power(int k) {
  switch (((k % 4) + 4) % 4) {
    case 0: return {1.0, 0.0};
    case 1: return {0.0, 1.0};
    case 2: return {-1.0, 0.0};
    default: return {0.0, -1.0};
  }
}

}  // namespace

PauliWord PauliWord::single(int qubit, char pauli) {
  if (qubit < 0 || qubit >= kMaxQubits) {
    throw InvalidArgument("Pauli qubit index out of range");
  }
  const std::uint32_t bit = 1u << qubit;
  switch (pauli) {
    case 'I': return {};
    case 'X': return {bit, 0};
    case 'Y': return {bit, bit};
    case 'Z': return {0, bit};
    default: throw InvalidArgument(std::string("unknown Pauli '") + pauli + "'");
  }
}

PauliWord PauliWord::parse(std::string_view text) {
  if (text.size() > static_cast<std::size_t>(kMaxQubits)) {
    throw InvalidArgument("Pauli word longer than 32 qubits");
  }
  PauliWord w;
  for (std::size_t q = 0; q < text.size(); ++q) {
    const PauliWord s = single(static_cast<int>(q), text[q]);
    w.x |= s.x;
    w.z |= s.z;
  }
  return w;
}

std::string PauliWord::to_string(int n_qubits) const {
  std::string s(static_cast<std::size_t>(n_qubits), 'I');
  for (int q = 0; q < n_qubits; ++q) {
    const bool bx = (x >> q) & 1u;
    const bool bz = (z >> q) & 1u;
    s[static_cast<std::size_t>(q)] = bx ? (bz ? 'Y' : 'X') : (bz ? 'Z' : 'I');
  }
  return s;
}

Complex PauliWord::apply(std::uint64_t b, std::uint64_t& out) const {
  out = b ^ x;
  const int y = std::popcount(x & z);
  const int sign = std::popcount(static_cast<std::uint64_t>(z) & b) & 1;
  return i_power(y + 2 * sign);
}

PauliWord multiply(const PauliWord& a, const PauliWord& b, Complex& phase) {
  const PauliWord c{a.x ^ b.x, a.z ^ b.z};
  const int k = std::popcount(a.x & a.z) + std::popcount(b.x & b.z) +
                2 * std::popcount(a.z & b.x) - std::popcount(c.x & c.z);
  phase = i_power(k);
  return c;
}

QubitOperator::QubitOperator(int n_qubits) : n_qubits_(n_qubits) {
  if (n_qubits < 0 || n_qubits > kMaxQubits) {
    throw InvalidArgument("qubit count out of range");
  }
}

QubitOperator QubitOperator::identity(int n_qubits, Complex coeff) {
  QubitOperator op(n_qubits);
  op.add_term(PauliWord::identity(), coeff);
  return op;
}

QubitOperator QubitOperator::from_word(int n_qubits, PauliWord word,
                                       Complex coeff) {
  QubitOperator op(n_qubits);
  op.add_term(word, coeff);
  return op;
}

void QubitOperator::add_term(PauliWord word, Complex coeff) {
  const std::uint32_t mask =
      n_qubits_ == 32 ? ~0u : ((1u << n_qubits_) - 1u);
  if (((word.x | word.z) & ~mask) != 0) {
    throw InvalidArgument("Pauli word acts outside the operator's qubits");
  }
  auto [it, inserted] = terms_.try_emplace(word, coeff);
  if (!inserted) it->second += coeff;
  if (std::abs(it->second) <= kMergeTol) terms_.erase(it);
}

Complex QubitOperator::coefficient(const PauliWord& word) const {
  const auto it = terms_.find(word);
  return it == terms_.end() ? Complex{} : it->second;
}

void QubitOperator::check_compatible(const QubitOperator& other) const {
  if (other.n_qubits_ != n_qubits_) {
    throw InvalidArgument("qubit operators act on different qubit counts");
  }
}

QubitOperator& QubitOperator::operator+=(const QubitOperator& other) {
  check_compatible(other);
  for (const auto& [w, c] : other.terms_) add_term(w, c);
  return *this;
}

QubitOperator& QubitOperator::operator-=(const QubitOperator& other) {
  check_compatible(other);
  for (const auto& [w, c] : other.terms_) add_term(w, -c);
  return *this;
}

QubitOperator& QubitOperator::operator*=(Complex scalar) {
  if (scalar == Complex{}) {
    terms_.clear();
    return *this;
  }
  for (auto it = terms_.begin(); it != terms_.end();) {
    it->second *= scalar;
    if (std::abs(it->second) <= kMergeTol) {
      it = terms_.erase(it);
    } else {
      ++it;
    }
  }
  return *this;
}

QubitOperator operator*(const QubitOperator& a, const QubitOperator& b) {
  a.check_compatible(b);
  QubitOperator out(a.n_qubits_);
  for (const auto& [wa, ca] : a.terms_) {
    for (const auto& [wb, cb] : b.terms_) {
      Complex phase;
      const PauliWord w = multiply(wa, wb, phase);
      out.add_term(w, phase * ca * cb);
    }
  }
  return out;
}

QubitOperator QubitOperator::adjoint() const {
  QubitOperator out(n_qubits_);
  for (const auto& [w, c] : terms_) out.terms_.emplace(w, std::conj(c));
  return out;
}

QubitOperator QubitOperator::pruned(double tol) const {
  QubitOperator out(n_qubits_);
  for (const auto& [w, c] : terms_) {
    if (std::abs(c) > tol) out.terms_.emplace(w, c);
  }
  return out;
}

bool QubitOperator::is_hermitian(double tol) const {
  for (const auto& [w, c] : terms_) {
    if (std::abs(c.imag()) > tol) return false;
  }
  return true;
}

double QubitOperator::non_identity_weight() const {
  double sum = 0.0;
  for (const auto& [w, c] : terms_) {
    if (!w.is_identity()) sum += std::abs(c);
  }
  return sum;
}

ComplexMatrix QubitOperator::to_dense() const {
  if (n_qubits_ > kMaxDenseQubits) {
    throw Unsupported("dense matrices are capped at 12 qubits");
  }
  const std::uint64_t dim = std::uint64_t{1} << n_qubits_;
  ComplexMatrix m = ComplexMatrix::Zero(static_cast<Eigen::Index>(dim),
                                        static_cast<Eigen::Index>(dim));
  for (const auto& [w, c] : terms_) {
    for (std::uint64_t b = 0; b < dim; ++b) {
      std::uint64_t out = 0;
      const Complex ph = w.apply(b, out);
      m(static_cast<Eigen::Index>(out), static_cast<Eigen::Index>(b)) +=
          c * ph;
    }
  }
  return m;
}

ComplexVector QubitOperator::apply(const ComplexVector& v) const {
  const std::uint64_t dim = std::uint64_t{1} << n_qubits_;
  if (static_cast<std::uint64_t>(v.size()) != dim) {
    throw InvalidArgument("vector length does not match qubit count");
  }
  ComplexVector y = ComplexVector::Zero(v.size());
  for (const auto& [w, c] : terms_) {
    for (std::uint64_t b = 0; b < dim; ++b) {
      std::uint64_t out = 0;
      const Complex ph = w.apply(b, out);
      y[static_cast<Eigen::Index>(out)] +=
          c * ph * v[static_cast<Eigen::Index>(b)];
    }
  }
  return y;
}

void QubitOperator::write_text(std::ostream& os) const {
  os << std::setprecision(17);
  for (const auto& [w, c] : terms_) {
    os << c.real() << ' ' << c.imag() << ' ' << w.to_string(n_qubits_)
       << '\n';
  }
}

QubitOperator QubitOperator::read_text(std::istream& is) {
  std::string line;
  std::vector<std::pair<PauliWord, Complex>> parsed;
  int n_qubits = -1;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    double re = 0.0;
    double im = 0.0;
    std::string word;
    if (!(ls >> re >> im >> word)) {
      throw InvalidArgument("malformed operator line " +
                            std::to_string(line_no));
    }
    if (n_qubits < 0) {
      n_qubits = static_cast<int>(word.size());
    } else if (static_cast<int>(word.size()) != n_qubits) {
      throw InvalidArgument("inconsistent Pauli word length on line " +
                            std::to_string(line_no));
    }
    parsed.emplace_back(PauliWord::parse(word), Complex{re, im});
  }
  QubitOperator op(n_qubits < 0 ? 0 : n_qubits);
  for (const auto& [w, c] : parsed) op.add_term(w, c);
  return op;
}

std::vector<QubitOperator> powers(const QubitOperator& op, int max_power,
                                  double prune_tol) {
  std::vector<QubitOperator> out;
  out.reserve(static_cast<std::size_t>(max_power) + 1);
  out.push_back(QubitOperator::identity(op.n_qubits()));
  for (int k = 1; k <= max_power; ++k) {
    out.push_back((out.back() * op).pruned(prune_tol));
  }
  return out;
}

QubitOperator polynomial(std::span<const QubitOperator> h_powers,
                         std::span<const double> coeffs) {
  if (coeffs.size() > h_powers.size()) {
    throw InvalidArgument("polynomial degree exceeds available powers");
  }
  QubitOperator out(h_powers.empty() ? 0 : h_powers.front().n_qubits());
  for (std::size_t k = 0; k < coeffs.size(); ++k) {
    if (coeffs[k] != 0.0) out += h_powers[k] * Complex{coeffs[k], 0.0};
  }
  return out;
}

}  // namespace qlr
