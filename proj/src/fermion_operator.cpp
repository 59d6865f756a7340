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

#include "qlr/fermion_operator.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace qlr {

namespace {

constexpr double kMergeTol = 1e-14;

int mode_key(const LadderFactor& f) {
  return 2 * f.site + static_cast<int>(f.spin);
}

// Two adjacent factors that violate the canonical order.
bool out_of_order(const LadderFactor& a, const LadderFactor& b) {
  if (a.dagger != b.dagger) return !a.dagger;  // annihilator before creator
  return mode_key(a) >= mode_key(b);
}

void normal_order(FermionOperator::Product factors, Complex coeff,
                  std::vector<std::pair<FermionOperator::Product, Complex>>& out) {
  for (std::size_t p = 0; p + 1 < factors.size(); ++p) {
    const LadderFactor a = factors[p];
    const LadderFactor b = factors[p + 1];
    if (!out_of_order(a, b)) continue;
    if (a.dagger == b.dagger) {
      if (mode_key(a) == mode_key(b)) return;  // c c = c† c† = 0
      std::swap(factors[p], factors[p + 1]);
      normal_order(std::move(factors), -coeff, out);
      return;
    }
    // a annihilator, b creator: a b = delta_ab - b a
    if (mode_key(a) == mode_key(b)) {
      FermionOperator::Product contracted;
      contracted.reserve(factors.size() - 2);
      contracted.insert(contracted.end(), factors.begin(),
                        factors.begin() + static_cast<std::ptrdiff_t>(p));
      contracted.insert(contracted.end(),
                        factors.begin() + static_cast<std::ptrdiff_t>(p) + 2,
                        factors.end());
      normal_order(std::move(contracted), coeff, out);
    }
    std::swap(factors[p], factors[p + 1]);
    normal_order(std::move(factors), -coeff, out);
    return;
  }
  out.emplace_back(std::move(factors), coeff);
}

}  // namespace

Spin parse_spin(const std::string& text) {
  if (text == "up" || text == "u" || text == "0") return Spin::Up;
  if (text == "down" || text == "dn" || text == "d" || text == "1") {
    return Spin::Down;
  }
  throw InvalidArgument("unknown spin '" + text + "'");
}

const char* to_string(Spin s) { return s == Spin::Up ? "up" : "down"; }

bool FermionOperator::product_less(const Product& a, const Product& b) {
  if (a.size() != b.size()) return a.size() < b.size();
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].dagger != b[i].dagger) return a[i].dagger > b[i].dagger;
    const int ka = mode_key(a[i]);
    const int kb = mode_key(b[i]);
    if (ka != kb) return ka < kb;
  }
  return false;
}

FermionOperator FermionOperator::identity(Complex coeff) {
  FermionOperator op;
  op.add_product({}, coeff);
  return op;
}

FermionOperator FermionOperator::annihilate(int site, Spin spin) {
  FermionOperator op;
  op.add_product({{site, spin, false}}, 1.0);
  return op;
}

FermionOperator FermionOperator::create(int site, Spin spin) {
  FermionOperator op;
  op.add_product({{site, spin, true}}, 1.0);
  return op;
}

FermionOperator FermionOperator::number(int site, Spin spin) {
  FermionOperator op;
  op.add_product({{site, spin, true}, {site, spin, false}}, 1.0);
  return op;
}

void FermionOperator::accumulate(const Product& canonical, Complex coeff) {
  auto [it, inserted] = terms_.try_emplace(canonical, coeff);
  if (!inserted) it->second += coeff;
  if (std::abs(it->second) <= kMergeTol) terms_.erase(it);
}

void FermionOperator::add_product(const Product& factors, Complex coeff) {
  for (const auto& f : factors) {
    if (f.site < 0) throw InvalidArgument("negative site index");
  }
  if (coeff == Complex{}) return;
  std::vector<std::pair<Product, Complex>> ordered;
  normal_order(factors, coeff, ordered);
  for (const auto& [p, c] : ordered) accumulate(p, c);
}

FermionOperator& FermionOperator::operator+=(const FermionOperator& other) {
  for (const auto& [p, c] : other.terms_) accumulate(p, c);
  return *this;
}

FermionOperator& FermionOperator::operator-=(const FermionOperator& other) {
  for (const auto& [p, c] : other.terms_) accumulate(p, -c);
  return *this;
}

FermionOperator& FermionOperator::operator*=(Complex scalar) {
  FermionOperator scaled;
  for (const auto& [p, c] : terms_) scaled.accumulate(p, c * scalar);
  terms_ = std::move(scaled.terms_);
  return *this;
}

FermionOperator operator*(const FermionOperator& a, const FermionOperator& b) {
  FermionOperator out;
  for (const auto& [pa, ca] : a.terms_) {
    for (const auto& [pb, cb] : b.terms_) {
      FermionOperator::Product joined = pa;
      joined.insert(joined.end(), pb.begin(), pb.end());
      out.add_product(joined, ca * cb);
    }
  }
  return out;
}

bool operator==(const FermionOperator& a, const FermionOperator& b) {
  return a.terms_.size() == b.terms_.size() &&
         std::equal(a.terms_.begin(), a.terms_.end(), b.terms_.begin());
}

FermionOperator FermionOperator::adjoint() const {
  FermionOperator out;
  for (const auto& [p, c] : terms_) {
    Product rev(p.rbegin(), p.rend());
    for (auto& f : rev) f.dagger = !f.dagger;
    out.add_product(rev, std::conj(c));
  }
  return out;
}

bool FermionOperator::is_hermitian(double tol) const {
  const FermionOperator diff = *this - adjoint();
  for (const auto& [p, c] : diff.terms_) {
    if (std::abs(c) > tol) return false;
  }
  return true;
}

int FermionOperator::max_site() const {
  int m = -1;
  for (const auto& [p, c] : terms_) {
    for (const auto& f : p) m = std::max(m, f.site);
  }
  return m;
}

std::string FermionOperator::to_string() const {
  std::ostringstream os;
  for (const auto& [p, c] : terms_) {
    os << '(' << c.real() << (c.imag() < 0 ? "" : "+") << c.imag() << "i)";
    for (const auto& f : p) {
      os << " c" << (f.dagger ? "^" : "") << '_' << f.site
         << (f.spin == Spin::Up ? "u" : "d");
    }
    os << '\n';
  }
  return os.str();
}

FermionOperator build_hubbard_kinetic(int n_sites, double t, double mu) {
  if (n_sites < 1) throw InvalidArgument("Hubbard chain needs at least 1 site");
  FermionOperator h;
  for (Spin s : {Spin::Up, Spin::Down}) {
    for (int i = 0; i + 1 < n_sites; ++i) {
      h.add_product({{i, s, true}, {i + 1, s, false}}, -t);
      h.add_product({{i + 1, s, true}, {i, s, false}}, -t);
    }
    for (int i = 0; i < n_sites; ++i) {
      h.add_product({{i, s, true}, {i, s, false}}, -mu);
    }
  }
  return h;
}

FermionOperator build_hubbard_interaction(int n_sites, double U) {
  if (n_sites < 1) throw InvalidArgument("Hubbard chain needs at least 1 site");
  FermionOperator h;
  for (int i = 0; i < n_sites; ++i) {
    h.add_product({{i, Spin::Up, true},
                   {i, Spin::Up, false},
                   {i, Spin::Down, true},
                   {i, Spin::Down, false}},
                  U);
  }
  return h;
}

FermionOperator build_hubbard(int n_sites, double t, double U, double mu) {
  return build_hubbard_kinetic(n_sites, t, mu) +
         build_hubbard_interaction(n_sites, U);
}

int mode_qubit(int site, Spin spin, int n_sites) {
  return site + (spin == Spin::Down ? n_sites : 0);
}

QubitOperator jordan_wigner(const FermionOperator& op, int n_sites) {
  if (n_sites < 1) throw InvalidArgument("Jordan-Wigner needs at least 1 site");
  if (op.max_site() >= n_sites) {
    throw InvalidArgument("fermion operator references a site beyond n_sites");
  }
  const int n_qubits = 2 * n_sites;
  QubitOperator out(n_qubits);
  for (const auto& [product, coeff] : op.terms()) {
    QubitOperator term = QubitOperator::identity(n_qubits, coeff);
    for (const auto& f : product) {
      const int q = mode_qubit(f.site, f.spin, n_sites);
      PauliWord zstring;
      for (int k = 0; k < q; ++k) zstring.z |= 1u << k;
      // c = Z..Z (X + iY)/2, c† = Z..Z (X - iY)/2
      QubitOperator ladder(n_qubits);
      Complex ph;
      const PauliWord wx = multiply(zstring, PauliWord::single(q, 'X'), ph);
      ladder.add_term(wx, 0.5 * ph);
      const PauliWord wy = multiply(zstring, PauliWord::single(q, 'Y'), ph);
      ladder.add_term(wy, (f.dagger ? -0.5 : 0.5) * kI * ph);
      term = term * ladder;
    }
    out += term;
  }
  return out;
}

std::pair<FermionOperator, FermionOperator> hermitian_parts(
    const FermionOperator& b) {
  const FermionOperator bd = b.adjoint();
  return {b + bd, kI * (b - bd)};
}

std::pair<FermionOperator, FermionOperator> hermitian_split(
    const FermionOperator& ladder) {
  if (ladder.size() != 1) {
    throw InvalidArgument("hermitian_split expects a single ladder operator");
  }
  const auto& [product, coeff] = *ladder.terms().begin();
  if (product.size() != 1 || coeff != Complex{1.0, 0.0}) {
    throw InvalidArgument("hermitian_split expects a single ladder operator");
  }
  const LadderFactor& f = product.front();
  return hermitian_parts(FermionOperator::create(f.site, f.spin));
}

FermionOperator recombine_annihilator(const FermionOperator& plus,
                                      const FermionOperator& minus) {
  return (plus + kI * minus) * Complex{0.5, 0.0};
}

FermionOperator recombine_creator(const FermionOperator& plus,
                                  const FermionOperator& minus) {
  return (plus - kI * minus) * Complex{0.5, 0.0};
}

}  // namespace qlr
