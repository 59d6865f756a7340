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

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "qlr/oracle.hpp"
#include "qlr/types.hpp"

namespace qlr {

/// w0 / (z - a0 - b1^2 / (z - a1 - b2^2 / (...))) with z = omega +/- i eta.
/// A depth-0 fraction is allowed only with zero weight and evaluates to 0.
struct ContinuedFraction {
  double weight = 0.0;
  std::vector<double> alpha;
  std::vector<double> beta_sq;
  Branch branch = Branch::Retarded;

  std::size_t depth() const { return alpha.size(); }
  void validate() const;

  static ContinuedFraction from_spectrum(const TridiagonalSpectrum& spec,
                                         double weight,
                                         Branch branch = Branch::Retarded);
};

Complex eval_cf(const ContinuedFraction& cf, double omega, double eta);
std::vector<Complex> eval_cf(const ContinuedFraction& cf,
                             std::span<const double> grid, double eta);

enum class TruncationRule { None, SmallBeta, LargeBeta };

const char* to_string(TruncationRule r);

struct Truncation {
  ContinuedFraction cf;
  TruncationRule rule = TruncationRule::None;
  std::size_t level = 0;  // first level n whose beta_n triggered the cut
};

/// Cuts the fraction at the first n with beta_n^2 < beta_tol^2 or
/// beta_n^2 > beta_max^2, keeping levels 0..n-1.
Truncation truncate(const ContinuedFraction& cf, double beta_tol,
                    double beta_max = 1e3);

struct SpectralSamples {
  std::vector<double> omega_grid;
  std::vector<Complex> green;
  std::vector<double> values;  // A(omega)
  double eta = 0.0;
};

/// A = -Im G / pi on the retarded branch, +Im G / pi on the advanced one.
SpectralSamples spectral(const ContinuedFraction& cf,
                         std::span<const double> grid, double eta);
SpectralSamples spectral_from_values(std::vector<double> grid,
                                     std::vector<Complex> green, double eta,
                                     Branch branch);

std::vector<double> linear_grid(double lo, double hi, int points);
/// [min(poles) - margin, max(poles) + margin].
std::vector<double> default_grid(std::span<const double> poles, int points = 401,
                                 double margin = 2.0);

/// Local maxima of A, interior points only.
std::vector<double> peak_positions(const SpectralSamples& s);

/// omega,re_G,im_G,A
void write_spectral_csv(std::ostream& os, const SpectralSamples& s);
/// JSON text with weight, alpha, beta_sq, sign and eta.
void write_cf(std::ostream& os, const ContinuedFraction& cf, double eta);
ContinuedFraction read_cf(std::istream& is);

/// Fractions for the resolvent sandwiched by a = P Psi, b = M Psi and the
/// combinations a + b and a + i b.
struct PartFractions {
  ContinuedFraction first;
  ContinuedFraction second;
  ContinuedFraction sum;
  ContinuedFraction twisted;
};

/// Creator:     B = (P - i M) / 2, returns <B Psi| R |B Psi>.
/// Annihilator: B = (P + i M) / 2, same form.
/// Cross:       <P Psi| R |M Psi>.
enum class CombineTarget { Creator, Annihilator, Cross };

CombineTarget parse_target(const std::string& text);
const char* to_string(CombineTarget t);

std::vector<Complex> combine_parts(const PartFractions& parts, CombineTarget target,
                                   std::span<const double> grid, double eta);

}  // namespace qlr
