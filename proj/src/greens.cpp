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

#include "qlr/greens.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <numbers>
#include <ostream>

#include <json.hpp>

namespace qlr {

void ContinuedFraction::validate() const {
  if (alpha.empty()) {
    if (weight != 0.0 || !beta_sq.empty()) {
      throw InvalidArgument("empty continued fraction must have zero weight");
    }
    return;
  }
  if (beta_sq.size() + 1 != alpha.size()) {
    throw InvalidArgument("continued fraction needs len(beta_sq) = depth - 1");
  }
  for (double b : beta_sq) {
    if (!(b >= 0.0)) throw InvalidArgument("beta_sq entries must be nonnegative");
  }
}

ContinuedFraction ContinuedFraction::from_spectrum(const TridiagonalSpectrum& spec,
                                                   double weight, Branch branch) {
  spec.validate();
  ContinuedFraction cf;
  cf.weight = weight;
  cf.alpha = spec.alpha;
  cf.beta_sq = spec.beta_sq();
  cf.branch = branch;
  if (cf.alpha.empty()) cf.weight = 0.0;
  return cf;
}

Complex eval_cf(const ContinuedFraction& cf, double omega, double eta) {
  if (!(eta > 0.0)) throw InvalidArgument("eta must be positive");
  if (cf.depth() == 0) return 0.0;
  const Complex z{omega, branch_sign(cf.branch) * eta};
  const std::size_t n = cf.depth();
  Complex acc = z - cf.alpha[n - 1];
  for (std::size_t k = n - 1; k-- > 0;) {
    acc = z - cf.alpha[k] - cf.beta_sq[k] / acc;
  }
  return cf.weight / acc;
}

std::vector<Complex> eval_cf(const ContinuedFraction& cf,
                             std::span<const double> grid, double eta) {
  cf.validate();
  std::vector<Complex> out;
  out.reserve(grid.size());
  for (double w : grid) out.push_back(eval_cf(cf, w, eta));
  return out;
}

const char* to_string(TruncationRule r) {
  switch (r) {
    case TruncationRule::None: return "none";
    case TruncationRule::SmallBeta: return "small-beta";
    case TruncationRule::LargeBeta: return "large-beta";
  }
  return "?";
}

Truncation truncate(const ContinuedFraction& cf, double beta_tol, double beta_max) {
  cf.validate();
  Truncation t;
  t.cf = cf;
  t.level = cf.depth();
  for (std::size_t k = 0; k < cf.beta_sq.size(); ++k) {
    const double b2 = cf.beta_sq[k];
    TruncationRule fired = TruncationRule::None;
    if (b2 < beta_tol * beta_tol) {
      fired = TruncationRule::SmallBeta;
    } else if (b2 > beta_max * beta_max) {
      fired = TruncationRule::LargeBeta;
    }
    if (fired == TruncationRule::None) continue;
    t.rule = fired;
    t.level = k + 1;
    t.cf.alpha.resize(k + 1);
    t.cf.beta_sq.resize(k);
    break;
  }
  return t;
}

SpectralSamples spectral_from_values(std::vector<double> grid,
                                     std::vector<Complex> green, double eta,
                                     Branch branch) {
  if (grid.size() != green.size()) throw InvalidArgument("grid and values differ in size");
  SpectralSamples s;
  s.eta = eta;
  s.values.reserve(grid.size());
  for (const Complex& g : green) {
    s.values.push_back(-branch_sign(branch) * g.imag() / std::numbers::pi);
  }
  s.omega_grid = std::move(grid);
  s.green = std::move(green);
  return s;
}

SpectralSamples spectral(const ContinuedFraction& cf, std::span<const double> grid,
                         double eta) {
  return spectral_from_values(std::vector<double>(grid.begin(), grid.end()),
                              eval_cf(cf, grid, eta), eta, cf.branch);
}

std::vector<double> linear_grid(double lo, double hi, int points) {
  if (points < 2) throw InvalidArgument("grid needs at least two points");
  if (!(hi > lo)) throw InvalidArgument("grid upper bound must exceed the lower");
  std::vector<double> g(static_cast<std::size_t>(points));
  const double step = (hi - lo) / (points - 1);
  for (int k = 0; k < points; ++k) g[static_cast<std::size_t>(k)] = lo + k * step;
  g.back() = hi;
  return g;
}

std::vector<double> default_grid(std::span<const double> poles, int points,
                                 double margin) {
  if (poles.empty()) return linear_grid(-margin, margin, points);
  const auto [lo, hi] = std::minmax_element(poles.begin(), poles.end());
  return linear_grid(*lo - margin, *hi + margin, points);
}

std::vector<double> peak_positions(const SpectralSamples& s) {
  std::vector<double> peaks;
  for (std::size_t k = 1; k + 1 < s.values.size(); ++k) {
    if (s.values[k] > s.values[k - 1] && s.values[k] >= s.values[k + 1]) {
      peaks.push_back(s.omega_grid[k]);
    }
  }
  return peaks;
}

void write_spectral_csv(std::ostream& os, const SpectralSamples& s) {
  os << "omega,re_G,im_G,A\n" << std::setprecision(17);
  for (std::size_t k = 0; k < s.omega_grid.size(); ++k) {
    os << s.omega_grid[k] << ',' << s.green[k].real() << ',' << s.green[k].imag()
       << ',' << s.values[k] << '\n';
  }
}

void write_cf(std::ostream& os, const ContinuedFraction& cf, double eta) {
  nlohmann::ordered_json j;
  j["weight"] = cf.weight;
  j["alpha"] = cf.alpha;
  j["beta_sq"] = cf.beta_sq;
  j["sign"] = cf.branch == Branch::Retarded ? "retarded" : "advanced";
  j["eta"] = eta;
  os << j.dump(2) << '\n';
}

ContinuedFraction read_cf(std::istream& is) {
  try {
    const auto j = nlohmann::json::parse(is);
    ContinuedFraction cf;
    cf.weight = j.at("weight").get<double>();
    cf.alpha = j.at("alpha").get<std::vector<double>>();
    cf.beta_sq = j.at("beta_sq").get<std::vector<double>>();
    const auto sign = j.at("sign").get<std::string>();
    if (sign == "retarded") {
      cf.branch = Branch::Retarded;
    } else if (sign == "advanced") {
      cf.branch = Branch::Advanced;
    } else {
      throw InvalidArgument("unknown continued fraction sign '" + sign + "'");
    }
    cf.validate();
    return cf;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("bad continued fraction dump: ") + e.what());
  }
}

CombineTarget parse_target(const std::string& text) {
  if (text == "creator") return CombineTarget::Creator;
  if (text == "annihilator") return CombineTarget::Annihilator;
  if (text == "cross") return CombineTarget::Cross;
  throw InvalidArgument("unknown combination target '" + text + "'");
}

const char* to_string(CombineTarget t) {
  switch (t) {
    case CombineTarget::Creator: return "creator";
    case CombineTarget::Annihilator: return "annihilator";
    case CombineTarget::Cross: return "cross";
  }
  return "?";
}

std::vector<Complex> combine_parts(const PartFractions& parts, CombineTarget target,
                                   std::span<const double> grid, double eta) {
  const Branch b = parts.first.branch;
  for (const auto* cf : {&parts.second, &parts.sum, &parts.twisted}) {
    if (cf->branch != b) throw InvalidArgument("part fractions use different branches");
  }
  const auto g1 = eval_cf(parts.first, grid, eta);
  const auto g2 = eval_cf(parts.second, grid, eta);
  const auto gs = eval_cf(parts.sum, grid, eta);
  const auto gt = eval_cf(parts.twisted, grid, eta);
  std::vector<Complex> out(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    // <a|R|b> + <b|R|a> and i(<a|R|b> - <b|R|a>).
    const Complex x = gs[k] - g1[k] - g2[k];
    const Complex y = gt[k] - g1[k] - g2[k];
    switch (target) {
      case CombineTarget::Creator: out[k] = 0.25 * (g1[k] + g2[k] - y); break;
      case CombineTarget::Annihilator: out[k] = 0.25 * (g1[k] + g2[k] + y); break;
      case CombineTarget::Cross: out[k] = 0.5 * (x - kI * y); break;
    }
  }
  return out;
}

}  // namespace qlr
