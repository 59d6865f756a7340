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
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "qlr/counting.hpp"
#include "qlr/fermion_operator.hpp"
#include "qlr/greens.hpp"
#include "qlr/oracle.hpp"

namespace qlr {

class ConfigError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

enum class Mode { Greens, GroundState, Oracle };

Mode parse_mode(const std::string& text);
const char* to_string(Mode m);

/// Flat key = value experiment description. Lines starting with '#' are
/// comments; unknown keys are rejected.
struct ExperimentConfig {
  Mode mode = Mode::Greens;

  // model
  int sites = 2;
  double t = 1.0;
  double U = 4.0;
  double mu = 0.0;
  int n_up = 1;
  int n_down = 1;

  // channel: particle adds an electron, hole removes one
  std::string channel = "particle";
  int site_i = 0;
  int site_j = 0;
  Spin spin_i = Spin::Up;
  Spin spin_j = Spin::Up;

  // run
  std::int64_t shots = 100000;
  int d = 20;
  int d_match = 20;
  std::uint64_t seed = 1;
  int depth = 3;
  double beta_tol = 1e-8;
  double beta_max = 1e3;
  int k_max = 50;
  CountingBackend backend = CountingBackend::Compressed;
  double zero_sigma = 2.0;
  double abort_threshold = 0.01;
  bool trace = false;

  // grid
  std::optional<double> omega_min;
  std::optional<double> omega_max;
  int points = 401;
  double eta = 0.05;
  double cf_tolerance = 1e-8;

  // ground state
  std::vector<double> lambda_schedule{1.0};
  bool oracle_only = false;
  double energy_tol = 1e-6;
  double fidelity_min = 0.99;
  std::int64_t max_attempts = 1000000;

  static ExperimentConfig parse(std::istream& is);
  static ExperimentConfig load(const std::filesystem::path& path);
  std::string serialize() const;
  /// Throws ConfigError on the first invalid field.
  void validate() const;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

/// Writes to a sibling temporary file and renames it into place.
void write_atomic(const std::filesystem::path& path, const std::string& content);

/// Levels at which the two stopping rules fire on a coefficient table:
/// the first n with beta_n < beta_tol (or the full depth), and the first
/// N >= 2 whose lowest tridiagonal eigenvalue moved by less than
/// energy_tol from N - 1 levels (or the full depth).
struct StoppingLevels {
  std::size_t beta_exit = 0;
  std::size_t energy_exit = 0;
};
StoppingLevels stopping_levels(const TridiagonalSpectrum& spec, double beta_tol,
                               double energy_tol);

struct CoefficientComparison {
  std::string label;
  double oracle = 0.0;
  double counted = 0.0;
  double stderr = 0.0;
  std::optional<double> z;  // empty when stderr is infinite
};

/// Compares counted against oracle coefficients over their common prefix.
/// z-scores exist only where the reference entry is oracle-derived.
std::vector<CoefficientComparison> compare(const TridiagonalSpectrum& oracle,
                                           const TridiagonalSpectrum& counted,
                                           const std::string& prefix = "");

struct ComparisonReport {
  std::vector<CoefficientComparison> coefficients;
  std::optional<double> green_deviation;     // sup |G - G_ref| on the grid
  std::optional<double> spectral_deviation;  // sup |A - A_ref|
  std::optional<double> energy;
  std::optional<double> reference_energy;
  std::optional<double> fidelity;
  std::vector<std::string> notes;

  double max_z() const;
  bool passes(double z_limit = 3.0) const;
  std::string render() const;
};

/// Ladder operators of the configured channel on sites i and j.
FermionOperator channel_operator(const ExperimentConfig& cfg, int site, Spin spin);

struct PartRun {
  std::string name;
  QubitOperator omega;
  TridiagonalSpectrum oracle;
  double oracle_weight = 0.0;
  TridiagonalSpectrum counted;
  double counted_weight = 0.0;
  std::string stop_reason;
  Truncation truncation;
};

struct GreensResult {
  int exit_code = 0;
  CombineTarget target = CombineTarget::Creator;
  std::vector<PartRun> parts;
  SpectralSamples spectral;
  SpectralSamples reference;
  ComparisonReport report;
  std::optional<ComplexEstimate> numerator;
  Complex numerator_exact;
  std::int64_t aborted_shots = 0;
  std::int64_t total_shots = 0;
};

struct StepResult {
  double lambda = 0.0;
  TridiagonalSpectrum spectrum;
  KrylovGroundState ground;
  double energy_drift = 0.0;
  bool depth_insufficient = false;
  double exact_energy = 0.0;
  double fidelity = 0.0;
  std::int64_t attempts = 0;
  ComplexVector state;
};

struct GroundStateResult {
  int exit_code = 0;
  std::vector<StepResult> steps;
  ComparisonReport report;
  std::int64_t aborted_shots = 0;
  std::int64_t total_shots = 0;
};

/// Green's-function experiment. Writes artifacts under out_dir when it is
/// nonempty.
GreensResult run_greens(const ExperimentConfig& cfg,
                        const std::filesystem::path& out_dir);

/// Ground-state experiment along the lambda schedule.
GroundStateResult run_groundstate(const ExperimentConfig& cfg,
                                  const std::filesystem::path& out_dir);

/// sum_n weights_n G_n as one LCU.
LcuDecomposition assemble_y(const std::vector<double>& weights,
                            const std::vector<GnOperator>& gn);

/// gamma_n / |G_n Psi| with |G_n Psi|^2 = norm0 prod_{k<=n} beta_k^2, so
/// that sum_n weights_n G_n Psi is the normalized Krylov ground state.
std::vector<double> krylov_weights(const KrylovGroundState& ground,
                                   const TridiagonalSpectrum& spec, double norm0);

/// Repeat-until-success application of a block-encoded operator to a
/// reference state: W, test the ancillas; on failure W^dagger and a
/// projective check against the reference before retrying.
struct BlockApplication {
  ComplexVector state;
  std::int64_t attempts = 0;
  bool success = false;
};
BlockApplication apply_block_encoded(const LcuDecomposition& dec,
                                     const ComplexVector& reference,
                                     RandomStream& rng, std::int64_t max_attempts);

/// Seed for an independent sub-run `tag` under a master seed.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t tag);

}  // namespace qlr
