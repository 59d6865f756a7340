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

#include "qlr/driver.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>

#include <Eigen/Eigenvalues>

namespace qlr {

Mode parse_mode(const std::string& text) {
  if (text == "greens") return Mode::Greens;
  if (text == "groundstate") return Mode::GroundState;
  if (text == "oracle") return Mode::Oracle;
  throw ConfigError("unknown mode '" + text + "'");
}

const char* to_string(Mode m) {
  switch (m) {
    case Mode::Greens: return "greens";
    case Mode::GroundState: return "groundstate";
    case Mode::Oracle: return "oracle";
  }
  return "?";
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const char* first = text.data();
  const char* last = first + text.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    throw ConfigError("bad value '" + text + "' for key '" + key + "'");
  }
  return value;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw ConfigError("bad boolean '" + text + "' for key '" + key + "'");
}

std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

struct Field {
  std::function<void(ExperimentConfig&, const std::string&, const std::string&)> set;
  std::function<std::optional<std::string>(const ExperimentConfig&)> get;
};

template <typename T>
Field number_field(T ExperimentConfig::*member) {
  return {[member](ExperimentConfig& c, const std::string& k, const std::string& v) {
            c.*member = parse_number<T>(k, v);
          },
          [member](const ExperimentConfig& c) -> std::optional<std::string> {
            if constexpr (std::is_floating_point_v<T>) {
              return format_double(c.*member);
            } else {
              return std::to_string(c.*member);
            }
          }};
}

Field optional_field(std::optional<double> ExperimentConfig::*member) {
  return {[member](ExperimentConfig& c, const std::string& k, const std::string& v) {
            c.*member = parse_number<double>(k, v);
          },
          [member](const ExperimentConfig& c) -> std::optional<std::string> {
            if (!(c.*member)) return std::nullopt;
            return format_double(*(c.*member));
          }};
}

Field bool_field(bool ExperimentConfig::*member) {
  return {[member](ExperimentConfig& c, const std::string& k, const std::string& v) {
            c.*member = parse_bool(k, v);
          },
          [member](const ExperimentConfig& c) -> std::optional<std::string> {
            return std::string(c.*member ? "true" : "false");
          }};
}

Field spin_field(Spin ExperimentConfig::*member) {
  return {[member](ExperimentConfig& c, const std::string&, const std::string& v) {
            try {
              c.*member = parse_spin(v);
            } catch (const InvalidArgument& e) {
              throw ConfigError(e.what());
            }
          },
          [member](const ExperimentConfig& c) -> std::optional<std::string> {
            return std::string(to_string(c.*member));
          }};
}

const std::vector<std::pair<std::string, Field>>& fields() {
  static const std::vector<std::pair<std::string, Field>> table = {
      {"mode",
       {[](ExperimentConfig& c, const std::string&, const std::string& v) {
          c.mode = parse_mode(v);
        },
        [](const ExperimentConfig& c) -> std::optional<std::string> {
          return std::string(to_string(c.mode));
        }}},
      {"sites", number_field(&ExperimentConfig::sites)},
      {"t", number_field(&ExperimentConfig::t)},
      {"U", number_field(&ExperimentConfig::U)},
      {"mu", number_field(&ExperimentConfig::mu)},
      {"n_up", number_field(&ExperimentConfig::n_up)},
      {"n_down", number_field(&ExperimentConfig::n_down)},
      {"channel",
       {[](ExperimentConfig& c, const std::string&, const std::string& v) { c.channel = v; },
        [](const ExperimentConfig& c) -> std::optional<std::string> { return c.channel; }}},
      {"site_i", number_field(&ExperimentConfig::site_i)},
      {"site_j", number_field(&ExperimentConfig::site_j)},
      {"spin_i", spin_field(&ExperimentConfig::spin_i)},
      {"spin_j", spin_field(&ExperimentConfig::spin_j)},
      {"shots", number_field(&ExperimentConfig::shots)},
      {"d", number_field(&ExperimentConfig::d)},
      {"d_match", number_field(&ExperimentConfig::d_match)},
      {"seed", number_field(&ExperimentConfig::seed)},
      {"depth", number_field(&ExperimentConfig::depth)},
      {"beta_tol", number_field(&ExperimentConfig::beta_tol)},
      {"beta_max", number_field(&ExperimentConfig::beta_max)},
      {"k_max", number_field(&ExperimentConfig::k_max)},
      {"backend",
       {[](ExperimentConfig& c, const std::string&, const std::string& v) {
          try {
            c.backend = parse_backend(v);
          } catch (const InvalidArgument& e) {
            throw ConfigError(e.what());
          }
        },
        [](const ExperimentConfig& c) -> std::optional<std::string> {
          return std::string(to_string(c.backend));
        }}},
      {"zero_sigma", number_field(&ExperimentConfig::zero_sigma)},
      {"abort_threshold", number_field(&ExperimentConfig::abort_threshold)},
      {"trace", bool_field(&ExperimentConfig::trace)},
      {"omega_min", optional_field(&ExperimentConfig::omega_min)},
      {"omega_max", optional_field(&ExperimentConfig::omega_max)},
      {"points", number_field(&ExperimentConfig::points)},
      {"eta", number_field(&ExperimentConfig::eta)},
      {"cf_tolerance", number_field(&ExperimentConfig::cf_tolerance)},
      {"lambda_schedule",
       {[](ExperimentConfig& c, const std::string& k, const std::string& v) {
          c.lambda_schedule.clear();
          std::stringstream ss(v);
          std::string item;
          while (std::getline(ss, item, ',')) {
            c.lambda_schedule.push_back(parse_number<double>(k, trim(item)));
          }
        },
        [](const ExperimentConfig& c) -> std::optional<std::string> {
          std::string out;
          for (std::size_t i = 0; i < c.lambda_schedule.size(); ++i) {
            if (i) out += ", ";
            out += format_double(c.lambda_schedule[i]);
          }
          return out;
        }}},
      {"oracle_only", bool_field(&ExperimentConfig::oracle_only)},
      {"energy_tol", number_field(&ExperimentConfig::energy_tol)},
      {"fidelity_min", number_field(&ExperimentConfig::fidelity_min)},
      {"max_attempts", number_field(&ExperimentConfig::max_attempts)},
  };
  return table;
}

}  // namespace

ExperimentConfig ExperimentConfig::parse(std::istream& is) {
  ExperimentConfig cfg;
  std::map<std::string, const Field*> lookup;
  for (const auto& [key, field] : fields()) lookup[key] = &field;
  std::string line;
  int lineno = 0;
  std::map<std::string, int> seen;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string text = trim(line);
    if (text.empty() || text.front() == '#') continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(text.substr(0, eq));
    const std::string value = trim(text.substr(eq + 1));
    const auto it = lookup.find(key);
    if (it == lookup.end()) throw ConfigError("unknown config key '" + key + "'");
    if (seen.count(key)) throw ConfigError("duplicate config key '" + key + "'");
    seen[key] = lineno;
    it->second->set(cfg, key, value);
  }
  return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  return parse(in);
}

std::string ExperimentConfig::serialize() const {
  std::string out;
  for (const auto& [key, field] : fields()) {
    if (const auto v = field.get(*this)) out += key + " = " + *v + "\n";
  }
  return out;
}

void ExperimentConfig::validate() const {
  auto require = [](bool ok, const std::string& msg) {
    if (!ok) throw ConfigError(msg);
  };
  require(sites >= 1 && 2 * sites <= kMaxDenseQubits, "sites must be in [1, 6]");
  require(std::isfinite(t) && std::isfinite(U) && std::isfinite(mu),
          "model parameters must be finite");
  require(n_up >= 0 && n_up <= sites && n_down >= 0 && n_down <= sites,
          "particle numbers out of range");
  require(channel == "particle" || channel == "hole", "channel must be particle or hole");
  require(site_i >= 0 && site_i < sites && site_j >= 0 && site_j < sites,
          "channel sites out of range");
  require(shots >= 1, "shots must be positive");
  require(d >= 1 && d <= 30, "d must be in [1, 30]");
  require(d_match >= 1 && d_match <= d, "d_match must be in [1, d]");
  require(d - d_match <= 20, "at most 20 readout bits may be ignored");
  require(depth >= 1, "depth must be at least 1");
  require(beta_tol >= 0.0 && beta_max > beta_tol, "need 0 <= beta_tol < beta_max");
  require(k_max >= 1, "k_max must be positive");
  require(zero_sigma >= 0.0, "zero_sigma must be nonnegative");
  require(abort_threshold >= 0.0 && abort_threshold <= 1.0,
          "abort_threshold must be in [0, 1]");
  require(omega_min.has_value() == omega_max.has_value(),
          "omega_min and omega_max must be given together");
  require(!omega_min || *omega_min < *omega_max, "omega_min must be below omega_max");
  require(points >= 2, "points must be at least 2");
  require(eta > 0.0, "eta must be positive");
  require(cf_tolerance > 0.0, "cf_tolerance must be positive");
  require(!lambda_schedule.empty(), "lambda_schedule must not be empty");
  for (double l : lambda_schedule) require(std::isfinite(l), "lambda values must be finite");
  require(energy_tol > 0.0, "energy_tol must be positive");
  require(fidelity_min >= 0.0 && fidelity_min <= 1.0, "fidelity_min must be in [0, 1]");
  require(max_attempts >= 1, "max_attempts must be positive");
  if (backend == CountingBackend::FullRegister) {
    require(2 * sites + 2 * d + 2 <= kMaxSimulatedQubits,
            "full-register backend exceeds the simulator's qubit cap");
    require(d <= 10, "full-register backend supports d <= 10");
  }
}

void write_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << content;
    if (!out) throw Error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

StoppingLevels stopping_levels(const TridiagonalSpectrum& spec, double beta_tol,
                               double energy_tol) {
  spec.validate();
  StoppingLevels s;
  s.beta_exit = spec.depth();
  for (std::size_t k = 0; k < spec.beta.size(); ++k) {
    if (spec.beta[k] < beta_tol) {
      s.beta_exit = k + 1;
      break;
    }
  }
  s.energy_exit = spec.depth();
  double previous = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t n = 1; n <= spec.depth(); ++n) {
    const double e = tridiagonal_eigs(spec.prefix(n)).ground.energy;
    if (n >= 2 && std::abs(e - previous) < energy_tol) {
      s.energy_exit = n - 1;
      break;
    }
    previous = e;
  }
  return s;
}

namespace {

std::optional<double> z_score(double reference, double value, double stderr) {
  if (std::isinf(stderr) || std::isnan(stderr)) return std::nullopt;
  const double diff = std::abs(value - reference);
  if (stderr == 0.0) {
    return diff <= 1e-9 * std::max(1.0, std::abs(reference))
               ? 0.0
               : std::numeric_limits<double>::infinity();
  }
  return diff / stderr;
}

}  // namespace

std::vector<CoefficientComparison> compare(const TridiagonalSpectrum& oracle,
                                           const TridiagonalSpectrum& counted,
                                           const std::string& prefix) {
  std::vector<CoefficientComparison> out;
  const std::size_t na = std::min(oracle.alpha.size(), counted.alpha.size());
  for (std::size_t k = 0; k < na; ++k) {
    CoefficientComparison c{prefix + "alpha_" + std::to_string(k), oracle.alpha[k],
                            counted.alpha[k], counted.alpha_stderr[k], std::nullopt};
    if (oracle.alpha_provenance[k] == Provenance::Oracle) {
      c.z = z_score(c.oracle, c.counted, c.stderr);
    }
    out.push_back(c);
  }
  const std::size_t nb = std::min(oracle.beta.size(), counted.beta.size());
  for (std::size_t k = 0; k < nb; ++k) {
    CoefficientComparison c{prefix + "beta_" + std::to_string(k + 1), oracle.beta[k],
                            counted.beta[k], counted.beta_stderr[k], std::nullopt};
    if (oracle.beta_provenance[k] == Provenance::Oracle) {
      c.z = z_score(c.oracle, c.counted, c.stderr);
    }
    out.push_back(c);
  }
  return out;
}

double ComparisonReport::max_z() const {
  double m = 0.0;
  for (const auto& c : coefficients) {
    if (c.z) m = std::max(m, *c.z);
  }
  return m;
}

bool ComparisonReport::passes(double z_limit) const {
  for (const auto& c : coefficients) {
    if (c.z && !(*c.z < z_limit)) return false;
  }
  return true;
}

std::string ComparisonReport::render() const {
  std::ostringstream os;
  os << std::setprecision(12);
  if (!coefficients.empty()) {
    os << "coefficient,oracle,counted,stderr,z\n";
    for (const auto& c : coefficients) {
      os << c.label << ',' << c.oracle << ',' << c.counted << ',' << c.stderr << ',';
      if (c.z) {
        os << *c.z;
      } else {
        os << "unconstrained";
      }
      os << '\n';
    }
    os << "max_z = " << max_z() << '\n';
  }
  if (green_deviation) os << "green_deviation = " << *green_deviation << '\n';
  if (spectral_deviation) os << "spectral_deviation = " << *spectral_deviation << '\n';
  if (energy) os << "energy = " << *energy << '\n';
  if (reference_energy) os << "reference_energy = " << *reference_energy << '\n';
  if (fidelity) os << "fidelity = " << *fidelity << '\n';
  for (const auto& n : notes) os << "note: " << n << '\n';
  return os.str();
}

FermionOperator channel_operator(const ExperimentConfig& cfg, int site, Spin spin) {
  return cfg.channel == "particle" ? FermionOperator::create(site, spin)
                                   : FermionOperator::annihilate(site, spin);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t tag) {
  return RandomStream::substream(master, tag).next();
}

LcuDecomposition assemble_y(const std::vector<double>& weights,
                            const std::vector<GnOperator>& gn) {
  if (weights.size() != gn.size() || gn.empty()) {
    throw InvalidArgument("need one weight per G_n operator");
  }
  QubitOperator y(gn.front().compiled.n_qubits());
  for (std::size_t n = 0; n < gn.size(); ++n) y += gn[n].compiled * weights[n];
  double w = 0.0;
  for (const auto& [word, c] : y.terms()) w += std::abs(c);
  return lcu_decompose(y.pruned(1e-14 * std::max(w, 1.0)));
}

std::vector<double> krylov_weights(const KrylovGroundState& ground,
                                   const TridiagonalSpectrum& spec, double norm0) {
  if (ground.gamma.size() > spec.depth()) {
    throw InvalidArgument("more Krylov weights than coefficient levels");
  }
  if (!(norm0 > 0.0)) throw InvalidArgument("start norm must be positive");
  std::vector<double> out;
  double norm_sq = norm0;
  for (std::size_t n = 0; n < ground.gamma.size(); ++n) {
    if (n > 0) norm_sq *= spec.beta[n - 1] * spec.beta[n - 1];
    if (!(norm_sq > 0.0)) throw InvalidArgument("vanishing Krylov vector norm");
    out.push_back(ground.gamma[n] / std::sqrt(norm_sq));
  }
  return out;
}

BlockApplication apply_block_encoded(const LcuDecomposition& dec,
                                     const ComplexVector& reference,
                                     RandomStream& rng, std::int64_t max_attempts) {
  const int n_sys = dec.n_qubits;
  if (reference.size() != (Eigen::Index{1} << n_sys)) {
    throw InvalidArgument("reference state does not match the operator");
  }
  const LcuCircuit circuit(dec);
  const int n_anc = circuit.ancilla_qubits();
  const int total = n_sys + n_anc;
  ComplexVector clean = ComplexVector::Zero(Eigen::Index{1} << total);
  clean.head(reference.size()) = reference.normalized();
  StateVector state(total, clean);
  BlockApplication out;
  while (out.attempts < max_attempts) {
    ++out.attempts;
    circuit.apply(state, 0, n_sys);
    if (state.measure_zero(n_sys, n_anc, rng)) {
      out.state = state.amplitudes().head(reference.size()).normalized();
      out.success = true;
      return out;
    }
    circuit.apply_adjoint(state, 0, n_sys);
    // Projective check against |0>|reference>; either outcome keeps the
    // state inside the two-dimensional block that contains it.
    const Complex overlap = clean.dot(state.amplitudes());
    if (rng.uniform() < std::norm(overlap)) {
      state = StateVector(total, clean);
    } else {
      ComplexVector rest = state.amplitudes() - overlap * clean;
      rest.normalize();
      state = StateVector(total, std::move(rest));
    }
  }
  out.state = reference;
  return out;
}

namespace {

std::vector<Complex> sandwiched_resolvent(const ComplexMatrix& h, const ComplexVector& a,
                                          const ComplexVector& b,
                                          std::span<const double> grid, double eta) {
  std::vector<Complex> out;
  out.reserve(grid.size());
  const ComplexMatrix id = ComplexMatrix::Identity(h.rows(), h.cols());
  for (double w : grid) {
    if (a.squaredNorm() == 0.0 || b.squaredNorm() == 0.0) {
      out.emplace_back(0.0, 0.0);
      continue;
    }
    const ComplexMatrix m = Complex{w, eta} * id - h;
    out.push_back(a.dot(m.partialPivLu().solve(b)));
  }
  return out;
}

double sup_distance(const std::vector<Complex>& a, const std::vector<Complex>& b) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a[k] - b[k]));
  return m;
}

double sup_distance(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a[k] - b[k]));
  return m;
}

CountingSettings counting_settings(const ExperimentConfig& cfg, std::uint64_t seed) {
  CountingSettings s;
  s.shots = cfg.shots;
  s.k_max = cfg.k_max;
  s.d = cfg.d;
  s.d_match = cfg.d_match;
  s.backend = cfg.backend;
  s.trace = cfg.trace;
  s.seed = seed;
  s.zero_sigma = cfg.zero_sigma;
  return s;
}

std::int64_t attempted_shots(const CountedLanczos& run) {
  std::int64_t n = 0;
  for (const auto& e : run.estimates) n += e.tally.shots + e.tally.aborted;
  return n;
}

void append_trace(std::vector<ShotRecord>& all, const std::vector<ShotRecord>& part,
                  const std::string& prefix) {
  for (auto r : part) {
    r.label = prefix + r.label;
    all.push_back(std::move(r));
  }
}

std::string spectrum_csv(const TridiagonalSpectrum& spec) {
  std::ostringstream os;
  write_csv(os, spec);
  return os.str();
}

TridiagonalSpectrum oracle_spectrum(const ComplexMatrix& h, const ComplexVector& start,
                                    int depth, double beta_tol) {
  if (start.squaredNorm() < 1e-28) return {};
  return classical_lanczos(h, start, depth - 1, std::max(beta_tol, 1e-12));
}

}  // namespace

GreensResult run_greens(const ExperimentConfig& cfg, const std::filesystem::path& out_dir) {
  cfg.validate();
  if (cfg.mode == Mode::GroundState) throw ConfigError("config mode is groundstate");
  const bool counted = cfg.mode == Mode::Greens;
  const int L = cfg.sites;
  const QubitOperator h = jordan_wigner(build_hubbard(L, cfg.t, cfg.U, cfg.mu), L);
  const auto [e0, psi] = sector_ground_state(h, L, cfg.n_up, cfg.n_down);
  const ComplexMatrix hd = h.to_dense();

  GreensResult result;
  const FermionOperator bi = channel_operator(cfg, cfg.site_i, cfg.spin_i);
  const FermionOperator bj = channel_operator(cfg, cfg.site_j, cfg.spin_j);
  const bool diagonal = cfg.site_i == cfg.site_j && cfg.spin_i == cfg.spin_j;
  FermionOperator first;
  FermionOperator second;
  if (diagonal) {
    std::tie(first, second) =
        hermitian_split(FermionOperator::create(cfg.site_i, cfg.spin_i));
    result.target =
        cfg.channel == "particle" ? CombineTarget::Creator : CombineTarget::Annihilator;
  } else {
    first = bj;
    second = bi;
    result.target = CombineTarget::Cross;
  }
  const std::vector<std::string> names = {"first", "second", "sum", "twisted"};
  const std::vector<FermionOperator> omegas = {first, second, first + second,
                                               first + kI * second};
  std::vector<bool> needed(4, true);
  if (result.target == CombineTarget::Creator) needed[2] = false;
  if (result.target == CombineTarget::Annihilator) needed = {false, false, false, true};

  std::optional<EnergyReference> ref;
  if (counted) ref = EnergyReference::build(hd, e0, cfg.d, cfg.d_match);

  std::vector<ShotRecord> trace;
  std::vector<double> poles;
  std::vector<ContinuedFraction> fractions(4);
  for (std::size_t k = 0; k < 4; ++k) {
    for (auto& cf : fractions) cf.branch = Branch::Retarded;
    if (!needed[k]) continue;
    PartRun part;
    part.name = names[k];
    part.omega = jordan_wigner(omegas[k], L);
    const ComplexVector start = part.omega.apply(psi);
    part.oracle_weight = start.squaredNorm();
    part.oracle = oracle_spectrum(hd, start, cfg.depth, cfg.beta_tol);
    if (!part.oracle.empty()) {
      const auto eig = tridiagonal_eigs(part.oracle).eigenvalues;
      poles.insert(poles.end(), eig.begin(), eig.end());
    }
    TridiagonalSpectrum used = part.oracle;
    double weight = part.oracle_weight;
    if (counted) {
      LanczosCounter counter(h, part.omega, psi, *ref,
                             counting_settings(cfg, derive_seed(cfg.seed, k)));
      const CountedLanczos run = counter.run(cfg.depth, cfg.beta_tol);
      part.counted = run.spectrum;
      part.counted_weight = run.spectrum.empty() ? 0.0 : run.norm0;
      part.stop_reason = run.stop_reason;
      result.aborted_shots += run.aborted_shots;
      result.total_shots += attempted_shots(run);
      append_trace(trace, counter.trace(), part.name + ":");
      used = part.counted;
      weight = part.counted_weight;
      auto rows = compare(part.oracle, part.counted, part.name + ":");
      result.report.coefficients.insert(result.report.coefficients.end(), rows.begin(),
                                        rows.end());
      if (!run.estimates.empty()) {
        const auto& e = run.estimates.front();
        result.report.coefficients.push_back(
            {part.name + ":weight", part.oracle_weight, run.norm0, e.expectation_stderr,
             z_score(part.oracle_weight, run.norm0, e.expectation_stderr)});
      }
      result.report.notes.push_back(part.name + " stopped: " + run.stop_reason);
    }
    part.truncation = truncate(ContinuedFraction::from_spectrum(used, weight),
                               cfg.beta_tol, cfg.beta_max);
    if (part.truncation.rule != TruncationRule::None) {
      result.report.notes.push_back(part.name + " truncated at level " +
                                    std::to_string(part.truncation.level) + " by " +
                                    to_string(part.truncation.rule) + " rule");
    }
    fractions[k] = part.truncation.cf;
    result.parts.push_back(std::move(part));
  }

  const std::vector<double> grid =
      cfg.omega_min ? linear_grid(*cfg.omega_min, *cfg.omega_max, cfg.points)
                    : default_grid(poles, cfg.points);
  const PartFractions pf{fractions[0], fractions[1], fractions[2], fractions[3]};
  std::vector<Complex> g = combine_parts(pf, result.target, grid, cfg.eta);

  const ComplexVector vi = jordan_wigner(bi, L).apply(psi);
  const ComplexVector vj = jordan_wigner(bj, L).apply(psi);
  std::vector<Complex> g_ref = sandwiched_resolvent(hd, vj, vi, grid, cfg.eta);
  result.numerator_exact = vj.dot(vi);
  result.spectral = spectral_from_values(grid, g, cfg.eta, Branch::Retarded);
  result.reference = spectral_from_values(grid, g_ref, cfg.eta, Branch::Retarded);
  result.report.green_deviation = sup_distance(g, g_ref);
  result.report.spectral_deviation =
      sup_distance(result.spectral.values, result.reference.values);

  if (counted) {
    const QubitOperator num =
        jordan_wigner(bj.adjoint() * bi, L);
    LanczosCounter counter(h, QubitOperator::identity(2 * L), psi, *ref,
                           counting_settings(cfg, derive_seed(cfg.seed, 4)));
    result.numerator = count_overlap(counter, num);
    result.aborted_shots += counter.aborted_shots();
    result.total_shots += 2 * cfg.shots;
    append_trace(trace, counter.trace(), "numerator:");
    const auto& n = *result.numerator;
    result.report.coefficients.push_back(
        {"numerator:re", result.numerator_exact.real(), n.value.real(), n.stderr_re,
         z_score(result.numerator_exact.real(), n.value.real(), n.stderr_re)});
    result.report.coefficients.push_back(
        {"numerator:im", result.numerator_exact.imag(), n.value.imag(), n.stderr_im,
         z_score(result.numerator_exact.imag(), n.value.imag(), n.stderr_im)});
    const double abort_fraction =
        result.total_shots > 0
            ? static_cast<double>(result.aborted_shots) / static_cast<double>(result.total_shots)
            : 0.0;
    result.report.notes.push_back("aborted shots: " + std::to_string(result.aborted_shots) +
                                  " of " + std::to_string(result.total_shots));
    if (abort_fraction > cfg.abort_threshold) {
      result.exit_code = 3;
    } else {
      result.exit_code = result.report.passes() ? 0 : 1;
    }
  } else {
    result.exit_code = *result.report.green_deviation < cfg.cf_tolerance ? 0 : 1;
  }

  if (!out_dir.empty()) {
    write_atomic(out_dir / "config.txt", cfg.serialize());
    for (const auto& part : result.parts) {
      write_atomic(out_dir / ("coefficients_" + part.name + ".csv"),
                   spectrum_csv(counted ? part.counted : part.oracle));
      std::ostringstream cf;
      write_cf(cf, part.truncation.cf, cfg.eta);
      write_atomic(out_dir / ("cf_" + part.name + ".json"), cf.str());
    }
    std::ostringstream sp;
    write_spectral_csv(sp, result.spectral);
    write_atomic(out_dir / "spectral.csv", sp.str());
    std::ostringstream rs;
    write_spectral_csv(rs, result.reference);
    write_atomic(out_dir / "spectral_reference.csv", rs.str());
    std::ostringstream rep;
    rep << "mode = " << to_string(cfg.mode) << '\n'
        << "target = " << to_string(result.target) << '\n'
        << std::setprecision(12) << "ground_energy = " << e0 << '\n'
        << result.report.render()
        << "status = " << (result.exit_code == 0 ? "pass" : "fail") << '\n';
    write_atomic(out_dir / "report.txt", rep.str());
    if (cfg.trace) {
      std::ostringstream tr;
      write_trace(tr, trace);
      write_atomic(out_dir / "trace.csv", tr.str());
    }
  }
  return result;
}

namespace {

// Simulated energy readout: collapses `state` onto one eigenspace of h,
// chosen with the Born probabilities.
std::pair<double, ComplexVector> collapse_to_eigenspace(const ComplexMatrix& h,
                                                        const ComplexVector& state,
                                                        RandomStream& rng) {
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(h);
  const RealVector& ev = solver.eigenvalues();
  const ComplexMatrix& vecs = solver.eigenvectors();
  const ComplexVector coeffs = vecs.adjoint() * state;
  std::vector<std::pair<Eigen::Index, Eigen::Index>> groups;
  for (Eigen::Index k = 0; k < ev.size();) {
    Eigen::Index end = k + 1;
    while (end < ev.size() && ev[end] - ev[k] < 1e-9 * std::max(1.0, std::abs(ev[k]))) ++end;
    groups.emplace_back(k, end);
    k = end;
  }
  const double u = rng.uniform();
  double acc = 0.0;
  std::pair<double, ComplexVector> last_nonzero{ev[0], state.normalized()};
  for (const auto& [b, e] : groups) {
    const double p = coeffs.segment(b, e - b).squaredNorm();
    if (p <= 0.0) continue;
    ComplexVector v = vecs.middleCols(b, e - b) * coeffs.segment(b, e - b);
    last_nonzero = {ev[b], v.normalized()};
    acc += p;
    if (u < acc) break;
  }
  return last_nonzero;
}

}  // namespace

GroundStateResult run_groundstate(const ExperimentConfig& cfg,
                                  const std::filesystem::path& out_dir) {
  cfg.validate();
  if (cfg.mode != Mode::GroundState) throw ConfigError("config mode is not groundstate");
  const int L = cfg.sites;
  const int nq = 2 * L;
  const QubitOperator h0 = jordan_wigner(build_hubbard_kinetic(L, cfg.t, cfg.mu), L);
  const QubitOperator h1 = jordan_wigner(build_hubbard_interaction(L, cfg.U), L);
  auto [e_base, xi] = sector_ground_state(h0, L, cfg.n_up, cfg.n_down);
  ComplexMatrix base = h0.to_dense();

  GroundStateResult result;
  std::vector<ShotRecord> trace;
  std::ostringstream steps_csv;
  std::ostringstream gamma_csv;
  steps_csv << std::setprecision(17)
            << "step,lambda,energy,exact_energy,fidelity,attempts,drift\n";
  gamma_csv << std::setprecision(17) << "step,n,gamma\n";
  std::map<std::string, std::string> coefficient_files;
  bool failed_application = false;

  for (std::size_t s = 0; s < cfg.lambda_schedule.size(); ++s) {
    StepResult step;
    step.lambda = cfg.lambda_schedule[s];
    QubitOperator h = h0 + h1 * step.lambda;
    h = h.pruned(0.0);
    const ComplexMatrix hd = h.to_dense();
    const auto [e_exact, psi_exact] = sector_ground_state(h, L, cfg.n_up, cfg.n_down);
    step.exact_energy = e_exact;

    const TridiagonalSpectrum oracle = oracle_spectrum(hd, xi, cfg.depth, cfg.beta_tol);
    double norm0 = 1.0;
    if (cfg.oracle_only) {
      step.spectrum = oracle;
    } else {
      const EnergyReference ref = EnergyReference::build(base, e_base, cfg.d, cfg.d_match);
      LanczosCounter counter(h, QubitOperator::identity(nq), xi, ref,
                             counting_settings(cfg, derive_seed(cfg.seed, 100 + s)));
      const CountedLanczos run = counter.run(cfg.depth, cfg.beta_tol);
      step.spectrum = run.spectrum;
      norm0 = run.norm0;
      result.aborted_shots += run.aborted_shots;
      result.total_shots += attempted_shots(run);
      append_trace(trace, counter.trace(), "step" + std::to_string(s) + ":");
      auto rows = compare(oracle, run.spectrum, "step" + std::to_string(s) + ":");
      result.report.coefficients.insert(result.report.coefficients.end(), rows.begin(),
                                        rows.end());
      result.report.notes.push_back("step " + std::to_string(s) +
                                    " stopped: " + run.stop_reason);
    }
    if (step.spectrum.empty()) throw Error("no coefficients for the Krylov problem");
    step.ground = tridiagonal_eigs(step.spectrum).ground;
    if (step.spectrum.depth() >= 2) {
      const double prev =
          tridiagonal_eigs(step.spectrum.prefix(step.spectrum.depth() - 1)).ground.energy;
      step.energy_drift = std::abs(step.ground.energy - prev);
    }
    step.depth_insufficient = static_cast<int>(step.spectrum.depth()) == cfg.depth &&
                              step.energy_drift > cfg.energy_tol;
    if (step.depth_insufficient) {
      result.report.notes.push_back("step " + std::to_string(s) +
                                    ": Krylov depth insufficient, energy drift " +
                                    std::to_string(step.energy_drift));
    }

    // Centering the Hamiltonian leaves every G_n unchanged.
    const double offset = h.coefficient(PauliWord::identity()).real();
    QubitOperator hc = h;
    hc.add_term(PauliWord::identity(), -offset);
    TridiagonalSpectrum centered = step.spectrum;
    for (double& a : centered.alpha) a -= offset;
    std::vector<GnOperator> gn;
    for (std::size_t n = 0; n < step.ground.gamma.size(); ++n) {
      gn.push_back(build_gn(static_cast<int>(n), centered, hc, QubitOperator::identity(nq)));
    }
    const LcuDecomposition y =
        assemble_y(krylov_weights(step.ground, step.spectrum, norm0), gn);
    if (cfg.oracle_only) {
      step.state = y.source.apply(xi).normalized();
      step.attempts = 1;
    } else {
      RandomStream rng = RandomStream::substream(cfg.seed, 200 + s);
      const BlockApplication app = apply_block_encoded(y, xi, rng, cfg.max_attempts);
      step.attempts = app.attempts;
      step.state = app.state;
      if (!app.success) {
        failed_application = true;
        result.report.notes.push_back("step " + std::to_string(s) +
                                      ": block encoding did not succeed within max_attempts");
      }
    }
    step.fidelity = fidelity(step.state, psi_exact);

    steps_csv << s << ',' << step.lambda << ',' << step.ground.energy << ',' << e_exact
              << ',' << step.fidelity << ',' << step.attempts << ',' << step.energy_drift
              << '\n';
    for (std::size_t n = 0; n < step.ground.gamma.size(); ++n) {
      gamma_csv << s << ',' << n << ',' << step.ground.gamma[n] << '\n';
    }
    coefficient_files["coefficients_step" + std::to_string(s) + ".csv"] =
        spectrum_csv(step.spectrum);

    if (s + 1 < cfg.lambda_schedule.size()) {
      RandomStream rng = RandomStream::substream(cfg.seed, 300 + s);
      std::tie(e_base, xi) = collapse_to_eigenspace(hd, step.state, rng);
      base = hd;
    }
    result.steps.push_back(std::move(step));
  }

  const StepResult& last = result.steps.back();
  result.report.energy = last.ground.energy;
  result.report.reference_energy = last.exact_energy;
  result.report.fidelity = last.fidelity;
  const double abort_fraction =
      result.total_shots > 0
          ? static_cast<double>(result.aborted_shots) / static_cast<double>(result.total_shots)
          : 0.0;
  if (!cfg.oracle_only) {
    result.report.notes.push_back("aborted shots: " + std::to_string(result.aborted_shots) +
                                  " of " + std::to_string(result.total_shots));
  }
  if (failed_application || abort_fraction > cfg.abort_threshold) {
    result.exit_code = 3;
  } else if (cfg.oracle_only) {
    const bool ok = std::abs(last.ground.energy - last.exact_energy) <= cfg.energy_tol &&
                    last.fidelity >= cfg.fidelity_min;
    result.exit_code = ok ? 0 : 1;
  } else {
    const bool ok = result.report.passes() && last.fidelity >= cfg.fidelity_min;
    result.exit_code = ok ? 0 : 1;
  }

  if (!out_dir.empty()) {
    write_atomic(out_dir / "config.txt", cfg.serialize());
    write_atomic(out_dir / "groundstate.csv", steps_csv.str());
    write_atomic(out_dir / "gamma.csv", gamma_csv.str());
    for (const auto& [name, content] : coefficient_files) write_atomic(out_dir / name, content);
    std::ostringstream rep;
    rep << "mode = groundstate\n"
        << "coefficients = " << (cfg.oracle_only ? "oracle" : "counted") << '\n'
        << result.report.render()
        << "status = " << (result.exit_code == 0 ? "pass" : "fail") << '\n';
    write_atomic(out_dir / "report.txt", rep.str());
    if (cfg.trace) {
      std::ostringstream tr;
      write_trace(tr, trace);
      write_atomic(out_dir / "trace.csv", tr.str());
    }
  }
  return result;
}

}  // namespace qlr
