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

#include "qlr/statevector.hpp"

#include <bit>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <ostream>

#include <Eigen/Eigenvalues>

namespace qlr {

namespace {

constexpr double kUnitaryTol = 1e-10;
constexpr int kMaxReadoutBits = 10;

std::uint64_t low_mask(int width) {
  return width >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << width) - 1;
}

std::uint64_t field(std::uint64_t index, int offset, int width) {
  return (index >> offset) & low_mask(width);
}

void check_unitary(const ComplexMatrix& u) {
  if (u.rows() != u.cols()) throw InvalidArgument("gate matrix is not square");
  const ComplexMatrix id = ComplexMatrix::Identity(u.rows(), u.cols());
  if ((u.adjoint() * u - id).cwiseAbs().maxCoeff() > kUnitaryTol) {
    throw InvalidArgument("gate matrix is not unitary");
  }
}

// Applies u to qubits [offset, offset + width) for the basis states whose
// qubits [ctrl_offset, ctrl_offset + ctrl_width) equal ctrl_value. A
// negative ctrl_width disables the control.
void apply_block(ComplexVector& amps, const ComplexMatrix& u, int offset,
                 int width, int ctrl_offset, int ctrl_width,
                 std::uint64_t ctrl_value) {
  const std::uint64_t dim = static_cast<std::uint64_t>(amps.size());
  const std::uint64_t block = std::uint64_t{1} << width;
  const std::uint64_t mask = low_mask(width) << offset;
  ComplexVector in(static_cast<Eigen::Index>(block));
  for (std::uint64_t base = 0; base < dim; ++base) {
    if (base & mask) continue;
    if (ctrl_width >= 0 && field(base, ctrl_offset, ctrl_width) != ctrl_value) {
      continue;
    }
    for (std::uint64_t r = 0; r < block; ++r) {
      in[static_cast<Eigen::Index>(r)] =
          amps[static_cast<Eigen::Index>(base | (r << offset))];
    }
    const ComplexVector out = u * in;
    for (std::uint64_t r = 0; r < block; ++r) {
      amps[static_cast<Eigen::Index>(base | (r << offset))] =
          out[static_cast<Eigen::Index>(r)];
    }
  }
}

}  // namespace

void RegisterLayout::validate() const {
  if (n_system < 1) throw InvalidArgument("layout needs at least one system qubit");
  if (d < 0 || n_ancilla < 0) throw InvalidArgument("negative register width");
  if (total_qubits() > kMaxSimulatedQubits) {
    throw Unsupported("register layout exceeds the simulator's qubit cap");
  }
}

RandomStream::RandomStream(std::uint64_t seed) : engine_(seed), seed_(seed) {}

RandomStream RandomStream::substream(std::uint64_t master_seed,
                                     std::uint64_t id) {
  std::seed_seq seq{static_cast<std::uint32_t>(master_seed),
                    static_cast<std::uint32_t>(master_seed >> 32),
                    static_cast<std::uint32_t>(id),
                    static_cast<std::uint32_t>(id >> 32)};
  std::uint64_t words[2];
  std::uint32_t parts[4];
  seq.generate(parts, parts + 4);
  words[0] = (std::uint64_t{parts[0]} << 32) | parts[1];
  words[1] = (std::uint64_t{parts[2]} << 32) | parts[3];
  return RandomStream(words[0] ^ (words[1] << 1));
}

std::uint64_t RandomStream::next() {
  ++counter_;
  return engine_();
}

double RandomStream::uniform() {
  return static_cast<double>(next() >> 11) * 0x1.0p-53;
}

StateVector::StateVector(int n_qubits) : n_qubits_(n_qubits) {
  if (n_qubits < 0 || n_qubits > kMaxSimulatedQubits) {
    throw Unsupported("statevector qubit count out of range");
  }
  amps_ = ComplexVector::Zero(Eigen::Index{1} << n_qubits);
  amps_[0] = 1.0;
}

StateVector::StateVector(int n_qubits, ComplexVector amplitudes)
    : n_qubits_(n_qubits), amps_(std::move(amplitudes)) {
  if (n_qubits < 0 || n_qubits > kMaxSimulatedQubits) {
    throw Unsupported("statevector qubit count out of range");
  }
  if (amps_.size() != (Eigen::Index{1} << n_qubits)) {
    throw InvalidArgument("amplitude count does not match qubit count");
  }
  if (std::abs(amps_.squaredNorm() - 1.0) > 1e-10) {
    throw InvalidArgument("state amplitudes are not normalized");
  }
}

void StateVector::apply_matrix(const ComplexMatrix& u,
                               std::span<const int> targets) {
  const auto k = static_cast<int>(targets.size());
  if (u.rows() != (Eigen::Index{1} << k)) {
    throw InvalidArgument("gate size does not match its target count");
  }
  std::uint64_t used = 0;
  for (int t : targets) {
    if (t < 0 || t >= n_qubits_) throw InvalidArgument("target qubit out of range");
    if (used & (std::uint64_t{1} << t)) {
      throw InvalidArgument("repeated target qubit");
    }
    used |= std::uint64_t{1} << t;
  }
  check_unitary(u);

  bool contiguous = true;
  for (int i = 1; i < k; ++i) contiguous &= targets[i] == targets[0] + i;
  if (contiguous && k > 0) {
    apply_block(amps_, u, targets[0], k, 0, -1, 0);
    return;
  }
  const std::uint64_t block = std::uint64_t{1} << k;
  ComplexVector in(static_cast<Eigen::Index>(block));
  std::vector<std::uint64_t> idx(block);
  for (std::uint64_t base = 0; base < static_cast<std::uint64_t>(dim()); ++base) {
    if (base & used) continue;
    for (std::uint64_t r = 0; r < block; ++r) {
      std::uint64_t i = base;
      for (int b = 0; b < k; ++b) {
        if ((r >> b) & 1u) i |= std::uint64_t{1} << targets[static_cast<std::size_t>(b)];
      }
      idx[r] = i;
      in[static_cast<Eigen::Index>(r)] = amps_[static_cast<Eigen::Index>(i)];
    }
    const ComplexVector out = u * in;
    for (std::uint64_t r = 0; r < block; ++r) {
      amps_[static_cast<Eigen::Index>(idx[r])] = out[static_cast<Eigen::Index>(r)];
    }
  }
}

void StateVector::apply_pauli(const PauliWord& word, int offset, Complex phase) {
  const int top = std::bit_width(word.x | word.z);
  if (offset < 0 || offset + top > n_qubits_) {
    throw InvalidArgument("Pauli word does not fit in the state");
  }
  ComplexVector out(amps_.size());
  for (std::uint64_t i = 0; i < static_cast<std::uint64_t>(dim()); ++i) {
    std::uint64_t flipped = 0;
    const Complex ph = word.apply(i >> offset, flipped);
    const std::uint64_t j =
        (i & ~(low_mask(top) << offset)) | ((flipped & low_mask(top)) << offset);
    out[static_cast<Eigen::Index>(j)] = phase * ph * amps_[static_cast<Eigen::Index>(i)];
  }
  amps_.swap(out);
}

void StateVector::flip_where(int target,
                             const std::function<bool(std::uint64_t)>& predicate) {
  if (target < 0 || target >= n_qubits_) {
    throw InvalidArgument("target qubit out of range");
  }
  const std::uint64_t bit = std::uint64_t{1} << target;
  for (std::uint64_t i = 0; i < static_cast<std::uint64_t>(dim()); ++i) {
    if (i & bit) continue;
    // The predicate must not depend on the target bit.
    if (predicate(i)) {
      std::swap(amps_[static_cast<Eigen::Index>(i)],
                amps_[static_cast<Eigen::Index>(i | bit)]);
    }
  }
}

double StateVector::probability_one(int qubit) const {
  if (qubit < 0 || qubit >= n_qubits_) throw InvalidArgument("qubit out of range");
  const std::uint64_t bit = std::uint64_t{1} << qubit;
  double p = 0.0;
  for (std::uint64_t i = 0; i < static_cast<std::uint64_t>(dim()); ++i) {
    if (i & bit) p += std::norm(amps_[static_cast<Eigen::Index>(i)]);
  }
  return p;
}

double StateVector::probability_zero(int offset, int width) const {
  if (offset < 0 || width < 0 || offset + width > n_qubits_) {
    throw InvalidArgument("register out of range");
  }
  const std::uint64_t mask = low_mask(width) << offset;
  double p = 0.0;
  for (std::uint64_t i = 0; i < static_cast<std::uint64_t>(dim()); ++i) {
    if (!(i & mask)) p += std::norm(amps_[static_cast<Eigen::Index>(i)]);
  }
  return p;
}

int StateVector::measure(int qubit, RandomStream& rng) {
  const double p1 = probability_one(qubit);
  const int bit = rng.uniform() < p1 ? 1 : 0;
  const std::uint64_t b = std::uint64_t{1} << qubit;
  for (std::uint64_t i = 0; i < static_cast<std::uint64_t>(dim()); ++i) {
    if (((i & b) != 0) != (bit == 1)) amps_[static_cast<Eigen::Index>(i)] = 0.0;
  }
  renormalize();
  return bit;
}

bool StateVector::measure_zero(int offset, int width, RandomStream& rng) {
  const double p0 = probability_zero(offset, width);
  const bool zero = rng.uniform() < p0;
  const std::uint64_t mask = low_mask(width) << offset;
  for (std::uint64_t i = 0; i < static_cast<std::uint64_t>(dim()); ++i) {
    if (((i & mask) == 0) != zero) amps_[static_cast<Eigen::Index>(i)] = 0.0;
  }
  renormalize();
  return zero;
}

ComplexVector StateVector::slice(int n_low, std::uint64_t high_value) const {
  if (n_low < 0 || n_low > n_qubits_) throw InvalidArgument("slice width out of range");
  const std::uint64_t block = std::uint64_t{1} << n_low;
  ComplexVector out(static_cast<Eigen::Index>(block));
  for (std::uint64_t r = 0; r < block; ++r) {
    out[static_cast<Eigen::Index>(r)] =
        amps_[static_cast<Eigen::Index>((high_value << n_low) | r)];
  }
  return out;
}

void StateVector::dump(std::ostream& os) const {
  os << std::setprecision(17);
  for (Eigen::Index i = 0; i < amps_.size(); ++i) {
    if (amps_[i] == Complex{}) continue;
    os << i << ' ' << amps_[i].real() << ' ' << amps_[i].imag() << '\n';
  }
}

void StateVector::renormalize() {
  const double n = amps_.norm();
  if (n == 0.0) throw Error("measurement produced a zero-norm state");
  amps_ /= n;
}

LcuCircuit::LcuCircuit(const LcuDecomposition& dec)
    : dec_(dec), n_ancilla_(dec.ancilla_qubits()) {
  if (dec.size() == 0) throw InvalidArgument("empty LCU decomposition");
  double total = 0.0;
  for (double w : dec.weights) {
    if (w < 0.0) throw InvalidArgument("negative LCU weight");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw InvalidArgument("LCU weights must sum to one");
  }
  const Eigen::Index m = Eigen::Index{1} << n_ancilla_;
  ComplexVector target = ComplexVector::Zero(m);
  for (std::size_t l = 0; l < dec.size(); ++l) {
    target[static_cast<Eigen::Index>(l)] = std::sqrt(dec.weights[l]);
  }
  target.normalize();
  ComplexVector u = -target;
  u[0] += 1.0;
  if (u.norm() > 1e-15) reflector_ = u.normalized();
}

void LcuCircuit::apply_prepare(StateVector& state, int ancilla_offset) const {
  if (reflector_.size() == 0) return;
  if (ancilla_offset < 0 || ancilla_offset + n_ancilla_ > state.n_qubits()) {
    throw InvalidArgument("LCU ancillas do not fit in the state");
  }
  ComplexVector amps = state.amplitudes();
  const std::uint64_t mask = low_mask(n_ancilla_) << ancilla_offset;
  const auto m = static_cast<std::uint64_t>(reflector_.size());
  for (std::uint64_t base = 0; base < static_cast<std::uint64_t>(amps.size()); ++base) {
    if (base & mask) continue;
    Complex dot = 0.0;
    for (std::uint64_t l = 0; l < m; ++l) {
      dot += std::conj(reflector_[static_cast<Eigen::Index>(l)]) *
             amps[static_cast<Eigen::Index>(base | (l << ancilla_offset))];
    }
    if (dot == Complex{}) continue;
    dot *= 2.0;
    for (std::uint64_t l = 0; l < m; ++l) {
      amps[static_cast<Eigen::Index>(base | (l << ancilla_offset))] -=
          reflector_[static_cast<Eigen::Index>(l)] * dot;
    }
  }
  state = StateVector(state.n_qubits(), std::move(amps));
}

void LcuCircuit::apply_select(StateVector& state, int system_offset,
                              int ancilla_offset, bool adjoint) const {
  if (system_offset < 0 || system_offset + dec_.n_qubits > state.n_qubits() ||
      ancilla_offset < 0 || ancilla_offset + n_ancilla_ > state.n_qubits()) {
    throw InvalidArgument("LCU registers do not fit in the state");
  }
  const ComplexVector& in = state.amplitudes();
  ComplexVector out = in;
  const std::uint64_t sys_mask = low_mask(dec_.n_qubits) << system_offset;
  for (std::uint64_t i = 0; i < static_cast<std::uint64_t>(in.size()); ++i) {
    const std::uint64_t l = field(i, ancilla_offset, n_ancilla_);
    if (l >= dec_.size()) continue;
    std::uint64_t flipped = 0;
    // Pauli words are Hermitian, so the adjoint only conjugates the phase.
    const Complex ph =
        dec_.words[l].apply(field(i, system_offset, dec_.n_qubits), flipped) *
        (adjoint ? std::conj(dec_.phases[l]) : dec_.phases[l]);
    const std::uint64_t j = (i & ~sys_mask) | (flipped << system_offset);
    out[static_cast<Eigen::Index>(j)] = ph * in[static_cast<Eigen::Index>(i)];
  }
  state = StateVector(state.n_qubits(), std::move(out));
}

void LcuCircuit::apply(StateVector& state, int system_offset,
                       int ancilla_offset) const {
  apply_prepare(state, ancilla_offset);
  apply_select(state, system_offset, ancilla_offset, false);
  apply_prepare(state, ancilla_offset);
}

void LcuCircuit::apply_adjoint(StateVector& state, int system_offset,
                               int ancilla_offset) const {
  apply_prepare(state, ancilla_offset);
  apply_select(state, system_offset, ancilla_offset, true);
  apply_prepare(state, ancilla_offset);
}

ComplexMatrix LcuCircuit::dense() const {
  const int n = dec_.n_qubits + n_ancilla_;
  if (n > kMaxDenseQubits) throw Unsupported("LCU circuit too large to densify");
  const Eigen::Index dim = Eigen::Index{1} << n;
  ComplexMatrix m(dim, dim);
  for (Eigen::Index c = 0; c < dim; ++c) {
    ComplexVector e = ComplexVector::Zero(dim);
    e[c] = 1.0;
    StateVector s(n, e);
    apply(s, 0, dec_.n_qubits);
    m.col(c) = s.amplitudes();
  }
  return m;
}

bool apply_lcu(StateVector& state, const RegisterLayout& layout,
               const LcuCircuit& circuit, RandomStream& rng) {
  if (circuit.ancilla_qubits() > layout.n_ancilla) {
    throw InvalidArgument("layout has too few ancilla qubits for the LCU");
  }
  const int a_off = layout.ancilla_offset();
  const int a_width = circuit.ancilla_qubits();
  if (state.probability_zero(a_off, a_width) < 1.0 - 1e-12) {
    throw InvalidArgument("LCU ancillas are not reset");
  }
  circuit.apply(state, 0, a_off);
  return state.measure_zero(a_off, a_width, rng);
}

PhaseScaling PhaseScaling::fit(double reference, double e_min, double e_max,
                               int d) {
  if (d < 1 || d > 52) throw InvalidArgument("phase register width out of range");
  if (!(e_min <= reference && reference <= e_max)) {
    throw InvalidArgument("reference energy outside the spectral range");
  }
  PhaseScaling s;
  s.reference = reference;
  s.d = d;
  const double span = e_max - e_min;
  s.width = span > 0.0 ? span / (1.0 - std::ldexp(1.0, -d + 1)) : 1.0;
  s.reference_index = static_cast<std::int64_t>(
      std::ceil((reference - e_min) / s.width * std::ldexp(1.0, d)));
  return s;
}

double PhaseScaling::phase(double energy) const {
  return (energy - reference) / width +
         static_cast<double>(reference_index) * std::ldexp(1.0, -d);
}

double PhaseScaling::window(int d_match) const {
  return width * std::ldexp(1.0, -d_match);
}

PhaseEstimator::PhaseEstimator(const ComplexMatrix& h_phase, int d) : d_(d) {
  if (d < 1) throw InvalidArgument("phase register needs at least one bit");
  if (h_phase.rows() != h_phase.cols()) {
    throw InvalidArgument("phase Hamiltonian is not square");
  }
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(h_phase);
  vecs_ = solver.eigenvectors();
  const RealVector& ev = solver.eigenvalues();
  for (Eigen::Index k = 0; k < ev.size(); ++k) {
    if (ev[k] < -1e-12 || ev[k] >= 1.0) {
      throw InvalidArgument("eigenphase outside [0, 1); rescale H0 first");
    }
    phases_.push_back(std::max(0.0, ev[k]));
  }
  if (d <= kMaxReadoutBits) {
    for (double ph : phases_) readouts_.push_back(readout_unitary(ph, d));
  }
}

Complex PhaseEstimator::amplitude(double phase, int d, std::uint64_t x,
                                  std::uint64_t y) {
  // The sum over j factorizes over the bits of j.
  const double theta = phase - static_cast<double>(x) * std::ldexp(1.0, -d);
  Complex prod = 1.0;
  for (int b = 0; b < d; ++b) {
    const double sign = ((y >> b) & 1u) ? -1.0 : 1.0;
    const double angle = 2.0 * std::numbers::pi * std::ldexp(theta, b);
    prod *= 0.5 * (1.0 + sign * std::polar(1.0, angle));
  }
  return prod;
}

ComplexMatrix PhaseEstimator::readout_unitary(double phase, int d) {
  if (d > kMaxReadoutBits) throw Unsupported("readout unitary too large");
  const Eigen::Index m = Eigen::Index{1} << d;
  ComplexMatrix u(m, m);
  for (Eigen::Index x = 0; x < m; ++x) {
    for (Eigen::Index y = 0; y < m; ++y) {
      u(x, y) = amplitude(phase, d, static_cast<std::uint64_t>(x),
                          static_cast<std::uint64_t>(y));
    }
  }
  return u;
}

std::vector<double> PhaseEstimator::readout_distribution(double phase, int d) {
  if (d > 30) throw Unsupported("readout distribution too large");
  std::vector<double> p(std::size_t{1} << d);
  for (std::uint64_t x = 0; x < p.size(); ++x) {
    p[x] = std::norm(amplitude(phase, d, x, 0));
  }
  return p;
}

namespace {

void apply_phase_readout(StateVector& state, const RegisterLayout& layout,
                         const ComplexMatrix& vecs,
                         const std::vector<ComplexMatrix>& readouts,
                         EnergyRegister target, bool inverse) {
  if (static_cast<int>(readouts.size()) != (1 << layout.n_system)) {
    throw InvalidArgument("phase estimator does not match the system register");
  }
  const int offset =
      target == EnergyRegister::E ? layout.e_offset() : layout.e_prime_offset();
  std::vector<int> sys(static_cast<std::size_t>(layout.n_system));
  for (int q = 0; q < layout.n_system; ++q) sys[static_cast<std::size_t>(q)] = q;
  state.apply_matrix(vecs.adjoint(), sys);
  ComplexVector amps = state.amplitudes();
  for (std::size_t k = 0; k < readouts.size(); ++k) {
    const ComplexMatrix u = inverse ? ComplexMatrix(readouts[k].adjoint()) : readouts[k];
    apply_block(amps, u, offset, layout.d, 0, layout.n_system, k);
  }
  state = StateVector(state.n_qubits(), std::move(amps));
  state.apply_matrix(vecs, sys);
}

}  // namespace

void qpe(StateVector& state, const RegisterLayout& layout,
         const PhaseEstimator& est, EnergyRegister target) {
  if (est.bits() != layout.d) throw InvalidArgument("QPE width does not match layout");
  if (est.readouts_.empty()) throw Unsupported("QPE register too wide to simulate");
  apply_phase_readout(state, layout, est.vecs_, est.readouts_, target, false);
}

void inverse_qpe(StateVector& state, const RegisterLayout& layout,
                 const PhaseEstimator& est, EnergyRegister target) {
  if (est.bits() != layout.d) throw InvalidArgument("QPE width does not match layout");
  if (est.readouts_.empty()) throw Unsupported("QPE register too wide to simulate");
  apply_phase_readout(state, layout, est.vecs_, est.readouts_, target, true);
}

bool readouts_match(std::uint64_t a, std::uint64_t b, int d, int d_match) {
  if (d_match < 0 || d_match > d) throw InvalidArgument("d_match exceeds d");
  return ((a ^ b) >> (d - d_match)) == 0 || d_match == 0;
}

void cnot_compare(StateVector& state, const RegisterLayout& layout, int d_match) {
  if (d_match < 0 || d_match > layout.d) throw InvalidArgument("d_match exceeds d");
  const int d = layout.d;
  const int e_off = layout.e_offset();
  const int ep_off = layout.e_prime_offset();
  state.flip_where(layout.pointer(), [&](std::uint64_t i) {
    return !readouts_match(field(i, e_off, d), field(i, ep_off, d), d, d_match);
  });
}

}  // namespace qlr
