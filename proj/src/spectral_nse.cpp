#include "minea/spectral_nse.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>

#include "minea/errors.hpp"
#include "minea/measure_lab.hpp"
#include "minea/minea_core.hpp"
#include "minea/parallel.hpp"

namespace minea::nse {

int Wavevector::sup_norm() const noexcept { return std::max(std::abs(k1), std::abs(k2)); }

// ---------------------------------------------------------------------------
// ModeSet

namespace {

constexpr int kMaxTruncation = 64;

// Above this many triads the convolution is split across workers.
constexpr std::size_t kParallelTriadThreshold = 20000;

}  // namespace

const ModeSet& ModeSet::get(int truncation) {
  if (truncation < 1 || truncation > kMaxTruncation)
    throw InvalidParameter("truncation must lie in [1, 64]");
  static std::mutex mutex;
  static std::map<int, std::unique_ptr<ModeSet>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[truncation];
  if (!slot) slot.reset(new ModeSet(truncation));
  return *slot;
}

ModeSet::ModeSet(int n) : n_(n) {
  for (int k2 = 0; k2 <= n; ++k2)
    for (int k1 = -n; k1 <= n; ++k1) {
      const Wavevector k{k1, k2};
      if (k.upper_half()) half_.push_back(k);
    }
  const std::size_t h = half_.size();
  const int side = 2 * n + 1;
  lookup_.assign(static_cast<std::size_t>(side * side), -1);
  auto slot = [&](Wavevector k) {
    return static_cast<std::size_t>((k.k1 + n) * side + (k.k2 + n));
  };
  for (std::size_t i = 0; i < h; ++i) {
    lookup_[slot(half_[i])] = static_cast<long>(i);
    lookup_[slot(-half_[i])] = static_cast<long>(h + i);
  }

  auto full = [&](std::size_t i) { return i < h ? half_[i] : -half_[i - h]; };
  offsets_.push_back(0);
  for (const Wavevector& k : half_) {
    const double nk = std::sqrt(static_cast<double>(k.norm2()));
    for (std::size_t ip = 0; ip < 2 * h; ++ip) {
      const Wavevector p = full(ip);
      const Wavevector q{k.k1 - p.k1, k.k2 - p.k2};
      if (q.zero() || q.sup_norm() > n) continue;
      const long cross = static_cast<long>(p.k1) * q.k2 - static_cast<long>(p.k2) * q.k1;
      const long qk = static_cast<long>(q.k1) * k.k1 + static_cast<long>(q.k2) * k.k2;
      if (cross == 0 || qk == 0) continue;
      const double np = std::sqrt(static_cast<double>(p.norm2()));
      const double nq = std::sqrt(static_cast<double>(q.norm2()));
      const double coef = -static_cast<double>(cross) * static_cast<double>(qk) / (np * nq * nk);
      triads_.push_back({static_cast<std::uint32_t>(ip),
                         static_cast<std::uint32_t>(lookup_[slot(q)]), coef});
    }
    offsets_.push_back(triads_.size());
  }
}

long ModeSet::locate(Wavevector k, bool& conjugate) const {
  conjugate = false;
  if (k.zero() || k.sup_norm() > n_) return -1;
  const int side = 2 * n_ + 1;
  const long idx = lookup_[static_cast<std::size_t>((k.k1 + n_) * side + (k.k2 + n_))];
  const long h = static_cast<long>(half_.size());
  if (idx >= h) {
    conjugate = true;
    return idx - h;
  }
  return idx;
}

// ---------------------------------------------------------------------------
// SpectralField

SpectralField::SpectralField(int truncation)
    : modes_(&ModeSet::get(truncation)), c_(modes_->half_size(), Complex{}) {}

Complex SpectralField::coeff(Wavevector k) const {
  bool conj = false;
  const long i = modes_->locate(k, conj);
  if (i < 0) throw InvalidParameter("wavevector outside the truncation");
  const Complex c = c_[static_cast<std::size_t>(i)];
  return conj ? std::conj(c) : c;
}

void SpectralField::set(Wavevector k, Complex c) {
  bool conj = false;
  const long i = modes_->locate(k, conj);
  if (i < 0) throw InvalidParameter("wavevector outside the truncation");
  c_[static_cast<std::size_t>(i)] = conj ? std::conj(c) : c;
}

std::array<double, 2> SpectralField::velocity(double x, double y) const {
  std::array<double, 2> u{0.0, 0.0};
  const auto& half = modes_->half();
  for (std::size_t i = 0; i < half.size(); ++i) {
    const Wavevector k = half[i];
    const double nk = std::sqrt(static_cast<double>(k.norm2()));
    const Complex phase = std::polar(1.0, k.k1 * x + k.k2 * y);
    // 2 Re(c i e^{ik.x}) k_perp/|k| = -2 Im(c e^{ik.x}) k_perp/|k|
    const double s = -2.0 * (c_[i] * phase).imag() / nk;
    u[0] += s * (-k.k2);
    u[1] += s * k.k1;
  }
  return u;
}

SpectralField& SpectralField::operator+=(const SpectralField& o) {
  if (o.modes_ != modes_) throw InvalidParameter("truncation mismatch");
  for (std::size_t i = 0; i < c_.size(); ++i) c_[i] += o.c_[i];
  return *this;
}

SpectralField& SpectralField::operator*=(double s) {
  for (auto& c : c_) c *= s;
  return *this;
}

namespace {

void require_same(const SpectralField& a, const SpectralField& b) {
  if (a.truncation() != b.truncation()) throw InvalidParameter("truncation mismatch");
}

}  // namespace

double inner_H(const SpectralField& u, const SpectralField& w) {
  require_same(u, w);
  double s = 0.0;
  const auto a = u.half();
  const auto b = w.half();
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] * std::conj(b[i])).real();
  return 2.0 * s;
}

double norm_H2(const SpectralField& u) { return inner_H(u, u); }

double norm_V2(const SpectralField& u) {
  double s = 0.0;
  const auto& half = u.modes().half();
  const auto c = u.half();
  for (std::size_t i = 0; i < c.size(); ++i) s += half[i].norm2() * std::norm(c[i]);
  return 2.0 * s;
}

SpectralField apply_A(const SpectralField& u) {
  SpectralField out = u;
  const auto& half = u.modes().half();
  auto c = out.half();
  for (std::size_t i = 0; i < c.size(); ++i) c[i] *= static_cast<double>(half[i].norm2());
  return out;
}

SpectralField stokes_eigenmode(Wavevector k, int truncation) {
  if (k.zero()) throw InvalidParameter("stokes_eigenmode: zero mode has no eigenvector");
  if (k.sup_norm() > truncation)
    throw InvalidParameter("stokes_eigenmode: wavevector outside the truncation");
  SpectralField e(truncation);
  e.set(k, Complex{0.0, -1.0 / std::numbers::sqrt2});
  return e;
}

namespace {

SpectralField convolve(const SpectralField& u, const SpectralField& v, bool parallel) {
  require_same(u, v);
  const ModeSet& m = u.modes();
  const std::size_t h = m.half_size();
  std::vector<Complex> fu(2 * h), fv(2 * h);
  const auto cu = u.half();
  const auto cv = v.half();
  for (std::size_t i = 0; i < h; ++i) {
    fu[i] = cu[i];
    fu[h + i] = std::conj(cu[i]);
    fv[i] = cv[i];
    fv[h + i] = std::conj(cv[i]);
  }
  SpectralField out(u.truncation());
  auto co = out.half();
  const auto& triads = m.triads();
  const auto& offsets = m.triad_offsets();
  const long nh = static_cast<long>(h);
  const bool go_parallel =
      parallel && triads.size() >= kParallelTriadThreshold && !omp_in_parallel();
#pragma omp parallel for schedule(static) if (go_parallel) num_threads(worker_count())
  for (long k = 0; k < nh; ++k) {
    Complex acc{};
    for (std::size_t t = offsets[static_cast<std::size_t>(k)];
         t < offsets[static_cast<std::size_t>(k) + 1]; ++t) {
      const auto& tr = triads[t];
      const Complex a = fu[tr.p];
      if (a.real() == 0.0 && a.imag() == 0.0) continue;
      acc += tr.coef * (a * fv[tr.q]);
    }
    co[static_cast<std::size_t>(k)] = acc;
  }
  return out;
}

}  // namespace

SpectralField bilinear_B_spectral(const SpectralField& u, const SpectralField& v) {
  return convolve(u, v, true);
}

SpectralField bilinear_B_spectral_serial(const SpectralField& u, const SpectralField& v) {
  return convolve(u, v, false);
}

double b_form(const SpectralField& u, const SpectralField& v, const SpectralField& w) {
  return inner_H(bilinear_B_spectral(u, v), w);
}

SpectralField random_field(int truncation, RngStream& stream, double h_norm) {
  SpectralField f(truncation);
  for (auto& c : f.half()) c = Complex{stream.gaussian(), stream.gaussian()};
  const double n = std::sqrt(norm_H2(f));
  if (n > 0.0) f *= h_norm / n;
  return f;
}

// ---------------------------------------------------------------------------
// Dynamics

void NseParams::validate() const {
  if (!(mu > 0.0) || !std::isfinite(mu)) throw InvalidParameter("NseParams: mu must be positive");
  if (!(sigma >= 0.0) || !std::isfinite(sigma))
    throw InvalidParameter("NseParams: sigma must be non-negative");
  if (!std::isfinite(kappa)) throw InvalidParameter("NseParams: kappa must be finite");
  if (forced_mode.zero()) throw InvalidParameter("NseParams: forced mode must be nonzero");
  if (truncation < 1 || truncation > kMaxTruncation)
    throw InvalidParameter("NseParams: truncation must lie in [1, 64]");
  if (forced_mode.sup_norm() > truncation)
    throw InvalidParameter("NseParams: truncation must contain the forced mode");
}

NseStepper::NseStepper(const NseParams& p, double dt) : p_(p), dt_(dt) {
  p.validate();
  if (!(dt > 0.0)) throw InvalidParameter("step_nse: dt must be positive");
  const ModeSet& m = ModeSet::get(p.truncation);
  for (const Wavevector& k : m.half()) {
    const double rate = p.mu * k.norm2();
    decay_.push_back(std::exp(-rate * dt));
    weight_.push_back(-std::expm1(-rate * dt) / rate);
  }
  const SpectralField e = stokes_eigenmode(p.forced_mode, p.truncation);
  bool conj = false;
  forced_index_ = static_cast<std::size_t>(m.locate(p.forced_mode, conj));
  forced_coeff_ = e.half()[forced_index_];
}

SpectralField NseStepper::step(const SpectralField& u, double dW) const {
  SpectralField next = bilinear_B_spectral(u, u);
  auto c = next.half();
  const auto cu = u.half();
  for (std::size_t i = 0; i < c.size(); ++i) {
    Complex force = -c[i];
    Complex start = cu[i];
    if (i == forced_index_) {
      force += p_.kappa * forced_coeff_;
      start += (p_.sigma * dW) * forced_coeff_;
    }
    c[i] = decay_[i] * start + weight_[i] * force;
  }
  return next;
}

double NseStepper::forced_amplitude(const SpectralField& u) const {
  return 2.0 * (u.half()[forced_index_] * std::conj(forced_coeff_)).real();
}

SpectralField step_nse(const NseParams& p, const SpectralField& u, double dt, double dW) {
  if (u.truncation() != p.truncation) throw InvalidParameter("step_nse: truncation mismatch");
  SpectralField next = NseStepper(p, dt).step(u, dW);
  const double e = norm_H2(next);
  if (!(e <= kBlowUpNormH * kBlowUpNormH)) throw BlowUp(0, dt, 0);
  return next;
}

double forced_amplitude(const NseParams& p, const SpectralField& u) {
  return inner_H(u, stokes_eigenmode(p.forced_mode, p.truncation));
}

double offmode_energy(const NseParams& p, const SpectralField& u) {
  p.validate();
  bool conj = false;
  const std::size_t idx = static_cast<std::size_t>(u.modes().locate(p.forced_mode, conj));
  const Complex fc = stokes_eigenmode(p.forced_mode, p.truncation).half()[idx];
  double s = 0.0;
  const auto c = u.half();
  for (std::size_t i = 0; i < c.size(); ++i)
    if (i != idx) s += 2.0 * std::norm(c[i]);
  // Component of c_{k0} orthogonal to the eigenmode direction.
  const double beta = 2.0 * (c[idx] * std::conj(Complex{0.0, 1.0} * fc)).real();
  return s + beta * beta;
}

namespace {

void check_energy(const SpectralField& u, std::uint64_t step, double dt, std::uint64_t traj) {
  const double e = norm_H2(u);
  if (!(e <= kBlowUpNormH * kBlowUpNormH))
    throw BlowUp(step, static_cast<double>(step) * dt, traj);
}

}  // namespace

ConsistencyResult eigenmode_consistency(const NseParams& p, double a, double t_end, double dt,
                                        RngStream& stream) {
  const NseStepper stepper(p, dt);
  const OuTransition ou(dt, p.ou_rate(), p.kappa, p.sigma);
  const std::uint64_t n = step_count(t_end, dt);
  const double sqrt_dt = std::sqrt(dt);

  SpectralField u = a * stokes_eigenmode(p.forced_mode, p.truncation);
  double z = a;
  ConsistencyResult r;
  for (std::uint64_t k = 1; k <= n; ++k) {
    const double g = stream.gaussian();
    u = stepper.step(u, sqrt_dt * g);
    check_energy(u, k, dt, stream.stream_index());
    z = ou.apply(z, g);
    r.max_deviation = std::max(r.max_deviation, std::abs(stepper.forced_amplitude(u) - z));
    r.max_offmode_energy = std::max(r.max_offmode_energy, offmode_energy(p, u));
  }
  return r;
}

double smallness_indicator(const NseParams& p) {
  const double lam = p.forced_eigenvalue();
  return p.kappa * p.kappa / (lam * std::pow(p.mu, 4)) +
         p.sigma * p.sigma / (2.0 * std::pow(p.mu, 3));
}

namespace {

struct PathRecord {
  std::vector<double> times;
  std::vector<double> values;
  double final_amplitude = 0.0;
};

template <class Observable>
PathRecord run_path(const NseParams& p, const SpectralField& v, double t_end, double dt,
                    std::uint64_t seed, std::uint64_t index, std::uint64_t stride,
                    Observable&& obs) {
  const NseStepper stepper(p, dt);
  const std::uint64_t n = step_count(t_end, dt);
  const double sqrt_dt = std::sqrt(dt);
  RngStream stream = make_stream(seed, index);
  PathRecord rec;
  SpectralField u = v;
  rec.times.push_back(0.0);
  rec.values.push_back(obs(u));
  for (std::uint64_t k = 1; k <= n; ++k) {
    u = stepper.step(u, sqrt_dt * stream.gaussian());
    check_energy(u, k, dt, index);
    if (k % stride == 0 || k == n) {
      rec.times.push_back(static_cast<double>(k) * dt);
      rec.values.push_back(obs(u));
    }
  }
  rec.final_amplitude = stepper.forced_amplitude(u);
  return rec;
}

std::vector<double> mean_of(const std::vector<PathRecord>& recs) {
  std::vector<double> m(recs.front().values.size(), 0.0);
  for (const auto& r : recs)
    for (std::size_t j = 0; j < m.size(); ++j) m[j] += r.values[j];
  for (auto& x : m) x /= static_cast<double>(recs.size());
  return m;
}

void check_run(const NseParams& p, const SpectralField& v, std::size_t n_traj,
               std::uint64_t stride) {
  p.validate();
  if (v.truncation() != p.truncation) throw InvalidParameter("initial field truncation mismatch");
  if (n_traj == 0) throw InvalidParameter("n_traj must be at least 1");
  if (stride == 0) throw InvalidParameter("record_stride must be at least 1");
}

}  // namespace

SmallNoiseResult small_noise_convergence(const NseParams& p, const SpectralField& v, double t_end,
                                         double dt, std::size_t n_traj, std::uint64_t seed,
                                         std::uint64_t record_stride) {
  check_run(p, v, n_traj, record_stride);
  if (smallness_indicator(p) > kSmallnessGate)
    throw InvalidParameter("small_noise_convergence: kappa^2/(lambda mu^4) + sigma^2/(2 mu^3) "
                           "exceeds the smallness gate 0.01");
  std::vector<PathRecord> recs(n_traj);
  parallel_for(n_traj, [&](std::size_t i) {
    recs[i] = run_path(p, v, t_end, dt, seed, i, record_stride,
                       [&](const SpectralField& u) { return offmode_energy(p, u); });
  });
  SmallNoiseResult r;
  r.times = recs.front().times;
  r.offmode_energy = mean_of(recs);
  r.initial_offmode = offmode_energy(p, v);
  r.ks_critical = ks_critical(n_traj, 0.01);
  const GaussianLaw1D law = ou_stationary_law(p.ou_rate(), p.kappa, p.sigma);
  if (law.variance > 0.0) {
    std::vector<double> amps;
    for (const auto& rec : recs) amps.push_back(rec.final_amplitude);
    r.ks_forced_mode = ks_distance(EmpiricalMeasure1D(std::move(amps)), law);
  } else {
    r.ks_forced_mode = std::numeric_limits<double>::quiet_NaN();
  }
  return r;
}

double energy_ceiling(const NseParams& p, const SpectralField& v) {
  p.validate();
  const double rho = p.mu * kLambda0;
  const double k = std::abs(p.kappa);
  const double root = (k + std::sqrt(k * k + 2.0 * rho * p.sigma * p.sigma)) / (2.0 * rho);
  return norm_H2(v) + root * root;
}

EnergyPath ensemble_energy_path(const NseParams& p, const SpectralField& v, double t_end,
                                double dt, std::size_t n_traj, std::uint64_t seed,
                                std::uint64_t record_stride) {
  check_run(p, v, n_traj, record_stride);
  std::vector<PathRecord> recs(n_traj);
  parallel_for(n_traj, [&](std::size_t i) {
    recs[i] = run_path(p, v, t_end, dt, seed, i, record_stride,
                       [](const SpectralField& u) { return norm_H2(u); });
  });
  return {recs.front().times, mean_of(recs)};
}

EnergyPath ensemble_energy_path_serial(const NseParams& p, const SpectralField& v, double t_end,
                                       double dt, std::size_t n_traj, std::uint64_t seed,
                                       std::uint64_t record_stride) {
  check_run(p, v, n_traj, record_stride);
  std::vector<PathRecord> recs(n_traj);
  for (std::size_t i = 0; i < n_traj; ++i)
    recs[i] = run_path(p, v, t_end, dt, seed, i, record_stride,
                       [](const SpectralField& u) { return norm_H2(u); });
  return {recs.front().times, mean_of(recs)};
}

// ---------------------------------------------------------------------------
// Identity suite

double IdentityReport::worst() const {
  return std::max({antisymmetry, energy, eigenmode, enstrophy, minea_antisymmetry, minea_energy,
                   minea_axis});
}

IdentityReport identity_suite(int truncation, int instances, std::uint64_t seed,
                              bool inject_fault) {
  if (instances < 1) throw InvalidParameter("identity_suite: instances must be positive");
  IdentityReport r;
  r.instances = instances;
  r.truncation = truncation;
  RngStream stream = make_stream(seed, 0);
  const ModeSet& modes = ModeSet::get(truncation);

  for (int i = 0; i < instances; ++i) {
    const SpectralField u = random_field(truncation, stream);
    const SpectralField v = random_field(truncation, stream);
    const SpectralField w = random_field(truncation, stream);
    const double nu = std::sqrt(norm_V2(u)), nv = std::sqrt(norm_V2(v)),
                 nw = std::sqrt(norm_V2(w));

    const double anti = b_form(u, v, w) + b_form(u, w, v);
    r.antisymmetry = std::max(r.antisymmetry, std::abs(anti) / (nu * nv * nw));

    const SpectralField buv = bilinear_B_spectral(u, v);
    SpectralField v_pair = v;
    if (inject_fault) v_pair += random_field(truncation, stream, 1e-3);
    r.energy = std::max(r.energy, std::abs(inner_H(buv, v_pair)) / (nu * nv * nv));

    const SpectralField av = apply_A(v);
    const double ens = inner_H(bilinear_B_spectral(v, v), av);
    r.enstrophy = std::max(r.enstrophy, std::abs(ens) / (nv * nv * std::sqrt(norm_H2(av))));

    const Wavevector k = modes.half()[static_cast<std::size_t>(i) % modes.half_size()];
    const SpectralField e = stokes_eigenmode(k, truncation);
    r.eigenmode = std::max(r.eigenmode,
                           std::sqrt(norm_H2(bilinear_B_spectral(e, e))) / norm_V2(e));

    const State3 a{stream.gaussian(), stream.gaussian(), stream.gaussian()};
    const State3 b{stream.gaussian(), stream.gaussian(), stream.gaussian()};
    const State3 c{stream.gaussian(), stream.gaussian(), stream.gaussian()};
    const double na = std::sqrt(a.norm2()), nb = std::sqrt(b.norm2()), nc = std::sqrt(c.norm2());
    r.minea_antisymmetry = std::max(
        r.minea_antisymmetry,
        std::abs(minea::b_form(a, b, c) + minea::b_form(a, c, b)) / (na * nb * nc));
    r.minea_energy =
        std::max(r.minea_energy, std::abs(dot(bilinear_B(a, b), b)) / (na * nb * nb));
  }

  const State3 f1{1, 0, 0}, f2{0, 1, 0}, f3{0, 0, 1};
  const State3 minus_f1{-1, 0, 0};
  r.minea_axis = std::sqrt(std::max({bilinear_B(f1, f1).norm2(),
                                     (bilinear_B(f2, f2) - minus_f1).norm2(),
                                     (bilinear_B(f3, f3) - minus_f1).norm2()}));
  return r;
}

}  // namespace minea::nse
