#pragma once

// Galerkin truncation of the 2D stochastic Navier-Stokes equations on the
// torus [0, 2 pi)^2, forced and driven along a single Stokes eigenmode e:
//
//   du = (-mu A u - B(u,u) + kappa e) dt + sigma e dW.
//
// Representation. A divergence-free, mean-zero, real field is
//
//   u(x) = sum_k c_k b_k exp(i k.x),   b_k = i k_perp / |k|,  k_perp = (-k2, k1),
//
// over wavevectors 0 < max(|k1|, |k2|) <= N. Reality is c_{-k} = conj(c_k),
// so only the half-space (k2 > 0, or k2 == 0 and k1 > 0) is stored. The
// H inner product is (2 pi)^{-2} \int u.w dx = sum_k c_k conj(d_k), so a
// single-mode field of unit amplitude has unit H-norm and |u|_V^2 = sum |k|^2 |c_k|^2.
//
// The Galerkin-projected advection term has real triad coefficients:
//
//   B(u,v)_k = sum_{p+q=k} -(p x q)(q.k) / (|p||q||k|) c_p d_q.

#include <array>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "minea/noise.hpp"

namespace minea::nse {

using Complex = std::complex<double>;

struct Wavevector {
  int k1 = 0;
  int k2 = 0;

  int norm2() const noexcept { return k1 * k1 + k2 * k2; }
  int sup_norm() const noexcept;
  bool zero() const noexcept { return k1 == 0 && k2 == 0; }
  bool upper_half() const noexcept { return k2 > 0 || (k2 == 0 && k1 > 0); }
  Wavevector operator-() const noexcept { return {-k1, -k2}; }
  friend bool operator==(const Wavevector&, const Wavevector&) = default;
};

/// Wavevector bookkeeping and triad table for truncation N. Built once per N.
class ModeSet {
 public:
  static const ModeSet& get(int truncation);

  int truncation() const noexcept { return n_; }
  std::size_t half_size() const noexcept { return half_.size(); }
  const std::vector<Wavevector>& half() const noexcept { return half_; }
  /// Index in the half-space store, or -1 if k is outside the truncation or zero.
  /// `conjugate` is set when k lies in the lower half.
  long locate(Wavevector k, bool& conjugate) const;

  struct Triad {
    std::uint32_t p;  // full index: [0, H) upper half, [H, 2H) their negatives
    std::uint32_t q;
    double coef;
  };
  /// Triads feeding half-space output k live in [offsets[k], offsets[k+1]).
  const std::vector<Triad>& triads() const noexcept { return triads_; }
  const std::vector<std::size_t>& triad_offsets() const noexcept { return offsets_; }

 private:
  explicit ModeSet(int truncation);

  int n_;
  std::vector<Wavevector> half_;
  std::vector<long> lookup_;  // (2N+1)^2 grid -> full index or -1
  std::vector<Triad> triads_;
  std::vector<std::size_t> offsets_;
};

class SpectralField {
 public:
  explicit SpectralField(int truncation);

  int truncation() const noexcept { return modes_->truncation(); }
  const ModeSet& modes() const noexcept { return *modes_; }

  /// Coefficient c_k for any k in the truncation (conjugate synthesized for the lower half).
  Complex coeff(Wavevector k) const;
  /// Sets c_k (and therefore c_{-k} = conj(c_k)).
  void set(Wavevector k, Complex c);

  std::span<Complex> half() noexcept { return c_; }
  std::span<const Complex> half() const noexcept { return c_; }

  /// Velocity at a point of the torus.
  std::array<double, 2> velocity(double x, double y) const;

  SpectralField& operator+=(const SpectralField& o);
  SpectralField& operator*=(double s);
  friend SpectralField operator+(SpectralField a, const SpectralField& b) { return a += b; }
  friend SpectralField operator*(double s, SpectralField a) { return a *= s; }

 private:
  const ModeSet* modes_;
  std::vector<Complex> c_;
};

double inner_H(const SpectralField& u, const SpectralField& w);
double norm_H2(const SpectralField& u);
/// |u|_V^2 = <Au, u>.
double norm_V2(const SpectralField& u);

SpectralField apply_A(const SpectralField& u);

/// Unit-H-norm eigenvector sqrt(2) (k_perp/|k|) cos(k.x); eigenvalue |k|^2.
SpectralField stokes_eigenmode(Wavevector k, int truncation);

/// Galerkin projection of (u.grad) v; parallel over output modes.
SpectralField bilinear_B_spectral(const SpectralField& u, const SpectralField& v);
/// Single-threaded reference for bilinear_B_spectral (bitwise equal results).
SpectralField bilinear_B_spectral_serial(const SpectralField& u, const SpectralField& v);

/// b(u,v,w) = (B(u,v), w).
double b_form(const SpectralField& u, const SpectralField& v, const SpectralField& w);

/// Random field with Gaussian coefficients, scaled to the requested H-norm.
SpectralField random_field(int truncation, RngStream& stream, double h_norm = 1.0);

struct NseParams {
  double mu = 1.0;
  Wavevector forced_mode{1, 0};
  double kappa = 0.0;
  double sigma = 0.0;
  int truncation = 8;

  void validate() const;
  /// lambda = |k0|^2.
  double forced_eigenvalue() const { return forced_mode.norm2(); }
  /// Decay rate of the forced amplitude, mu * lambda.
  double ou_rate() const { return mu * forced_eigenvalue(); }
};

/// Smallest Stokes eigenvalue on the standard torus.
inline constexpr double kLambda0 = 1.0;
inline constexpr double kBlowUpNormH = 1e8;

/// Exponential Euler: exact integrating factor on -mu A, explicit B and
/// forcing weighted by (1 - e^{-L dt})/L, noise added before the decay.
class NseStepper {
 public:
  NseStepper(const NseParams& p, double dt);

  SpectralField step(const SpectralField& u, double dW) const;
  /// (u, e) for the forced eigenmode e.
  double forced_amplitude(const SpectralField& u) const;

 private:
  NseParams p_;
  double dt_;
  std::vector<double> decay_;
  std::vector<double> weight_;
  std::size_t forced_index_;
  Complex forced_coeff_;  // stored coefficient of e at forced_index_
};

SpectralField step_nse(const NseParams& p, const SpectralField& u, double dt, double dW);

double forced_amplitude(const NseParams& p, const SpectralField& u);
/// |u|_H^2 minus the energy of the forced eigenmode component.
double offmode_energy(const NseParams& p, const SpectralField& u);

struct ConsistencyResult {
  double max_deviation = 0.0;       // max_t |(u, e) - z_OU|
  double max_offmode_energy = 0.0;  // max_t energy outside span(e)
};

/// Runs u from a e and the exact OU amplitude on the same Gaussian draws.
ConsistencyResult eigenmode_consistency(const NseParams& p, double a, double t_end, double dt,
                                        RngStream& stream);

/// kappa^2/(lambda mu^4) + sigma^2/(2 mu^3); small_noise_convergence requires <= 0.01.
double smallness_indicator(const NseParams& p);
inline constexpr double kSmallnessGate = 0.01;

struct SmallNoiseResult {
  std::vector<double> times;
  std::vector<double> offmode_energy;  // ensemble mean
  double initial_offmode = 0.0;
  double ks_forced_mode = 0.0;  // NaN when sigma == 0
  double ks_critical = 0.0;     // 1% level for n_traj samples
};

SmallNoiseResult small_noise_convergence(const NseParams& p, const SpectralField& v, double t_end,
                                         double dt, std::size_t n_traj, std::uint64_t seed,
                                         std::uint64_t record_stride = 100);

/// Ceiling on E|u(t)|_H^2 from the Ito energy inequality:
/// |v|^2 + m*, m* = ((|kappa| + sqrt(kappa^2 + 2 mu lambda0 sigma^2)) / (2 mu lambda0))^2.
double energy_ceiling(const NseParams& p, const SpectralField& v);

struct EnergyPath {
  std::vector<double> times;
  std::vector<double> mean_energy;  // ensemble mean of |u|_H^2
};

EnergyPath ensemble_energy_path(const NseParams& p, const SpectralField& v, double t_end,
                                double dt, std::size_t n_traj, std::uint64_t seed,
                                std::uint64_t record_stride);
EnergyPath ensemble_energy_path_serial(const NseParams& p, const SpectralField& v, double t_end,
                                       double dt, std::size_t n_traj, std::uint64_t seed,
                                       std::uint64_t record_stride);

/// Maximum relative residuals of the bilinear identities over random instances.
struct IdentityReport {
  int instances = 0;
  int truncation = 0;
  double antisymmetry = 0.0;  // b(u,v,w) + b(u,w,v)
  double energy = 0.0;        // (B(u,v), v)
  double eigenmode = 0.0;     // B(e,e)
  double enstrophy = 0.0;     // (B(v,v), Av)
  double minea_antisymmetry = 0.0;
  double minea_energy = 0.0;
  double minea_axis = 0.0;  // B(f1,f1) = 0, B(f2,f2) = B(f3,f3) = -f1

  double worst() const;
};

/// With inject_fault, v is perturbed between forming B(u,v) and pairing it
/// with v, which must make the energy identity fail.
IdentityReport identity_suite(int truncation, int instances, std::uint64_t seed,
                              bool inject_fault = false);

}  // namespace minea::nse
