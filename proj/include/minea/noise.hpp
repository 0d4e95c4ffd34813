#pragma once

// Reproducible random streams, Brownian increments and the exact
// Ornstein-Uhlenbeck transition.
//
// Streams are counter-based (Philox4x32-10): the output at position n of the
// stream (seed, index) is a pure function of (seed, index, n), so an ensemble
// produces the same numbers under any parallel schedule.

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace minea {

/// Philox4x32-10 block function (Salmon et al., Random123).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_index);

  std::uint64_t next_u64();
  /// Uniform on the open interval (0, 1), 53-bit resolution.
  double uniform();
  /// Standard normal draw (Marsaglia-Tsang ziggurat, 128 layers).
  double gaussian();

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_index() const noexcept { return index_; }
  /// Number of 64-bit words consumed so far.
  std::uint64_t position() const noexcept { return position_; }

 private:
  void refill();

  std::uint64_t seed_;
  std::uint64_t index_;
  std::uint64_t block_ = 0;
  std::uint64_t position_ = 0;
  std::array<std::uint64_t, 2> buffer_{};
  int buffered_ = 0;
};

inline RngStream make_stream(std::uint64_t seed, std::uint64_t traj_index) {
  return RngStream(seed, traj_index);
}

struct BrownianIncrements {
  double dt = 0.0;
  std::vector<double> increments;
};

/// n independent N(0, dt) draws.
BrownianIncrements brownian_increments(RngStream& stream, double dt, std::size_t n);

struct GaussianLaw1D {
  double mean = 0.0;
  double variance = 0.0;

  GaussianLaw1D() = default;
  GaussianLaw1D(double mean, double variance);

  double stddev() const;
  double cdf(double x) const;
  bool degenerate() const noexcept { return variance == 0.0; }
};

/// Standard normal CDF, Phi(x) = erfc(-x/sqrt 2)/2.
double standard_normal_cdf(double x);

/// One step of dz = (kappa - lambda z) dt + sigma dW with precomputed
/// coefficients. The transition is exact for any step size h.
class OuTransition {
 public:
  OuTransition(double h, double lambda, double kappa, double sigma);

  double apply(double z, double gauss) const noexcept {
    return decay_ * z + shift_ + noise_scale_ * gauss;
  }

  double decay() const noexcept { return decay_; }
  double noise_scale() const noexcept { return noise_scale_; }

 private:
  double decay_;
  double shift_;
  double noise_scale_;
};

double ou_step(double z, double h, double lambda1, double kappa, double sigma, double gauss);

/// N(kappa/lambda1, sigma^2 / (2 lambda1)).
GaussianLaw1D ou_stationary_law(double lambda1, double kappa, double sigma);

/// E|Z| for Z ~ law (folded-normal mean).
double abs_moment(const GaussianLaw1D& law);

}  // namespace minea
