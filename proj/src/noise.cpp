#include "minea/noise.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "minea/errors.hpp"

namespace minea {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

// Doornik's ZIGNOR layout: 128 blocks, base strip at index 0.
struct ZigguratTables {
  static constexpr int kBlocks = 128;
  static constexpr double kR = 3.442619855899;
  static constexpr double kV = 9.91256303526217e-3;

  double x[kBlocks + 1];
  double ratio[kBlocks];

  ZigguratTables() {
    double f = std::exp(-0.5 * kR * kR);
    x[0] = kV / f;
    x[1] = kR;
    x[kBlocks] = 0.0;
    for (int i = 2; i < kBlocks; ++i) {
      x[i] = std::sqrt(-2.0 * std::log(kV / x[i - 1] + f));
      f = std::exp(-0.5 * x[i] * x[i]);
    }
    for (int i = 0; i < kBlocks; ++i) ratio[i] = x[i + 1] / x[i];
  }
};

const ZigguratTables& zig() {
  static const ZigguratTables tables;
  return tables;
}

inline double to_open_unit(std::uint64_t bits) {
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::array<std::uint32_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kPhiloxW0;
      key[1] += kPhiloxW1;
    }
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kPhiloxM0, ctr[0], hi0, lo0);
    mulhilo(kPhiloxM1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
  }
  return ctr;
}

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_index)
    : seed_(seed), index_(stream_index) {}

void RngStream::refill() {
  const std::array<std::uint32_t, 4> ctr{
      static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
      static_cast<std::uint32_t>(index_), static_cast<std::uint32_t>(index_ >> 32)};
  const std::array<std::uint32_t, 2> key{static_cast<std::uint32_t>(seed_),
                                         static_cast<std::uint32_t>(seed_ >> 32)};
  const auto out = philox4x32(ctr, key);
  buffer_[0] = (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
  buffer_[1] = (static_cast<std::uint64_t>(out[3]) << 32) | out[2];
  buffered_ = 2;
  ++block_;
}

std::uint64_t RngStream::next_u64() {
  if (buffered_ == 0) refill();
  ++position_;
  return buffer_[2 - buffered_--];
}

double RngStream::uniform() { return to_open_unit(next_u64()); }

double RngStream::gaussian() {
  const auto& t = zig();
  for (;;) {
    const std::uint64_t bits = next_u64();
    const double u = 2.0 * to_open_unit(bits) - 1.0;
    const int i = static_cast<int>(bits & 0x7F);
    if (std::abs(u) < t.ratio[i]) return u * t.x[i];
    if (i == 0) {
      // Tail beyond R (Marsaglia 1964).
      double xt, yt;
      do {
        xt = std::log(uniform()) / ZigguratTables::kR;
        yt = std::log(uniform());
      } while (-2.0 * yt < xt * xt);
      return u < 0.0 ? xt - ZigguratTables::kR : ZigguratTables::kR - xt;
    }
    const double x = u * t.x[i];
    const double f0 = std::exp(-0.5 * (t.x[i] * t.x[i] - x * x));
    const double f1 = std::exp(-0.5 * (t.x[i + 1] * t.x[i + 1] - x * x));
    if (f1 + uniform() * (f0 - f1) < 1.0) return x;
  }
}

BrownianIncrements brownian_increments(RngStream& stream, double dt, std::size_t n) {
  if (!(dt > 0.0)) throw InvalidParameter("brownian_increments: dt must be positive");
  if (n == 0) throw InvalidParameter("brownian_increments: n must be at least 1");
  BrownianIncrements out;
  out.dt = dt;
  out.increments.resize(n);
  const double scale = std::sqrt(dt);
  for (auto& dw : out.increments) dw = scale * stream.gaussian();
  return out;
}

GaussianLaw1D::GaussianLaw1D(double m, double v) : mean(m), variance(v) {
  if (!(v >= 0.0) || !std::isfinite(v) || !std::isfinite(m))
    throw InvalidParameter("GaussianLaw1D: variance must be finite and non-negative");
}

double GaussianLaw1D::stddev() const { return std::sqrt(variance); }

double GaussianLaw1D::cdf(double x) const {
  if (variance == 0.0) return x < mean ? 0.0 : 1.0;
  return standard_normal_cdf((x - mean) / stddev());
}

double standard_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

OuTransition::OuTransition(double h, double lambda, double kappa, double sigma) {
  if (!(h > 0.0)) throw InvalidParameter("ou_step: h must be positive");
  if (!(lambda > 0.0)) throw InvalidParameter("ou_step: lambda1 must be positive");
  decay_ = std::exp(-lambda * h);
  shift_ = (kappa / lambda) * (1.0 - decay_);
  // -expm1(-2 lambda h) keeps full precision for small lambda h.
  noise_scale_ = sigma * std::sqrt(-std::expm1(-2.0 * lambda * h) / (2.0 * lambda));
}

double ou_step(double z, double h, double lambda1, double kappa, double sigma, double gauss) {
  return OuTransition(h, lambda1, kappa, sigma).apply(z, gauss);
}

GaussianLaw1D ou_stationary_law(double lambda1, double kappa, double sigma) {
  if (!(lambda1 > 0.0)) throw InvalidParameter("ou_stationary_law: lambda1 must be positive");
  return {kappa / lambda1, sigma * sigma / (2.0 * lambda1)};
}

double abs_moment(const GaussianLaw1D& law) {
  if (!(law.variance >= 0.0)) throw InvalidParameter("abs_moment: negative variance");
  const double m = law.mean;
  if (law.variance == 0.0) return std::abs(m);
  const double s = law.stddev();
  return s * std::sqrt(2.0 / std::numbers::pi) * std::exp(-m * m / (2.0 * s * s)) +
         m * (1.0 - 2.0 * standard_normal_cdf(-m / s));
}

}  // namespace minea
