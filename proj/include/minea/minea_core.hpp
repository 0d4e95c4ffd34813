#pragma once

// The three-dimensional Minea system
//
//   du1 = (-l1 u1 - (u2^2 + u3^2) + kappa) dt + sigma dW
//   du2 = (-l2 u2 + u1 u2) dt
//   du3 = (-l3 u3 + u1 u3) dt
//
// written as du = (Au + B(u,u) + kappa f1) dt + sigma f1 dW.

#include <cstdint>
#include <string_view>
#include <vector>

#include "minea/noise.hpp"

namespace minea {

struct MineaParams {
  double lambda1 = 1.0;
  double lambda2 = 1.0;
  double lambda3 = 1.0;
  double kappa = 0.0;
  double sigma = 0.0;

  /// Throws InvalidParameter unless all lambdas are positive and sigma >= 0.
  void validate() const;
  double min_lambda() const;
  /// lambda1 * min(lambda2, lambda3).
  double threshold() const;
};

struct State3 {
  double u1 = 0.0;
  double u2 = 0.0;
  double u3 = 0.0;

  /// X = u2^2 + u3^2, the energy held outside the forced direction.
  double X() const noexcept { return u2 * u2 + u3 * u3; }
  double norm2() const noexcept { return u1 * u1 + u2 * u2 + u3 * u3; }
  bool finite() const noexcept;

  friend bool operator==(const State3&, const State3&) = default;
};

State3 operator+(const State3& a, const State3& b);
State3 operator-(const State3& a, const State3& b);
State3 operator*(double s, const State3& a);
double dot(const State3& a, const State3& b);

enum class Scheme { em, exp };

std::string_view to_string(Scheme s);
Scheme parse_scheme(std::string_view name);

struct Trajectory {
  std::vector<double> times;
  std::vector<State3> states;
  MineaParams params;
  Scheme scheme = Scheme::exp;
  double dt = 0.0;
  std::uint64_t seed = 0;
  std::uint64_t stream_index = 0;
};

/// Norm cap: |u| above this is reported as blow-up.
inline constexpr double kBlowUpNorm = 1e8;

State3 drift(const MineaParams& p, const State3& u);

/// b(u,v,w) = -(u2 v2 + u3 v3) w1 + u2 v1 w2 + u3 v1 w3.
double b_form(const State3& u, const State3& v, const State3& w);
/// The vector B(u,v) with <B(u,v), w> = b(u,v,w).
State3 bilinear_B(const State3& u, const State3& v);

/// Precomputed one-step maps for a fixed (params, dt).
class MineaStepper {
 public:
  MineaStepper(const MineaParams& p, double dt);

  /// Euler-Maruyama with Brownian increment dW.
  State3 step_em(const State3& u, double dW) const;
  /// Splitting step: exact OU transition for u1 with the quadratic sink frozen,
  /// exact exponential factors for u2, u3 with a trapezoidal average of u1.
  State3 step_exp(const State3& u, double gauss) const;

  State3 step(Scheme s, const State3& u, double gauss) const {
    return s == Scheme::exp ? step_exp(u, gauss) : step_em(u, sqrt_dt_ * gauss);
  }

  double dt() const noexcept { return dt_; }

 private:
  MineaParams p_;
  double dt_;
  double sqrt_dt_;
  OuTransition ou_;
  double sink_weight_;  // (1 - e^{-l1 dt}) / l1
};

/// Throw BlowUp if the state is non-finite or beyond the norm cap.
void check_blowup(const State3& u, std::uint64_t step, double time, std::uint64_t trajectory);

State3 step_em(const MineaParams& p, const State3& u, double dt, double dW,
               std::uint64_t step_index = 0);
State3 step_exp(const MineaParams& p, const State3& u, double dt, double gauss,
                std::uint64_t step_index = 0);

/// Number of steps used for a horizon t_end at step dt (final time within dt of t_end).
std::uint64_t step_count(double t_end, double dt);

Trajectory simulate(const MineaParams& p, const State3& v, double t_end, double dt, Scheme scheme,
                    RngStream& stream, std::uint64_t record_stride);

/// Same stepping as simulate without recording; returns the state at the final step.
State3 propagate(const MineaParams& p, const State3& v, double t_end, double dt, Scheme scheme,
                 RngStream& stream);

// ---------------------------------------------------------------------------
// Deterministic stationary points.

enum class BranchKind { origin, circle, isolated };

std::string_view to_string(BranchKind k);

struct StationaryBranch {
  BranchKind kind = BranchKind::origin;
  /// Nonzero coordinate for isolated branches (2 or 3); 0 otherwise.
  int axis = 0;
  double u1 = 0.0;
  /// Value of u2^2 + u3^2 on the branch.
  double radius_sq = 0.0;
  /// Concrete points: the origin point, both signs for an isolated branch,
  /// or 8 equally spaced points on the circle.
  std::vector<State3> witnesses;
};

struct StationarySet {
  std::vector<StationaryBranch> branches;
};

StationarySet stationary_points(const MineaParams& p);

// ---------------------------------------------------------------------------
// Regime classification.

enum class Regime { subcritical, boundary, supercritical };

std::string_view to_string(Regime r);

struct RegimeClassification {
  double threshold = 0.0;
  Regime regime = Regime::subcritical;
  bool e56_satisfied = false;
  double e56_lhs = 0.0;  // 2 E|Z|, Z ~ N(kappa/l1, sigma^2/(2 l1))
  double e56_rhs = 0.0;  // min(l1, l2, l3)
};

/// Relative tolerance for labelling kappa == threshold as boundary.
inline constexpr double kBoundaryRelTol = 1e-12;

RegimeClassification uniqueness_regime(const MineaParams& p);

struct ProductInvariantLaw {
  GaussianLaw1D first;  // second and third marginals are point masses at 0
};

ProductInvariantLaw gaussian_invariant(const MineaParams& p);

/// sup_t E|u(t)|^2 ceiling from the Ito energy identity:
/// d E|u|^2 <= (-2 rho m + 2|kappa| sqrt(m) + sigma^2) dt, rho = min lambda,
/// which bounds m(t) by |v|^2 + m*, m* the positive root of the right side.
double lyapunov_ceiling(const MineaParams& p, const State3& v);

}  // namespace minea
