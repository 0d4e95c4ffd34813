#include "minea/minea_core.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "minea/errors.hpp"

namespace minea {

void MineaParams::validate() const {
  if (!(lambda1 > 0.0) || !(lambda2 > 0.0) || !(lambda3 > 0.0))
    throw InvalidParameter("MineaParams: lambda1, lambda2, lambda3 must be positive");
  if (!(sigma >= 0.0)) throw InvalidParameter("MineaParams: sigma must be non-negative");
  if (!std::isfinite(kappa) || !std::isfinite(sigma) || !std::isfinite(lambda1) ||
      !std::isfinite(lambda2) || !std::isfinite(lambda3))
    throw InvalidParameter("MineaParams: parameters must be finite");
}

double MineaParams::min_lambda() const { return std::min({lambda1, lambda2, lambda3}); }

double MineaParams::threshold() const { return lambda1 * std::min(lambda2, lambda3); }

bool State3::finite() const noexcept {
  return std::isfinite(u1) && std::isfinite(u2) && std::isfinite(u3);
}

State3 operator+(const State3& a, const State3& b) {
  return {a.u1 + b.u1, a.u2 + b.u2, a.u3 + b.u3};
}
State3 operator-(const State3& a, const State3& b) {
  return {a.u1 - b.u1, a.u2 - b.u2, a.u3 - b.u3};
}
State3 operator*(double s, const State3& a) { return {s * a.u1, s * a.u2, s * a.u3}; }
double dot(const State3& a, const State3& b) { return a.u1 * b.u1 + a.u2 * b.u2 + a.u3 * b.u3; }

std::string_view to_string(Scheme s) { return s == Scheme::exp ? "exp" : "em"; }

Scheme parse_scheme(std::string_view name) {
  if (name == "exp") return Scheme::exp;
  if (name == "em") return Scheme::em;
  throw InvalidParameter("unknown scheme '" + std::string(name) + "' (expected em or exp)");
}

namespace {

inline State3 drift_unchecked(const MineaParams& p, const State3& u) {
  return {-p.lambda1 * u.u1 - (u.u2 * u.u2 + u.u3 * u.u3) + p.kappa,
          -p.lambda2 * u.u2 + u.u1 * u.u2, -p.lambda3 * u.u3 + u.u1 * u.u3};
}

constexpr double kBlowUpNorm2 = kBlowUpNorm * kBlowUpNorm;

}  // namespace

State3 drift(const MineaParams& p, const State3& u) {
  if (!u.finite()) throw InvalidState("drift: state has non-finite coordinates");
  return drift_unchecked(p, u);
}

double b_form(const State3& u, const State3& v, const State3& w) {
  return -(u.u2 * v.u2 + u.u3 * v.u3) * w.u1 + u.u2 * v.u1 * w.u2 + u.u3 * v.u1 * w.u3;
}

State3 bilinear_B(const State3& u, const State3& v) {
  return {-u.u2 * v.u2 - u.u3 * v.u3, u.u2 * v.u1, u.u3 * v.u1};
}

MineaStepper::MineaStepper(const MineaParams& p, double dt)
    : p_(p),
      dt_(dt),
      sqrt_dt_(std::sqrt(dt)),
      ou_((p.validate(), dt), p.lambda1, p.kappa, p.sigma),
      sink_weight_(-std::expm1(-p.lambda1 * dt) / p.lambda1) {}

State3 MineaStepper::step_em(const State3& u, double dW) const {
  const State3 f = drift_unchecked(p_, u);
  return {u.u1 + f.u1 * dt_ + p_.sigma * dW, u.u2 + f.u2 * dt_, u.u3 + f.u3 * dt_};
}

State3 MineaStepper::step_exp(const State3& u, double gauss) const {
  const double x = u.X();
  const double u1 = ou_.apply(u.u1, gauss) - x * sink_weight_;
  const double mean_u1 = 0.5 * (u.u1 + u1);
  // Zero coordinates stay exactly zero (and avoid 0 * inf when the factor overflows).
  const double u2 = u.u2 == 0.0 ? u.u2 : u.u2 * std::exp((mean_u1 - p_.lambda2) * dt_);
  const double u3 = u.u3 == 0.0 ? u.u3 : u.u3 * std::exp((mean_u1 - p_.lambda3) * dt_);
  return {u1, u2, u3};
}

void check_blowup(const State3& u, std::uint64_t step, double time, std::uint64_t trajectory) {
  const double n2 = u.norm2();
  if (!(n2 <= kBlowUpNorm2)) throw BlowUp(step, time, trajectory);
}

State3 step_em(const MineaParams& p, const State3& u, double dt, double dW,
               std::uint64_t step_index) {
  if (!(dt > 0.0)) throw InvalidParameter("step_em: dt must be positive");
  if (!u.finite()) throw InvalidState("step_em: state has non-finite coordinates");
  const State3 next = MineaStepper(p, dt).step_em(u, dW);
  check_blowup(next, step_index, static_cast<double>(step_index) * dt, 0);
  return next;
}

State3 step_exp(const MineaParams& p, const State3& u, double dt, double gauss,
                std::uint64_t step_index) {
  if (!(dt > 0.0)) throw InvalidParameter("step_exp: dt must be positive");
  if (!u.finite()) throw InvalidState("step_exp: state has non-finite coordinates");
  const State3 next = MineaStepper(p, dt).step_exp(u, gauss);
  check_blowup(next, step_index, static_cast<double>(step_index) * dt, 0);
  return next;
}

std::uint64_t step_count(double t_end, double dt) {
  if (!(t_end > 0.0) || !(dt > 0.0) || dt > t_end)
    throw InvalidParameter("simulate: need t_end > 0 and 0 < dt <= t_end");
  const double n = std::round(t_end / dt);
  return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(n));
}

namespace {

void check_initial(const State3& v) {
  if (!v.finite()) throw InvalidState("simulate: initial state has non-finite coordinates");
}

}  // namespace

Trajectory simulate(const MineaParams& p, const State3& v, double t_end, double dt, Scheme scheme,
                    RngStream& stream, std::uint64_t record_stride) {
  p.validate();
  check_initial(v);
  if (record_stride == 0) throw InvalidParameter("simulate: record_stride must be at least 1");
  const std::uint64_t n = step_count(t_end, dt);
  const MineaStepper stepper(p, dt);

  Trajectory traj;
  traj.params = p;
  traj.scheme = scheme;
  traj.dt = dt;
  traj.seed = stream.seed();
  traj.stream_index = stream.stream_index();
  traj.times.reserve(n / record_stride + 2);
  traj.states.reserve(n / record_stride + 2);
  traj.times.push_back(0.0);
  traj.states.push_back(v);

  State3 u = v;
  for (std::uint64_t k = 1; k <= n; ++k) {
    u = stepper.step(scheme, u, stream.gaussian());
    const double t = static_cast<double>(k) * dt;
    check_blowup(u, k, t, stream.stream_index());
    if (k % record_stride == 0 || k == n) {
      traj.times.push_back(t);
      traj.states.push_back(u);
    }
  }
  return traj;
}

State3 propagate(const MineaParams& p, const State3& v, double t_end, double dt, Scheme scheme,
                 RngStream& stream) {
  p.validate();
  check_initial(v);
  const std::uint64_t n = step_count(t_end, dt);
  const MineaStepper stepper(p, dt);
  State3 u = v;
  for (std::uint64_t k = 1; k <= n; ++k) {
    u = stepper.step(scheme, u, stream.gaussian());
    check_blowup(u, k, static_cast<double>(k) * dt, stream.stream_index());
  }
  return u;
}

std::string_view to_string(BranchKind k) {
  switch (k) {
    case BranchKind::origin: return "origin";
    case BranchKind::circle: return "circle";
    case BranchKind::isolated: return "isolated";
  }
  return "?";
}

StationarySet stationary_points(const MineaParams& p) {
  p.validate();
  StationarySet set;

  StationaryBranch origin;
  origin.kind = BranchKind::origin;
  origin.u1 = p.kappa / p.lambda1;
  origin.witnesses.push_back({origin.u1, 0.0, 0.0});
  set.branches.push_back(origin);

  // u2 != 0 forces u1 = l2 and then u2^2 + u3^2 = kappa - l1 l2 > 0; likewise for u3.
  if (p.lambda2 == p.lambda3) {
    const double r2 = p.kappa - p.lambda1 * p.lambda2;
    if (r2 > 0.0) {
      StationaryBranch circle;
      circle.kind = BranchKind::circle;
      circle.u1 = p.lambda2;
      circle.radius_sq = r2;
      const double r = std::sqrt(r2);
      for (int i = 0; i < 8; ++i) {
        const double theta = 2.0 * std::numbers::pi * i / 8.0;
        circle.witnesses.push_back({p.lambda2, r * std::cos(theta), r * std::sin(theta)});
      }
      set.branches.push_back(circle);
    }
    return set;
  }

  for (int axis : {2, 3}) {
    const double lam = axis == 2 ? p.lambda2 : p.lambda3;
    const double r2 = p.kappa - p.lambda1 * lam;
    if (!(r2 > 0.0)) continue;
    StationaryBranch b;
    b.kind = BranchKind::isolated;
    b.axis = axis;
    b.u1 = lam;
    b.radius_sq = r2;
    const double r = std::sqrt(r2);
    for (double s : {r, -r}) {
      b.witnesses.push_back(axis == 2 ? State3{lam, s, 0.0} : State3{lam, 0.0, s});
    }
    set.branches.push_back(b);
  }
  return set;
}

std::string_view to_string(Regime r) {
  switch (r) {
    case Regime::subcritical: return "subcritical";
    case Regime::boundary: return "boundary";
    case Regime::supercritical: return "supercritical";
  }
  return "?";
}

RegimeClassification uniqueness_regime(const MineaParams& p) {
  p.validate();
  RegimeClassification rc;
  rc.threshold = p.threshold();
  const double gap = p.kappa - rc.threshold;
  if (std::abs(gap) <= kBoundaryRelTol * std::max(1.0, std::abs(rc.threshold)))
    rc.regime = Regime::boundary;
  else
    rc.regime = gap < 0.0 ? Regime::subcritical : Regime::supercritical;
  rc.e56_lhs = 2.0 * abs_moment(ou_stationary_law(p.lambda1, p.kappa, p.sigma));
  rc.e56_rhs = p.min_lambda();
  rc.e56_satisfied = rc.e56_lhs < rc.e56_rhs;
  return rc;
}

ProductInvariantLaw gaussian_invariant(const MineaParams& p) {
  if (!(p.lambda1 > 0.0)) throw InvalidParameter("gaussian_invariant: lambda1 must be positive");
  return {ou_stationary_law(p.lambda1, p.kappa, p.sigma)};
}

double lyapunov_ceiling(const MineaParams& p, const State3& v) {
  p.validate();
  const double rho = p.min_lambda();
  const double k = std::abs(p.kappa);
  const double root = (k + std::sqrt(k * k + 2.0 * rho * p.sigma * p.sigma)) / (2.0 * rho);
  return v.norm2() + root * root;
}

}  // namespace minea
