#include "sbridge/datasets.hpp"

#include "sbridge/random.hpp"

#include <boost/numeric/odeint.hpp>

#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

namespace sbridge {

namespace odeint = boost::numeric::odeint;

namespace {

void require_count(std::size_t m) {
  if (m == 0) throw InvalidArgument("sample count must be >= 1");
}

bool all_finite(const double* x, std::size_t n) {
  for (std::size_t k = 0; k < n; ++k)
    if (!std::isfinite(x[k])) return false;
  return true;
}

// Steps a dense-output Dormand-Prince stepper from t0 and hands the
// interpolated state at t_first + k dt to `observe(k, state)`.
template <typename State, typename System, typename Observe>
void integrate_sampled(System&& system, State x, double t0, double t_first, double dt,
                       std::size_t n_out, double dt0, const OdeTolerances& tol, Observe&& observe) {
  if (!(tol.rel > 0.0) || !(tol.abs > 0.0)) throw InvalidArgument("ODE tolerances must be positive");
  auto stepper = odeint::make_dense_output(tol.abs, tol.rel, odeint::runge_kutta_dopri5<State>());
  stepper.initialize(x, t0, dt0);
  State out = x;
  bool stepped = false;
  for (std::size_t k = 0; k < n_out; ++k) {
    const double target = t_first + static_cast<double>(k) * dt;
    while (stepper.current_time() < target) {
      const double t = stepper.current_time();
      try {
        stepper.do_step(system);
      } catch (const odeint::odeint_error&) {
        throw ConvergenceError("ODE step size underflow at t = " + std::to_string(t), t, 0);
      }
      stepped = true;
      const double h = stepper.current_time_step();
      if (h < 16.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t)))
        throw ConvergenceError("ODE step size underflow at t = " + std::to_string(t), t, 0);
      if (!all_finite(stepper.current_state().data(), stepper.current_state().size()))
        throw ConvergenceError("ODE state became non-finite at t = " + std::to_string(t), t, 0);
    }
    if (!stepped)
      out = stepper.current_state();
    else
      stepper.calc_state(target, out);
    observe(k, out);
  }
}

double lorenz_x(const double* y) { return 10.0 * (y[1] - y[0]); }
double lorenz_y(const double* y) { return 28.0 * y[0] - y[1] - y[0] * y[2]; }
double lorenz_z(const double* y) { return -8.0 / 3.0 * y[2] + y[0] * y[1]; }

}  // namespace

TrainingSet singular_gaussian_2d(std::size_t m, double nu, std::uint64_t seed) {
  require_count(m);
  if (!(nu >= 0.0)) throw InvalidArgument("nu must be >= 0");
  Rng rng(seed);
  Matrix data(2, static_cast<Eigen::Index>(m));
  const double s1 = std::sqrt(1.0 + nu);
  const double s2 = std::sqrt(nu);
  for (Eigen::Index i = 0; i < data.cols(); ++i) {
    data(0, i) = s1 * rng.normal();
    data(1, i) = s2 * rng.normal();
  }
  return TrainingSet(std::move(data));
}

TrainingSet gaussian_ring(std::size_t m, double sigma_r, double sigma_theta, std::uint64_t seed) {
  require_count(m);
  if (!(sigma_r >= 0.0) || !(sigma_theta >= 0.0)) throw InvalidArgument("ring widths must be >= 0");
  Rng rng(seed);
  Matrix data(2, static_cast<Eigen::Index>(m));
  for (Eigen::Index i = 0; i < data.cols(); ++i) {
    const double r = 1.0 + sigma_r * rng.normal();
    const double theta = std::numbers::pi / 4.0 + sigma_theta * rng.normal();
    data(0, i) = r * std::cos(theta);
    data(1, i) = r * std::sin(theta);
  }
  return TrainingSet(std::move(data));
}

TrainingSet hyper_semisphere(std::size_t m, std::size_t d, double alpha, double radial_noise,
                             std::uint64_t seed, bool full_sphere) {
  require_count(m);
  if (d < 2) throw InvalidArgument("semisphere dimension must be >= 2");
  if (!(alpha > 0.0)) throw InvalidArgument("alpha must be positive");
  if (!(radial_noise >= 0.0)) throw InvalidArgument("radial noise must be >= 0");
  Rng rng(seed);
  const auto dd = static_cast<Eigen::Index>(d);
  Matrix data(dd, static_cast<Eigen::Index>(m));
  for (Eigen::Index i = 0; i < data.cols(); ++i) {
    Vector y = rng.normal_vector(d);
    y[dd - 1] *= alpha;
    double norm = y.norm();
    while (norm == 0.0) {
      y = rng.normal_vector(d);
      y[dd - 1] *= alpha;
      norm = y.norm();
    }
    y /= norm;
    if (!full_sphere) y[dd - 1] = std::abs(y[dd - 1]);
    data.col(i) = (1.0 + radial_noise * rng.uniform()) * y;
  }
  return TrainingSet(std::move(data));
}

Matrix integrate_ode(const OdeSystem& sys, const Vector& state0, double t_end, double dt_out,
                     const OdeTolerances& tol) {
  if (!sys.rhs) throw InvalidArgument("ODE system has no right-hand side");
  if (static_cast<std::size_t>(state0.size()) != sys.dim)
    throw InvalidArgument("initial state has dimension " + std::to_string(state0.size()) +
                          ", expected " + std::to_string(sys.dim));
  if (!(dt_out > 0.0)) throw InvalidArgument("output interval must be positive");
  if (!(t_end >= 0.0)) throw InvalidArgument("end time must be >= 0");
  if (!(sys.stiffness_scale > 0.0)) throw InvalidArgument("stiffness scale must be positive");
  if (!state0.allFinite()) throw InvalidArgument("initial state is not finite");

  const auto n_out = static_cast<std::size_t>(std::floor(t_end / dt_out * (1.0 + 1e-12))) + 1;
  Matrix out(static_cast<Eigen::Index>(sys.dim), static_cast<Eigen::Index>(n_out));
  std::vector<double> x(state0.data(), state0.data() + state0.size());
  auto system = [&sys](const std::vector<double>& s, std::vector<double>& ds, double t) {
    sys.rhs(t, s.data(), ds.data());
  };
  integrate_sampled(system, x, 0.0, 0.0, dt_out, n_out, 1e-3 * sys.stiffness_scale, tol,
                    [&](std::size_t k, const std::vector<double>& s) {
                      out.col(static_cast<Eigen::Index>(k)) =
                          Eigen::Map<const Vector>(s.data(), static_cast<Eigen::Index>(s.size()));
                    });
  return out;
}

OdeSystem lorenz63_system(double scale) {
  if (!(scale > 0.0)) throw InvalidArgument("time scale must be positive");
  OdeSystem sys;
  sys.dim = 3;
  sys.stiffness_scale = scale;
  sys.rhs = [scale](double, const double* y, double* dy) {
    dy[0] = lorenz_x(y) / scale;
    dy[1] = lorenz_y(y) / scale;
    dy[2] = lorenz_z(y) / scale;
  };
  return sys;
}

Matrix lorenz63_series(std::size_t n_points, double dt, std::uint64_t seed, double transient,
                       const OdeTolerances& tol) {
  require_count(n_points);
  if (!(dt > 0.0)) throw InvalidArgument("sampling interval must be positive");
  if (!(transient >= 0.0)) throw InvalidArgument("transient must be >= 0");
  Rng rng(seed);
  std::array<double, 3> y{1.0 + rng.normal(), 1.0 + rng.normal(), 20.0 + rng.normal()};
  auto system = [](const std::array<double, 3>& s, std::array<double, 3>& ds, double) {
    ds[0] = lorenz_x(s.data());
    ds[1] = lorenz_y(s.data());
    ds[2] = lorenz_z(s.data());
  };
  Matrix out(3, static_cast<Eigen::Index>(n_points));
  integrate_sampled(system, y, 0.0, transient, dt, n_points, 1e-3, tol,
                    [&](std::size_t k, const std::array<double, 3>& s) {
                      out.col(static_cast<Eigen::Index>(k)) << s[0], s[1], s[2];
                    });
  return out;
}

Matrix multiscale_l63(const MultiscaleOptions& o) {
  if (!(o.eps_sep > 0.0)) throw InvalidArgument("time-scale separation must be positive");
  if (!(o.dt_out > 0.0)) throw InvalidArgument("output interval must be positive");
  if (!(o.transient >= 0.0) || !(o.fast_prerun >= 0.0))
    throw InvalidArgument("transient lengths must be >= 0");
  require_count(o.n_points);
  Rng rng(o.seed);

  // Fast variables onto the attractor, in their own time units.
  std::array<double, 3> y0{1.0 + rng.normal(), 1.0 + rng.normal(), 20.0 + rng.normal()};
  auto fast = [](const std::array<double, 3>& s, std::array<double, 3>& ds, double) {
    ds[0] = lorenz_x(s.data());
    ds[1] = lorenz_y(s.data());
    ds[2] = lorenz_z(s.data());
  };
  integrate_sampled(fast, y0, 0.0, o.fast_prerun, 1.0, 1, 1e-3, OdeTolerances{},
                    [&](std::size_t, const std::array<double, 3>& s) { y0 = s; });

  const double scale = o.eps_sep * o.eps_sep;
  const double gain = o.coupling / o.eps_sep;
  const bool multiplicative = o.mode == CouplingMode::Multiplicative;
  auto system = [=](const std::array<double, 4>& s, std::array<double, 4>& ds, double) {
    const double h = multiplicative ? s[0] : 1.0;
    ds[0] = double_well_drift(s[0]) + gain * h * s[2];
    ds[1] = lorenz_x(s.data() + 1) / scale;
    ds[2] = lorenz_y(s.data() + 1) / scale;
    ds[3] = lorenz_z(s.data() + 1) / scale;
  };
  std::array<double, 4> x{-1.5 + 3.0 * rng.uniform(), y0[0], y0[1], y0[2]};
  Matrix out(1, static_cast<Eigen::Index>(o.n_points));
  integrate_sampled(system, x, 0.0, o.transient, o.dt_out, o.n_points, 1e-3 * scale, o.tol,
                    [&](std::size_t k, const std::array<double, 4>& s) {
                      out(0, static_cast<Eigen::Index>(k)) = s[0];
                    });
  return out;
}

}  // namespace sbridge
