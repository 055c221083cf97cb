#include "percolate/dynamics.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <boost/numeric/odeint.hpp>
#include <cmath>
#include <sstream>

namespace percolate {

namespace odeint = boost::numeric::odeint;

namespace {

using State = std::vector<double>;

// State layout: mu_0..mu_{n_max}, then the tail mass.
struct System {
  System(const Policy& c, const ModelParams& p) : policy(c), params(p) {}

  const Policy& policy;
  const ModelParams& params;

  void operator()(const State& x, State& dxdt, double /*t*/) const {
    const int n_max = params.n_max;
    const std::size_t len = static_cast<std::size_t>(n_max) + 1;
    nu_.resize(len);
    supp_.clear();
    double c_bar = 0.0;
    for (std::size_t n = 0; n < len; ++n) {
      nu_[n] = policy[static_cast<int>(n)] * x[n];
      if (nu_[n] != 0.0) supp_.push_back(static_cast<int>(n));
      c_bar += nu_[n];
    }
    const double window_effort = c_bar;
    const double tail_effort = policy[n_max] * x[len];
    c_bar += tail_effort;
    double conv_total = 0.0;
    for (std::size_t k = 0; k < len; ++k) {
      double conv = 0.0;
      for (int l : supp_) {
        if (static_cast<std::size_t>(l) > k) break;
        conv += nu_[static_cast<std::size_t>(l)] * nu_[k - static_cast<std::size_t>(l)];
      }
      conv_total += conv;
      dxdt[k] = params.eta * (params.pi[static_cast<int>(k)] - x[k]) + conv - nu_[k] * c_bar;
    }
    // Window agents that overshoot n_max or meet a tail agent join the tail.
    dxdt[len] = -params.eta * x[len] + (window_effort * window_effort - conv_total) + window_effort * tail_effort;
  }

  mutable std::vector<double> nu_;
  mutable std::vector<int> supp_;
};

State to_state(const PrecisionMeasure& mu) {
  State x = mu.weights;
  x.push_back(mu.tail_mass);
  return x;
}

PrecisionMeasure from_state(const State& x) {
  return PrecisionMeasure(State(x.begin(), x.end() - 1), x.back());
}

}  // namespace

PrecisionMeasure rhs(const PrecisionMeasure& mu, const Policy& policy, const ModelParams& params) {
  if (mu.n_max() != params.n_max || policy.n_max() != params.n_max) {
    throw ValidationError("measure, policy and scenario n_max differ");
  }
  const State x = to_state(mu);
  State dxdt(x.size());
  System{policy, params}(x, dxdt, 0.0);
  return from_state(dxdt);
}

Trajectory integrate(const PrecisionMeasure& mu0, const Policy& policy, const ModelParams& params, double t_end,
                     double dt_out, const SolverConfig& config) {
  if (!(t_end > 0.0)) throw ValidationError("t_end must be positive");
  if (!(dt_out > 0.0)) throw ValidationError("dt_out must be positive");
  if (mu0.n_max() != params.n_max || policy.n_max() != params.n_max) {
    throw ValidationError("measure, policy and scenario n_max differ");
  }
  for (double w : mu0.weights) {
    if (!(w >= 0.0)) throw ValidationError("initial measure must be nonnegative");
  }

  System system{policy, params};
  auto stepper = odeint::make_controlled(config.ode_atol, config.ode_rtol, odeint::runge_kutta_dopri5<State>());

  Trajectory traj;
  State x = to_state(mu0);
  double t = 0.0;
  double dt = std::min(dt_out, 1e-2);
  const double min_dt = 1e-14 * std::max(1.0, t_end);
  // Keeps h times the fastest decay rate eta + C_n C̄ at most 1, where the
  // stability polynomial stays positive and tiny entries cannot flip sign.
  const double c_max = policy.max_effort();
  const double max_dt = 1.0 / (params.eta + c_max * c_max);

  auto record = [&](double time) {
    traj.times.push_back(time);
    PrecisionMeasure m = from_state(x);
    const double mass = m.total_mass();
    traj.mass_series.push_back(mass);
    traj.max_mass_deviation = std::max(traj.max_mass_deviation, std::abs(mass - 1.0));
    traj.measures.push_back(std::move(m));
  };
  record(0.0);

  int snapshot = 1;
  while (t < t_end) {
    const double next = std::min(t_end, snapshot * dt_out);
    while (t < next) {
      dt = std::min(dt, max_dt);
      const double saved_dt = dt;
      const bool clipped = t + dt >= next;
      if (clipped) dt = next - t;
      const double t_before = t;
      const auto result = stepper.try_step(system, x, t, dt);
      if (result == odeint::success) {
        ++traj.accepted_steps;
        if (clipped) {
          t = next;
          dt = std::max(dt, saved_dt);
        }
        for (std::size_t i = 0; i < x.size(); ++i) {
          if (x[i] < 0.0) {
            if (x[i] < -1e-12) {
              std::ostringstream msg;
              msg << "negative undershoot " << x[i] << " at index " << i << ", t = " << t;
              throw SolverError(msg.str());
            }
            traj.max_clip = std::max(traj.max_clip, -x[i]);
            ++traj.clip_count;
            x[i] = 0.0;
          }
        }
      } else {
        ++traj.rejected_steps;
        if (dt < min_dt) {
          std::ostringstream msg;
          msg << "step size underflow at t = " << t_before << " (dt = " << dt << ", accepted "
              << traj.accepted_steps << ", rejected " << traj.rejected_steps << ")";
          throw SolverError(msg.str());
        }
      }
    }
    record(t);
    ++snapshot;
  }
  if (traj.clip_count > 0) {
    spdlog::debug("integrate: clipped {} negative entries, largest {:.3e}", traj.clip_count, traj.max_clip);
  }
  const double final_tail = traj.measures.back().tail_mass;
  if (final_tail > 1e-9) {
    spdlog::warn("integrate: {:.3e} of mass sits beyond n_max = {}; it searches at the flat-tail effort", final_tail,
                 params.n_max);
  }
  return traj;
}

MassLossReport mass_loss_check(const Policy& policy, const ModelParams& params, double t_end,
                               const SolverConfig& config) {
  MassLossReport report;
  const int flat = policy.flat_tail_index();
  report.tail_effort = policy[flat];
  report.condition_holds = params.eta >= report.tail_effort * params.c_hi;
  if (report.condition_holds) return report;

  const MarketState state = solve_stationary(policy, params, config);
  report.stationary_c_bar = state.c_bar;
  const double c_n = report.tail_effort;
  report.predicted_limit_mass = 1.0 + (params.eta - c_n * state.c_bar) / (c_n * c_n);
  const Trajectory traj = integrate(params.pi, policy, params, t_end, t_end, config);
  report.observed_window_mass = traj.measures.back().window_mass();
  report.horizon = t_end;
  return report;
}

double l1_distance(const PrecisionMeasure& a, const PrecisionMeasure& b) {
  if (a.n_max() != b.n_max()) throw ValidationError("l1_distance needs a shared n_max");
  double d = 0.0;
  for (int n = 0; n <= a.n_max(); ++n) d += std::abs(a[n] - b[n]);
  return d;
}

}  // namespace percolate
