#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace percolate {

/// Raised when a scenario, policy or argument violates a documented invariant.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a numerical procedure cannot reach its stated tolerance.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CostNode {
  double effort;
  double cost;
};

/// Search-cost function K on [c_lo, c_hi].
///
/// Either linear, K(c) = kappa * c, or a convex piecewise-linear table.  For a
/// table, K' at a node is the right-hand slope, so K'(c_lo) is the slope of the
/// first segment starting at or after c_lo.
class CostSpec {
 public:
  static CostSpec linear(double kappa);
  static CostSpec tabulated(std::vector<CostNode> nodes);

  bool is_linear() const { return nodes_.empty(); }
  /// Slope of a linear cost.  Throws for tabulated costs.
  double kappa() const;
  const std::vector<CostNode>& nodes() const { return nodes_; }

  double operator()(double c) const;
  double right_slope(double c) const;

  /// K(c) - delta * c.  Linear costs stay linear with slope kappa - delta.
  CostSpec with_subsidy(double delta) const;

  /// Checks that c -> K(c) - K'(c) c is nonincreasing over the nodes (the
  /// tangent-intercept identity every convex differentiable K satisfies).
  bool tangent_intercept_nonincreasing() const;

 private:
  double kappa_ = 0.0;
  std::vector<CostNode> nodes_;
};

/// A measure over precision levels 0..n_max.  Index == precision.  Mass that
/// would land beyond n_max is kept in `tail_mass`.
struct PrecisionMeasure {
  std::vector<double> weights;
  double tail_mass = 0.0;

  PrecisionMeasure() = default;
  explicit PrecisionMeasure(int n_max) : weights(static_cast<std::size_t>(n_max) + 1, 0.0) {}
  PrecisionMeasure(std::vector<double> w, double tail) : weights(std::move(w)), tail_mass(tail) {}

  int n_max() const { return static_cast<int>(weights.size()) - 1; }
  double operator[](int n) const { return weights[static_cast<std::size_t>(n)]; }
  double& operator[](int n) { return weights[static_cast<std::size_t>(n)]; }
  /// Sum of weights, excluding the tail.
  double window_mass() const;
  double total_mass() const { return window_mass() + tail_mass; }
};

/// Search effort by precision, C_n for n = 0..n_max; n > n_max uses C_{n_max}.
class Policy {
 public:
  Policy() = default;

  /// c_hi below `level`, c_lo at or above it (precision 0 included).
  static Policy trigger(int level, double c_lo, double c_hi, int n_max);
  static Policy constant(double c, int n_max);
  /// `efforts_from_one[k]` is C_{k+1}; precision 0 copies C_1 and the last
  /// entry is repeated up to n_max.
  static Policy from_list(const std::vector<double>& efforts_from_one, int n_max);
  /// Full sequence indexed from precision 0, optionally tagged with its trigger.
  static Policy from_efforts(std::vector<double> efforts, std::optional<int> trigger = std::nullopt);

  double operator[](int n) const;
  int n_max() const { return static_cast<int>(efforts_.size()) - 1; }
  const std::vector<double>& efforts() const { return efforts_; }
  const std::optional<int>& trigger_level() const { return trigger_; }

  /// Smallest N with C_n == C_N for all N <= n <= n_max.
  int flat_tail_index() const;
  double max_effort() const;
  double min_effort() const;

 private:
  std::vector<double> efforts_;
  std::optional<int> trigger_;
};

/// Indirect utility by precision, V_n for n = 0..n_max; `tail_value` for n > n_max.
struct ValueFunction {
  std::vector<double> values;
  double tail_value = 0.0;

  double operator[](int n) const {
    return n < static_cast<int>(values.size()) ? values[static_cast<std::size_t>(n)] : tail_value;
  }
  int n_max() const { return static_cast<int>(values.size()) - 1; }
};

struct ModelParams {
  double eta = 1.0;
  double eta_prime = 1.0;
  double r = 0.1;
  double rho = 0.5;
  double c_lo = 0.0;
  double c_hi = 1.0;
  CostSpec cost = CostSpec::linear(0.1);
  PrecisionMeasure pi;
  int n_max = 256;
  int public_signals = 0;
  double subsidy = 0.0;
  /// Optional exit utility u(k) for k = 0, 1, ...; the last entry is used as
  /// the limit beyond the table.  Empty means u(k) = -v(k).
  std::vector<double> exit_utility_table;
};

/// Throws ValidationError on any violated invariant.
void validate(const ModelParams& params);

/// Resizes pi to the scenario's n_max, moving any truncated mass into tail_mass.
ModelParams with_n_max(ModelParams params, int n_max);

/// Lowest precision that entering agents can hold: 0 when pi puts mass there.
int first_precision(const ModelParams& params);

/// Cost net of the proportional subsidy.
CostSpec effective_cost(const ModelParams& params);

// Gaussian kernel.

/// v(n) = (1 - rho^2) / (1 + rho^2 (n - 1)); v(0) = 1.
double cond_variance(int n, double rho);
/// gamma_k = 1 + rho^2 (k - 1).
double gamma_coeff(int k, double rho);
/// u(n + M) with M public signals.
double exit_utility(int n, const ModelParams& params);
/// lim_k u(k).
double exit_utility_limit(const ModelParams& params);

struct PooledPosterior {
  double mean;
  int precision;
};

/// Posterior mean and count after two agents holding disjoint signal sets share
/// their conditional means.
PooledPosterior pool_posteriors(double x, int n, double y, int m, double rho);

struct GaussianMoments {
  double mean;
  double variance;
};

/// Y-conditional mean and variance of E(Y | n signals) across precision-n agents.
GaussianMoments cross_section_density_params(int n, double y, double rho);

/// mu^C_n = C_n mu_n; total mass (tail included, at effort C_{n_max}) is the average effort.
PrecisionMeasure effort_weighted(const PrecisionMeasure& mu, const Policy& c);

}  // namespace percolate
