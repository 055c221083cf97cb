#include "percolate/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace percolate {

CostSpec CostSpec::linear(double kappa) {
  if (!(kappa >= 0.0) || !std::isfinite(kappa)) {
    throw ValidationError("linear cost slope must be finite and nonnegative");
  }
  CostSpec spec;
  spec.kappa_ = kappa;
  return spec;
}

CostSpec CostSpec::tabulated(std::vector<CostNode> nodes) {
  if (nodes.size() < 2) {
    throw ValidationError("tabulated cost needs at least two nodes");
  }
  for (std::size_t i = 1; i < nodes.size(); ++i) {
    if (!(nodes[i].effort > nodes[i - 1].effort)) {
      throw ValidationError("tabulated cost efforts must be strictly increasing");
    }
  }
  double previous_slope = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < nodes.size(); ++i) {
    const double slope = (nodes[i].cost - nodes[i - 1].cost) / (nodes[i].effort - nodes[i - 1].effort);
    if (slope < -1e-12) throw ValidationError("tabulated cost must be nondecreasing");
    if (slope < previous_slope - 1e-12) throw ValidationError("tabulated cost slopes must be nondecreasing (convex)");
    previous_slope = slope;
  }
  CostSpec spec;
  spec.nodes_ = std::move(nodes);
  return spec;
}

double CostSpec::kappa() const {
  if (!is_linear()) throw ValidationError("cost is not linear");
  return kappa_;
}

namespace {

// Index of the segment [nodes[i], nodes[i+1]) that contains c, clamped.
std::size_t segment_of(const std::vector<CostNode>& nodes, double c) {
  auto it = std::upper_bound(nodes.begin(), nodes.end(), c,
                             [](double value, const CostNode& node) { return value < node.effort; });
  std::size_t idx = it == nodes.begin() ? 0 : static_cast<std::size_t>(it - nodes.begin()) - 1;
  return std::min(idx, nodes.size() - 2);
}

}  // namespace

double CostSpec::operator()(double c) const {
  if (is_linear()) return kappa_ * c;
  const std::size_t i = segment_of(nodes_, c);
  const CostNode& a = nodes_[i];
  const CostNode& b = nodes_[i + 1];
  return a.cost + (b.cost - a.cost) * (c - a.effort) / (b.effort - a.effort);
}

double CostSpec::right_slope(double c) const {
  if (is_linear()) return kappa_;
  const std::size_t i = segment_of(nodes_, c);
  const CostNode& a = nodes_[i];
  const CostNode& b = nodes_[i + 1];
  return (b.cost - a.cost) / (b.effort - a.effort);
}

CostSpec CostSpec::with_subsidy(double delta) const {
  if (is_linear()) return linear(kappa_ - delta);
  std::vector<CostNode> shifted = nodes_;
  for (auto& node : shifted) node.cost -= delta * node.effort;
  CostSpec spec;
  spec.nodes_ = std::move(shifted);
  return spec;
}

bool CostSpec::tangent_intercept_nonincreasing() const {
  if (is_linear()) return true;
  double previous = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < nodes_.size(); ++i) {
    const double c = nodes_[i].effort;
    const double value = (*this)(c) - right_slope(c) * c;
    if (value > previous + 1e-12) return false;
    previous = value;
  }
  return true;
}

double PrecisionMeasure::window_mass() const {
  return std::accumulate(weights.begin(), weights.end(), 0.0);
}

Policy Policy::trigger(int level, double c_lo, double c_hi, int n_max) {
  if (level < 0) throw ValidationError("trigger level must be nonnegative");
  if (n_max < 1) throw ValidationError("n_max must be positive");
  Policy p;
  p.efforts_.resize(static_cast<std::size_t>(n_max) + 1);
  for (int n = 0; n <= n_max; ++n) p.efforts_[static_cast<std::size_t>(n)] = n < level ? c_hi : c_lo;
  p.trigger_ = level;
  return p;
}

Policy Policy::constant(double c, int n_max) {
  if (n_max < 1) throw ValidationError("n_max must be positive");
  Policy p;
  p.efforts_.assign(static_cast<std::size_t>(n_max) + 1, c);
  return p;
}

Policy Policy::from_list(const std::vector<double>& efforts_from_one, int n_max) {
  if (efforts_from_one.empty()) throw ValidationError("policy list is empty");
  if (n_max < 1) throw ValidationError("n_max must be positive");
  Policy p;
  p.efforts_.resize(static_cast<std::size_t>(n_max) + 1);
  p.efforts_[0] = efforts_from_one.front();
  for (int n = 1; n <= n_max; ++n) {
    const std::size_t k = std::min(static_cast<std::size_t>(n - 1), efforts_from_one.size() - 1);
    p.efforts_[static_cast<std::size_t>(n)] = efforts_from_one[k];
  }
  return p;
}

Policy Policy::from_efforts(std::vector<double> efforts, std::optional<int> trigger) {
  if (efforts.size() < 2) throw ValidationError("policy needs efforts for precision 0 and 1 at least");
  if (trigger && *trigger < 0) throw ValidationError("trigger level must be nonnegative");
  Policy p;
  p.efforts_ = std::move(efforts);
  p.trigger_ = trigger;
  return p;
}

double Policy::operator[](int n) const {
  if (n >= static_cast<int>(efforts_.size())) return efforts_.back();
  return efforts_[static_cast<std::size_t>(n)];
}

int Policy::flat_tail_index() const {
  int n = n_max();
  const double last = efforts_.back();
  while (n > 0 && efforts_[static_cast<std::size_t>(n - 1)] == last) --n;
  return n;
}

double Policy::max_effort() const { return *std::max_element(efforts_.begin(), efforts_.end()); }
double Policy::min_effort() const { return *std::min_element(efforts_.begin(), efforts_.end()); }

void validate(const ModelParams& p) {
  if (!(p.eta > 0.0)) throw ValidationError("eta must be positive");
  if (!(p.eta_prime > 0.0)) throw ValidationError("eta_prime must be positive");
  if (!(p.r > 0.0)) throw ValidationError("r must be positive");
  if (!(p.rho > 0.0 && p.rho < 1.0)) throw ValidationError("rho must lie in (0, 1)");
  if (!(p.c_lo >= 0.0)) throw ValidationError("c_lo must be nonnegative");
  if (!(p.c_hi >= p.c_lo)) throw ValidationError("c_hi must be at least c_lo");
  if (p.n_max < 1) throw ValidationError("n_max must be positive");
  if (p.public_signals < 0) throw ValidationError("public_signals must be nonnegative");
  if (!(p.subsidy >= 0.0)) throw ValidationError("subsidy must be nonnegative");
  if (p.pi.n_max() != p.n_max) throw ValidationError("pi must be indexed 0..n_max");
  double mass = p.pi.total_mass();
  for (double w : p.pi.weights) {
    if (!(w >= 0.0)) throw ValidationError("pi weights must be nonnegative");
  }
  if (p.pi.tail_mass > 1e-12) throw ValidationError("pi must be supported on 0..n_max");
  if (std::abs(mass - 1.0) > 1e-9) throw ValidationError("pi must sum to 1");
  if (p.cost.is_linear()) {
    if (p.subsidy > 0.0 && !(p.subsidy < p.cost.kappa())) {
      throw ValidationError("subsidy must be smaller than the linear cost slope");
    }
  } else {
    const auto& nodes = p.cost.nodes();
    if (nodes.front().effort > p.c_lo + 1e-12 || nodes.back().effort < p.c_hi - 1e-12) {
      throw ValidationError("tabulated cost must cover [c_lo, c_hi]");
    }
    if (!effective_cost(p).tangent_intercept_nonincreasing()) {
      throw ValidationError("tabulated cost is not convex");
    }
  }
  if (!p.exit_utility_table.empty()) {
    const auto& u = p.exit_utility_table;
    for (std::size_t k = 1; k < u.size(); ++k) {
      if (u[k] < u[k - 1]) throw ValidationError("exit utility must be nondecreasing");
      if (k + 1 < u.size() && u[k + 1] + u[k - 1] > 2.0 * u[k] + 1e-12) {
        throw ValidationError("exit utility must be concave");
      }
    }
  }
}

ModelParams with_n_max(ModelParams params, int n_max) {
  if (n_max < 1) throw ValidationError("n_max must be positive");
  PrecisionMeasure resized(n_max);
  resized.tail_mass = params.pi.tail_mass;
  for (int n = 0; n <= params.pi.n_max(); ++n) {
    if (n <= n_max) {
      resized[n] = params.pi[n];
    } else {
      resized.tail_mass += params.pi[n];
    }
  }
  params.pi = std::move(resized);
  params.n_max = n_max;
  return params;
}

int first_precision(const ModelParams& params) { return params.pi[0] > 0.0 ? 0 : 1; }

CostSpec effective_cost(const ModelParams& params) {
  return params.subsidy > 0.0 ? params.cost.with_subsidy(params.subsidy) : params.cost;
}

double cond_variance(int n, double rho) {
  if (!(rho > 0.0 && rho < 1.0)) throw ValidationError("rho must lie in (0, 1)");
  if (n < 0) throw ValidationError("signal count must be nonnegative");
  if (n == 0) return 1.0;
  const double r2 = rho * rho;
  return (1.0 - r2) / (1.0 + r2 * (n - 1));
}

double gamma_coeff(int k, double rho) { return 1.0 + rho * rho * (k - 1); }

double exit_utility(int n, const ModelParams& params) {
  const int k = n + params.public_signals;
  if (!params.exit_utility_table.empty()) {
    const auto& u = params.exit_utility_table;
    return k < static_cast<int>(u.size()) ? u[static_cast<std::size_t>(k)] : u.back();
  }
  return -cond_variance(k, params.rho);
}

double exit_utility_limit(const ModelParams& params) {
  return params.exit_utility_table.empty() ? 0.0 : params.exit_utility_table.back();
}

PooledPosterior pool_posteriors(double x, int n, double y, int m, double rho) {
  const double g = gamma_coeff(n + m, rho);
  return {(gamma_coeff(n, rho) * x + gamma_coeff(m, rho) * y) / g, n + m};
}

GaussianMoments cross_section_density_params(int n, double y, double rho) {
  const double r2 = rho * rho;
  const double g = 1.0 + r2 * (n - 1);
  return {n * r2 * y / g, n * r2 * (1.0 - r2) / (g * g)};
}

PrecisionMeasure effort_weighted(const PrecisionMeasure& mu, const Policy& c) {
  if (mu.n_max() != c.n_max()) throw ValidationError("measure and policy lengths differ");
  PrecisionMeasure out(mu.n_max());
  for (int n = 0; n <= mu.n_max(); ++n) out[n] = c[n] * mu[n];
  // Agents beyond the window search at the flat-tail effort.
  out.tail_mass = c[c.n_max()] * mu.tail_mass;
  return out;
}

}  // namespace percolate
