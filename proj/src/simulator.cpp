#include "percolate/simulator.hpp"

#include <boost/random/discrete_distribution.hpp>
#include <boost/random/exponential_distribution.hpp>
#include <boost/random/mersenne_twister.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>
#include <boost/random/uniform_int_distribution.hpp>

#include <algorithm>
#include <cmath>

#include "percolate/stationary.hpp"

namespace percolate {

namespace {

using Engine = boost::random::mt19937_64;

struct Running {
  long count = 0;
  double mean = 0.0;
  double m2 = 0.0;
  void add(double x) {
    ++count;
    const double d = x - mean;
    mean += d / static_cast<double>(count);
    m2 += d * (x - mean);
  }
  double half_width() const {
    if (count < 2) return 0.0;
    return 1.96 * std::sqrt(m2 / static_cast<double>(count - 1) / static_cast<double>(count));
  }
};

// Discounted cost of effort with cost k held on [a, b], both measured from entry.
double discounted_cost(double k, double a, double b, double r) {
  if (k == 0.0) return 0.0;
  if (r == 0.0) return k * (b - a);
  return k * (std::exp(-r * a) - std::exp(-r * b)) / r;
}

BinStats bin_stats(int n, std::vector<double>& xs) {
  BinStats s;
  s.n = n;
  s.count = static_cast<long>(xs.size());
  if (xs.empty()) return s;
  std::sort(xs.begin(), xs.end());
  const double cnt = static_cast<double>(xs.size());
  double sum = 0.0;
  for (double x : xs) sum += x;
  s.mean_x = sum / cnt;
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double x : xs) {
    const double d = x - s.mean_x;
    const double d2 = d * d;
    m2 += d2;
    m3 += d2 * d;
    m4 += d2 * d2;
  }
  if (xs.size() < 2) return s;
  s.var_x = m2 / (cnt - 1.0);
  const double pm2 = m2 / cnt;
  if (pm2 > 0.0) {
    s.skew = (m3 / cnt) / std::pow(pm2, 1.5);
    s.excess_kurtosis = (m4 / cnt) / (pm2 * pm2) - 3.0;
  }
  // Clusters are runs of identical values in the sorted sample.
  double se_mean = 0.0, se_var = 0.0;
  for (std::size_t i = 0; i < xs.size();) {
    std::size_t j = i;
    while (j < xs.size() && xs[j] == xs[i]) ++j;
    const double k = static_cast<double>(j - i);
    const double d = xs[i] - s.mean_x;
    se_mean += k * k * d * d;
    const double e = k * (d * d - s.var_x);
    se_var += e * e;
    i = j;
  }
  s.mean_se = std::sqrt(se_mean) / cnt;
  s.var_se = std::sqrt(se_var) / cnt;
  return s;
}

void check_config(const SimConfig& cfg) {
  if (cfg.population < 2) throw ValidationError("population must be at least 2");
  if (!(cfg.horizon > 0.0) || !std::isfinite(cfg.horizon)) throw ValidationError("horizon must be positive");
  if (!(cfg.record_grid > 0.0)) throw ValidationError("record_grid must be positive");
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

PrecisionMeasure Snapshot::histogram(int population) const {
  PrecisionMeasure h(static_cast<int>(bins.size()) - 1);
  for (const auto& b : bins) h[b.n] = static_cast<double>(b.count) / population;
  h.tail_mass = static_cast<double>(beyond_window) / population;
  return h;
}

SimOutput run(const Policy& policy, const ModelParams& params, const SimConfig& cfg) {
  validate(params);
  check_config(cfg);
  if (policy.n_max() != params.n_max) throw ValidationError("policy and scenario n_max differ");
  if (params.pi.tail_mass > 0.0) throw ValidationError("simulation needs the entry distribution inside the window");

  const int n_max = params.n_max;
  const int pop = cfg.population;
  const double p = static_cast<double>(pop);
  const CostSpec cost = effective_cost(params);
  const double r = params.r;
  Engine eng(derive_seed(cfg.seed, 0));
  boost::random::uniform_01<double> unit;
  boost::random::uniform_int_distribution<int> pick(0, pop - 1);
  boost::random::discrete_distribution<int> entry(params.pi.weights.begin(), params.pi.weights.end());
  boost::random::normal_distribution<double> normal;

  SimOutput out;
  out.y = cfg.y_realization ? *cfg.y_realization : normal(eng);
  const double y = out.y;

  auto effort = [&](int n) { return policy[std::min(n, n_max)]; };
  const double c_max = policy.max_effort();

  std::vector<int> prec(static_cast<std::size_t>(pop));
  std::vector<double> x(prec.size()), entered(prec.size()), last(prec.size()), spent(prec.size());
  std::vector<int> entry_prec(prec.size());
  std::vector<char> tracked(prec.size());
  std::vector<Running> lifetimes;
  double s_total = 0.0;

  auto draw_entrant = [&](int i, double t) {
    const auto k = static_cast<std::size_t>(i);
    const int n = entry(eng);
    const GaussianMoments g = cross_section_density_params(n, y, params.rho);
    prec[k] = n;
    x[k] = g.variance > 0.0 ? g.mean + std::sqrt(g.variance) * normal(eng) : g.mean;
    entered[k] = t;
    last[k] = t;
    spent[k] = 0.0;
    entry_prec[k] = n;
    tracked[k] = 1;
  };
  auto accrue = [&](int i, double t) {
    const auto k = static_cast<std::size_t>(i);
    if (tracked[k]) spent[k] += discounted_cost(cost(effort(prec[k])), last[k] - entered[k], t - entered[k], r);
    last[k] = t;
  };
  auto snapshot = [&](double t) {
    std::vector<std::vector<double>> by_bin(static_cast<std::size_t>(n_max) + 1);
    Snapshot snap;
    snap.t = t;
    for (int i = 0; i < pop; ++i) {
      const int n = prec[static_cast<std::size_t>(i)];
      if (n > n_max) {
        ++snap.beyond_window;
      } else {
        by_bin[static_cast<std::size_t>(n)].push_back(x[static_cast<std::size_t>(i)]);
      }
    }
    for (int n = 0; n <= n_max; ++n) snap.bins.push_back(bin_stats(n, by_bin[static_cast<std::size_t>(n)]));
    out.snapshots.push_back(std::move(snap));
  };

  for (int i = 0; i < pop; ++i) {
    draw_entrant(i, 0.0);
    s_total += effort(prec[static_cast<std::size_t>(i)]);
  }

  std::vector<double> grid;
  for (long k = 0;; ++k) {
    const double t = static_cast<double>(k) * cfg.record_grid;
    if (t > cfg.horizon * (1.0 + 1e-12)) break;
    grid.push_back(std::min(t, cfg.horizon));
  }
  if (grid.back() < cfg.horizon) grid.push_back(cfg.horizon);

  double t = 0.0;
  std::size_t next = 0;
  const double reset_rate = params.eta * p;
  const double exit_rate = params.eta_prime * p;
  while (next < grid.size()) {
    const double meet_rate = s_total * s_total / (2.0 * p);
    const double total = reset_rate + exit_rate + meet_rate;
    const double dt = boost::random::exponential_distribution<double>(total)(eng);
    if (t + dt >= grid[next]) {
      // Clocks are memoryless, so jumping to the snapshot and redrawing is exact.
      t = grid[next++];
      snapshot(t);
      continue;
    }
    t += dt;
    const double u = unit(eng) * total;
    if (u < reset_rate) {
      const int i = pick(eng);
      s_total -= effort(prec[static_cast<std::size_t>(i)]);
      draw_entrant(i, t);
      s_total += effort(prec[static_cast<std::size_t>(i)]);
      ++out.resets;
    } else if (u < reset_rate + exit_rate) {
      const int i = pick(eng);
      const auto k = static_cast<std::size_t>(i);
      if (tracked[k]) {
        accrue(i, t);
        const double value = -spent[k] + std::exp(-r * (t - entered[k])) * exit_utility(prec[k], params);
        if (lifetimes.size() <= static_cast<std::size_t>(entry_prec[k])) lifetimes.resize(static_cast<std::size_t>(entry_prec[k]) + 1);
        lifetimes[static_cast<std::size_t>(entry_prec[k])].add(value);
        tracked[k] = 0;
      }
      ++out.exits;
    } else {
      // Effort-proportional draws by thinning against the largest effort.
      auto weighted = [&] {
        for (;;) {
          const int k = pick(eng);
          if (unit(eng) * c_max < effort(prec[static_cast<std::size_t>(k)])) return k;
        }
      };
      const int i = weighted();
      const int j = weighted();
      if (i == j) {
        ++out.rejected_candidates;
        continue;
      }
      accrue(i, t);
      accrue(j, t);
      const auto a = static_cast<std::size_t>(i);
      const auto b = static_cast<std::size_t>(j);
      s_total -= effort(prec[a]) + effort(prec[b]);
      const PooledPosterior pooled = pool_posteriors(x[a], prec[a], x[b], prec[b], params.rho);
      if (pooled.precision < prec[a] || pooled.precision < prec[b]) ++out.precision_decreases;
      prec[a] = prec[b] = pooled.precision;
      x[a] = x[b] = pooled.mean;
      s_total += 2.0 * effort(pooled.precision);
      ++out.meetings;
    }
  }

  for (std::size_t n = 0; n < lifetimes.size(); ++n) {
    if (lifetimes[n].count == 0) continue;
    out.lifetimes.push_back(
        LifetimeStats{static_cast<int>(n), lifetimes[n].count, lifetimes[n].mean, lifetimes[n].half_width()});
  }
  return out;
}

ValueEstimate estimate_value(const Policy& own, const Policy& market_policy, const ModelParams& params,
                             const SimConfig& cfg, int entry_precision) {
  validate(params);
  check_config(cfg);
  if (entry_precision < 0) throw ValidationError("entry precision must be nonnegative");
  const int n_max = params.n_max;
  const MarketState market = solve_stationary(market_policy, params);
  const PrecisionMeasure nu = effort_weighted(market.mu, market.policy);
  const double c_bar = nu.total_mass();
  // Partners beyond the window are placed just past it.
  std::vector<double> jump = nu.weights;
  jump.push_back(nu.tail_mass);
  const bool can_meet = c_bar > 0.0;
  boost::random::discrete_distribution<int> partner(can_meet ? jump : std::vector<double>{1.0});
  boost::random::uniform_01<double> unit;
  const CostSpec cost = effective_cost(params);
  const double r = params.r;

  Running acc;
  for (int life = 0; life < cfg.population; ++life) {
    Engine eng(derive_seed(cfg.seed, static_cast<std::uint64_t>(life) + 1));
    int n = entry_precision;
    double t = 0.0;
    double value = 0.0;
    for (;;) {
      const double c = own[std::min(n, n_max)];
      const double meet = can_meet ? c * c_bar : 0.0;
      const double total = meet + params.eta_prime;
      const double dt = boost::random::exponential_distribution<double>(total)(eng);
      value -= discounted_cost(cost(c), t, t + dt, r);
      t += dt;
      if (unit(eng) * total >= meet) {
        value += std::exp(-r * t) * exit_utility(n, params);
        break;
      }
      n += partner(eng);
    }
    acc.add(value);
  }
  return ValueEstimate{acc.mean, acc.half_width(), acc.count};
}

ValueEstimate estimate_value(const Policy& policy, const ModelParams& params, const SimConfig& cfg,
                             int entry_precision) {
  return estimate_value(policy, policy, params, cfg, entry_precision);
}

}  // namespace percolate
