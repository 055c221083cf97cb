#pragma once

#include <vector>

#include "percolate/model.hpp"

namespace percolate::testing {

// Exact Gaussian projection of Y on n signals X_i = rho Y + sqrt(1 - rho^2) e_i.
struct Projection {
  std::vector<double> beta;  // E(Y | X) = beta' X
  double residual_variance;  // Var(Y | X)
  double slope;              // E(E(Y | X) | Y) = slope * Y
  double conditional_spread; // Var(E(Y | X) | Y)
};
Projection project_on_signals(int n, double rho);

// Scenario with pi given from precision 0 upward, padded to n_max.
ModelParams make_params(const std::vector<double>& pi_from_zero, int n_max = 64);

// Naive O(n^2) right-hand side over the full window, independent of the library.
std::vector<double> naive_rhs(const std::vector<double>& mu, const std::vector<double>& c,
                              const std::vector<double>& pi, double eta);

// Fixed-step classical RK4 on the naive right-hand side.
std::vector<double> rk4_integrate(std::vector<double> mu, const std::vector<double>& c,
                                  const std::vector<double>& pi, double eta, double t_end, double dt);

}  // namespace percolate::testing
