#pragma once

// Training losses and rollout metrics. Every function is a pure reduction.

#include "contactgnn/ccd/detect.hpp"
#include "contactgnn/common.hpp"

#include <span>

namespace contactgnn {

struct LossWeights {
    double w_d = 1.0;
    double w_c = 0.0;
    void validate() const;
};

/// Mean squared acceleration error over graphs x nodes x 3 components.
double dynamic_loss(std::span<const Points> y_hat, std::span<const Points> y);
double dynamic_loss(const Points& y_hat, const Points& y);

/// Mean of |r_Ii / l_c| over every triangle of every graph, colliding or not.
double contact_loss(std::span<const ccd::ContactField> fields, std::span<const std::size_t> n_triangles,
                    double l_c);
double contact_loss(const ccd::ContactField& field, std::size_t n_triangles, double l_c);

double total_loss(double l_d, double l_c, const LossWeights& w);

/// Mean absolute componentwise displacement error over graphs x nodes x 3,
/// divided by l_c.
double position_loss(std::span<const Points> dr_hat, std::span<const Points> dr, double l_c);
double position_loss(const Points& dr_hat, const Points& dr, double l_c);

/// e_i = |(dr_i - dr_hat_i) / l_c|
std::vector<double> error_set(const Points& dr_hat, const Points& dr, double l_c);

struct Quartiles {
    double min = 0.0, q1 = 0.0, median = 0.0, q3 = 0.0, max = 0.0, mean = 0.0;
    std::size_t count = 0;
};

/// Linear interpolation between order statistics (position p (n - 1)).
Quartiles quartiles(std::vector<double> values);

/// Per-simulation averages from the per-step error sets e[N-1][i], N = 1..T.
struct AccumulatedErrors {
    std::vector<std::vector<double>> xi;  // xi[M-1][i] = sum_{N <= M-1} e_Ni
    std::vector<double> xi_mean;          // Xi_M (node mean), equal to Xi-bar_M
    std::vector<double> e_mean;           // e-bar_N
    double e_bar = 0.0;
    double xi_bar = 0.0;
};

AccumulatedErrors accumulate_errors(const std::vector<std::vector<double>>& e);

/// Step-wise averages of e-bar_N and Xi-bar_N across simulations, truncated to
/// the shortest simulation.
struct CrossSimulationAverage {
    std::vector<double> e_mean;
    std::vector<double> xi_mean;
    std::size_t steps = 0;
};

CrossSimulationAverage average_over_simulations(std::span<const AccumulatedErrors> sims);

/// Gradient of contact_loss(field, n_triangles, l_c) with respect to the
/// end-of-step node positions, with the fired sub-tests held fixed. Each
/// triangle contributes through the event that attains its maximum.
Points contact_loss_gradient(const ccd::ContactField& field, const ccd::ContactTopology& topo,
                             const Points& end_positions, std::size_t n_triangles, double l_c,
                             double area_tol);

}  // namespace contactgnn
