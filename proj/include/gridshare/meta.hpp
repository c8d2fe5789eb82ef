#pragma once

#include "gridshare/drs.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

namespace gridshare {

/// Number of experts for horizon T: ceil(log2(1 + T) / 2) + 1.
std::size_t pool_size(std::size_t horizon);

/// Linearized loss <gradient, z - anchor> used to score experts.
struct SurrogateLoss {
    Eigen::VectorXd gradient;
    Eigen::VectorXd anchor;

    double operator()(const Eigen::VectorXd& z) const { return gradient.dot(z - anchor); }
};

/// Parallel projected-gradient experts on a geometric grid of step sizes,
/// combined by exponentially weighted averaging.
struct ExpertPool {
    double base_rate = 0.0;               // step of expert 1 at t = 1
    std::vector<Eigen::VectorXd> iterates;
    std::vector<double> weights;

    std::size_t size() const { return iterates.size(); }
    /// Step size of expert k (0-based) at round t: 2^k * base_rate * t^(-3/4).
    double step(std::size_t k, std::size_t t) const;
};

/// Smallest-expert coefficient sqrt(2 R^3 / (2 |N_i| F_i L~)).
double pool_base_rate(const ProblemConstants& c);

/// Prior weight of expert k (1-based) in a pool of K: (K+1)/K * 1/(k(k+1)).
double initial_weight(std::size_t k, std::size_t pool);

/// Pool for horizon T with every expert starting at `start`.
/// Throws std::invalid_argument for T == 0.
ExpertPool build_pool(std::size_t horizon, const ProblemConstants& c, const Eigen::VectorXd& start);
/// Pool with an explicit expert count (K = 1 reduces to a single learner).
ExpertPool build_pool_of_size(std::size_t experts, const ProblemConstants& c, const Eigen::VectorXd& start);

/// One projected gradient step of a single expert; same as update_primal.
Eigen::VectorXd expert_step(const Eigen::VectorXd& z, const Eigen::VectorXd& direction, double eta,
                            const Box& box, double xi);

/// Weighted average of the expert iterates.
Eigen::VectorXd combine(const ExpertPool& pool);

/// Multiplicative-weights update w_k <- w_k exp(-eps * l(z_k)), renormalized.
/// Exponents are shifted by their maximum before exponentiation.
ExpertPool update_weights(const ExpertPool& pool, const SurrogateLoss& surrogate, double rate);

/// eps = sqrt(1 / (2 T G^2 R^2)) for a gradient-estimate bound G and radius R.
double meta_rate_from_bound(std::size_t horizon, double gradient_bound, double radius);

/// Meta learning rate from the problem constants; the gradient bound is
/// dim * F / delta_T with delta_T from the meta schedule.
double meta_rate(std::size_t horizon, const ProblemConstants& c);

/// delta_t = sqrt(|N_i| F_i R_i / L~) t^(-1/4) (or its value at T when
/// `constant_delta`), xi = delta / r, beta and gamma as in the base schedule.
/// The eta field is unused by the ensemble and set to expert 1's step.
HyperSchedule meta_schedule(const ProblemConstants& c, std::size_t horizon, bool constant_delta);

struct MetaState {
    AgentState agent;  // z is the combined iterate
    ExpertPool pool;
};

MetaState mansdrs_initialize(ExpertPool pool, const HyperSchedule& schedule, const Box& box, double generation,
                             const DrsOptions& options, Rng& rng);

/// One round t >= 2: dual update, gradient estimate, expert reweighting on
/// the surrogate anchored at the previous combined iterate, expert steps,
/// recombination, new perturbed action.
MetaState mansdrs_round(const MetaState& state, const HyperSchedule& schedule, const Feedback& observed,
                        const Box& box, double generation, const DrsOptions& options, double rate, Rng& rng);

}  // namespace gridshare
