#include "gridshare/meta.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace gridshare {

std::size_t pool_size(std::size_t horizon) {
    if (horizon == 0) throw std::invalid_argument("pool_size: horizon must be >= 1");
    // ceil(log2(1+T)/2) is the smallest m with 4^m >= 1+T; integer arithmetic keeps it exact
    std::size_t m = 0;
    std::size_t power = 1;
    while (power <= horizon) {
        ++m;
        // the next power would overflow, so it certainly exceeds the horizon
        if (power > std::numeric_limits<std::size_t>::max() / 4) break;
        power *= 4;
    }
    return m + 1;
}

double ExpertPool::step(std::size_t k, std::size_t t) const {
    return std::ldexp(base_rate, static_cast<int>(k)) * std::pow(static_cast<double>(t), -0.75);
}

double pool_base_rate(const ProblemConstants& c) {
    c.validate();
    const double R = c.outer_radius;
    return std::sqrt(2.0 * R * R * R / (2.0 * c.neighbor_count * c.loss_bound * c.lipschitz_tilde()));
}

double initial_weight(std::size_t k, std::size_t pool) {
    if (k == 0 || k > pool) throw std::invalid_argument("initial_weight: expert index out of range");
    const double K = static_cast<double>(pool);
    const double kk = static_cast<double>(k);
    return (K + 1.0) / K / (kk * (kk + 1.0));
}

ExpertPool build_pool_of_size(std::size_t experts, const ProblemConstants& c, const Eigen::VectorXd& start) {
    if (experts == 0) throw std::invalid_argument("pool must contain at least one expert");
    ExpertPool pool;
    pool.base_rate = pool_base_rate(c);
    pool.iterates.assign(experts, start);
    pool.weights.resize(experts);
    for (std::size_t k = 0; k < experts; ++k) pool.weights[k] = initial_weight(k + 1, experts);
    return pool;
}

ExpertPool build_pool(std::size_t horizon, const ProblemConstants& c, const Eigen::VectorXd& start) {
    return build_pool_of_size(pool_size(horizon), c, start);
}

Eigen::VectorXd expert_step(const Eigen::VectorXd& z, const Eigen::VectorXd& direction, double eta,
                            const Box& box, double xi) {
    return update_primal(z, direction, eta, box, xi);
}

Eigen::VectorXd combine(const ExpertPool& pool) {
    if (pool.iterates.empty()) throw std::invalid_argument("combine: empty pool");
    Eigen::VectorXd z = Eigen::VectorXd::Zero(pool.iterates.front().size());
    for (std::size_t k = 0; k < pool.size(); ++k) z += pool.weights[k] * pool.iterates[k];
    return z;
}

ExpertPool update_weights(const ExpertPool& pool, const SurrogateLoss& surrogate, double rate) {
    if (rate < 0.0) throw std::invalid_argument("update_weights: rate must be >= 0");
    ExpertPool next = pool;
    const std::size_t K = pool.size();
    std::vector<double> logits(K);
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < K; ++k) {
        logits[k] = pool.weights[k] > 0.0 ? std::log(pool.weights[k]) - rate * surrogate(pool.iterates[k])
                                          : -std::numeric_limits<double>::infinity();
        top = std::max(top, logits[k]);
    }
    if (!std::isfinite(top)) throw std::runtime_error("update_weights: all expert weights vanished");
    double total = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
        next.weights[k] = std::exp(logits[k] - top);
        total += next.weights[k];
    }
    for (double& w : next.weights) w /= total;
    return next;
}

double meta_rate_from_bound(std::size_t horizon, double gradient_bound, double radius) {
    if (horizon == 0) throw std::invalid_argument("meta_rate: horizon must be >= 1");
    if (!(gradient_bound > 0.0 && radius > 0.0)) throw std::invalid_argument("meta_rate: bounds must be positive");
    const double gr = gradient_bound * radius;
    return std::sqrt(1.0 / (2.0 * static_cast<double>(horizon) * gr * gr));
}

HyperSchedule meta_schedule(const ProblemConstants& c, std::size_t horizon, bool constant_delta) {
    c.validate();
    const double coef = std::sqrt(c.neighbor_count * c.loss_bound * c.outer_radius / c.lipschitz_tilde());
    const double base = pool_base_rate(c);
    const double frozen = coef * std::pow(static_cast<double>(std::max<std::size_t>(horizon, 1)), -0.25);
    return HyperSchedule(
        constant_delta ? "meta-constant-delta" : "meta",
        [c, coef, base, frozen, constant_delta](std::size_t t) {
            const double tt = static_cast<double>(t);
            ScheduleValues v;
            v.delta = constant_delta ? frozen : coef * std::pow(tt, -0.25);
            v.eta = base * std::pow(tt, -0.75);
            v.beta = 1.0 / (c.constraint_bound * std::sqrt(tt));
            v.gamma = 1.0 / (c.constraint_bound * c.constraint_bound * std::sqrt(tt));
            v.xi = v.delta / c.inner_radius;
            return v;
        },
        c.inner_radius);
}

double meta_rate(std::size_t horizon, const ProblemConstants& c) {
    const ScheduleValues last = meta_schedule(c, horizon, false).at(horizon);
    const double gradient_bound = static_cast<double>(c.dim) * c.loss_bound / last.delta;
    return meta_rate_from_bound(horizon, gradient_bound, c.outer_radius);
}

MetaState mansdrs_initialize(ExpertPool pool, const HyperSchedule& schedule, const Box& box, double generation,
                             const DrsOptions& options, Rng& rng) {
    const ScheduleValues v = schedule.at(1);
    MetaState s;
    for (auto& z : pool.iterates) z = project_shrunk(z, box, v.xi);
    s.pool = std::move(pool);
    s.agent.t = 1;
    s.agent.z = combine(s.pool);
    s.agent.q = 0.0;
    drs_play(s.agent, v.delta, box, generation, options, rng);
    return s;
}

MetaState mansdrs_round(const MetaState& state, const HyperSchedule& schedule, const Feedback& observed,
                        const Box& box, double generation, const DrsOptions& options, double rate, Rng& rng) {
    const std::size_t t = state.agent.t + 1;
    const ScheduleValues v = schedule.at(t);
    MetaState next;
    next.agent.t = t;
    next.agent.q = update_dual(state.agent.q, observed.constraint, v.gamma, v.beta);
    const Eigen::VectorXd direction = estimate_direction(observed.loss, observed.constraint, state.agent.u,
                                                         next.agent.q, state.agent.delta, box.dim());
    next.pool = update_weights(state.pool, SurrogateLoss{direction, state.agent.z}, rate);
    for (std::size_t k = 0; k < next.pool.size(); ++k) {
        next.pool.iterates[k] = expert_step(state.pool.iterates[k], direction, next.pool.step(k, t), box, v.xi);
    }
    next.agent.z = combine(next.pool);
    drs_play(next.agent, v.delta, box, generation, options, rng);
    return next;
}

}  // namespace gridshare
