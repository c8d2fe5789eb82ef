#include "gridshare/drs.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <set>
#include <stdexcept>

namespace gridshare {

Box Box::uniform(std::size_t dim, double upper_bound) {
    if (dim == 0) throw std::invalid_argument("box dimension must be positive");
    if (!(upper_bound > 0.0)) throw std::invalid_argument("box upper bound must be positive");
    return Box{Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim)),
               Eigen::VectorXd::Constant(static_cast<Eigen::Index>(dim), upper_bound)};
}

Box Box::shrunk(double xi) const {
    if (!(xi >= 0.0 && xi < 1.0)) throw std::invalid_argument("shrinkage must lie in [0,1)");
    const Eigen::VectorXd c = center();
    const Eigen::VectorXd half = 0.5 * (1.0 - xi) * (upper - lower);
    return Box{c - half, c + half};
}

bool Box::contains(const Eigen::VectorXd& p, double tol) const {
    if (p.size() != lower.size()) return false;
    return ((p.array() >= lower.array() - tol) && (p.array() <= upper.array() + tol)).all();
}

Eigen::VectorXd project_shrunk(const Eigen::VectorXd& p, const Box& box, double xi) {
    const Box inner = box.shrunk(xi);
    if (p.size() != inner.lower.size()) throw std::invalid_argument("projection: dimension mismatch");
    return p.cwiseMax(inner.lower).cwiseMin(inner.upper);
}

Eigen::VectorXd sample_unit_vector(std::size_t dim, Rng& rng) {
    if (dim == 0) throw std::invalid_argument("unit vector dimension must be positive");
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd v(static_cast<Eigen::Index>(dim));
    double norm = 0.0;
    do {
        for (Eigen::Index k = 0; k < v.size(); ++k) v[k] = normal(rng);
        norm = v.norm();
    } while (norm == 0.0);
    return v / norm;
}

Eigen::VectorXd estimate_direction(double f_val, double g_val, const Eigen::VectorXd& u, double q,
                                   double delta, std::size_t dim) {
    if (!(delta > 0.0)) throw std::invalid_argument("estimate_direction: delta must be positive");
    return (static_cast<double>(dim) / delta) * (f_val + g_val * q) * u;
}

Eigen::VectorXd update_primal(const Eigen::VectorXd& z, const Eigen::VectorXd& direction, double eta,
                              const Box& box, double xi) {
    return project_shrunk(z - eta * direction, box, xi);
}

double update_dual(double q, double g_val, double gamma, double beta) {
    return std::max(0.0, q + gamma * (g_val - beta * q));
}

Eigen::VectorXd adjust_allocation(const Eigen::VectorXd& x, double generation, AdjustMode mode,
                                  std::size_t own_slot) {
    if (generation < 0.0) throw std::invalid_argument("adjust_allocation: generation must be >= 0");
    const double total = x.sum();
    if (total <= generation) return x;
    Eigen::VectorXd out = x;
    if (mode == AdjustMode::Proportional) {
        out *= generation / total;
        // the scaled sum can overshoot `generation` by a few ulps; take the residue off the largest entry
        Eigen::Index big = 0;
        out.maxCoeff(&big);
        for (double excess = out.sum() - generation; excess > 0.0; excess = out.sum() - generation) {
            const double lowered = std::max(0.0, out[big] - excess);
            out[big] = lowered < out[big] ? lowered : std::nextafter(out[big], 0.0);
        }
    } else {
        if (own_slot >= static_cast<std::size_t>(x.size())) throw std::invalid_argument("own_slot out of range");
        const auto k = static_cast<Eigen::Index>(own_slot);
        out[k] = x[k] / total * generation;
    }
    return out;
}

void ProblemConstants::validate() const {
    if (!(neighbor_count > 0.0 && loss_bound > 0.0 && constraint_bound > 0.0 && lipschitz > 0.0 &&
          outer_radius > 0.0 && inner_radius > 0.0) ||
        dim == 0) {
        throw std::invalid_argument("problem constants must all be positive");
    }
}

ScheduleValues schedule_closed_form(double t, const ProblemConstants& c, double path_length) {
    if (!(t >= 1.0)) throw std::invalid_argument("schedule: t must be >= 1");
    if (path_length < 0.0) throw std::invalid_argument("schedule: path length must be >= 0");
    c.validate();
    const double lt = c.lipschitz_tilde();
    const double nf = c.neighbor_count * c.loss_bound;
    const double R = c.outer_radius;
    const double ratio = (R * R / 2.0 + R * path_length) / t;
    ScheduleValues v;
    v.delta = std::sqrt(nf / lt) * std::pow(ratio, 0.25);
    v.eta = std::sqrt(1.0 / (nf * lt)) * std::pow(ratio, 0.75);
    v.beta = 1.0 / (c.constraint_bound * std::sqrt(t));
    v.gamma = 1.0 / (c.constraint_bound * c.constraint_bound * std::sqrt(t));
    v.xi = v.delta / c.inner_radius;
    return v;
}

HyperSchedule::HyperSchedule(std::string name, Fn fn, double inner_radius)
    : name_(std::move(name)), fn_(std::move(fn)), inner_radius_(inner_radius),
      warned_(std::make_shared<bool>(false)) {
    if (!(inner_radius_ > 0.0)) throw std::invalid_argument("schedule: inner radius must be positive");
}

ScheduleValues HyperSchedule::at(std::size_t t) const {
    ScheduleValues v = fn_(t);
    if (v.xi >= 1.0) {
        // every agent carries its own schedule; one line per schedule kind is enough
        static std::set<std::string> reported;
        if (!*warned_ && reported.insert(name_).second) {
            std::clog << "warning: schedule '" << name_ << "' gives xi=" << v.xi << " >= 1 at t=" << t
                      << "; clamping xi to 0.5\n";
        }
        *warned_ = true;
        v.xi = 0.5;
        v.delta = 0.5 * inner_radius_;
    }
    return v;
}

HyperSchedule HyperSchedule::closed_form(const ProblemConstants& c, double path_length) {
    c.validate();
    return HyperSchedule(path_length > 0.0 ? "tracking" : "stationary",
                         [c, path_length](std::size_t t) {
                             return schedule_closed_form(static_cast<double>(t), c, path_length);
                         },
                         c.inner_radius);
}

HyperSchedule HyperSchedule::constant(ScheduleValues values, double inner_radius) {
    return HyperSchedule("constant", [values](std::size_t) { return values; }, inner_radius);
}

void drs_play(AgentState& state, double delta, const Box& box, double generation, const DrsOptions& options,
              Rng& rng) {
    state.u = sample_unit_vector(box.dim(), rng);
    state.delta = delta;
    state.x = (state.z + delta * state.u).cwiseMax(box.lower).cwiseMin(box.upper);
    state.x_played = options.adjust
                         ? adjust_allocation(state.x, generation, options.adjust_mode, options.own_slot)
                         : state.x;
}

AgentState drs_initialize(const Eigen::VectorXd& start, const HyperSchedule& schedule, const Box& box,
                          double generation, const DrsOptions& options, Rng& rng) {
    const ScheduleValues v = schedule.at(1);
    AgentState s;
    s.t = 1;
    s.z = project_shrunk(start, box, v.xi);
    s.q = 0.0;
    drs_play(s, v.delta, box, generation, options, rng);
    return s;
}

AgentState drs_round(const AgentState& state, const HyperSchedule& schedule, const Feedback& observed,
                     const Box& box, double generation, const DrsOptions& options, Rng& rng) {
    const std::size_t t = state.t + 1;
    const ScheduleValues v = schedule.at(t);
    AgentState next;
    next.t = t;
    next.q = update_dual(state.q, observed.constraint, v.gamma, v.beta);
    const Eigen::VectorXd direction =
        estimate_direction(observed.loss, observed.constraint, state.u, next.q, state.delta, box.dim());
    next.z = update_primal(state.z, direction, v.eta, box, v.xi);
    drs_play(next, v.delta, box, generation, options, rng);
    return next;
}

}  // namespace gridshare
