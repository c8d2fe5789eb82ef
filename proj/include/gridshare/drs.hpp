#pragma once

#include "gridshare/random.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <memory>
#include <string>

namespace gridshare {

/// Axis-aligned feasible set [lower, upper] of one agent.
struct Box {
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;

    static Box uniform(std::size_t dim, double upper_bound);

    std::size_t dim() const { return static_cast<std::size_t>(lower.size()); }
    Eigen::VectorXd center() const { return 0.5 * (lower + upper); }
    /// The box scaled by (1 - xi) about its center.
    Box shrunk(double xi) const;
    bool contains(const Eigen::VectorXd& p, double tol = 0.0) const;
};

/// Euclidean projection onto (1 - xi) * box (scaled about the center).
/// Throws std::invalid_argument unless 0 <= xi < 1.
Eigen::VectorXd project_shrunk(const Eigen::VectorXd& p, const Box& box, double xi);

/// Uniform direction on the unit sphere in R^dim (normalized Gaussian).
Eigen::VectorXd sample_unit_vector(std::size_t dim, Rng& rng);

/// One-point bandit estimate of the Lagrangian gradient:
/// (dim / delta) * (f + g * q) * u.
Eigen::VectorXd estimate_direction(double f_val, double g_val, const Eigen::VectorXd& u, double q,
                                   double delta, std::size_t dim);

/// project_shrunk(z - eta * direction, box, xi)
Eigen::VectorXd update_primal(const Eigen::VectorXd& z, const Eigen::VectorXd& direction, double eta,
                              const Box& box, double xi);

/// max(0, q + gamma * (g - beta * q))
double update_dual(double q, double g_val, double gamma, double beta);

enum class AdjustMode {
    Proportional,      // rescale the whole vector so the total equals generation
    SingleCoordinate,  // rescale only the owner's own entry, as literally printed
};

/// Returns x unchanged when sum(x) <= generation, otherwise shrinks it.
/// In proportional mode the result sums to exactly `generation`.
/// `own_slot` is the owner's index in its neighborhood (single-coordinate mode).
Eigen::VectorXd adjust_allocation(const Eigen::VectorXd& x, double generation,
                                  AdjustMode mode = AdjustMode::Proportional, std::size_t own_slot = 0);

struct ScheduleValues {
    double delta = 0.0;  // perturbation radius
    double eta = 0.0;    // primal step
    double beta = 0.0;   // dual regularization
    double gamma = 0.0;  // dual step
    double xi = 0.0;     // shrinkage of the feasible box
};

/// Problem constants of one agent used by the step-size formulas.
struct ProblemConstants {
    double neighbor_count = 1.0;  // |N_i|, excluding the agent itself
    std::size_t dim = 1;          // |N_i| + 1
    double loss_bound = 1.0;      // F_i
    double constraint_bound = 1.0;  // G_i
    double lipschitz = 1.0;       // L
    double outer_radius = 1.0;    // R_i
    double inner_radius = 1.0;    // r_i

    /// 3L + L R / r
    double lipschitz_tilde() const { return 3.0 * lipschitz + lipschitz * outer_radius / inner_radius; }
    void validate() const;
};

/// Closed-form schedule with path-length estimate `path_length`; a zero path
/// length gives the stationary (static-regret) schedule. No clamping.
ScheduleValues schedule_closed_form(double t, const ProblemConstants& c, double path_length);

/// Hyperparameters as a function of the round index.
class HyperSchedule {
public:
    using Fn = std::function<ScheduleValues(std::size_t)>;

    HyperSchedule(std::string name, Fn fn, double inner_radius);

    /// Values for round t; xi >= 1 is clamped to 0.5 (and delta to 0.5 r) with
    /// a warning on std::clog, printed once per schedule name per process.
    ScheduleValues at(std::size_t t) const;
    ScheduleValues raw(std::size_t t) const { return fn_(t); }
    const std::string& name() const { return name_; }
    bool clamped_once() const { return *warned_; }

    static HyperSchedule closed_form(const ProblemConstants& c, double path_length);
    static HyperSchedule constant(ScheduleValues values, double inner_radius);

private:
    std::string name_;
    Fn fn_;
    double inner_radius_;
    std::shared_ptr<bool> warned_;
};

struct DrsOptions {
    bool adjust = false;
    AdjustMode adjust_mode = AdjustMode::Proportional;
    std::size_t own_slot = 0;
};

/// Per-agent learner state.
struct AgentState {
    std::size_t t = 0;           // round of the current action
    Eigen::VectorXd z;           // primal iterate in the shrunk box
    Eigen::VectorXd u;           // perturbation direction of the current action
    double delta = 0.0;          // perturbation radius of the current action
    Eigen::VectorXd x;           // z + delta * u
    Eigen::VectorXd x_played;    // x after the optional adjustment
    double q = 0.0;              // dual variable
};

/// Loss and constraint value of the previously played action.
struct Feedback {
    double loss = 0.0;
    double constraint = 0.0;
};

/// Round-1 state: z at `start` projected into the shrunk box, random u.
AgentState drs_initialize(const Eigen::VectorXd& start, const HyperSchedule& schedule, const Box& box,
                          double generation, const DrsOptions& options, Rng& rng);

/// Turns a primal iterate into the action: perturb, clamp rounding noise into
/// the box, then adjust if enabled.
void drs_play(AgentState& state, double delta, const Box& box, double generation, const DrsOptions& options,
              Rng& rng);

/// One round t >= 2 given feedback on the action of round t-1: dual update,
/// gradient estimate with the fresh dual, primal step, new perturbed action.
AgentState drs_round(const AgentState& state, const HyperSchedule& schedule, const Feedback& observed,
                     const Box& box, double generation, const DrsOptions& options, Rng& rng);

}  // namespace gridshare
