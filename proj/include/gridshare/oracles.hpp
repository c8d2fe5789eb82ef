#pragma once

#include "gridshare/drs.hpp"
#include "gridshare/network.hpp"

#include <Eigen/Dense>

#include <filesystem>
#include <functional>
#include <span>
#include <vector>

namespace gridshare {

using LossFn = std::function<double(const Eigen::VectorXd&)>;

struct OracleOptions {
    std::size_t grid_points = 201;          // per axis, full grid for dim <= 2 and per coordinate sweep
    std::size_t subgradient_iterations = 500;
    std::size_t max_sweeps = 40;
};

/// Full-information minimizer of a convex loss over the box: exhaustive grid
/// (dim <= 2), projected subgradient descent, then coordinate grid
/// refinement. Throws std::domain_error if the loss is not finite.
Eigen::VectorXd per_round_minimizer(const LossFn& loss, const Box& box, double tol,
                                    const OracleOptions& options = {});

/// Minimizer of the summed losses over the box.
Eigen::VectorXd best_fixed_action(std::span<const LossFn> losses, const Box& box, double tol,
                                  const OracleOptions& options = {});

/// sum_{t>=2} ||u_t - u_{t-1}||_2
double path_length(std::span<const Eigen::VectorXd> sequence);

enum class ComparatorKind { Dynamic, Static, UserSupplied };

struct ComparatorSequence {
    ComparatorKind kind = ComparatorKind::Dynamic;
    std::vector<Eigen::VectorXd> points;  // points[t-1] is the comparator of round t

    double path_length() const { return gridshare::path_length(points); }
};

/// Writes `t,node,coord_index,value` rows, one sequence per node.
void write_comparators_csv(const std::filesystem::path& path, std::span<const ComparatorSequence> per_node);

/// Loss of one agent as a function of its own allocation with every other
/// transfer frozen, summed over the rounds added so far. Each neighborhood
/// slot j contributes -(1/dim) * min(a_t + b_t x_j, 1) per round, with
/// a_t = other inflow / demand and b_t = discount / demand. Evaluation is
/// O(dim log rounds) after finalize().
class FrozenLoss {
public:
    explicit FrozenLoss(std::size_t dim);

    /// `other_inflow[j]`, `demand[j]` and `own_discount[j]` are per slot of
    /// the agent's neighborhood.
    void add_round(std::span<const double> other_inflow, std::span<const double> demand,
                   std::span<const double> own_discount);
    void finalize();

    std::size_t dim() const { return slots_.size(); }
    std::size_t rounds() const { return rounds_; }
    double operator()(const Eigen::VectorXd& x) const;

private:
    struct Term {
        double threshold;  // x at which the slot saturates
        double offset;
        double slope;
    };
    struct Slot {
        std::vector<Term> terms;
        std::vector<double> offset_prefix;
        std::vector<double> slope_prefix;
    };

    std::vector<Slot> slots_;
    std::size_t rounds_ = 0;
    bool finalized_ = false;
};

// ---------------------------------------------------------------------------
// Constant-hyperparameter bandit saddle-point baseline.

/// The closed-form schedule frozen at round max(1, freeze_fraction * T),
/// stationary path length, xi clamped as in HyperSchedule.
HyperSchedule bansap_schedule(const ProblemConstants& c, std::size_t horizon, double freeze_fraction);

/// Same estimator and primal-dual step as drs_round, never adjusted.
AgentState bansap_round(const AgentState& state, const HyperSchedule& constants, const Feedback& observed,
                        const Box& box, double generation, Rng& rng);

}  // namespace gridshare
