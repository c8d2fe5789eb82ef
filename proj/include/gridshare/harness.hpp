#pragma once

#include "gridshare/config.hpp"
#include "gridshare/drs.hpp"
#include "gridshare/environment.hpp"
#include "gridshare/meta.hpp"
#include "gridshare/network.hpp"
#include "gridshare/oracles.hpp"

#include <Eigen/Dense>

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

namespace gridshare {

/// What one agent did and experienced in one round.
struct AgentRound {
    double loss = 0.0;
    double constraint = 0.0;
    double violation = 0.0;     // max(constraint, 0)
    double satisfaction = 0.0;  // clipped received / demand
    double dual = 0.0;
    double generation = 0.0;
    double demand = 0.0;
    double received = 0.0;      // unclipped inflow (after discounts)
    Eigen::VectorXd allocation; // played allocation over the closed neighborhood
};

struct RoundRecord {
    std::size_t t = 0;
    std::vector<AgentRound> agents;
};

/// Online learner driven by the round loop. `start` yields the round-1
/// action; `respond` receives feedback on the previous action.
class Learner {
public:
    virtual ~Learner() = default;
    virtual Eigen::VectorXd start(double generation) = 0;
    virtual Eigen::VectorXd respond(const Feedback& feedback, double generation) = 0;
    virtual double dual() const = 0;
};

/// Constants and feasible box of one agent, derived from the configuration
/// and overridden where the configuration says so.
struct AgentSetup {
    Box box;
    ProblemConstants constants;
    std::size_t own_slot = 0;
};

std::vector<AgentSetup> derive_agent_setups(const NetworkGraph& graph, const Environment& env,
                                            const RunConfig& config);

std::unique_ptr<Learner> make_learner(const RunConfig& config, const AgentSetup& setup, NodeId node);

/// The DRS learner, with an arbitrary schedule.
std::unique_ptr<Learner> make_drs_learner(const AgentSetup& setup, HyperSchedule schedule, DrsOptions options,
                                          Rng rng);
/// The ensemble learner with an explicit pool and learning rate.
std::unique_ptr<Learner> make_mansdrs_learner(const AgentSetup& setup, ExpertPool pool, HyperSchedule schedule,
                                              DrsOptions options, double rate, Rng rng);

struct NodeSummary {
    double cumulative_loss = 0.0;
    double violation = 0.0;
    double final_ratio = 0.0;     // mean received/demand over the last window
    double baseline_ratio = 0.0;  // same with no sharing (generation/demand)
    std::optional<double> dynamic_regret;
    std::optional<double> static_regret;
    std::optional<double> path_length;
};

struct RunSummary {
    std::string algorithm;
    std::size_t horizon = 0;
    std::uint64_t seed = 0;
    std::vector<NodeSummary> nodes;
    double mean_cumulative_loss = 0.0;  // averaged over nodes
    double total_cumulative_loss = 0.0; // summed over nodes
    double total_violation = 0.0;
    double wall_clock_seconds = 0.0;
};

struct RunResult {
    NetworkGraph graph;
    std::vector<RoundRecord> records;
    RunSummary summary;
    std::vector<ComparatorSequence> dynamic_comparators;  // filled with the oracle
    std::vector<Eigen::VectorXd> best_fixed;              // filled with the oracle
};

/// Simulates config.algorithm.horizon synchronous rounds. Deterministic in
/// (config, seed). Computes the oracle-based metrics when
/// config.output.with_oracle is set. Throws ConfigError on invalid configs.
RunResult run(const RunConfig& config);

/// Same round loop with caller-built learners (one call per node, in order).
using LearnerFactory = std::function<std::unique_ptr<Learner>(const AgentSetup&, NodeId)>;
RunResult run(const RunConfig& config, const LearnerFactory& factory);

/// Builds the environment described by the configuration.
Environment make_environment(const RunConfig& config, std::size_t node_count);
EdgeDiscounts make_discounts(const RunConfig& config);

// ---------------------------------------------------------------------------
// Metrics over recorded rounds.

std::vector<double> cumulative_loss(std::span<const RoundRecord> records);
/// sum_t max(g_{i,t}, 0) per node.
std::vector<double> violation_total(std::span<const RoundRecord> records);

/// Loss node i would have had in `record` had it played `u`, all other
/// allocations unchanged.
double counterfactual_loss(const NetworkGraph& graph, const RoundRecord& record, NodeId i,
                           const Eigen::VectorXd& u, const EdgeDiscounts& discounts = {});

/// sum_t f_t(x_t) - sum_t f_t(u_t) per node. `comparators[i].points` must
/// have one point per record; throws std::invalid_argument otherwise.
std::vector<double> dynamic_regret(const NetworkGraph& graph, std::span<const RoundRecord> records,
                                   std::span<const ComparatorSequence> comparators,
                                   const EdgeDiscounts& discounts = {});
/// dynamic_regret against the constant comparator best_fixed[i].
std::vector<double> static_regret(const NetworkGraph& graph, std::span<const RoundRecord> records,
                                  std::span<const Eigen::VectorXd> best_fixed, const EdgeDiscounts& discounts = {});

/// Node i's loss over `records` as a function of its own allocation.
FrozenLoss frozen_loss(const NetworkGraph& graph, std::span<const RoundRecord> records, NodeId i,
                       const EdgeDiscounts& discounts = {});

std::vector<ComparatorSequence> dynamic_comparators(const NetworkGraph& graph, std::span<const RoundRecord> records,
                                                    std::span<const AgentSetup> setups, double tol,
                                                    const EdgeDiscounts& discounts = {});
std::vector<Eigen::VectorXd> best_fixed_actions(const NetworkGraph& graph, std::span<const RoundRecord> records,
                                                std::span<const AgentSetup> setups, double tol,
                                                const EdgeDiscounts& discounts = {});

struct SatisfactionRatio {
    double ratio = 0.0;     // mean received/demand, unclipped
    double baseline = 0.0;  // mean generation/demand (keep everything)
};

/// Per-node ratios averaged over the last `window` rounds (window clipped to
/// the number of records).
std::vector<SatisfactionRatio> satisfaction_report(std::span<const RoundRecord> records, std::size_t window);

/// Population variance.
double variance(std::span<const double> values);

}  // namespace gridshare
