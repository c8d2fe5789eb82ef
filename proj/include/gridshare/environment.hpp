#pragma once

#include "gridshare/network.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <vector>

namespace gridshare {

/// Energy that `owner` sends to each member of its closed neighborhood,
/// stored densely in neighborhood order.
struct AllocationVector {
    NodeId owner = 0;
    Eigen::VectorXd values;
};

/// Per-edge transfer efficiency c(i,j) in (0,1]. Unset edges and the
/// diagonal default to 1.
class EdgeDiscounts {
public:
    void set(NodeId i, NodeId j, double c);
    double operator()(NodeId i, NodeId j) const;
    bool empty() const { return factors_.empty(); }

private:
    std::map<std::pair<NodeId, NodeId>, double> factors_;
};

/// Total energy arriving at node j from its closed neighborhood.
double received(const NetworkGraph& g, NodeId j, std::span<const AllocationVector> allocations);
double received_discounted(const NetworkGraph& g, NodeId j, std::span<const AllocationVector> allocations,
                           const EdgeDiscounts& discounts);

/// min(received / demand, 1). Throws std::invalid_argument if demand <= 0.
double satisfaction(const NetworkGraph& g, NodeId i, std::span<const AllocationVector> allocations,
                    double demand);

/// 1 - mean satisfaction over the closed neighborhood of i.
double loss(const NetworkGraph& g, NodeId i, std::span<const AllocationVector> allocations,
            std::span<const double> demands);

/// Same as loss() but each transfer x_k(j) is scaled by c(j,k) on arrival.
double loss_discounted(const NetworkGraph& g, NodeId i, std::span<const AllocationVector> allocations,
                       std::span<const double> demands, const EdgeDiscounts& discounts);

/// Sum of everything node i hands out minus its generation. Positive means
/// the allocation is infeasible.
double constraint(const AllocationVector& allocation, double generation);

enum class GenerationKind { Constant, IidUniform, PiecewiseStationary, DriftingMean };

struct MeanSegment {
    std::size_t start = 1;  // first round (1-based) the means apply to
    std::vector<double> means;
};

struct GenerationSpec {
    GenerationKind kind = GenerationKind::Constant;
    std::vector<double> means;          // constant / iid-uniform / drifting-mean base
    double spread = 0.0;                // uniform noise half-width, relative to the mean
    std::vector<MeanSegment> segments;  // piecewise-stationary, sorted by start
    std::size_t cycle = 0;              // piecewise: pattern repeats every `cycle` rounds (0 = never)
    double drift_amplitude = 0.0;       // drifting-mean: relative amplitude in [0,1]
    double drift_period = 1000.0;
};

/// Stochastic per-node generation d_{i,t}. Samples depend only on
/// (seed, t, node), so rounds may be drawn in any order.
class GenerationProcess {
public:
    GenerationProcess(GenerationSpec spec, std::uint64_t seed);

    std::size_t node_count() const { return nodes_; }
    const GenerationSpec& spec() const { return spec_; }
    double mean(NodeId i, std::size_t t) const;
    std::vector<double> means(std::size_t t) const;
    /// Largest mean node i can ever have.
    double peak_mean(NodeId i) const;
    std::vector<double> sample(std::size_t t) const;

private:
    const MeanSegment& segment_at(std::size_t t) const;

    GenerationSpec spec_;
    std::uint64_t seed_;
    std::size_t nodes_;
};

enum class DemandKind { Balanced, Explicit };

/// Demand l_{i,t}. Balanced splits the expected total generation evenly;
/// explicit reads a `t,node,demand` table and carries each node's last value
/// forward.
class DemandModel {
public:
    static DemandModel balanced(std::size_t nodes);
    static DemandModel constant(std::vector<double> demands);
    static DemandModel from_table(std::size_t nodes, std::map<std::size_t, std::map<NodeId, double>> table);
    static DemandModel from_csv(std::size_t nodes, const std::filesystem::path& path);

    DemandKind kind() const { return kind_; }
    std::vector<double> demands(std::size_t t, const GenerationProcess& generation) const;

private:
    DemandKind kind_ = DemandKind::Balanced;
    std::size_t nodes_ = 0;
    std::vector<std::vector<std::pair<std::size_t, double>>> steps_;  // per node, sorted by t
};

struct RoundSample {
    std::vector<double> generation;
    std::vector<double> demand;
};

struct Environment {
    GenerationProcess generation;
    DemandModel demand;

    RoundSample sample_round(std::size_t t) const;
};

}  // namespace gridshare
