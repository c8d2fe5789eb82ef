#include "gridshare/environment.hpp"

#include "gridshare/random.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>

namespace gridshare {

void EdgeDiscounts::set(NodeId i, NodeId j, double c) {
    if (!(c > 0.0 && c <= 1.0)) {
        throw std::invalid_argument("discount factor must lie in (0,1], got " + std::to_string(c));
    }
    if (i == j && c != 1.0) throw std::invalid_argument("discount factor c(i,i) must be 1");
    factors_[{std::min(i, j), std::max(i, j)}] = c;
}

double EdgeDiscounts::operator()(NodeId i, NodeId j) const {
    if (i == j) return 1.0;
    auto it = factors_.find({std::min(i, j), std::max(i, j)});
    return it == factors_.end() ? 1.0 : it->second;
}

namespace {

double inflow(const NetworkGraph& g, NodeId j, std::span<const AllocationVector> allocations,
              const EdgeDiscounts* discounts) {
    double total = 0.0;
    for (NodeId k : g.neighborhood(j).members) {
        const AllocationVector& a = allocations[k];
        const auto slot = g.neighborhood(k).slot_of(j);
        const double amount = a.values[static_cast<Eigen::Index>(*slot)];
        total += discounts ? (*discounts)(j, k) * amount : amount;
    }
    return total;
}

double clipped_ratio(double amount, double demand) {
    if (!(demand > 0.0)) throw std::invalid_argument("demand must be positive");
    return std::min(amount / demand, 1.0);
}

double neighborhood_loss(const NetworkGraph& g, NodeId i, std::span<const AllocationVector> allocations,
                         std::span<const double> demands, const EdgeDiscounts* discounts) {
    const Neighborhood& nb = g.neighborhood(i);
    double sum = 0.0;
    for (NodeId j : nb.members) sum += clipped_ratio(inflow(g, j, allocations, discounts), demands[j]);
    return 1.0 - sum / static_cast<double>(nb.local_dim());
}

}  // namespace

double received(const NetworkGraph& g, NodeId j, std::span<const AllocationVector> allocations) {
    return inflow(g, j, allocations, nullptr);
}

double received_discounted(const NetworkGraph& g, NodeId j, std::span<const AllocationVector> allocations,
                           const EdgeDiscounts& discounts) {
    return inflow(g, j, allocations, &discounts);
}

double satisfaction(const NetworkGraph& g, NodeId i, std::span<const AllocationVector> allocations,
                    double demand) {
    return clipped_ratio(received(g, i, allocations), demand);
}

double loss(const NetworkGraph& g, NodeId i, std::span<const AllocationVector> allocations,
            std::span<const double> demands) {
    return neighborhood_loss(g, i, allocations, demands, nullptr);
}

double loss_discounted(const NetworkGraph& g, NodeId i, std::span<const AllocationVector> allocations,
                       std::span<const double> demands, const EdgeDiscounts& discounts) {
    return neighborhood_loss(g, i, allocations, demands, &discounts);
}

double constraint(const AllocationVector& allocation, double generation) {
    return allocation.values.sum() - generation;
}

// ---------------------------------------------------------------------------

GenerationProcess::GenerationProcess(GenerationSpec spec, std::uint64_t seed)
    : spec_(std::move(spec)), seed_(seed), nodes_(0) {
    if (spec_.spread < 0.0 || spec_.spread > 1.0) {
        throw std::invalid_argument("generation spread must lie in [0,1]");
    }
    switch (spec_.kind) {
    case GenerationKind::Constant:
    case GenerationKind::IidUniform:
    case GenerationKind::DriftingMean:
        nodes_ = spec_.means.size();
        break;
    case GenerationKind::PiecewiseStationary:
        if (spec_.segments.empty()) throw std::invalid_argument("piecewise generation needs >= 1 segment");
        std::sort(spec_.segments.begin(), spec_.segments.end(),
                  [](const MeanSegment& a, const MeanSegment& b) { return a.start < b.start; });
        if (spec_.segments.front().start != 1) {
            throw std::invalid_argument("first generation segment must start at t=1");
        }
        nodes_ = spec_.segments.front().means.size();
        for (const auto& s : spec_.segments) {
            if (s.means.size() != nodes_) throw std::invalid_argument("segment mean vectors differ in length");
            for (double m : s.means)
                if (!(m >= 0.0)) throw std::invalid_argument("generation means must be >= 0");
        }
        break;
    }
    if (nodes_ == 0) throw std::invalid_argument("generation process has no nodes");
    for (double m : spec_.means)
        if (!(m >= 0.0)) throw std::invalid_argument("generation means must be >= 0");
    if (spec_.kind == GenerationKind::DriftingMean) {
        if (spec_.drift_amplitude < 0.0 || spec_.drift_amplitude > 1.0)
            throw std::invalid_argument("drift amplitude must lie in [0,1]");
        if (!(spec_.drift_period > 0.0)) throw std::invalid_argument("drift period must be positive");
    }
}

const MeanSegment& GenerationProcess::segment_at(std::size_t t) const {
    std::size_t tt = t;
    if (spec_.cycle > 0) tt = (t - 1) % spec_.cycle + 1;
    auto it = std::upper_bound(spec_.segments.begin(), spec_.segments.end(), tt,
                               [](std::size_t v, const MeanSegment& s) { return v < s.start; });
    return *std::prev(it);
}

double GenerationProcess::mean(NodeId i, std::size_t t) const {
    if (i >= nodes_) throw std::out_of_range("generation: node out of range");
    switch (spec_.kind) {
    case GenerationKind::Constant:
    case GenerationKind::IidUniform:
        return spec_.means[i];
    case GenerationKind::PiecewiseStationary:
        return segment_at(t).means[i];
    case GenerationKind::DriftingMean: {
        const double phase = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(nodes_);
        const double angle = 2.0 * std::numbers::pi * static_cast<double>(t) / spec_.drift_period + phase;
        return std::max(0.0, spec_.means[i] * (1.0 + spec_.drift_amplitude * std::sin(angle)));
    }
    }
    return 0.0;
}

std::vector<double> GenerationProcess::means(std::size_t t) const {
    std::vector<double> out(nodes_);
    for (NodeId i = 0; i < nodes_; ++i) out[i] = mean(i, t);
    return out;
}

double GenerationProcess::peak_mean(NodeId i) const {
    if (i >= nodes_) throw std::out_of_range("generation: node out of range");
    switch (spec_.kind) {
    case GenerationKind::PiecewiseStationary: {
        double peak = 0.0;
        for (const auto& s : spec_.segments) peak = std::max(peak, s.means[i]);
        return peak;
    }
    case GenerationKind::DriftingMean:
        return spec_.means[i] * (1.0 + spec_.drift_amplitude);
    default:
        return spec_.means[i];
    }
}

std::vector<double> GenerationProcess::sample(std::size_t t) const {
    std::vector<double> out = means(t);
    if (spec_.kind == GenerationKind::Constant || spec_.spread == 0.0) return out;
    for (NodeId i = 0; i < nodes_; ++i) {
        Rng rng(derive_seed({seed_, static_cast<std::uint64_t>(StreamTag::Generation), t, i}));
        std::uniform_real_distribution<double> unit(-1.0, 1.0);
        out[i] = std::max(0.0, out[i] * (1.0 + spec_.spread * unit(rng)));
    }
    return out;
}

// ---------------------------------------------------------------------------

DemandModel DemandModel::balanced(std::size_t nodes) {
    DemandModel m;
    m.kind_ = DemandKind::Balanced;
    m.nodes_ = nodes;
    return m;
}

DemandModel DemandModel::constant(std::vector<double> demands) {
    std::map<std::size_t, std::map<NodeId, double>> table;
    for (NodeId i = 0; i < demands.size(); ++i) table[1][i] = demands[i];
    return from_table(demands.size(), std::move(table));
}

DemandModel DemandModel::from_table(std::size_t nodes, std::map<std::size_t, std::map<NodeId, double>> table) {
    DemandModel m;
    m.kind_ = DemandKind::Explicit;
    m.nodes_ = nodes;
    m.steps_.assign(nodes, {});
    for (const auto& [t, row] : table) {
        if (t == 0) throw std::invalid_argument("demand rounds are 1-based");
        for (const auto& [node, value] : row) {
            if (node >= nodes) throw std::invalid_argument("demand row references unknown node " + std::to_string(node));
            if (!(value > 0.0)) throw std::invalid_argument("demand must be positive");
            m.steps_[node].emplace_back(t, value);
        }
    }
    for (NodeId i = 0; i < nodes; ++i) {
        if (m.steps_[i].empty() || m.steps_[i].front().first != 1) {
            throw std::invalid_argument("explicit demand must define node " + std::to_string(i) + " at t=1");
        }
    }
    return m;
}

DemandModel DemandModel::from_csv(std::size_t nodes, const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line) || line.rfind("t,node,demand", 0) != 0) {
        throw std::invalid_argument(path.string() + ": expected header 't,node,demand'");
    }
    std::map<std::size_t, std::map<NodeId, double>> table;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        std::stringstream ss(line);
        std::string t_s, n_s, d_s;
        if (!std::getline(ss, t_s, ',') || !std::getline(ss, n_s, ',') || !std::getline(ss, d_s)) {
            throw std::invalid_argument(path.string() + ":" + std::to_string(lineno) + ": expected 3 fields");
        }
        try {
            table[std::stoull(t_s)][std::stoull(n_s)] = std::stod(d_s);
        } catch (const std::logic_error&) {
            throw std::invalid_argument(path.string() + ":" + std::to_string(lineno) + ": malformed number");
        }
    }
    return from_table(nodes, std::move(table));
}

std::vector<double> DemandModel::demands(std::size_t t, const GenerationProcess& generation) const {
    if (kind_ == DemandKind::Balanced) {
        const auto mu = generation.means(t);
        const double share = std::accumulate(mu.begin(), mu.end(), 0.0) / static_cast<double>(mu.size());
        if (!(share > 0.0)) throw std::invalid_argument("balanced demand needs positive total generation");
        return std::vector<double>(mu.size(), share);
    }
    std::vector<double> out(nodes_);
    for (NodeId i = 0; i < nodes_; ++i) {
        const auto& steps = steps_[i];
        auto it = std::upper_bound(steps.begin(), steps.end(), t,
                                   [](std::size_t v, const auto& s) { return v < s.first; });
        out[i] = std::prev(it)->second;
    }
    return out;
}

RoundSample Environment::sample_round(std::size_t t) const {
    if (t == 0) throw std::invalid_argument("rounds are 1-based");
    return RoundSample{generation.sample(t), demand.demands(t, generation)};
}

}  // namespace gridshare
