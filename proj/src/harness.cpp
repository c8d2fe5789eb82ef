#include "gridshare/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace gridshare {

namespace {

class DrsLearner final : public Learner {
public:
    DrsLearner(const AgentSetup& setup, HyperSchedule schedule, DrsOptions options, Rng rng)
        : box_(setup.box), schedule_(std::move(schedule)), options_(options), rng_(rng) {}

    Eigen::VectorXd start(double generation) override {
        state_ = drs_initialize(box_.center(), schedule_, box_, generation, options_, rng_);
        return state_.x_played;
    }

    Eigen::VectorXd respond(const Feedback& feedback, double generation) override {
        state_ = drs_round(state_, schedule_, feedback, box_, generation, options_, rng_);
        return state_.x_played;
    }

    double dual() const override { return state_.q; }

private:
    Box box_;
    HyperSchedule schedule_;
    DrsOptions options_;
    Rng rng_;
    AgentState state_;
};

class MetaLearner final : public Learner {
public:
    MetaLearner(const AgentSetup& setup, ExpertPool pool, HyperSchedule schedule, DrsOptions options, double rate,
                Rng rng)
        : box_(setup.box), pool_(std::move(pool)), schedule_(std::move(schedule)), options_(options), rate_(rate),
          rng_(rng) {}

    Eigen::VectorXd start(double generation) override {
        state_ = mansdrs_initialize(pool_, schedule_, box_, generation, options_, rng_);
        return state_.agent.x_played;
    }

    Eigen::VectorXd respond(const Feedback& feedback, double generation) override {
        state_ = mansdrs_round(state_, schedule_, feedback, box_, generation, options_, rate_, rng_);
        return state_.agent.x_played;
    }

    double dual() const override { return state_.agent.q; }

private:
    Box box_;
    ExpertPool pool_;
    HyperSchedule schedule_;
    DrsOptions options_;
    double rate_;
    Rng rng_;
    MetaState state_;
};

std::vector<AllocationVector> allocations_of(const RoundRecord& record) {
    std::vector<AllocationVector> out(record.agents.size());
    for (NodeId i = 0; i < out.size(); ++i) out[i] = AllocationVector{i, record.agents[i].allocation};
    return out;
}

std::vector<double> demands_of(const RoundRecord& record) {
    std::vector<double> out(record.agents.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = record.agents[i].demand;
    return out;
}

double evaluate_loss(const NetworkGraph& g, NodeId i, std::span<const AllocationVector> allocations,
                     std::span<const double> demands, const EdgeDiscounts& discounts) {
    return discounts.empty() ? loss(g, i, allocations, demands) : loss_discounted(g, i, allocations, demands, discounts);
}

}  // namespace

Environment make_environment(const RunConfig& config, std::size_t node_count) {
    GenerationProcess generation(config.generation, config.algorithm.seed);
    DemandModel demand = DemandModel::balanced(node_count);
    if (config.demand.kind == DemandKind::Explicit) {
        demand = config.demand.file ? DemandModel::from_csv(node_count, *config.demand.file)
                                    : DemandModel::constant(config.demand.values);
    }
    return Environment{std::move(generation), std::move(demand)};
}

EdgeDiscounts make_discounts(const RunConfig& config) {
    EdgeDiscounts d;
    for (const auto& s : config.discounts) d.set(s.i, s.j, s.factor);
    return d;
}

std::vector<AgentSetup> derive_agent_setups(const NetworkGraph& graph, const Environment& env,
                                            const RunConfig& config) {
    const std::size_t n = graph.node_count();
    const auto& over = config.constants;
    double min_demand = std::numeric_limits<double>::infinity();
    if (!over.lipschitz) {
        for (std::size_t t = 1; t <= config.algorithm.horizon; ++t) {
            const auto l = env.demand.demands(t, env.generation);
            min_demand = std::min(min_demand, *std::min_element(l.begin(), l.end()));
        }
    }
    std::vector<AgentSetup> setups(n);
    for (NodeId i = 0; i < n; ++i) {
        const Neighborhood& nb = graph.neighborhood(i);
        const std::size_t dim = nb.local_dim();
        double x_max = env.generation.peak_mean(i);
        if (over.box_upper) x_max = over.box_upper->size() == 1 ? over.box_upper->front() : (*over.box_upper)[i];
        const double peak_generation = env.generation.peak_mean(i) * (1.0 + env.generation.spec().spread);

        AgentSetup& s = setups[i];
        s.box = Box::uniform(dim, x_max);
        s.own_slot = *nb.slot_of(i);
        ProblemConstants& c = s.constants;
        c.dim = dim;
        // isolated agents still need a positive neighbor count in the step-size formulas
        c.neighbor_count = static_cast<double>(std::max<std::size_t>(graph.degree(i), 1));
        c.loss_bound = over.loss_bound.value_or(1.0);
        c.constraint_bound = over.constraint_bound.value_or(static_cast<double>(dim) * x_max + peak_generation);
        c.lipschitz = over.lipschitz.value_or(1.0 / min_demand);
        c.outer_radius = over.outer_radius.value_or(x_max * std::sqrt(static_cast<double>(dim)));
        c.inner_radius = over.inner_radius.value_or(x_max / 2.0);
        c.validate();
    }
    return setups;
}

std::unique_ptr<Learner> make_drs_learner(const AgentSetup& setup, HyperSchedule schedule, DrsOptions options,
                                          Rng rng) {
    return std::make_unique<DrsLearner>(setup, std::move(schedule), options, rng);
}

std::unique_ptr<Learner> make_mansdrs_learner(const AgentSetup& setup, ExpertPool pool, HyperSchedule schedule,
                                              DrsOptions options, double rate, Rng rng) {
    return std::make_unique<MetaLearner>(setup, std::move(pool), std::move(schedule), options, rate, rng);
}

std::unique_ptr<Learner> make_learner(const RunConfig& config, const AgentSetup& setup, NodeId node) {
    const auto& a = config.algorithm;
    Rng rng(derive_seed({a.seed, static_cast<std::uint64_t>(StreamTag::Agent), node}));
    DrsOptions options{uses_adjustment(a.algorithm), a.adjust_mode, setup.own_slot};
    switch (a.algorithm) {
    case Algorithm::Drs:
    case Algorithm::DrsAdjusted:
        return make_drs_learner(setup, HyperSchedule::closed_form(setup.constants, a.path_length), options, rng);
    case Algorithm::BanSaP:
        return make_drs_learner(setup, bansap_schedule(setup.constants, a.horizon, a.bansap_freeze), DrsOptions{},
                                rng);
    case Algorithm::MaNsdrs:
    case Algorithm::MaNsdrsAdjusted: {
        const Eigen::VectorXd start = setup.box.center();
        ExpertPool pool = a.experts ? build_pool_of_size(*a.experts, setup.constants, start)
                                    : build_pool(a.horizon, setup.constants, start);
        const double rate = a.meta_rate.value_or(meta_rate(a.horizon, setup.constants));
        return make_mansdrs_learner(setup, std::move(pool), meta_schedule(setup.constants, a.horizon, a.constant_delta),
                                    options, rate, rng);
    }
    }
    throw std::logic_error("unhandled algorithm");
}

RunResult run(const RunConfig& config) {
    return run(config, [&config](const AgentSetup& setup, NodeId i) { return make_learner(config, setup, i); });
}

RunResult run(const RunConfig& config, const LearnerFactory& factory) {
    validate(config);
    const auto started = std::chrono::steady_clock::now();
    NetworkGraph graph = config.graph.build();
    const std::size_t n = graph.node_count();
    const Environment env = make_environment(config, n);
    const EdgeDiscounts discounts = make_discounts(config);
    const std::vector<AgentSetup> setups = derive_agent_setups(graph, env, config);

    std::vector<std::unique_ptr<Learner>> learners;
    for (NodeId i = 0; i < n; ++i) learners.push_back(factory(setups[i], i));

    const std::size_t T = config.algorithm.horizon;
    RunResult result{graph, {}, {}, {}, {}};
    result.records.reserve(T);
    std::vector<AllocationVector> allocations(n);
    std::vector<Feedback> feedback(n);
    for (std::size_t t = 1; t <= T; ++t) {
        const RoundSample sample = env.sample_round(t);
        for (NodeId i = 0; i < n; ++i) {
            allocations[i].owner = i;
            allocations[i].values = t == 1 ? learners[i]->start(sample.generation[i])
                                           : learners[i]->respond(feedback[i], sample.generation[i]);
        }
        RoundRecord record;
        record.t = t;
        record.agents.resize(n);
        for (NodeId i = 0; i < n; ++i) {
            AgentRound& r = record.agents[i];
            r.allocation = allocations[i].values;
            r.generation = sample.generation[i];
            r.demand = sample.demand[i];
            r.received = discounts.empty() ? received(graph, i, allocations)
                                           : received_discounted(graph, i, allocations, discounts);
            r.satisfaction = std::min(r.received / r.demand, 1.0);
            r.loss = evaluate_loss(graph, i, allocations, sample.demand, discounts);
            r.constraint = constraint(allocations[i], sample.generation[i]);
            r.violation = std::max(r.constraint, 0.0);
            r.dual = learners[i]->dual();
            feedback[i] = Feedback{r.loss, r.constraint};
        }
        result.records.push_back(std::move(record));
    }

    RunSummary& summary = result.summary;
    summary.algorithm = std::string(to_string(config.algorithm.algorithm));
    summary.horizon = T;
    summary.seed = config.algorithm.seed;
    const auto losses = cumulative_loss(result.records);
    const auto violations = violation_total(result.records);
    const auto ratios = satisfaction_report(result.records, config.output.satisfaction_window);
    summary.nodes.resize(n);
    for (NodeId i = 0; i < n; ++i) {
        summary.nodes[i].cumulative_loss = losses[i];
        summary.nodes[i].violation = violations[i];
        summary.nodes[i].final_ratio = ratios[i].ratio;
        summary.nodes[i].baseline_ratio = ratios[i].baseline;
    }
    summary.total_cumulative_loss = std::accumulate(losses.begin(), losses.end(), 0.0);
    summary.mean_cumulative_loss = summary.total_cumulative_loss / static_cast<double>(n);
    summary.total_violation = std::accumulate(violations.begin(), violations.end(), 0.0);

    if (config.output.with_oracle) {
        const double tol = config.output.oracle_tolerance;
        result.dynamic_comparators = dynamic_comparators(graph, result.records, setups, tol, discounts);
        result.best_fixed = best_fixed_actions(graph, result.records, setups, tol, discounts);
        const auto dyn = dynamic_regret(graph, result.records, result.dynamic_comparators, discounts);
        const auto stat = static_regret(graph, result.records, result.best_fixed, discounts);
        for (NodeId i = 0; i < n; ++i) {
            summary.nodes[i].dynamic_regret = dyn[i];
            summary.nodes[i].static_regret = stat[i];
            summary.nodes[i].path_length = result.dynamic_comparators[i].path_length();
        }
    }
    summary.wall_clock_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return result;
}

// ---------------------------------------------------------------------------

std::vector<double> cumulative_loss(std::span<const RoundRecord> records) {
    std::vector<double> out(records.empty() ? 0 : records.front().agents.size(), 0.0);
    for (const auto& rec : records)
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += rec.agents[i].loss;
    return out;
}

std::vector<double> violation_total(std::span<const RoundRecord> records) {
    std::vector<double> out(records.empty() ? 0 : records.front().agents.size(), 0.0);
    for (const auto& rec : records)
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += std::max(rec.agents[i].constraint, 0.0);
    return out;
}

double counterfactual_loss(const NetworkGraph& graph, const RoundRecord& record, NodeId i, const Eigen::VectorXd& u,
                           const EdgeDiscounts& discounts) {
    auto allocations = allocations_of(record);
    allocations.at(i).values = u;
    const auto demands = demands_of(record);
    return evaluate_loss(graph, i, allocations, demands, discounts);
}

std::vector<double> dynamic_regret(const NetworkGraph& graph, std::span<const RoundRecord> records,
                                   std::span<const ComparatorSequence> comparators, const EdgeDiscounts& discounts) {
    const std::size_t n = graph.node_count();
    if (comparators.size() != n) throw std::invalid_argument("dynamic_regret: need one comparator sequence per node");
    for (const auto& c : comparators) {
        if (c.points.size() != records.size()) {
            throw std::invalid_argument("dynamic_regret: comparator length " + std::to_string(c.points.size()) +
                                        " != horizon " + std::to_string(records.size()));
        }
    }
    std::vector<double> played(n, 0.0), reference(n, 0.0);
    for (std::size_t t = 0; t < records.size(); ++t) {
        auto allocations = allocations_of(records[t]);
        const auto demands = demands_of(records[t]);
        for (NodeId i = 0; i < n; ++i) {
            played[i] += records[t].agents[i].loss;
            const Eigen::VectorXd own = allocations[i].values;
            allocations[i].values = comparators[i].points[t];
            reference[i] += evaluate_loss(graph, i, allocations, demands, discounts);
            allocations[i].values = own;
        }
    }
    std::vector<double> out(n);
    for (NodeId i = 0; i < n; ++i) out[i] = played[i] - reference[i];
    return out;
}

std::vector<double> static_regret(const NetworkGraph& graph, std::span<const RoundRecord> records,
                                  std::span<const Eigen::VectorXd> best_fixed, const EdgeDiscounts& discounts) {
    std::vector<ComparatorSequence> constant(best_fixed.size());
    for (std::size_t i = 0; i < best_fixed.size(); ++i) {
        constant[i].kind = ComparatorKind::Static;
        constant[i].points.assign(records.size(), best_fixed[i]);
    }
    return dynamic_regret(graph, records, constant, discounts);
}

FrozenLoss frozen_loss(const NetworkGraph& graph, std::span<const RoundRecord> records, NodeId i,
                       const EdgeDiscounts& discounts) {
    const Neighborhood& nb = graph.neighborhood(i);
    const std::size_t dim = nb.local_dim();
    FrozenLoss f(dim);
    std::vector<double> inflow(dim), demand(dim), own(dim);
    for (std::size_t s = 0; s < dim; ++s) own[s] = discounts(nb.members[s], i);
    for (const auto& rec : records) {
        for (std::size_t s = 0; s < dim; ++s) {
            const NodeId j = nb.members[s];
            double others = 0.0;
            for (NodeId k : graph.neighborhood(j).members) {
                if (k == i) continue;
                const auto slot = *graph.neighborhood(k).slot_of(j);
                others += discounts(j, k) * rec.agents[k].allocation[static_cast<Eigen::Index>(slot)];
            }
            inflow[s] = others;
            demand[s] = rec.agents[j].demand;
        }
        f.add_round(inflow, demand, own);
    }
    f.finalize();
    return f;
}

std::vector<ComparatorSequence> dynamic_comparators(const NetworkGraph& graph, std::span<const RoundRecord> records,
                                                    std::span<const AgentSetup> setups, double tol,
                                                    const EdgeDiscounts& discounts) {
    std::vector<ComparatorSequence> out(graph.node_count());
    for (NodeId i = 0; i < graph.node_count(); ++i) {
        out[i].kind = ComparatorKind::Dynamic;
        out[i].points.reserve(records.size());
        for (std::size_t t = 0; t < records.size(); ++t) {
            const FrozenLoss f = frozen_loss(graph, records.subspan(t, 1), i, discounts);
            out[i].points.push_back(per_round_minimizer(std::cref(f), setups[i].box, tol));
        }
    }
    return out;
}

std::vector<Eigen::VectorXd> best_fixed_actions(const NetworkGraph& graph, std::span<const RoundRecord> records,
                                                std::span<const AgentSetup> setups, double tol,
                                                const EdgeDiscounts& discounts) {
    std::vector<Eigen::VectorXd> out(graph.node_count());
    for (NodeId i = 0; i < graph.node_count(); ++i) {
        const FrozenLoss f = frozen_loss(graph, records, i, discounts);
        out[i] = per_round_minimizer(std::cref(f), setups[i].box, tol);
    }
    return out;
}

std::vector<SatisfactionRatio> satisfaction_report(std::span<const RoundRecord> records, std::size_t window) {
    if (records.empty()) return {};
    const std::size_t w = std::clamp<std::size_t>(window, 1, records.size());
    const std::size_t n = records.front().agents.size();
    std::vector<SatisfactionRatio> out(n);
    for (std::size_t t = records.size() - w; t < records.size(); ++t) {
        for (std::size_t i = 0; i < n; ++i) {
            const AgentRound& r = records[t].agents[i];
            out[i].ratio += r.received / r.demand;
            out[i].baseline += r.generation / r.demand;
        }
    }
    for (auto& s : out) {
        s.ratio /= static_cast<double>(w);
        s.baseline /= static_cast<double>(w);
    }
    return out;
}

double variance(std::span<const double> values) {
    if (values.empty()) return 0.0;
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
    double acc = 0.0;
    for (double v : values) acc += (v - mean) * (v - mean);
    return acc / static_cast<double>(values.size());
}

}  // namespace gridshare
