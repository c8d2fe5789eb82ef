// Acceptance checks: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include "gridshare/config.hpp"
#include "gridshare/drs.hpp"
#include "gridshare/harness.hpp"
#include "gridshare/meta.hpp"
#include "gridshare/oracles.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

using namespace gridshare;
using nlohmann::json;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(double v, int precision = 4) {
    std::ostringstream s;
    s.precision(precision);
    s << v;
    return s.str();
}

const json kSixNodeGraph = json::parse(R"({"nodes": 6, "edges": [[0,1],[0,2],[1,2],[2,3],[3,4],[3,5],[4,5]]})");
const std::vector<double> kMeans = {6, 14, 12, 5, 7, 16};

RunConfig six_node(const std::string& algo, std::size_t T, std::uint64_t seed, const json& generation) {
    json doc = {{"graph", kSixNodeGraph},
                {"generation", generation},
                {"demand", {{"kind", "balanced"}}},
                {"algorithm", {{"name", algo}, {"horizon", T}, {"seed", seed}}}};
    return parse_config(doc);
}

json noisy_generation() { return {{"kind", "iid-uniform"}, {"means", kMeans}, {"spread", 0.3}}; }

// ---------------------------------------------------------------------------

Outcome zero_violation_with_adjustment() {
    std::string detail;
    bool pass = true;
    for (const char* algo : {"drs-adj", "mansdrs-adj"}) {
        const auto start = Clock::now();
        const RunResult r = run(six_node(algo, 10000, 1, noisy_generation()));
        const double elapsed = seconds_since(start);
        const auto v = violation_total(r.records);
        const double worst = *std::max_element(v.begin(), v.end());
        pass = pass && worst == 0.0 && elapsed < 10.0;
        detail += std::string(algo) + ": max V_T " + fmt(worst) + " in " + fmt(elapsed, 3) + " s; ";
    }
    return {pass, detail};
}

Outcome sublinear_violation() {
    const auto start = Clock::now();
    const std::size_t horizons[] = {4000, 16000, 64000};
    bool pass = true;
    std::string detail;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        // one long run; the schedule does not depend on T, so prefixes are the shorter runs
        const RunResult r = run(six_node("drs", horizons[2], seed, noisy_generation()));
        std::vector<double> rate;
        for (std::size_t T : horizons) {
            const auto v = violation_total(std::span<const RoundRecord>(r.records.data(), T));
            rate.push_back(std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(T));
        }
        const bool decreasing = rate[1] < rate[0] && rate[2] < rate[1];
        pass = pass && decreasing;
        detail += "seed " + std::to_string(seed) + " V/T " + fmt(rate[0]) + ">" + fmt(rate[1]) + ">" + fmt(rate[2]) +
                  (decreasing ? "; " : " (not decreasing); ");
    }
    const double elapsed = seconds_since(start);
    pass = pass && elapsed < 120.0;
    return {pass, detail + fmt(elapsed, 3) + " s"};
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double lx = std::log(x[k]), ly = std::log(y[k]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

Outcome sublinear_static_regret() {
    const auto start = Clock::now();
    const std::vector<std::size_t> horizons = {1000, 2000, 5000, 10000, 20000, 50000, 100000};
    RunConfig cfg = six_node("drs", horizons.back(), 1, noisy_generation());
    const RunResult r = run(cfg);
    const Environment env = make_environment(cfg, 6);
    const auto setups = derive_agent_setups(r.graph, env, cfg);

    std::vector<double> ts, regrets;
    std::string detail = "mean regret:";
    bool positive = true;
    for (std::size_t T : horizons) {
        const std::span<const RoundRecord> prefix(r.records.data(), T);
        const auto best = best_fixed_actions(r.graph, prefix, setups, 1e-6);
        const auto reg = static_regret(r.graph, prefix, best);
        const double mean = std::accumulate(reg.begin(), reg.end(), 0.0) / 6.0;
        positive = positive && mean > 0.0;
        ts.push_back(static_cast<double>(T));
        regrets.push_back(mean);
        detail += " " + fmt(mean);
    }
    const double slope = positive ? loglog_slope(ts, regrets) : std::nan("");
    const double elapsed = seconds_since(start);
    return {positive && slope < 0.95 && elapsed < 300.0,
            detail + "; slope " + fmt(slope, 3) + "; " + fmt(elapsed, 3) + " s"};
}

Outcome estimator_unbiasedness() {
    const auto start = Clock::now();
    bool pass = true;
    std::string detail;
    Rng rng(derive_seed({2024, 7}));
    for (std::size_t dim : {1u, 2u, 5u}) {
        Eigen::VectorXd c(static_cast<Eigen::Index>(dim)), z(static_cast<Eigen::Index>(dim));
        for (std::size_t k = 0; k < dim; ++k) {
            c[static_cast<Eigen::Index>(k)] = 1.0 - 0.7 * static_cast<double>(k);
            z[static_cast<Eigen::Index>(k)] = 2.0 + static_cast<double>(k);
        }
        const double delta = 0.5;
        const std::size_t draws = 1000000;
        Eigen::VectorXd sum = Eigen::VectorXd::Zero(c.size()), sq = Eigen::VectorXd::Zero(c.size());
        for (std::size_t n = 0; n < draws; ++n) {
            const Eigen::VectorXd u = sample_unit_vector(dim, rng);
            const Eigen::VectorXd g = estimate_direction(c.dot(z + delta * u), 0.0, u, 0.0, delta, dim);
            sum += g;
            sq += g.cwiseProduct(g);
        }
        const double N = static_cast<double>(draws);
        double worst = 0.0;
        for (Eigen::Index k = 0; k < c.size(); ++k) {
            const double mean = sum[k] / N;
            const double se = std::sqrt((sq[k] / N - mean * mean) / N);
            worst = std::max(worst, std::abs(mean - c[k]) / se);
        }
        pass = pass && worst < 3.0;
        detail += "dim " + std::to_string(dim) + " worst " + fmt(worst, 3) + " SE; ";
    }
    const double elapsed = seconds_since(start);
    return {pass && elapsed < 30.0, detail + fmt(elapsed, 3) + " s"};
}

Outcome loss_convex_and_lipschitz() {
    const auto graph = NetworkGraph::from_edges(6, std::vector<Edge>{{0, 1}, {0, 2}, {1, 2}, {2, 3}, {3, 4}, {3, 5}, {4, 5}});
    Rng rng(derive_seed({99}));
    std::uniform_real_distribution<double> U(0.0, 1.0);
    std::size_t convexity_failures = 0, lipschitz_failures = 0, range_failures = 0;
    double worst_gap = -1.0;
    const std::size_t triples = 10000;
    for (std::size_t k = 0; k < triples; ++k) {
        std::vector<double> demand(6);
        for (double& l : demand) l = 2.0 + 18.0 * U(rng);
        std::vector<AllocationVector> alloc(6);
        for (NodeId j = 0; j < 6; ++j) {
            alloc[j] = AllocationVector{j, Eigen::VectorXd(static_cast<Eigen::Index>(graph.neighborhood(j).local_dim()))};
            for (Eigen::Index s = 0; s < alloc[j].values.size(); ++s) alloc[j].values[s] = 8.0 * U(rng);
        }
        const NodeId i = static_cast<NodeId>(6.0 * U(rng)) % 6;
        const Eigen::Index dim = alloc[i].values.size();
        auto f = [&](const Eigen::VectorXd& x) {
            auto a = alloc;
            a[i].values = x;
            return loss(graph, i, a, demand);
        };
        Eigen::VectorXd x(dim), y(dim);
        for (Eigen::Index s = 0; s < dim; ++s) {
            x[s] = 15.0 * U(rng);
            y[s] = 15.0 * U(rng);
        }
        const double lambda = U(rng);
        const double fx = f(x), fy = f(y), fm = f(lambda * x + (1.0 - lambda) * y);
        const double gap = fm - (lambda * fx + (1.0 - lambda) * fy);
        worst_gap = std::max(worst_gap, gap);
        if (gap > 1e-12) ++convexity_failures;
        const double L = 1.0 / *std::min_element(demand.begin(), demand.end());
        if (std::abs(fx - fy) > L * (x - y).lpNorm<1>() + 1e-12) ++lipschitz_failures;
        if (fx < 0.0 || fx > 1.0) ++range_failures;
    }
    return {convexity_failures == 0 && lipschitz_failures == 0 && range_failures == 0,
            std::to_string(triples) + " triples; convexity failures " + std::to_string(convexity_failures) +
                " (worst gap " + fmt(worst_gap, 3) + "), Lipschitz failures " + std::to_string(lipschitz_failures) +
                ", range failures " + std::to_string(range_failures)};
}

Outcome ensemble_correctness() {
    const std::size_t T = 3000;
    RunConfig cfg = six_node("mansdrs", T, 4, noisy_generation());
    auto agent_rng = [&](NodeId i) { return Rng(derive_seed({4, static_cast<std::uint64_t>(StreamTag::Agent), i})); };
    const RunResult single = run(cfg, [&](const AgentSetup& s, NodeId i) {
        return make_mansdrs_learner(s, build_pool_of_size(1, s.constants, s.box.center()),
                                    meta_schedule(s.constants, T, false), DrsOptions{}, meta_rate(T, s.constants),
                                    agent_rng(i));
    });
    const RunResult base = run(cfg, [&](const AgentSetup& s, NodeId i) {
        return make_drs_learner(s, meta_schedule(s.constants, T, false), DrsOptions{}, agent_rng(i));
    });
    bool identical = true;
    for (std::size_t t = 0; t < T && identical; ++t)
        for (NodeId i = 0; i < 6; ++i) {
            const auto& a = single.records[t].agents[i];
            const auto& b = base.records[t].agents[i];
            identical = identical && a.allocation == b.allocation && a.dual == b.dual && a.loss == b.loss;
        }

    // weights stay on the simplex while a full pool learns from real feedback
    const Environment env = make_environment(cfg, 6);
    const auto setups = derive_agent_setups(base.graph, env, cfg);
    double worst_sum = 0.0;
    bool prior_ok = true;
    for (NodeId i = 0; i < 6; ++i) {
        const AgentSetup& s = setups[i];
        const HyperSchedule schedule = meta_schedule(s.constants, T, false);
        ExpertPool pool = build_pool(T, s.constants, s.box.center());
        const std::size_t K = pool.size();
        double prior = 0.0;
        for (std::size_t k = 1; k <= K; ++k) {
            const double closed = (static_cast<double>(K) + 1.0) / static_cast<double>(K) /
                                  (static_cast<double>(k) * (static_cast<double>(k) + 1.0));
            prior_ok = prior_ok && std::abs(pool.weights[k - 1] - closed) <= 1e-15;
            prior += pool.weights[k - 1];
        }
        prior_ok = prior_ok && std::abs(prior - 1.0) < 1e-12;
        Rng rng = agent_rng(i);
        MetaState st = mansdrs_initialize(pool, schedule, s.box, 0.0, DrsOptions{}, rng);
        for (std::size_t t = 2; t <= T; ++t) {
            // node i's loss against the other agents' recorded plays
            const RoundRecord& prev = base.records[t - 2];
            const double f = counterfactual_loss(base.graph, prev, i, st.agent.x_played);
            const double g = st.agent.x_played.sum() - prev.agents[i].generation;
            st = mansdrs_round(st, schedule, Feedback{f, g}, s.box, 0.0, DrsOptions{}, meta_rate(T, s.constants), rng);
            const double sum = std::accumulate(st.pool.weights.begin(), st.pool.weights.end(), 0.0);
            worst_sum = std::max(worst_sum, std::abs(sum - 1.0));
        }
    }
    return {identical && prior_ok && worst_sum <= 1e-9,
            std::string("K=1 trajectory ") + (identical ? "identical" : "differs") + "; worst |sum w - 1| " +
                fmt(worst_sum, 3) + "; prior weights " + (prior_ok ? "match" : "mismatch")};
}

json piecewise_generation() {
    // the same mean levels moved around the graph, so total supply stays fixed
    const std::vector<std::vector<double>> sets = {
        {6, 14, 12, 5, 7, 16}, {16, 5, 7, 14, 12, 6}, {12, 7, 16, 6, 14, 5}, {5, 16, 6, 12, 7, 14}};
    return {{"kind", "piecewise-stationary"}, {"mean_sets", sets}, {"change_every", 1000}, {"spread", 0.1}};
}

Outcome loss_ordering() {
    const auto start = Clock::now();
    std::size_t hits = 0;
    std::string detail;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const double ma = run(six_node("mansdrs", 20000, seed, piecewise_generation())).summary.mean_cumulative_loss;
        const double drs = run(six_node("drs", 20000, seed, piecewise_generation())).summary.mean_cumulative_loss;
        const double ban = run(six_node("bansap", 20000, seed, piecewise_generation())).summary.mean_cumulative_loss;
        const bool ordered = ma <= drs && drs <= ban;
        hits += ordered;
        detail += "seed " + std::to_string(seed) + " " + fmt(ma, 5) + "/" + fmt(drs, 5) + "/" + fmt(ban, 5) +
                  (ordered ? "; " : " (out of order); ");
    }
    const double elapsed = seconds_since(start);
    return {hits >= 4 && elapsed < 180.0,
            std::to_string(hits) + "/5 ordered (MA-NSDRS/DRS/BanSaP): " + detail + fmt(elapsed, 3) + " s"};
}

Outcome redistribution() {
    RunConfig cfg = six_node("mansdrs-adj", 10000, 1, noisy_generation());
    const RunResult r = run(cfg);
    const auto rep = satisfaction_report(r.records, 1000);
    std::vector<double> ratio, baseline;
    for (const auto& s : rep) {
        ratio.push_back(s.ratio);
        baseline.push_back(s.baseline);
    }
    const double v = variance(ratio), b = variance(baseline);
    return {v < 0.5 * b, "ratio variance " + fmt(v) + " vs no-sharing " + fmt(b) + " (" + fmt(100.0 * v / b, 3) + "%)"};
}

Outcome oracle_audit() {
    RunConfig cfg = six_node("drs", 5000, 3, noisy_generation());
    const RunResult r = run(cfg);
    const Environment env = make_environment(cfg, 6);
    const auto setups = derive_agent_setups(r.graph, env, cfg);
    Rng rng(derive_seed({3, static_cast<std::uint64_t>(StreamTag::Oracle)}));
    std::uniform_int_distribution<std::size_t> pick_round(0, r.records.size() - 1);
    std::uniform_int_distribution<NodeId> pick_node(0, 5);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    std::size_t beaten = 0;
    for (int k = 0; k < 100; ++k) {
        const std::size_t t = pick_round(rng);
        const NodeId i = pick_node(rng);
        const FrozenLoss f = frozen_loss(r.graph, std::span<const RoundRecord>(&r.records[t], 1), i);
        const Box& box = setups[i].box;
        const Eigen::VectorXd best = per_round_minimizer(std::cref(f), box, 1e-6);
        const double fb = f(best);
        for (int p = 0; p < 100; ++p) {
            Eigen::VectorXd x(box.lower.size());
            for (Eigen::Index s = 0; s < x.size(); ++s) x[s] = box.lower[s] + (box.upper[s] - box.lower[s]) * U(rng);
            if (f(x) < fb) ++beaten;
        }
    }

    std::vector<Eigen::VectorXd> fixed;
    std::vector<ComparatorSequence> constant(6);
    double path = 0.0;
    for (NodeId i = 0; i < 6; ++i) {
        fixed.push_back(setups[i].box.center() * 0.7);
        constant[i].kind = ComparatorKind::Static;
        constant[i].points.assign(r.records.size(), fixed.back());
        path += constant[i].path_length();
    }
    const bool equal = static_regret(r.graph, r.records, fixed) == dynamic_regret(r.graph, r.records, constant);
    return {beaten == 0 && path == 0.0 && equal,
            "random points beating the oracle " + std::to_string(beaten) + "/10000; constant path length " +
                fmt(path) + "; static == dynamic " + (equal ? "exactly" : "NOT equal")};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"zero violation with adjustment (6 nodes, T=1e4)", zero_violation_with_adjustment},
        {"sublinear violation without adjustment (seeds 1-5)", sublinear_violation},
        {"sublinear static regret (log-log slope < 0.95)", sublinear_static_regret},
        {"gradient estimator unbiased (dims 1,2,5; 1e6 draws)", estimator_unbiasedness},
        {"loss convex and Lipschitz (1e4 triples)", loss_convex_and_lipschitz},
        {"ensemble correctness (K=1, simplex, prior)", ensemble_correctness},
        {"loss ordering MA-NSDRS <= DRS <= BanSaP (>= 4/5 seeds)", loss_ordering},
        {"redistribution halves satisfaction variance", redistribution},
        {"oracle audit", oracle_audit},
    };
    int failures = 0;
    for (const auto& [name, check] : criteria) {
        Outcome o;
        try {
            o = check();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failures += !o.pass;
        std::cout << (o.pass ? "PASS " : "FAIL ") << name << " -- " << o.detail << std::endl;
    }
    std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << '\n';
    return failures == 0 ? 0 : 1;
}
