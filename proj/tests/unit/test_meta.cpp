#include "gridshare/meta.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>

using namespace gridshare;

namespace {

ProblemConstants constants() {
    ProblemConstants c;
    c.neighbor_count = 2.0;
    c.dim = 2;
    c.loss_bound = 1.0;
    c.constraint_bound = 30.0;
    c.lipschitz = 0.1;
    c.outer_radius = 10.0 * std::sqrt(2.0);
    c.inner_radius = 5.0;
    return c;
}

}  // namespace

TEST_CASE("pool size") {
    CHECK(pool_size(15) == 3);
    CHECK(pool_size(255) == 5);
    CHECK(pool_size(1) == 2);
    CHECK(pool_size(3) == 2);   // log2(4)/2 = 1 exactly
    CHECK(pool_size(4) == 3);
    // floating evaluation of the same formula, away from exact powers of four
    for (std::size_t T : {2u, 10u, 100u, 1000u, 20000u, 100000u}) {
        CHECK(pool_size(T) == static_cast<std::size_t>(std::ceil(0.5 * std::log2(1.0 + T))) + 1);
    }
    CHECK_THROWS(pool_size(0));
}

TEST_CASE("prior weights telescope") {
    CHECK(initial_weight(1, 3) == doctest::Approx(2.0 / 3.0));
    CHECK(initial_weight(2, 3) == doctest::Approx(2.0 / 9.0));
    CHECK(initial_weight(3, 3) == doctest::Approx(1.0 / 9.0));
    for (std::size_t K : {1u, 2u, 5u, 9u}) {
        double total = 0.0;
        for (std::size_t k = 1; k <= K; ++k) total += initial_weight(k, K);
        CHECK(total == doctest::Approx(1.0).epsilon(1e-15));
    }
    CHECK(initial_weight(1, 1) == 1.0);
}

TEST_CASE("pool step sizes") {
    const ProblemConstants c = constants();
    const ExpertPool pool = build_pool(255, c, Eigen::Vector2d(5.0, 5.0));
    REQUIRE(pool.size() == 5);
    const double R = c.outer_radius;
    const double base = std::sqrt(2.0 * R * R * R / (2.0 * 2.0 * 1.0 * c.lipschitz_tilde()));
    CHECK(pool.base_rate == doctest::Approx(base).epsilon(1e-15));
    for (std::size_t k = 0; k < 5; ++k) {
        CHECK(pool.step(k, 16) == doctest::Approx(std::pow(2.0, k) * base / 8.0).epsilon(1e-15));
        CHECK(pool.iterates[k] == Eigen::Vector2d(5.0, 5.0));
    }
}

TEST_CASE("expert steps and combination") {
    const Box box = Box::uniform(2, 10.0);
    const Eigen::Vector2d z(5.0, 5.0), dir(1.0, -0.5);
    CHECK(expert_step(z, Eigen::Vector2d::Zero(), 0.7, box, 0.1) == z);
    const Eigen::VectorXd a = expert_step(z, dir, 1.0, box, 0.1);
    const Eigen::VectorXd b = expert_step(z, dir, 2.0, box, 0.1);
    CHECK((b - z) == 2.0 * (a - z));
    CHECK(expert_step(z, dir, 100.0, box, 0.2) == Eigen::Vector2d(1.0, 9.0));

    ExpertPool pool;
    pool.iterates = {Eigen::Vector2d(0.0, 0.0), Eigen::Vector2d(2.0, 2.0)};
    pool.weights = {0.25, 0.75};
    CHECK(combine(pool) == Eigen::Vector2d(1.5, 1.5));
    pool.weights = {1.0, 0.0};
    CHECK(combine(pool) == Eigen::Vector2d(0.0, 0.0));
    pool.iterates = {Eigen::Vector2d(3.0, 4.0), Eigen::Vector2d(3.0, 4.0)};
    pool.weights = {0.5, 0.5};
    CHECK(combine(pool) == Eigen::Vector2d(3.0, 4.0));
}

TEST_CASE("weight updates") {
    ExpertPool pool;
    pool.iterates = {Eigen::VectorXd::Constant(1, 0.0), Eigen::VectorXd::Constant(1, 1.0)};
    pool.weights = {0.5, 0.5};
    const SurrogateLoss l{Eigen::VectorXd::Constant(1, 1.0), Eigen::VectorXd::Constant(1, 0.0)};
    CHECK(l(l.anchor) == 0.0);

    const ExpertPool next = update_weights(pool, l, std::log(2.0));
    CHECK(next.weights[0] == doctest::Approx(2.0 / 3.0));
    CHECK(next.weights[1] == doctest::Approx(1.0 / 3.0));
    CHECK(update_weights(pool, l, 0.0).weights == pool.weights);

    ExpertPool same = pool;
    same.iterates[1] = same.iterates[0];
    same.weights = {0.3, 0.7};
    const auto kept = update_weights(same, l, 5.0).weights;
    CHECK(kept[0] == doctest::Approx(0.3));
    CHECK(kept[1] == doctest::Approx(0.7));

    // huge losses would overflow a naive exponential
    const SurrogateLoss big{Eigen::VectorXd::Constant(1, 1e6), Eigen::VectorXd::Constant(1, 0.0)};
    const auto w = update_weights(pool, big, 1.0).weights;
    CHECK(w[0] == 1.0);
    CHECK(w[1] == 0.0);
    CHECK_THROWS(update_weights(pool, l, -1.0));
}

TEST_CASE("meta learning rate") {
    CHECK(meta_rate_from_bound(2, 1.0, 1.0) == doctest::Approx(0.5));
    CHECK(meta_rate_from_bound(2, 2.0, 1.0) == doctest::Approx(0.25));
    const ProblemConstants c = constants();
    double prev = meta_rate(10, c);
    for (std::size_t T : {20u, 100u, 1000u}) {
        const double r = meta_rate(T, c);
        CHECK(r < prev);
        prev = r;
    }
}

TEST_CASE("ensemble rounds") {
    const ProblemConstants c = constants();
    const Box box = Box::uniform(2, 10.0);
    const HyperSchedule s = meta_schedule(c, 500, false);

    SUBCASE("schedule consistency") {
        for (std::size_t t : {1u, 10u, 500u}) {
            const ScheduleValues v = s.raw(t);
            CHECK(v.xi == doctest::Approx(v.delta / c.inner_radius));
            CHECK(v.eta == doctest::Approx(build_pool(500, c, box.center()).step(0, t)));
        }
        const HyperSchedule flat = meta_schedule(c, 500, true);
        CHECK(flat.raw(1).delta == flat.raw(500).delta);
        CHECK(flat.raw(500).delta == doctest::Approx(s.raw(500).delta));
    }

    SUBCASE("zero feedback keeps the prior weights") {
        Rng rng(2);
        MetaState st = mansdrs_initialize(build_pool(500, c, box.center()), s, box, 20.0, {}, rng);
        const auto prior = st.pool.weights;
        for (int k = 0; k < 10; ++k) st = mansdrs_round(st, s, Feedback{0.0, 0.0}, box, 20.0, {}, 0.3, rng);
        for (std::size_t k = 0; k < prior.size(); ++k) CHECK(st.pool.weights[k] == doctest::Approx(prior[k]).epsilon(1e-14));
    }

    SUBCASE("weights stay on the simplex") {
        Rng rng(5);
        MetaState st = mansdrs_initialize(build_pool(500, c, box.center()), s, box, 20.0, {}, rng);
        std::uniform_real_distribution<double> U(0.0, 1.0);
        for (int k = 0; k < 500; ++k) {
            st = mansdrs_round(st, s, Feedback{U(rng), st.agent.x_played.sum() - 10.0}, box, 20.0, {}, 0.05, rng);
            const double total = std::accumulate(st.pool.weights.begin(), st.pool.weights.end(), 0.0);
            REQUIRE(std::abs(total - 1.0) < 1e-9);
            for (double w : st.pool.weights) REQUIRE(w >= 0.0);
        }
    }

    SUBCASE("two-expert hand trace") {
        const ScheduleValues v{0.5, 0.0, 0.5, 0.25, 0.1};
        const HyperSchedule flat = HyperSchedule::constant(v, 5.0);
        const Box line = Box::uniform(1, 10.0);
        ExpertPool pool = build_pool_of_size(2, c, Eigen::VectorXd::Constant(1, 5.0));
        pool.base_rate = 1.0;
        const double eps = 0.2;
        Rng rng(8);
        MetaState st = mansdrs_initialize(pool, flat, line, 100.0, {}, rng);
        // K = 2 prior: (3/2) * (1/2, 1/6)
        double z1 = 5.0, z2 = 5.0, w1 = 0.75, w2 = 0.25, q = 0.0;
        double z = 5.0, x = st.agent.x[0];
        for (std::size_t t = 2; t <= 4; ++t) {
            const double f = 1.0 - std::min(x / 10.0, 1.0), g = x - 4.0;
            const double u_prev = st.agent.u[0];
            st = mansdrs_round(st, flat, Feedback{f, g}, line, 100.0, {}, eps, rng);
            q = std::max(0.0, q + 0.25 * (g - 0.5 * q));
            const double grad = (1.0 / 0.5) * (f + g * q) * u_prev;
            const double a1 = w1 * std::exp(-eps * grad * (z1 - z));
            const double a2 = w2 * std::exp(-eps * grad * (z2 - z));
            w1 = a1 / (a1 + a2);
            w2 = a2 / (a1 + a2);
            const double step = std::pow(static_cast<double>(t), -0.75);
            z1 = std::clamp(z1 - step * grad, 0.5, 9.5);
            z2 = std::clamp(z2 - 2.0 * step * grad, 0.5, 9.5);
            z = w1 * z1 + w2 * z2;
            x = std::clamp(z + 0.5 * st.agent.u[0], 0.0, 10.0);
            CHECK(st.pool.weights[0] == doctest::Approx(w1).epsilon(1e-12));
            CHECK(st.pool.iterates[1][0] == doctest::Approx(z2).epsilon(1e-12));
            CHECK(st.agent.z[0] == doctest::Approx(z).epsilon(1e-12));
            CHECK(st.agent.x[0] == doctest::Approx(x).epsilon(1e-12));
        }
    }
}
