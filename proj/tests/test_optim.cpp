// SPDX-License-Identifier: Apache-2.0
#include <cdeq/optim.hpp>

#include <catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <random>

using namespace cdeq;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {
CostFunction bowl(std::vector<double> a) {
    return [a](std::span<const double> x, std::span<double> g) {
        double f = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            f += (x[i] - a[i]) * (x[i] - a[i]);
            g[i] = 2.0 * (x[i] - a[i]);
        }
        return f;
    };
}

double rosen(std::span<const double> x, std::span<double> g) {
    const double a = 1.0 - x[0];
    const double b = x[1] - x[0] * x[0];
    g[0] = -2.0 * a - 400.0 * x[0] * b;
    g[1] = 200.0 * b;
    return a * a + 100.0 * b * b;
}

bool non_increasing(const std::vector<double>& v) {
    for (std::size_t i = 1; i < v.size(); ++i) {
        if (v[i] > v[i - 1]) {
            return false;
        }
    }
    return true;
}
} // namespace

TEST_CASE("settings validation", "[optim]") {
    CHECK_NOTHROW(OptimizerSettings{}.validate());
    OptimizerSettings s;
    s.backtracking = 1.0;
    CHECK_THROWS_AS(s.validate(), InvalidParameter);
    s = {};
    s.max_iterations = 0;
    CHECK_THROWS_AS(s.validate(), InvalidParameter);
    s = {};
    s.gradient_tolerance = -1.0;
    CHECK_THROWS_AS(s.validate(), InvalidParameter);
}

TEST_CASE("quadratic bowl converges to its centre", "[optim]") {
    const std::vector<double> a{1.5, -2.0, 0.25, 7.0, -3.5};
    std::mt19937_64 rng(31);
    std::normal_distribution<double> g(0.0, 10.0);
    for (int trial = 0; trial < 5; ++trial) {
        std::vector<double> x0(a.size());
        for (auto& v : x0) {
            v = g(rng);
        }
        const auto r = minimize(bowl(a), x0);
        double dist = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            dist += (r.x[i] - a[i]) * (r.x[i] - a[i]);
        }
        CHECK(std::sqrt(dist) <= 1e-6);
        CHECK(r.report.reason == Termination::GradientTolerance);
        CHECK(r.report.final_cost <= r.report.initial_cost);
    }
}

TEST_CASE("Rosenbrock from the standard start", "[optim]") {
    const auto r = minimize(rosen, {-1.2, 1.0});
    CHECK_THAT(r.x[0], WithinAbs(1.0, 1e-5));
    CHECK_THAT(r.x[1], WithinAbs(1.0, 1e-5));
    CHECK(non_increasing(r.report.cost_history));
    CHECK(r.report.cost_history.front() == r.report.initial_cost);
    CHECK(r.report.cost_history.back() == r.report.final_cost);
    CHECK(r.report.iterations <= OptimizerSettings{}.max_iterations);
}

TEST_CASE("cost sequence never increases", "[optim][property]") {
    // Ill-conditioned, non-convex test function.
    CostFunction f = [](std::span<const double> x, std::span<double> g) {
        double v = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double s = static_cast<double>(i + 1);
            v += s * s * (1.0 - std::cos(x[i])) + 0.01 * x[i] * x[i];
            g[i] = s * s * std::sin(x[i]) + 0.02 * x[i];
        }
        return v;
    };
    std::mt19937_64 rng(32);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<double> x0(8);
        for (auto& v : x0) {
            v = u(rng);
        }
        const auto r = minimize(f, x0);
        CHECK(non_increasing(r.report.cost_history));
    }
}

TEST_CASE("iteration budget is respected", "[optim]") {
    OptimizerSettings s;
    s.max_iterations = 5;
    const auto r = minimize(rosen, {-1.2, 1.0}, s);
    CHECK(r.report.iterations == 5);
    CHECK(r.report.reason == Termination::MaxIterations);
    CHECK(r.report.cost_history.size() == 6);
}

TEST_CASE("identical inputs give identical iterates", "[optim][property]") {
    const auto a = minimize(rosen, {-1.2, 1.0});
    const auto b = minimize(rosen, {-1.2, 1.0});
    CHECK(a.x == b.x);
    CHECK(a.report.cost_history == b.report.cost_history);
}

TEST_CASE("non-finite cost raises a divergence error", "[optim]") {
    // Finite at the start, NaN once the iterate crosses x = 0.5.
    CostFunction f = [](std::span<const double> x, std::span<double> g) {
        if (x[0] > 0.5) {
            g[0] = 0.0;
            return std::numeric_limits<double>::quiet_NaN();
        }
        g[0] = -1.0;
        return -x[0];
    };
    try {
        (void)minimize(f, {0.0});
        FAIL("expected Divergence");
    } catch (const Divergence& e) {
        REQUIRE(e.last_good().size() == 1);
        CHECK(e.last_good()[0] <= 0.5);
    }
    CostFunction bad_start = [](std::span<const double>, std::span<double> g) {
        g[0] = 0.0;
        return std::numeric_limits<double>::infinity();
    };
    CHECK_THROWS_AS(minimize(bad_start, {1.0}), Divergence);
}

TEST_CASE("check_gradient on an analytic quadratic", "[optim]") {
    const std::vector<double> a{0.3, -1.0, 2.0};
    const std::vector<double> x{1.0, 2.0, -0.5};
    CHECK(check_gradient(bowl(a), x, 1e-6) <= 1e-9);
    CHECK_THROWS_AS(check_gradient(bowl(a), x, 0.0), InvalidParameter);
}

TEST_CASE("check_gradient detects a 1% gradient error", "[optim]") {
    CostFunction corrupted = [](std::span<const double> x, std::span<double> g) {
        const double f = rosen(x, g);
        for (auto& v : g) {
            v *= 1.01;
        }
        return f;
    };
    const std::vector<double> x{-0.7, 0.4};
    CHECK(check_gradient(rosen, x, 1e-6) <= 1e-6);
    CHECK_THAT(check_gradient(corrupted, x, 1e-6), WithinRel(1e-2, 1e-3));
}
