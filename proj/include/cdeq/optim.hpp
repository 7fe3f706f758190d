// SPDX-License-Identifier: Apache-2.0
#ifndef CDEQ_OPTIM_HPP
#define CDEQ_OPTIM_HPP

#include <cdeq/error.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <vector>

namespace cdeq {

/// Cost callback: returns f(x) and writes ∇f(x) into `grad` (same size as x).
using CostFunction = std::function<double(std::span<const double> x, std::span<double> grad)>;

struct OptimizerSettings {
    int max_iterations{500};
    double gradient_tolerance{1e-8}; // infinity norm
    double initial_step{1.0};
    double backtracking{0.5};
    double sufficient_decrease{1e-4};
    int history{10};          // secant pairs kept
    int max_backtracks{60};

    void validate() const {
        if (max_iterations <= 0 || gradient_tolerance <= 0.0 || initial_step <= 0.0 ||
            backtracking <= 0.0 || backtracking >= 1.0 || sufficient_decrease <= 0.0 ||
            sufficient_decrease >= 1.0 || history <= 0 || max_backtracks <= 0) {
            throw InvalidParameter("OptimizerSettings: out-of-range field");
        }
    }
};

enum class Termination { GradientTolerance, MaxIterations, LineSearchStalled };

[[nodiscard]] inline const char* to_string(Termination t) noexcept {
    switch (t) {
    case Termination::GradientTolerance: return "gradient_tolerance";
    case Termination::MaxIterations: return "max_iterations";
    case Termination::LineSearchStalled: return "line_search_stalled";
    }
    return "unknown";
}

struct OptimizationReport {
    int iterations{0};
    double initial_cost{0.0};
    double final_cost{0.0};
    double final_gradient_norm{0.0};
    Termination reason{Termination::MaxIterations};
    std::vector<double> cost_history; // accepted iterates, starting with x0
};

struct OptimizationResult {
    std::vector<double> x;
    OptimizationReport report;
};

namespace detail {
inline double inf_norm(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) {
        m = std::max(m, std::abs(x));
    }
    return m;
}
inline double dot(std::span<const double> a, std::span<const double> b) {
    return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}
inline bool all_finite(std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}
} // namespace detail

/// Limited-memory BFGS with Armijo backtracking (no curvature condition). Secant
/// pairs with non-positive curvature are skipped, so the search direction always
/// descends. The accepted cost sequence is non-increasing.
[[nodiscard]] inline OptimizationResult minimize(const CostFunction& f, std::vector<double> x0,
                                                 const OptimizerSettings& settings = {}) {
    settings.validate();
    const std::size_t n = x0.size();
    std::vector<double> x = std::move(x0);
    std::vector<double> g(n), x_trial(n), g_trial(n), dir(n);

    OptimizationResult res;
    auto& rep = res.report;

    double fx = f(x, g);
    if (!std::isfinite(fx) || !detail::all_finite(g)) {
        throw Divergence("minimize: non-finite cost or gradient at the starting point", x);
    }
    rep.initial_cost = fx;
    rep.cost_history.push_back(fx);

    struct Pair {
        std::vector<double> s, y;
        double rho;
    };
    std::deque<Pair> mem;
    std::vector<double> alpha_buf;

    rep.reason = Termination::MaxIterations;
    int it = 0;
    for (; it < settings.max_iterations; ++it) {
        if (detail::inf_norm(g) <= settings.gradient_tolerance) {
            rep.reason = Termination::GradientTolerance;
            break;
        }

        // Two-loop recursion.
        std::copy(g.begin(), g.end(), dir.begin());
        alpha_buf.assign(mem.size(), 0.0);
        for (std::size_t i = mem.size(); i-- > 0;) {
            alpha_buf[i] = mem[i].rho * detail::dot(mem[i].s, dir);
            for (std::size_t j = 0; j < n; ++j) {
                dir[j] -= alpha_buf[i] * mem[i].y[j];
            }
        }
        double gamma = 1.0;
        if (!mem.empty()) {
            const auto& last = mem.back();
            gamma = detail::dot(last.s, last.y) / detail::dot(last.y, last.y);
        } else {
            // First step: unit length in the infinity norm.
            gamma = 1.0 / std::max(1.0, detail::inf_norm(g));
        }
        for (auto& d : dir) {
            d *= gamma;
        }
        for (std::size_t i = 0; i < mem.size(); ++i) {
            const double beta = mem[i].rho * detail::dot(mem[i].y, dir);
            for (std::size_t j = 0; j < n; ++j) {
                dir[j] += mem[i].s[j] * (alpha_buf[i] - beta);
            }
        }
        for (auto& d : dir) {
            d = -d;
        }
        double slope = detail::dot(g, dir);
        if (!(slope < 0.0)) {
            // Lost descent; restart from steepest descent.
            mem.clear();
            const double sc = 1.0 / std::max(1.0, detail::inf_norm(g));
            for (std::size_t j = 0; j < n; ++j) {
                dir[j] = -g[j] * sc;
            }
            slope = detail::dot(g, dir);
        }

        double step = settings.initial_step;
        bool accepted = false;
        double f_trial = fx;
        for (int bt = 0; bt < settings.max_backtracks; ++bt) {
            for (std::size_t j = 0; j < n; ++j) {
                x_trial[j] = x[j] + step * dir[j];
            }
            f_trial = f(x_trial, g_trial);
            if (!std::isfinite(f_trial) || !detail::all_finite(g_trial)) {
                throw Divergence("minimize: non-finite cost or gradient at iteration " +
                                     std::to_string(it),
                                 x);
            }
            if (f_trial <= fx + settings.sufficient_decrease * step * slope) {
                accepted = true;
                break;
            }
            step *= settings.backtracking;
        }
        if (!accepted || f_trial > fx) {
            rep.reason = Termination::LineSearchStalled;
            break;
        }

        Pair p{std::vector<double>(n), std::vector<double>(n), 0.0};
        for (std::size_t j = 0; j < n; ++j) {
            p.s[j] = x_trial[j] - x[j];
            p.y[j] = g_trial[j] - g[j];
        }
        const double sy = detail::dot(p.s, p.y);
        if (sy > 1e-12 * std::sqrt(detail::dot(p.s, p.s) * detail::dot(p.y, p.y))) {
            p.rho = 1.0 / sy;
            mem.push_back(std::move(p));
            if (mem.size() > static_cast<std::size_t>(settings.history)) {
                mem.pop_front();
            }
        }
        x.swap(x_trial);
        g.swap(g_trial);
        fx = f_trial;
        rep.cost_history.push_back(fx);
    }
    if (it == settings.max_iterations && detail::inf_norm(g) <= settings.gradient_tolerance) {
        rep.reason = Termination::GradientTolerance;
    }
    rep.iterations = it;
    rep.final_cost = fx;
    rep.final_gradient_norm = detail::inf_norm(g);
    res.x = std::move(x);
    return res;
}

/// Worst per-coordinate discrepancy between the analytic gradient and central
/// differences with step h. Each coordinate is scaled by max(|fd_i|, 1e-3·‖fd‖∞) so
/// near-zero components do not dominate.
[[nodiscard]] inline double check_gradient(const CostFunction& f, std::span<const double> x,
                                           double h) {
    if (!(h > 0.0)) {
        throw InvalidParameter("check_gradient: h must be positive");
    }
    const std::size_t n = x.size();
    std::vector<double> analytic(n), scratch(n), fd(n);
    std::vector<double> xp(x.begin(), x.end());
    (void)f(x, analytic);
    for (std::size_t i = 0; i < n; ++i) {
        const double orig = xp[i];
        xp[i] = orig + h;
        const double fp = f(xp, scratch);
        xp[i] = orig - h;
        const double fm = f(xp, scratch);
        xp[i] = orig;
        fd[i] = (fp - fm) / (2.0 * h);
    }
    const double floor = std::max(1e-3 * detail::inf_norm(fd), 1e-300);
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        worst = std::max(worst, std::abs(analytic[i] - fd[i]) / std::max(std::abs(fd[i]), floor));
    }
    return worst;
}

} // namespace cdeq

#endif // CDEQ_OPTIM_HPP
