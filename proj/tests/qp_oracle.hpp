#pragma once

// Independent solver for the SVM dual, used only as a test oracle:
//   maximize  W(a) = sum a_i - 1/2 sum_ij a_i a_j y_i y_j K_ij
//   s.t.      0 <= a_i <= C,  sum_i a_i y_i = 0
// Projected gradient ascent; the projection onto box+hyperplane is done by
// bisection on the hyperplane multiplier (the projection is monotone in it).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

namespace qp_oracle {

struct Problem {
    std::vector<std::vector<double>> K;  // n x n kernel matrix
    std::vector<double> y;               // +-1
    double C = 1.0;
};

inline std::vector<double> project(const std::vector<double>& v, const std::vector<double>& y,
                                   double C) {
    const std::size_t n = v.size();
    auto constraint = [&](double lambda) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            s += y[i] * std::clamp(v[i] - lambda * y[i], 0.0, C);
        }
        return s;  // decreasing in lambda
    };
    double lo = -1.0, hi = 1.0;
    while (constraint(lo) < 0.0) lo *= 2.0;
    while (constraint(hi) > 0.0) hi *= 2.0;
    for (int it = 0; it < 100; ++it) {
        double mid = 0.5 * (lo + hi);
        (constraint(mid) > 0.0 ? lo : hi) = mid;
    }
    double lambda = 0.5 * (lo + hi);
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = std::clamp(v[i] - lambda * y[i], 0.0, C);
    return out;
}

inline double objective(const Problem& p, const std::vector<double>& a) {
    const std::size_t n = a.size();
    double w = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        w += a[i];
        for (std::size_t j = 0; j < n; ++j) {
            w -= 0.5 * a[i] * a[j] * p.y[i] * p.y[j] * p.K[i][j];
        }
    }
    return w;
}

// Accelerated projected gradient (Nesterov momentum, restart on objective
// decrease); plain 1/L steps stall on ill-conditioned polynomial kernels.
inline std::vector<double> solve(const Problem& p, int iterations = 100000) {
    const std::size_t n = p.y.size();
    double lipschitz = 1e-12;
    for (std::size_t i = 0; i < n; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < n; ++j) row += std::abs(p.K[i][j]);
        lipschitz = std::max(lipschitz, row);
    }
    const double step = 1.0 / lipschitz;
    std::vector<double> a = project(std::vector<double>(n, 0.0), p.y, p.C);
    std::vector<double> z = a;
    std::vector<double> grad(n), next(n);
    double t = 1.0;
    double prev_obj = objective(p, a);
    int stagnant = 0;
    for (int it = 0; it < iterations; ++it) {
        for (std::size_t i = 0; i < n; ++i) {
            double g = 1.0;
            for (std::size_t j = 0; j < n; ++j) g -= z[j] * p.y[i] * p.y[j] * p.K[i][j];
            grad[i] = g;
        }
        for (std::size_t i = 0; i < n; ++i) next[i] = z[i] + step * grad[i];
        next = project(next, p.y, p.C);
        double obj = objective(p, next);
        double moved = 0.0;
        for (std::size_t i = 0; i < n; ++i) moved = std::max(moved, std::abs(next[i] - a[i]));
        if (obj < prev_obj) {
            // restart momentum from the best iterate
            z = a;
            t = 1.0;
            if (moved < 1e-13 || ++stagnant > 200) break;
            continue;
        }
        stagnant = (obj - prev_obj < 1e-15 * std::max(1.0, std::abs(obj))) ? stagnant + 1 : 0;
        double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        for (std::size_t i = 0; i < n; ++i) {
            z[i] = next[i] + ((t - 1.0) / t_next) * (next[i] - a[i]);
        }
        t = t_next;
        a = next;
        prev_obj = obj;
        if ((moved < 1e-13 && it > 10) || stagnant > 50) break;
    }
    return a;
}

}  // namespace qp_oracle
