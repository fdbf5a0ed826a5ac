#include "spatialcv/optimize.hpp"

#include <algorithm>
#include <cmath>

#include "spatialcv/common.hpp"

namespace spcv {

namespace {

void project(std::vector<double>& x, const std::vector<double>& lo, const std::vector<double>& hi) {
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::clamp(x[i], lo[i], hi[i]);
}

}  // namespace

NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& objective,
                             std::vector<double> start,
                             const std::vector<double>& lower,
                             const std::vector<double>& upper,
                             int max_iter,
                             double tol) {
    const std::size_t n = start.size();
    require(n >= 1 && lower.size() == n && upper.size() == n, "nelder_mead: dimension mismatch");
    project(start, lower, upper);

    const double alpha = 1.0, gamma = 2.0, rho = 0.5, sigma = 0.5;

    auto eval = [&](std::vector<double> x) {
        project(x, lower, upper);
        return objective(x);
    };

    // Initial simplex: start plus one vertex per axis, stepped by a fraction
    // of the box width.
    std::vector<std::vector<double>> simplex(n + 1, start);
    std::vector<double> values(n + 1);
    for (std::size_t i = 0; i < n; ++i) {
        const double span = upper[i] - lower[i];
        double step = span > 0.0 ? 0.1 * span : 1.0;
        if (start[i] + step > upper[i]) step = -step;
        simplex[i + 1][i] += step;
        project(simplex[i + 1], lower, upper);
    }
    for (std::size_t i = 0; i <= n; ++i) values[i] = eval(simplex[i]);

    NelderMeadResult res;
    for (int iter = 0; iter < max_iter; ++iter) {
        std::vector<std::size_t> order(n + 1);
        for (std::size_t i = 0; i <= n; ++i) order[i] = i;
        std::sort(order.begin(), order.end(),
                  [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
        std::vector<std::vector<double>> sx(n + 1);
        std::vector<double> sv(n + 1);
        for (std::size_t i = 0; i <= n; ++i) {
            sx[i] = simplex[order[i]];
            sv[i] = values[order[i]];
        }
        simplex = std::move(sx);
        values = std::move(sv);

        const double spread = std::abs(values[n] - values[0]);
        if (spread <= tol * (std::abs(values[0]) + tol)) {
            res.converged = true;
            break;
        }

        std::vector<double> centroid(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) centroid[j] += simplex[i][j];
        }
        for (double& c : centroid) c /= static_cast<double>(n);

        auto blend = [&](double coef) {
            std::vector<double> x(n);
            for (std::size_t j = 0; j < n; ++j) {
                x[j] = centroid[j] + coef * (centroid[j] - simplex[n][j]);
            }
            project(x, lower, upper);
            return x;
        };

        const std::vector<double> reflected = blend(alpha);
        const double fr = objective(reflected);
        if (fr < values[0]) {
            const std::vector<double> expanded = blend(gamma);
            const double fe = objective(expanded);
            if (fe < fr) {
                simplex[n] = expanded;
                values[n] = fe;
            } else {
                simplex[n] = reflected;
                values[n] = fr;
            }
        } else if (fr < values[n - 1]) {
            simplex[n] = reflected;
            values[n] = fr;
        } else {
            const std::vector<double> contracted = blend(fr < values[n] ? rho : -rho);
            const double fc = objective(contracted);
            if (fc < std::min(fr, values[n])) {
                simplex[n] = contracted;
                values[n] = fc;
            } else {
                for (std::size_t i = 1; i <= n; ++i) {
                    for (std::size_t j = 0; j < n; ++j) {
                        simplex[i][j] = simplex[0][j] + sigma * (simplex[i][j] - simplex[0][j]);
                    }
                    project(simplex[i], lower, upper);
                    values[i] = objective(simplex[i]);
                }
            }
        }
    }

    std::size_t best = 0;
    for (std::size_t i = 1; i <= n; ++i) {
        if (values[i] < values[best]) best = i;
    }
    res.x = simplex[best];
    res.value = values[best];
    return res;
}

}  // namespace spcv
