#pragma once

#include <functional>
#include <vector>

namespace spcv {

struct NelderMeadResult {
    std::vector<double> x;
    double value = 0.0;
    bool converged = false;
};

/// Downhill simplex with box bounds enforced by projection. Deterministic:
/// no internal randomness beyond the caller-provided start.
NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& objective,
                             std::vector<double> start,
                             const std::vector<double>& lower,
                             const std::vector<double>& upper,
                             int max_iter = 400,
                             double tol = 1e-10);

}  // namespace spcv
