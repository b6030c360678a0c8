#pragma once

// Central-finite-difference gradient checking against training_loss.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "autogm/rng.hpp"
#include "autogm/trainer.hpp"

namespace autogm::testing {

// Relative error with an absolute floor guarding the central-difference
// noise floor at 64-bit precision.
inline double rel_err(double analytic, double fd) {
    const double scale = std::max({std::fabs(analytic), std::fabs(fd), 1e-6});
    return std::fabs(analytic - fd) / scale;
}

inline double fd_loss(const Dataset& d, const ParamSet& p, WeightStack& w, Eigen::MatrixXd& mat,
                      Eigen::Index i, Eigen::Index j, double h) {
    const double saved = mat(i, j);
    auto rng = make_rng(0);
    mat(i, j) = saved + h;
    const double up = training_loss(d, p, w, rng);
    mat(i, j) = saved - h;
    auto rng2 = make_rng(0);
    const double down = training_loss(d, p, w, rng2);
    mat(i, j) = saved;
    return (up - down) / (2.0 * h);
}

// Worst relative disagreement between the analytic gradient and central
// differences with step h over every entry of every matrix.
inline double max_gradient_error(const Dataset& d, const ParamSet& p, WeightStack& w,
                                 double h = 1e-5) {
    auto rng = make_rng(0);
    const WeightStack grads = gradient(d, p, w, rng);
    double worst = 0.0;
    for (std::size_t layer = 0; layer < w.layers.size(); ++layer) {
        for (Eigen::Index i = 0; i < w.layers[layer].rows(); ++i) {
            for (Eigen::Index j = 0; j < w.layers[layer].cols(); ++j) {
                const double fd = fd_loss(d, p, w, w.layers[layer], i, j, h);
                worst = std::max(worst, rel_err(grads.layers[layer](i, j), fd));
            }
        }
    }
    for (Eigen::Index i = 0; i < w.head.rows(); ++i) {
        for (Eigen::Index j = 0; j < w.head.cols(); ++j) {
            const double fd = fd_loss(d, p, w, w.head, i, j, h);
            worst = std::max(worst, rel_err(grads.head(i, j), fd));
        }
    }
    return worst;
}

}  // namespace autogm::testing
