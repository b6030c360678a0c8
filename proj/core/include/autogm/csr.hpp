#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace autogm {

// Square sparse matrix in compressed-sparse-row form. Column indices are
// strictly increasing within each row.
template <typename Scalar>
struct CsrMatrix {
    std::int64_t n = 0;  // rows == cols
    std::vector<std::int64_t> row_offsets;  // size n+1
    std::vector<std::int32_t> col_indices;
    std::vector<Scalar> values;

    std::int64_t nnz() const { return static_cast<std::int64_t>(col_indices.size()); }
};

using RealCsr = CsrMatrix<double>;
using CountCsr = CsrMatrix<std::int32_t>;

// Threading pays only for large products; below this the dispatch jitter
// costs more than the work.
inline constexpr std::int64_t kSpmmParallelWork = 1 << 22;

// Y = M * X. Column-outer loop so each output column streams through X's
// corresponding column.
inline Eigen::MatrixXd spmm(const RealCsr& m, const Eigen::MatrixXd& x) {
    Eigen::MatrixXd y = Eigen::MatrixXd::Zero(m.n, x.cols());
#pragma omp parallel for if (m.nnz() * x.cols() > kSpmmParallelWork)
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
        for (std::int64_t u = 0; u < m.n; ++u) {
            double acc = 0.0;
            for (std::int64_t e = m.row_offsets[u]; e < m.row_offsets[u + 1]; ++e) {
                acc += m.values[e] * x(m.col_indices[e], c);
            }
            y(u, c) = acc;
        }
    }
    return y;
}

// Y = M^T * X (scatter form).
inline Eigen::MatrixXd spmm_transpose(const RealCsr& m, const Eigen::MatrixXd& x) {
    Eigen::MatrixXd y = Eigen::MatrixXd::Zero(m.n, x.cols());
#pragma omp parallel for if (m.nnz() * x.cols() > kSpmmParallelWork)
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
        for (std::int64_t u = 0; u < m.n; ++u) {
            const double xu = x(u, c);
            for (std::int64_t e = m.row_offsets[u]; e < m.row_offsets[u + 1]; ++e) {
                y(m.col_indices[e], c) += m.values[e] * xu;
            }
        }
    }
    return y;
}

inline Eigen::MatrixXd to_dense(const RealCsr& m) {
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(m.n, m.n);
    for (std::int64_t u = 0; u < m.n; ++u) {
        for (std::int64_t e = m.row_offsets[u]; e < m.row_offsets[u + 1]; ++e) {
            d(u, m.col_indices[e]) = m.values[e];
        }
    }
    return d;
}

}  // namespace autogm
