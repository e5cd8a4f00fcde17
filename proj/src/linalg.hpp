#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <limits>

namespace bgsep::detail {

inline double round_off_floor(Eigen::Index rows, Eigen::Index cols) {
    return static_cast<double>(std::max(rows, cols)) * std::numeric_limits<double>::epsilon();
}

/// Moore-Penrose pseudoinverse, discarding singular values <= rel_tol * s_max.
inline Eigen::MatrixXd pseudoinverse(const Eigen::MatrixXd& a, double rel_tol) {
    Eigen::BDCSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd& s = svd.singularValues();
    Eigen::VectorXd inv = Eigen::VectorXd::Zero(s.size());
    if (s.size() > 0 && s[0] > 0.0) {
        const double cut = rel_tol * s[0];
        for (Eigen::Index k = 0; k < s.size(); ++k) {
            if (s[k] > cut) inv[k] = 1.0 / s[k];
        }
    }
    return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

}  // namespace bgsep::detail
