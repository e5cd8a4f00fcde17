#pragma once

#include "bgsep/error.hpp"
#include "bgsep/function_space.hpp"

#include <Eigen/Dense>

#include <optional>
#include <random>

namespace testing {

template <class Fn>
std::optional<bgsep::ErrorCode> error_code(Fn&& fn) {
    try {
        fn();
    } catch (const bgsep::Error& e) {
        return e.code();
    }
    return std::nullopt;
}

inline Eigen::MatrixXd gaussian(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
    std::normal_distribution<double> normal;
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
    return m;
}

inline bgsep::SpanningSet random_set(std::mt19937_64& rng, const bgsep::GridPtr& grid, int count) {
    return bgsep::SpanningSet(grid, gaussian(rng, grid->size(), count));
}

inline bgsep::SampledFunction random_function(std::mt19937_64& rng, const bgsep::GridPtr& grid) {
    return bgsep::SampledFunction(grid, gaussian(rng, grid->size(), 1).col(0));
}

}  // namespace testing
