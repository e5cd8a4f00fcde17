#pragma once

// Real functions sampled on a uniform grid, with the composite-trapezoid
// inner product. Every inner product in the library goes through here.

#include <Eigen/Dense>

#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

namespace bgsep {

class Grid {
public:
    Grid(double a, double b, int n_points);

    double a() const { return a_; }
    double b() const { return b_; }
    int size() const { return n_; }
    double spacing() const { return h_; }
    double point(int j) const;
    const Eigen::VectorXd& points() const { return points_; }

    /// Trapezoid weights: h everywhere except h/2 at both ends.
    const Eigen::VectorXd& weights() const { return weights_; }
    const Eigen::VectorXd& sqrt_weights() const { return sqrt_weights_; }

    bool operator==(const Grid& other) const;

private:
    double a_;
    double b_;
    int n_;
    double h_;
    Eigen::VectorXd points_;
    Eigen::VectorXd weights_;
    Eigen::VectorXd sqrt_weights_;
};

using GridPtr = std::shared_ptr<const Grid>;

GridPtr make_uniform_grid(double a, double b, int n_points);

class SampledFunction {
public:
    SampledFunction(GridPtr grid, Eigen::VectorXd values);

    static SampledFunction zero(GridPtr grid);
    static SampledFunction from(GridPtr grid, const std::function<double(double)>& fn);

    const GridPtr& grid() const { return grid_; }
    const Eigen::VectorXd& values() const { return values_; }
    int size() const { return static_cast<int>(values_.size()); }
    double operator[](int j) const { return values_[j]; }

    /// Quadrature L2 norm.
    double norm() const;

    SampledFunction& operator+=(const SampledFunction& other);
    SampledFunction& operator-=(const SampledFunction& other);
    SampledFunction& operator*=(double s);

private:
    GridPtr grid_;
    Eigen::VectorXd values_;
};

SampledFunction operator+(SampledFunction lhs, const SampledFunction& rhs);
SampledFunction operator-(SampledFunction lhs, const SampledFunction& rhs);
SampledFunction operator*(double s, SampledFunction f);

/// Ordered functions sharing one grid, stored column-wise (n_points x count).
class SpanningSet {
public:
    SpanningSet(GridPtr grid, Eigen::MatrixXd samples, std::string label = {});
    SpanningSet(const std::vector<SampledFunction>& functions, std::string label = {});

    const GridPtr& grid() const { return grid_; }
    const Eigen::MatrixXd& samples() const { return samples_; }
    const std::string& label() const { return label_; }
    int size() const { return static_cast<int>(samples_.cols()); }
    SampledFunction function(int i) const;

    /// Samples scaled row-wise by sqrt(w); inner products become plain dot products.
    Eigen::MatrixXd weighted_samples() const;

    /// Samples of sum_i coeffs_i f_i.
    SampledFunction combine(const Eigen::VectorXd& coeffs) const;

private:
    GridPtr grid_;
    Eigen::MatrixXd samples_;
    std::string label_;
};

void require_same_grid(const Grid& g1, const Grid& g2);

double inner_product(const SampledFunction& f, const SampledFunction& h);

/// Entry (i, j) is <A_i | B_j>.
Eigen::MatrixXd gram_matrix(const SpanningSet& A, const SpanningSet& B);
Eigen::MatrixXd gram_matrix(const SpanningSet& A);

/// Column vector of <A_i | f>.
Eigen::VectorXd inner_products(const SpanningSet& A, const SampledFunction& f);

// CSV with header `x,value`, 17 significant digits.
void write_csv(std::ostream& out, const SampledFunction& f);
void write_csv(const std::string& path, const SampledFunction& f);
SampledFunction read_csv(std::istream& in);
SampledFunction read_csv(const std::string& path);

}  // namespace bgsep
