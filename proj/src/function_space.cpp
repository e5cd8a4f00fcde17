#include "bgsep/function_space.hpp"

#include "bgsep/error.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace bgsep {

const char* to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::invalid_argument: return "invalid-argument";
        case ErrorCode::grid_mismatch: return "grid-mismatch";
        case ErrorCode::dimension_mismatch: return "dimension-mismatch";
        case ErrorCode::degenerate_input: return "degenerate-input";
        case ErrorCode::singular_system: return "singular-system";
        case ErrorCode::exhausted: return "exhausted";
        case ErrorCode::io: return "io";
        case ErrorCode::config: return "config";
    }
    return "unknown";
}

Grid::Grid(double a, double b, int n_points) : a_(a), b_(b), n_(n_points) {
    if (!(a < b)) {
        throw Error(ErrorCode::invalid_argument, "grid: interval start must be below its end");
    }
    if (n_points < 2) {
        throw Error(ErrorCode::invalid_argument, "grid: at least two points are required");
    }
    h_ = (b - a) / (n_points - 1);
    points_.resize(n_);
    for (int j = 0; j < n_; ++j) points_[j] = point(j);
    weights_ = Eigen::VectorXd::Constant(n_, h_);
    weights_[0] = weights_[n_ - 1] = 0.5 * h_;
    sqrt_weights_ = weights_.cwiseSqrt();
}

double Grid::point(int j) const {
    // Pin the last point to b exactly instead of accumulating a + j*h.
    if (j == n_ - 1) return b_;
    return a_ + j * h_;
}

bool Grid::operator==(const Grid& other) const {
    return a_ == other.a_ && b_ == other.b_ && n_ == other.n_;
}

GridPtr make_uniform_grid(double a, double b, int n_points) {
    return std::make_shared<const Grid>(a, b, n_points);
}

void require_same_grid(const Grid& g1, const Grid& g2) {
    if (!(g1 == g2)) {
        throw Error(ErrorCode::grid_mismatch, "functions live on different grids");
    }
}

SampledFunction::SampledFunction(GridPtr grid, Eigen::VectorXd values)
    : grid_(std::move(grid)), values_(std::move(values)) {
    if (!grid_) throw Error(ErrorCode::invalid_argument, "sampled function without a grid");
    if (values_.size() != grid_->size()) {
        throw Error(ErrorCode::dimension_mismatch, "sample count does not match grid size");
    }
    if (!values_.allFinite()) {
        throw Error(ErrorCode::invalid_argument, "sampled function has non-finite values");
    }
}

SampledFunction SampledFunction::zero(GridPtr grid) {
    const int n = grid->size();
    return SampledFunction(std::move(grid), Eigen::VectorXd::Zero(n));
}

SampledFunction SampledFunction::from(GridPtr grid, const std::function<double(double)>& fn) {
    Eigen::VectorXd v(grid->size());
    for (int j = 0; j < grid->size(); ++j) v[j] = fn(grid->point(j));
    return SampledFunction(std::move(grid), std::move(v));
}

double SampledFunction::norm() const { return std::sqrt(inner_product(*this, *this)); }

SampledFunction& SampledFunction::operator+=(const SampledFunction& other) {
    require_same_grid(*grid_, *other.grid_);
    values_ += other.values_;
    return *this;
}

SampledFunction& SampledFunction::operator-=(const SampledFunction& other) {
    require_same_grid(*grid_, *other.grid_);
    values_ -= other.values_;
    return *this;
}

SampledFunction& SampledFunction::operator*=(double s) {
    values_ *= s;
    return *this;
}

SampledFunction operator+(SampledFunction lhs, const SampledFunction& rhs) { return lhs += rhs; }
SampledFunction operator-(SampledFunction lhs, const SampledFunction& rhs) { return lhs -= rhs; }
SampledFunction operator*(double s, SampledFunction f) { return f *= s; }

SpanningSet::SpanningSet(GridPtr grid, Eigen::MatrixXd samples, std::string label)
    : grid_(std::move(grid)), samples_(std::move(samples)), label_(std::move(label)) {
    if (!grid_) throw Error(ErrorCode::invalid_argument, "spanning set without a grid");
    if (samples_.cols() == 0) throw Error(ErrorCode::invalid_argument, "spanning set is empty");
    if (samples_.rows() != grid_->size()) {
        throw Error(ErrorCode::dimension_mismatch, "spanning set rows do not match grid size");
    }
    if (!samples_.allFinite()) {
        throw Error(ErrorCode::invalid_argument, "spanning set has non-finite samples");
    }
}

namespace {

Eigen::MatrixXd stack(const std::vector<SampledFunction>& functions) {
    if (functions.empty()) throw Error(ErrorCode::invalid_argument, "spanning set is empty");
    const Grid& grid = *functions.front().grid();
    Eigen::MatrixXd m(grid.size(), static_cast<Eigen::Index>(functions.size()));
    for (std::size_t i = 0; i < functions.size(); ++i) {
        require_same_grid(grid, *functions[i].grid());
        m.col(static_cast<Eigen::Index>(i)) = functions[i].values();
    }
    return m;
}

}  // namespace

SpanningSet::SpanningSet(const std::vector<SampledFunction>& functions, std::string label)
    : SpanningSet(functions.empty() ? nullptr : functions.front().grid(), stack(functions),
                  std::move(label)) {}

SampledFunction SpanningSet::function(int i) const {
    return SampledFunction(grid_, samples_.col(i));
}

Eigen::MatrixXd SpanningSet::weighted_samples() const {
    return grid_->sqrt_weights().asDiagonal() * samples_;
}

SampledFunction SpanningSet::combine(const Eigen::VectorXd& coeffs) const {
    if (coeffs.size() != size()) {
        throw Error(ErrorCode::dimension_mismatch, "coefficient count does not match spanning set");
    }
    return SampledFunction(grid_, samples_ * coeffs);
}

double inner_product(const SampledFunction& f, const SampledFunction& h) {
    require_same_grid(*f.grid(), *h.grid());
    const Eigen::VectorXd& w = f.grid()->weights();
    const Eigen::VectorXd& x = f.values();
    const Eigen::VectorXd& y = h.values();
    // Fixed left-to-right accumulation of w_j*(x_j*y_j): swapping f and h
    // yields bit-identical sums.
    double sum = 0.0;
    for (Eigen::Index j = 0; j < x.size(); ++j) sum += w[j] * (x[j] * y[j]);
    return sum;
}

Eigen::MatrixXd gram_matrix(const SpanningSet& A, const SpanningSet& B) {
    require_same_grid(*A.grid(), *B.grid());
    return A.samples().transpose() * (A.grid()->weights().asDiagonal() * B.samples());
}

Eigen::MatrixXd gram_matrix(const SpanningSet& A) {
    const Eigen::MatrixXd s = A.weighted_samples();
    Eigen::MatrixXd g = s.transpose() * s;
    // Mirror the upper triangle so the result is exactly symmetric.
    g.triangularView<Eigen::StrictlyLower>() = g.transpose().triangularView<Eigen::StrictlyLower>();
    return g;
}

Eigen::VectorXd inner_products(const SpanningSet& A, const SampledFunction& f) {
    require_same_grid(*A.grid(), *f.grid());
    return A.samples().transpose() * A.grid()->weights().cwiseProduct(f.values());
}

void write_csv(std::ostream& out, const SampledFunction& f) {
    out << "x,value\n";
    out << std::setprecision(17);
    const Grid& g = *f.grid();
    for (int j = 0; j < g.size(); ++j) out << g.point(j) << ',' << f[j] << '\n';
}

void write_csv(const std::string& path, const SampledFunction& f) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::io, "cannot open " + path + " for writing");
    write_csv(out, f);
    if (!out) throw Error(ErrorCode::io, "failed writing " + path);
}

SampledFunction read_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line.rfind("x,value", 0) != 0) {
        throw Error(ErrorCode::io, "csv: expected header `x,value`");
    }
    std::vector<double> xs;
    std::vector<double> vs;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) {
            throw Error(ErrorCode::io, "csv: line " + std::to_string(line_no) + " has no comma");
        }
        try {
            xs.push_back(std::stod(line.substr(0, comma)));
            vs.push_back(std::stod(line.substr(comma + 1)));
        } catch (const std::exception&) {
            throw Error(ErrorCode::io, "csv: line " + std::to_string(line_no) + " is not numeric");
        }
    }
    if (xs.size() < 2) throw Error(ErrorCode::io, "csv: need at least two samples");
    auto grid = make_uniform_grid(xs.front(), xs.back(), static_cast<int>(xs.size()));
    for (std::size_t j = 0; j < xs.size(); ++j) {
        if (std::abs(xs[j] - grid->point(static_cast<int>(j))) > 1e-9 * grid->spacing()) {
            throw Error(ErrorCode::io, "csv: abscissae are not uniformly spaced");
        }
    }
    return SampledFunction(grid, Eigen::Map<const Eigen::VectorXd>(vs.data(), static_cast<Eigen::Index>(vs.size())));
}

SampledFunction read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::io, "cannot open " + path);
    return read_csv(in);
}

}  // namespace bgsep
