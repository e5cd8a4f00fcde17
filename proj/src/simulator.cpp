#include "bgsep/simulator.hpp"

#include "bgsep/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace bgsep {

void ExperimentConfig::validate() const {
    auto fail = [](const std::string& msg) { throw Error(ErrorCode::config, msg); };
    if (!(grid_a < grid_b)) fail("grid: a must be below b");
    if (n_points < 2) fail("grid: n_points must be at least 2");
    if (!(knot_spacing > 0.0)) fail("basis: knot_spacing must be positive");
    if (background_count < 1) fail("background: count must be at least 1");
    if (!(background_rel_tol > 0.0 && background_rel_tol < 1.0)) fail("background: rank_tol must lie in (0, 1)");
    if (support_size < 1) fail("spectrum: support_size must be at least 1");
    if (!(coeff_min <= coeff_max)) fail("spectrum: coeff_min must not exceed coeff_max");
    if (!(noise_percent >= 0.0)) fail("noise: percent must be non-negative");
    if (!(q > 0.0 && q <= 1.0)) fail("solver: q must lie in (0, 1]");
    if (!(support_threshold >= 0.0 && support_threshold < 1.0)) fail("solver: support_threshold must lie in [0, 1)");
    if (max_constraints < 0) fail("solver: max_constraints must be non-negative");
    if (!(projector_rank_tol >= 0.0)) fail("projector: rank_tol must be non-negative");
    if (truncations < 0) fail("projector: truncations must be non-negative");
    if (realizations < 1) fail("experiment: realizations must be at least 1");
    for (double p : experiment_noise_levels) {
        if (!(p >= 0.0)) fail("experiment: noise levels must be non-negative");
    }
}

double bspline_value(const std::vector<double>& knots, int i, int degree, double x) {
    if (degree == 0) {
        return (knots[static_cast<std::size_t>(i)] <= x && x < knots[static_cast<std::size_t>(i + 1)]) ? 1.0 : 0.0;
    }
    const double ti = knots[static_cast<std::size_t>(i)];
    const double tid = knots[static_cast<std::size_t>(i + degree)];
    const double ti1 = knots[static_cast<std::size_t>(i + 1)];
    const double tid1 = knots[static_cast<std::size_t>(i + degree + 1)];
    double value = 0.0;
    if (tid > ti) value += (x - ti) / (tid - ti) * bspline_value(knots, i, degree - 1, x);
    if (tid1 > ti1) value += (tid1 - x) / (tid1 - ti1) * bspline_value(knots, i + 1, degree - 1, x);
    return value;
}

SpanningSet bspline_basis(const GridPtr& grid, double spacing, SplineNormalization normalization) {
    constexpr int degree = 3;
    if (!(spacing > 0.0)) throw Error(ErrorCode::invalid_argument, "bspline: spacing must be positive");
    const double ratio = (grid->b() - grid->a()) / spacing;
    const double intervals = std::round(ratio);
    if (intervals < 1.0 || std::abs(ratio - intervals) > 1e-12 * std::max(1.0, ratio)) {
        throw Error(ErrorCode::invalid_argument, "bspline: spacing does not divide the interval");
    }
    const int m = static_cast<int>(intervals);
    const int count = m + degree;

    // Uniform knots extended by `degree` cells on each side of [a, b].
    std::vector<double> knots(static_cast<std::size_t>(m + 2 * degree + 1));
    for (std::size_t k = 0; k < knots.size(); ++k) {
        knots[k] = grid->a() + (static_cast<double>(k) - degree) * spacing;
    }

    Eigen::MatrixXd samples = Eigen::MatrixXd::Zero(grid->size(), count);
    for (int i = 0; i < count; ++i) {
        const double lo = knots[static_cast<std::size_t>(i)];
        const double hi = knots[static_cast<std::size_t>(i + degree + 1)];
        for (int j = 0; j < grid->size(); ++j) {
            const double x = grid->point(j);
            if (x < lo || x >= hi) continue;
            samples(j, i) = bspline_value(knots, i, degree, x);
        }
    }

    switch (normalization) {
        case SplineNormalization::none:
            break;
        case SplineNormalization::unit_prototype:
            // Closed-form ||B||^2 of the cardinal cubic B-spline on knot spacing h is 151 h / 315.
            samples /= std::sqrt(151.0 / 315.0 * spacing);
            break;
        case SplineNormalization::unit_restricted: {
            const Eigen::VectorXd norms = (grid->sqrt_weights().asDiagonal() * samples).colwise().norm();
            for (int i = 0; i < count; ++i) samples.col(i) /= norms[i];
            break;
        }
    }
    return SpanningSet(grid, std::move(samples), "bspline");
}

SpanningSet background_family(const GridPtr& grid, int count, bool normalize) {
    if (count < 1) throw Error(ErrorCode::invalid_argument, "background: count must be positive");
    Eigen::MatrixXd samples(grid->size(), count);
    for (int jj = 1; jj <= count; ++jj) {
        const double shift = 0.01 * jj;
        for (int k = 0; k < grid->size(); ++k) {
            samples(k, jj - 1) = std::pow(grid->point(k) + shift, -shift);
        }
    }
    if (normalize) {
        const Eigen::VectorXd norms = (grid->sqrt_weights().asDiagonal() * samples).colwise().norm();
        for (int jj = 0; jj < count; ++jj) samples.col(jj) /= norms[jj];
    }
    return SpanningSet(grid, std::move(samples), "background");
}

Eigen::VectorXd background_weights(int count) {
    Eigen::VectorXd w(count);
    for (int j = 1; j <= count; ++j) w[j - 1] = std::pow(j, 4) * std::exp(-0.05 * j);
    return w;
}

SampledFunction make_background(const SpanningSet& family) {
    return family.combine(background_weights(family.size()));
}

Eigen::VectorXd PlantedSpectrum::dense(int m) const {
    Eigen::VectorXd c = Eigen::VectorXd::Zero(m);
    for (std::size_t k = 0; k < support.size(); ++k) c[support[k]] = coeffs[static_cast<Eigen::Index>(k)];
    return c;
}

PlantedSpectrum plant_spectrum(const SpanningSet& basis, int k, std::uint64_t support_seed,
                               std::uint64_t coeff_seed, double coeff_min, double coeff_max) {
    const int m = basis.size();
    if (k < 1 || k > m) {
        throw Error(ErrorCode::invalid_argument, "plant_spectrum: support size must lie in [1, M]");
    }
    std::vector<int> idx(static_cast<std::size_t>(m));
    std::iota(idx.begin(), idx.end(), 0);
    std::mt19937_64 rng(support_seed);
    // Partial Fisher-Yates: the first k slots are a uniform draw without replacement.
    for (int i = 0; i < k; ++i) {
        std::uniform_int_distribution<int> pick(i, m - 1);
        std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(pick(rng))]);
    }
    std::vector<int> support(idx.begin(), idx.begin() + k);
    std::sort(support.begin(), support.end());

    std::mt19937_64 crng(coeff_seed);
    std::uniform_real_distribution<double> draw(coeff_min, coeff_max);
    Eigen::VectorXd coeffs(k);
    for (int i = 0; i < k; ++i) coeffs[i] = draw(crng);

    PlantedSpectrum out{std::move(support), std::move(coeffs), SampledFunction::zero(basis.grid())};
    out.f_v = basis.combine(out.dense(m));
    return out;
}

Eigen::VectorXd noise_std(const SampledFunction& reference, double percent, NoiseMode mode) {
    if (!(percent >= 0.0)) throw Error(ErrorCode::invalid_argument, "noise percent must be non-negative");
    const Eigen::ArrayXd mag = reference.values().cwiseAbs().array();
    const double frac = percent / 100.0;
    if (mode == NoiseMode::relative_std) return (frac * mag).matrix();
    return (frac * mag).sqrt().matrix();
}

Eigen::VectorXd gaussian_noise(const Eigen::VectorXd& std_dev, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd eps(std_dev.size());
    for (Eigen::Index j = 0; j < std_dev.size(); ++j) eps[j] = std_dev[j] * normal(rng);
    return eps;
}

NoisyFunction add_noise(const SampledFunction& f, double percent, std::uint64_t seed, NoiseMode mode) {
    const Eigen::VectorXd eps = gaussian_noise(noise_std(f, percent, mode), seed);
    SampledFunction noisy(f.grid(), f.values() + eps);
    Eigen::VectorXd stored = noisy.values() - f.values();
    return NoisyFunction{std::move(noisy), std::move(stored)};
}

Eigen::VectorXd PlantedInstance::dense_coeffs(int m) const {
    Eigen::VectorXd c = Eigen::VectorXd::Zero(m);
    for (std::size_t k = 0; k < true_support.size(); ++k) c[true_support[k]] = true_coeffs[static_cast<Eigen::Index>(k)];
    return c;
}

ModelSpaces make_model_spaces(const ExperimentConfig& config) {
    config.validate();
    GridPtr grid = make_uniform_grid(config.grid_a, config.grid_b, config.n_points);
    SpanningSet basis = bspline_basis(grid, config.knot_spacing, config.spline_normalization);
    SpanningSet background = background_family(grid, config.background_count, config.normalize_background);
    return ModelSpaces{grid, std::move(basis), std::move(background)};
}

PlantedInstance make_instance(const ExperimentConfig& config) {
    return make_instance(config, make_model_spaces(config));
}

PlantedInstance make_instance(const ExperimentConfig& config, const ModelSpaces& spaces) {
    config.validate();
    if (config.support_size > spaces.basis.size()) {
        throw Error(ErrorCode::config, "spectrum: support_size exceeds the number of basis functions");
    }
    PlantedSpectrum spec = plant_spectrum(spaces.basis, config.support_size, config.seeds.support,
                                          config.seeds.coeff, config.coeff_min, config.coeff_max);
    SampledFunction g = make_background(spaces.background);
    SampledFunction clean = spec.f_v + g;
    const SampledFunction& reference = config.noise_reference == NoiseReference::signal ? spec.f_v : clean;
    Eigen::VectorXd sd = noise_std(reference, config.noise_percent, config.noise_mode);
    const Eigen::VectorXd eps = gaussian_noise(sd, config.seeds.noise);
    SampledFunction obs(clean.grid(), clean.values() + eps);
    Eigen::VectorXd stored = obs.values() - clean.values();
    return PlantedInstance{config,         std::move(spec.support), std::move(spec.coeffs),
                           std::move(spec.f_v), std::move(g),       std::move(clean),
                           std::move(obs), std::move(stored),       std::move(sd)};
}

double default_delta(const ExperimentConfig& config, const Eigen::VectorXd& noise_std) {
    if (config.delta >= 0.0) return config.delta;
    const Eigen::ArrayXd var = noise_std.array().square();
    const double mean = var.sum();
    if (config.delta_policy == DeltaPolicy::expected) return config.delta_safety * mean;
    // sum of independent eps_j^2 has variance 2 sum var_j^2
    return mean + config.delta_sigmas * std::sqrt(2.0 * var.square().sum());
}

double relative_l2_error(const SampledFunction& estimate, const SampledFunction& truth) {
    const double denom = truth.norm();
    if (denom == 0.0) throw Error(ErrorCode::degenerate_input, "relative error against a zero function");
    return (estimate - truth).norm() / denom;
}

}  // namespace bgsep
