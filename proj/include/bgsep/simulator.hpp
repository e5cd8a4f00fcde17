#pragma once

// Synthetic spectra: cubic B-spline lines on a uniform knot lattice, a smooth
// power-law background family, and seeded Gaussian perturbations.

#include "bgsep/function_space.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace bgsep {

enum class SplineNormalization {
    none,              ///< raw B-splines (partition of unity)
    unit_prototype,    ///< prototype scaled to unit L2 norm before translation
    unit_restricted,   ///< every restricted function scaled to unit quadrature norm
};

enum class NoiseMode {
    relative_std,  ///< std_j = (p/100)|f_j|
    relative_var,  ///< var_j = (p/100)|f_j|
};

/// Which function the per-point noise level is proportional to.
enum class NoiseReference { signal, data };

enum class DeltaPolicy {
    expected,  ///< safety * E[sum eps_j^2]
    chi2,      ///< E[sum eps_j^2] + sigmas * sd[sum eps_j^2]
};

struct Seeds {
    std::uint64_t support = 1;
    std::uint64_t coeff = 2;
    std::uint64_t noise = 3;
};

struct ExperimentConfig {
    double grid_a = 0.0;
    double grid_b = 1.0;
    int n_points = 1001;

    double knot_spacing = 0.01;
    SplineNormalization spline_normalization = SplineNormalization::unit_prototype;

    int background_count = 50;
    bool normalize_background = false;
    double background_rel_tol = 1e-10;

    int support_size = 30;
    double coeff_min = 0.0;
    double coeff_max = 1.0;

    double noise_percent = 1e-5;
    NoiseMode noise_mode = NoiseMode::relative_std;
    NoiseReference noise_reference = NoiseReference::signal;

    Seeds seeds;

    double q = 0.8;
    /// Negative means "derive from the noise model".
    double delta = -1.0;
    DeltaPolicy delta_policy = DeltaPolicy::chi2;
    double delta_safety = 1.0;
    double delta_sigmas = 3.0;
    int max_constraints = 0;
    bool warm_start = false;
    /// Recovered support keeps |c_i| > support_threshold * max|c|.
    double support_threshold = 1e-3;

    double projector_rank_tol = 0.0;
    int truncations = 3;

    std::vector<double> experiment_noise_levels{1e-5, 1.0, 3.0};
    int realizations = 1;

    void validate() const;
};

/// Cardinal cubic B-splines with knots spaced `spacing`, every translate whose
/// support meets (a, b), restricted to the grid. For [0, 1] and spacing 0.01
/// this is 103 functions.
SpanningSet bspline_basis(const GridPtr& grid, double spacing,
                          SplineNormalization normalization = SplineNormalization::none);

/// Cox-de Boor value of the B-spline of the given degree on knots[i..i+degree+1].
double bspline_value(const std::vector<double>& knots, int i, int degree, double x);

/// y_j(x) = (x + 0.01 j)^(-0.01 j), j = 1..count.
SpanningSet background_family(const GridPtr& grid, int count, bool normalize = false);

/// j^4 exp(-0.05 j), j = 1..count.
Eigen::VectorXd background_weights(int count);

/// sum_j j^4 exp(-0.05 j) y_j.
SampledFunction make_background(const SpanningSet& family);

struct PlantedSpectrum {
    std::vector<int> support;  ///< 0-based, ascending
    Eigen::VectorXd coeffs;    ///< aligned with support
    SampledFunction f_v;

    Eigen::VectorXd dense(int m) const;
};

PlantedSpectrum plant_spectrum(const SpanningSet& basis, int k, std::uint64_t support_seed,
                               std::uint64_t coeff_seed, double coeff_min = 0.0,
                               double coeff_max = 1.0);

/// Per-point noise standard deviations for `reference` under the given mode.
Eigen::VectorXd noise_std(const SampledFunction& reference, double percent, NoiseMode mode);

struct NoisyFunction {
    SampledFunction noisy;
    Eigen::VectorXd noise;
};

NoisyFunction add_noise(const SampledFunction& f, double percent, std::uint64_t seed,
                        NoiseMode mode = NoiseMode::relative_std);

/// Draw eps_j ~ N(0, std_j^2) with the given per-point deviations.
Eigen::VectorXd gaussian_noise(const Eigen::VectorXd& std_dev, std::uint64_t seed);

struct PlantedInstance {
    ExperimentConfig config;
    std::vector<int> true_support;
    Eigen::VectorXd true_coeffs;
    SampledFunction f_v;
    SampledFunction g;
    SampledFunction f_clean;
    SampledFunction f_obs;
    Eigen::VectorXd noise;      ///< exactly f_obs - f_clean
    Eigen::VectorXd noise_std;  ///< per-point deviations used for the draw

    Eigen::VectorXd dense_coeffs(int m) const;
};

/// Basis, background family and grid regenerated from a config.
struct ModelSpaces {
    GridPtr grid;
    SpanningSet basis;
    SpanningSet background;
};

ModelSpaces make_model_spaces(const ExperimentConfig& config);

PlantedInstance make_instance(const ExperimentConfig& config);
PlantedInstance make_instance(const ExperimentConfig& config, const ModelSpaces& spaces);

/// delta from the configured policy and the per-point noise deviations.
double default_delta(const ExperimentConfig& config, const Eigen::VectorXd& noise_std);

/// Relative quadrature L2 error ||estimate - truth|| / ||truth||.
double relative_l2_error(const SampledFunction& estimate, const SampledFunction& truth);

}  // namespace bgsep
