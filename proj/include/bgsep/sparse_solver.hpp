#pragma once

// Sparse separation in the background-free subspace W.
//
// The observed data projected onto W satisfies f_W = sum_i c_i u_i with a
// sparse coefficient vector. Rows of the normal equations
//
//     <u_n|f_W> = sum_i c_i <u_n|u_i>
//
// are fed one at a time (worst-predicted first) as equality constraints to a
// FOCUSS minimization of sum_i |c_i|^q, until the sample-wise misfit
// sum_j (f_W(x_j) - sum_i c_i u_i(x_j))^2 drops to delta.

#include "bgsep/function_space.hpp"
#include "bgsep/oblique.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace bgsep {

/// Point-evaluation measurements <x_j|f> at grid indices.
struct MeasurementSet {
    std::vector<int> grid_indices;
    Eigen::VectorXd values;

    static MeasurementSet all_points(const SampledFunction& f);
};

class SeparationProblem {
public:
    SeparationProblem(SpanningSet u, SampledFunction f_w_obs, double q, double delta,
                      int max_constraints = 0);

    const SpanningSet& u() const { return u_; }
    const SampledFunction& data() const { return data_; }
    double q() const { return q_; }
    double delta() const { return delta_; }
    int max_constraints() const { return max_constraints_; }
    int size() const { return u_.size(); }

    /// <u_n|u_i>, cached.
    const Eigen::MatrixXd& gram() const { return gram_; }
    /// <u_n|f_W>, cached.
    const Eigen::VectorXd& rhs() const { return rhs_; }

private:
    SpanningSet u_;
    SampledFunction data_;
    double q_;
    double delta_;
    int max_constraints_;
    Eigen::MatrixXd gram_;
    Eigen::VectorXd rhs_;
};

/// f_obs - P_{W⊥} f_obs.
SampledFunction project_data_to_w(const SampledFunction& f_obs, const OrthonormalBasis& w_perp);

/// C = sum_n <u_n|f_W> / sum_{i,n} <u_i|u_n>.
double initial_uniform_coefficient(const SeparationProblem& prob);

/// |<u_n|f_W> - sum_i c_i <u_n|u_i>| for every n.
Eigen::VectorXd normal_equation_residuals(const SeparationProblem& prob, const Eigen::VectorXd& c);

/// Largest unselected residual; ties go to the lowest index.
int select_worst_equation(const Eigen::VectorXd& residuals, const std::vector<int>& already_selected);

struct FocussOptions {
    int max_iterations = 500;
    double relative_change_tol = 1e-9;
    double pinv_rel_tol = 1e-12;
    /// |c_i| < zero_floor * max|c| is set to exactly zero after convergence.
    double zero_floor = 1e-12;
    /// Verify feasibility, descent and zero lock on every iteration; throws on violation.
    bool check_invariants = false;
};

struct FocussResult {
    Eigen::VectorXd c;
    int iterations = 0;
    bool converged = false;
    double constraint_violation = 0.0;
    std::vector<double> objective;  ///< sum |c_i|^q per iterate, starting with c_init
};

/// Local minimizer of sum_i |c_i|^q subject to A c = b by the reweighted
/// pseudoinverse iteration c <- W (A W)^+ b, W = diag(|c_i|^{1 - q/2}).
FocussResult focuss_minimize(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, double q,
                             const Eigen::VectorXd& c_init, const FocussOptions& opts = {});

double q_objective(const Eigen::VectorXd& c, double q);

/// Sample-wise misfit sum_j (f_W(x_j) - sum_i c_i u_i(x_j))^2.
double fidelity(const SeparationProblem& prob, const Eigen::VectorXd& c);

struct RoundRecord {
    int index = 0;  ///< equation added this round (0-based)
    double residual_before = 0.0;
    double residual_after = 0.0;
    int focuss_iterations = 0;
    bool focuss_converged = false;
};

struct SeparationState {
    Eigen::VectorXd c;
    std::vector<int> selected;  ///< 0-based, in order of selection
    double residual_sq = 0.0;
    double initial_coefficient = 0.0;
    bool success = false;
    std::vector<RoundRecord> log;

    int constraint_count() const { return static_cast<int>(selected.size()); }
    /// Indices with |c_i| > rel_threshold * max|c| (every nonzero when 0).
    std::vector<int> support(double rel_threshold = 0.0) const;
    /// Indices with c_i < 0; reported, never enforced.
    std::vector<int> negative_coefficients() const;
};

struct SeparationOptions {
    FocussOptions focuss;
    /// Start each round's FOCUSS solve from the previous round's coefficients
    /// instead of the uniform initial value.
    bool warm_start = false;
};

SeparationState separate(const SeparationProblem& prob, const SeparationOptions& opts = {});

/// Structured report (JSON text) of a finished separation.
std::string solver_report(const SeparationProblem& prob, const SeparationState& state,
                          double support_threshold = 0.0);

}  // namespace bgsep
