#include "bgsep/sparse_solver.hpp"

#include "bgsep/error.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace bgsep {

MeasurementSet MeasurementSet::all_points(const SampledFunction& f) {
    MeasurementSet m;
    m.grid_indices.resize(static_cast<std::size_t>(f.size()));
    for (int j = 0; j < f.size(); ++j) m.grid_indices[static_cast<std::size_t>(j)] = j;
    m.values = f.values();
    return m;
}

SeparationProblem::SeparationProblem(SpanningSet u, SampledFunction f_w_obs, double q, double delta,
                                     int max_constraints)
    : u_(std::move(u)), data_(std::move(f_w_obs)), q_(q), delta_(delta),
      max_constraints_(max_constraints) {
    require_same_grid(*u_.grid(), *data_.grid());
    if (!(q_ > 0.0 && q_ <= 1.0)) {
        throw Error(ErrorCode::invalid_argument, "q must lie in (0, 1]");
    }
    if (!(delta_ >= 0.0)) throw Error(ErrorCode::invalid_argument, "delta must be non-negative");
    if (max_constraints_ <= 0) max_constraints_ = u_.size();
    if (max_constraints_ > u_.size()) {
        throw Error(ErrorCode::invalid_argument, "max_constraints exceeds the number of equations");
    }
    gram_ = gram_matrix(u_);
    rhs_ = inner_products(u_, data_);
}

SampledFunction project_data_to_w(const SampledFunction& f_obs, const OrthonormalBasis& w_perp) {
    return project_complement(w_perp, f_obs);
}

double initial_uniform_coefficient(const SeparationProblem& prob) {
    const double denom = prob.gram().sum();
    const double scale = prob.gram().cwiseAbs().sum();
    if (!(std::abs(denom) >= 1e-14 * scale) || scale == 0.0) {
        throw Error(ErrorCode::degenerate_input, "uniform start: Gram entries sum to zero");
    }
    return prob.rhs().sum() / denom;
}

Eigen::VectorXd normal_equation_residuals(const SeparationProblem& prob, const Eigen::VectorXd& c) {
    if (c.size() != prob.size()) {
        throw Error(ErrorCode::dimension_mismatch, "coefficient vector has the wrong length");
    }
    return (prob.rhs() - prob.gram() * c).cwiseAbs();
}

int select_worst_equation(const Eigen::VectorXd& residuals, const std::vector<int>& already_selected) {
    std::vector<bool> taken(static_cast<std::size_t>(residuals.size()), false);
    for (int idx : already_selected) {
        if (idx >= 0 && idx < residuals.size()) taken[static_cast<std::size_t>(idx)] = true;
    }
    int best = -1;
    double best_value = -1.0;
    for (Eigen::Index n = 0; n < residuals.size(); ++n) {
        if (taken[static_cast<std::size_t>(n)]) continue;
        const double r = std::abs(residuals[n]);
        if (best < 0 || r > best_value) {
            best = static_cast<int>(n);
            best_value = r;
        }
    }
    if (best < 0) throw Error(ErrorCode::exhausted, "every equation is already selected");
    return best;
}

double q_objective(const Eigen::VectorXd& c, double q) {
    return c.cwiseAbs().array().pow(q).sum();
}

FocussResult focuss_minimize(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, double q,
                             const Eigen::VectorXd& c_init, const FocussOptions& opts) {
    if (a.rows() != b.size() || a.cols() != c_init.size()) {
        throw Error(ErrorCode::dimension_mismatch, "focuss: A, b and c_init shapes disagree");
    }
    if (a.rows() > a.cols()) {
        throw Error(ErrorCode::dimension_mismatch, "focuss: more constraints than unknowns");
    }
    if (!(q > 0.0 && q <= 1.0)) throw Error(ErrorCode::invalid_argument, "focuss: q must lie in (0, 1]");
    if (!c_init.allFinite()) throw Error(ErrorCode::invalid_argument, "focuss: c_init is not finite");

    const double exponent = 1.0 - q / 2.0;
    const double b_scale = std::max(b.norm(), 1e-30);

    FocussResult res;
    res.c = c_init;
    res.objective.push_back(q_objective(res.c, q));

    Eigen::VectorXd weights(a.cols());
    for (int k = 0; k < opts.max_iterations; ++k) {
        weights = res.c.cwiseAbs().array().pow(exponent).matrix();
        const Eigen::MatrixXd aw = a * weights.asDiagonal();
        Eigen::BDCSVD<Eigen::MatrixXd> svd(aw, Eigen::ComputeThinU | Eigen::ComputeThinV);
        const Eigen::VectorXd& s = svd.singularValues();
        if (s.size() == 0 || !(s[0] > 0.0)) {
            throw Error(ErrorCode::singular_system, "focuss: weighted system has zero pseudoinverse");
        }
        Eigen::VectorXd utb = svd.matrixU().transpose() * b;
        const double cut = opts.pinv_rel_tol * s[0];
        for (Eigen::Index i = 0; i < s.size(); ++i) utb[i] = s[i] > cut ? utb[i] / s[i] : 0.0;
        Eigen::VectorXd next = weights.cwiseProduct(svd.matrixV() * utb);

        if (opts.check_invariants) {
            for (Eigen::Index i = 0; i < next.size(); ++i) {
                if (res.c[i] == 0.0 && next[i] != 0.0) {
                    throw Error(ErrorCode::singular_system, "focuss: zero lock violated");
                }
            }
            const double viol = (a * next - b).norm();
            if (viol > 1e-8 * b_scale) {
                throw Error(ErrorCode::singular_system, "focuss: iterate violates the constraints");
            }
            // Descent is a property of feasible iterates; the first step from
            // an arbitrary start may go either way.
            const double obj = q_objective(next, q);
            if (k > 0 && obj > res.objective.back() + 1e-10 * std::max(1.0, res.objective.back())) {
                throw Error(ErrorCode::singular_system, "focuss: objective increased");
            }
        }

        const double change = (next - res.c).norm() / std::max(res.c.norm(), 1e-30);
        res.c = std::move(next);
        res.iterations = k + 1;
        res.objective.push_back(q_objective(res.c, q));
        if (change < opts.relative_change_tol) {
            res.converged = true;
            break;
        }
    }

    const double cmax = res.c.cwiseAbs().maxCoeff();
    for (Eigen::Index i = 0; i < res.c.size(); ++i) {
        if (std::abs(res.c[i]) < opts.zero_floor * cmax) res.c[i] = 0.0;
    }
    res.constraint_violation = (a * res.c - b).norm();
    return res;
}

double fidelity(const SeparationProblem& prob, const Eigen::VectorXd& c) {
    if (c.size() != prob.size()) {
        throw Error(ErrorCode::dimension_mismatch, "coefficient vector has the wrong length");
    }
    return (prob.data().values() - prob.u().samples() * c).squaredNorm();
}

std::vector<int> SeparationState::support(double rel_threshold) const {
    std::vector<int> s;
    if (c.size() == 0) return s;
    const double cut = rel_threshold * c.cwiseAbs().maxCoeff();
    for (Eigen::Index i = 0; i < c.size(); ++i) {
        if (c[i] != 0.0 && std::abs(c[i]) > cut) s.push_back(static_cast<int>(i));
    }
    return s;
}

std::vector<int> SeparationState::negative_coefficients() const {
    std::vector<int> s;
    for (Eigen::Index i = 0; i < c.size(); ++i) {
        if (c[i] < 0.0) s.push_back(static_cast<int>(i));
    }
    return s;
}

SeparationState separate(const SeparationProblem& prob, const SeparationOptions& opts) {
    const int m = prob.size();
    SeparationState state;
    state.initial_coefficient = initial_uniform_coefficient(prob);
    const Eigen::VectorXd uniform = Eigen::VectorXd::Constant(m, state.initial_coefficient);
    state.c = uniform;
    state.residual_sq = fidelity(prob, state.c);
    if (state.residual_sq <= prob.delta()) {
        state.success = true;
        return state;
    }

    Eigen::MatrixXd a_sel(0, m);
    Eigen::VectorXd b_sel(0);
    while (state.constraint_count() < prob.max_constraints()) {
        const Eigen::VectorXd residuals = normal_equation_residuals(prob, state.c);
        const int next = select_worst_equation(residuals, state.selected);
        state.selected.push_back(next);

        const Eigen::Index r = a_sel.rows();
        a_sel.conservativeResize(r + 1, Eigen::NoChange);
        a_sel.row(r) = prob.gram().row(next);
        b_sel.conservativeResize(r + 1);
        b_sel[r] = prob.rhs()[next];

        const Eigen::VectorXd& start = opts.warm_start ? state.c : uniform;
        FocussResult fr = focuss_minimize(a_sel, b_sel, prob.q(), start, opts.focuss);

        RoundRecord rec;
        rec.index = next;
        rec.residual_before = state.residual_sq;
        state.c = std::move(fr.c);
        state.residual_sq = fidelity(prob, state.c);
        rec.residual_after = state.residual_sq;
        rec.focuss_iterations = fr.iterations;
        rec.focuss_converged = fr.converged;
        state.log.push_back(rec);

        if (state.residual_sq <= prob.delta()) {
            state.success = true;
            break;
        }
    }
    return state;
}

std::string solver_report(const SeparationProblem& prob, const SeparationState& state,
                          double support_threshold) {
    using nlohmann::ordered_json;
    auto one_based = [](const std::vector<int>& v) {
        std::vector<int> out(v);
        for (int& i : out) ++i;
        return out;
    };
    ordered_json j;
    j["q"] = prob.q();
    j["delta"] = prob.delta();
    j["success"] = state.success;
    j["n_constraints"] = state.constraint_count();
    j["selected"] = one_based(state.selected);
    j["residual_sq"] = state.residual_sq;
    j["initial_coefficient"] = state.initial_coefficient;
    j["support_threshold"] = support_threshold;
    j["support"] = one_based(state.support(support_threshold));
    j["nonzero_count"] = static_cast<int>(state.support().size());
    j["negative_coefficients"] = one_based(state.negative_coefficients());
    ordered_json rounds = ordered_json::array();
    for (const RoundRecord& r : state.log) {
        rounds.push_back({{"index", r.index + 1},
                          {"residual_before", r.residual_before},
                          {"residual_after", r.residual_after},
                          {"focuss_iterations", r.focuss_iterations},
                          {"focuss_converged", r.focuss_converged}});
    }
    j["rounds"] = std::move(rounds);
    return j.dump(2);
}

}  // namespace bgsep
