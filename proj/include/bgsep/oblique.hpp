#pragma once

// Orthogonal and oblique projectors built from spanning sets.
//
// Given V = span{v_i} and a background subspace W⊥ = span{y_j}, the oblique
// projector E onto V along W⊥ is assembled from u_i = v_i - P_{W⊥} v_i and the
// spectral decomposition of G = <u_i|u_j>:
//
//     xi_n  = U psi_n / sigma_n,   eta_n = V psi_n / sigma_n,
//     E     = sum_n |eta_n><xi_n| = sum_i |v_i><w_i| = V G^+ U^*.
//
// The families {xi_n} and {eta_n} are biorthogonal; keeping only the leading
// r terms gives another (truncated) projector.

#include "bgsep/function_space.hpp"

#include <Eigen/Dense>

#include <optional>

namespace bgsep {

enum class SpectralRoute {
    weighted_svd,  ///< thin SVD of sqrt(w)·samples; resolves sigma down to ~eps·sigma_1
    gram_eigen,    ///< symmetric eigendecomposition of the Gram matrix
};

struct OrthonormalBasis {
    SpanningSet functions;
    double rank_tolerance_used = 0.0;

    int size() const { return functions.size(); }
};

/// Orthonormal basis for the numerically significant range of `set`.
/// Directions whose singular value (square root of Gram eigenvalue) falls
/// below rel_tol times the largest one are discarded.
OrthonormalBasis orthonormalize(const SpanningSet& set, double rel_tol,
                                SpectralRoute route = SpectralRoute::weighted_svd);

SampledFunction project_orthogonal(const OrthonormalBasis& basis, const SampledFunction& f);

/// f - P f.
SampledFunction project_complement(const OrthonormalBasis& basis, const SampledFunction& f);

/// u_i = v_i - P_{W⊥} v_i for every v_i.
SpanningSet complement_spanning_set(const SpanningSet& v, const OrthonormalBasis& w_perp);

struct SingularSystem {
    Eigen::VectorXd sigmas;  ///< descending, strictly positive
    Eigen::MatrixXd psis;    ///< M x N, orthonormal columns
    /// xi_n sampled on the grid (n_points x N), present when the SVD route
    /// produced them directly.
    std::optional<Eigen::MatrixXd> left_vectors;
    /// Every positive singular value before rank truncation, descending.
    Eigen::VectorXd full_spectrum;

    int rank() const { return static_cast<int>(sigmas.size()); }
    Eigen::VectorXd lambdas() const { return sigmas.cwiseAbs2(); }
};

/// Spectral decomposition of G = <u_i|u_j>. Retains sigma_n > rank_tol·sigma_1
/// (rank_tol = 0 keeps everything above the round-off floor).
SingularSystem build_singular_system(const SpanningSet& u, double rank_tol,
                                     SpectralRoute route = SpectralRoute::weighted_svd);

/// G^+ = sum_n psi_n psi_n^T / lambda_n.
Eigen::MatrixXd gram_pseudoinverse(const SingularSystem& sys);

class ObliqueProjector {
public:
    ObliqueProjector(SpanningSet etas, SpanningSet xis, SingularSystem sys);

    const SpanningSet& etas() const { return etas_; }
    const SpanningSet& xis() const { return xis_; }
    const SingularSystem& singular_system() const { return sys_; }
    int rank() const { return sys_.rank(); }

    /// Dual functionals w_i, i = 1..M (cached after first call).
    const SpanningSet& dual_vectors() const;

    SampledFunction apply(const SampledFunction& f) const;

    /// Coefficient map c = (<xi_n|f> / sigma_n) pulled back through psi, so
    /// that E f = sum_i c_i v_i.
    Eigen::VectorXd coefficients(const SampledFunction& f) const;

private:
    SpanningSet etas_;
    SpanningSet xis_;
    SingularSystem sys_;
    mutable std::optional<SpanningSet> duals_;
};

ObliqueProjector build_oblique_projector(const SpanningSet& v, const SpanningSet& u,
                                         const SingularSystem& sys);

/// As above, with every xi_n projected back onto W = (W⊥)^⊥. The SVD carries
/// round-off from W⊥ into xi_n amplified by 1/sigma_n; removing it keeps
/// <xi_m|eta_n> = delta_mn far more accurate for tiny sigma_n.
ObliqueProjector build_oblique_projector(const SpanningSet& v, const SpanningSet& u,
                                         const SingularSystem& sys, const OrthonormalBasis& w_perp);

inline SampledFunction apply_projector(const ObliqueProjector& p, const SampledFunction& f) {
    return p.apply(f);
}

inline const SpanningSet& dual_vectors(const ObliqueProjector& p) { return p.dual_vectors(); }

/// Keeps the leading r terms of the spectral expansion; 1 <= r <= rank.
ObliqueProjector truncate_projector(const ObliqueProjector& p, int r);

/// E f through the explicit pseudoinverse, V G^+ U^* f.
SampledFunction apply_pseudoinverse_route(const SpanningSet& v, const SpanningSet& u,
                                          const Eigen::MatrixXd& g_pinv, const SampledFunction& f);

/// Dual functionals from an orthonormalized spanning set {q_k} of W:
/// w_i = sum_k (G_q^+)_{ik} q_k with (G_q)_{ki} = <q_k|v_i>.
SpanningSet dual_vectors_orthogonalized(const SpanningSet& v, const SpanningSet& u, double rank_tol);

/// sum_i <w_i|f> v_i.
SampledFunction apply_duals(const SpanningSet& v, const SpanningSet& duals, const SampledFunction& f);

enum class GramConstruction { plain, orthogonalized };

/// One-call construction from V and the background spanning set.
struct ProjectorSetup {
    OrthonormalBasis w_perp;
    SpanningSet u;
    SingularSystem system;
    ObliqueProjector projector;
    std::optional<SpanningSet> orthogonalized_duals;
};

struct ProjectorOptions {
    double background_rel_tol = 1e-10;
    double rank_tol = 0.0;
    SpectralRoute route = SpectralRoute::weighted_svd;
    GramConstruction construction = GramConstruction::plain;
};

ProjectorSetup make_oblique_projector(const SpanningSet& v, const SpanningSet& background,
                                      const ProjectorOptions& options = {});

}  // namespace bgsep
