#include "bgsep/oblique.hpp"

#include "bgsep/error.hpp"
#include "linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace bgsep {

namespace {

// Eigenpairs of a symmetric PSD matrix sorted by descending eigenvalue.
// Round-off negatives are clamped to zero; ties keep the solver's order.
struct SortedEigen {
    Eigen::VectorXd values;
    Eigen::MatrixXd vectors;
};

SortedEigen sorted_eigen(const Eigen::MatrixXd& g) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g);
    if (es.info() != Eigen::Success) {
        throw Error(ErrorCode::singular_system, "eigendecomposition did not converge");
    }
    const Eigen::Index m = g.rows();
    std::vector<Eigen::Index> order(static_cast<std::size_t>(m));
    std::iota(order.begin(), order.end(), 0);
    Eigen::VectorXd vals = es.eigenvalues().cwiseMax(0.0);
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index i, Eigen::Index j) { return vals[i] > vals[j]; });
    SortedEigen out{Eigen::VectorXd(m), Eigen::MatrixXd(m, m)};
    for (Eigen::Index k = 0; k < m; ++k) {
        out.values[k] = vals[order[static_cast<std::size_t>(k)]];
        out.vectors.col(k) = es.eigenvectors().col(order[static_cast<std::size_t>(k)]);
    }
    return out;
}

Eigen::MatrixXd unweight(const Grid& grid, const Eigen::MatrixXd& weighted) {
    return grid.sqrt_weights().cwiseInverse().asDiagonal() * weighted;
}

}  // namespace

OrthonormalBasis orthonormalize(const SpanningSet& set, double rel_tol, SpectralRoute route) {
    if (!(rel_tol > 0.0 && rel_tol < 1.0)) {
        throw Error(ErrorCode::invalid_argument, "orthonormalize: rel_tol must lie in (0, 1)");
    }
    const Grid& grid = *set.grid();
    Eigen::MatrixXd basis;

    if (route == SpectralRoute::weighted_svd) {
        Eigen::BDCSVD<Eigen::MatrixXd> svd(set.weighted_samples(), Eigen::ComputeThinU);
        const Eigen::VectorXd& s = svd.singularValues();
        if (s.size() == 0 || !(s[0] > 0.0)) {
            throw Error(ErrorCode::degenerate_input, "orthonormalize: all functions are zero");
        }
        Eigen::Index keep = 0;
        while (keep < s.size() && s[keep] > rel_tol * s[0]) ++keep;
        basis = unweight(grid, svd.matrixU().leftCols(keep));
    } else {
        const SortedEigen eig = sorted_eigen(gram_matrix(set));
        if (!(eig.values[0] > 0.0)) {
            throw Error(ErrorCode::degenerate_input, "orthonormalize: all functions are zero");
        }
        const double cut = rel_tol * rel_tol * eig.values[0];
        Eigen::Index keep = 0;
        while (keep < eig.values.size() && eig.values[keep] > cut) ++keep;
        basis = set.samples() * eig.vectors.leftCols(keep) *
                eig.values.head(keep).cwiseSqrt().cwiseInverse().asDiagonal();
    }
    return OrthonormalBasis{SpanningSet(set.grid(), std::move(basis), set.label() + "/orthonormal"),
                            rel_tol};
}

SampledFunction project_orthogonal(const OrthonormalBasis& basis, const SampledFunction& f) {
    const SpanningSet& o = basis.functions;
    return o.combine(inner_products(o, f));
}

SampledFunction project_complement(const OrthonormalBasis& basis, const SampledFunction& f) {
    return f - project_orthogonal(basis, f);
}

SpanningSet complement_spanning_set(const SpanningSet& v, const OrthonormalBasis& w_perp) {
    const SpanningSet& o = w_perp.functions;
    require_same_grid(*v.grid(), *o.grid());
    const Eigen::MatrixXd coeffs = gram_matrix(o, v);  // J' x M
    return SpanningSet(v.grid(), v.samples() - o.samples() * coeffs, v.label() + "/complement");
}

SingularSystem build_singular_system(const SpanningSet& u, double rank_tol, SpectralRoute route) {
    if (!(rank_tol >= 0.0)) {
        throw Error(ErrorCode::invalid_argument, "rank_tol must be non-negative");
    }
    const Eigen::Index m = u.size();
    SingularSystem sys;

    if (route == SpectralRoute::weighted_svd) {
        const Eigen::MatrixXd uw = u.weighted_samples();
        Eigen::BDCSVD<Eigen::MatrixXd> svd(uw, Eigen::ComputeThinU | Eigen::ComputeThinV);
        const Eigen::VectorXd& s = svd.singularValues();
        if (s.size() == 0 || !(s[0] > 0.0)) {
            throw Error(ErrorCode::degenerate_input, "Gram matrix is zero");
        }
        const double floor = detail::round_off_floor(uw.rows(), uw.cols()) * s[0];
        const double cut = std::max(rank_tol * s[0], floor);
        Eigen::Index positive = 0;
        while (positive < s.size() && s[positive] > floor) ++positive;
        Eigen::Index keep = 0;
        while (keep < s.size() && s[keep] > cut) ++keep;
        sys.full_spectrum = s.head(positive);
        sys.sigmas = s.head(keep);
        sys.psis = svd.matrixV().leftCols(keep);
        sys.left_vectors = unweight(*u.grid(), svd.matrixU().leftCols(keep));
    } else {
        const SortedEigen eig = sorted_eigen(gram_matrix(u));
        const double lmax = eig.values[0];
        if (!(lmax > 0.0)) throw Error(ErrorCode::degenerate_input, "Gram matrix is zero");
        const double floor = detail::round_off_floor(m, m) * lmax;
        const double cut = std::max(rank_tol * rank_tol * lmax, floor);
        Eigen::Index positive = 0;
        while (positive < m && eig.values[positive] > floor) ++positive;
        Eigen::Index keep = 0;
        while (keep < m && eig.values[keep] > cut) ++keep;
        sys.full_spectrum = eig.values.head(positive).cwiseSqrt();
        sys.sigmas = eig.values.head(keep).cwiseSqrt();
        sys.psis = eig.vectors.leftCols(keep);
    }
    return sys;
}

Eigen::MatrixXd gram_pseudoinverse(const SingularSystem& sys) {
    const Eigen::VectorXd inv = sys.lambdas().cwiseInverse();
    return sys.psis * inv.asDiagonal() * sys.psis.transpose();
}

ObliqueProjector::ObliqueProjector(SpanningSet etas, SpanningSet xis, SingularSystem sys)
    : etas_(std::move(etas)), xis_(std::move(xis)), sys_(std::move(sys)) {
    require_same_grid(*etas_.grid(), *xis_.grid());
    if (etas_.size() != xis_.size() || etas_.size() != sys_.rank()) {
        throw Error(ErrorCode::dimension_mismatch, "projector: eta/xi/sigma counts differ");
    }
}

const SpanningSet& ObliqueProjector::dual_vectors() const {
    if (!duals_) {
        const Eigen::VectorXd inv_sigma = sys_.sigmas.cwiseInverse();
        Eigen::MatrixXd w = xis_.samples() * inv_sigma.asDiagonal() * sys_.psis.transpose();
        duals_.emplace(xis_.grid(), std::move(w), "duals");
    }
    return *duals_;
}

SampledFunction ObliqueProjector::apply(const SampledFunction& f) const {
    return etas_.combine(inner_products(xis_, f));
}

Eigen::VectorXd ObliqueProjector::coefficients(const SampledFunction& f) const {
    const Eigen::VectorXd proj = inner_products(xis_, f).cwiseQuotient(sys_.sigmas);
    return sys_.psis * proj;
}

ObliqueProjector build_oblique_projector(const SpanningSet& v, const SpanningSet& u,
                                         const SingularSystem& sys) {
    require_same_grid(*v.grid(), *u.grid());
    if (v.size() != u.size() || sys.psis.rows() != v.size()) {
        throw Error(ErrorCode::dimension_mismatch, "projector: V, U and psi dimensions differ");
    }
    if (sys.rank() == 0) {
        throw Error(ErrorCode::degenerate_input, "projector: singular system has rank zero");
    }
    const Eigen::VectorXd inv_sigma = sys.sigmas.cwiseInverse();
    Eigen::MatrixXd eta = v.samples() * sys.psis * inv_sigma.asDiagonal();
    Eigen::MatrixXd xi;
    if (sys.left_vectors && sys.left_vectors->rows() == u.grid()->size() &&
        sys.left_vectors->cols() == sys.rank()) {
        xi = *sys.left_vectors;
    } else {
        xi = u.samples() * sys.psis * inv_sigma.asDiagonal();
    }
    return ObliqueProjector(SpanningSet(v.grid(), std::move(eta), "eta"),
                            SpanningSet(u.grid(), std::move(xi), "xi"), sys);
}

ObliqueProjector build_oblique_projector(const SpanningSet& v, const SpanningSet& u,
                                         const SingularSystem& sys, const OrthonormalBasis& w_perp) {
    const ObliqueProjector raw = build_oblique_projector(v, u, sys);
    require_same_grid(*u.grid(), *w_perp.functions.grid());
    const Eigen::MatrixXd& o = w_perp.functions.samples();
    const Eigen::VectorXd& w = u.grid()->weights();
    Eigen::MatrixXd xi = raw.xis().samples();
    for (int pass = 0; pass < 2; ++pass) {
        xi -= o * (o.transpose() * w.asDiagonal() * xi);
    }
    SingularSystem s = sys;
    if (s.left_vectors) s.left_vectors = xi;
    return ObliqueProjector(raw.etas(), SpanningSet(u.grid(), std::move(xi), "xi"), std::move(s));
}

ObliqueProjector truncate_projector(const ObliqueProjector& p, int r) {
    if (r < 1 || r > p.rank()) {
        throw Error(ErrorCode::invalid_argument,
                    "truncate_projector: r must lie in [1, " + std::to_string(p.rank()) + "]");
    }
    const SingularSystem& full = p.singular_system();
    SingularSystem sys;
    sys.sigmas = full.sigmas.head(r);
    sys.psis = full.psis.leftCols(r);
    if (full.left_vectors) sys.left_vectors = full.left_vectors->leftCols(r);
    sys.full_spectrum = full.full_spectrum;
    return ObliqueProjector(SpanningSet(p.etas().grid(), p.etas().samples().leftCols(r), "eta"),
                            SpanningSet(p.xis().grid(), p.xis().samples().leftCols(r), "xi"),
                            std::move(sys));
}

SampledFunction apply_pseudoinverse_route(const SpanningSet& v, const SpanningSet& u,
                                          const Eigen::MatrixXd& g_pinv, const SampledFunction& f) {
    if (g_pinv.rows() != v.size() || g_pinv.cols() != u.size()) {
        throw Error(ErrorCode::dimension_mismatch, "pseudoinverse has the wrong shape");
    }
    return v.combine(g_pinv * inner_products(u, f));
}

SpanningSet dual_vectors_orthogonalized(const SpanningSet& v, const SpanningSet& u, double rank_tol) {
    require_same_grid(*v.grid(), *u.grid());
    const double floor = detail::round_off_floor(u.grid()->size(), u.size());
    const OrthonormalBasis q = orthonormalize(u, std::max(rank_tol, floor));
    const Eigen::MatrixXd gq = gram_matrix(q.functions, v);  // M' x M
    const Eigen::MatrixXd gq_pinv = detail::pseudoinverse(gq, floor);  // M x M'
    return SpanningSet(v.grid(), q.functions.samples() * gq_pinv.transpose(), "duals/orthogonalized");
}

SampledFunction apply_duals(const SpanningSet& v, const SpanningSet& duals, const SampledFunction& f) {
    if (v.size() != duals.size()) {
        throw Error(ErrorCode::dimension_mismatch, "dual count does not match spanning set");
    }
    return v.combine(inner_products(duals, f));
}

ProjectorSetup make_oblique_projector(const SpanningSet& v, const SpanningSet& background,
                                      const ProjectorOptions& options) {
    OrthonormalBasis w_perp = orthonormalize(background, options.background_rel_tol);
    SpanningSet u = complement_spanning_set(v, w_perp);
    SingularSystem sys = build_singular_system(u, options.rank_tol, options.route);
    ObliqueProjector projector = build_oblique_projector(v, u, sys, w_perp);
    std::optional<SpanningSet> orth;
    if (options.construction == GramConstruction::orthogonalized) {
        orth = dual_vectors_orthogonalized(v, u, options.rank_tol);
    }
    return ProjectorSetup{std::move(w_perp), std::move(u), std::move(sys), std::move(projector),
                          std::move(orth)};
}

}  // namespace bgsep
