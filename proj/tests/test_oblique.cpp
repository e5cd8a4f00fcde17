#include "doctest.h"
#include "helpers.hpp"

#include "bgsep/oblique.hpp"
#include "bgsep/simulator.hpp"

#include <cmath>

using namespace bgsep;
using testing::error_code;

namespace {

double max_offdiag_identity(const Eigen::MatrixXd& m) {
    return (m - Eigen::MatrixXd::Identity(m.rows(), m.cols())).cwiseAbs().maxCoeff();
}

struct Toy {
    SpanningSet v;
    SpanningSet y;
};

Toy random_toy(std::mt19937_64& rng, int m, int j, int n = 40) {
    const GridPtr g = make_uniform_grid(0.0, 1.0, n);
    return Toy{testing::random_set(rng, g, m), testing::random_set(rng, g, j)};
}

}  // namespace

TEST_CASE("orthonormalize {1, x} on [0, 1]") {
    const GridPtr g = make_uniform_grid(0.0, 1.0, 201);
    const SpanningSet s({SampledFunction::from(g, [](double) { return 1.0; }),
                         SampledFunction::from(g, [](double x) { return x; })});
    for (SpectralRoute route : {SpectralRoute::weighted_svd, SpectralRoute::gram_eigen}) {
        const OrthonormalBasis b = orthonormalize(s, 1e-12, route);
        CHECK(b.size() == 2);
        CHECK(max_offdiag_identity(gram_matrix(b.functions)) <= 1e-8);
    }
}

TEST_CASE("orthonormalize drops duplicates and rejects degenerate input") {
    const GridPtr g = make_uniform_grid(0.0, 1.0, 11);
    const auto one = SampledFunction::from(g, [](double) { return 1.0; });
    CHECK(orthonormalize(SpanningSet({one, one}), 1e-10).size() == 1);
    CHECK(orthonormalize(SpanningSet({one, one}), 1e-10, SpectralRoute::gram_eigen).size() == 1);
    const SpanningSet zero({SampledFunction::zero(g), SampledFunction::zero(g)});
    CHECK(error_code([&] { orthonormalize(zero, 1e-10); }) == ErrorCode::degenerate_input);
    CHECK(error_code([&] { orthonormalize(SpanningSet({one}), 0.0); }) == ErrorCode::invalid_argument);
    CHECK(error_code([&] { orthonormalize(SpanningSet({one}), 1.0); }) == ErrorCode::invalid_argument);
}

TEST_CASE("background rank agrees with a column-pivoted QR oracle") {
    const GridPtr g = make_uniform_grid(0.0, 1.0, 1001);
    const SpanningSet y = background_family(g, 50);
    const Eigen::MatrixXd a = g->sqrt_weights().asDiagonal() * y.samples();
    for (double tol : {1e-6, 1e-8, 1e-10, 1e-12}) {
        const OrthonormalBasis b = orthonormalize(y, tol);
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
        qr.setThreshold(tol);
        // |R_kk| of a pivoted QR brackets sigma_k within small factors, so the
        // two ranks may differ by one at a threshold that splits a gap unevenly.
        CHECK(std::abs(b.size() - static_cast<int>(qr.rank())) <= 1);
        CHECK(max_offdiag_identity(gram_matrix(b.functions)) <= 1e-8);
    }
    CHECK(orthonormalize(y, 1e-10).size() == 11);
    CHECK(orthonormalize(y, 1e-12).size() == 13);
}

TEST_CASE("orthogonal projector fixes its range and kills its complement") {
    std::mt19937_64 rng(1);
    const GridPtr g = make_uniform_grid(0.0, 1.0, 30);
    const OrthonormalBasis b = orthonormalize(testing::random_set(rng, g, 4), 1e-12);
    const SampledFunction o1 = b.functions.function(0);
    CHECK((project_orthogonal(b, o1) - o1).norm() <= 1e-8);

    const SampledFunction f = testing::random_function(rng, g);
    const SampledFunction perp = project_complement(b, f);
    CHECK(project_orthogonal(b, perp).norm() <= 1e-8 * perp.norm());
    CHECK(inner_products(b.functions, perp).cwiseAbs().maxCoeff() <= 1e-8 * f.norm());
    CHECK((project_orthogonal(b, o1 + perp) - o1).norm() <= 1e-8);

    const SampledFunction pf = project_orthogonal(b, f);
    CHECK((project_orthogonal(b, pf) - pf).norm() <= 1e-12 * f.norm());
}

TEST_CASE("complement spanning set is orthogonal to the background") {
    std::mt19937_64 rng(2);
    const Toy t = random_toy(rng, 5, 3);
    const OrthonormalBasis b = orthonormalize(t.y, 1e-12);
    const SpanningSet u = complement_spanning_set(t.v, b);
    CHECK(gram_matrix(b.functions, u).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(gram_matrix(t.y, u).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("orthonormal spanning set has unit singular values") {
    std::mt19937_64 rng(3);
    const GridPtr g = make_uniform_grid(0.0, 1.0, 50);
    const OrthonormalBasis b = orthonormalize(testing::random_set(rng, g, 6), 1e-12);
    for (SpectralRoute route : {SpectralRoute::weighted_svd, SpectralRoute::gram_eigen}) {
        const SingularSystem sys = build_singular_system(b.functions, 0.0, route);
        CHECK(sys.rank() == 6);
        CHECK((sys.sigmas.array() - 1.0).abs().maxCoeff() <= 1e-12);
    }
}

TEST_CASE("both spectral routes give the same descending spectrum") {
    std::mt19937_64 rng(4);
    const Toy t = random_toy(rng, 7, 2);
    const OrthonormalBasis b = orthonormalize(t.y, 1e-12);
    const SpanningSet u = complement_spanning_set(t.v, b);
    const SingularSystem a = build_singular_system(u, 0.0);
    const SingularSystem e = build_singular_system(u, 0.0, SpectralRoute::gram_eigen);
    REQUIRE(a.rank() == e.rank());
    CHECK((a.sigmas - e.sigmas).norm() <= 1e-10 * a.sigmas[0]);
    for (int n = 1; n < a.rank(); ++n) CHECK(a.sigmas[n] <= a.sigmas[n - 1]);
    CHECK((a.lambdas() - a.sigmas.cwiseAbs2()).norm() == 0.0);
    CHECK(max_offdiag_identity(a.psis.transpose() * a.psis) <= 1e-12);
    CHECK(error_code([&] { build_singular_system(u, -1.0); }) == ErrorCode::invalid_argument);
}

TEST_CASE("rank-deficient spanning sets lose exactly the dependent directions") {
    std::mt19937_64 rng(5);
    const GridPtr g = make_uniform_grid(0.0, 1.0, 25);
    const SpanningSet s = testing::random_set(rng, g, 3);
    Eigen::MatrixXd dup(g->size(), 4);
    dup << s.samples(), s.samples().col(0) + s.samples().col(1);
    const SpanningSet d(g, dup);
    CHECK(build_singular_system(d, 0.0).rank() == 3);
    CHECK(build_singular_system(d, 0.0, SpectralRoute::gram_eigen).rank() == 3);
}

TEST_CASE("rank_tol keeps sigma above rank_tol * sigma_1") {
    const GridPtr g = make_uniform_grid(0.0, 1.0, 4);
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(4, 3);
    const Eigen::VectorXd sw = g->sqrt_weights();
    m(0, 0) = 1.0 / sw[0];
    m(1, 1) = 1e-3 / sw[1];
    m(2, 2) = 1e-7 / sw[2];
    const SpanningSet u(g, m);
    CHECK(build_singular_system(u, 0.0).rank() == 3);
    CHECK(build_singular_system(u, 1e-5).rank() == 2);
    CHECK(build_singular_system(u, 1e-2).rank() == 1);
    CHECK(build_singular_system(u, 0.0).sigmas[2] == doctest::Approx(1e-7).epsilon(1e-9));
}

TEST_CASE("three-point toy matches a brute-force decomposition") {
    const GridPtr g = make_uniform_grid(0.0, 1.0, 3);
    const SpanningSet v(g, (Eigen::MatrixXd(3, 2) << 1, 0, 0, 1, 0, 0).finished());
    const SpanningSet y(g, Eigen::MatrixXd::Ones(3, 1));
    const ProjectorSetup s = make_oblique_projector(v, y, {1e-12});

    Eigen::Matrix3d basis;
    basis << 1, 0, 1, 0, 1, 1, 0, 0, 1;
    std::mt19937_64 rng(6);
    for (int t = 0; t < 10; ++t) {
        const SampledFunction f = testing::random_function(rng, g);
        const Eigen::Vector3d cd = basis.fullPivLu().solve(f.values());
        const Eigen::VectorXd expected = v.samples() * cd.head<2>();
        CHECK((s.projector.apply(f).values() - expected).norm() <= 1e-12 * f.values().norm());
    }
}

TEST_CASE("background orthogonal to V gives the orthogonal projector") {
    std::mt19937_64 rng(7);
    const GridPtr g = make_uniform_grid(0.0, 1.0, 12);
    const SpanningSet v = testing::random_set(rng, g, 4);
    // Background = weighted orthogonal complement of span(V).
    const Eigen::MatrixXd a = g->sqrt_weights().asDiagonal() * v.samples();
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
    const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(12, 12);
    const Eigen::MatrixXd comp = g->sqrt_weights().cwiseInverse().asDiagonal() * q.rightCols(8);
    const ProjectorSetup s = make_oblique_projector(v, SpanningSet(g, comp), {1e-12});
    const OrthonormalBasis ov = orthonormalize(v, 1e-12);
    for (int t = 0; t < 5; ++t) {
        const SampledFunction f = testing::random_function(rng, g);
        CHECK((s.projector.apply(f) - project_orthogonal(ov, f)).norm() <= 1e-10 * f.norm());
    }
}

TEST_CASE("projector agrees with the least-squares decomposition oracle") {
    std::mt19937_64 rng(8);
    for (int t = 0; t < 30; ++t) {
        const int m = 1 + static_cast<int>(rng() % 7);
        const int j = 1 + static_cast<int>(rng() % 5);
        const Toy toy = random_toy(rng, m, j);
        const ProjectorSetup s = make_oblique_projector(toy.v, toy.y, {1e-12});
        const SampledFunction f = testing::random_function(rng, toy.v.grid());
        const Eigen::VectorXd sw = f.grid()->sqrt_weights();
        Eigen::MatrixXd a(f.size(), m + j);
        a << sw.asDiagonal() * toy.v.samples(), sw.asDiagonal() * toy.y.samples();
        const Eigen::VectorXd cd = a.colPivHouseholderQr().solve(sw.asDiagonal() * f.values());
        const Eigen::VectorXd oracle = toy.v.samples() * cd.head(m);
        CHECK((s.projector.apply(f).values() - oracle).norm() <= 1e-8 * f.values().norm());
    }
}

TEST_CASE("projector properties on random instances") {
    std::mt19937_64 rng(9);
    for (int t = 0; t < 20; ++t) {
        const Toy toy = random_toy(rng, 2 + static_cast<int>(rng() % 9), 1 + static_cast<int>(rng() % 5));
        const ProjectorSetup s = make_oblique_projector(toy.v, toy.y, {1e-12});
        const ObliqueProjector& p = s.projector;

        CHECK(max_offdiag_identity(gram_matrix(p.xis(), p.etas())) <= 1e-8);
        for (int i = 0; i < toy.v.size(); ++i) {
            const SampledFunction vi = toy.v.function(i);
            CHECK((p.apply(vi) - vi).norm() <= 1e-8 * vi.norm());
            const SampledFunction ui = s.u.function(i);
            CHECK((p.xis().combine(inner_products(p.xis(), ui)) - ui).norm() <= 1e-8 * ui.norm());
        }
        for (int j = 0; j < toy.y.size(); ++j) {
            CHECK(p.apply(toy.y.function(j)).norm() <= 1e-8 * toy.y.function(j).norm());
        }
        const SampledFunction f = testing::random_function(rng, toy.v.grid());
        const SampledFunction ef = p.apply(f);
        CHECK((p.apply(ef) - ef).norm() <= 1e-8 * f.norm());
        const SampledFunction eta1 = p.etas().function(0);
        CHECK((p.apply(eta1) - eta1).norm() <= 1e-8 * eta1.norm());
    }
}

TEST_CASE("dual vectors reproduce the projector") {
    std::mt19937_64 rng(10);
    const Toy toy = random_toy(rng, 6, 3);
    const ProjectorSetup s = make_oblique_projector(toy.v, toy.y, {1e-12});
    const SpanningSet& w = dual_vectors(s.projector);
    CHECK(w.size() == 6);
    for (int t = 0; t < 10; ++t) {
        const SampledFunction f = testing::random_function(rng, toy.v.grid());
        CHECK((apply_duals(toy.v, w, f) - s.projector.apply(f)).norm() <= 1e-8 * f.norm());
        const SampledFunction pinv = apply_pseudoinverse_route(toy.v, s.u, gram_pseudoinverse(s.system), f);
        CHECK((pinv - s.projector.apply(f)).norm() <= 1e-8 * f.norm());
    }
    const Eigen::MatrixXd wv = gram_matrix(w, toy.v);
    CHECK((wv * wv - wv).cwiseAbs().maxCoeff() <= 1e-6);
    CHECK((s.projector.coefficients(toy.v.function(2)) - Eigen::VectorXd::Unit(6, 2)).norm() <= 1e-8);
}

TEST_CASE("orthonormal U with identity psi has duals equal to U") {
    std::mt19937_64 rng(11);
    const GridPtr g = make_uniform_grid(0.0, 1.0, 20);
    const SpanningSet u = orthonormalize(testing::random_set(rng, g, 4), 1e-12).functions;
    const SingularSystem sys = build_singular_system(u, 0.0);
    const ObliqueProjector p = build_oblique_projector(u, u, sys);
    CHECK((p.dual_vectors().samples() - u.samples()).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("orthogonalized Gram construction matches the plain one") {
    std::mt19937_64 rng(12);
    const Toy toy = random_toy(rng, 5, 2);
    ProjectorOptions opts{1e-12};
    opts.construction = GramConstruction::orthogonalized;
    const ProjectorSetup s = make_oblique_projector(toy.v, toy.y, opts);
    REQUIRE(s.orthogonalized_duals.has_value());
    for (int t = 0; t < 5; ++t) {
        const SampledFunction f = testing::random_function(rng, toy.v.grid());
        CHECK((apply_duals(toy.v, *s.orthogonalized_duals, f) - s.projector.apply(f)).norm() <= 1e-8 * f.norm());
    }
}

TEST_CASE("truncated projector") {
    std::mt19937_64 rng(13);
    const Toy toy = random_toy(rng, 8, 3);
    const ProjectorSetup s = make_oblique_projector(toy.v, toy.y, {1e-12});
    const ObliqueProjector& p = s.projector;
    const int n = p.rank();
    CHECK(error_code([&] { truncate_projector(p, 0); }) == ErrorCode::invalid_argument);
    CHECK(error_code([&] { truncate_projector(p, n + 1); }) == ErrorCode::invalid_argument);

    const ObliqueProjector same = truncate_projector(p, n);
    for (int t = 0; t < 10; ++t) {
        const SampledFunction f = testing::random_function(rng, toy.v.grid());
        CHECK((same.apply(f) - p.apply(f)).norm() <= 1e-10 * f.norm());
    }

    for (int r = 1; r < n; ++r) {
        const ObliqueProjector er = truncate_projector(p, r);
        CHECK(er.rank() == r);
        for (int i = r; i < n; ++i) {
            CHECK(er.apply(p.etas().function(i)).norm() <= 1e-8 * p.etas().function(i).norm());
            CHECK(er.apply(p.xis().function(i)).norm() <= 1e-8);
        }
        for (int i = 0; i < r; ++i) {
            const SampledFunction eta = p.etas().function(i);
            CHECK((er.apply(eta) - eta).norm() <= 1e-8 * eta.norm());
        }
        for (int j = 0; j < toy.y.size(); ++j) {
            CHECK(er.apply(toy.y.function(j)).norm() <= 1e-8 * toy.y.function(j).norm());
        }
        const SampledFunction f = testing::random_function(rng, toy.v.grid());
        const SampledFunction ef = er.apply(f);
        CHECK((er.apply(ef) - ef).norm() <= 1e-8 * f.norm());
    }
}

TEST_CASE("default instance spectrum and projector") {
    const ExperimentConfig config;
    const ModelSpaces spaces = make_model_spaces(config);
    const ProjectorSetup s = make_oblique_projector(spaces.basis, spaces.background, {config.background_rel_tol});
    const SingularSystem& sys = s.system;
    CHECK(sys.rank() == 103);
    CHECK(s.w_perp.size() == 11);
    for (int n = 1; n < sys.rank(); ++n) CHECK(sys.sigmas[n] <= sys.sigmas[n - 1]);
    CHECK(sys.sigmas[0] == doctest::Approx(1.434).epsilon(2e-3));
    CHECK(sys.sigmas[102] < 1e-8);
    // The complement of every background function is resolved to round-off.
    for (int j = 0; j < spaces.background.size(); j += 7) {
        const SampledFunction y = spaces.background.function(j);
        CHECK(project_complement(s.w_perp, y).norm() <= 1e-8 * y.norm());
    }
    // Background directions are annihilated relative to the projector scale 1/sigma_N.
    const SampledFunction y0 = spaces.background.function(0);
    CHECK(s.projector.apply(y0).norm() <= 1e-8 * y0.norm() / sys.sigmas[102]);
}
