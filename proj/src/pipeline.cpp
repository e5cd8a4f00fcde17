#include "bgsep/pipeline.hpp"

namespace bgsep {

ModelSetup make_model_setup(const ExperimentConfig& config) {
    ModelSpaces spaces = make_model_spaces(config);
    ProjectorOptions opts;
    opts.background_rel_tol = config.background_rel_tol;
    opts.rank_tol = config.projector_rank_tol;
    ProjectorSetup proj = make_oblique_projector(spaces.basis, spaces.background, opts);
    return ModelSetup{std::move(spaces), std::move(proj)};
}

LinearOutcome run_linear(const ModelSetup& setup, const SampledFunction& f_obs,
                         const SampledFunction& f_v_true, int truncations) {
    const ObliqueProjector& p = setup.projector.projector;
    SampledFunction full = p.apply(f_obs);
    LinearOutcome out{{p.rank(), full, relative_l2_error(full, f_v_true)}, {}};
    for (int t = 1; t <= truncations && p.rank() - t >= 1; ++t) {
        const int r = p.rank() - t;
        SampledFunction rec = truncate_projector(p, r).apply(f_obs);
        const double err = relative_l2_error(rec, f_v_true);
        out.truncated.push_back({r, std::move(rec), err});
    }
    return out;
}

NonlinearOutcome run_nonlinear(const ModelSetup& setup, const SampledFunction& f_obs,
                               const SampledFunction& f_v_true, double q, double delta,
                               int max_constraints, const SeparationOptions& opts) {
    SeparationProblem prob(setup.projector.u, project_data_to_w(f_obs, setup.projector.w_perp), q, delta,
                           max_constraints);
    SeparationState state = separate(prob, opts);
    SampledFunction rec = setup.spaces.basis.combine(state.c);
    const double err = relative_l2_error(rec, f_v_true);
    return NonlinearOutcome{std::move(prob), std::move(state), std::move(rec), err, 0.0};
}

NonlinearOutcome run_nonlinear(const ModelSetup& setup, const PlantedInstance& inst) {
    const ExperimentConfig& c = inst.config;
    SeparationOptions opts;
    opts.warm_start = c.warm_start;
    NonlinearOutcome out = run_nonlinear(setup, inst.f_obs, inst.f_v, c.q, default_delta(c, inst.noise_std),
                                         c.max_constraints, opts);
    out.support_threshold = c.support_threshold;
    return out;
}

}  // namespace bgsep
