#pragma once

// End-to-end linear and nonlinear recovery on one planted instance.

#include "bgsep/oblique.hpp"
#include "bgsep/simulator.hpp"
#include "bgsep/sparse_solver.hpp"

#include <vector>

namespace bgsep {

/// Everything that depends only on the model spaces, shared across instances.
struct ModelSetup {
    ModelSpaces spaces;
    ProjectorSetup projector;
};

ModelSetup make_model_setup(const ExperimentConfig& config);

struct LinearRecovery {
    int r = 0;
    SampledFunction recovered;
    double rel_error = 0.0;
};

struct LinearOutcome {
    LinearRecovery full;
    std::vector<LinearRecovery> truncated;  ///< r = N-1, N-2, ...
};

/// E f_obs with the full projector and with `truncations` trailing terms dropped one at a time.
LinearOutcome run_linear(const ModelSetup& setup, const SampledFunction& f_obs,
                         const SampledFunction& f_v_true, int truncations);

struct NonlinearOutcome {
    SeparationProblem problem;
    SeparationState state;
    SampledFunction recovered;  ///< sum_i c_i v_i
    double rel_error = 0.0;
    double support_threshold = 0.0;

    std::vector<int> support() const { return state.support(support_threshold); }
};

NonlinearOutcome run_nonlinear(const ModelSetup& setup, const SampledFunction& f_obs,
                               const SampledFunction& f_v_true, double q, double delta,
                               int max_constraints = 0, const SeparationOptions& opts = {});

/// Nonlinear run with q, delta, max_constraints and warm start taken from the instance config.
NonlinearOutcome run_nonlinear(const ModelSetup& setup, const PlantedInstance& inst);

}  // namespace bgsep
