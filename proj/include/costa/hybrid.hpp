#pragma once

/**
 * @file hybrid.hpp
 * @brief PBM, DDM and CoSTA one-step models, residual training data and rollouts.
 *
 * Notation in comments: U_exact is the nodal interpolant of the manufactured
 * solution, U_bar the uncorrected PBM prediction from an exact history, and
 * L = A + M/k^2 the combined operator.
 */

#include "costa/fem.hpp"
#include "costa/manufactured.hpp"
#include "costa/mlp.hpp"

#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace costa {

enum class ModelKind { pbm, ddm, costa };

std::string_view model_name(ModelKind kind);
ModelKind parse_model_kind(std::string_view name);

/// The deliberate defect in the physics-based model.
enum class ModelingError {
    none,               ///< exact load
    zero_load,          ///< load replaced by zero
    dimension_reduced,  ///< 3D truth, 2D model fed the in-plane load at z = 0
    linearized,         ///< strain-softening truth, constant-modulus model
};

std::string_view modeling_error_name(ModelingError error);

/// Maps a full-length input vector to an interior-length output vector.
using Predictor = std::function<Vector(const Vector&)>;

Predictor as_predictor(const TrainedModel& model);

/// Exact nodal data and PBM loads of one (case, alpha) on levels -1..K.
struct Scenario {
    ManufacturedCase mcase;
    double alpha = 0.0;
    int steps = 0;
    double time_step = 0.0;
    ModelingError error = ModelingError::none;
    std::vector<Vector> exact;  ///< exact[i + 1] = U_exact at level i
    std::vector<Vector> loads;  ///< loads[i] = PBM load vector at level i (loads[0] unused)

    const Vector& exact_at(int level) const { return exact.at(static_cast<std::size_t>(level + 1)); }
    const Vector& load_at(int level) const { return loads.at(static_cast<std::size_t>(level)); }
    StatePair exact_state(int level) const { return {exact_at(level), exact_at(level - 1), level}; }
    double time_at(int level) const { return level * time_step; }
};

/// Samples the manufactured data on the mesh; level -1 sits at t = -k.
Scenario build_scenario(const GridMesh& mesh, const ManufacturedCase& mcase, double alpha, int steps,
                        ModelingError error);

/// Plain three-level step; boundary entries equal boundary_next.
Vector pbm_predict(const FemOperators& ops, const StatePair& state, const Vector& load_next,
                   const Vector& boundary_next);

/// r = L_ii U_exact,i + L_ib g - rhs_i, i.e. L (U_exact - U_bar) on the interior.
Vector compute_residual(const FemOperators& ops, const Vector& exact_next, const Vector& rhs_next);

/// Solves once for U_bar, feeds it to residual_model and re-solves with the correction added.
Vector costa_step(const FemOperators& ops, const StatePair& state, const Vector& load_next,
                  const Vector& boundary_next, const Predictor& residual_model);

/// state_model maps the full previous state to the next interior state.
Vector ddm_step(const FemOperators& ops, const Vector& previous, const Vector& boundary_next,
                const Predictor& state_model);

struct SampleTag {
    SolutionLabel label;
    double alpha;
    int level;  ///< i, the sample maps level i to i + 1
};

/// Column-wise sample matrices; the i-th column of each belongs to tags[i].
struct TrainingData {
    Matrix residual_inputs;   ///< U_bar^{(i+1)}, full length
    Matrix residual_targets;  ///< r^{(i+1)}, interior length
    Matrix ddm_inputs;        ///< U_exact^{(i)}, full length
    Matrix ddm_targets;       ///< U_exact^{(i+1)} interior entries
    std::vector<SampleTag> tags;

    int size() const { return static_cast<int>(tags.size()); }
};

/// One residual and one DDM sample per scenario and level 0..K-1, alpha-major.
TrainingData build_training_sets(const FemOperators& ops, std::span<const Scenario> scenarios);

struct Trajectory {
    ModelKind kind = ModelKind::pbm;
    SolutionLabel label = SolutionLabel::e1;
    double alpha = 0.0;
    std::uint64_t seed = 0;
    std::vector<Vector> states;  ///< levels 0..K, or fewer if diverged
    bool diverged = false;
    int diverged_at = -1;        ///< first level that failed
    std::string diagnostic;
};

/// Iterates the chosen model from the exact initial data. PBM ignores model.
Trajectory rollout(ModelKind kind, const Scenario& scenario, const FemOperators& ops, const Predictor& model = {},
                   std::uint64_t seed = 0);

}  // namespace costa
