#include "costa/hybrid.hpp"

#include <stdexcept>

namespace costa {

namespace {

void check_size(const Vector& v, int expected, const char* what)
{
    if (v.size() != expected) {
        throw std::invalid_argument(std::string(what) + ": expected " + std::to_string(expected) +
                                    " entries, got " + std::to_string(v.size()));
    }
}

}  // namespace

std::string_view model_name(ModelKind kind)
{
    switch (kind) {
    case ModelKind::pbm: return "PBM";
    case ModelKind::ddm: return "DDM";
    case ModelKind::costa: return "CoSTA";
    }
    return "?";
}

ModelKind parse_model_kind(std::string_view name)
{
    for (auto kind : {ModelKind::pbm, ModelKind::ddm, ModelKind::costa}) {
        if (model_name(kind) == name) {
            return kind;
        }
    }
    throw std::invalid_argument("unknown model '" + std::string(name) + "'");
}

std::string_view modeling_error_name(ModelingError error)
{
    switch (error) {
    case ModelingError::none: return "none";
    case ModelingError::zero_load: return "zero-load";
    case ModelingError::dimension_reduced: return "dimension-reduced";
    case ModelingError::linearized: return "linearized";
    }
    return "?";
}

Predictor as_predictor(const TrainedModel& model)
{
    return [&model](const Vector& input) { return model.predict(input); };
}

Scenario build_scenario(const GridMesh& mesh, const ManufacturedCase& mcase, double alpha, int steps,
                        ModelingError error)
{
    if (steps < 0) {
        throw std::invalid_argument("build_scenario: negative step count");
    }
    Scenario s;
    s.mcase = mcase;
    s.alpha = alpha;
    s.steps = steps;
    s.time_step = steps > 0 ? 1.0 / steps : 1.0;
    s.error = error;

    s.exact.reserve(static_cast<std::size_t>(steps) + 2);
    for (int level = -1; level <= steps; ++level) {
        const double t = level * s.time_step;
        s.exact.push_back(project_initial(
            mesh, [&](const Point2& p) { return planar_displacement(mcase, alpha, t, p); }));
    }

    const int dofs = DofMap::dofs_per_node * mesh.node_count();
    s.loads.reserve(static_cast<std::size_t>(steps) + 1);
    s.loads.push_back(Vector::Zero(dofs));
    for (int level = 1; level <= steps; ++level) {
        if (error == ModelingError::zero_load) {
            s.loads.push_back(Vector::Zero(dofs));
            continue;
        }
        const double t = level * s.time_step;
        s.loads.push_back(assemble_load(mesh, [&](const Point2& p) { return planar_load(mcase, alpha, t, p); }));
    }
    return s;
}

Vector pbm_predict(const FemOperators& ops, const StatePair& state, const Vector& load_next,
                   const Vector& boundary_next)
{
    return time_step(ops, state, load_next, boundary_next);
}

Vector compute_residual(const FemOperators& ops, const Vector& exact_next, const Vector& rhs_next)
{
    check_size(exact_next, ops.dofs().total(), "compute_residual exact state");
    check_size(rhs_next, ops.dofs().total(), "compute_residual rhs");
    return ops.interior_block() * ops.gather_interior(exact_next) +
           ops.coupling_block() * ops.gather_boundary(exact_next) - ops.gather_interior(rhs_next);
}

Vector costa_step(const FemOperators& ops, const StatePair& state, const Vector& load_next,
                  const Vector& boundary_next, const Predictor& residual_model)
{
    const ReducedSystem system = apply_dirichlet(ops, ops.step_rhs(load_next, state), boundary_next);
    const Vector uncorrected = ops.scatter(ops.solve_interior(system.rhs), boundary_next);
    const Vector correction = residual_model(uncorrected);
    check_size(correction, ops.dofs().interior_count(), "costa_step correction");
    return ops.scatter(ops.solve_interior(system.rhs + correction), boundary_next);
}

Vector ddm_step(const FemOperators& ops, const Vector& previous, const Vector& boundary_next,
                const Predictor& state_model)
{
    check_size(previous, ops.dofs().total(), "ddm_step previous state");
    const Vector interior = state_model(previous);
    check_size(interior, ops.dofs().interior_count(), "ddm_step prediction");
    return ops.scatter(interior, boundary_next);
}

TrainingData build_training_sets(const FemOperators& ops, std::span<const Scenario> scenarios)
{
    int samples = 0;
    for (const Scenario& s : scenarios) {
        samples += s.steps;
    }
    const int total = ops.dofs().total();
    const int interior = ops.dofs().interior_count();

    TrainingData data;
    data.residual_inputs.resize(total, samples);
    data.residual_targets.resize(interior, samples);
    data.ddm_inputs.resize(total, samples);
    data.ddm_targets.resize(interior, samples);
    data.tags.reserve(static_cast<std::size_t>(samples));

    int col = 0;
    for (const Scenario& s : scenarios) {
        for (int i = 0; i < s.steps; ++i, ++col) {
            const Vector& next = s.exact_at(i + 1);
            const Vector boundary = ops.gather_boundary(next);
            const Vector rhs = ops.step_rhs(s.load_at(i + 1), s.exact_state(i));
            const ReducedSystem system = apply_dirichlet(ops, rhs, boundary);
            data.residual_inputs.col(col) = ops.scatter(ops.solve_interior(system.rhs), boundary);
            data.residual_targets.col(col) = compute_residual(ops, next, rhs);
            data.ddm_inputs.col(col) = s.exact_at(i);
            data.ddm_targets.col(col) = ops.gather_interior(next);
            data.tags.push_back({s.mcase.label, s.alpha, i});
        }
    }
    return data;
}

Trajectory rollout(ModelKind kind, const Scenario& scenario, const FemOperators& ops, const Predictor& model,
                   std::uint64_t seed)
{
    if (kind != ModelKind::pbm && !model) {
        throw std::invalid_argument("rollout: " + std::string(model_name(kind)) + " needs a trained model");
    }
    Trajectory traj;
    traj.kind = kind;
    traj.label = scenario.mcase.label;
    traj.alpha = scenario.alpha;
    traj.seed = seed;
    traj.states.reserve(static_cast<std::size_t>(scenario.steps) + 1);
    traj.states.push_back(scenario.exact_at(0));

    Vector previous = scenario.exact_at(-1);
    for (int i = 0; i < scenario.steps; ++i) {
        const Vector& current = traj.states.back();
        const Vector boundary = ops.gather_boundary(scenario.exact_at(i + 1));
        const StatePair state{current, previous, i};
        Vector next;
        try {
            switch (kind) {
            case ModelKind::pbm:
                next = pbm_predict(ops, state, scenario.load_at(i + 1), boundary);
                break;
            case ModelKind::costa:
                next = costa_step(ops, state, scenario.load_at(i + 1), boundary, model);
                break;
            case ModelKind::ddm:
                next = ddm_step(ops, current, boundary, model);
                break;
            }
        } catch (const std::runtime_error& e) {
            traj.diagnostic = e.what();
        }
        if (next.size() == 0 || !next.allFinite()) {
            traj.diverged = true;
            traj.diverged_at = i + 1;
            if (traj.diagnostic.empty()) {
                traj.diagnostic = "non-finite state at level " + std::to_string(i + 1);
            }
            break;
        }
        previous = current;
        traj.states.push_back(std::move(next));
    }
    return traj;
}

}  // namespace costa
