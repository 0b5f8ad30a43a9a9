#include "costa/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <tuple>

namespace costa {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

int model_slot(ModelKind kind)
{
    return static_cast<int>(kind);
}

bool label_matches(int experiment, SolutionLabel label)
{
    const bool is_3d = label == SolutionLabel::ed1 || label == SolutionLabel::ed2 || label == SolutionLabel::ed3;
    const bool is_nonlinear = label == SolutionLabel::n1 || label == SolutionLabel::n2 || label == SolutionLabel::n3;
    switch (experiment) {
    case 3: return is_3d;
    case 4: return is_nonlinear;
    default: return !is_3d && !is_nonlinear;
    }
}

std::string alpha_key(double alpha)
{
    return format_double(alpha);
}

struct SeedUnit {
    std::uint64_t seed = 0;
    std::vector<RrmseRecord> records;
    std::vector<UnitFailure> failures;
};

void append_records(std::vector<RrmseRecord>& out, const ExperimentSpec& spec, const Scenario& scenario,
                    const Trajectory& traj, long long seed)
{
    for (int step = 1; step <= scenario.steps; ++step) {
        RrmseRecord r;
        r.experiment = spec.id;
        r.solution = std::string(label_name(scenario.mcase.label));
        r.alpha = scenario.alpha;
        r.model = traj.kind;
        r.seed = seed;
        r.step = step;
        r.time = scenario.time_at(step);
        r.rrmse = step < static_cast<int>(traj.states.size())
                      ? rrmse(traj.states[static_cast<std::size_t>(step)], scenario.exact_at(step))
                      : kInf;
        out.push_back(std::move(r));
    }
}

}  // namespace

ModelingError modeling_error_for(int experiment)
{
    switch (experiment) {
    case 1: return ModelingError::none;
    case 2: return ModelingError::zero_load;
    case 3: return ModelingError::dimension_reduced;
    case 4: return ModelingError::linearized;
    default: break;
    }
    throw std::invalid_argument("experiment id must be 1, 2, 3 or 4");
}

ExperimentSpec ExperimentSpec::defaults(int id)
{
    ExperimentSpec spec;
    spec.id = id;
    spec.error = modeling_error_for(id);
    switch (id) {
    case 1:
    case 2:
        spec.solutions = {SolutionLabel::e1, SolutionLabel::e2, SolutionLabel::e3};
        break;
    case 3:
        spec.solutions = {SolutionLabel::ed1, SolutionLabel::ed2, SolutionLabel::ed3};
        break;
    default:
        spec.solutions = {SolutionLabel::n1, SolutionLabel::n2, SolutionLabel::n3};
        spec.elements = 10;
        spec.steps = 500;
        spec.seeds = 5;
        spec.train.learning_rate = 8e-5;
        break;
    }
    return spec;
}

void ExperimentSpec::validate() const
{
    if (error != modeling_error_for(id)) {
        throw std::invalid_argument("modeling error does not match experiment " + std::to_string(id));
    }
    if (solutions.empty()) {
        throw std::invalid_argument("experiment needs at least one solution");
    }
    for (SolutionLabel label : solutions) {
        if (!label_matches(id, label)) {
            throw std::invalid_argument("solution " + std::string(label_name(label)) +
                                        " does not belong to experiment " + std::to_string(id));
        }
    }
    if (elements < 1 || steps < 1 || seeds < 1 || workers < 1) {
        throw std::invalid_argument("elements, steps, seeds and workers must be positive");
    }
    alphas.validate();
    train.validate();
}

double rrmse(const Vector& u, const Vector& reference)
{
    if (u.size() != reference.size()) {
        throw std::invalid_argument("rrmse: length mismatch");
    }
    const double denom = reference.norm();
    if (!(denom > 0.0)) {
        throw std::invalid_argument("rrmse: reference vector has zero norm");
    }
    return (u - reference).norm() / denom;
}

ExperimentResult run_experiment(const ExperimentSpec& spec, const ProgressLog& log)
{
    spec.validate();
    std::mutex log_mutex;
    auto say = [&](const std::string& msg) {
        if (log) {
            std::lock_guard lock(log_mutex);
            log(msg);
        }
    };

    const GridMesh mesh = build_grid_mesh(spec.elements, spec.elements);
    const FemOperators ops = FemOperators::assemble(mesh, elasticity_matrix_2d(1.0, 0.25), 1.0 / spec.steps);

    ExperimentResult result;
    for (SolutionLabel label : spec.solutions) {
        const ManufacturedCase mcase = ManufacturedCase::from_label(label);
        const std::string name(label_name(label));
        auto scenarios_for = [&](const std::vector<double>& alphas) {
            std::vector<Scenario> out;
            for (double a : alphas) {
                out.push_back(build_scenario(mesh, mcase, a, spec.steps, spec.error));
            }
            return out;
        };
        say(name + ": sampling manufactured data");
        const std::vector<Scenario> train_sc = scenarios_for(spec.alphas.train);
        const std::vector<Scenario> val_sc = scenarios_for(spec.alphas.validation);
        const std::vector<Scenario> test_sc = scenarios_for(spec.alphas.test);
        const TrainingData train_data = build_training_sets(ops, train_sc);
        const TrainingData val_data = build_training_sets(ops, val_sc);

        // PBM is deterministic: one rollout per test alpha.
        std::vector<std::vector<RrmseRecord>> pbm_records(test_sc.size());
        for (std::size_t a = 0; a < test_sc.size(); ++a) {
            const Trajectory traj = rollout(ModelKind::pbm, test_sc[a], ops);
            if (traj.diverged) {
                result.failures.push_back({name, ModelKind::pbm, -1, test_sc[a].alpha, traj.diagnostic});
            }
            append_records(pbm_records[a], spec, test_sc[a], traj, -1);
        }

        std::vector<SeedUnit> units(static_cast<std::size_t>(spec.seeds));
        for (int s = 0; s < spec.seeds; ++s) {
            units[static_cast<std::size_t>(s)].seed = static_cast<std::uint64_t>(s);
        }

        auto run_unit = [&](SeedUnit& unit) {
            const long long seed = static_cast<long long>(unit.seed);
            std::array<std::optional<TrainedModel>, 2> models;  // DDM, CoSTA
            for (int which = 0; which < 2; ++which) {
                const ModelKind kind = which == 0 ? ModelKind::ddm : ModelKind::costa;
                TrainConfig cfg = spec.train;
                cfg.seed = 2 * unit.seed + static_cast<std::uint64_t>(which);
                const Matrix& xin = which == 0 ? train_data.ddm_inputs : train_data.residual_inputs;
                const Matrix& yout = which == 0 ? train_data.ddm_targets : train_data.residual_targets;
                const Matrix& vin = which == 0 ? val_data.ddm_inputs : val_data.residual_inputs;
                const Matrix& vout = which == 0 ? val_data.ddm_targets : val_data.residual_targets;
                try {
                    TrainResult trained = train(MlpNetwork::standard(ops.dofs().total(), ops.dofs().interior_count()),
                                                xin, yout, vin, vout, cfg);
                    say(name + " seed " + std::to_string(seed) + " " + std::string(model_name(kind)) + ": " +
                        std::to_string(trained.history.validation_loss.size()) + " epochs, best val loss " +
                        format_double(trained.history.best_validation_loss));
                    if (!spec.checkpoint_dir.empty()) {
                        save_checkpoint(trained.model, spec.checkpoint_dir / (name + "_" + std::string(model_name(kind)) +
                                                                              "_seed" + std::to_string(seed) + ".bin"));
                    }
                    models[static_cast<std::size_t>(which)] = std::move(trained.model);
                } catch (const TrainingDiverged& e) {
                    unit.failures.push_back({name, kind, seed, 0.0, e.what()});
                }
            }
            for (const Scenario& sc : test_sc) {
                for (int which = 0; which < 2; ++which) {
                    const ModelKind kind = which == 0 ? ModelKind::ddm : ModelKind::costa;
                    const auto& model = models[static_cast<std::size_t>(which)];
                    Trajectory traj;
                    traj.kind = kind;
                    if (model) {
                        traj = rollout(kind, sc, ops, as_predictor(*model), unit.seed);
                        if (traj.diverged) {
                            unit.failures.push_back({name, kind, seed, sc.alpha, traj.diagnostic});
                        }
                    } else {
                        traj.states.push_back(sc.exact_at(0));
                        traj.diverged = true;
                    }
                    append_records(unit.records, spec, sc, traj, seed);
                }
            }
        };

        const int workers = std::min(spec.workers, spec.seeds);
        if (workers <= 1) {
            for (SeedUnit& unit : units) {
                run_unit(unit);
            }
        } else {
            std::atomic<std::size_t> next{0};
            std::vector<std::thread> pool;
            std::exception_ptr first_error;
            std::mutex error_mutex;
            for (int w = 0; w < workers; ++w) {
                pool.emplace_back([&] {
                    for (std::size_t u = next++; u < units.size(); u = next++) {
                        try {
                            run_unit(units[u]);
                        } catch (...) {
                            std::lock_guard lock(error_mutex);
                            if (!first_error) {
                                first_error = std::current_exception();
                            }
                        }
                    }
                });
            }
            for (auto& t : pool) {
                t.join();
            }
            if (first_error) {
                std::rethrow_exception(first_error);
            }
        }

        // Canonical order: alpha, model, seed, step.
        for (std::size_t a = 0; a < test_sc.size(); ++a) {
            result.records.insert(result.records.end(), pbm_records[a].begin(), pbm_records[a].end());
            for (ModelKind kind : {ModelKind::ddm, ModelKind::costa}) {
                for (const SeedUnit& unit : units) {
                    for (const RrmseRecord& r : unit.records) {
                        if (r.model == kind && r.alpha == test_sc[a].alpha) {
                            result.records.push_back(r);
                        }
                    }
                }
            }
        }
        for (const SeedUnit& unit : units) {
            result.failures.insert(result.failures.end(), unit.failures.begin(), unit.failures.end());
        }
    }
    return result;
}

ModelStat summarize(std::span<const double> values)
{
    ModelStat stat;
    stat.count = static_cast<int>(values.size());
    if (values.empty()) {
        stat.mean = std::numeric_limits<double>::quiet_NaN();
        return stat;
    }
    if (std::any_of(values.begin(), values.end(), [](double v) { return !std::isfinite(v); })) {
        stat.mean = kInf;
        stat.stddev = kInf;
        return stat;
    }
    double sum = 0.0;
    for (double v : values) {
        sum += v;
    }
    stat.mean = sum / static_cast<double>(values.size());
    if (values.size() > 1) {
        double sq = 0.0;
        for (double v : values) {
            sq += (v - stat.mean) * (v - stat.mean);
        }
        stat.stddev = std::sqrt(sq / static_cast<double>(values.size() - 1));
    }
    return stat;
}

double ScenarioOutcome::score(ModelKind model, bool penalized) const
{
    const ModelStat& s = stats[static_cast<std::size_t>(model_slot(model))];
    return penalized ? s.penalized() : s.mean;
}

ModelKind ScenarioOutcome::winner(bool penalized) const
{
    ModelKind best = ModelKind::pbm;
    for (ModelKind m : kAllModels) {
        if (score(m, penalized) < score(best, penalized)) {
            best = m;
        }
    }
    return best;
}

ModelKind ScenarioOutcome::loser(bool penalized) const
{
    ModelKind worst = ModelKind::pbm;
    for (ModelKind m : kAllModels) {
        if (score(m, penalized) > score(worst, penalized)) {
            worst = m;
        }
    }
    return worst;
}

bool ScenarioOutcome::tied(bool penalized) const
{
    const ModelKind w = winner(penalized);
    for (ModelKind m : kAllModels) {
        if (m != w && score(m, penalized) == score(w, penalized)) {
            return true;
        }
    }
    return false;
}

std::vector<ScenarioOutcome> final_outcomes(std::span<const RrmseRecord> records)
{
    // key -> final step, then collect values at that step per model in record order.
    using Key = std::tuple<int, std::string, double>;
    std::map<Key, int> final_step;
    std::vector<Key> order;
    for (const RrmseRecord& r : records) {
        Key key{r.experiment, r.solution, r.alpha};
        auto [it, inserted] = final_step.emplace(key, r.step);
        if (inserted) {
            order.push_back(key);
        } else {
            it->second = std::max(it->second, r.step);
        }
    }
    std::map<Key, std::array<std::vector<double>, 3>> finals;
    for (const RrmseRecord& r : records) {
        Key key{r.experiment, r.solution, r.alpha};
        if (r.step == final_step[key]) {
            finals[key][static_cast<std::size_t>(model_slot(r.model))].push_back(r.rrmse);
        }
    }
    std::vector<ScenarioOutcome> out;
    for (const Key& key : order) {
        ScenarioOutcome o;
        o.experiment = std::get<0>(key);
        o.solution = std::get<1>(key);
        o.alpha = std::get<2>(key);
        o.final_step = final_step[key];
        for (std::size_t m = 0; m < 3; ++m) {
            o.stats[m] = summarize(finals[key][m]);
            if (o.stats[m].count == 0) {
                o.stats[m].mean = kInf;  // a model without records never wins
            }
        }
        out.push_back(std::move(o));
    }
    return out;
}

GroupBy parse_group_by(std::string_view name)
{
    if (name == "alpha") {
        return GroupBy::alpha;
    }
    if (name == "error") {
        return GroupBy::error;
    }
    if (name == "solution") {
        return GroupBy::solution;
    }
    throw std::invalid_argument("group-by must be alpha, error or solution");
}

std::string_view group_by_name(GroupBy group)
{
    switch (group) {
    case GroupBy::alpha: return "alpha";
    case GroupBy::error: return "error";
    case GroupBy::solution: return "solution";
    }
    return "?";
}

Aggregate aggregate_stats(std::span<const RrmseRecord> records, GroupBy group, bool penalized)
{
    Aggregate agg;
    agg.scenarios = final_outcomes(records);
    agg.totals.key = "Total";
    for (const ScenarioOutcome& o : agg.scenarios) {
        std::string key;
        switch (group) {
        case GroupBy::alpha:
            key = alpha_key(o.alpha);
            break;
        case GroupBy::error:
            key = std::string(modeling_error_name(modeling_error_for(o.experiment)));
            break;
        case GroupBy::solution:
            key = std::string(family_name(family_of(parse_solution_label(o.solution))));
            break;
        }
        auto it = std::find_if(agg.rows.begin(), agg.rows.end(), [&](const AggregateRow& r) { return r.key == key; });
        if (it == agg.rows.end()) {
            agg.rows.push_back(AggregateRow{key, {}, 0, 0});
            it = std::prev(agg.rows.end());
        }
        const int w = model_slot(o.winner(penalized));
        const bool tie = o.tied(penalized);
        for (AggregateRow* row : {&*it, &agg.totals}) {
            ++row->wins[static_cast<std::size_t>(w)];
            ++row->total;
            row->ties += tie ? 1 : 0;
        }
    }
    if (group == GroupBy::alpha) {
        std::sort(agg.rows.begin(), agg.rows.end(),
                  [](const AggregateRow& a, const AggregateRow& b) { return parse_double(a.key) < parse_double(b.key); });
    }
    return agg;
}

std::vector<CurvePoint> significance_curve(std::span<const RrmseRecord> records, std::span<const double> thresholds)
{
    for (double d : thresholds) {
        if (!(d >= 1.0)) {
            throw std::invalid_argument("significance thresholds must be >= 1");
        }
    }
    const std::vector<ScenarioOutcome> outcomes = final_outcomes(records);
    std::vector<CurvePoint> curve;
    for (double delta : thresholds) {
        CurvePoint point;
        point.threshold = delta;
        for (const ScenarioOutcome& o : outcomes) {
            for (bool penalized : {false, true}) {
                const ModelKind w = o.winner(penalized);
                const ModelKind l = o.loser(penalized);
                bool wins = true;
                bool loses = true;
                for (ModelKind m : kAllModels) {
                    if (m != w && !(o.score(m, penalized) >= delta * o.score(w, penalized))) {
                        wins = false;
                    }
                    if (m != l && !(o.score(l, penalized) >= delta * o.score(m, penalized))) {
                        loses = false;
                    }
                }
                auto& win_counts = penalized ? point.penalized_wins : point.wins;
                auto& loss_counts = penalized ? point.penalized_losses : point.losses;
                win_counts[static_cast<std::size_t>(model_slot(w))] += wins ? 1 : 0;
                loss_counts[static_cast<std::size_t>(model_slot(l))] += loses ? 1 : 0;
            }
        }
        curve.push_back(point);
    }
    return curve;
}

std::vector<StepStat> step_statistics(std::span<const RrmseRecord> records, int experiment,
                                      const std::string& solution, double alpha)
{
    std::map<int, std::pair<double, std::array<std::vector<double>, 3>>> by_step;
    for (const RrmseRecord& r : records) {
        if (r.experiment == experiment && r.solution == solution && r.alpha == alpha) {
            auto& entry = by_step[r.step];
            entry.first = r.time;
            entry.second[static_cast<std::size_t>(model_slot(r.model))].push_back(r.rrmse);
        }
    }
    std::vector<StepStat> out;
    for (const auto& [step, entry] : by_step) {
        StepStat s;
        s.step = step;
        s.time = entry.first;
        for (std::size_t m = 0; m < 3; ++m) {
            s.stats[m] = summarize(entry.second[m]);
        }
        out.push_back(s);
    }
    return out;
}

}  // namespace costa
