#pragma once

/**
 * @file harness.hpp
 * @brief Experiment configuration, orchestration, error metrics and
 * win/loss statistics over trained seeds.
 */

#include "costa/hybrid.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace costa {

inline constexpr std::array<ModelKind, 3> kAllModels{ModelKind::pbm, ModelKind::ddm, ModelKind::costa};
inline constexpr const char* kSoftwareVersion = "0.1.0";

/// Modelling error synthesised by experiments 1-4.
ModelingError modeling_error_for(int experiment);

struct ExperimentSpec {
    int id = 1;
    std::vector<SolutionLabel> solutions;
    int elements = 15;
    int steps = 1000;
    int seeds = 10;
    ModelingError error = ModelingError::none;
    AlphaSplit alphas = AlphaSplit::standard();
    TrainConfig train;  ///< learning_rate is the experiment's rate; seed is derived per unit
    int workers = 1;
    std::filesystem::path checkpoint_dir;  ///< empty: do not save networks

    /// Full-size defaults for experiment id (grid, steps, seeds, learning rate).
    static ExperimentSpec defaults(int id);

    void validate() const;
};

struct RrmseRecord {
    int experiment = 0;
    std::string solution;
    double alpha = 0.0;
    ModelKind model = ModelKind::pbm;
    long long seed = -1;  ///< -1 for the deterministic PBM
    int step = 0;
    double time = 0.0;
    double rrmse = 0.0;  ///< +inf after a trajectory diverged

    bool operator==(const RrmseRecord&) const = default;
};

struct UnitFailure {
    std::string solution;
    ModelKind model = ModelKind::pbm;
    long long seed = -1;
    double alpha = 0.0;
    std::string diagnostic;
};

struct ExperimentResult {
    std::vector<RrmseRecord> records;
    std::vector<UnitFailure> failures;
};

using ProgressLog = std::function<void(const std::string&)>;

/// ||u - ref||_2 / ||ref||_2. Throws std::invalid_argument on a zero reference or length mismatch.
double rrmse(const Vector& u, const Vector& reference);

/// Records ordered by solution, test alpha, model, seed and step.
ExperimentResult run_experiment(const ExperimentSpec& spec, const ProgressLog& log = {});

struct ModelStat {
    double mean = 0.0;
    double stddev = 0.0;  ///< sample deviation, zero for a single value
    int count = 0;

    double penalized() const { return mean + stddev; }
};

ModelStat summarize(std::span<const double> values);

/// Final-step statistics of one (experiment, solution, alpha).
struct ScenarioOutcome {
    int experiment = 0;
    std::string solution;
    double alpha = 0.0;
    int final_step = 0;
    std::array<ModelStat, 3> stats{};  ///< indexed like kAllModels

    double score(ModelKind model, bool penalized) const;
    /// Lowest score; exact ties go to PBM, then DDM, then CoSTA.
    ModelKind winner(bool penalized) const;
    ModelKind loser(bool penalized) const;
    bool tied(bool penalized) const;
};

std::vector<ScenarioOutcome> final_outcomes(std::span<const RrmseRecord> records);

enum class GroupBy { alpha, error, solution };

GroupBy parse_group_by(std::string_view name);
std::string_view group_by_name(GroupBy group);

struct AggregateRow {
    std::string key;
    std::array<int, 3> wins{};
    int total = 0;
    int ties = 0;
};

struct Aggregate {
    std::vector<ScenarioOutcome> scenarios;
    std::vector<AggregateRow> rows;
    AggregateRow totals;
};

Aggregate aggregate_stats(std::span<const RrmseRecord> records, GroupBy group, bool penalized = false);

struct CurvePoint {
    double threshold = 1.0;
    std::array<int, 3> wins{};
    std::array<int, 3> losses{};
    std::array<int, 3> penalized_wins{};
    std::array<int, 3> penalized_losses{};
};

/// Counts of scenarios a model wins (loses) against both others by a factor of at least each threshold.
std::vector<CurvePoint> significance_curve(std::span<const RrmseRecord> records, std::span<const double> thresholds);

struct StepStat {
    int step = 0;
    double time = 0.0;
    std::array<ModelStat, 3> stats{};
};

/// Per-step mean/deviation of each model for one (experiment, solution, alpha).
std::vector<StepStat> step_statistics(std::span<const RrmseRecord> records, int experiment,
                                      const std::string& solution, double alpha);

// results_io.cpp

std::string format_double(double value);
double parse_double(std::string_view text);

void write_records_csv(const std::filesystem::path& path, std::span<const RrmseRecord> records);
std::vector<RrmseRecord> read_records_csv(const std::filesystem::path& path);

/**
 * Writes records.csv, aggregates.json and one plot table per scenario under out_dir/plots.
 * Throws std::runtime_error naming the failing path.
 */
void emit_results(const ExperimentResult& result, const ExperimentSpec& spec, const std::filesystem::path& out_dir);

}  // namespace costa
