#include "costa/harness.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <set>

namespace {

using namespace costa;

struct RunOptions {
    int experiment = 1;
    std::vector<std::string> solutions;
    int elements = 0;
    int steps = 0;
    int seeds = 0;
    double lr = 0.0;
    std::string out;
    std::vector<double> alphas_train;
    std::vector<double> alphas_val;
    std::vector<double> alphas_test;
    std::string config;
    int workers = 1;
    int max_epochs = 0;
    int patience = 0;
    int batch_size = 0;
    bool save_models = false;
    bool quiet = false;
};

// Fills every option the command line left unset from the JSON config file.
void apply_config(RunOptions& o, CLI::App& cmd)
{
    std::ifstream in(o.config);
    if (!in) {
        throw std::runtime_error("cannot open config '" + o.config + "'");
    }
    const nlohmann::json j = nlohmann::json::parse(in);
    auto unset = [&](const char* flag) { return cmd.get_option(flag)->count() == 0; };
    auto take = [&](const char* key, const char* flag, auto& field) {
        if (j.contains(key) && unset(flag)) {
            j.at(key).get_to(field);
        }
    };
    take("experiment", "--experiment", o.experiment);
    take("solutions", "--solutions", o.solutions);
    take("elements", "--elements", o.elements);
    take("steps", "--steps", o.steps);
    take("seeds", "--seeds", o.seeds);
    take("lr", "--lr", o.lr);
    take("out", "--out", o.out);
    take("alphas_train", "--alphas-train", o.alphas_train);
    take("alphas_val", "--alphas-val", o.alphas_val);
    take("alphas_test", "--alphas-test", o.alphas_test);
    take("workers", "--workers", o.workers);
    take("max_epochs", "--max-epochs", o.max_epochs);
    take("patience", "--patience", o.patience);
    take("batch_size", "--batch-size", o.batch_size);
    take("save_models", "--save-models", o.save_models);
    for (const auto& item : j.items()) {
        static const std::set<std::string> known{"experiment", "solutions",  "elements",     "steps",
                                                 "seeds",      "lr",         "out",          "alphas_train",
                                                 "alphas_val", "alphas_test", "workers",     "max_epochs",
                                                 "patience",   "batch_size", "save_models"};
        if (!known.contains(item.key())) {
            throw std::runtime_error("unknown config key '" + item.key() + "'");
        }
    }
}

ExperimentSpec build_spec(const RunOptions& o)
{
    ExperimentSpec spec = ExperimentSpec::defaults(o.experiment);
    if (!o.solutions.empty()) {
        spec.solutions.clear();
        for (const std::string& s : o.solutions) {
            spec.solutions.push_back(parse_solution_label(s));
        }
    }
    if (o.elements > 0) spec.elements = o.elements;
    if (o.steps > 0) spec.steps = o.steps;
    if (o.seeds > 0) spec.seeds = o.seeds;
    if (o.lr > 0) spec.train.learning_rate = o.lr;
    if (o.max_epochs > 0) spec.train.max_epochs = o.max_epochs;
    if (o.patience > 0) spec.train.patience = o.patience;
    if (o.batch_size > 0) spec.train.batch_size = o.batch_size;
    if (!o.alphas_train.empty()) spec.alphas.train = o.alphas_train;
    if (!o.alphas_val.empty()) spec.alphas.validation = o.alphas_val;
    if (!o.alphas_test.empty()) spec.alphas.test = o.alphas_test;
    spec.workers = o.workers;
    if (o.save_models) {
        spec.checkpoint_dir = std::filesystem::path(o.out) / "models";
    }
    spec.validate();
    return spec;
}

int run_command(RunOptions& o, CLI::App& cmd)
{
    if (!o.config.empty()) {
        apply_config(o, cmd);
    }
    if (o.out.empty()) {
        throw std::runtime_error("--out is required");
    }
    const ExperimentSpec spec = build_spec(o);
    if (!spec.checkpoint_dir.empty()) {
        std::filesystem::create_directories(spec.checkpoint_dir);
    }
    ProgressLog log;
    if (!o.quiet) {
        log = [](const std::string& msg) { std::cerr << msg << '\n'; };
    }
    const ExperimentResult result = run_experiment(spec, log);
    emit_results(result, spec, o.out);
    std::cout << "wrote " << result.records.size() << " records to " << o.out << '\n';
    if (!result.failures.empty()) {
        for (const UnitFailure& f : result.failures) {
            std::cerr << "failed unit: " << f.solution << ' ' << model_name(f.model) << " seed " << f.seed
                      << " alpha " << format_double(f.alpha) << ": " << f.diagnostic << '\n';
        }
        return 2;
    }
    return 0;
}

std::vector<RrmseRecord> load_records(const std::string& dir)
{
    std::vector<RrmseRecord> records = read_records_csv(std::filesystem::path(dir) / "records.csv");
    if (records.empty()) {
        throw std::runtime_error("no records in " + dir);
    }
    return records;
}

void print_counts_header(const char* first)
{
    std::printf("%-20s", first);
    for (ModelKind m : kAllModels) {
        std::printf(" %7s", std::string(model_name(m)).c_str());
    }
}

int aggregate_command(const std::string& in, const std::string& group, bool penalized)
{
    const std::vector<RrmseRecord> records = load_records(in);
    const Aggregate agg = aggregate_stats(records, parse_group_by(group), penalized);
    print_counts_header(std::string(group_by_name(parse_group_by(group))).c_str());
    std::printf(" %7s %5s\n", "Total", "ties");
    auto row = [](const AggregateRow& r) {
        std::printf("%-20s", r.key.c_str());
        for (int w : r.wins) {
            std::printf(" %7d", w);
        }
        std::printf(" %7d %5d\n", r.total, r.ties);
    };
    for (const AggregateRow& r : agg.rows) {
        row(r);
    }
    row(agg.totals);
    return 0;
}

int curve_command(const std::string& in, const std::vector<double>& thresholds)
{
    const std::vector<RrmseRecord> records = load_records(in);
    std::printf("%-10s %-8s", "threshold", "kind");
    for (ModelKind m : kAllModels) {
        std::printf(" %7s", std::string(model_name(m)).c_str());
    }
    std::printf("\n");
    for (const CurvePoint& p : significance_curve(records, thresholds)) {
        const std::pair<const char*, const std::array<int, 3>*> rows[] = {
            {"wins", &p.wins}, {"losses", &p.losses}, {"wins+", &p.penalized_wins}, {"losses+", &p.penalized_losses}};
        for (const auto& [kind, counts] : rows) {
            std::printf("%-10s %-8s", format_double(p.threshold).c_str(), kind);
            for (int c : *counts) {
                std::printf(" %7d", c);
            }
            std::printf("\n");
        }
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Hybrid FEM / neural residual correction experiments"};
    app.set_version_flag("--version", kSoftwareVersion);
    app.require_subcommand(1);

    RunOptions run;
    CLI::App* run_cmd = app.add_subcommand("run", "Train, roll out and score one experiment");
    run_cmd->add_option("--experiment", run.experiment, "Experiment id")->check(CLI::Range(1, 4));
    run_cmd->add_option("--solutions", run.solutions, "Solution labels, e.g. e1,e2")->delimiter(',');
    run_cmd->add_option("--elements", run.elements, "Elements per axis")->check(CLI::PositiveNumber);
    run_cmd->add_option("--steps", run.steps, "Time steps K on [0,1]")->check(CLI::PositiveNumber);
    run_cmd->add_option("--seeds", run.seeds, "Network initialisations per model")->check(CLI::PositiveNumber);
    run_cmd->add_option("--lr", run.lr, "Adam learning rate")->check(CLI::PositiveNumber);
    run_cmd->add_option("--out", run.out, "Output directory");
    run_cmd->add_option("--alphas-train", run.alphas_train, "Training alphas")->delimiter(',');
    run_cmd->add_option("--alphas-val", run.alphas_val, "Validation alphas")->delimiter(',');
    run_cmd->add_option("--alphas-test", run.alphas_test, "Test alphas")->delimiter(',');
    run_cmd->add_option("--config", run.config, "JSON file with the same keys as the flags (dashes as underscores)");
    run_cmd->add_option("--workers", run.workers, "Concurrent seed units")->check(CLI::PositiveNumber);
    run_cmd->add_option("--max-epochs", run.max_epochs, "Epoch cap")->check(CLI::PositiveNumber);
    run_cmd->add_option("--patience", run.patience, "Early-stopping patience")->check(CLI::PositiveNumber);
    run_cmd->add_option("--batch-size", run.batch_size, "Minibatch size")->check(CLI::PositiveNumber);
    run_cmd->add_flag("--save-models", run.save_models, "Write network checkpoints to OUT/models");
    run_cmd->add_flag("--quiet", run.quiet, "No progress output");

    std::string agg_in;
    std::string group = "alpha";
    bool penalized = false;
    CLI::App* agg_cmd = app.add_subcommand("aggregate", "Final-step win counts");
    agg_cmd->add_option("--in", agg_in, "Directory holding records.csv")->required();
    agg_cmd->add_option("--group-by", group, "alpha, error or solution")
        ->check(CLI::IsMember({"alpha", "error", "solution"}));
    agg_cmd->add_flag("--penalized", penalized, "Rank by mean + std");

    std::string curve_in;
    std::vector<double> thresholds{1, 2, 5, 10, 100};
    CLI::App* curve_cmd = app.add_subcommand("curve", "Win/loss counts by error ratio");
    curve_cmd->add_option("--in", curve_in, "Directory holding records.csv")->required();
    curve_cmd->add_option("--thresholds", thresholds, "Ratios >= 1")->delimiter(',');

    CLI11_PARSE(app, argc, argv);

    try {
        if (run_cmd->parsed()) {
            return run_command(run, *run_cmd);
        }
        if (agg_cmd->parsed()) {
            return aggregate_command(agg_in, group, penalized);
        }
        return curve_command(curve_in, thresholds);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
