#include "costa/harness.hpp"

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <tuple>

namespace costa {

namespace {

using nlohmann::ordered_json;

const std::string kCsvHeader = "experiment,solution,alpha,model,seed,step,time,rrmse";

ordered_json number(double v)
{
    if (std::isfinite(v)) {
        return v;
    }
    return format_double(v);
}

std::ofstream open_output(const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    }
    return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path)
{
    out.flush();
    if (!out) {
        throw std::runtime_error("write to '" + path.string() + "' failed");
    }
}

std::vector<std::string_view> split(std::string_view line, char sep)
{
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(sep, start);
        fields.push_back(line.substr(start, pos - start));
        if (pos == std::string_view::npos) {
            break;
        }
        start = pos + 1;
    }
    return fields;
}

template <typename Int>
Int parse_int(std::string_view text)
{
    Int value{};
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
        throw std::invalid_argument("not an integer: '" + std::string(text) + "'");
    }
    return value;
}

ordered_json stat_json(const ModelStat& s)
{
    return {{"mean", number(s.mean)}, {"std", number(s.stddev)}, {"count", s.count}};
}

ordered_json counts_json(const std::array<int, 3>& counts)
{
    ordered_json j = ordered_json::object();
    for (ModelKind m : kAllModels) {
        j[std::string(model_name(m))] = counts[static_cast<std::size_t>(m)];
    }
    return j;
}

ordered_json aggregate_json(const Aggregate& agg)
{
    ordered_json rows = ordered_json::array();
    for (const AggregateRow& row : agg.rows) {
        rows.push_back({{"key", row.key}, {"wins", counts_json(row.wins)}, {"total", row.total}, {"ties", row.ties}});
    }
    return {{"rows", rows},
            {"totals",
             {{"wins", counts_json(agg.totals.wins)}, {"total", agg.totals.total}, {"ties", agg.totals.ties}}}};
}

ordered_json alphas_json(const std::vector<double>& values)
{
    ordered_json j = ordered_json::array();
    for (double v : values) {
        j.push_back(v);
    }
    return j;
}

std::string plot_name(int experiment, const std::string& solution, double alpha)
{
    return "exp" + std::to_string(experiment) + "_" + solution + "_alpha" + format_double(alpha) + ".csv";
}

}  // namespace

std::string format_double(double value)
{
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
    if (ec != std::errc()) {
        throw std::runtime_error("format_double failed");
    }
    return std::string(buf, ptr);
}

double parse_double(std::string_view text)
{
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
        throw std::invalid_argument("not a number: '" + std::string(text) + "'");
    }
    return value;
}

void write_records_csv(const std::filesystem::path& path, std::span<const RrmseRecord> records)
{
    std::ofstream out = open_output(path);
    out << kCsvHeader << '\n';
    for (const RrmseRecord& r : records) {
        out << r.experiment << ',' << r.solution << ',' << format_double(r.alpha) << ',' << model_name(r.model) << ','
            << r.seed << ',' << r.step << ',' << format_double(r.time) << ',' << format_double(r.rrmse) << '\n';
    }
    finish(out, path);
}

std::vector<RrmseRecord> read_records_csv(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open '" + path.string() + "'");
    }
    std::string line;
    if (!std::getline(in, line) || line != kCsvHeader) {
        throw std::runtime_error("'" + path.string() + "' does not start with the records header");
    }
    std::vector<RrmseRecord> records;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        try {
            const auto f = split(line, ',');
            if (f.size() != 8) {
                throw std::invalid_argument("expected 8 fields");
            }
            RrmseRecord r;
            r.experiment = parse_int<int>(f[0]);
            r.solution = std::string(f[1]);
            r.alpha = parse_double(f[2]);
            r.model = parse_model_kind(f[3]);
            r.seed = parse_int<long long>(f[4]);
            r.step = parse_int<int>(f[5]);
            r.time = parse_double(f[6]);
            r.rrmse = parse_double(f[7]);
            records.push_back(std::move(r));
        } catch (const std::invalid_argument& e) {
            throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return records;
}

void emit_results(const ExperimentResult& result, const ExperimentSpec& spec, const std::filesystem::path& out_dir)
{
    std::error_code ec;
    std::filesystem::create_directories(out_dir / "plots", ec);
    if (ec) {
        throw std::runtime_error("cannot create '" + (out_dir / "plots").string() + "': " + ec.message());
    }

    write_records_csv(out_dir / "records.csv", result.records);

    ordered_json meta;
    meta["software_version"] = kSoftwareVersion;
    ordered_json config;
    config["experiment"] = spec.id;
    config["modeling_error"] = std::string(modeling_error_name(spec.error));
    ordered_json labels = ordered_json::array();
    for (SolutionLabel l : spec.solutions) {
        labels.push_back(std::string(label_name(l)));
    }
    config["solutions"] = labels;
    config["elements"] = spec.elements;
    config["steps"] = spec.steps;
    config["alphas_train"] = alphas_json(spec.alphas.train);
    config["alphas_val"] = alphas_json(spec.alphas.validation);
    config["alphas_test"] = alphas_json(spec.alphas.test);
    config["lr"] = spec.train.learning_rate;
    config["patience"] = spec.train.patience;
    config["max_epochs"] = spec.train.max_epochs;
    config["batch_size"] = spec.train.batch_size;
    config["workers"] = spec.workers;
    meta["config"] = config;
    ordered_json seeds = ordered_json::array();
    for (int s = 0; s < spec.seeds; ++s) {
        seeds.push_back({{"seed", s}, {"ddm_init", 2 * s}, {"costa_init", 2 * s + 1}});
    }
    meta["seeds"] = seeds;
    meta["design_decisions"] = {
        {"pbm_stiffness", "plane stress, E=1, nu=0.25"},
        {"dirichlet", "boundary elimination with exact nodal data"},
        {"previous_level", "exact solution at t=-k"},
        {"load_quadrature", "edge midpoints"},
        {"load_derivatives", "Richardson-extrapolated central differences"},
        {"strain_norm", "tensor Frobenius"},
        {"hidden_layers", "4x80 leaky ReLU 0.01"},
        {"initialization", "He uniform"},
        {"normalization", "z-score per feature, train split"},
        {"early_stopping", "validation loss once per epoch, best snapshot kept"},
        {"ddm_inputs", "full previous state, no load"},
        {"winner_ties", "PBM, then DDM, then CoSTA; flagged"},
        {"significance", "winner with every other model >= delta times its score"},
        {"diverged_runs", "rrmse inf from first failed step"},
        {"penalized_score", "mean + sample std"},
        {"plotted_series", "mean and mean+std"},
        {"experiment3_metric", "x and y components at z=0"},
    };

    ordered_json aggregates;
    for (GroupBy g : {GroupBy::alpha, GroupBy::error, GroupBy::solution}) {
        const std::string key(group_by_name(g));
        aggregates[key] = aggregate_json(aggregate_stats(result.records, g, false));
        aggregates[key + "_penalized"] = aggregate_json(aggregate_stats(result.records, g, true));
    }

    const std::vector<ScenarioOutcome> outcomes = final_outcomes(result.records);
    ordered_json scenarios = ordered_json::array();
    for (const ScenarioOutcome& o : outcomes) {
        ordered_json stats = ordered_json::object();
        for (ModelKind m : kAllModels) {
            stats[std::string(model_name(m))] = stat_json(o.stats[static_cast<std::size_t>(m)]);
        }
        scenarios.push_back({{"experiment", o.experiment},
                             {"solution", o.solution},
                             {"alpha", o.alpha},
                             {"interpolation", spec.alphas.is_interpolation(o.alpha)},
                             {"final_step", o.final_step},
                             {"final_rrmse", stats},
                             {"winner", std::string(model_name(o.winner(false)))},
                             {"penalized_winner", std::string(model_name(o.winner(true)))},
                             {"tie", o.tied(false)}});
    }

    const std::vector<double> thresholds{1, 2, 5, 10, 100};
    ordered_json curve = ordered_json::array();
    for (const CurvePoint& p : significance_curve(result.records, thresholds)) {
        curve.push_back({{"threshold", p.threshold},
                         {"wins", counts_json(p.wins)},
                         {"losses", counts_json(p.losses)},
                         {"penalized_wins", counts_json(p.penalized_wins)},
                         {"penalized_losses", counts_json(p.penalized_losses)}});
    }

    ordered_json failures = ordered_json::array();
    for (const UnitFailure& f : result.failures) {
        failures.push_back({{"solution", f.solution},
                            {"model", std::string(model_name(f.model))},
                            {"seed", f.seed},
                            {"alpha", f.alpha},
                            {"diagnostic", f.diagnostic}});
    }

    ordered_json doc;
    doc["metadata"] = meta;
    doc["aggregates"] = aggregates;
    doc["scenarios"] = scenarios;
    doc["significance_curve"] = curve;
    doc["failures"] = failures;

    const std::filesystem::path json_path = out_dir / "aggregates.json";
    std::ofstream json_out = open_output(json_path);
    json_out << doc.dump(2) << '\n';
    finish(json_out, json_path);

    for (const ScenarioOutcome& o : outcomes) {
        const std::filesystem::path path = out_dir / "plots" / plot_name(o.experiment, o.solution, o.alpha);
        std::ofstream out = open_output(path);
        out << "step,time";
        for (ModelKind m : kAllModels) {
            out << ',' << model_name(m) << "_mean," << model_name(m) << "_mean_plus_std";
        }
        out << '\n';
        for (const StepStat& s : step_statistics(result.records, o.experiment, o.solution, o.alpha)) {
            out << s.step << ',' << format_double(s.time);
            for (const ModelStat& st : s.stats) {
                out << ',' << format_double(st.mean) << ',' << format_double(st.penalized());
            }
            out << '\n';
        }
        finish(out, path);
    }
}

}  // namespace costa
