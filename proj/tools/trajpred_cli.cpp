#include <cstdint>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "trajpred/datagen.hpp"
#include "trajpred/dbscan.hpp"
#include "trajpred/eval.hpp"
#include "trajpred/io.hpp"
#include "trajpred/predict.hpp"
#include "trajpred/trajectory.hpp"
#include "trajpred/vbgmm.hpp"

namespace {

using namespace trajpred;

// Values merged from config file and command line; flags win over the
// config file, the config file wins over defaults. eps and min_pts have no
// defaults on purpose.
struct Options {
    std::optional<double> eps;
    std::optional<int> min_pts;
    std::optional<double> cell_size;
    std::optional<std::vector<double>> grid_origin;
    std::optional<std::vector<int>> k_values;
    std::optional<std::vector<int>> h_values;
    std::optional<int> horizon;
    std::optional<double> tol;
    std::optional<int> max_iter;
    std::optional<std::uint64_t> seed;
    std::optional<bool> eta_paper_exact;
    std::optional<double> alpha0;
    std::optional<double> beta0;
    std::optional<double> v0;
    std::optional<double> validation_fraction;
};

struct Cli {
    Options flags;
    std::string config_path;

    Options merged() const {
        Options merged = flags;
        if (config_path.empty()) {
            return merged;
        }
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(detail::read_text_file(config_path));
        } catch (const IoError&) {
            throw;
        } catch (const std::exception& e) {
            throw ParseError(std::string("config parse error: ") + e.what());
        }
        const auto fill = [&j](auto& slot, const char* key) {
            using T = typename std::decay_t<decltype(slot)>::value_type;
            if (!slot && j.contains(key)) {
                try {
                    slot = j.at(key).get<T>();
                } catch (const std::exception&) {
                    throw ParseError(std::string("config: bad value for '") + key + "'");
                }
            }
        };
        fill(merged.eps, "eps");
        fill(merged.min_pts, "min_pts");
        fill(merged.cell_size, "cell_size");
        fill(merged.grid_origin, "grid_origin");
        fill(merged.k_values, "k_values");
        fill(merged.h_values, "h_values");
        fill(merged.horizon, "horizon");
        fill(merged.tol, "tol");
        fill(merged.max_iter, "max_iter");
        fill(merged.seed, "seed");
        fill(merged.eta_paper_exact, "eta_paper_exact");
        fill(merged.alpha0, "alpha0");
        fill(merged.beta0, "beta0");
        fill(merged.v0, "v0");
        fill(merged.validation_fraction, "validation_fraction");
        return merged;
    }
};

void add_common_options(CLI::App* cmd, Cli& cli) {
    cmd->add_option("--config", cli.config_path, "JSON config file; flags override it");
    cmd->add_option("--eps", cli.flags.eps, "DBSCAN neighborhood radius, meters");
    cmd->add_option("--min-pts", cli.flags.min_pts, "DBSCAN minimum neighborhood size");
    cmd->add_option("--cell-size", cli.flags.cell_size, "grid cell size, meters");
    cmd->add_option("--grid-origin", cli.flags.grid_origin, "grid origin as x,y")
        ->delimiter(',')
        ->expected(0, 2);
    cmd->add_option("--k-values", cli.flags.k_values, "candidate component counts, comma separated")
        ->delimiter(',');
    cmd->add_option("--h-values", cli.flags.h_values, "candidate history lengths, comma separated")
        ->delimiter(',');
    cmd->add_option("--horizon", cli.flags.horizon, "prediction horizon F, steps");
    cmd->add_option("--tol", cli.flags.tol, "relative ELBO convergence tolerance");
    cmd->add_option("--max-iter", cli.flags.max_iter, "maximum VBEM iterations");
    cmd->add_option("--seed", cli.flags.seed, "master random seed");
    cmd->add_flag_callback(
        "--eta-paper-exact", [&cli] { cli.flags.eta_paper_exact = true; },
        "drop the beta factor from the predictive precision");
    cmd->add_option("--alpha0", cli.flags.alpha0, "Dirichlet concentration override");
    cmd->add_option("--beta0", cli.flags.beta0, "mean-precision scale override");
    cmd->add_option("--v0", cli.flags.v0, "Wishart degrees-of-freedom override");
    cmd->add_option("--validation-fraction", cli.flags.validation_fraction,
                    "fraction of training segments held out for model selection");
}

double require(const std::optional<double>& v, const char* name) {
    if (!v) {
        throw Error(std::string(name) + " is required");
    }
    return *v;
}

int require_int(const std::optional<int>& v, const char* name) {
    if (!v) {
        throw Error(std::string(name) + " is required");
    }
    return *v;
}

DbscanParams dbscan_params(const Options& opt) {
    DbscanParams params;
    params.eps = require(opt.eps, "eps");
    params.min_pts = require_int(opt.min_pts, "min_pts");
    params.validate();
    return params;
}

GridSpec grid_spec(const Options& opt) {
    GridSpec grid;
    grid.cell_size = require(opt.cell_size, "cell_size");
    if (opt.grid_origin) {
        if (opt.grid_origin->size() != 2) {
            throw Error("grid_origin must be x,y");
        }
        grid.origin_x = (*opt.grid_origin)[0];
        grid.origin_y = (*opt.grid_origin)[1];
    }
    if (!(grid.cell_size > 0.0)) {
        throw Error("cell_size must be > 0");
    }
    return grid;
}

CandidateGrid candidate_grid(const Options& opt) {
    CandidateGrid grid;
    if (!opt.k_values || opt.k_values->empty()) {
        throw Error("k_values is required");
    }
    if (!opt.h_values || opt.h_values->empty()) {
        throw Error("h_values is required");
    }
    grid.K_values = *opt.k_values;
    grid.H_values = *opt.h_values;
    grid.F = require_int(opt.horizon, "horizon");
    grid.alpha0_override = opt.alpha0;
    grid.beta0_override = opt.beta0;
    grid.v0_override = opt.v0;
    grid.validate();
    return grid;
}

std::vector<TrajectorySegment> preprocess_all(const std::vector<Trajectory>& trajectories,
                                              const DbscanParams& params) {
    std::vector<TrajectorySegment> segments;
    for (const auto& traj : trajectories) {
        const Trajectory cleaned = denoise(traj, params);
        for (auto& seg : segment(cleaned, params)) {
            segments.push_back(std::move(seg));
        }
    }
    return segments;
}

std::vector<TrajectorySegment> whole_trajectory_segments(const std::vector<Trajectory>& trajectories) {
    std::vector<TrajectorySegment> segments;
    segments.reserve(trajectories.size());
    for (const auto& traj : trajectories) {
        segments.push_back(TrajectorySegment{traj.object_id, 0, traj.points});
    }
    return segments;
}

/// Seeded split of segments for model selection; with a single segment both
/// sides see it (degenerate small-data mode).
std::pair<std::vector<TrajectorySegment>, std::vector<TrajectorySegment>>
split_segments(std::vector<TrajectorySegment> segments, double fraction, std::uint64_t seed) {
    if (segments.size() < 2) {
        return {segments, segments};
    }
    Rng rng(split_seed(seed, 0xa11c));
    for (std::size_t i = segments.size() - 1; i > 0; --i) {
        std::swap(segments[i], segments[rng.below(i + 1)]);
    }
    auto n_val = static_cast<std::size_t>(
        std::llround(static_cast<double>(segments.size()) * fraction));
    n_val = std::min(std::max<std::size_t>(n_val, 1), segments.size() - 1);
    std::vector<TrajectorySegment> val(segments.begin(), segments.begin() + static_cast<std::ptrdiff_t>(n_val));
    std::vector<TrajectorySegment> train(segments.begin() + static_cast<std::ptrdiff_t>(n_val), segments.end());
    return {std::move(train), std::move(val)};
}

int cmd_gen(const std::string& spec_path, const std::string& out_path) {
    const ScenarioFile scenario = read_scenario_json(spec_path);
    const auto trajectories = generate(scenario.spec, scenario.points_per_traj);
    write_trajectory_csv(out_path, trajectories);
    std::printf("wrote %zu trajectories to %s\n", trajectories.size(), out_path.c_str());
    return 0;
}

int cmd_preprocess(const std::string& in_path, const Options& opt, const std::string& out_path) {
    const auto params = dbscan_params(opt);
    const auto trajectories = read_trajectory_csv(in_path);
    const auto segments = preprocess_all(trajectories, params);
    write_segments_csv(out_path, segments);
    std::printf("wrote %zu segments to %s\n", segments.size(), out_path.c_str());
    return 0;
}

int cmd_train(const std::string& in_path, const Options& opt, const std::string& out_path) {
    const auto params = dbscan_params(opt);
    const CandidateGrid grid = candidate_grid(opt);
    const double tol = opt.tol.value_or(1e-6);
    const int max_iter = opt.max_iter.value_or(200);
    const std::uint64_t seed = opt.seed.value_or(0);
    const double val_fraction = opt.validation_fraction.value_or(0.2);
    const bool eta_exact = opt.eta_paper_exact.value_or(false);

    const auto trajectories = read_trajectory_csv(in_path);
    auto segments = preprocess_all(trajectories, params);
    auto [train_segs, val_segs] = split_segments(std::move(segments), val_fraction, seed);

    const SelectionResult sel = select_model(train_segs, val_segs, grid, tol, max_iter, seed, eta_exact);
    save_model(out_path, sel.model);
    std::printf("K=%d H=%d elbo=%.6f score=%.6f effective_components=%d\n", sel.K, sel.H,
                sel.model.model.elbo_trace.back(), sel.score,
                effective_components(sel.model.model, 0.01));
    return 0;
}

int cmd_predict(const std::string& model_path, const std::string& recent_path, int steps,
                const std::string& out_path) {
    if (steps < 0) {
        throw Error("steps must be >= 0");
    }
    const TrainedModel tm = load_model(model_path);
    const auto trajectories = read_trajectory_csv(recent_path);
    if (trajectories.size() != 1) {
        throw Error("recent csv must contain exactly one trajectory");
    }
    std::vector<TrackPoint> predicted;
    if (steps > 0) {
        predicted = predict_future(tm, trajectories.front().points, steps);
    }
    detail::write_text_file(out_path, predictions_csv_string(predicted));
    std::printf("wrote %zu predicted steps to %s\n", predicted.size(), out_path.c_str());
    return 0;
}

int cmd_eval(const std::string& model_path, const std::string& test_path, const Options& opt,
             const std::string& out_path) {
    const TrainedModel tm = load_model(model_path);
    const GridSpec cell_grid = grid_spec(opt);
    const auto trajectories = read_trajectory_csv(test_path);
    const auto segments = whole_trajectory_segments(trajectories);
    const WindowPredictor predictor = [&tm](const std::vector<TrackPoint>& history) {
        return predict_future(tm, history, tm.F);
    };
    EvalReport report;
    report.rows.push_back(evaluate_windows(predictor, segments, tm.H, tm.F, cell_grid));
    if (!out_path.empty()) {
        write_report_csv(out_path, report);
    }
    const EvalRow& row = report.rows.front();
    std::printf("observable_length=%d rmse=%.6f accuracy=%.6f n_cases=%d\n", row.observable_length,
                row.rmse, row.accuracy, row.n_cases);
    return 0;
}

int cmd_sweep(const std::string& train_path, const std::string& test_path, const Options& opt,
              const std::string& out_path) {
    const auto params = dbscan_params(opt);
    const CandidateGrid grid = candidate_grid(opt);
    const GridSpec cell_grid = grid_spec(opt);
    const double tol = opt.tol.value_or(1e-6);
    const int max_iter = opt.max_iter.value_or(200);
    const std::uint64_t seed = opt.seed.value_or(0);
    const double val_fraction = opt.validation_fraction.value_or(0.2);
    const bool eta_exact = opt.eta_paper_exact.value_or(false);

    const auto train_trajs = read_trajectory_csv(train_path);
    const auto test_trajs = read_trajectory_csv(test_path);
    auto train_all = preprocess_all(train_trajs, params);
    const auto test_segments = preprocess_all(test_trajs, params);
    if (test_segments.empty()) {
        throw NoTestCases("no test cases");
    }
    auto [train_segs, val_segs] = split_segments(std::move(train_all), val_fraction, seed);

    const EvalReport report =
        sweep_observable_length(train_segs, val_segs, test_segments, grid, grid.H_values, cell_grid,
                                tol, max_iter, seed, eta_exact);
    write_report_csv(out_path, report);
    for (const auto& row : report.rows) {
        std::printf("observable_length=%d rmse=%.6f accuracy=%.6f n_cases=%d\n", row.observable_length,
                    row.rmse, row.accuracy, row.n_cases);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Trajectory prediction with variational Gaussian mixture regression"};
    app.require_subcommand(1);

    Cli cli;
    std::string in_path, out_path, spec_path, model_path, recent_path, test_path, train_path;
    int steps = 0;

    auto* gen = app.add_subcommand("gen", "generate a synthetic trajectory CSV from a scenario file");
    gen->add_option("--spec", spec_path, "scenario JSON file")->required();
    gen->add_option("--out", out_path, "output trajectory CSV")->required();

    auto* preprocess = app.add_subcommand("preprocess", "denoise and segment a trajectory CSV");
    preprocess->add_option("--in", in_path, "input trajectory CSV")->required();
    preprocess->add_option("--out", out_path, "output segments CSV")->required();
    add_common_options(preprocess, cli);

    auto* train = app.add_subcommand("train", "select and fit a model, write model JSON");
    train->add_option("--in", in_path, "training trajectory CSV")->required();
    train->add_option("--out", out_path, "output model JSON")->required();
    add_common_options(train, cli);

    auto* predict = app.add_subcommand("predict", "predict future positions from recent history");
    predict->add_option("--model", model_path, "model JSON")->required();
    predict->add_option("--recent", recent_path, "recent history CSV (one trajectory)")->required();
    predict->add_option("--steps", steps, "number of steps to predict")->required();
    predict->add_option("--out", out_path, "output predictions CSV")->required();

    auto* eval = app.add_subcommand("eval", "evaluate a model on test trajectories");
    eval->add_option("--model", model_path, "model JSON")->required();
    eval->add_option("--test", test_path, "test trajectory CSV")->required();
    eval->add_option("--out", out_path, "optional output report CSV");
    add_common_options(eval, cli);

    auto* sweep = app.add_subcommand("sweep", "observable-length sweep, one report row per H");
    sweep->add_option("--train", train_path, "training trajectory CSV")->required();
    sweep->add_option("--test", test_path, "test trajectory CSV")->required();
    sweep->add_option("--out", out_path, "output report CSV")->required();
    add_common_options(sweep, cli);

    CLI11_PARSE(app, argc, argv);

    try {
        const Options opt = cli.merged();
        if (gen->parsed()) return cmd_gen(spec_path, out_path);
        if (preprocess->parsed()) return cmd_preprocess(in_path, opt, out_path);
        if (train->parsed()) return cmd_train(in_path, opt, out_path);
        if (predict->parsed()) return cmd_predict(model_path, recent_path, steps, out_path);
        if (eval->parsed()) return cmd_eval(model_path, test_path, opt, out_path);
        if (sweep->parsed()) return cmd_sweep(train_path, test_path, opt, out_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
