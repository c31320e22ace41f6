// Acceptance suite: one test case per criterion, each printing a PASS/FAIL
// line. Tolerances and runtime bounds are pinned in the assertions.
#include <catch2/catch_amalgamated.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>

#include "oracles.hpp"
#include "trajpred/datagen.hpp"
#include "trajpred/dbscan.hpp"
#include "trajpred/eval.hpp"
#include "trajpred/io.hpp"
#include "trajpred/predict.hpp"
#include "trajpred/rng.hpp"
#include "trajpred/student_t.hpp"
#include "trajpred/vbgmm.hpp"

using namespace trajpred;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

void report(int number, const char* name, bool ok) {
    std::printf("[acceptance] criterion %d (%s): %s\n", number, name, ok ? "PASS" : "FAIL");
    std::fflush(stdout);
}

oracle::Mat to_oracle(const Eigen::MatrixXd& m) {
    oracle::Mat out(static_cast<std::size_t>(m.rows()), oracle::Vec(static_cast<std::size_t>(m.cols())));
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            out[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = m(i, j);
        }
    }
    return out;
}

Eigen::MatrixXd random_dataset(std::uint64_t seed, int n, int d) {
    Rng rng(seed);
    Eigen::MatrixXd data(n, d);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < d; ++j) {
            data(i, j) = rng.uniform(-5, 5) + 4.0 * static_cast<double>(rng.below(3));
        }
    }
    return data;
}

}  // namespace

TEST_CASE("criterion 1: VBEM monotonicity over 100 random datasets") {
    const auto start = Clock::now();
    bool ok = true;
    for (std::uint64_t trial = 0; trial < 100; ++trial) {
        Rng rng(split_seed(0xACCE97, trial));
        const int k = 1 + static_cast<int>(rng.below(4));
        const int d = 1 + static_cast<int>(rng.below(3));
        const int n = k + static_cast<int>(rng.below(static_cast<std::size_t>(51 - k)));
        const Eigen::MatrixXd data = random_dataset(trial, n, d);
        const VbGmmModel model = fit(data, k, Hyperparameters::defaults(data, k), 1e-8, 150, trial);
        for (std::size_t i = 1; i < model.elbo_trace.size(); ++i) {
            ok &= model.elbo_trace[i] >= model.elbo_trace[i - 1] - 1e-8;
        }
    }
    const double elapsed = seconds_since(start);
    ok &= elapsed < 30.0;
    report(1, "vbem-monotonicity", ok);
    REQUIRE(ok);
}

TEST_CASE("criterion 2: K=1 converged ELBO equals the conjugate evidence") {
    const auto start = Clock::now();
    bool ok = true;
    Rng rng(0xE71D);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 5 + static_cast<int>(rng.below(40));
        const int d = 1 + static_cast<int>(rng.below(3));
        Eigen::MatrixXd data(n, d);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < d; ++j) {
                data(i, j) = rng.uniform(-4, 4);
            }
        }
        Hyperparameters hyper;
        hyper.alpha0 = 1.0;
        hyper.beta0 = rng.uniform(0.2, 3.0);
        hyper.m0 = Eigen::VectorXd::Zero(d);
        hyper.w0 = Eigen::MatrixXd::Identity(d, d) * rng.uniform(0.5, 2.0);
        hyper.v0 = d + rng.uniform(0.5, 3.0);

        const VbGmmModel model = fit(data, 1, hyper, 1e-10, 100, static_cast<std::uint64_t>(trial));
        ok &= model.converged;

        oracle::Vec m0(static_cast<std::size_t>(d), 0.0);
        oracle::Mat w0(static_cast<std::size_t>(d), oracle::Vec(static_cast<std::size_t>(d), 0.0));
        for (int j = 0; j < d; ++j) {
            w0[static_cast<std::size_t>(j)][static_cast<std::size_t>(j)] = hyper.w0(j, j);
        }
        const double evidence =
            oracle::normal_wishart_log_evidence(to_oracle(data), m0, hyper.beta0, w0, hyper.v0);
        ok &= std::abs(model.elbo_trace.back() - evidence) < 1e-6;
    }
    const double elapsed = seconds_since(start);
    ok &= elapsed < 5.0;
    report(2, "conjugate-evidence-oracle", ok);
    REQUIRE(ok);
}

TEST_CASE("criterion 3: M-step posterior updates match the hand-computed fixture") {
    Eigen::MatrixXd data(2, 2);
    data << 0, 0, 2, 0;
    Responsibilities resp;
    resp.r = Eigen::MatrixXd::Ones(2, 1);
    Hyperparameters hyper;
    hyper.alpha0 = 1.0;
    hyper.beta0 = 1.0;
    hyper.m0 = Eigen::VectorXd::Zero(2);
    hyper.w0 = Eigen::MatrixXd::Identity(2, 2);
    hyper.v0 = 2.0;

    const auto [stats, comps] = m_step(data, resp, hyper);
    const auto& c = comps[0];
    const Eigen::MatrixXd w_inv = spd_inverse(c.w, "acceptance");

    bool ok = true;
    ok &= std::abs(c.alpha - 3.0) < 1e-12;
    ok &= std::abs(c.beta - 3.0) < 1e-12;
    ok &= std::abs(c.v - 4.0) < 1e-12;
    ok &= std::abs(c.m[0] - 2.0 / 3.0) < 1e-12;
    ok &= std::abs(c.m[1]) < 1e-12;
    ok &= std::abs(w_inv(0, 0) - 11.0 / 3.0) < 1e-12;
    ok &= std::abs(w_inv(0, 1)) < 1e-12;
    ok &= std::abs(w_inv(1, 0)) < 1e-12;
    ok &= std::abs(w_inv(1, 1) - 1.0) < 1e-12;
    report(3, "posterior-update-oracle", ok);
    REQUIRE(ok);
}

TEST_CASE("criterion 4: DBSCAN equals the brute-force reference on 50 random sets") {
    const auto start = Clock::now();
    bool ok = true;
    for (std::uint64_t trial = 0; trial < 50; ++trial) {
        Rng rng(split_seed(0xDB5CA9, trial));
        const int n = 1 + static_cast<int>(rng.below(200));
        std::vector<std::pair<double, double>> pts;
        Eigen::MatrixX2d m(n, 2);
        for (int i = 0; i < n; ++i) {
            const double cx = 8.0 * static_cast<double>(rng.below(4));
            const double cy = 8.0 * static_cast<double>(rng.below(4));
            const double x = cx + rng.uniform(-1.5, 1.5);
            const double y = cy + rng.uniform(-1.5, 1.5);
            pts.emplace_back(x, y);
            m(i, 0) = x;
            m(i, 1) = y;
        }
        const DbscanParams params{0.25 + rng.uniform(0.0, 1.3), 1 + static_cast<int>(rng.below(6))};
        const auto got = dbscan(m, params);
        const auto expected = oracle::dbscan(pts, params.eps, params.min_pts);
        for (int i = 0; i < n; ++i) {
            const auto& g = got[static_cast<std::size_t>(i)];
            const auto& e = expected[static_cast<std::size_t>(i)];
            const int role = g.role == PointRole::Noise ? 0 : (g.role == PointRole::Edge ? 1 : 2);
            ok &= role == e.role;
            ok &= g.cluster_id.value_or(-1) == e.cluster;
        }
    }
    const double elapsed = seconds_since(start);
    ok &= elapsed < 10.0;
    report(4, "dbscan-equivalence", ok);
    REQUIRE(ok);
}

TEST_CASE("criterion 5: small alpha0 prunes the 3-blob fixture to 3 components") {
    Rng rng(0xB10B);
    Eigen::MatrixXd data(300, 2);
    const double centers[3][2] = {{0, 0}, {50, 0}, {0, 50}};
    for (int i = 0; i < 300; ++i) {
        const int blob = i / 100;
        data(i, 0) = centers[blob][0] + 0.5 * rng.normal();
        data(i, 1) = centers[blob][1] + 0.5 * rng.normal();
    }
    bool ok = true;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        Hyperparameters hyper = Hyperparameters::defaults(data, 8);
        hyper.alpha0 = 1e-3;
        const VbGmmModel model = fit(data, 8, hyper, 1e-6, 200, seed);
        ok &= effective_components(model, 0.01) == 3;
    }
    report(5, "component-pruning", ok);
    REQUIRE(ok);
}

TEST_CASE("criterion 6: conditional means match the Schur-complement oracle") {
    Rng rng(0x5C09);
    bool ok = true;
    for (int trial = 0; trial < 100; ++trial) {
        const int d = 2 + static_cast<int>(rng.below(5));
        const int h = 1 + static_cast<int>(rng.below(static_cast<std::size_t>(d - 1)));
        Eigen::MatrixXd a(d, d);
        for (int i = 0; i < d; ++i) {
            for (int j = 0; j < d; ++j) {
                a(i, j) = rng.uniform(-1, 1);
            }
        }
        const Eigen::MatrixXd sigma = a * a.transpose() + d * Eigen::MatrixXd::Identity(d, d);
        Eigen::VectorXd mean(d);
        Eigen::VectorXd x_h(h);
        for (int i = 0; i < d; ++i) {
            mean[i] = rng.uniform(-5, 5);
        }
        for (int i = 0; i < h; ++i) {
            x_h[i] = rng.uniform(-5, 5);
        }

        PredictiveMixture mix;
        mix.D = d;
        mix.h_dim = h;
        mix.f_dim = d - h;
        mix.components.push_back(
            StudentTComponent{1.0, mean, spd_inverse(sigma, "acceptance"), rng.uniform(3, 15)});
        const auto cond = condition(mix, x_h);

        oracle::Mat osigma(static_cast<std::size_t>(d), oracle::Vec(static_cast<std::size_t>(d)));
        for (int i = 0; i < d; ++i) {
            for (int j = 0; j < d; ++j) {
                osigma[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = sigma(i, j);
            }
        }
        const auto expected = oracle::conditional_mean(osigma, oracle::Vec(mean.data(), mean.data() + d),
                                                       oracle::Vec(x_h.data(), x_h.data() + h));
        for (int i = 0; i < d - h; ++i) {
            ok &= std::abs(cond.cond_means[0][i] - expected[static_cast<std::size_t>(i)]) < 1e-9;
        }
    }
    report(6, "conditional-regression-oracle", ok);
    REQUIRE(ok);
}

TEST_CASE("criterion 7: Student-t matches its Gaussian limit and the Cauchy mode") {
    bool ok = true;

    Eigen::VectorXd zero(1);
    zero << 0.0;
    const Eigen::MatrixXd unit = Eigen::MatrixXd::Identity(1, 1);
    ok &= std::abs(student_t_logpdf(zero, zero, unit, 1.0) - (-1.1447299)) < 1e-6;

    Rng rng(0x71);
    for (int rep = 0; rep < 3; ++rep) {
        const double mean = rng.uniform(-2, 2);
        const double precision = rng.uniform(0.4, 3.0);
        Eigen::MatrixXd eta(1, 1);
        eta << precision;
        Eigen::VectorXd m(1);
        m << mean;
        const double sigma = 1.0 / std::sqrt(precision);
        for (int i = 0; i < 50; ++i) {
            Eigen::VectorXd x(1);
            x << mean + (i - 24.5) * 0.25 * sigma;
            const double t_density = std::exp(student_t_logpdf(x, m, eta, 1e8));
            const double g_density = std::exp(oracle::gaussian_logpdf_1d(x[0], mean, precision));
            ok &= std::abs(t_density - g_density) < 1e-6;
        }
    }
    report(7, "student-t-limit", ok);
    REQUIRE(ok);
}

TEST_CASE("criterion 8: end-to-end bar against the constant-velocity baseline") {
    const auto start = Clock::now();

    ScenarioSpec spec;
    spec.n_objects = 40;
    spec.pattern_set = {MotionPattern::Straight, MotionPattern::LeftTurn, MotionPattern::RightTurn,
                        MotionPattern::SCurve};
    spec.step_length = 1.0;
    spec.noise_kind = NoiseKind::StudentT;
    spec.noise_scale = 0.2 * spec.step_length;
    spec.seed = 20240817;
    const auto trajectories = generate(spec, 60);

    const DbscanParams params{5.0 * spec.step_length, 5};
    std::vector<TrajectorySegment> segments;
    for (const auto& traj : trajectories) {
        const Trajectory cleaned = denoise(traj, params);
        for (auto& seg : segment(cleaned, params)) {
            segments.push_back(std::move(seg));
        }
    }

    // held-out 20% split of segments
    Rng shuffle_rng(split_seed(spec.seed, 0xFEED));
    for (std::size_t i = segments.size() - 1; i > 0; --i) {
        std::swap(segments[i], segments[shuffle_rng.below(i + 1)]);
    }
    const std::size_t n_test = segments.size() / 5;
    const std::vector<TrajectorySegment> test_segments(segments.begin(),
                                                       segments.begin() + static_cast<std::ptrdiff_t>(n_test));
    std::vector<TrajectorySegment> rest(segments.begin() + static_cast<std::ptrdiff_t>(n_test),
                                        segments.end());
    const std::size_t n_val = std::max<std::size_t>(1, rest.size() / 5);
    const std::vector<TrajectorySegment> val_segments(rest.begin(),
                                                      rest.begin() + static_cast<std::ptrdiff_t>(n_val));
    const std::vector<TrajectorySegment> train_segments(rest.begin() + static_cast<std::ptrdiff_t>(n_val),
                                                        rest.end());

    CandidateGrid grid;
    grid.K_values = {2, 4, 8};
    grid.H_values = {4};
    grid.F = 5;
    const SelectionResult sel = select_model(train_segments, val_segments, grid, 1e-6, 200, 7);

    const GridSpec cell_grid{0.0, 0.0, spec.step_length};
    const WindowPredictor vgmm = [&sel](const std::vector<TrackPoint>& history) {
        return predict_future(sel.model, history, sel.model.F);
    };
    const WindowPredictor baseline = [&grid](const std::vector<TrackPoint>& history) {
        return constant_velocity_baseline(history, grid.F);
    };
    const EvalRow vgmm_row = evaluate_windows(vgmm, test_segments, sel.H, grid.F, cell_grid);
    const EvalRow base_row = evaluate_windows(baseline, test_segments, sel.H, grid.F, cell_grid);

    const double elapsed = seconds_since(start);
    std::printf("[acceptance]   vgmm rmse=%.4f acc=%.4f | baseline rmse=%.4f acc=%.4f | %d cases, %.1fs\n",
                vgmm_row.rmse, vgmm_row.accuracy, base_row.rmse, base_row.accuracy, vgmm_row.n_cases,
                elapsed);
    bool ok = true;
    ok &= vgmm_row.rmse < base_row.rmse;
    ok &= vgmm_row.accuracy > base_row.accuracy;
    ok &= elapsed < 60.0;
    report(8, "end-to-end-bar", ok);
    REQUIRE(ok);
}

TEST_CASE("criterion 9: sweep report is byte-deterministic and the oracle scores perfectly") {
    ScenarioSpec spec;
    spec.n_objects = 10;
    spec.pattern_set = {MotionPattern::Straight, MotionPattern::LeftTurn};
    spec.step_length = 1.0;
    spec.noise_kind = NoiseKind::Gaussian;
    spec.noise_scale = 0.1;
    spec.seed = 31;
    const auto trajectories = generate(spec, 40);
    std::vector<TrajectorySegment> segments;
    for (const auto& t : trajectories) {
        segments.push_back(TrajectorySegment{t.object_id, 0, t.points});
    }
    const std::vector<TrajectorySegment> train(segments.begin(), segments.begin() + 6);
    const std::vector<TrajectorySegment> val(segments.begin() + 6, segments.begin() + 8);
    const std::vector<TrajectorySegment> test(segments.begin() + 8, segments.end());

    CandidateGrid grid;
    grid.K_values = {1, 2};
    grid.H_values = {2, 4, 6};
    grid.F = 3;
    const GridSpec cell{0.0, 0.0, 1.0};
    const std::vector<int> h_range = {2, 4, 6};

    const auto a = sweep_observable_length(train, val, test, grid, h_range, cell, 1e-6, 100, 2718);
    const auto b = sweep_observable_length(train, val, test, grid, h_range, cell, 1e-6, 100, 2718);
    bool ok = report_csv_string(a) == report_csv_string(b);
    ok &= a.rows.size() == 3;

    // perfect-oracle injection: noiseless data predicted by its own rule
    ScenarioSpec clean = spec;
    clean.noise_scale = 0.0;
    const auto clean_trajs = generate(clean, 40);
    std::vector<TrajectorySegment> clean_segments;
    for (const auto& t : clean_trajs) {
        if (t.points[1].x - t.points[0].x == t.points[2].x - t.points[1].x &&
            t.points[1].y - t.points[0].y == t.points[2].y - t.points[1].y) {
            clean_segments.push_back(TrajectorySegment{t.object_id, 0, t.points});  // straight only
        }
    }
    const PredictorFactory oracle_factory = [&grid](int) -> WindowPredictor {
        return [&grid](const std::vector<TrackPoint>& history) {
            return constant_velocity_baseline(history, grid.F);
        };
    };
    const auto oracle_report = sweep_observable_length(oracle_factory, clean_segments, h_range, grid.F, cell);
    for (const auto& row : oracle_report.rows) {
        ok &= row.rmse == 0.0;
        ok &= row.accuracy == 1.0;
    }
    report(9, "sweep-harness", ok);
    REQUIRE(ok);
}
