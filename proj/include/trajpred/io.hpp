#pragma once

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "trajpred/datagen.hpp"
#include "trajpred/errors.hpp"
#include "trajpred/eval.hpp"
#include "trajpred/predict.hpp"
#include "trajpred/trajectory.hpp"
#include "trajpred/vbgmm.hpp"

namespace trajpred {

constexpr const char* kTrajectoryCsvHeader = "object_id,timestamp,x,y";
constexpr const char* kPredictionsCsvHeader = "step,x,y";
constexpr const char* kReportCsvHeader = "observable_length,rmse,accuracy,n_cases";

namespace detail {

/// Shortest decimal form that parses back to the same double.
inline std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s, const std::string& context) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
        throw ParseError(context + ": bad number '" + std::string(s) + "'");
    }
    return v;
}

inline std::vector<std::string_view> split_csv_line(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return fields;
}

inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open '" + path + "'");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot open '" + path + "' for writing");
    }
    out << content;
    if (!out) {
        throw IoError("write failed for '" + path + "'");
    }
}

}  // namespace detail

/// Parses the trajectory CSV format. Rows must be grouped by object with
/// strictly increasing timestamps inside each group.
inline std::vector<Trajectory> parse_trajectory_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) {
        throw ParseError("trajectory csv: empty file");
    }
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }
    if (line != kTrajectoryCsvHeader) {
        throw ParseError("trajectory csv: header must be '" + std::string(kTrajectoryCsvHeader) + "'");
    }
    std::vector<Trajectory> out;
    std::vector<TrackPoint> current;
    std::vector<std::string> seen_ids;
    std::size_t line_no = 1;
    const auto flush = [&] {
        if (!current.empty()) {
            out.push_back(validate_trajectory(std::move(current)));
            current.clear();
        }
    };
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        const auto fields = detail::split_csv_line(line);
        const std::string ctx = "trajectory csv line " + std::to_string(line_no);
        if (fields.size() != 4) {
            throw ParseError(ctx + ": expected 4 fields");
        }
        TrackPoint p;
        p.object_id = std::string(fields[0]);
        if (p.object_id.empty()) {
            throw ParseError(ctx + ": empty object_id");
        }
        p.timestamp = detail::parse_double(fields[1], ctx);
        p.x = detail::parse_double(fields[2], ctx);
        p.y = detail::parse_double(fields[3], ctx);
        if (current.empty() || current.back().object_id != p.object_id) {
            for (const auto& id : seen_ids) {
                if (id == p.object_id) {
                    throw ParseError(ctx + ": rows for object '" + p.object_id + "' are not contiguous");
                }
            }
            flush();
            seen_ids.push_back(p.object_id);
        }
        current.push_back(std::move(p));
    }
    flush();
    return out;
}

inline std::vector<Trajectory> read_trajectory_csv(const std::string& path) {
    return parse_trajectory_csv(detail::read_text_file(path));
}

inline std::string trajectory_csv_string(const std::vector<Trajectory>& trajectories) {
    std::string s(kTrajectoryCsvHeader);
    s += '\n';
    for (const auto& traj : trajectories) {
        for (const auto& p : traj.points) {
            s += p.object_id;
            s += ',';
            s += detail::format_double(p.timestamp);
            s += ',';
            s += detail::format_double(p.x);
            s += ',';
            s += detail::format_double(p.y);
            s += '\n';
        }
    }
    return s;
}

inline void write_trajectory_csv(const std::string& path, const std::vector<Trajectory>& trajectories) {
    detail::write_text_file(path, trajectory_csv_string(trajectories));
}

/// Segments are written as trajectories with ids '<parent>_s<index>'.
inline void write_segments_csv(const std::string& path, const std::vector<TrajectorySegment>& segments) {
    std::vector<Trajectory> renamed;
    renamed.reserve(segments.size());
    for (const auto& seg : segments) {
        Trajectory t;
        t.object_id = seg.parent_id + "_s" + std::to_string(seg.index);
        t.points = seg.points;
        for (auto& p : t.points) {
            p.object_id = t.object_id;
        }
        renamed.push_back(std::move(t));
    }
    detail::write_text_file(path, trajectory_csv_string(renamed));
}

inline std::string predictions_csv_string(const std::vector<TrackPoint>& predicted) {
    std::string s(kPredictionsCsvHeader);
    s += '\n';
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        s += std::to_string(i + 1);
        s += ',';
        s += detail::format_double(predicted[i].x);
        s += ',';
        s += detail::format_double(predicted[i].y);
        s += '\n';
    }
    return s;
}

inline std::string report_csv_string(const EvalReport& report) {
    std::string s(kReportCsvHeader);
    s += '\n';
    char buf[128];
    for (const auto& row : report.rows) {
        std::snprintf(buf, sizeof(buf), "%d,%.6f,%.6f,%d\n", row.observable_length, row.rmse,
                      row.accuracy, row.n_cases);
        s += buf;
    }
    return s;
}

inline void write_report_csv(const std::string& path, const EvalReport& report) {
    detail::write_text_file(path, report_csv_string(report));
}

// ---------------------------------------------------------------------------
// Model JSON

namespace detail {

inline nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
    nlohmann::json arr = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            arr.push_back(m(i, j));
        }
    }
    return arr;
}

inline nlohmann::json vector_to_json(const Eigen::VectorXd& v) {
    nlohmann::json arr = nlohmann::json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        arr.push_back(v[i]);
    }
    return arr;
}

inline Eigen::MatrixXd matrix_from_json(const nlohmann::json& arr, Eigen::Index rows, Eigen::Index cols) {
    if (!arr.is_array() || static_cast<Eigen::Index>(arr.size()) != rows * cols) {
        throw ParseError("model parse error: matrix size mismatch");
    }
    Eigen::MatrixXd m(rows, cols);
    Eigen::Index idx = 0;
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < cols; ++j) {
            m(i, j) = arr[static_cast<std::size_t>(idx++)].get<double>();
        }
    }
    return m;
}

inline Eigen::VectorXd vector_from_json(const nlohmann::json& arr, Eigen::Index size) {
    if (!arr.is_array() || static_cast<Eigen::Index>(arr.size()) != size) {
        throw ParseError("model parse error: vector size mismatch");
    }
    Eigen::VectorXd v(size);
    for (Eigen::Index i = 0; i < size; ++i) {
        v[i] = arr[static_cast<std::size_t>(i)].get<double>();
    }
    return v;
}

}  // namespace detail

inline nlohmann::json model_to_json(const TrainedModel& tm) {
    const VbGmmModel& m = tm.model;
    nlohmann::json j;
    j["version"] = 1;
    j["K"] = m.K;
    j["D"] = m.D;
    j["seed"] = m.seed;
    j["converged"] = m.converged;
    j["elbo_trace"] = m.elbo_trace;
    j["hyperparameters"] = {
        {"alpha0", m.hyper.alpha0},
        {"beta0", m.hyper.beta0},
        {"m0", detail::vector_to_json(m.hyper.m0)},
        {"w0", detail::matrix_to_json(m.hyper.w0)},
        {"v0", m.hyper.v0},
    };
    nlohmann::json comps = nlohmann::json::array();
    for (const auto& c : m.components) {
        comps.push_back({
            {"alpha", c.alpha},
            {"beta", c.beta},
            {"m", detail::vector_to_json(c.m)},
            {"w", detail::matrix_to_json(c.w)},
            {"v", c.v},
        });
    }
    j["components"] = std::move(comps);
    j["H"] = tm.H;
    j["F"] = tm.F;
    j["h_dim"] = 2 * tm.H;
    j["f_dim"] = 2 * tm.F;
    j["eta_paper_exact"] = tm.eta_paper_exact;
    j["score"] = tm.score;
    return j;
}

inline TrainedModel model_from_json(const nlohmann::json& j) {
    try {
        TrainedModel tm;
        VbGmmModel& m = tm.model;
        if (j.at("version").get<int>() != 1) {
            throw ParseError("model parse error: unsupported version");
        }
        m.K = j.at("K").get<int>();
        m.D = j.at("D").get<int>();
        m.seed = j.at("seed").get<std::uint64_t>();
        m.converged = j.at("converged").get<bool>();
        m.elbo_trace = j.at("elbo_trace").get<std::vector<double>>();
        const auto& h = j.at("hyperparameters");
        m.hyper.alpha0 = h.at("alpha0").get<double>();
        m.hyper.beta0 = h.at("beta0").get<double>();
        m.hyper.m0 = detail::vector_from_json(h.at("m0"), m.D);
        m.hyper.w0 = detail::matrix_from_json(h.at("w0"), m.D, m.D);
        m.hyper.v0 = h.at("v0").get<double>();
        const auto& comps = j.at("components");
        if (!comps.is_array() || static_cast<int>(comps.size()) != m.K) {
            throw ParseError("model parse error: component count mismatch");
        }
        for (const auto& cj : comps) {
            ComponentPosterior c;
            c.alpha = cj.at("alpha").get<double>();
            c.beta = cj.at("beta").get<double>();
            c.m = detail::vector_from_json(cj.at("m"), m.D);
            c.w = detail::matrix_from_json(cj.at("w"), m.D, m.D);
            c.v = cj.at("v").get<double>();
            m.components.push_back(std::move(c));
        }
        tm.H = j.at("H").get<int>();
        tm.F = j.at("F").get<int>();
        tm.eta_paper_exact = j.at("eta_paper_exact").get<bool>();
        tm.score = j.value("score", 0.0);
        if (j.at("h_dim").get<int>() != 2 * tm.H || j.at("f_dim").get<int>() != 2 * tm.F) {
            throw ParseError("model parse error: window dims inconsistent with H/F");
        }
        if (2 * (tm.H + tm.F) != m.D) {
            throw ParseError("model parse error: D inconsistent with H/F");
        }
        return tm;
    } catch (const ParseError&) {
        throw;
    } catch (const std::exception& e) {
        throw ParseError(std::string("model parse error: ") + e.what());
    }
}

inline void save_model(const std::string& path, const TrainedModel& tm) {
    detail::write_text_file(path, model_to_json(tm).dump(2) + "\n");
}

inline TrainedModel load_model(const std::string& path) {
    const std::string text = detail::read_text_file(path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const std::exception& e) {
        throw ParseError(std::string("model parse error: ") + e.what());
    }
    return model_from_json(j);
}

// ---------------------------------------------------------------------------
// Scenario JSON (input of the generator)

struct ScenarioFile {
    ScenarioSpec spec;
    int points_per_traj = 2;
};

namespace detail {

template <typename T>
T scenario_field(const nlohmann::json& j, const char* name) {
    if (!j.contains(name)) {
        throw ParseError(std::string("scenario: missing field '") + name + "'");
    }
    try {
        return j.at(name).get<T>();
    } catch (const std::exception&) {
        throw ParseError(std::string("scenario: bad value for field '") + name + "'");
    }
}

inline MotionPattern pattern_from_string(const std::string& s) {
    if (s == "straight") return MotionPattern::Straight;
    if (s == "left_turn") return MotionPattern::LeftTurn;
    if (s == "right_turn") return MotionPattern::RightTurn;
    if (s == "s_curve") return MotionPattern::SCurve;
    throw ParseError("scenario: bad value for field 'patterns' (unknown pattern '" + s + "')");
}

inline NoiseKind noise_from_string(const std::string& s) {
    if (s == "gaussian") return NoiseKind::Gaussian;
    if (s == "student_t") return NoiseKind::StudentT;
    if (s == "impulse") return NoiseKind::Impulse;
    throw ParseError("scenario: bad value for field 'noise_kind' (unknown kind '" + s + "')");
}

}  // namespace detail

inline ScenarioFile parse_scenario_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const std::exception& e) {
        throw ParseError(std::string("scenario: invalid json: ") + e.what());
    }
    ScenarioFile f;
    f.spec.n_objects = detail::scenario_field<int>(j, "n_objects");
    const auto patterns = detail::scenario_field<std::vector<std::string>>(j, "patterns");
    f.spec.pattern_set.clear();
    for (const auto& p : patterns) {
        f.spec.pattern_set.push_back(detail::pattern_from_string(p));
    }
    f.spec.step_length = detail::scenario_field<double>(j, "step_length");
    f.spec.noise_kind = detail::noise_from_string(detail::scenario_field<std::string>(j, "noise_kind"));
    f.spec.noise_scale = detail::scenario_field<double>(j, "noise_scale");
    f.spec.impulse_prob = j.value("impulse_prob", 0.0);
    f.spec.seed = detail::scenario_field<std::uint64_t>(j, "seed");
    f.points_per_traj = detail::scenario_field<int>(j, "points_per_traj");
    try {
        f.spec.validate();
        if (f.points_per_traj < 2) {
            throw Error("points_per_traj must be >= 2");
        }
    } catch (const Error& e) {
        throw ParseError(std::string("scenario: ") + e.what());
    }
    return f;
}

inline ScenarioFile read_scenario_json(const std::string& path) {
    return parse_scenario_json(detail::read_text_file(path));
}

}  // namespace trajpred
