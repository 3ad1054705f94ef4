/**
 * @file scenario.cpp
 * @brief Scenario schema parsing/serialization, built-in presets, and the
 *        analysis execution engine with CSV/SVG/JSON artifact emission.
 */
#include "pflow/scenario.hpp"

#include "json.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

namespace pflow {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
    throw PreconditionError(path + ": " + msg);
}

const json& require_key(const json& j, const std::string& key,
                        const std::string& path) {
    if (!j.is_object()) fail(path, "expected an object");
    auto it = j.find(key);
    if (it == j.end()) fail(path + "." + key, "missing");
    return *it;
}

double get_number(const json& j, const std::string& path) {
    if (!j.is_number()) fail(path, "expected a number");
    return j.get<double>();
}

int get_int(const json& j, const std::string& path) {
    if (!j.is_number_integer()) fail(path, "expected an integer");
    return j.get<int>();
}

std::string get_string(const json& j, const std::string& path) {
    if (!j.is_string()) fail(path, "expected a string");
    return j.get<std::string>();
}

Vec parse_vec(const json& j, const std::string& path, int expected = -1) {
    if (!j.is_array()) fail(path, "expected an array of numbers");
    if (expected >= 0 && static_cast<int>(j.size()) != expected) {
        fail(path, "expected " + std::to_string(expected) + " entries, got " +
                       std::to_string(j.size()));
    }
    Vec v(static_cast<int>(j.size()));
    for (int i = 0; i < v.size(); ++i) {
        v[i] = get_number(j[static_cast<std::size_t>(i)],
                          path + "[" + std::to_string(i) + "]");
    }
    return v;
}

Mat parse_mat(const json& j, const std::string& path, int rows = -1,
              int cols = -1) {
    if (!j.is_array() || j.empty()) fail(path, "expected a non-empty array of rows");
    if (rows >= 0 && static_cast<int>(j.size()) != rows) {
        fail(path, "expected " + std::to_string(rows) + " rows, got " +
                       std::to_string(j.size()));
    }
    const int r = static_cast<int>(j.size());
    int c = cols;
    Mat M;
    for (int i = 0; i < r; ++i) {
        Vec row = parse_vec(j[static_cast<std::size_t>(i)],
                            path + "[" + std::to_string(i) + "]", c);
        if (i == 0) {
            c = static_cast<int>(row.size());
            M.resize(r, c);
        }
        M.row(i) = row.transpose();
    }
    return M;
}

json vec_json(const Vec& v) {
    json a = json::array();
    for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

json mat_json(const Mat& M) {
    json a = json::array();
    for (int i = 0; i < M.rows(); ++i) a.push_back(vec_json(M.row(i).transpose()));
    return a;
}

struct KindInfo {
    AnalysisKind kind;
    const char* name;
};

constexpr KindInfo kKinds[] = {
    {AnalysisKind::kDecompose, "decompose"},
    {AnalysisKind::kSimulate, "simulate"},
    {AnalysisKind::kSphereSim, "sphere-sim"},
    {AnalysisKind::kExponents, "exponents"},
    {AnalysisKind::kSelgrade, "selgrade"},
    {AnalysisKind::kReach, "reach"},
    {AnalysisKind::kChain, "chain"},
    {AnalysisKind::kLimits, "limits"},
    {AnalysisKind::kPortrait, "portrait"},
    {AnalysisKind::kVerifyStable, "verify-stable"},
};

/// Execution precedence: structure first, dynamics next, drawing last.
int kind_rank(AnalysisKind k) {
    switch (k) {
        case AnalysisKind::kDecompose: return 0;
        case AnalysisKind::kSimulate: return 1;
        case AnalysisKind::kSphereSim: return 2;
        case AnalysisKind::kSelgrade: return 3;
        case AnalysisKind::kExponents: return 4;
        case AnalysisKind::kReach: return 5;
        case AnalysisKind::kChain: return 6;
        case AnalysisKind::kLimits: return 7;
        case AnalysisKind::kVerifyStable: return 8;
        case AnalysisKind::kPortrait: return 9;
    }
    return 99;
}

/// Keys accepted (and echoed) per analysis kind, besides "kind".
std::vector<std::string> kind_keys(AnalysisKind k) {
    switch (k) {
        case AnalysisKind::kDecompose: return {};
        case AnalysisKind::kSimulate: return {"x0", "T", "dt"};
        case AnalysisKind::kSphereSim: return {"s0", "T", "dt"};
        case AnalysisKind::kExponents: return {"s0", "T", "i0_exponent"};
        case AnalysisKind::kSelgrade: return {"s0", "i0_exponent"};
        case AnalysisKind::kReach:
            return {"cells_per_axis", "half_width", "tau", "mode"};
        case AnalysisKind::kChain:
            return {"domain", "cells_per_axis", "half_width", "tau", "mode",
                    "subdivisions", "segments", "plane_i", "plane_j"};
        case AnalysisKind::kLimits: return {"runs", "tol", "T"};
        case AnalysisKind::kPortrait:
            return {"target", "subdivisions", "half_width"};
        case AnalysisKind::kVerifyStable:
            return {"s0", "T", "i0_exponent", "alpha", "delta", "num_seeds"};
    }
    return {};
}

/// Kind-dependent defaults; fields not listed keep the struct defaults.
void apply_kind_defaults(AnalysisRequest& r, int n) {
    switch (r.kind) {
        case AnalysisKind::kSimulate:
            r.x0 = Vec::Constant(n, 0.5);
            r.T = 10.0;
            r.dt = 0.05;
            break;
        case AnalysisKind::kSphereSim: {
            Vec y(n + 1);
            y.head(n).setConstant(0.5);
            y[n] = 1.0;
            r.s0 = y;
            r.T = 10.0;
            r.dt = 0.05;
            break;
        }
        case AnalysisKind::kExponents:
            r.T = 50.0; // s0 stays empty: resolved to the reference space
            break;
        case AnalysisKind::kSelgrade:
            break;
        case AnalysisKind::kVerifyStable:
            r.T = 30.0;
            break;
        case AnalysisKind::kLimits:
            r.T = 100.0;
            break;
        case AnalysisKind::kPortrait:
            r.subdivisions = 3;
            break;
        default:
            break;
    }
}

void validate_request(const AnalysisRequest& r, int n, const std::string& path) {
    auto positive = [&](double v, const char* key) {
        if (!(v > 0.0)) fail(path + "." + key, "must be positive");
    };
    switch (r.kind) {
        case AnalysisKind::kDecompose:
            break;
        case AnalysisKind::kSimulate:
            if (static_cast<int>(r.x0.size()) != n) {
                fail(path + ".x0", "expected " + std::to_string(n) +
                                       " entries, got " + std::to_string(r.x0.size()));
            }
            positive(r.T, "T");
            positive(r.dt, "dt");
            if (r.T / r.dt > 2e5) fail(path + ".dt", "more than 2e5 samples requested");
            break;
        case AnalysisKind::kSphereSim:
            if (static_cast<int>(r.s0.size()) != n + 1) {
                fail(path + ".s0", "expected " + std::to_string(n + 1) +
                                       " entries, got " + std::to_string(r.s0.size()));
            }
            positive(r.T, "T");
            positive(r.dt, "dt");
            if (r.T / r.dt > 2e5) fail(path + ".dt", "more than 2e5 samples requested");
            break;
        case AnalysisKind::kExponents:
        case AnalysisKind::kSelgrade:
        case AnalysisKind::kVerifyStable:
            if (r.s0.size() != 0 && static_cast<int>(r.s0.size()) != n + 1) {
                fail(path + ".s0", "expected " + std::to_string(n + 1) +
                                       " entries, got " + std::to_string(r.s0.size()));
            }
            if (r.kind != AnalysisKind::kSelgrade) positive(r.T, "T");
            if (r.kind == AnalysisKind::kVerifyStable) {
                if (!(r.alpha < 0.0)) fail(path + ".alpha", "must be negative");
                positive(r.delta, "delta");
                if (r.num_seeds < 1) fail(path + ".num_seeds", "must be at least 1");
            }
            if (r.i0_exponent < 0.0) {
                fail(path + ".i0_exponent", "must be a positive exponent (or 0 for auto)");
            }
            break;
        case AnalysisKind::kReach:
        case AnalysisKind::kChain: {
            if (r.kind == AnalysisKind::kChain && r.domain != "grid" &&
                r.domain != "sphere" && r.domain != "circle") {
                fail(path + ".domain", "expected \"grid\", \"sphere\", or \"circle\"");
            }
            positive(r.tau, "tau");
            const bool grid_based = r.kind == AnalysisKind::kReach || r.domain == "grid";
            if (grid_based) {
                if (r.cells_per_axis < 3) fail(path + ".cells_per_axis", "must be at least 3");
                positive(r.half_width, "half_width");
                if (r.mode != "center" && r.mode != "enclosure") {
                    fail(path + ".mode", "expected \"center\" or \"enclosure\"");
                }
                double cells = 1.0;
                for (int i = 0; i < n; ++i) cells *= r.cells_per_axis;
                if (cells > 2e7) {
                    fail(path + ".cells_per_axis",
                         "grid would exceed 2e7 cells; reduce the resolution");
                }
            } else if (r.domain == "sphere") {
                if (n != 2) fail(path + ".domain", "sphere mesh requires a planar state (n = 2)");
                if (r.subdivisions < 1 || r.subdivisions > 7) {
                    fail(path + ".subdivisions", "must be between 1 and 7");
                }
            } else if (r.domain == "circle") {
                if (r.segments < 8) fail(path + ".segments", "must be at least 8");
                if (r.plane_i < 0 || r.plane_i >= n || r.plane_j < 0 ||
                    r.plane_j >= n || r.plane_i == r.plane_j) {
                    fail(path + ".plane_i", "plane axes must be distinct state axes");
                }
            }
            break;
        }
        case AnalysisKind::kLimits:
            if (r.runs < 1) fail(path + ".runs", "must be at least 1");
            positive(r.tol, "tol");
            positive(r.T, "T");
            break;
        case AnalysisKind::kPortrait:
            if (r.target != "sphere" && r.target != "plane") {
                fail(path + ".target", "expected \"sphere\" or \"plane\"");
            }
            if (r.subdivisions < 1 || r.subdivisions > 7) {
                fail(path + ".subdivisions", "must be between 1 and 7");
            }
            positive(r.half_width, "half_width");
            break;
    }
}

AnalysisRequest parse_request(const json& j, int n, const std::string& path) {
    if (!j.is_object()) fail(path, "expected an object");
    AnalysisRequest r;
    r.kind = analysis_kind_from_name(get_string(require_key(j, "kind", path),
                                                path + ".kind"));
    apply_kind_defaults(r, n);
    const std::vector<std::string> allowed = kind_keys(r.kind);
    for (auto it = j.begin(); it != j.end(); ++it) {
        const std::string& key = it.key();
        if (key == "kind") continue;
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
            fail(path + "." + key, "unknown parameter for kind \"" +
                                       analysis_kind_name(r.kind) + "\"");
        }
        const json& v = *it;
        const std::string kp = path + "." + key;
        if (key == "x0") r.x0 = parse_vec(v, kp);
        else if (key == "s0") r.s0 = parse_vec(v, kp);
        else if (key == "T") r.T = get_number(v, kp);
        else if (key == "dt") r.dt = get_number(v, kp);
        else if (key == "i0_exponent") r.i0_exponent = get_number(v, kp);
        else if (key == "cells_per_axis") r.cells_per_axis = get_int(v, kp);
        else if (key == "half_width") r.half_width = get_number(v, kp);
        else if (key == "tau") r.tau = get_number(v, kp);
        else if (key == "mode") r.mode = get_string(v, kp);
        else if (key == "domain") r.domain = get_string(v, kp);
        else if (key == "subdivisions") r.subdivisions = get_int(v, kp);
        else if (key == "segments") r.segments = get_int(v, kp);
        else if (key == "plane_i") r.plane_i = get_int(v, kp);
        else if (key == "plane_j") r.plane_j = get_int(v, kp);
        else if (key == "runs") r.runs = get_int(v, kp);
        else if (key == "tol") r.tol = get_number(v, kp);
        else if (key == "alpha") r.alpha = get_number(v, kp);
        else if (key == "delta") r.delta = get_number(v, kp);
        else if (key == "num_seeds") r.num_seeds = get_int(v, kp);
        else if (key == "target") r.target = get_string(v, kp);
    }
    validate_request(r, n, path);
    return r;
}

json request_json(const AnalysisRequest& r) {
    json j;
    j["kind"] = analysis_kind_name(r.kind);
    for (const std::string& key : kind_keys(r.kind)) {
        if (key == "x0") j["x0"] = vec_json(r.x0);
        else if (key == "s0") j["s0"] = vec_json(r.s0);
        else if (key == "T") j["T"] = r.T;
        else if (key == "dt") j["dt"] = r.dt;
        else if (key == "i0_exponent") j["i0_exponent"] = r.i0_exponent;
        else if (key == "cells_per_axis") j["cells_per_axis"] = r.cells_per_axis;
        else if (key == "half_width") j["half_width"] = r.half_width;
        else if (key == "tau") j["tau"] = r.tau;
        else if (key == "mode") j["mode"] = r.mode;
        else if (key == "domain") j["domain"] = r.domain;
        else if (key == "subdivisions") j["subdivisions"] = r.subdivisions;
        else if (key == "segments") j["segments"] = r.segments;
        else if (key == "plane_i") j["plane_i"] = r.plane_i;
        else if (key == "plane_j") j["plane_j"] = r.plane_j;
        else if (key == "runs") j["runs"] = r.runs;
        else if (key == "tol") j["tol"] = r.tol;
        else if (key == "alpha") j["alpha"] = r.alpha;
        else if (key == "delta") j["delta"] = r.delta;
        else if (key == "num_seeds") j["num_seeds"] = r.num_seeds;
        else if (key == "target") j["target"] = r.target;
    }
    return j;
}

ControlSignal parse_control(const json& j, const Mat& U, std::string& kind_out,
                            const std::string& path) {
    const int m = static_cast<int>(U.rows());
    auto check_value = [&](const Vec& v, const std::string& vp) {
        if (static_cast<int>(v.size()) != m) {
            fail(vp, "expected " + std::to_string(m) + " entries, got " +
                         std::to_string(v.size()));
        }
        for (int i = 0; i < m; ++i) {
            if (v[i] < U(i, 0) - 1e-12 || v[i] > U(i, 1) + 1e-12) {
                fail(vp + "[" + std::to_string(i) + "]",
                     "outside the control range [" + format_num(U(i, 0)) + ", " +
                         format_num(U(i, 1)) + "]");
            }
        }
    };
    kind_out = get_string(require_key(j, "kind", path), path + ".kind");
    if (kind_out == "constant") {
        Vec v = parse_vec(require_key(j, "value", path), path + ".value");
        check_value(v, path + ".value");
        return ControlSignal::constant(v);
    }
    if (kind_out != "piecewise" && kind_out != "periodic") {
        fail(path + ".kind", "expected \"constant\", \"piecewise\", or \"periodic\"");
    }
    const json& jb = require_key(j, "breakpoints", path);
    const json& jv = require_key(j, "values", path);
    if (!jb.is_array() || jb.empty()) fail(path + ".breakpoints", "expected a non-empty array");
    if (!jv.is_array() || jv.size() != jb.size()) {
        fail(path + ".values", "expected " + std::to_string(jb.size()) + " entries, got " +
                                   std::to_string(jv.size()));
    }
    std::vector<double> bp;
    std::vector<Vec> vals;
    for (std::size_t k = 0; k < jb.size(); ++k) {
        bp.push_back(get_number(jb[k], path + ".breakpoints[" + std::to_string(k) + "]"));
        if (k > 0 && !(bp[k] > bp[k - 1])) {
            fail(path + ".breakpoints", "must be strictly increasing");
        }
        Vec v = parse_vec(jv[k], path + ".values[" + std::to_string(k) + "]");
        check_value(v, path + ".values[" + std::to_string(k) + "]");
        vals.push_back(std::move(v));
    }
    std::optional<double> period;
    if (kind_out == "periodic") {
        period = get_number(require_key(j, "period", path), path + ".period");
        if (!(*period > 0.0)) fail(path + ".period", "must be positive");
        if (!(bp.back() - bp.front() < *period + 1e-12)) {
            fail(path + ".period", "must cover the breakpoint span");
        }
    }
    return ControlSignal(std::move(bp), std::move(vals), period);
}

json control_json(const Scenario& sc) {
    json j;
    j["kind"] = sc.control_kind;
    if (sc.control_kind == "constant") {
        j["value"] = vec_json(sc.control.values().empty()
                                  ? Vec::Zero(sc.B.cols()).eval()
                                  : sc.control.values()[0]);
        return j;
    }
    json jb = json::array();
    for (double t : sc.control.breakpoints()) jb.push_back(t);
    json jv = json::array();
    for (const Vec& v : sc.control.values()) jv.push_back(vec_json(v));
    j["breakpoints"] = jb;
    j["values"] = jv;
    if (sc.control_kind == "periodic") j["period"] = *sc.control.period();
    return j;
}

// ---------------------------------------------------------------------------
// Execution helpers
// ---------------------------------------------------------------------------

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw PreconditionError("cannot open for writing: " + path);
    out << content;
    if (!out) throw PreconditionError("write failed: " + path);
}

/// Index of the reference positive exponent: `value` if nonzero (matched to
/// the exponent list), otherwise the smallest positive exponent.
int resolve_i0(const SpectralData& sd, double value) {
    if (value != 0.0) {
        const int i = sd.index_of_exponent(value);
        if (!(sd.exponents[static_cast<std::size_t>(i)] > sd.group_tol)) {
            throw PreconditionError("i0_exponent: " + format_num(value) +
                                    " does not match a positive Lyapunov exponent");
        }
        return i;
    }
    for (int i = sd.space_count() - 1; i >= 0; --i) {
        if (sd.exponents[static_cast<std::size_t>(i)] > sd.group_tol) return i;
    }
    throw PreconditionError("system has no positive Lyapunov exponent");
}

/// Base point on the sphere at infinity of spaces[i0]: the request's s0
/// (normalized), or the first stored basis direction when s0 is empty.
SpherePoint resolve_base_point(const AnalysisRequest& req, const SpectralData& sd,
                               int i0, const Mat& Gp) {
    if (req.s0.size() != 0) return project_to_sphere(req.s0, Gp);
    const int n = sd.n();
    Vec y = Vec::Zero(n + 1);
    y.head(n) = sd.spaces[static_cast<std::size_t>(i0)].col(0);
    return project_to_sphere(y, Gp);
}

std::string metrics_detail(const std::vector<std::pair<std::string, double>>& ms) {
    std::string out;
    for (const auto& [k, v] : ms) {
        if (!out.empty()) out += ", ";
        out += k + "=" + format_num(v);
    }
    return out;
}

struct RunContext {
    const Scenario* sc;
    const LinearSystem* sys;
    const SpectralData* sd;
    Mat Gp;
    std::uint64_t seed;
    std::string out_dir;
};

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c",
                          "#9467bd", "#ff7f0e", "#8c564b"};

AnalysisResult run_decompose(const RunContext& ctx, const AnalysisRequest&,
                             const std::string& csv_path) {
    const SpectralData& sd = *ctx.sd;
    AnalysisResult res;
    std::string csv = "space,exponent,dimension,is_center\n";
    int total = 0;
    for (int i = 0; i < sd.space_count(); ++i) {
        total += sd.dim(i);
        csv += std::to_string(i) + "," + format_num(sd.exponents[static_cast<std::size_t>(i)]) +
               "," + std::to_string(sd.dim(i)) + "," +
               (i == sd.center_index ? "1" : "0") + "\n";
    }
    write_file(csv_path, csv);
    Eigen::LLT<Mat> llt(sd.gram);
    const bool spd = llt.info() == Eigen::Success;
    res.passed = (total == sd.n()) && spd;
    res.metrics = {{"spaces", static_cast<double>(sd.space_count())},
                   {"dimension_sum", static_cast<double>(total)}};
    res.detail = res.passed ? "dimensions sum to n; adapted metric is SPD"
                            : "spectral decomposition inconsistent";
    return res;
}

AnalysisResult run_simulate(const RunContext& ctx, const AnalysisRequest& req,
                            const std::string& csv_path) {
    const LinearSystem& sys = *ctx.sys;
    const ControlSignal& u = ctx.sc->control;
    AnalysisResult res;
    const int n = sys.n();
    const long K = std::lround(req.T / req.dt);
    std::string csv = "t";
    for (int i = 0; i < n; ++i) csv += ",x" + std::to_string(i + 1);
    csv += "\n";
    Vec x = req.x0;
    double t = 0.0;
    auto emit = [&](double tt, const Vec& xx) {
        csv += format_num(tt);
        for (int i = 0; i < n; ++i) csv += "," + format_num(xx[i]);
        csv += "\n";
    };
    emit(0.0, x);
    for (long k = 1; k <= K; ++k) {
        x = flow(sys, req.dt, x, shift(u, t));
        t = static_cast<double>(k) * req.dt;
        emit(t, x);
    }
    write_file(csv_path, csv);
    // Stepwise integration must agree with the one-shot exact flow.
    const Vec direct = flow(sys, t, req.x0, u);
    const double err = (x - direct).norm() / (1.0 + direct.norm());
    res.passed = err <= 1e-8;
    res.metrics = {{"final_norm", x.norm()}, {"step_vs_direct", err}};
    res.detail = metrics_detail(res.metrics);
    return res;
}

AnalysisResult run_sphere_sim(const RunContext& ctx, const AnalysisRequest& req,
                              const std::string& csv_path) {
    const LinearSystem& sys = *ctx.sys;
    const SpectralData& sd = *ctx.sd;
    const ControlSignal& u = ctx.sc->control;
    AnalysisResult res;
    const SpherePoint s0 = project_to_sphere(req.s0, ctx.Gp);
    const auto samples = sphere_trajectory(sys, sd, s0, u, req.T, req.dt);
    const int d = static_cast<int>(s0.y.size());
    std::string csv = "t";
    for (int i = 0; i < d; ++i) csv += ",y" + std::to_string(i + 1);
    csv += "\n";
    double norm_defect = 0.0;
    double r_defect = 0.0;
    for (const auto& smp : samples) {
        csv += format_num(smp.t);
        for (int i = 0; i < d; ++i) csv += "," + format_num(smp.s.y[i]);
        csv += "\n";
        norm_defect = std::max(norm_defect, std::abs(norm_g(smp.s.y, ctx.Gp) - 1.0));
        if (s0.hemisphere == 0) r_defect = std::max(r_defect, std::abs(smp.s.r()));
    }
    write_file(csv_path, csv);
    res.metrics = {{"samples", static_cast<double>(samples.size())},
                   {"max_norm_defect", norm_defect}};
    if (s0.hemisphere == 0) res.metrics.emplace_back("max_r_defect", r_defect);

    // First-return detection for recurrent starts: the innermost local
    // minimum of the distance to s0, refined by a two-sided linear fit
    // (the distance is V-shaped in time near a transversal return).
    double return_time = -1.0, return_dist = -1.0;
    for (std::size_t k = 2; k + 1 < samples.size(); ++k) {
        const auto dist = [&](std::size_t i) {
            return sphere_distance(samples[i].s, s0, ctx.Gp);
        };
        const double d0 = dist(k);
        if (d0 < 0.2 && d0 <= dist(k - 1) && d0 <= dist(k + 1) &&
            samples[k].t > 4.0 * req.dt) {
            const double dm = dist(k - 1), dp = dist(k + 1);
            double t_hat = samples[k].t;
            if (dm + dp > 1e-15) t_hat += req.dt * (dm - dp) / (dm + dp);
            const SpherePoint sr = sphere_flow(sys, sd, t_hat, s0, u);
            return_time = t_hat;
            return_dist = sphere_distance(sr, s0, ctx.Gp);
            break;
        }
    }
    if (return_time > 0.0) {
        res.metrics.emplace_back("return_time", return_time);
        res.metrics.emplace_back("return_distance", return_dist);
    }
    res.passed = norm_defect <= 1e-9 && (s0.hemisphere != 0 || r_defect <= 1e-9);
    res.detail = metrics_detail(res.metrics);
    return res;
}

AnalysisResult run_selgrade(const RunContext& ctx, const AnalysisRequest& req,
                            const std::string& csv_path) {
    const SpectralData& sd = *ctx.sd;
    AnalysisResult res;
    const int i0 = resolve_i0(sd, req.i0_exponent);
    const SpherePoint s = resolve_base_point(req, sd, i0, ctx.Gp);
    const auto frames = selgrade_frames(*ctx.sys, sd, i0, s, ctx.sc->control);
    std::string csv = "label,dimension,exponent\n";
    int total = 0;
    double tangency = 0.0;
    for (const auto& f : frames) {
        total += static_cast<int>(f.basis.cols());
        csv += f.label + "," + std::to_string(f.basis.cols()) + "," +
               format_num(f.theoretical_exponent) + "\n";
        for (int c = 0; c < f.basis.cols(); ++c) {
            tangency = std::max(tangency, std::abs(dot_g(f.basis.col(c), s.y, ctx.Gp)));
        }
    }
    write_file(csv_path, csv);
    res.passed = (total == sd.n()) && tangency <= 1e-8;
    res.metrics = {{"frames", static_cast<double>(frames.size())},
                   {"dimension_sum", static_cast<double>(total)},
                   {"max_tangency_defect", tangency}};
    res.detail = metrics_detail(res.metrics);
    return res;
}

AnalysisResult run_exponents(const RunContext& ctx, const AnalysisRequest& req,
                             const std::string& csv_path) {
    const LinearSystem& sys = *ctx.sys;
    const SpectralData& sd = *ctx.sd;
    const ControlSignal& u = ctx.sc->control;
    AnalysisResult res;
    const int i0 = resolve_i0(sd, req.i0_exponent);
    const SpherePoint s = resolve_base_point(req, sd, i0, ctx.Gp);
    const auto frames = selgrade_frames(sys, sd, i0, s, u);
    std::string base;
    for (int i = 0; i < s.y.size(); ++i) {
        if (i) base += ";";
        base += format_num(s.y[i]);
    }
    std::string csv =
        "base_point,subbundle_label,theoretical,estimated_forward,"
        "estimated_backward,abs_error\n";
    double worst = 0.0;
    for (const auto& f : frames) {
        const double ef = frame_exponent_estimate(sys, sd, s, u, f, req.T);
        const double eb = frame_exponent_estimate(sys, sd, s, u, f, -req.T);
        const double err = std::max(std::abs(ef - f.theoretical_exponent),
                                    std::abs(eb - f.theoretical_exponent));
        worst = std::max(worst, err);
        csv += base + "," + f.label + "," + format_num(f.theoretical_exponent) +
               "," + format_num(ef) + "," + format_num(eb) + "," +
               format_num(err) + "\n";
        res.metrics.emplace_back(f.label + "_abs_error", err);
    }
    write_file(csv_path, csv);
    res.passed = worst <= 0.05;
    res.metrics.emplace_back("max_abs_error", worst);
    res.detail = metrics_detail(res.metrics);
    return res;
}

AnalysisResult run_reach(const RunContext& ctx, const AnalysisRequest& req,
                         const std::string& csv_path) {
    const LinearSystem& sys = *ctx.sys;
    AnalysisResult res;
    const BoxGrid grid = BoxGrid::cube(req.half_width, sys.n(), req.cells_per_axis);
    GraphParams params;
    params.tau = req.tau;
    params.mode = req.mode == "center" ? EdgeMode::kCenter : EdgeMode::kEnclosure;
    const ControlSetResult cs = control_set_D0(sys, grid, params);
    std::string csv = cells_csv_header(grid);
    append_cells_csv(csv, grid, cs.reach.cells, "reachable", &cs.reach.escaping);
    append_cells_csv(csv, grid, cs.control.cells, "controllable", &cs.control.escaping);
    append_cells_csv(csv, grid, cs.cells, "control_set");
    write_file(csv_path, csv);
    const auto origin = grid.locate(Vec::Zero(sys.n()));
    res.passed = origin.has_value() && cs.cells.test(*origin) &&
                 cs.reach.saturated && cs.control.saturated;
    res.metrics = {{"reachable_cells", static_cast<double>(cs.reach.cells.count())},
                   {"controllable_cells", static_cast<double>(cs.control.cells.count())},
                   {"control_set_cells", static_cast<double>(cs.cells.count())},
                   {"escaping_cells", static_cast<double>(cs.reach.escaping.count())}};
    res.detail = metrics_detail(res.metrics);
    return res;
}

AnalysisResult run_chain_grid(const RunContext& ctx, const AnalysisRequest& req,
                              const std::string& csv_path) {
    const LinearSystem& sys = *ctx.sys;
    AnalysisResult res;
    const BoxGrid grid = BoxGrid::cube(req.half_width, sys.n(), req.cells_per_axis);
    GraphParams params;
    params.tau = req.tau;
    params.mode = req.mode == "center" ? EdgeMode::kCenter : EdgeMode::kEnclosure;
    const CellGraph graph(sys, grid, params);
    const auto comps = chain_components(graph);
    std::string csv = cells_csv_header(grid);
    bool closed = true;
    for (std::size_t k = 0; k < comps.size(); ++k) {
        append_cells_csv(csv, grid, comps[k], "component_" + std::to_string(k + 1));
        // Every member must step back into its component (internal recurrence).
        long checked = 0;
        for (long c = comps[k].next(0); c >= 0 && checked < 200;
             c = comps[k].next(c + 1), ++checked) {
            if (!graph.successors_intersect(c, comps[k])) {
                closed = false;
                break;
            }
        }
    }
    write_file(csv_path, csv);
    res.passed = !comps.empty() && closed;
    res.metrics = {{"components", static_cast<double>(comps.size())}};
    if (!comps.empty()) {
        res.metrics.emplace_back("largest_cells", static_cast<double>(comps[0].count()));
    }
    res.detail = metrics_detail(res.metrics);
    return res;
}

std::string mesh_csv(const SphereMesh& mesh, const std::vector<SphereChainSet>& sets) {
    const int d = static_cast<int>(mesh.center(0).size());
    std::string csv = "index";
    for (int i = 0; i < d; ++i) csv += ",y" + std::to_string(i + 1);
    csv += ",kind,flags\n";
    for (std::size_t k = 0; k < sets.size(); ++k) {
        for (int c : sets[k].cells) {
            const Vec& y = mesh.center(c);
            csv += std::to_string(c);
            for (int i = 0; i < d; ++i) csv += "," + format_num(y[i]);
            csv += ",component_" + std::to_string(k + 1) + ",";
            csv += sets[k].equator ? "equator" : "central";
            if (sets[k].antipodal_partner >= 0) {
                csv += ";partner=" + std::to_string(sets[k].antipodal_partner + 1);
            }
            csv += "\n";
        }
    }
    return csv;
}

bool partners_consistent(const std::vector<SphereChainSet>& sets) {
    for (std::size_t k = 0; k < sets.size(); ++k) {
        const int p = sets[k].antipodal_partner;
        if (p < 0) continue;
        if (p >= static_cast<int>(sets.size())) return false;
        const int back = sets[static_cast<std::size_t>(p)].antipodal_partner;
        if (back != static_cast<int>(k)) return false;
    }
    return true;
}

AnalysisResult run_chain_sphere(const RunContext& ctx, const AnalysisRequest& req,
                                const std::string& csv_path) {
    AnalysisResult res;
    const SphereMesh mesh = SphereMesh::icosphere(req.subdivisions, ctx.Gp);
    SphereGraphParams params;
    params.tau = req.tau;
    const auto sets = sphere_chain_sets(*ctx.sys, *ctx.sd, mesh, params);
    write_file(csv_path, mesh_csv(mesh, sets));
    int equator = 0;
    for (const auto& s : sets) equator += s.equator ? 1 : 0;
    res.passed = !sets.empty() && partners_consistent(sets);
    res.metrics = {{"sets", static_cast<double>(sets.size())},
                   {"equator_sets", static_cast<double>(equator)},
                   {"mesh_cells", static_cast<double>(mesh.cell_count())},
                   {"mesh_diameter", mesh.diameter()}};
    res.detail = metrics_detail(res.metrics);
    return res;
}

AnalysisResult run_chain_circle(const RunContext& ctx, const AnalysisRequest& req,
                                const std::string& csv_path) {
    const LinearSystem& sys = *ctx.sys;
    const SpectralData& sd = *ctx.sd;
    AnalysisResult res;
    const int n = sys.n();
    // Great circle spanned by two state axes on the sphere at infinity; the
    // spanned plane must be invariant under A for the circle to be invariant.
    Mat plane(n, 2);
    plane.setZero();
    plane(req.plane_i, 0) = 1.0;
    plane(req.plane_j, 1) = 1.0;
    const Mat AP = sd.A * plane;
    const Mat gramP = plane.transpose() * sd.gram * plane;
    const Mat coeff = gramP.ldlt().solve(plane.transpose() * sd.gram * AP);
    const double defect = (AP - plane * coeff).norm();
    if (defect > 1e-9 * (1.0 + sd.A.norm())) {
        throw PreconditionError(
            "chain circle: the selected state plane is not invariant under the drift");
    }
    Mat basis(n + 1, 2);
    basis.setZero();
    basis(req.plane_i, 0) = 1.0;
    basis(req.plane_j, 1) = 1.0;
    // G'-orthonormalize (Gram-Schmidt) so the mesh parametrization is isometric.
    basis.col(0) /= norm_g(basis.col(0), ctx.Gp);
    basis.col(1) -= dot_g(basis.col(1), basis.col(0), ctx.Gp) * basis.col(0);
    basis.col(1) /= norm_g(basis.col(1), ctx.Gp);
    const SphereMesh mesh = SphereMesh::circle(basis, req.segments, ctx.Gp);
    SphereGraphParams params;
    params.tau = req.tau;
    const auto sets = sphere_chain_sets(sys, sd, mesh, params);
    write_file(csv_path, mesh_csv(mesh, sets));
    res.passed = !sets.empty() && partners_consistent(sets);
    res.metrics = {{"sets", static_cast<double>(sets.size())},
                   {"mesh_cells", static_cast<double>(mesh.cell_count())}};
    if (!sets.empty()) {
        res.metrics.emplace_back("largest_cells",
                                 static_cast<double>(sets[0].cells.size()));
    }
    res.detail = metrics_detail(res.metrics);
    return res;
}

AnalysisResult run_limits(const RunContext& ctx, const AnalysisRequest& req,
                          const std::string& csv_path) {
    const LinearSystem& sys = *ctx.sys;
    const SpectralData& sd = *ctx.sd;
    AnalysisResult res;
    const int n = sys.n();
    Rng rng(ctx.seed);
    const auto equator = equator_candidates(sys, sd);
    std::string csv = "run,control";
    for (int i = 0; i <= n; ++i) csv += ",s" + std::to_string(i + 1);
    csv += ",best,best_distance,tail_diameter,inconclusive\n";
    int bad = 0;
    for (int k = 0; k < req.runs; ++k) {
        const SpherePoint s0 = project_to_sphere(rng.unit_vector(n + 1), ctx.Gp);
        ControlSignal u;
        std::string label;
        const int variant = k % 3;
        if (variant == 0) {
            u = ControlSignal::constant(Vec::Zero(sys.m()));
            label = "zero";
        } else if (variant == 1) {
            Vec v(sys.m());
            for (int i = 0; i < sys.m(); ++i) {
                v[i] = rng.uniform(sys.range.bounds()(i, 0), sys.range.bounds()(i, 1));
            }
            u = ControlSignal::constant(v);
            label = "constant";
        } else {
            Vec v1(sys.m()), v2(sys.m());
            for (int i = 0; i < sys.m(); ++i) {
                v1[i] = rng.uniform(sys.range.bounds()(i, 0), sys.range.bounds()(i, 1));
                v2[i] = rng.uniform(sys.range.bounds()(i, 0), sys.range.bounds()(i, 1));
            }
            const double period = rng.uniform(1.0, 5.0);
            u = ControlSignal({0.0, period / 2.0}, {v1, v2}, period);
            label = "periodic";
        }
        auto candidates = equator;
        candidates.push_back(central_candidate(sys, sd, u));
        const LimitClassification cls =
            limit_set(sys, sd, s0, u, req.T / 5.0, req.T, candidates, req.tol);
        bad += cls.inconclusive ? 1 : 0;
        csv += std::to_string(k) + "," + label;
        for (int i = 0; i <= n; ++i) csv += "," + format_num(s0.y[i]);
        csv += "," + (cls.best >= 0 ? candidates[static_cast<std::size_t>(cls.best)].name
                                    : std::string("-")) +
               "," + format_num(cls.best_distance) + "," +
               format_num(cls.tail_diameter) + "," +
               (cls.inconclusive ? "1" : "0") + "\n";
    }
    write_file(csv_path, csv);
    const double frac = static_cast<double>(bad) / req.runs;
    res.passed = frac < 0.1;
    res.metrics = {{"runs", static_cast<double>(req.runs)},
                   {"inconclusive_fraction", frac}};
    res.detail = metrics_detail(res.metrics);
    return res;
}

AnalysisResult run_verify_stable(const RunContext& ctx, const AnalysisRequest& req,
                                 const std::string& csv_path) {
    const LinearSystem& sys = *ctx.sys;
    const SpectralData& sd = *ctx.sd;
    const ControlSignal& u = ctx.sc->control;
    AnalysisResult res;
    const int i0 = resolve_i0(sd, req.i0_exponent);
    const SpherePoint s0 = resolve_base_point(req, sd, i0, ctx.Gp);
    const auto frames = selgrade_frames(sys, sd, i0, s0, u);
    int cols = 0;
    for (const auto& f : frames) {
        if (f.theoretical_exponent < -1e-12) cols += static_cast<int>(f.basis.cols());
    }
    if (cols == 0) {
        throw PreconditionError("verify-stable: the subbundle decomposition has no stable part");
    }
    Mat basis(sd.n() + 1, cols);
    int at = 0;
    for (const auto& f : frames) {
        if (f.theoretical_exponent < -1e-12) {
            basis.middleCols(at, f.basis.cols()) = f.basis;
            at += static_cast<int>(f.basis.cols());
        }
    }
    const double rate = stable_bundle_rate(sd, i0);
    if (!(req.alpha > rate)) {
        throw PreconditionError("verify-stable: alpha must exceed the stable rate " +
                                format_num(rate));
    }
    const ConvergenceReport rep = stable_convergence_check(
        sys, sd, i0, s0, u, basis, req.delta, req.alpha, req.T, req.num_seeds,
        ctx.seed);
    std::string csv = "case,final_weighted,decreasing,max_chart_norm\n";
    for (std::size_t k = 0; k < rep.cases.size(); ++k) {
        const auto& c = rep.cases[k];
        csv += std::to_string(k) + "," + format_num(c.final_weighted) + "," +
               (c.decreasing_after_burn_in ? "1" : "0") + "," +
               format_num(c.max_chart_norm) + "\n";
    }
    write_file(csv_path, csv);
    res.passed = rep.converged && rep.escaped && !rep.inconclusive;
    res.metrics = {{"cases", static_cast<double>(rep.cases.size())},
                   {"stable_rate", rate},
                   {"converged", rep.converged ? 1.0 : 0.0},
                   {"escaped", rep.escaped ? 1.0 : 0.0}};
    res.detail = metrics_detail(res.metrics);
    return res;
}

AnalysisResult run_portrait(const RunContext& ctx, const AnalysisRequest& req,
                            const std::string& svg_path) {
    const LinearSystem& sys = *ctx.sys;
    const SpectralData& sd = *ctx.sd;
    const ControlSignal& u = ctx.sc->control;
    AnalysisResult res;
    const int n = sys.n();
    Rng rng(ctx.seed);
    Portrait p;
    ProjectionSpec spec;
    if (req.target == "sphere") {
        p.title = ctx.sc->name + ": sphere portrait";
        p.reference_circle = true;
        spec = ProjectionSpec{0, 1, 1.1};
        if (n == 2) {
            // Shade the chain-recurrent mesh cells (coarse mesh keeps the
            // file small); one palette color per component.
            const SphereMesh mesh = SphereMesh::icosphere(req.subdivisions, ctx.Gp);
            SphereGraphParams params;
            const auto sets = sphere_chain_sets(sys, sd, mesh, params);
            const double rho = 0.75 * mesh.diameter();
            for (std::size_t k = 0; k < sets.size(); ++k) {
                for (int c : sets[k].cells) {
                    const Vec& y = mesh.center(c);
                    Vec t1(3), t2(3);
                    t1 << -y[1], y[0], 0.0;
                    if (t1.norm() < 1e-9) t1 << 1.0, 0.0, 0.0;
                    t1.normalize();
                    t2[0] = y[1] * t1[2] - y[2] * t1[1];
                    t2[1] = y[2] * t1[0] - y[0] * t1[2];
                    t2[2] = y[0] * t1[1] - y[1] * t1[0];
                    t2.normalize();
                    PortraitPatch patch;
                    patch.color = kPalette[k % 6];
                    patch.opacity = y[2] >= 0.0 ? 0.4 : 0.15;
                    for (int a = 0; a < 6; ++a) {
                        const double th = a * (3.14159265358979323846 / 3.0);
                        patch.corners.push_back(y + rho * (std::cos(th) * t1 +
                                                           std::sin(th) * t2));
                    }
                    p.patches.push_back(std::move(patch));
                }
            }
        }
        for (const auto& eq : equilibria_at_infinity(sys, sd)) {
            PortraitMarker m;
            m.point = eq.s.y;
            m.color = eq.eigenvalue > 0 ? "#d62728" : "#1f77b4";
            p.markers.push_back(std::move(m));
        }
        for (int k = 0; k < 12; ++k) {
            const SpherePoint s0 = project_to_sphere(rng.unit_vector(n + 1), ctx.Gp);
            const auto traj = sphere_trajectory(sys, sd, s0, u, 12.0, 0.05);
            PortraitPolyline line;
            line.color = "#7f7f7f";
            line.width = 1.0;
            for (const auto& smp : traj) line.points.push_back(smp.s.y);
            p.lines.push_back(std::move(line));
        }
    } else {
        p.title = ctx.sc->name + ": state portrait";
        spec = ProjectionSpec{0, 1, 1.1 * req.half_width};
        if (n == 2) {
            const BoxGrid grid = BoxGrid::cube(req.half_width, n, 41);
            GraphParams params;
            const ControlSetResult cs = control_set_D0(sys, grid, params);
            for (long c = cs.cells.next(0); c >= 0; c = cs.cells.next(c + 1)) {
                const auto mi = grid.multi_index(c);
                PortraitPatch patch;
                patch.color = "#2ca02c";
                patch.opacity = 0.35;
                const double x0 = grid.lo[0] + mi[0] * grid.width(0);
                const double y0 = grid.lo[1] + mi[1] * grid.width(1);
                Vec c1(2), c2(2), c3(2), c4(2);
                c1 << x0, y0;
                c2 << x0 + grid.width(0), y0;
                c3 << x0 + grid.width(0), y0 + grid.width(1);
                c4 << x0, y0 + grid.width(1);
                patch.corners = {c1, c2, c3, c4};
                p.patches.push_back(std::move(patch));
            }
        }
        PortraitMarker origin;
        origin.point = Vec::Zero(n);
        origin.color = "#000000";
        origin.radius = 4.0;
        p.markers.push_back(std::move(origin));
        for (int k = 0; k < 10; ++k) {
            Vec x0(n);
            for (int i = 0; i < n; ++i) {
                x0[i] = rng.uniform(-req.half_width, req.half_width);
            }
            PortraitPolyline line;
            line.color = "#7f7f7f";
            line.width = 1.0;
            const int K = 120;
            Vec x = x0;
            line.points.push_back(x);
            for (int kk = 1; kk <= K; ++kk) {
                x = flow(sys, 0.05, x, shift(u, (kk - 1) * 0.05));
                line.points.push_back(x);
                if (x.norm() > 4.0 * req.half_width) break;
            }
            p.lines.push_back(std::move(line));
        }
    }
    const std::string svg = render_portrait(p, &spec);
    const std::string again = render_portrait(p, &spec);
    write_file(svg_path, svg);
    res.passed = !svg.empty() && svg == again;
    res.metrics = {{"lines", static_cast<double>(p.lines.size())},
                   {"markers", static_cast<double>(p.markers.size())},
                   {"patches", static_cast<double>(p.patches.size())},
                   {"bytes", static_cast<double>(svg.size())}};
    res.detail = metrics_detail(res.metrics);
    return res;
}

} // namespace

std::string analysis_kind_name(AnalysisKind kind) {
    for (const auto& info : kKinds) {
        if (info.kind == kind) return info.name;
    }
    throw PreconditionError("unknown analysis kind");
}

AnalysisKind analysis_kind_from_name(const std::string& name) {
    for (const auto& info : kKinds) {
        if (name == info.name) return info.kind;
    }
    throw PreconditionError("analyses.kind: unknown analysis \"" + name + "\"");
}

LinearSystem Scenario::system() const {
    return LinearSystem(A, B, ControlRange::box(Ubounds));
}

Scenario parse_scenario(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const std::exception& e) {
        throw PreconditionError(std::string("scenario: invalid JSON: ") + e.what());
    }
    if (!j.is_object()) fail("scenario", "expected a JSON object");
    Scenario sc;
    sc.name = get_string(require_key(j, "name", "scenario"), "name");
    if (sc.name.empty()) fail("name", "must be non-empty");
    if (j.contains("seed")) {
        const json& js = j["seed"];
        if (!js.is_number_unsigned()) fail("seed", "expected an unsigned integer");
        sc.seed = js.get<std::uint64_t>();
    }
    const json& jsys = require_key(j, "system", "scenario");
    sc.A = parse_mat(require_key(jsys, "A", "system"), "system.A");
    if (sc.A.rows() != sc.A.cols()) fail("system.A", "must be square");
    const int n = static_cast<int>(sc.A.rows());
    sc.B = parse_mat(require_key(jsys, "B", "system"), "system.B", n);
    const int m = static_cast<int>(sc.B.cols());
    sc.Ubounds = parse_mat(require_key(jsys, "U", "system"), "system.U", m, 2);
    for (int i = 0; i < m; ++i) {
        if (!(sc.Ubounds(i, 0) < 0.0 && 0.0 < sc.Ubounds(i, 1))) {
            fail("system.U[" + std::to_string(i) + "]",
                 "must satisfy lo < 0 < hi");
        }
    }
    if (j.contains("control")) {
        sc.control = parse_control(j["control"], sc.Ubounds, sc.control_kind, "control");
    } else {
        sc.control_kind = "constant";
        sc.control = ControlSignal::constant(Vec::Zero(m));
    }
    const json& ja = require_key(j, "analyses", "scenario");
    if (!ja.is_array()) fail("analyses", "expected an array");
    for (std::size_t k = 0; k < ja.size(); ++k) {
        sc.analyses.push_back(
            parse_request(ja[k], n, "analyses[" + std::to_string(k) + "]"));
    }
    sc.out_dir = j.contains("out_dir")
                     ? get_string(j["out_dir"], "out_dir")
                     : "out/" + sc.name;
    if (sc.out_dir.empty()) fail("out_dir", "must be non-empty");
    return sc;
}

std::string serialize_scenario(const Scenario& sc) {
    json j;
    j["name"] = sc.name;
    j["seed"] = sc.seed;
    j["system"]["A"] = mat_json(sc.A);
    j["system"]["B"] = mat_json(sc.B);
    j["system"]["U"] = mat_json(sc.Ubounds);
    j["control"] = control_json(sc);
    json ja = json::array();
    for (const auto& r : sc.analyses) ja.push_back(request_json(r));
    j["analyses"] = ja;
    j["out_dir"] = sc.out_dir;
    return j.dump(2) + "\n";
}

const std::vector<std::string>& preset_names() {
    static const std::vector<std::string> names = {
        "example1", "example2", "example3", "example4", "example5"};
    return names;
}

namespace {

AnalysisRequest make_request(AnalysisKind kind, int n,
                             const std::function<void(AnalysisRequest&)>& mod = {}) {
    AnalysisRequest r;
    r.kind = kind;
    apply_kind_defaults(r, n);
    if (mod) mod(r);
    validate_request(r, n, "preset");
    return r;
}

Vec unit_axis(int dim, int axis) {
    Vec v = Vec::Zero(dim);
    v[axis] = 1.0;
    return v;
}

} // namespace

Scenario scenario_preset(const std::string& name) {
    Scenario sc;
    sc.name = name;
    auto ones_B = [](int n) { return Mat::Ones(n, 1).eval(); };
    const Mat U1 = (Mat(1, 2) << -1.0, 1.0).finished();
    if (name == "example1") {
        const int n = 2;
        sc.A = (Mat(2, 2) << 1, 0, 0, -1).finished();
        sc.B = ones_B(n);
        sc.Ubounds = U1;
        sc.analyses = {
            make_request(AnalysisKind::kDecompose, n),
            make_request(AnalysisKind::kSimulate, n,
                         [](AnalysisRequest& r) {
                             r.x0 = (Vec(2) << 0.5, -0.5).finished();
                             r.T = 6.0;
                         }),
            make_request(AnalysisKind::kSphereSim, n,
                         [](AnalysisRequest& r) {
                             r.s0 = (Vec(3) << 0.3, 0.2, 0.93).finished();
                             r.T = 12.0;
                         }),
            make_request(AnalysisKind::kReach, n),
            make_request(AnalysisKind::kChain, n),
            make_request(AnalysisKind::kChain, n,
                         [](AnalysisRequest& r) { r.domain = "sphere"; }),
            make_request(AnalysisKind::kLimits, n),
            make_request(AnalysisKind::kPortrait, n),
        };
    } else if (name == "example2") {
        const int n = 3;
        sc.A = (Mat(3, 3) << 2, 0, 0, 0, 1, 0, 0, 0, -1).finished();
        sc.B = ones_B(n);
        sc.Ubounds = U1;
        const Vec s0 = unit_axis(4, 1);
        sc.analyses = {
            make_request(AnalysisKind::kDecompose, n),
            make_request(AnalysisKind::kSelgrade, n,
                         [&](AnalysisRequest& r) { r.s0 = s0; }),
            make_request(AnalysisKind::kExponents, n,
                         [&](AnalysisRequest& r) { r.s0 = s0; }),
            make_request(AnalysisKind::kVerifyStable, n,
                         [&](AnalysisRequest& r) { r.s0 = s0; }),
            make_request(AnalysisKind::kChain, n,
                         [](AnalysisRequest& r) { r.cells_per_axis = 21; }),
            make_request(AnalysisKind::kLimits, n),
        };
    } else if (name == "example3") {
        const int n = 3;
        sc.A = (Mat(3, 3) << 1, 1, 0, 0, 1, 0, 0, 0, -1).finished();
        sc.B = ones_B(n);
        sc.Ubounds = U1;
        const Vec s0 = unit_axis(4, 1);
        sc.analyses = {
            make_request(AnalysisKind::kDecompose, n),
            make_request(AnalysisKind::kSelgrade, n,
                         [&](AnalysisRequest& r) { r.s0 = s0; }),
            make_request(AnalysisKind::kExponents, n,
                         [&](AnalysisRequest& r) { r.s0 = s0; }),
            make_request(AnalysisKind::kLimits, n),
        };
    } else if (name == "example4") {
        const int n = 3;
        sc.A = (Mat(3, 3) << 1, 1, 0, -1, 1, 0, 0, 0, -1).finished();
        sc.B = ones_B(n);
        sc.Ubounds = U1;
        sc.analyses = {
            make_request(AnalysisKind::kDecompose, n),
            make_request(AnalysisKind::kSphereSim, n,
                         [](AnalysisRequest& r) {
                             r.s0 = unit_axis(4, 1);
                             r.T = 10.0;
                             r.dt = 0.005;
                         }),
            make_request(AnalysisKind::kChain, n,
                         [](AnalysisRequest& r) {
                             r.domain = "circle";
                             r.tau = 0.5;
                         }),
            make_request(AnalysisKind::kLimits, n),
        };
    } else if (name == "example5") {
        const int n = 4;
        sc.A = Mat::Zero(4, 4);
        sc.A(0, 0) = 2.0;
        sc.A(1, 1) = 1.0;
        sc.A(1, 2) = 1.0;
        sc.A(2, 1) = -1.0;
        sc.A(2, 2) = 1.0;
        sc.A(3, 3) = -1.0;
        sc.B = ones_B(n);
        sc.Ubounds = U1;
        const Vec s0 = unit_axis(5, 1);
        sc.analyses = {
            make_request(AnalysisKind::kDecompose, n),
            make_request(AnalysisKind::kSelgrade, n,
                         [&](AnalysisRequest& r) { r.s0 = s0; }),
            make_request(AnalysisKind::kExponents, n,
                         [&](AnalysisRequest& r) { r.s0 = s0; }),
            make_request(AnalysisKind::kLimits, n),
        };
    } else {
        throw PreconditionError("unknown preset \"" + name + "\"");
    }
    const int m = static_cast<int>(sc.B.cols());
    sc.control_kind = "constant";
    sc.control = ControlSignal::constant(Vec::Zero(m));
    sc.out_dir = "out/" + name;
    return sc;
}

RunReport run_scenario(const Scenario& sc) {
    RunReport report;
    report.name = sc.name;
    report.seed = sc.seed;
    if (const char* env = std::getenv("PFLOW_SEED")) {
        char* end = nullptr;
        const unsigned long long v = std::strtoull(env, &end, 10);
        if (end == env || *end != '\0') {
            throw PreconditionError("PFLOW_SEED: expected an unsigned integer");
        }
        report.seed = static_cast<std::uint64_t>(v);
    }

    std::filesystem::create_directories(sc.out_dir);
    write_file(sc.out_dir + "/scenario.json", serialize_scenario(sc));

    RunContext ctx;
    ctx.sc = &sc;
    const LinearSystem sys = sc.system();
    const SpectralData sd = spectral_decompose(sc.A);
    ctx.sys = &sys;
    ctx.sd = &sd;
    ctx.Gp = lift_gram(sd.gram);
    ctx.seed = report.seed;
    ctx.out_dir = sc.out_dir;

    // Dependency order: decompositions and flows before graph analyses,
    // drawing last.  Stable, so user order breaks rank ties.
    std::vector<std::size_t> order(sc.analyses.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return kind_rank(sc.analyses[a].kind) < kind_rank(sc.analyses[b].kind);
    });

    std::map<std::string, int> totals, seen;
    for (const auto& r : sc.analyses) totals[analysis_kind_name(r.kind)]++;

    for (std::size_t idx : order) {
        const AnalysisRequest& req = sc.analyses[idx];
        const std::string kind = analysis_kind_name(req.kind);
        std::string base = kind;
        std::replace(base.begin(), base.end(), '-', '_');
        const int ordinal = ++seen[kind];
        std::string suffix = totals[kind] > 1 ? "_" + std::to_string(ordinal) : "";
        const std::string out_path =
            req.kind == AnalysisKind::kPortrait
                ? ctx.out_dir + "/portrait_" + sc.name + suffix + ".svg"
                : ctx.out_dir + "/" + base + suffix + ".csv";
        AnalysisResult res;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            switch (req.kind) {
                case AnalysisKind::kDecompose:
                    res = run_decompose(ctx, req, out_path);
                    break;
                case AnalysisKind::kSimulate:
                    res = run_simulate(ctx, req, out_path);
                    break;
                case AnalysisKind::kSphereSim:
                    res = run_sphere_sim(ctx, req, out_path);
                    break;
                case AnalysisKind::kSelgrade:
                    res = run_selgrade(ctx, req, out_path);
                    break;
                case AnalysisKind::kExponents:
                    res = run_exponents(ctx, req, out_path);
                    break;
                case AnalysisKind::kReach:
                    res = run_reach(ctx, req, out_path);
                    break;
                case AnalysisKind::kChain:
                    if (req.domain == "sphere") res = run_chain_sphere(ctx, req, out_path);
                    else if (req.domain == "circle") res = run_chain_circle(ctx, req, out_path);
                    else res = run_chain_grid(ctx, req, out_path);
                    break;
                case AnalysisKind::kLimits:
                    res = run_limits(ctx, req, out_path);
                    break;
                case AnalysisKind::kVerifyStable:
                    res = run_verify_stable(ctx, req, out_path);
                    break;
                case AnalysisKind::kPortrait:
                    res = run_portrait(ctx, req, out_path);
                    break;
            }
        } catch (const std::exception& e) {
            res.passed = false;
            res.detail = std::string("error: ") + e.what();
        }
        res.kind = kind;
        res.seconds = std::chrono::duration<double>(
                          std::chrono::steady_clock::now() - t0)
                          .count();
        report.analyses.push_back(std::move(res));
    }
    report.all_passed = std::all_of(report.analyses.begin(), report.analyses.end(),
                                    [](const AnalysisResult& r) { return r.passed; });
    write_file(sc.out_dir + "/report.json", report_to_json(report));
    return report;
}

std::string report_to_json(const RunReport& report) {
    json j;
    j["name"] = report.name;
    j["seed"] = report.seed;
    j["all_passed"] = report.all_passed;
    json ja = json::array();
    for (const auto& a : report.analyses) {
        json e;
        e["kind"] = a.kind;
        e["passed"] = a.passed;
        e["detail"] = a.detail;
        e["seconds"] = a.seconds;
        json m;
        for (const auto& [k, v] : a.metrics) m[k] = v;
        e["metrics"] = m;
        ja.push_back(e);
    }
    j["analyses"] = ja;
    return j.dump(2) + "\n";
}

} // namespace pflow
