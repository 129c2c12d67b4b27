#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "fieldreg/fieldreg.hpp"

namespace fieldreg::cli {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

class ConfigError : public InvalidArgument {
public:
    using InvalidArgument::InvalidArgument;
};

// A JSON object whose keys are checked against an allow-list on construction.
class Node {
public:
    Node(const json& j, std::string where, std::initializer_list<const char*> allowed)
        : j_(j), where_(std::move(where)) {
        if (!j.is_object()) throw ConfigError(label() + " must be an object");
        for (const auto& [key, value] : j.items()) {
            if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
                throw ConfigError("unknown key '" + join(key) + "'");
            }
        }
    }

    bool has(const char* key) const { return j_.contains(key); }

    const json& at(const char* key) const {
        if (!has(key)) throw ConfigError("missing key '" + join(key) + "'");
        return j_.at(key);
    }

    double number(const char* key) const {
        const json& v = at(key);
        if (!v.is_number()) throw ConfigError(join(key) + " must be a number");
        const double d = v.get<double>();
        if (!std::isfinite(d)) throw ConfigError(join(key) + " must be finite");
        return d;
    }

    double number_or(const char* key, double fallback) const { return has(key) ? number(key) : fallback; }

    std::uint64_t integer(const char* key) const {
        const json& v = at(key);
        if (v.is_number_unsigned()) return v.get<std::uint64_t>();
        if (v.is_number_float()) {
            const double d = v.get<double>();
            if (d >= 0.0 && d < 9.007199254740992e15 && d == std::floor(d)) return static_cast<std::uint64_t>(d);
        }
        throw ConfigError(join(key) + " must be a non-negative integer");
    }

    std::string text(const char* key) const {
        const json& v = at(key);
        if (!v.is_string()) throw ConfigError(join(key) + " must be a string");
        return v.get<std::string>();
    }

    std::vector<double> numbers(const char* key) const {
        const json& v = at(key);
        if (!v.is_array()) throw ConfigError(join(key) + " must be an array of numbers");
        std::vector<double> out;
        for (const auto& e : v) {
            if (!e.is_number() || !std::isfinite(e.get<double>())) {
                throw ConfigError(join(key) + " must contain finite numbers only");
            }
            out.push_back(e.get<double>());
        }
        return out;
    }

    Node child(const char* key, std::initializer_list<const char*> allowed) const {
        return Node(at(key), join(key), allowed);
    }

    std::string join(const std::string& key) const { return where_.empty() ? key : where_ + "." + key; }

private:
    std::string label() const { return where_.empty() ? "config" : "'" + where_ + "'"; }

    const json& j_;
    std::string where_;
};

int parse_dim(const Node& n) {
    const auto d = n.integer("dim");
    if (d < 1 || d > static_cast<std::uint64_t>(kMaxDim)) throw ConfigError("dim must be 1 or 2");
    return static_cast<int>(d);
}

std::size_t parse_grid_n(const Node& n, const char* key = "grid_n") {
    const auto v = n.integer(key);
    if (v < 2 || v > 100000) throw ConfigError(n.join(key) + " must be in [2, 100000]");
    return static_cast<std::size_t>(v);
}

double parse_lambda(const Node& n, const char* key = "lambda") {
    const double l = n.number(key);
    if (l < 0.0) throw ConfigError(n.join(key) + " must be >= 0");
    return l;
}

Measure parse_measure(const Node& n) {
    if (!n.has("measure")) return Measure::feature_density;
    try {
        return measure_from_string(n.text("measure"));
    } catch (const InvalidArgument& e) {
        throw ConfigError(n.join("measure") + ": " + e.what());
    }
}

SolveOptions parse_solve_options(const Node& n) {
    SolveOptions o;
    o.tol = n.number_or("tol", o.tol);
    if (!(o.tol > 0.0)) throw ConfigError("tol must be > 0");
    if (n.has("max_iter")) {
        o.max_iter = static_cast<std::size_t>(n.integer("max_iter"));
        if (o.max_iter == 0) throw ConfigError("max_iter must be >= 1");
    }
    return o;
}

// Scalar broadcast to every axis, or one entry per axis.
Point parse_axis_values(const Node& n, const char* key, int dim) {
    Point p{0.0, 0.0};
    const json& v = n.at(key);
    if (v.is_number()) {
        p.fill(n.number(key));
        return p;
    }
    const auto values = n.numbers(key);
    if (values.size() != static_cast<std::size_t>(dim)) {
        throw GridMismatch(n.join(key) + " has " + std::to_string(values.size()) + " entries for dim " +
                           std::to_string(dim));
    }
    std::copy(values.begin(), values.end(), p.begin());
    return p;
}

Bandwidth parse_bandwidth(const Node& n) {
    if (!n.has("bandwidth")) return AutoBandwidth{};
    if (n.at("bandwidth").is_string()) {
        if (n.text("bandwidth") != "auto") throw ConfigError(n.join("bandwidth") + " must be a number or \"auto\"");
        return AutoBandwidth{};
    }
    const double b = n.number("bandwidth");
    if (!(b > 0.0)) throw ConfigError(n.join("bandwidth") + " must be > 0");
    return b;
}

fs::path resolve_path(const Node& n, const char* key, const fs::path& base) {
    const fs::path p = n.text(key);
    return p.is_absolute() ? p : base / p;
}

// Parsed configs hold no results of computation; building the model objects
// happens only after the whole config has been validated.

struct DensityConfig {
    std::string kind = "uniform";
    Point mu{0.5, 0.5};
    Point sigma{1.0, 1.0};
    double floor = kDefaultDensityFloor;
    Bandwidth bandwidth = AutoBandwidth{};
    std::optional<fs::path> samples;
    std::shared_ptr<DensityConfig> draw_from;
    std::size_t draw_n = 0;
    std::uint64_t draw_seed = 0;
};

DensityConfig parse_density(const Node& parent, const char* key, int dim, const fs::path& base,
                            bool allow_kde = true) {
    DensityConfig c;
    if (!parent.has(key)) return c;
    const Node n = parent.child(key, {"kind", "mu", "sigma", "floor", "bandwidth", "samples", "draw"});
    c.kind = n.text("kind");
    if (n.has("floor")) {
        c.floor = n.number("floor");
        if (!(c.floor > 0.0)) throw ConfigError(n.join("floor") + " must be > 0");
    }
    auto reject = [&](std::initializer_list<const char*> keys) {
        for (const char* k : keys) {
            if (n.has(k)) throw ConfigError(n.join(k) + " does not apply to kind '" + c.kind + "'");
        }
    };
    if (c.kind == "uniform") {
        reject({"mu", "sigma", "bandwidth", "samples", "draw"});
    } else if (c.kind == "gauss") {
        reject({"bandwidth", "samples", "draw"});
        c.mu = parse_axis_values(n, "mu", dim);
        c.sigma = parse_axis_values(n, "sigma", dim);
        for (int a = 0; a < dim; ++a) {
            if (!(c.sigma[a] > 0.0)) throw ConfigError(n.join("sigma") + " must be > 0");
        }
    } else if (c.kind == "kde" && allow_kde) {
        reject({"mu", "sigma"});
        c.bandwidth = parse_bandwidth(n);
        if (n.has("samples") == n.has("draw")) {
            throw ConfigError(n.join("samples") + " or " + n.join("draw") + " is required (exactly one)");
        }
        if (n.has("samples")) {
            c.samples = resolve_path(n, "samples", base);
        } else {
            const Node d = n.child("draw", {"density", "n", "seed"});
            c.draw_from = std::make_shared<DensityConfig>(parse_density(d, "density", dim, base, false));
            c.draw_n = static_cast<std::size_t>(d.integer("n"));
            if (c.draw_n < 2) throw ConfigError(d.join("n") + " must be >= 2");
            c.draw_seed = d.integer("seed");
        }
    } else {
        throw ConfigError(n.join("kind") + " must be one of uniform, gauss" + (allow_kde ? ", kde" : ""));
    }
    return c;
}

DensityModel build_density(const DensityConfig& c, int dim) {
    if (c.kind == "uniform") return DensityModel::uniform(dim, c.floor);
    if (c.kind == "gauss") return DensityModel::truncated_gaussian(dim, c.mu, c.sigma, c.floor);
    std::vector<Point> samples;
    if (c.samples) {
        const Dataset data = io::dataset_from_csv(io::read_file(*c.samples));
        if (data.dim != dim) throw GridMismatch("kde samples have dimension " + std::to_string(data.dim));
        samples = data.x;
    } else {
        const SynthSpec spec{ConditionalMean::constant(dim, 0.0), 0.0, c.draw_n, build_density(*c.draw_from, dim),
                             c.draw_seed};
        samples = synth_generate(spec).x;
    }
    return kde_fit(samples, dim, c.bandwidth, c.floor);
}

struct MeanConfig {
    std::string kind;
    double omega = 1.0;
    std::vector<double> coefficients;
    fs::path path;
    EstimatorConfig estimator;
};

EstimatorConfig parse_estimator(const Node& n) {
    EstimatorConfig e;
    const std::string kind = n.has("kind") ? n.text("kind") : std::string("binned");
    if (kind == "binned") {
        e.kind = EstimatorKind::binned;
        if (n.has("bandwidth")) throw ConfigError(n.join("bandwidth") + " does not apply to the binned estimator");
    } else if (kind == "nadaraya_watson") {
        e.kind = EstimatorKind::nadaraya_watson;
        e.bandwidth = parse_bandwidth(n);
    } else {
        throw ConfigError(n.join("kind") + " must be binned or nadaraya_watson");
    }
    return e;
}

MeanConfig parse_mean(const Node& parent, const char* key, const fs::path& base, bool analytic_only = false) {
    const Node n = parent.child(key, {"kind", "omega", "coefficients", "path", "estimator"});
    MeanConfig c;
    c.kind = n.text("kind");
    auto only = [&](std::initializer_list<const char*> keys) {
        for (const char* k : {"omega", "coefficients", "path", "estimator"}) {
            const bool ok = std::any_of(keys.begin(), keys.end(), [&](const char* a) { return std::string(a) == k; });
            if (!ok && n.has(k)) throw ConfigError(n.join(k) + " does not apply to kind '" + c.kind + "'");
        }
    };
    if (c.kind == "cosine") {
        only({"omega"});
        c.omega = n.number("omega");
    } else if (c.kind == "polynomial") {
        only({"coefficients"});
        c.coefficients = n.numbers("coefficients");
        if (c.coefficients.empty()) throw ConfigError(n.join("coefficients") + " must not be empty");
    } else if (c.kind == "tabulated" && !analytic_only) {
        only({"path"});
        c.path = resolve_path(n, "path", base);
    } else if (c.kind == "data" && !analytic_only) {
        only({"path", "estimator"});
        c.path = resolve_path(n, "path", base);
        if (n.has("estimator")) c.estimator = parse_estimator(n.child("estimator", {"kind", "bandwidth"}));
    } else {
        throw ConfigError(n.join("kind") + (analytic_only ? " must be cosine or polynomial"
                                                          : " must be one of cosine, polynomial, tabulated, data"));
    }
    return c;
}

ConditionalMean build_mean(const MeanConfig& c, const Grid& grid) {
    if (c.kind == "cosine") return ConditionalMean::cosine(grid.dim(), c.omega);
    if (c.kind == "polynomial") return ConditionalMean::polynomial(grid.dim(), c.coefficients);
    if (c.kind == "tabulated") {
        auto field = io::scalar_field_from_csv(io::read_file(c.path));
        if (field.grid().dim() != grid.dim()) throw GridMismatch("tabulated mean has a different dimension");
        return ConditionalMean::tabulated(std::move(field));
    }
    const Dataset data = io::dataset_from_csv(io::read_file(c.path));
    if (data.dim != grid.dim()) throw GridMismatch("data file has a different dimension");
    return fit_estimator(data, c.estimator, grid);
}

// Minimal JSON emitter so every number is printed with 17 significant digits.
std::string json_number(double v) { return std::isfinite(v) ? io::format_double(v) : "null"; }

std::string json_string(const std::string& s) { return json(s).dump(); }

std::string json_array(const std::vector<std::string>& items) {
    std::string out = "[";
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += ", ";
        out += items[i];
    }
    return out + "]";
}

std::string json_numbers(const std::vector<double>& v) {
    std::vector<std::string> items;
    for (double d : v) items.push_back(json_number(d));
    return json_array(items);
}

class JsonObject {
public:
    JsonObject& raw(std::string key, std::string value) {
        fields_.emplace_back(std::move(key), std::move(value));
        return *this;
    }
    JsonObject& num(std::string key, double v) { return raw(std::move(key), json_number(v)); }
    JsonObject& count(std::string key, std::size_t v) { return raw(std::move(key), std::to_string(v)); }
    JsonObject& str(std::string key, const std::string& v) { return raw(std::move(key), json_string(v)); }
    JsonObject& flag(std::string key, bool v) { return raw(std::move(key), v ? "true" : "false"); }

    std::string inline_text() const {
        std::string out = "{";
        for (std::size_t i = 0; i < fields_.size(); ++i) {
            if (i) out += ", ";
            out += json_string(fields_[i].first) + ": " + fields_[i].second;
        }
        return out + "}";
    }

    std::string document() const {
        std::string out = "{\n";
        for (std::size_t i = 0; i < fields_.size(); ++i) {
            out += "  " + json_string(fields_[i].first) + ": " + fields_[i].second;
            out += i + 1 < fields_.size() ? ",\n" : "\n";
        }
        return out + "}\n";
    }

private:
    std::vector<std::pair<std::string, std::string>> fields_;
};

JsonObject report_json(const SolveReport& r) {
    JsonObject o;
    o.str("method", to_string(r.method))
        .count("iterations", r.iterations)
        .num("final_residual", r.final_residual)
        .count("clamp_count", r.clamp_count);
    return o;
}

std::string field_name(std::size_t k) {
    std::string digits = std::to_string(k);
    return "field_" + std::string(digits.size() < 3 ? 3 - digits.size() : 0, '0') + digits + ".csv";
}

json load_config(const fs::path& path) {
    const std::string text = io::read_file(path);
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
}

// Keys shared by solve, oracle and sweep.
struct FieldProblem {
    int dim = 1;
    std::size_t grid_n = 2;
    Measure measure = Measure::feature_density;
    DensityConfig density;
    MeanConfig mean;
    SolveOptions solve;
};

FieldProblem parse_problem(const Node& n, const fs::path& base) {
    FieldProblem p;
    p.dim = parse_dim(n);
    p.grid_n = parse_grid_n(n);
    p.measure = parse_measure(n);
    p.density = parse_density(n, "density", p.dim, base);
    p.mean = parse_mean(n, "mean", base);
    p.solve = parse_solve_options(n);
    return p;
}

#define FIELD_PROBLEM_KEYS "dim", "grid_n", "measure", "density", "mean", "tol", "max_iter"

io::OutputBundle cmd_solve(const json& j, const fs::path& base, std::ostream& log) {
    const Node n(j, "", {FIELD_PROBLEM_KEYS, "lambda"});
    const FieldProblem p = parse_problem(n, base);
    const double lambda = parse_lambda(n);

    const Grid grid = build_grid(p.dim, p.grid_n);
    const auto density = build_density(p.density, p.dim);
    const auto mean = build_mean(p.mean, grid);
    const auto sol = solve_field(assemble_system(mean, density, RiskSpec{lambda, p.measure}, grid), p.solve);

    JsonObject report = report_json(sol.report);
    report.num("lambda", lambda)
        .str("measure", to_string(p.measure))
        .count("dim", static_cast<std::size_t>(p.dim))
        .count("grid_n", p.grid_n)
        .num("value_at_origin", sol.field[0]);
    io::OutputBundle out;
    out.add("solution.csv", io::scalar_field_to_csv(sol.field));
    out.add("report.json", report.document());
    log << "solve: " << to_string(sol.report.method) << ", " << sol.report.iterations
        << " iterations, residual " << io::format_double(sol.report.final_residual) << "\n";
    return out;
}

io::OutputBundle cmd_oracle(const json& j, const fs::path& base, std::ostream& log) {
    const Node n(j, "", {FIELD_PROBLEM_KEYS, "lambda"});
    const FieldProblem p = parse_problem(n, base);
    const double lambda = parse_lambda(n);

    const Grid grid = build_grid(p.dim, p.grid_n);
    const auto density = build_density(p.density, p.dim);
    const auto mean = build_mean(p.mean, grid);
    const RiskSpec spec{lambda, p.measure};
    const auto sol = solve_field(assemble_system(mean, density, spec, grid), p.solve);
    const auto direct = minimize_risk_direct(mean, density, spec, grid);

    double diff = 0.0, scale = 0.0;
    const auto nodal = mean.nodal(grid);
    for (std::size_t k = 0; k < grid.node_count(); ++k) {
        diff = std::max(diff, std::abs(sol.field[k] - direct[k]));
        scale = std::max(scale, std::abs(nodal[k]));
    }
    if (scale == 0.0) scale = 1.0;
    const double threshold = 1e-8 * scale;
    const bool pass = diff <= threshold;

    JsonObject report;
    report.num("lambda", lambda)
        .str("measure", to_string(p.measure))
        .num("max_abs_diff", diff)
        .num("scale", scale)
        .num("threshold", threshold)
        .flag("pass", pass)
        .raw("solver", report_json(sol.report).inline_text());
    io::OutputBundle out;
    out.add("oracle.json", report.document());
    log << "oracle: max |solver - direct| = " << io::format_double(diff) << (pass ? " (pass)" : " (FAIL)") << "\n";
    return out;
}

io::OutputBundle cmd_sweep(const json& j, const fs::path& base, std::ostream& log) {
    const Node n(j, "", {FIELD_PROBLEM_KEYS, "lambdas"});
    const FieldProblem p = parse_problem(n, base);
    const auto lambdas = n.numbers("lambdas");
    if (lambdas.empty()) throw ConfigError("lambdas must not be empty");
    for (std::size_t i = 0; i < lambdas.size(); ++i) {
        if (lambdas[i] < 0.0 || (i > 0 && !(lambdas[i] > lambdas[i - 1])) || (i > 0 && lambdas[i] == 0.0)) {
            throw ConfigError("lambdas must be >= 0 and strictly increasing");
        }
    }

    const Grid grid = build_grid(p.dim, p.grid_n);
    const auto density = build_density(p.density, p.dim);
    const auto mean = build_mean(p.mean, grid);
    const auto entries = lambda_sweep(mean, density, grid, lambdas, p.measure, p.solve);

    io::OutputBundle out;
    std::string table = "lambda,fitness,penalty,iterations,final_residual,field\n";
    for (std::size_t k = 0; k < entries.size(); ++k) {
        const auto& e = entries[k];
        table += io::format_double(e.lambda) + "," + io::format_double(e.fitness) + "," +
                 io::format_double(e.penalty) + "," + std::to_string(e.report.iterations) + "," +
                 io::format_double(e.report.final_residual) + "," + field_name(k) + "\n";
        out.add(field_name(k), io::scalar_field_to_csv(e.field));
    }
    out.add("sweep.csv", table);
    log << "sweep: " << entries.size() << " solves\n";
    return out;
}

io::OutputBundle cmd_mms(const json& j, const fs::path& base, std::ostream& log) {
    const Node n(j, "", {"dim", "grids", "lambda", "measure", "density", "family", "tol", "max_iter"});
    const int dim = parse_dim(n);
    std::vector<std::size_t> grids;
    const json& g = n.at("grids");
    if (!g.is_array()) throw ConfigError("grids must be an array of node counts");
    for (const auto& v : g) {
        if (!v.is_number_unsigned() || v.get<std::uint64_t>() < 3 || v.get<std::uint64_t>() > 100000) {
            throw ConfigError("grids entries must be integers in [3, 100000]");
        }
        grids.push_back(v.get<std::size_t>());
    }
    if (grids.size() < 2) throw ConfigError("grids needs at least 2 entries to compute an order");
    for (std::size_t i = 1; i < grids.size(); ++i) {
        if (!(grids[i] > grids[i - 1])) throw ConfigError("grids must be strictly increasing");
    }
    const double lambda = parse_lambda(n);
    const Measure measure = parse_measure(n);
    const auto density_cfg = parse_density(n, "density", dim, base);
    if (n.has("family") && n.text("family") != "cosine") throw ConfigError("family must be cosine");
    const SolveOptions opts = parse_solve_options(n);

    const auto rows = convergence_study(dim, grids, lambda, build_density(density_cfg, dim), measure, opts);
    std::string table = "n,h,max_error,observed_order\n";
    for (const auto& r : rows) {
        table += std::to_string(r.nodes_per_axis) + "," + io::format_double(r.spacing) + "," +
                 io::format_double(r.max_error) + "," +
                 (r.observed_order ? io::format_double(*r.observed_order) : std::string()) + "\n";
    }
    io::OutputBundle out;
    out.add("convergence.csv", table);
    log << "mms: final observed order " << io::format_double(*rows.back().observed_order) << "\n";
    return out;
}

io::OutputBundle cmd_denoise(const json& j, const fs::path& base, std::ostream& log) {
    const Node n(j, "", {"dim", "grid_n", "truth", "noise_sigma", "n_samples", "seed", "density", "estimator",
                         "lambdas", "measure", "score_density", "tol", "max_iter"});
    const int dim = parse_dim(n);
    const std::size_t grid_n = parse_grid_n(n);
    const MeanConfig truth = parse_mean(n, "truth", base, true);
    const double sigma = n.number("noise_sigma");
    if (sigma < 0.0) throw ConfigError("noise_sigma must be >= 0");
    const auto n_samples = n.integer("n_samples");
    if (n_samples < 2) throw ConfigError("n_samples must be >= 2");
    const std::uint64_t seed = n.integer("seed");
    const DensityConfig density_cfg = parse_density(n, "density", dim, base, false);
    EstimatorConfig estimator;
    if (n.has("estimator")) estimator = parse_estimator(n.child("estimator", {"kind", "bandwidth"}));
    const auto lambdas = n.numbers("lambdas");
    if (lambdas.empty()) throw ConfigError("lambdas must not be empty");
    for (double l : lambdas) {
        if (l < 0.0) throw ConfigError("lambdas must be >= 0");
    }
    const Measure measure = parse_measure(n);
    bool true_density = false;
    if (n.has("score_density")) {
        const auto s = n.text("score_density");
        if (s != "kde" && s != "true") throw ConfigError("score_density must be kde or true");
        true_density = s == "true";
    }
    const SolveOptions opts = parse_solve_options(n);

    DenoiseConfig cfg;
    cfg.grid = build_grid(dim, grid_n);
    cfg.synth = {build_mean(truth, cfg.grid), sigma, static_cast<std::size_t>(n_samples),
                 build_density(density_cfg, dim), seed};
    cfg.estimator = estimator;
    cfg.lambdas = lambdas;
    cfg.measure = measure;
    cfg.use_true_density = true_density;
    cfg.solve = opts;
    const auto result = run_denoise(cfg);

    io::OutputBundle out;
    std::vector<std::string> solves, files;
    for (std::size_t k = 0; k < result.fields.size(); ++k) {
        solves.push_back(report_json(result.report.solves[k]).inline_text());
        files.push_back(json_string(field_name(k)));
        out.add(field_name(k), io::scalar_field_to_csv(result.fields[k]));
    }
    JsonObject report;
    report.raw("lambdas", json_numbers(result.report.lambdas))
        .raw("mse_to_truth", json_numbers(result.report.mse_to_truth))
        .num("chosen_lambda", result.report.chosen_lambda)
        .num("estimator_rmse", result.report.estimator_rmse)
        .raw("solves", json_array(solves))
        .raw("fields", json_array(files));
    out.add("report.json", report.document());
    log << "denoise: chosen lambda " << io::format_double(result.report.chosen_lambda) << "\n";
    return out;
}

#undef FIELD_PROBLEM_KEYS

} // namespace

int run_command(std::string_view command, const RunOptions& opts, std::ostream& out, std::ostream& err) {
    using Handler = io::OutputBundle (*)(const json&, const fs::path&, std::ostream&);
    const std::pair<std::string_view, Handler> handlers[] = {
        {"solve", cmd_solve}, {"oracle", cmd_oracle}, {"sweep", cmd_sweep}, {"mms", cmd_mms}, {"denoise", cmd_denoise},
    };
    const auto it = std::find_if(std::begin(handlers), std::end(handlers),
                                 [&](const auto& h) { return h.first == command; });
    if (it == std::end(handlers)) {
        err << "error: unknown command '" << command << "'\n";
        return kExitInvalidConfig;
    }
    try {
        const json config = load_config(opts.config);
        std::ostringstream log;
        const auto bundle = it->second(config, opts.config.parent_path(), log);
        bundle.commit(opts.out_dir);
        if (!opts.quiet) out << log.str();
        return kExitOk;
    } catch (const IoError& e) {
        err << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const ConvergenceError& e) {
        err << "error: " << e.what() << "\n";
        return kExitNoConvergence;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << "\n";
        return kExitInvalidConfig;
    } catch (const std::domain_error& e) {
        err << "error: " << e.what() << "\n";
        return kExitInvalidConfig;
    } catch (const json::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitInvalidConfig;
    }
}

} // namespace fieldreg::cli
