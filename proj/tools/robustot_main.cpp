// Command-line frontend: distances, barycenters, simulation sweeps and
// measure/image conversion. JSON goes to stdout, diagnostics to stderr.
//
// Exit codes: 0 success, 1 solver or runtime failure, 2 usage or validation.

#include "robustot/experiments.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace robustot;

namespace {

constexpr int kExitSolver = 1;
constexpr int kExitUsage = 2;

struct Flags {
    std::string mu, nu, inputs, out;
    std::string lambda = "inf";
    double p = 1.0;
    std::string method;
    std::optional<double> epsilon;
    std::optional<Index> max_iter;
    std::optional<double> tol;
    std::optional<Index> R;
    std::string support;
    std::uint64_t seed = 1;
    std::string ratios;
    std::string lambdas;
    int threads = 1;
    bool paper_scale = false;
    std::string scenario;
    std::string input;
};

double parse_lambda(const std::string& text) {
    if (text == "inf" || text == "Inf" || text == "INF") return kInf;
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(text, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != text.size() || !(v > 0) || !std::isfinite(v))
        throw ValidationError("--lambda must be a positive number or 'inf', got '" + text + "'");
    return v;
}

std::vector<double> parse_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw ValidationError("--lambdas expects comma-separated numbers, got '" + text + "'");
        }
    }
    if (out.empty()) throw ValidationError("--lambdas is empty");
    return out;
}

// a:b:step, inclusive of b up to rounding.
std::vector<double> parse_range(const std::string& text) {
    double a = 0, b = 0, step = 0;
    char c1 = 0, c2 = 0;
    std::stringstream ss(text);
    if (!(ss >> a >> c1 >> b >> c2 >> step) || c1 != ':' || c2 != ':' || !ss.eof() || !(step > 0) || b < a)
        throw ValidationError("--ratios expects a:b:step with step > 0, got '" + text + "'");
    std::vector<double> out;
    const auto count = static_cast<Index>(std::floor((b - a) / step + 1e-9));
    for (Index k = 0; k <= count; ++k) {
        // Rounded to 12 decimals so 0.07 prints as 0.07, not 0.07000000000000001.
        out.push_back(std::round((a + static_cast<double>(k) * step) * 1e12) / 1e12);
    }
    return out;
}

void require_file(const std::string& path, const std::string& flag) {
    if (path.empty()) throw ValidationError(flag + " is required");
    if (!fs::is_regular_file(path)) throw ValidationError(flag + ": no such file '" + path + "'");
}

CostSpec cost_from(const Flags& f) {
    if (f.p != 1.0 && f.p != 2.0) throw ValidationError("--p must be 1 or 2");
    return CostSpec(f.p, parse_lambda(f.lambda));
}

SinkhornParams sinkhorn_from(const Flags& f) {
    SinkhornParams params;
    if (f.epsilon) params.epsilon = *f.epsilon;
    if (f.max_iter) params.max_iter = *f.max_iter;
    if (f.tol) params.tol = *f.tol;
    params.validate();
    return params;
}

// ---------------------------------------------------------------------------

int cmd_dist(const Flags& f) {
    require_file(f.mu, "--mu");
    require_file(f.nu, "--nu");
    const auto spec = cost_from(f);
    const std::string method = f.method.empty() ? "exact" : f.method;
    const auto a = load_measure(f.mu, true);
    const auto b = load_measure(f.nu, true);

    json out;
    out["method"] = method;
    if (method == "exact") {
        const auto res = exact_distance(a, b, spec);
        out["distance"] = res.distance;
        out["cost"] = res.cost;
        out["iterations"] = res.pivots;
        out["marginal_error"] = res.plan.marginal_error();
    } else if (method == "sinkhorn") {
        const auto res = sinkhorn_distance(a, b, spec, sinkhorn_from(f));
        out["distance"] = res.distance;
        out["cost"] = res.cost;
        out["iterations"] = res.iterations;
        out["marginal_error"] = res.marginal_error;
        out["converged"] = res.converged;
    } else {
        throw ValidationError("dist --method must be exact or sinkhorn");
    }
    std::cout << out.dump() << '\n';
    return 0;
}

struct Inputs {
    std::vector<DiscreteMeasure> measures;
    Index rows = 0;  ///< image size, 0 for measure files
    Index cols = 0;
};

Inputs load_inputs(const std::string& dir) {
    if (dir.empty()) throw ValidationError("--inputs is required");
    if (!fs::is_directory(dir)) throw ValidationError("--inputs: no such directory '" + dir + "'");
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        const auto ext = entry.path().extension().string();
        if (entry.is_regular_file() && (ext == ".csv" || ext == ".pgm")) files.push_back(entry.path());
    }
    if (files.empty()) throw ValidationError("--inputs: no .csv or .pgm files in '" + dir + "'");
    std::sort(files.begin(), files.end());

    Inputs in;
    const bool images = files.front().extension() == ".pgm";
    for (const auto& path : files) {
        if ((path.extension() == ".pgm") != images)
            throw ValidationError("--inputs mixes images and measure files");
        if (images) {
            const Image img = read_pgm(path);
            if (in.rows == 0) {
                in.rows = img.rows();
                in.cols = img.cols();
            } else if (img.rows() != in.rows || img.cols() != in.cols) {
                throw ValidationError("image size mismatch in '" + path.string() + "'");
            }
            in.measures.push_back(image_to_measure(img));
        } else {
            in.measures.push_back(load_measure(path, true));
        }
    }
    return in;
}

Matrix pixel_grid(Index rows, Index cols) {
    Matrix grid(2, rows * cols);
    for (Index r = 0, k = 0; r < rows; ++r)
        for (Index c = 0; c < cols; ++c, ++k) grid.col(k) << static_cast<double>(r), static_cast<double>(c);
    return grid;
}

Matrix pooled_support(const std::vector<DiscreteMeasure>& measures) {
    std::vector<Vector> points;
    for (const auto& m : measures) {
        const auto cols = split_columns(m.points());
        points.insert(points.end(), cols.begin(), cols.end());
    }
    return stack_columns(dedupe_points(points, 1e-12));
}

Matrix support_from(const Flags& f, const std::string& fallback, const Inputs& in, const BarycenterProblem& problem) {
    const std::string spec = f.support.empty() ? fallback : f.support;
    if (spec == "grid") return in.rows > 0 ? pixel_grid(in.rows, in.cols) : pooled_support(in.measures);
    if (spec == "kmeans") {
        const Index R = f.R.value_or(40);
        if (R < 1) throw ValidationError("--R must be >= 1");
        return kmeans_init_support(problem, R, f.seed);
    }
    if (spec.rfind("file:", 0) == 0) {
        const std::string path = spec.substr(5);
        require_file(path, "--support file:");
        Matrix pts = load_measure(path, true).points();
        if (pts.rows() != problem.dim()) throw ValidationError("--support file: dimension mismatch");
        return pts;
    }
    throw ValidationError("--support must be grid, kmeans or file:<path>");
}

int cmd_barycenter(const Flags& f) {
    const auto spec = cost_from(f);
    const std::string method = f.method.empty() ? "free" : f.method;
    if (method != "ibp" && method != "free") throw ValidationError("barycenter --method must be ibp or free");
    const Inputs in = load_inputs(f.inputs);
    BarycenterProblem problem(in.measures, spec);
    const auto params = sinkhorn_from(f);

    json out;
    out["method"] = method;
    out["inputs"] = problem.count();
    DiscreteMeasure result = problem.inputs.front();
    if (method == "ibp") {
        const Matrix support = support_from(f, "grid", in, problem);
        const auto res = ibp_barycenter(problem, support, params);
        result = prune(DiscreteMeasure(support, res.mass, true));
        out["objective"] = res.objective;
        out["objective_trace"] = json::array({res.objective});
        out["iterations"] = res.iterations;
        out["converged"] = res.converged;
        out["marginal_error"] = res.marginal_error;
    } else {
        FreeSupportOptions options;
        options.sinkhorn = params;
        const Matrix init = support_from(f, "kmeans", in, problem);
        const auto res = free_support_barycenter(problem, init, options);
        result = res.barycenter;
        out["objective"] = res.objective_trace.empty() ? 0.0 : res.objective_trace.back();
        out["objective_trace"] = res.objective_trace;
        out["iterations"] = res.outer_iterations;
        out["converged"] = res.converged;
    }
    out["support_size"] = result.size();

    if (!f.out.empty()) {
        save_measure(result, f.out);
        out["out"] = f.out;
        if (in.rows > 0) {
            fs::path pgm = f.out;
            pgm.replace_extension(".pgm");
            write_pgm(measure_to_image(result, in.rows, in.cols), pgm);
            out["image"] = pgm.string();
        }
    }
    std::cout << out.dump() << '\n';
    return 0;
}

ExperimentConfig config_from(const Flags& f) {
    const Scenario scenario = parse_scenario(f.scenario);
    ExperimentConfig cfg = f.paper_scale ? ExperimentConfig::paper_scale(scenario, f.seed)
                                         : ExperimentConfig::desk(scenario, f.seed);
    if (!f.ratios.empty()) cfg.ratios = parse_range(f.ratios);
    if (!f.lambdas.empty()) cfg.lambda_grid = parse_list(f.lambdas);
    if (f.p != 1.0 && f.p != 2.0) throw ValidationError("--p must be 1 or 2");
    cfg.p = f.p;
    if (f.epsilon) cfg.epsilon = *f.epsilon;
    if (f.max_iter) cfg.max_iter = *f.max_iter;
    if (f.tol) cfg.tol = *f.tol;
    if (scenario == Scenario::ellipse_images) {
        if (f.lambda != "inf") cfg.image_lambda = parse_lambda(f.lambda);
        if (f.R) cfg.R = *f.R;
    }
    cfg.validate();
    return cfg;
}

int cmd_simulate(const Flags& f) {
    const ExperimentConfig cfg = config_from(f);

    std::ofstream file;
    if (!f.out.empty()) {
        file.open(f.out);
        if (!file) throw ValidationError("--out: cannot write '" + f.out + "'");
    }
    std::ostream& sink = f.out.empty() ? std::cout : file;
    sink << format_run_records({}, true);
    sink.flush();

    try {
        if (cfg.scenario == Scenario::ellipse_images && !f.out.empty()) {
            const auto res = run_image_study(cfg);
            sink << format_run_records(res.records, false);
            const fs::path base = fs::path(f.out).replace_extension();
            const Index s = cfg.image_size;
            write_pgm(measure_to_image(res.wb_free, s, s), base.string() + "_wb_free.pgm");
            write_pgm(measure_to_image(res.rwb_free, s, s), base.string() + "_rwb_free.pgm");
            write_pgm(measure_to_image(res.wb_fixed, s, s), base.string() + "_wb_fixed.pgm");
            write_pgm(measure_to_image(res.rwb_fixed, s, s), base.string() + "_rwb_fixed.pgm");
        } else {
            run_scenario(cfg, [&](const RunRecord& r) {
                sink << format_run_records({r}, false);
                sink.flush();
            });
        }
    } catch (const SolverError& e) {
        sink << format_run_records({{to_string(cfg.scenario), kInf, 0.0, "solver_failure", 1.0, cfg.seed}}, false);
        sink.flush();
        throw;
    }
    sink.flush();
    return 0;
}

int cmd_convert(const Flags& f) {
    require_file(f.input, "input");
    if (f.out.empty()) throw ValidationError("--out is required");
    const fs::path in = f.input;
    const fs::path out = f.out;
    json summary;
    if (in.extension() == ".pgm") {
        const auto m = image_to_measure(read_pgm(in));
        if (out.extension() == ".pgm") throw ValidationError("convert: output of an image must be a .csv measure");
        save_measure(m, out);
        summary["support_size"] = m.size();
    } else {
        const auto m = load_measure(in, true);
        if (out.extension() != ".pgm") throw ValidationError("convert: output of a measure must be a .pgm image");
        if (m.dim() != 2) throw ValidationError("convert: only 2-D measures render as images");
        const auto rows = static_cast<Index>(std::ceil(m.points().row(0).maxCoeff())) + 1;
        const auto cols = static_cast<Index>(std::ceil(m.points().row(1).maxCoeff())) + 1;
        if (rows < 1 || cols < 1 || m.points().minCoeff() < 0)
            throw ValidationError("convert: measure coordinates must be nonnegative pixel positions");
        write_pgm(measure_to_image(m, rows, cols), out);
        summary["rows"] = rows;
        summary["cols"] = cols;
    }
    summary["out"] = out.string();
    std::cout << summary.dump() << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Robust Wasserstein distances and barycenters"};
    app.require_subcommand(1);
    Flags f;

    auto add_cost = [&](CLI::App* cmd) {
        cmd->add_option("--lambda", f.lambda, "truncation level (number or inf)");
        cmd->add_option("--p", f.p, "cost exponent, 1 or 2");
    };
    auto add_solver = [&](CLI::App* cmd, const std::string& eps_help) {
        cmd->add_option("--epsilon", f.epsilon, eps_help);
        cmd->add_option("--max-iter", f.max_iter, "iteration cap");
        cmd->add_option("--tol", f.tol, "stopping tolerance");
        cmd->add_option("--threads", f.threads, "worker cap (results do not depend on it)")->check(CLI::PositiveNumber);
    };
    const std::string relative_eps = "entropic regularization as a multiple of the cost scale";

    auto* dist = app.add_subcommand("dist", "distance between two measures");
    dist->add_option("--mu", f.mu, "first measure CSV");
    dist->add_option("--nu", f.nu, "second measure CSV");
    dist->add_option("--method", f.method, "exact or sinkhorn");
    add_cost(dist);
    add_solver(dist, relative_eps);

    auto* bary = app.add_subcommand("barycenter", "barycenter of a directory of measures or PGM images");
    bary->add_option("--inputs", f.inputs, "directory of .csv measures or .pgm images");
    bary->add_option("--out", f.out, "output measure CSV (a PGM is written next to it for image inputs)");
    bary->add_option("--method", f.method, "ibp (fixed support) or free");
    bary->add_option("--support", f.support, "grid, kmeans or file:<path>");
    bary->add_option("--R", f.R, "support size for kmeans initialization (default 40)");
    bary->add_option("--seed", f.seed, "seed for kmeans initialization");
    add_cost(bary);
    add_solver(bary, relative_eps);

    auto* sim = app.add_subcommand("simulate", "run an experiment and write RunRecord CSV");
    sim->add_option("scenario", f.scenario, "ellipse_images, contamination, heavytail or pipeline1d")->required();
    sim->add_option("--out", f.out, "CSV path (stdout when omitted)");
    sim->add_option("--seed", f.seed, "master seed");
    sim->add_option("--ratios", f.ratios, "contamination ratios a:b:step");
    sim->add_option("--lambdas", f.lambdas, "comma-separated lambda grid");
    sim->add_option("--R", f.R, "image barycenter support size");
    sim->add_flag("--paper-scale", f.paper_scale, "use the published experiment sizes");
    add_cost(sim);
    add_solver(sim, "absolute entropic regularization");

    auto* conv = app.add_subcommand("convert", "convert between PGM images and measure CSV");
    conv->add_option("input", f.input, "input .pgm or .csv")->required();
    conv->add_option("--out", f.out, "output .csv or .pgm");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (*dist) return cmd_dist(f);
        if (*bary) return cmd_barycenter(f);
        if (*sim) return cmd_simulate(f);
        if (*conv) return cmd_convert(f);
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitSolver;
    }
    return kExitUsage;
}
