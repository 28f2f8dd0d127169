#include "robustot/experiments.hpp"

#include "robustot/kmeans.hpp"

#include <algorithm>
#include <cmath>
#include <charconv>
#include <numbers>
#include <ostream>

namespace robustot {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Stream tags keep generator families apart for a given master seed.
enum Stream : std::uint64_t {
    kCenters = 1,
    kSignal = 2,
    kOutlier = 3,
    kKMeans = 4,
    kImage = 5,
    kInit = 6,
};

std::uint64_t cell_id(Stream family, Index index) {
    return (static_cast<std::uint64_t>(family) << 40) ^ static_cast<std::uint64_t>(index);
}

std::string format_double(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

SinkhornParams sweep_params(const ExperimentConfig& cfg) {
    SinkhornParams params;
    params.epsilon = cfg.epsilon;
    params.relative = false;
    params.max_iter = cfg.max_iter;
    params.tol = cfg.tol;
    return params;
}

double quantile(std::vector<double> sorted, double q) {
    std::sort(sorted.begin(), sorted.end());
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

double student_t_density(double x, double df) {
    return std::exp(std::lgamma((df + 1) / 2) - std::lgamma(df / 2)) / std::sqrt(df * std::numbers::pi) *
           std::pow(1 + x * x / df, -(df + 1) / 2);
}

}  // namespace

std::string to_string(Scenario s) {
    switch (s) {
        case Scenario::ellipse_images: return "ellipse_images";
        case Scenario::contamination: return "contamination";
        case Scenario::heavytail: return "heavytail";
        case Scenario::pipeline1d: return "pipeline1d";
    }
    return "unknown";
}

Scenario parse_scenario(const std::string& name) {
    for (auto s : {Scenario::ellipse_images, Scenario::contamination, Scenario::heavytail, Scenario::pipeline1d})
        if (to_string(s) == name) return s;
    throw ValidationError("unknown scenario '" + name + "'");
}

void ExperimentConfig::validate() const {
    if (n_datasets < 1 || samples_per_dataset < 1 || support_size < 1 || image_size < 1 || R < 1)
        throw ValidationError("experiment counts must be >= 1");
    if (!(contamination_ratio >= 0 && contamination_ratio <= 1))
        throw ValidationError("contamination ratio must lie in [0, 1]");
    for (double r : ratios)
        if (!(r >= 0 && r <= 1)) throw ValidationError("contamination ratios must lie in [0, 1]");
    for (std::size_t k = 0; k < lambda_grid.size(); ++k) {
        if (!(lambda_grid[k] > 0)) throw ValidationError("lambda grid must be strictly positive");
        if (k > 0 && !(lambda_grid[k] > lambda_grid[k - 1]))
            throw ValidationError("lambda grid must be strictly ascending");
    }
    if (!(p >= 1)) throw ValidationError("p must be >= 1");
    if (!(epsilon > 0) || !(tol > 0) || max_iter < 1) throw ValidationError("invalid solver settings");
    if (barycenter_grid < 2 || kde_grid < 2) throw ValidationError("grids need at least two points");
    if (!(tail_quantile >= 0 && tail_quantile < 0.5)) throw ValidationError("tail quantile must lie in [0, 0.5)");
    if (max_outliers < 1) throw ValidationError("max_outliers must be >= 1");
}

ExperimentConfig ExperimentConfig::desk(Scenario s, std::uint64_t seed) {
    ExperimentConfig cfg;
    cfg.scenario = s;
    cfg.seed = seed;
    switch (s) {
        case Scenario::heavytail:
            cfg.lambda_grid = {30, 40, 50, 60, 70, 80, 90, 100, 110};
            cfg.ratios = {0.0};
            break;
        case Scenario::ellipse_images:
            cfg.n_datasets = 20;
            cfg.image_size = 20;
            cfg.R = 40;
            cfg.outlier_region = PixelRect::upper_right_corner(cfg.image_size);
            cfg.image_lambda = 2.5;
            cfg.lambda_grid = {2.5};
            break;
        case Scenario::pipeline1d:
            cfg.ratios = {0.05};
            cfg.contamination_ratio = 0.05;
            cfg.lambda_grid = {10, 30, 50};
            break;
        case Scenario::contamination:
            break;
    }
    return cfg;
}

ExperimentConfig ExperimentConfig::paper_scale(Scenario s, std::uint64_t seed) {
    ExperimentConfig cfg = desk(s, seed);
    switch (s) {
        case Scenario::ellipse_images:
            cfg.n_datasets = 200;
            cfg.image_size = 40;
            cfg.R = 105;
            cfg.outlier_region = PixelRect::upper_right_corner(cfg.image_size);
            cfg.image_lambda = 5.0;
            cfg.lambda_grid = {5.0};
            break;
        case Scenario::contamination:
        case Scenario::heavytail:
        case Scenario::pipeline1d:
            cfg.n_datasets = 100;
            cfg.samples_per_dataset = 1000;
            cfg.support_size = 100;
            if (s == Scenario::contamination) {
                cfg.ratios.clear();
                for (int k = 0; k <= 25; ++k) cfg.ratios.push_back(k / 100.0);
            }
            break;
    }
    return cfg;
}

std::mt19937_64 stream_rng(std::uint64_t seed, std::uint64_t stream) {
    return std::mt19937_64(splitmix64(splitmix64(seed) ^ stream));
}

std::string format_run_records(const std::vector<RunRecord>& records, bool header) {
    std::string out;
    if (header) out += "scenario,lambda,ratio,metric,value,seed\n";
    for (const auto& r : records) {
        out += r.scenario;
        out += ',' + format_double(r.lambda);
        out += ',' + (std::isnan(r.ratio) ? std::string("all") : format_double(r.ratio));
        out += ',' + r.metric;
        out += ',' + format_double(r.value);
        out += ',' + std::to_string(r.seed) + '\n';
    }
    return out;
}

void write_run_records(std::ostream& out, const std::vector<RunRecord>& records, bool header) {
    out << format_run_records(records, header);
}

// ---------------------------------------------------------------------------
// Generators
// ---------------------------------------------------------------------------

std::vector<Image> gen_ellipse_images(const ExperimentConfig& cfg) {
    cfg.validate();
    const Index s = cfg.image_size;
    if (s < 10) throw ValidationError("ellipse images need image_size >= 10");
    const double size = static_cast<double>(s);
    const double mid = (size - 1.0) / 2.0;

    std::vector<Image> images;
    images.reserve(static_cast<std::size_t>(cfg.n_datasets));
    for (Index k = 0; k < cfg.n_datasets; ++k) {
        auto rng = stream_rng(cfg.seed, cell_id(kImage, k));
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        auto between = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

        Image img = Image::Zero(s, s);
        const double cr = mid + between(-0.03, 0.03) * size;
        const double cc = mid + between(-0.03, 0.03) * size;
        const double outer_a = between(0.22, 0.28) * size;
        const double outer_b = between(0.16, 0.24) * size;
        const double shrink = between(0.45, 0.65);
        const double angle = between(0.0, std::numbers::pi);

        for (const double f : {1.0, shrink}) {
            const double a = outer_a * f;
            const double b = outer_b * f;
            const auto steps = static_cast<int>(std::ceil(16.0 * std::numbers::pi * std::max(a, b)));
            for (int t = 0; t < steps; ++t) {
                const double phi = 2.0 * std::numbers::pi * t / steps;
                const double x = a * std::cos(phi);
                const double y = b * std::sin(phi);
                const double r = cr + x * std::cos(angle) - y * std::sin(angle);
                const double c = cc + x * std::sin(angle) + y * std::cos(angle);
                const auto ri = static_cast<Index>(std::lround(r));
                const auto ci = static_cast<Index>(std::lround(c));
                if (ri >= 0 && ri < s && ci >= 0 && ci < s) img(ri, ci) = 255.0;
            }
        }

        const PixelRect& box = cfg.outlier_region;
        if (!box.empty()) {
            const Index rows = std::min(box.row_end, s) - std::max<Index>(box.row_begin, 0);
            const Index cols = std::min(box.col_end, s) - std::max<Index>(box.col_begin, 0);
            if (rows > 0 && cols > 0) {
                std::uniform_int_distribution<Index> count(1, cfg.max_outliers);
                const Index wanted = std::min(count(rng), rows * cols);
                std::uniform_int_distribution<Index> pick_r(0, rows - 1);
                std::uniform_int_distribution<Index> pick_c(0, cols - 1);
                Index placed = 0;
                for (int attempt = 0; placed < wanted && attempt < 1000; ++attempt) {
                    const Index r = std::max<Index>(box.row_begin, 0) + pick_r(rng);
                    const Index c = std::max<Index>(box.col_begin, 0) + pick_c(rng);
                    if (img(r, c) > 0) continue;
                    img(r, c) = 255.0;
                    ++placed;
                }
            }
        }
        images.push_back(std::move(img));
    }
    return images;
}

std::vector<std::vector<double>> gen_contamination(const ExperimentConfig& cfg) {
    cfg.validate();
    const Index m = cfg.samples_per_dataset;
    const auto n_outliers = static_cast<Index>(std::floor(cfg.contamination_ratio * static_cast<double>(m) + 1e-9));
    std::vector<std::vector<double>> out;
    out.reserve(static_cast<std::size_t>(cfg.n_datasets));
    for (Index d = 0; d < cfg.n_datasets; ++d) {
        auto centers = stream_rng(cfg.seed, cell_id(kCenters, d));
        auto signal = stream_rng(cfg.seed, cell_id(kSignal, d));
        auto outlier = stream_rng(cfg.seed, cell_id(kOutlier, d));
        std::uniform_real_distribution<double> u0(-cfg.signal_center_range, cfg.signal_center_range);
        std::uniform_real_distribution<double> u1(cfg.outlier_center_low, cfg.outlier_center_high);
        const double mu0 = u0(centers);
        const double mu1 = u1(centers);
        std::normal_distribution<double> type1(mu0, 1.0);
        std::normal_distribution<double> type2(mu1, 1.0);

        std::vector<double> samples;
        samples.reserve(static_cast<std::size_t>(m));
        for (Index k = 0; k < m - n_outliers; ++k) samples.push_back(type1(signal));
        for (Index k = 0; k < n_outliers; ++k) samples.push_back(type2(outlier));
        out.push_back(std::move(samples));
    }
    return out;
}

std::vector<std::vector<double>> gen_heavytail(const ExperimentConfig& cfg) {
    cfg.validate();
    std::vector<std::vector<double>> out;
    out.reserve(static_cast<std::size_t>(cfg.n_datasets));
    for (Index d = 0; d < cfg.n_datasets; ++d) {
        auto centers = stream_rng(cfg.seed, cell_id(kCenters, d));
        auto draws = stream_rng(cfg.seed, cell_id(kSignal, d));
        double shift = 0.0;
        if (cfg.heavytail_location_range > 0) {
            std::uniform_real_distribution<double> u(-cfg.heavytail_location_range, cfg.heavytail_location_range);
            shift = u(centers);
        }
        std::student_t_distribution<double> t(cfg.heavytail_df);
        std::vector<double> samples;
        samples.reserve(static_cast<std::size_t>(cfg.samples_per_dataset));
        for (Index k = 0; k < cfg.samples_per_dataset; ++k) samples.push_back(shift + t(draws));
        out.push_back(std::move(samples));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Samples to measures
// ---------------------------------------------------------------------------

DiscreteMeasure samples_to_measure(const std::vector<double>& samples, Index support_size, std::uint64_t seed) {
    const auto n = static_cast<Index>(samples.size());
    if (support_size < 1) throw ValidationError("support_size must be >= 1");
    if (support_size > n) throw ValidationError("support_size exceeds the sample count");
    const Matrix points = Eigen::Map<const Matrix>(samples.data(), 1, n);
    const auto km = kmeans(points, Vector::Ones(n), support_size, seed);

    Vector counts = Vector::Zero(km.centers.cols());
    for (Index i = 0; i < n; ++i) counts(nearest_center(km.centers, points.col(i))) += 1.0;

    std::vector<Index> keep;
    for (Index c = 0; c < counts.size(); ++c)
        if (counts(c) > 0) keep.push_back(c);
    Matrix support(1, static_cast<Index>(keep.size()));
    Vector mass(static_cast<Index>(keep.size()));
    for (std::size_t k = 0; k < keep.size(); ++k) {
        support(0, static_cast<Index>(k)) = km.centers(0, keep[k]);
        mass(static_cast<Index>(k)) = counts(keep[k]) / static_cast<double>(n);
    }
    return merge_duplicates(DiscreteMeasure(std::move(support), std::move(mass), true));
}

Vector kde_curve(const std::vector<double>& samples, const Vector& grid) {
    const auto n = static_cast<double>(samples.size());
    if (samples.size() < 2) throw ValidationError("kde_curve needs at least two samples");
    double mean = 0.0;
    for (double x : samples) mean += x;
    mean /= n;
    double var = 0.0;
    for (double x : samples) var += (x - mean) * (x - mean);
    var /= (n - 1.0);
    if (!(var > 0)) throw ValidationError("kde_curve: samples have zero variance");
    const double h = 1.06 * std::sqrt(var) * std::pow(n, -0.2);
    const double norm = 1.0 / (n * h * std::sqrt(2.0 * std::numbers::pi));

    Vector out(grid.size());
    for (Index g = 0; g < grid.size(); ++g) {
        double acc = 0.0;
        for (double x : samples) {
            const double z = (grid(g) - x) / h;
            acc += std::exp(-0.5 * z * z);
        }
        out(g) = acc * norm;
    }
    return out;
}

Matrix linspace_support(double lo, double hi, Index count) {
    if (count < 1) throw ValidationError("linspace needs at least one point");
    Matrix out(1, count);
    out.row(0) = Eigen::RowVectorXd::LinSpaced(count, lo, hi);
    return out;
}

DiscreteMeasure true_barycenter(const ExperimentConfig& cfg) {
    if (cfg.scenario == Scenario::heavytail) {
        Matrix grid = linspace_support(-20.0, 20.0, 400);
        Vector w(grid.cols());
        for (Index k = 0; k < grid.cols(); ++k) w(k) = student_t_density(grid(0, k), cfg.heavytail_df);
        return DiscreteMeasure(std::move(grid), std::move(w), true);
    }
    Matrix grid = linspace_support(-6.0, 6.0, 200);
    Vector w = (-0.5 * grid.row(0).array().square()).exp().transpose().matrix();
    return DiscreteMeasure(std::move(grid), std::move(w), true);
}

double wasserstein_1d(const DiscreteMeasure& a, const DiscreteMeasure& b, double p) {
    if (a.dim() != 1 || b.dim() != 1) throw ValidationError("wasserstein_1d needs 1-D measures");
    auto sorted = [](const DiscreteMeasure& m) {
        std::vector<std::pair<double, double>> atoms;
        const double total = m.weights().sum();
        for (Index i = 0; i < m.size(); ++i) atoms.emplace_back(m.points()(0, i), m.weight(i) / total);
        std::sort(atoms.begin(), atoms.end());
        return atoms;
    };
    const auto xa = sorted(a);
    const auto xb = sorted(b);
    std::size_t i = 0;
    std::size_t j = 0;
    double ra = xa[0].second;
    double rb = xb[0].second;
    double cost = 0.0;
    while (i < xa.size() && j < xb.size()) {
        const double t = std::min(ra, rb);
        const double d = std::abs(xa[i].first - xb[j].first);
        cost += t * (p == 1.0 ? d : std::pow(d, p));
        ra -= t;
        rb -= t;
        if (ra <= 1e-15 && i + 1 < xa.size()) {
            ra += xa[++i].second;
        } else if (ra <= 1e-15) {
            ++i;
        }
        if (rb <= 1e-15 && j + 1 < xb.size()) {
            rb += xb[++j].second;
        } else if (rb <= 1e-15) {
            ++j;
        }
    }
    return p == 1.0 ? cost : std::pow(cost, 1.0 / p);
}

// ---------------------------------------------------------------------------
// Studies
// ---------------------------------------------------------------------------

namespace {

std::vector<std::vector<double>> scenario_samples(const ExperimentConfig& cfg) {
    return cfg.scenario == Scenario::heavytail ? gen_heavytail(cfg) : gen_contamination(cfg);
}

std::vector<DiscreteMeasure> dataset_measures(const ExperimentConfig& cfg,
                                              const std::vector<std::vector<double>>& samples) {
    std::vector<DiscreteMeasure> out;
    out.reserve(samples.size());
    for (std::size_t d = 0; d < samples.size(); ++d) {
        out.push_back(samples_to_measure(samples[d], cfg.support_size,
                                         splitmix64(cfg.seed ^ cell_id(kKMeans, static_cast<Index>(d)))));
    }
    return out;
}

struct SweepInputs {
    std::vector<DiscreteMeasure> measures;
    Matrix support;
};

SweepInputs shared_measures(const ExperimentConfig& cfg, const std::vector<std::vector<double>>& samples) {
    std::vector<double> pooled;
    for (const auto& ds : samples) pooled.insert(pooled.end(), ds.begin(), ds.end());
    const auto base = samples_to_measure(pooled, std::min<Index>(cfg.support_size, static_cast<Index>(pooled.size())),
                                         splitmix64(cfg.seed ^ cell_id(kKMeans, 0)));
    SweepInputs out;
    out.support = base.points();
    for (const auto& ds : samples) {
        Vector counts = Vector::Zero(out.support.cols());
        for (double x : ds) counts(nearest_center(out.support, Vector::Constant(1, x))) += 1.0;
        out.measures.push_back(prune(DiscreteMeasure(out.support, counts, true), 0.0));
    }
    return out;
}

Matrix covering_grid(const std::vector<DiscreteMeasure>& measures, Index count) {
    double lo = kInf;
    double hi = -kInf;
    for (const auto& m : measures) {
        lo = std::min(lo, m.points().minCoeff());
        hi = std::max(hi, m.points().maxCoeff());
    }
    if (!(hi > lo)) hi = lo + 1.0;
    return linspace_support(lo, hi, count);
}

DiscreteMeasure solve_on_grid(const std::vector<DiscreteMeasure>& inputs, const Matrix& grid, const CostSpec& spec,
                              const SinkhornParams& params) {
    BarycenterProblem problem(inputs, spec);
    const auto res = ibp_barycenter(problem, grid, params);
    return prune(DiscreteMeasure(grid, res.mass, true));
}

}  // namespace

std::vector<RunRecord> run_lambda_sweep(const ExperimentConfig& cfg, const RecordSink& sink) {
    cfg.validate();
    if (cfg.scenario != Scenario::contamination && cfg.scenario != Scenario::heavytail)
        throw ValidationError("lambda sweep runs the contamination or heavytail scenario");
    const std::string tag = to_string(cfg.scenario);
    const auto truth = true_barycenter(cfg);
    const auto params = sweep_params(cfg);
    const std::vector<double> ratios =
        cfg.scenario == Scenario::heavytail ? std::vector<double>{cfg.contamination_ratio} : cfg.ratios;

    std::vector<RunRecord> records;
    auto emit = [&](RunRecord r) {
        if (sink) sink(r);
        records.push_back(std::move(r));
    };
    Matrix rwb(static_cast<Index>(cfg.lambda_grid.size()), static_cast<Index>(ratios.size()));
    Vector wb(static_cast<Index>(ratios.size()));
    for (std::size_t ri = 0; ri < ratios.size(); ++ri) {
        ExperimentConfig cell = cfg;
        cell.contamination_ratio = ratios[ri];
        const auto samples = scenario_samples(cell);
        std::vector<DiscreteMeasure> inputs;
        Matrix grid;
        if (cfg.shared_support) {
            auto shared = shared_measures(cell, samples);
            inputs = std::move(shared.measures);
            grid = std::move(shared.support);
        } else {
            inputs = dataset_measures(cell, samples);
            grid = covering_grid(inputs, cfg.barycenter_grid);
        }

        const auto classical = solve_on_grid(inputs, grid, CostSpec(cfg.p, kInf), params);
        wb(static_cast<Index>(ri)) = wasserstein_1d(classical, truth, 1.0);
        emit({tag, kInf, ratios[ri], "wb_error", wb(static_cast<Index>(ri)), cfg.seed});

        for (std::size_t li = 0; li < cfg.lambda_grid.size(); ++li) {
            const auto robust = solve_on_grid(inputs, grid, CostSpec(cfg.p, cfg.lambda_grid[li]), params);
            const double err = wasserstein_1d(robust, truth, 1.0);
            rwb(static_cast<Index>(li), static_cast<Index>(ri)) = err;
            emit({tag, cfg.lambda_grid[li], ratios[ri], "rwb_error", err, cfg.seed});
        }
    }
    const double nan = std::numeric_limits<double>::quiet_NaN();
    emit({tag, kInf, nan, "wb_error_mean", wb.mean(), cfg.seed});
    for (std::size_t li = 0; li < cfg.lambda_grid.size(); ++li) {
        emit(
            {tag, cfg.lambda_grid[li], nan, "rwb_error_mean", rwb.row(static_cast<Index>(li)).mean(), cfg.seed});
    }
    return records;
}

Index SweepSummary::best_lambda_index() const {
    Index best = 0;
    rwb_error.rowwise().mean().minCoeff(&best);
    return best;
}

SweepSummary summarize_sweep(const std::vector<RunRecord>& records) {
    SweepSummary out;
    auto index_of = [](std::vector<double>& v, double x) {
        for (std::size_t k = 0; k < v.size(); ++k)
            if (v[k] == x) return static_cast<Index>(k);
        v.push_back(x);
        return static_cast<Index>(v.size() - 1);
    };
    for (const auto& r : records) {
        if (r.metric == "rwb_error") index_of(out.lambdas, r.lambda);
        if (r.metric == "rwb_error" || r.metric == "wb_error") index_of(out.ratios, r.ratio);
    }
    out.rwb_error = Matrix::Constant(static_cast<Index>(out.lambdas.size()), static_cast<Index>(out.ratios.size()),
                                     std::numeric_limits<double>::quiet_NaN());
    out.wb_error = Vector::Constant(static_cast<Index>(out.ratios.size()), std::numeric_limits<double>::quiet_NaN());
    for (const auto& r : records) {
        if (r.metric == "rwb_error") out.rwb_error(index_of(out.lambdas, r.lambda), index_of(out.ratios, r.ratio)) = r.value;
        if (r.metric == "wb_error") out.wb_error(index_of(out.ratios, r.ratio)) = r.value;
    }
    return out;
}

double region_mass(const DiscreteMeasure& m, const PixelRect& region) {
    if (m.dim() != 2) throw ValidationError("region_mass needs a 2-D measure");
    double mass = 0.0;
    for (Index i = 0; i < m.size(); ++i) {
        const auto r = static_cast<Index>(std::lround(m.points()(0, i)));
        const auto c = static_cast<Index>(std::lround(m.points()(1, i)));
        if (region.contains(r, c)) mass += m.weight(i);
    }
    return mass / m.weights().sum();
}

ImageStudyResult run_image_study(const ExperimentConfig& cfg) {
    cfg.validate();
    const auto images = gen_ellipse_images(cfg);
    std::vector<DiscreteMeasure> inputs;
    inputs.reserve(images.size());
    for (const auto& img : images) inputs.push_back(image_to_measure(img));

    const BarycenterProblem classical(inputs, CostSpec(cfg.p, kInf));
    const BarycenterProblem robust(inputs, CostSpec(cfg.p, cfg.image_lambda));

    FreeSupportOptions options;
    options.sinkhorn = sweep_params(cfg);
    options.outer_max = 30;
    options.outer_tol = 1e-5;

    const Matrix init = kmeans_init_support(classical, cfg.R, splitmix64(cfg.seed ^ cell_id(kInit, 0)));
    auto wb_free = free_support_barycenter(classical, init, options);
    auto rwb_free = free_support_barycenter(robust, init, options);

    Matrix pixels(2, cfg.image_size * cfg.image_size);
    for (Index r = 0, k = 0; r < cfg.image_size; ++r)
        for (Index c = 0; c < cfg.image_size; ++c, ++k) pixels.col(k) << static_cast<double>(r), static_cast<double>(c);
    const auto wb_grid = ibp_barycenter(classical, pixels, options.sinkhorn);
    const auto rwb_grid = ibp_barycenter(robust, pixels, options.sinkhorn);
    // Free support started from the grid RWB: the first mass solve reproduces
    // it, every later step can only lower the objective.
    const auto refined = free_support_barycenter(robust, pixels, options);

    ImageStudyResult out{0, 0, 0, 0, rwb_grid.objective, refined.objective_trace.back(),
                         wb_free.barycenter, rwb_free.barycenter,
                         prune(DiscreteMeasure(pixels, wb_grid.mass, true)),
                         prune(DiscreteMeasure(pixels, rwb_grid.mass, true)), {}};
    out.outlier_mass_wb_free = region_mass(out.wb_free, cfg.outlier_region);
    out.outlier_mass_rwb_free = region_mass(out.rwb_free, cfg.outlier_region);
    out.outlier_mass_wb_fixed = region_mass(out.wb_fixed, cfg.outlier_region);
    out.outlier_mass_rwb_fixed = region_mass(out.rwb_fixed, cfg.outlier_region);

    const std::string tag = to_string(Scenario::ellipse_images);
    const double lam = cfg.image_lambda;
    out.records = {
        {tag, kInf, 0.0, "outlier_mass_free", out.outlier_mass_wb_free, cfg.seed},
        {tag, lam, 0.0, "outlier_mass_free", out.outlier_mass_rwb_free, cfg.seed},
        {tag, kInf, 0.0, "outlier_mass_fixed", out.outlier_mass_wb_fixed, cfg.seed},
        {tag, lam, 0.0, "outlier_mass_fixed", out.outlier_mass_rwb_fixed, cfg.seed},
        {tag, kInf, 0.0, "objective_free", wb_free.objective_trace.back(), cfg.seed},
        {tag, lam, 0.0, "objective_free", rwb_free.objective_trace.back(), cfg.seed},
        {tag, kInf, 0.0, "objective_fixed", wb_grid.objective, cfg.seed},
        {tag, lam, 0.0, "objective_fixed", rwb_grid.objective, cfg.seed},
        {tag, lam, 0.0, "objective_refined", out.objective_rwb_refined, cfg.seed},
    };
    return out;
}

std::vector<RunRecord> run_pipeline1d(const ExperimentConfig& cfg, const RecordSink& sink) {
    cfg.validate();
    const std::string tag = to_string(Scenario::pipeline1d);
    const auto samples = gen_contamination(cfg);

    std::vector<std::vector<double>> inliers;
    double removed = 0.0;
    double lo = kInf;
    double hi = -kInf;
    for (const auto& ds : samples) {
        const double q_lo = quantile(ds, cfg.tail_quantile);
        const double q_hi = quantile(ds, 1.0 - cfg.tail_quantile);
        std::vector<double> kept;
        for (double x : ds)
            if (x >= q_lo && x <= q_hi) kept.push_back(x);
        removed += static_cast<double>(ds.size() - kept.size());
        lo = std::min(lo, *std::min_element(kept.begin(), kept.end()));
        hi = std::max(hi, *std::max_element(kept.begin(), kept.end()));
        inliers.push_back(std::move(kept));
    }
    const Matrix grid = linspace_support(lo - 3.0, hi + 3.0, cfg.kde_grid);
    const Vector grid_vec = grid.row(0).transpose();

    std::vector<DiscreteMeasure> inputs;
    for (const auto& ds : inliers) inputs.push_back(prune(DiscreteMeasure(grid, kde_curve(ds, grid_vec), true)));

    const auto truth = true_barycenter(cfg);
    const auto params = sweep_params(cfg);
    const double ratio = cfg.contamination_ratio;
    std::vector<RunRecord> records;
    auto emit = [&](RunRecord r) {
        if (sink) sink(r);
        records.push_back(std::move(r));
    };
    emit({tag, kInf, ratio, "outliers_removed_mean", removed / static_cast<double>(samples.size()),
                       cfg.seed});
    const auto classical = solve_on_grid(inputs, grid, CostSpec(cfg.p, kInf), params);
    emit({tag, kInf, ratio, "wb_error", wasserstein_1d(classical, truth, 1.0), cfg.seed});
    for (double lam : cfg.lambda_grid) {
        const auto robust = solve_on_grid(inputs, grid, CostSpec(cfg.p, lam), params);
        emit({tag, lam, ratio, "rwb_error", wasserstein_1d(robust, truth, 1.0), cfg.seed});
    }
    return records;
}

std::vector<RunRecord> run_scenario(const ExperimentConfig& cfg, const RecordSink& sink) {
    switch (cfg.scenario) {
        case Scenario::ellipse_images: {
            auto records = run_image_study(cfg).records;
            if (sink)
                for (const auto& r : records) sink(r);
            return records;
        }
        case Scenario::contamination:
        case Scenario::heavytail: return run_lambda_sweep(cfg, sink);
        case Scenario::pipeline1d: return run_pipeline1d(cfg, sink);
    }
    throw ValidationError("unknown scenario");
}

}  // namespace robustot
