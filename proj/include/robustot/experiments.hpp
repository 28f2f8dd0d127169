#pragma once

#include "robustot/free_support.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

namespace robustot {

enum class Scenario { ellipse_images, contamination, heavytail, pipeline1d };

std::string to_string(Scenario s);
Scenario parse_scenario(const std::string& name);

/// Half-open pixel rectangle [row_begin, row_end) x [col_begin, col_end).
struct PixelRect {
    Index row_begin = 0;
    Index row_end = 0;
    Index col_begin = 0;
    Index col_end = 0;

    [[nodiscard]] bool empty() const { return row_end <= row_begin || col_end <= col_begin; }
    [[nodiscard]] bool contains(Index r, Index c) const {
        return r >= row_begin && r < row_end && c >= col_begin && c < col_end;
    }
    /// Upper-right corner block with side size / 4.
    static PixelRect upper_right_corner(Index size) {
        const Index side = std::max<Index>(1, size / 4);
        return {0, side, size - side, size};
    }
};

struct ExperimentConfig {
    Scenario scenario = Scenario::contamination;
    std::uint64_t seed = 1;
    Index n_datasets = 20;
    Index samples_per_dataset = 500;
    Index support_size = 50;
    double contamination_ratio = 0.0;
    std::vector<double> ratios{0.0, 0.05, 0.10, 0.15, 0.20, 0.25};
    std::vector<double> lambda_grid{10, 20, 30, 40, 50, 60, 70};
    double p = 1.0;

    // Sweep solver settings (shared by the WB and every RWB run).
    double epsilon = 0.05;       ///< absolute entropic regularization
    Index barycenter_grid = 200;  ///< fixed support points for IBP (per-dataset supports)
    /// One k-means support over the pooled samples; every dataset becomes its
    /// histogram there and the barycenter lives on the same points. Otherwise
    /// each dataset gets its own k-means support and the barycenter an
    /// equispaced grid of `barycenter_grid` points.
    bool shared_support = true;
    Index max_iter = 5'000;
    double tol = 1e-7;

    // Signal / contamination / heavy-tail laws.
    double signal_center_range = 20.0;   ///< Type 1 centers ~ U(-r, r)
    double outlier_center_low = 30.0;    ///< Type 2 centers ~ U(low, high)
    double outlier_center_high = 70.0;
    double heavytail_df = 3.0;
    double heavytail_location_range = 50.0;  ///< m ~ U(-r, r)

    // Image study.
    Index image_size = 20;
    Index R = 40;
    PixelRect outlier_region = PixelRect::upper_right_corner(20);
    Index max_outliers = 5;
    double image_lambda = 2.5;

    // Generic 1-D pipeline.
    double tail_quantile = 0.005;
    Index kde_grid = 200;

    void validate() const;

    /// Desk-scale defaults for a scenario.
    static ExperimentConfig desk(Scenario s, std::uint64_t seed);
    /// Sizes used in the published study.
    static ExperimentConfig paper_scale(Scenario s, std::uint64_t seed);
};

struct RunRecord {
    std::string scenario;
    double lambda = kInf;  ///< kInf for classical (untruncated) runs
    double ratio = 0.0;    ///< NaN for aggregates across ratios
    std::string metric;
    double value = 0.0;
    std::uint64_t seed = 0;
};

/// CSV with header `scenario,lambda,ratio,metric,value,seed`. Values use
/// the shortest round-trip representation; infinite lambda prints as `inf`, an aggregate
/// ratio as `all`.
std::string format_run_records(const std::vector<RunRecord>& records, bool header = true);
void write_run_records(std::ostream& out, const std::vector<RunRecord>& records, bool header = true);

/// Receives each record as soon as it is produced.
using RecordSink = std::function<void(const RunRecord&)>;

/// Independent generator for cell `stream` of a run seeded with `seed`.
std::mt19937_64 stream_rng(std::uint64_t seed, std::uint64_t stream);

// ---------------------------------------------------------------------------
// Generators
// ---------------------------------------------------------------------------

/// Two concentric random ellipse outlines plus 1..max_outliers random pixels
/// inside `outlier_region`. Ellipses never enter the default corner region.
std::vector<Image> gen_ellipse_images(const ExperimentConfig& cfg);

/// Per dataset: floor(ratio * m) draws from N(mu1, 1), mu1 ~ U(30, 70), and
/// the rest from N(mu0, 1), mu0 ~ U(-20, 20). Draw streams are shared
/// across ratios so larger ratios replace a superset of signal draws.
std::vector<std::vector<double>> gen_contamination(const ExperimentConfig& cfg);

/// Per dataset: t(df) draws shifted by m ~ U(-r, r).
std::vector<std::vector<double>> gen_heavytail(const ExperimentConfig& cfg);

// ---------------------------------------------------------------------------
// Samples to measures
// ---------------------------------------------------------------------------

/// 1-D k-means (k-means++ seeding, <= 100 Lloyd steps) support; mass is the
/// fraction of samples nearest each center. Coincident centers are merged.
DiscreteMeasure samples_to_measure(const std::vector<double>& samples, Index support_size, std::uint64_t seed);

/// Gaussian KDE on `grid` with Silverman's bandwidth 1.06 sigma n^(-1/5).
Vector kde_curve(const std::vector<double>& samples, const Vector& grid);

/// `count` equispaced points on [lo, hi] as a 1 x count matrix.
Matrix linspace_support(double lo, double hi, Index count);

/// Reference barycenter for a scenario: discretized N(0,1) on 200 points
/// over [-6, 6] (contamination), discretized t(df) density on 400 points over
/// [-20, 20] (heavytail).
DiscreteMeasure true_barycenter(const ExperimentConfig& cfg);

/// Exact W_p between 1-D measures (quantile coupling).
double wasserstein_1d(const DiscreteMeasure& a, const DiscreteMeasure& b, double p = 1.0);

// ---------------------------------------------------------------------------
// Studies
// ---------------------------------------------------------------------------

/// WB (lambda = inf) and RWB for every lambda in the grid and every ratio,
/// each scored by its exact 1-D W1 distance to the reference barycenter.
/// Emits `wb_error` / `rwb_error` per (lambda, ratio) and the per-lambda
/// means across ratios (`rwb_error_mean`, `wb_error_mean`).
std::vector<RunRecord> run_lambda_sweep(const ExperimentConfig& cfg, const RecordSink& sink = {});

struct SweepSummary {
    std::vector<double> lambdas;
    std::vector<double> ratios;
    Matrix rwb_error;  ///< lambdas x ratios
    Vector wb_error;   ///< per ratio
    [[nodiscard]] Index best_lambda_index() const;
};

SweepSummary summarize_sweep(const std::vector<RunRecord>& records);

struct ImageStudyResult {
    double outlier_mass_wb_free = 0.0;
    double outlier_mass_rwb_free = 0.0;
    double outlier_mass_wb_fixed = 0.0;
    double outlier_mass_rwb_fixed = 0.0;
    double objective_rwb_fixed = 0.0;  ///< feasible-plan cost of the IBP grid barycenter
    double objective_rwb_refined = 0.0;  ///< free support started from that barycenter
    DiscreteMeasure wb_free;
    DiscreteMeasure rwb_free;
    DiscreteMeasure wb_fixed;
    DiscreteMeasure rwb_fixed;
    std::vector<RunRecord> records;
};

/// Mass of a 2-D measure whose nearest pixel lies in `region`.
double region_mass(const DiscreteMeasure& m, const PixelRect& region);

/// Ellipse-image comparison: free-support WB / RWB (R points, k-means init),
/// fixed-support WB / RWB on the full pixel grid, and free support refined
/// from the fixed-support RWB.
ImageStudyResult run_image_study(const ExperimentConfig& cfg);

/// Generic 1-D pipeline: quantile outlier split (two-sided `tail_quantile`),
/// KDE of each dataset on a shared grid, WB / RWB of the KDE measures.
std::vector<RunRecord> run_pipeline1d(const ExperimentConfig& cfg, const RecordSink& sink = {});

/// Dispatches on cfg.scenario.
std::vector<RunRecord> run_scenario(const ExperimentConfig& cfg, const RecordSink& sink = {});

}  // namespace robustot
