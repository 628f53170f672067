// Experiment runner: flat JSON configs bound to the training loops, per-seed
// CSV/checkpoint artifacts, aggregated JSON reports, comparison tables, and
// the gradient/optimizer self-check suites exposed as tasks.
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace nnreg {

struct ExperimentConfig {
    std::string task;        // hint_classification | mtl_landmarks | gradcheck | quadratic_oracles
    std::string name;        // row label in comparison tables
    std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
    // Delivery knobs, not experiment identity: excluded from the report's
    // embedded config and from the config hash.
    std::string out_dir;
    bool force = false;

    // dataset
    std::string dataset = "synthetic"; // synthetic | mnist (hint task)
    std::string mnist_dir = "data/mnist";
    std::string subset = "all";        // stratified train subset tag
    std::uint64_t data_seed = 99;
    std::size_t train_count = 2000;
    std::size_t valid_count = 400;
    std::size_t test_count = 400;
    std::size_t image_side = 20;       // synthetic generators
    std::size_t point_count = 10;      // landmarks per synthetic sample
    double feature_only_fraction = 0.25;
    double label_only_fraction = 0.25;

    // architecture
    std::vector<std::size_t> hidden = {300, 200, 100}; // classifier hidden dims
    std::size_t input_code = 128;                      // structured-task dims
    std::size_t link_hidden = 64;
    std::size_t output_code = 16;

    // optimization
    double learning_rate = 1e-3;
    double momentum = 0.9;
    double ae_learning_rate = 1e-3;
    double ae_momentum = 0.9;
    double ae_l2 = 1e-2;
    std::size_t batch_size = 0; // 0: task default (100 classification, 10 structured)
    std::size_t epochs = 100;

    // hint regularizer
    std::string hint_measure = "sed";
    double gamma = 1.0;
    double lambda = 1.0;        // 0 gives the plain supervised baseline
    std::size_t hint_layer = 0; // 0: last hidden
    double hint_learning_rate = 0.0; // 0: same as learning_rate
    bool probe = false;         // append per-layer invariance values to the CSV

    // structured-task schedule
    std::string schedule = "abridged_linear";
    double t1 = 0.0;    // 0: 20% of epochs
    double sigma = 0.0; // 0: epochs/5 (exponential kind)
    // Reconstruction weights after the ramp; nonzero keeps the auxiliary
    // tasks active to the end of training instead of pure pretraining.
    double lambda_in_end = 0.0;
    double lambda_out_end = 0.0;
    bool use_input_ae = true;
    bool use_output_ae = true;
    double corruption_level = 0.2;
};

ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig parse_config_text(const std::string& json_text);

struct SeedRunResult {
    std::uint64_t seed = 0;
    std::map<std::string, double> metrics;
    std::string csv;                      // relative to the report directory
    std::vector<std::string> checkpoints; // same
};

struct RunReport {
    std::string task;
    std::string name;
    std::string config_hash;
    std::vector<SeedRunResult> per_seed;
    // Discard-extremes aggregate for >= 3 seeds, plain mean/std otherwise.
    std::map<std::string, double> aggregate_mean;
    std::map<std::string, double> aggregate_std;
    // Residuals of the check tasks (gradcheck / quadratic_oracles).
    std::map<std::string, double> check_metrics;
    bool passed = true;
    double wall_clock_seconds = 0.0;
    std::filesystem::path report_path; // report.json location, when written
};

// Trains every seed sequentially (or runs the requested check suite), writes
// per-seed CSV logs and checkpoints plus report.json under the output
// directory, and never overwrites a non-empty directory unless force is set.
RunReport run_experiment(const ExperimentConfig& cfg);

RunReport load_report(const std::filesystem::path& report_json);

enum class TableFormat { Markdown, Csv };

// Rows = reports, columns = aggregated metrics as mean+-std in fixed key
// order. All reports must expose the same metric keys and task.
std::string compare_table(const std::vector<RunReport>& reports, TableFormat format);

// --- self-check suites (also wired as CLI tasks) ---

struct GradCheckCase {
    std::string label;
    double max_rel_err = 0.0;
    std::size_t entries = 0;
};

struct GradCheckReport {
    std::vector<GradCheckCase> cases;
    double max_rel_err = 0.0;
    double threshold = 1e-5;
    bool passed = false;
};

// 50 random layer/loss configurations plus the two composite objectives;
// every analytic gradient entry is compared against central finite
// differences (h = 1e-6) under a relative error with an absolute floor.
GradCheckReport run_gradcheck_suite(std::uint64_t seed);

struct QuadraticOracleReport {
    double max_trajectory_residual = 0.0; // literal GD vs closed form
    double max_l1_residual = 0.0;         // closed form vs refined grid search
    double max_earlystop_gap = 0.0;       // stop at 1/(eps*alpha) vs L2 shrinkage
    double trajectory_tol = 1e-10;
    double l1_tol = 1e-6;
    double earlystop_tol = 0.05;
    bool passed = false;
};

QuadraticOracleReport run_quadratic_oracles(std::uint64_t seed);

// True when the four standard IDX files exist under dir.
bool mnist_available(const std::filesystem::path& dir);

// Resolved output directory: cfg.out_dir when set, otherwise
// $NNREG_OUT_ROOT/<name> (falling back to runs/<name>).
std::filesystem::path resolve_out_dir(const ExperimentConfig& cfg);

} // namespace nnreg
