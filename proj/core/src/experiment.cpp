#include "nnreg/experiment.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <iterator>
#include <limits>
#include <set>

#include "json.hpp"

#include "nnreg/dataset.hpp"
#include "nnreg/errors.hpp"
#include "nnreg/hint.hpp"
#include "nnreg/idx.hpp"
#include "nnreg/metrics.hpp"
#include "nnreg/mtl.hpp"
#include "nnreg/rng.hpp"
#include "nnreg/synthetic.hpp"

namespace nnreg {

namespace {

using nlohmann::json;

const std::set<std::string>& known_config_keys() {
    static const std::set<std::string> keys = {
        "task",          "name",           "seeds",         "out_dir",        "force",
        "dataset",       "mnist_dir",      "subset",        "data_seed",      "train_count",
        "valid_count",   "test_count",     "image_side",    "point_count",    "feature_only_fraction",
        "label_only_fraction", "hidden",   "input_code",    "link_hidden",    "output_code",
        "learning_rate", "momentum",       "ae_learning_rate", "ae_momentum", "ae_l2",
        "batch_size",    "epochs",         "hint_measure",  "gamma",          "lambda",
        "hint_layer",    "hint_learning_rate", "probe",     "schedule",       "t1",
        "sigma",         "lambda_in_end",  "lambda_out_end", "use_input_ae",  "use_output_ae",
        "corruption_level"};
    return keys;
}

template <typename T>
void read_key(const json& j, const std::string& key, T& into) {
    if (!j.contains(key)) return;
    try {
        into = j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError("config key '" + key + "': " + e.what());
    }
}

ExperimentConfig config_from_json(const json& j) {
    if (!j.is_object()) throw ConfigError("config root must be a JSON object");
    for (const auto& item : j.items())
        if (known_config_keys().count(item.key()) == 0)
            throw ConfigError("unknown config key '" + item.key() + "'");

    if (j.count("task") == 0) throw ConfigError("config must name a task");

    ExperimentConfig cfg;
    read_key(j, "task", cfg.task);
    read_key(j, "name", cfg.name);
    read_key(j, "seeds", cfg.seeds);
    read_key(j, "out_dir", cfg.out_dir);
    read_key(j, "force", cfg.force);
    read_key(j, "dataset", cfg.dataset);
    read_key(j, "mnist_dir", cfg.mnist_dir);
    read_key(j, "subset", cfg.subset);
    read_key(j, "data_seed", cfg.data_seed);
    read_key(j, "train_count", cfg.train_count);
    read_key(j, "valid_count", cfg.valid_count);
    read_key(j, "test_count", cfg.test_count);
    read_key(j, "image_side", cfg.image_side);
    read_key(j, "point_count", cfg.point_count);
    read_key(j, "feature_only_fraction", cfg.feature_only_fraction);
    read_key(j, "label_only_fraction", cfg.label_only_fraction);
    read_key(j, "hidden", cfg.hidden);
    read_key(j, "input_code", cfg.input_code);
    read_key(j, "link_hidden", cfg.link_hidden);
    read_key(j, "output_code", cfg.output_code);
    read_key(j, "learning_rate", cfg.learning_rate);
    read_key(j, "momentum", cfg.momentum);
    read_key(j, "ae_learning_rate", cfg.ae_learning_rate);
    read_key(j, "ae_momentum", cfg.ae_momentum);
    read_key(j, "ae_l2", cfg.ae_l2);
    read_key(j, "batch_size", cfg.batch_size);
    read_key(j, "epochs", cfg.epochs);
    read_key(j, "hint_measure", cfg.hint_measure);
    read_key(j, "gamma", cfg.gamma);
    read_key(j, "lambda", cfg.lambda);
    read_key(j, "hint_layer", cfg.hint_layer);
    read_key(j, "hint_learning_rate", cfg.hint_learning_rate);
    read_key(j, "probe", cfg.probe);
    read_key(j, "schedule", cfg.schedule);
    read_key(j, "t1", cfg.t1);
    read_key(j, "sigma", cfg.sigma);
    read_key(j, "lambda_in_end", cfg.lambda_in_end);
    read_key(j, "lambda_out_end", cfg.lambda_out_end);
    read_key(j, "use_input_ae", cfg.use_input_ae);
    read_key(j, "use_output_ae", cfg.use_output_ae);
    read_key(j, "corruption_level", cfg.corruption_level);
    return cfg;
}

// Everything that defines the experiment; out_dir and force are delivery
// knobs and stay out, so replays into fresh directories hash identically.
json normalized_config_json(const ExperimentConfig& cfg) {
    json j;
    j["task"] = cfg.task;
    j["name"] = cfg.name;
    j["seeds"] = cfg.seeds;
    j["dataset"] = cfg.dataset;
    j["mnist_dir"] = cfg.mnist_dir;
    j["subset"] = cfg.subset;
    j["data_seed"] = cfg.data_seed;
    j["train_count"] = cfg.train_count;
    j["valid_count"] = cfg.valid_count;
    j["test_count"] = cfg.test_count;
    j["image_side"] = cfg.image_side;
    j["point_count"] = cfg.point_count;
    j["feature_only_fraction"] = cfg.feature_only_fraction;
    j["label_only_fraction"] = cfg.label_only_fraction;
    j["hidden"] = cfg.hidden;
    j["input_code"] = cfg.input_code;
    j["link_hidden"] = cfg.link_hidden;
    j["output_code"] = cfg.output_code;
    j["learning_rate"] = cfg.learning_rate;
    j["momentum"] = cfg.momentum;
    j["ae_learning_rate"] = cfg.ae_learning_rate;
    j["ae_momentum"] = cfg.ae_momentum;
    j["ae_l2"] = cfg.ae_l2;
    j["batch_size"] = cfg.batch_size;
    j["epochs"] = cfg.epochs;
    j["hint_measure"] = cfg.hint_measure;
    j["gamma"] = cfg.gamma;
    j["lambda"] = cfg.lambda;
    j["hint_layer"] = cfg.hint_layer;
    j["hint_learning_rate"] = cfg.hint_learning_rate;
    j["probe"] = cfg.probe;
    j["schedule"] = cfg.schedule;
    j["t1"] = cfg.t1;
    j["sigma"] = cfg.sigma;
    j["lambda_in_end"] = cfg.lambda_in_end;
    j["lambda_out_end"] = cfg.lambda_out_end;
    j["use_input_ae"] = cfg.use_input_ae;
    j["use_output_ae"] = cfg.use_output_ae;
    j["corruption_level"] = cfg.corruption_level;
    return j;
}

std::string fnv1a_hex(const std::string& text) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string fmt_g17(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header) : out_(path) {
        if (!out_) throw ConfigError("cannot open " + path.string() + " for writing");
        for (std::size_t i = 0; i < header.size(); ++i) out_ << (i ? "," : "") << header[i];
        out_ << "\n";
    }

    void row(const std::vector<double>& values) {
        for (std::size_t i = 0; i < values.size(); ++i) out_ << (i ? "," : "") << fmt_g17(values[i]);
        out_ << "\n";
    }

private:
    std::ofstream out_;
};

void prepare_out_dir(const std::filesystem::path& dir, bool force) {
    namespace fs = std::filesystem;
    if (fs::exists(dir)) {
        if (!fs::is_directory(dir)) throw ConfigError(dir.string() + " exists and is not a directory");
        if (!fs::is_empty(dir) && !force)
            throw ConfigError("output directory " + dir.string() + " is not empty (pass force to overwrite)");
    } else {
        fs::create_directories(dir);
    }
}

void aggregate_metrics(RunReport& rep) {
    if (rep.per_seed.empty()) return;
    for (const auto& [key, first_value] : rep.per_seed.front().metrics) {
        std::vector<double> values;
        values.reserve(rep.per_seed.size());
        for (const auto& sr : rep.per_seed) {
            const auto it = sr.metrics.find(key);
            if (it == sr.metrics.end())
                throw ConfigError("seed " + std::to_string(sr.seed) + " is missing metric '" + key + "'");
            values.push_back(it->second);
        }
        if (values.size() >= 3) {
            const Aggregate a = aggregate_runs(values);
            rep.aggregate_mean[key] = a.mean;
            rep.aggregate_std[key] = a.stddev;
        } else {
            double mean = 0.0;
            for (double v : values) mean += v;
            mean /= static_cast<double>(values.size());
            double var = 0.0;
            for (double v : values) var += (v - mean) * (v - mean);
            rep.aggregate_mean[key] = mean;
            rep.aggregate_std[key] = std::sqrt(var / static_cast<double>(values.size()));
        }
    }
}

// ---------------------------------------------------------------- datasets

struct ClassificationData {
    LabeledImageSet train, valid, test;
    std::size_t class_count = 0;
};

ClassificationData load_classification_data(const ExperimentConfig& cfg) {
    ClassificationData data;
    if (cfg.dataset == "mnist") {
        const std::filesystem::path dir = cfg.mnist_dir;
        if (!mnist_available(dir))
            throw ConfigError("mnist files not found under " + dir.string() +
                              " (need train-images-idx3-ubyte, train-labels-idx1-ubyte, "
                              "t10k-images-idx3-ubyte, t10k-labels-idx1-ubyte)");
        const LabeledImageSet train_src = load_idx(dir / "train-images-idx3-ubyte", dir / "train-labels-idx1-ubyte");
        const LabeledImageSet test_src = load_idx(dir / "t10k-images-idx3-ubyte", dir / "t10k-labels-idx1-ubyte");
        BenchmarkSplit split = build_benchmark(BenchmarkKind::Std, train_src, test_src, cfg.data_seed);
        split = subsample(split, cfg.subset, cfg.data_seed);
        data.train = std::move(split.train);
        data.valid = std::move(split.valid);
        data.test = std::move(split.test);
        data.class_count = 10;
        return data;
    }
    if (cfg.dataset == "synthetic") {
        const std::size_t total = cfg.train_count + cfg.valid_count + cfg.test_count;
        const LabeledImageSet all = gen_synthetic_two_class(total, cfg.image_side, cfg.data_seed);
        data.train = slice_set(all, 0, cfg.train_count);
        data.valid = slice_set(all, cfg.train_count, cfg.valid_count);
        data.test = slice_set(all, cfg.train_count + cfg.valid_count, cfg.test_count);
        data.class_count = 2;
        return data;
    }
    throw ConfigError("unknown dataset '" + cfg.dataset + "' (expected mnist or synthetic)");
}

// ----------------------------------------------------------- hint task

std::vector<LayerSpec> classifier_specs(std::size_t input_dim, const std::vector<std::size_t>& hidden,
                                        std::size_t classes) {
    if (hidden.empty()) throw ConfigError("classifier needs at least one hidden layer");
    std::vector<LayerSpec> specs;
    std::size_t in = input_dim;
    for (std::size_t h : hidden) {
        specs.push_back({in, h, Activation::Sigmoid});
        in = h;
    }
    specs.push_back({in, classes, Activation::Softmax});
    return specs;
}

SeedRunResult run_hint_seed(const ExperimentConfig& cfg, const ClassificationData& data, std::uint64_t seed,
                            const std::filesystem::path& out) {
    const auto specs = classifier_specs(data.train.images.cols(), cfg.hidden, data.class_count);
    Network net = init_weights(specs, seed);
    const std::size_t depth = specs.size();
    const std::size_t hint_layer = cfg.hint_layer == 0 ? depth - 1 : cfg.hint_layer;

    HintTrainConfig tc;
    tc.batch_size = cfg.batch_size == 0 ? 100 : cfg.batch_size;
    tc.hint.layer_index = hint_layer;
    tc.hint.measure = dissimilarity_from_name(cfg.hint_measure);
    tc.hint.gamma = cfg.gamma;
    tc.hint.lambda = cfg.lambda;
    tc.hint.class_count = data.class_count;

    OptimConfig oc_sup;
    oc_sup.learning_rate = cfg.learning_rate;
    oc_sup.momentum = cfg.momentum;
    OptimConfig oc_hint = oc_sup;
    if (cfg.hint_learning_rate > 0.0) oc_hint.learning_rate = cfg.hint_learning_rate;
    OptimizerState opt_sup = OptimizerState::for_network(net);
    OptimizerState opt_hint = OptimizerState::for_prefix(net, hint_layer);

    EarlyStopState best;
    best.patience = cfg.epochs + 1; // snapshot tracking only, no early exit

    std::vector<std::string> header = {"epoch", "j_sup_train", "j_hint_train", "valid_error"};
    if (cfg.probe)
        for (std::size_t k = 1; k <= depth; ++k) header.push_back("probe_l" + std::to_string(k));
    const std::string csv_name = "seed" + std::to_string(seed) + ".csv";
    CsvWriter csv(out / csv_name, header);

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        const HintEpochLosses el =
            train_epoch_hint(net, data.train.images, data.train.labels, tc, oc_sup, opt_sup, oc_hint, opt_hint,
                             epoch, seed);
        const double valid_error =
            classification_error(argmax_rows(forward(net, data.valid.images).output()), data.valid.labels);
        early_stop_update(best, valid_error, net);

        std::vector<double> row = {static_cast<double>(epoch), el.j_sup, el.j_hint, valid_error};
        if (cfg.probe) {
            const auto probe = invariance_probe(net, data.valid.images, data.valid.labels);
            row.insert(row.end(), probe.begin(), probe.end());
        }
        csv.row(row);
    }

    net.weights() = best.best_weights;
    const double test_error =
        classification_error(argmax_rows(forward(net, data.test.images).output()), data.test.labels);
    const std::string ckpt_name = "seed" + std::to_string(seed) + ".ckpt";
    save_checkpoint(net, out / ckpt_name);

    SeedRunResult result;
    result.seed = seed;
    result.metrics["valid_error"] = best.best_validation_loss;
    result.metrics["test_error"] = test_error;
    result.csv = csv_name;
    result.checkpoints = {ckpt_name};
    return result;
}

// ----------------------------------------------------------- mtl task

ScheduleSpec build_schedule(const ExperimentConfig& cfg) {
    ScheduleSpec spec;
    spec.kind = schedule_kind_from_name(cfg.schedule);
    spec.t1 = cfg.t1 > 0.0 ? cfg.t1 : 0.2 * static_cast<double>(cfg.epochs);
    spec.sigma = cfg.sigma > 0.0 ? cfg.sigma : static_cast<double>(cfg.epochs) / 5.0;
    spec.in_end = cfg.lambda_in_end;
    spec.out_end = cfg.lambda_out_end;
    if (!cfg.use_input_ae) {
        spec.in_start = 0.0;
        spec.in_end = 0.0;
    }
    if (!cfg.use_output_ae) {
        spec.out_start = 0.0;
        spec.out_end = 0.0;
    }
    if (!cfg.use_input_ae && !cfg.use_output_ae) {
        spec.sup_start = 1.0; // plain supervised baseline: constant weight
        spec.sup_end = 1.0;
    }
    validate_schedule(spec);
    return spec;
}

struct LandmarkData {
    Matrix2D train_x, train_y, valid_x, valid_y, test_x, test_y;
    std::size_t ref_a = 0, ref_b = 0;
};

LandmarkData load_landmark_data(const ExperimentConfig& cfg) {
    if (cfg.dataset != "synthetic")
        throw ConfigError("the structured landmark task runs on the synthetic dataset only");
    const std::size_t total = cfg.train_count + cfg.valid_count + cfg.test_count;
    const SyntheticLandmarkTask task =
        gen_synthetic_landmarks(total, cfg.point_count, cfg.image_side, cfg.data_seed);

    const auto rows_of = [](const Matrix2D& m, std::size_t begin, std::size_t count) {
        std::vector<std::size_t> idx(count);
        for (std::size_t i = 0; i < count; ++i) idx[i] = begin + i;
        return take_rows(m, idx);
    };
    LandmarkData data;
    data.train_x = rows_of(task.images, 0, cfg.train_count);
    data.train_y = rows_of(task.targets, 0, cfg.train_count);
    data.valid_x = rows_of(task.images, cfg.train_count, cfg.valid_count);
    data.valid_y = rows_of(task.targets, cfg.train_count, cfg.valid_count);
    data.test_x = rows_of(task.images, cfg.train_count + cfg.valid_count, cfg.test_count);
    data.test_y = rows_of(task.targets, cfg.train_count + cfg.valid_count, cfg.test_count);
    data.ref_a = task.ref_a;
    data.ref_b = task.ref_b;
    return data;
}

SeedRunResult run_mtl_seed(const ExperimentConfig& cfg, const LandmarkData& data, const ScheduleSpec& schedule,
                           std::uint64_t seed, const std::filesystem::path& out) {
    MtlDims dims;
    dims.input = data.train_x.cols();
    dims.input_code = cfg.input_code;
    dims.link_hidden = cfg.link_hidden;
    dims.output_code = cfg.output_code;
    dims.output = data.train_y.cols();
    MtlNetwork net(dims, seed);

    OptimConfig main_cfg;
    main_cfg.learning_rate = cfg.learning_rate;
    main_cfg.momentum = cfg.momentum;
    OptimConfig ae_cfg;
    ae_cfg.learning_rate = cfg.ae_learning_rate;
    ae_cfg.momentum = cfg.ae_momentum;
    ae_cfg.l2_alpha = cfg.ae_l2;
    MtlOptimizers opt = MtlOptimizers::make(net, main_cfg, ae_cfg);

    MtlTrainConfig tc;
    tc.batch_size = cfg.batch_size == 0 ? 10 : cfg.batch_size;
    tc.corruption_level = cfg.corruption_level;

    const TriModalDataset tri = make_trimodal(data.train_x, data.train_y, cfg.feature_only_fraction,
                                              cfg.label_only_fraction, cfg.data_seed);

    const std::string csv_name = "seed" + std::to_string(seed) + ".csv";
    CsvWriter csv(out / csv_name,
                  {"epoch", "lambda_sup", "lambda_in", "lambda_out", "j_sup_train", "j_in_train", "j_out_train",
                   "valid_mse"});

    double best_mse = std::numeric_limits<double>::infinity();
    std::vector<Matrix2D> best_snapshot;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        const MtlEpochLosses el = train_epoch_mtl(net, tri, schedule, opt, epoch, seed, tc);
        const double valid_mse = mtl_supervised_mse(net, data.valid_x, data.valid_y);
        if (!std::isfinite(valid_mse)) throw NumericalAbort("validation loss is not finite");
        if (valid_mse < best_mse) {
            best_mse = valid_mse;
            best_snapshot = net.snapshot();
        }
        csv.row({static_cast<double>(epoch), el.lambda.sup, el.lambda.in, el.lambda.out, el.j_sup, el.j_in, el.j_out,
                 valid_mse});
    }
    net.restore(best_snapshot);

    const Matrix2D pred = net.predict(data.test_x);
    std::vector<double> errors(pred.rows());
    for (std::size_t i = 0; i < pred.rows(); ++i)
        errors[i] = nrmse(shape_from_row(pred, i, data.ref_a, data.ref_b),
                          shape_from_row(data.test_y, i, data.ref_a, data.ref_b));
    double mean_nrmse = 0.0;
    for (double e : errors) mean_nrmse += e;
    mean_nrmse /= static_cast<double>(errors.size());

    SeedRunResult result;
    result.seed = seed;
    result.metrics["valid_mse"] = best_mse;
    result.metrics["test_auc"] = auc_cdf(errors);
    result.metrics["test_nrmse"] = mean_nrmse;
    result.csv = csv_name;

    const std::string stem = "seed" + std::to_string(seed);
    const std::pair<const char*, const Network*> segments[] = {{".encoder.ckpt", &net.encoder()},
                                                               {".input_decoder.ckpt", &net.input_decoder()},
                                                               {".link.ckpt", &net.link()},
                                                               {".output_encoder.ckpt", &net.output_encoder()},
                                                               {".output_decoder.ckpt", &net.output_decoder()}};
    for (const auto& [suffix, segment] : segments) {
        const std::string name = stem + suffix;
        save_checkpoint(*segment, out / name);
        result.checkpoints.push_back(name);
    }
    return result;
}

// ---------------------------------------------------------- report I/O

json report_to_json(const RunReport& rep, const json& config) {
    json j;
    j["task"] = rep.task;
    j["name"] = rep.name;
    j["config_hash"] = rep.config_hash;
    j["config"] = config;
    j["per_seed"] = json::array();
    for (const auto& sr : rep.per_seed) {
        json s;
        s["seed"] = sr.seed;
        s["metrics"] = sr.metrics;
        s["csv"] = sr.csv;
        s["checkpoints"] = sr.checkpoints;
        j["per_seed"].push_back(std::move(s));
    }
    json agg;
    for (const auto& [key, mean] : rep.aggregate_mean) {
        agg[key] = {{"mean", mean}, {"std", rep.aggregate_std.at(key)}};
    }
    j["aggregate"] = std::move(agg);
    j["check_metrics"] = rep.check_metrics;
    j["passed"] = rep.passed;
    j["wall_clock_seconds"] = rep.wall_clock_seconds;
    return j;
}

} // namespace

ExperimentConfig parse_config_text(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    return config_from_json(j);
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_config_text(text);
}

bool mnist_available(const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    return fs::exists(dir / "train-images-idx3-ubyte") && fs::exists(dir / "train-labels-idx1-ubyte") &&
           fs::exists(dir / "t10k-images-idx3-ubyte") && fs::exists(dir / "t10k-labels-idx1-ubyte");
}

std::filesystem::path resolve_out_dir(const ExperimentConfig& cfg) {
    if (!cfg.out_dir.empty()) return cfg.out_dir;
    const char* root = std::getenv("NNREG_OUT_ROOT");
    const std::filesystem::path base = root != nullptr && *root != '\0' ? root : "runs";
    return base / (cfg.name.empty() ? cfg.task : cfg.name);
}

RunReport run_experiment(const ExperimentConfig& cfg_in) {
    ExperimentConfig cfg = cfg_in;
    if (cfg.name.empty()) cfg.name = cfg.task;
    if (cfg.seeds.empty()) throw ConfigError("seed list must be nonempty");
    if (cfg.epochs == 0) throw ConfigError("epochs must be positive");

    const bool is_check_task = cfg.task == "gradcheck" || cfg.task == "quadratic_oracles";
    if (!is_check_task && cfg.task != "hint_classification" && cfg.task != "mtl_landmarks")
        throw ConfigError("unknown task '" + cfg.task +
                          "' (expected hint_classification, mtl_landmarks, gradcheck, or quadratic_oracles)");

    const std::filesystem::path out = resolve_out_dir(cfg);
    prepare_out_dir(out, cfg.force);

    const json config_json = normalized_config_json(cfg);
    RunReport rep;
    rep.task = cfg.task;
    rep.name = cfg.name;
    rep.config_hash = fnv1a_hex(config_json.dump());

    const auto t0 = std::chrono::steady_clock::now();
    if (cfg.task == "gradcheck") {
        const GradCheckReport gc = run_gradcheck_suite(cfg.seeds.front());
        std::cout << "gradcheck: " << gc.cases.size() << " cases, max relative error " << fmt_g17(gc.max_rel_err)
                  << " (threshold " << fmt_g17(gc.threshold) << "): " << (gc.passed ? "PASS" : "FAIL") << "\n";
        rep.check_metrics["case_count"] = static_cast<double>(gc.cases.size());
        rep.check_metrics["max_rel_err"] = gc.max_rel_err;
        rep.check_metrics["threshold"] = gc.threshold;
        rep.passed = gc.passed;
    } else if (cfg.task == "quadratic_oracles") {
        const QuadraticOracleReport qo = run_quadratic_oracles(cfg.seeds.front());
        std::cout << "trajectory residual " << fmt_g17(qo.max_trajectory_residual) << " (tol "
                  << fmt_g17(qo.trajectory_tol) << ")\n"
                  << "l1 grid residual   " << fmt_g17(qo.max_l1_residual) << " (tol " << fmt_g17(qo.l1_tol) << ")\n"
                  << "early-stop gap     " << fmt_g17(qo.max_earlystop_gap) << " (tol " << fmt_g17(qo.earlystop_tol)
                  << ")\n"
                  << (qo.passed ? "PASS" : "FAIL") << "\n";
        rep.check_metrics["trajectory_residual"] = qo.max_trajectory_residual;
        rep.check_metrics["l1_residual"] = qo.max_l1_residual;
        rep.check_metrics["earlystop_gap"] = qo.max_earlystop_gap;
        rep.passed = qo.passed;
    } else if (cfg.task == "hint_classification") {
        const ClassificationData data = load_classification_data(cfg);
        for (const std::uint64_t seed : cfg.seeds) {
            rep.per_seed.push_back(run_hint_seed(cfg, data, seed, out));
            const auto& m = rep.per_seed.back().metrics;
            std::cout << cfg.name << " seed " << seed << ": valid_error " << m.at("valid_error") << " test_error "
                      << m.at("test_error") << "\n";
        }
        aggregate_metrics(rep);
    } else {
        const LandmarkData data = load_landmark_data(cfg);
        const ScheduleSpec schedule = build_schedule(cfg);
        for (const std::uint64_t seed : cfg.seeds) {
            rep.per_seed.push_back(run_mtl_seed(cfg, data, schedule, seed, out));
            const auto& m = rep.per_seed.back().metrics;
            std::cout << cfg.name << " seed " << seed << ": valid_mse " << m.at("valid_mse") << " test_auc "
                      << m.at("test_auc") << "\n";
        }
        aggregate_metrics(rep);
    }
    rep.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    rep.report_path = out / "report.json";
    std::ofstream rout(rep.report_path);
    if (!rout) throw ConfigError("cannot write " + rep.report_path.string());
    rout << report_to_json(rep, config_json).dump(2) << "\n";
    return rep;
}

RunReport load_report(const std::filesystem::path& report_json) {
    std::ifstream in(report_json);
    if (!in) throw ConfigError("cannot open report " + report_json.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("report " + report_json.string() + " is not valid JSON: " + e.what());
    }
    RunReport rep;
    rep.report_path = report_json;
    rep.task = j.value("task", std::string{});
    rep.name = j.value("name", std::string{});
    rep.config_hash = j.value("config_hash", std::string{});
    rep.passed = j.value("passed", true);
    rep.wall_clock_seconds = j.value("wall_clock_seconds", 0.0);
    if (j.contains("per_seed")) {
        for (const auto& s : j.at("per_seed")) {
            SeedRunResult sr;
            sr.seed = s.value("seed", std::uint64_t{0});
            if (s.contains("metrics")) sr.metrics = s.at("metrics").get<std::map<std::string, double>>();
            sr.csv = s.value("csv", std::string{});
            if (s.contains("checkpoints")) sr.checkpoints = s.at("checkpoints").get<std::vector<std::string>>();
            rep.per_seed.push_back(std::move(sr));
        }
    }
    if (j.contains("aggregate")) {
        for (const auto& item : j.at("aggregate").items()) {
            rep.aggregate_mean[item.key()] = item.value().at("mean").get<double>();
            rep.aggregate_std[item.key()] = item.value().at("std").get<double>();
        }
    }
    if (j.contains("check_metrics")) rep.check_metrics = j.at("check_metrics").get<std::map<std::string, double>>();
    return rep;
}

std::string compare_table(const std::vector<RunReport>& reports, TableFormat format) {
    if (reports.empty()) throw ConfigError("compare_table needs at least one report");
    const auto& first = reports.front();
    for (const auto& rep : reports) {
        if (rep.task != first.task)
            throw ConfigError("task mismatch: '" + rep.task + "' vs '" + first.task + "'");
        for (const auto& [key, value] : first.aggregate_mean)
            if (rep.aggregate_mean.count(key) == 0)
                throw ConfigError("report '" + rep.name + "' is missing metric '" + key + "'");
        for (const auto& [key, value] : rep.aggregate_mean)
            if (first.aggregate_mean.count(key) == 0)
                throw ConfigError("report '" + first.name + "' is missing metric '" + key + "'");
    }

    std::string out;
    if (format == TableFormat::Markdown) {
        out += "| config |";
        for (const auto& [key, value] : first.aggregate_mean) out += " " + key + " |";
        out += "\n|---|";
        for (std::size_t i = 0; i < first.aggregate_mean.size(); ++i) out += "---|";
        out += "\n";
        for (const auto& rep : reports) {
            out += "| " + rep.name + " |";
            for (const auto& [key, value] : first.aggregate_mean) {
                char cell[64];
                std::snprintf(cell, sizeof cell, " %.2f±%.3f |", rep.aggregate_mean.at(key),
                              rep.aggregate_std.at(key));
                out += cell;
            }
            out += "\n";
        }
    } else {
        out += "config";
        for (const auto& [key, value] : first.aggregate_mean) out += "," + key + "_mean," + key + "_std";
        out += "\n";
        for (const auto& rep : reports) {
            out += rep.name;
            for (const auto& [key, value] : first.aggregate_mean)
                out += "," + fmt_g17(rep.aggregate_mean.at(key)) + "," + fmt_g17(rep.aggregate_std.at(key));
            out += "\n";
        }
    }
    return out;
}

} // namespace nnreg
