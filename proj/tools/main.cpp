// Command-line front end: experiment runs from JSON configs, the gradient and
// optimizer self-check suites, synthetic dataset generation, and report
// comparison tables.
//
// Exit codes: 0 ok, 2 config/usage error, 3 numerical abort, 4 failed check.
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "nnreg/errors.hpp"
#include "nnreg/experiment.hpp"
#include "nnreg/idx.hpp"
#include "nnreg/synthetic.hpp"

namespace {

namespace fs = std::filesystem;

void prepare_dir(const fs::path& dir, bool force) {
    if (fs::exists(dir)) {
        if (!fs::is_directory(dir)) throw nnreg::ConfigError(dir.string() + " exists and is not a directory");
        if (!fs::is_empty(dir) && !force)
            throw nnreg::ConfigError("output directory " + dir.string() + " is not empty (pass --force to overwrite)");
    } else {
        fs::create_directories(dir);
    }
}

void write_targets_csv(const fs::path& path, const nnreg::Matrix2D& targets) {
    std::ofstream out(path);
    if (!out) throw nnreg::ConfigError("cannot write " + path.string());
    for (std::size_t c = 0; c < targets.cols(); ++c) out << (c ? "," : "") << "t" << c;
    out << "\n";
    char buf[32];
    for (std::size_t r = 0; r < targets.rows(); ++r) {
        for (std::size_t c = 0; c < targets.cols(); ++c) {
            std::snprintf(buf, sizeof buf, "%.17g", targets(r, c));
            out << (c ? "," : "") << buf;
        }
        out << "\n";
    }
}

int run_gen_data(const std::string& kind, const std::string& out_dir, std::size_t count, std::size_t side,
                 std::size_t points, std::uint64_t seed, bool force) {
    const fs::path dir = out_dir.empty() ? fs::path("data") / kind : fs::path(out_dir);
    prepare_dir(dir, force);

    nlohmann::json manifest;
    manifest["kind"] = kind;
    manifest["seed"] = seed;
    manifest["count"] = count;
    manifest["image_side"] = side;

    if (kind == "landmarks") {
        const nnreg::SyntheticLandmarkTask task = nnreg::gen_synthetic_landmarks(count, points, side, seed);
        nnreg::LabeledImageSet set;
        set.images = task.images;
        set.labels.assign(count, 0); // images-only container; coordinates live in targets.csv
        set.image_rows = side;
        set.image_cols = side;
        nnreg::save_idx(set, dir / "images-idx3-ubyte", dir / "labels-idx1-ubyte");
        write_targets_csv(dir / "targets.csv", task.targets);
        manifest["point_count"] = points;
        manifest["ref_a"] = task.ref_a;
        manifest["ref_b"] = task.ref_b;
        manifest["files"] = {"images-idx3-ubyte", "labels-idx1-ubyte", "targets.csv"};
    } else if (kind == "two_class") {
        const nnreg::LabeledImageSet set = nnreg::gen_synthetic_two_class(count, side, seed);
        nnreg::save_idx(set, dir / "images-idx3-ubyte", dir / "labels-idx1-ubyte");
        manifest["classes"] = 2;
        manifest["files"] = {"images-idx3-ubyte", "labels-idx1-ubyte"};
    } else {
        throw nnreg::ConfigError("unknown gen-data kind '" + kind + "' (expected landmarks or two_class)");
    }

    std::ofstream mout(dir / "manifest.json");
    if (!mout) throw nnreg::ConfigError("cannot write manifest under " + dir.string());
    mout << manifest.dump(2) << "\n";
    std::cout << "wrote " << kind << " dataset (" << count << " samples) to " << dir.string() << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"feedforward network training with reconstruction and invariance regularizers"};
    app.require_subcommand(1);

    std::string config_path, out_dir;
    std::size_t seed_count = 0;
    bool force = false;
    auto* run = app.add_subcommand("run", "run an experiment from a JSON config");
    run->add_option("config", config_path, "config file")->required();
    run->add_option("--seeds", seed_count, "use seeds 1..N instead of the config's list");
    run->add_option("--out", out_dir, "output directory (overrides the config)");
    run->add_flag("--force", force, "allow writing into a non-empty output directory");

    std::uint64_t check_seed = 1234;
    auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference check of every gradient path");
    gradcheck->add_option("--seed", check_seed, "suite seed");
    auto* oracles = app.add_subcommand("oracles", "closed-form optimizer oracle checks");
    oracles->add_option("--seed", check_seed, "suite seed");

    std::string gen_kind, gen_out;
    std::size_t gen_count = 1000, gen_side = 20, gen_points = 10;
    std::uint64_t gen_seed = 99;
    bool gen_force = false;
    auto* gen = app.add_subcommand("gen-data", "generate a synthetic dataset as IDX files + manifest");
    gen->add_option("kind", gen_kind, "landmarks or two_class")->required();
    gen->add_option("--out", gen_out, "output directory (default data/<kind>)");
    gen->add_option("--count", gen_count, "sample count");
    gen->add_option("--side", gen_side, "image side in pixels");
    gen->add_option("--points", gen_points, "landmarks per sample (landmarks kind)");
    gen->add_option("--seed", gen_seed, "generator seed");
    gen->add_flag("--force", gen_force, "allow writing into a non-empty output directory");

    std::vector<std::string> report_paths;
    std::string table_format = "markdown";
    auto* compare = app.add_subcommand("compare", "tabulate aggregated metrics of several reports");
    compare->add_option("reports", report_paths, "report.json files")->required();
    compare->add_option("--format", table_format, "markdown or csv");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (run->parsed()) {
            nnreg::ExperimentConfig cfg = nnreg::load_config(config_path);
            if (seed_count > 0) {
                cfg.seeds.clear();
                for (std::size_t i = 1; i <= seed_count; ++i) cfg.seeds.push_back(i);
            }
            if (!out_dir.empty()) cfg.out_dir = out_dir;
            if (force) cfg.force = true;
            const nnreg::RunReport rep = nnreg::run_experiment(cfg);
            std::cout << "report: " << rep.report_path.string() << "\n";
            return rep.passed ? 0 : 4;
        }
        if (gradcheck->parsed()) {
            const nnreg::GradCheckReport rep = nnreg::run_gradcheck_suite(check_seed);
            for (const auto& c : rep.cases)
                if (c.max_rel_err >= rep.threshold)
                    std::cout << "FAIL " << c.label << ": max rel err " << c.max_rel_err << "\n";
            std::cout << rep.cases.size() << " cases, max relative error " << rep.max_rel_err << " (threshold "
                      << rep.threshold << "): " << (rep.passed ? "PASS" : "FAIL") << "\n";
            return rep.passed ? 0 : 4;
        }
        if (oracles->parsed()) {
            const nnreg::QuadraticOracleReport rep = nnreg::run_quadratic_oracles(check_seed);
            std::cout << "trajectory residual " << rep.max_trajectory_residual << " (tol " << rep.trajectory_tol
                      << ")\n"
                      << "l1 grid residual   " << rep.max_l1_residual << " (tol " << rep.l1_tol << ")\n"
                      << "early-stop gap     " << rep.max_earlystop_gap << " (tol " << rep.earlystop_tol << ")\n"
                      << (rep.passed ? "PASS" : "FAIL") << "\n";
            return rep.passed ? 0 : 4;
        }
        if (gen->parsed()) return run_gen_data(gen_kind, gen_out, gen_count, gen_side, gen_points, gen_seed, gen_force);
        if (compare->parsed()) {
            std::vector<nnreg::RunReport> reports;
            reports.reserve(report_paths.size());
            for (const auto& p : report_paths) reports.push_back(nnreg::load_report(p));
            nnreg::TableFormat fmt;
            if (table_format == "markdown" || table_format == "md")
                fmt = nnreg::TableFormat::Markdown;
            else if (table_format == "csv")
                fmt = nnreg::TableFormat::Csv;
            else
                throw nnreg::ConfigError("unknown table format '" + table_format + "'");
            std::cout << nnreg::compare_table(reports, fmt);
            return 0;
        }
    } catch (const nnreg::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const nnreg::NumericalAbort& e) {
        std::cerr << "numerical abort: " << e.what() << "\n";
        return 3;
    } catch (const nnreg::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
