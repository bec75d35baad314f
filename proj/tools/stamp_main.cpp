// stamp: synthetic-benchmark generation, training, evaluation, ablations,
// gradient checking and report plots for attention-based MIL models.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "stamp/checkpoint.hpp"
#include "stamp/config.hpp"
#include "stamp/dataset.hpp"
#include "stamp/errors.hpp"
#include "stamp/experiment.hpp"
#include "stamp/gradcheck.hpp"
#include "stamp/report.hpp"
#include "stamp/synth.hpp"
#include "stamp/train.hpp"

namespace fs = std::filesystem;
using namespace stamp;

namespace {

struct CommonFlags {
    std::string config_path;
    FlagOverrides flags;
};

void add_override_flags(CLI::App* cmd, CommonFlags& cf, bool with_model_flags) {
    cmd->add_option("--config", cf.config_path, "JSON config file");
    cmd->add_option_function<std::string>(
        "--out", [&](const std::string& v) { cf.flags.out_dir = v; }, "Output directory");
    cmd->add_option_function<unsigned>(
        "--threads", [&](unsigned v) { cf.flags.threads = v; }, "Worker threads (0 = auto)");
    if (with_model_flags) {
        cmd->add_option_function<std::int64_t>(
            "--seed", [&](std::int64_t v) { cf.flags.seed = v; }, "Training seed");
        cmd->add_option_function<std::string>(
               "--model", [&](const std::string& v) { cf.flags.model_kind = v; },
               "Model kind")
            ->check(CLI::IsMember({"stamp", "maxpool", "meanpool", "abmil"}));
        cmd->add_option_function<int>(
            "--n-p", [&](int v) { cf.flags.patterns = v; }, "Pattern tokens per branch");
        cmd->add_option_function<double>(
            "--lambda", [&](double v) { cf.flags.lambda = v; },
            "Cross-entropy weight in the total loss");
        cmd->add_option_function<int>(
            "--epochs", [&](int v) { cf.flags.epochs = v; }, "Training epochs");
        cmd->add_option_function<std::string>(
            "--manifest", [&](const std::string& v) { cf.flags.manifest = v; },
            "Dataset manifest CSV");
    }
}

RunConfig resolve(const CommonFlags& cf) {
    std::optional<fs::path> file;
    if (!cf.config_path.empty()) file = cf.config_path;
    return parse_config(file, cf.flags);
}

LoadedDataset load_from_manifest(const RunConfig& cfg) {
    if (cfg.manifest.empty())
        throw ConfigError("no dataset manifest given (paths.manifest or --manifest)");
    auto index = read_manifest(cfg.manifest);
    auto data = load_dataset(index);
    if (data.feature_dim != cfg.model.input_dim)
        throw ConfigError("dataset has d=" + std::to_string(data.feature_dim) +
                          " but model.input_dim=" + std::to_string(cfg.model.input_dim) +
                          "; set model.input_dim to match");
    return data;
}

int cmd_synth(const CommonFlags& cf) {
    const RunConfig cfg = resolve(cf);
    const fs::path out = cfg.out_dir;
    const auto index = generate_synthetic_dataset(cfg.synth, out);
    write_run_json(cfg, "synth", out);
    std::cout << "wrote " << index.entries.size() << " bags under " << out / "bags"
              << "\nmanifest: " << out / "manifest.csv" << "\n";
    return 0;
}

int cmd_train(const CommonFlags& cf) {
    const RunConfig cfg = resolve(cf);
    const fs::path out = cfg.out_dir;
    const auto data = load_from_manifest(cfg);
    auto model = make_model(cfg.model_kind, cfg.model, cfg.train.seed);
    auto result = train(data, *model, cfg.train, cfg.eval_options());

    fs::create_directories(out);
    const fs::path ckpt_path = out / "checkpoint.smck";
    save_checkpoint(result.best, ckpt_path);
    write_history_csv(result.history, (out / "history.csv").string());
    write_run_json(cfg, "train", out);

    const auto& best = result.best.val_metrics;
    std::cout << "trained " << cfg.model_kind << " for " << cfg.train.epochs
              << " epochs (seed " << cfg.train.seed << ")\n"
              << "best epoch " << result.best_epoch << ": val auc " << best.auc << ", acc "
              << best.acc << "\ncheckpoint: " << ckpt_path << "\n";
    return 0;
}

int cmd_eval(const CommonFlags& cf) {
    const RunConfig cfg = resolve(cf);
    if (cfg.checkpoint.empty())
        throw ConfigError("eval needs --checkpoint (or paths.checkpoint)");
    const fs::path out = cfg.out_dir;
    const auto ckpt = load_checkpoint(cfg.checkpoint);
    auto model = model_from_checkpoint(ckpt);

    RunConfig data_cfg = cfg;
    data_cfg.model = ckpt.model_cfg; // the checkpoint defines the model geometry
    const auto data = load_from_manifest(data_cfg);
    const auto* bags = &data.test;
    if (cfg.split == "train") bags = &data.train;
    else if (cfg.split == "val") bags = &data.val;

    EvalOptions opts = cfg.eval_options();
    opts.split = cfg.split;
    opts.seed = static_cast<std::int64_t>(ckpt.train_cfg.seed);
    const auto result = evaluate(*model, *bags, opts);

    fs::create_directories(out);
    write_records_csv({result.record}, (out / "metrics.csv").string());
    write_scores_csv(result.scores, (out / "scores.csv").string());
    write_run_json(cfg, "eval", out);

    const auto& r = result.record;
    std::cout << "split " << r.split << " (" << r.n_pos << " pos / " << r.n_neg
              << " neg): acc " << r.acc << ", auc " << r.auc << ", precision " << r.precision
              << ", recall " << r.recall << ", f1 " << r.f1 << "\n";
    return 0;
}

int cmd_ablate(const CommonFlags& cf) {
    const RunConfig cfg = resolve(cf);
    const fs::path out = cfg.out_dir;
    LoadedDataset data;
    if (!cfg.manifest.empty()) {
        data = load_from_manifest(cfg);
    } else {
        std::cout << "no manifest given; generating the synthetic benchmark under "
                  << out / "data" << "\n";
        generate_synthetic_dataset(cfg.synth, out / "data");
        data = load_dataset(read_manifest(out / "data" / "manifest.csv"));
        if (data.feature_dim != cfg.model.input_dim)
            throw ConfigError("synth.feature_dim and model.input_dim disagree");
    }
    const auto result = ablation_suite(cfg.ablation, data, cfg.model, cfg.train, out,
                                       cfg.threads, cfg.eval_options());
    write_run_json(cfg, "ablate", out);

    std::cout << result.aggregates.size() << " of " << result.cells.size()
              << " cells completed; reports under " << out << "\n";
    for (const auto& f : result.failed_cells) std::cerr << "failed cell: " << f << "\n";
    return result.failed_cells.empty() ? 0 : 2;
}

int cmd_gradcheck(const CommonFlags& cf, double tol) {
    const RunConfig cfg = resolve(cf);
    GradCheckOptions opts;
    opts.tolerance = tol;
    const auto report = gradient_check(opts);

    std::cout << "gradient check (fd step " << report.fd_step << ", tolerance "
              << report.tolerance << ")\n";
    for (const auto& e : report.entries)
        std::cout << "  " << e.tensor << " [" << e.rows << "x" << e.cols
                  << "] max rel err " << e.max_rel_err << "\n";
    std::cout << (report.passed ? "PASS" : "FAIL") << " (max " << report.max_rel_err()
              << ", " << report.seconds << " s)\n";

    const fs::path out = cfg.out_dir;
    fs::create_directories(out);
    std::ofstream os(out / "gradcheck.json");
    os << "{\n  \"passed\": " << (report.passed ? "true" : "false")
       << ",\n  \"tolerance\": " << report.tolerance
       << ",\n  \"max_rel_err\": " << report.max_rel_err() << ",\n  \"tensors\": {\n";
    for (size_t i = 0; i < report.entries.size(); ++i)
        os << "    \"" << report.entries[i].tensor << "\": " << report.entries[i].max_rel_err
           << (i + 1 < report.entries.size() ? ",\n" : "\n");
    os << "  }\n}\n";
    write_run_json(cfg, "gradcheck", out);
    return report.passed ? 0 : 2;
}

int cmd_report(const std::string& in_dir) {
    if (!fs::exists(in_dir))
        throw ConfigError("report directory '" + in_dir + "' does not exist");
    std::vector<std::string> warnings;
    const auto written = generate_reports(in_dir, &warnings);
    for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
    for (const auto& f : written) std::cout << "wrote " << f << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Attention-based multiple-instance learning workbench"};
    app.require_subcommand(1);

    CommonFlags synth_cf, train_cf, eval_cf, ablate_cf, grad_cf;
    double grad_tol = 1e-4;
    std::string report_in;

    auto* synth = app.add_subcommand("synth", "Generate the synthetic benchmark dataset");
    add_override_flags(synth, synth_cf, false);

    auto* train_cmd = app.add_subcommand("train", "Train a model on a dataset manifest");
    add_override_flags(train_cmd, train_cf, true);

    auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on a split");
    add_override_flags(eval_cmd, eval_cf, true);
    eval_cmd->add_option_function<std::string>(
        "--checkpoint", [&](const std::string& v) { eval_cf.flags.checkpoint = v; },
        "Checkpoint file");
    eval_cmd->add_option_function<std::string>(
           "--split", [&](const std::string& v) { eval_cf.flags.split = v; },
           "Split to score")
        ->check(CLI::IsMember({"train", "val", "test"}));

    auto* ablate = app.add_subcommand("ablate", "Run the ablation experiment grid");
    add_override_flags(ablate, ablate_cf, true);

    auto* gradcheck_cmd =
        app.add_subcommand("gradcheck", "Finite-difference check of analytic gradients");
    add_override_flags(gradcheck_cmd, grad_cf, false);
    gradcheck_cmd->add_option("--tol", grad_tol, "Max relative error tolerance");

    auto* report_cmd = app.add_subcommand("report", "Render SVG plots from run CSVs");
    report_cmd->add_option("--in", report_in, "Directory holding run CSVs")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (synth->parsed()) return cmd_synth(synth_cf);
        if (train_cmd->parsed()) return cmd_train(train_cf);
        if (eval_cmd->parsed()) return cmd_eval(eval_cf);
        if (ablate->parsed()) return cmd_ablate(ablate_cf);
        if (gradcheck_cmd->parsed()) return cmd_gradcheck(grad_cf, grad_tol);
        if (report_cmd->parsed()) return cmd_report(report_in);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
