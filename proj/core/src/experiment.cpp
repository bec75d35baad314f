#include "stamp/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>

#include "stamp/errors.hpp"
#include "stamp/mil_model.hpp"
#include "stamp/parallel.hpp"
#include "serde.hpp"

namespace stamp {

namespace {

double mean_of(const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double pop_std(const std::vector<double>& v, double mean) {
    double s = 0;
    for (double x : v) s += (x - mean) * (x - mean);
    return std::sqrt(s / static_cast<double>(v.size()));
}

} // namespace

AggregateRow aggregate_records(const std::string& tag,
                               const std::vector<MetricsRecord>& records) {
    if (records.empty()) throw ValueError("aggregate_records: no records");
    AggregateRow row;
    row.tag = tag;
    row.runs = static_cast<int>(records.size());
    std::vector<double> acc, auc_v, prec, rec, f1;
    for (const auto& r : records) {
        acc.push_back(r.acc);
        auc_v.push_back(r.auc);
        prec.push_back(r.precision);
        rec.push_back(r.recall);
        f1.push_back(r.f1);
    }
    row.acc_mean = mean_of(acc);
    row.auc_mean = mean_of(auc_v);
    row.precision_mean = mean_of(prec);
    row.recall_mean = mean_of(rec);
    row.f1_mean = mean_of(f1);
    row.acc_std = pop_std(acc, row.acc_mean);
    row.auc_std = pop_std(auc_v, row.auc_mean);
    row.precision_std = pop_std(prec, row.precision_mean);
    row.recall_std = pop_std(rec, row.recall_mean);
    row.f1_std = pop_std(f1, row.f1_mean);
    return row;
}

SeedRunResult seed_averaged_run(const LoadedDataset& data, const ModelConfig& model_cfg,
                                const TrainConfig& train_cfg, const SeedRunOptions& opts) {
    if (opts.seeds.empty()) throw ValueError("seed_averaged_run: need at least one seed");
    model_cfg.validate();
    train_cfg.validate();

    const size_t n = opts.seeds.size();
    std::vector<std::optional<MetricsRecord>> records(n);
    std::vector<std::optional<Checkpoint>> checkpoints(n);
    std::vector<std::string> failures(n);

    parallel_for(n, opts.threads, [&](size_t i) {
        const auto seed = opts.seeds[i];
        try {
            TrainConfig tc = train_cfg;
            tc.seed = static_cast<std::uint64_t>(seed);
            auto model = make_model(opts.model_kind, model_cfg, tc.seed);
            auto result = train(data, *model, tc, opts.eval);

            auto best = model_from_checkpoint(result.best);
            EvalOptions eopts = opts.eval;
            eopts.split = "test";
            eopts.seed = seed;
            auto ev = evaluate(*best, data.test, eopts);
            records[i] = ev.record;
            if (opts.keep_checkpoints) checkpoints[i] = std::move(result.best);
        } catch (const std::exception& e) {
            failures[i] = e.what();
        }
    });

    std::string failed;
    for (size_t i = 0; i < n; ++i)
        if (!records[i].has_value()) {
            if (!failed.empty()) failed += "; ";
            failed += "seed " + std::to_string(opts.seeds[i]) + ": " +
                      (failures[i].empty() ? "unknown error" : failures[i]);
        }
    if (!failed.empty())
        throw PartialResultsError("seed_averaged_run failed for " + failed);

    SeedRunResult out;
    for (size_t i = 0; i < n; ++i) out.per_seed.push_back(*records[i]);
    for (size_t i = 0; i < n; ++i)
        if (checkpoints[i]) out.checkpoints.push_back(std::move(*checkpoints[i]));
    out.aggregate = aggregate_records(opts.model_kind, out.per_seed);
    return out;
}

void AblationGrid::validate() const {
    if (pattern_counts.empty() || branch_modes.empty() || embed_variants.empty() ||
        agg_modes.empty() || seeds.empty())
        throw ConfigError("ablation grid: every axis needs at least one value");
    for (int np : pattern_counts)
        if (np < 1) throw ConfigError("ablation grid: pattern counts must be >= 1");
}

namespace {

std::string cell_tag(const AblationCell& c) {
    std::ostringstream os;
    os << "np" << c.patterns << '_' << branch_mode_name(c.branch_mode) << '_'
       << embed_variant_name(c.embed_variant) << '_' << agg_mode_name(c.agg_mode);
    return os.str();
}

} // namespace

std::vector<AblationCell> expand_grid(const AblationGrid& grid) {
    grid.validate();
    std::vector<AblationCell> cells;
    std::set<std::string> seen;
    auto push = [&](AblationCell c, const std::string& axis) {
        c.axis = axis;
        c.tag = cell_tag(c);
        if (seen.insert(c.tag).second) cells.push_back(std::move(c));
    };

    // Default modes are the first entries of each axis list.
    const BranchMode branch0 = grid.branch_modes.front();
    const EmbedVariant embed0 = grid.embed_variants.front();
    const AggMode agg0 = grid.agg_modes.front();

    for (int np : grid.pattern_counts) {
        AblationCell c;
        c.patterns = np;
        c.branch_mode = branch0;
        c.embed_variant = embed0;
        c.agg_mode = agg0;
        push(c, "patterns");
    }
    for (BranchMode b : grid.branch_modes) {
        if (b == branch0) continue;
        for (int np : grid.pattern_counts) {
            AblationCell c;
            c.patterns = np;
            c.branch_mode = b;
            c.embed_variant = embed0;
            c.agg_mode = agg0;
            push(c, "branch");
        }
    }
    for (EmbedVariant v : grid.embed_variants) {
        if (v == embed0) continue;
        for (int np : grid.pattern_counts) {
            AblationCell c;
            c.patterns = np;
            c.branch_mode = branch0;
            c.embed_variant = v;
            c.agg_mode = agg0;
            push(c, "embed");
        }
    }
    for (AggMode a : grid.agg_modes) {
        if (a == agg0) continue;
        for (int np : grid.pattern_counts) {
            AblationCell c;
            c.patterns = np;
            c.branch_mode = branch0;
            c.embed_variant = embed0;
            c.agg_mode = a;
            push(c, "agg");
        }
    }
    return cells;
}

namespace {

void write_aggregates_csv(const std::vector<AggregateRow>& rows, const std::string& path) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw FormatError("cannot open '" + path + "' for writing");
    os << "tag,runs,acc_mean,acc_std,auc_mean,auc_std,precision_mean,precision_std,"
          "recall_mean,recall_std,f1_mean,f1_std\n";
    os.precision(17);
    for (const auto& r : rows)
        os << r.tag << ',' << r.runs << ',' << r.acc_mean << ',' << r.acc_std << ','
           << r.auc_mean << ',' << r.auc_std << ',' << r.precision_mean << ','
           << r.precision_std << ',' << r.recall_mean << ',' << r.recall_std << ','
           << r.f1_mean << ',' << r.f1_std << '\n';
}

// Table shaped like the pattern-number sweep: one row per pattern count at
// the default modes, the five metric columns as means over seeds.
void write_pattern_table_csv(const AblationResult& res,
                             const std::vector<int>& pattern_counts,
                             const std::string& path) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw FormatError("cannot open '" + path + "' for writing");
    os << "patterns,acc,auc,precision,recall,f1\n";
    os.precision(17);
    for (int np : pattern_counts) {
        for (size_t i = 0; i < res.cells.size(); ++i) {
            if (res.cells[i].axis != "patterns" || res.cells[i].patterns != np) continue;
            for (const auto& agg : res.aggregates)
                if (agg.tag == res.cells[i].tag) {
                    os << np << ',' << agg.acc_mean << ',' << agg.auc_mean << ','
                       << agg.precision_mean << ',' << agg.recall_mean << ','
                       << agg.f1_mean << '\n';
                }
            break;
        }
    }
}

// Long format for the paired-bar figures: one row per
// (figure axis, variant, pattern count, metric).
void write_figures_long_csv(const AblationResult& res, const std::string& path) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw FormatError("cannot open '" + path + "' for writing");
    os << "figure,variant,patterns,metric,mean,std\n";
    os.precision(17);
    auto emit = [&](const std::string& figure, const std::string& variant,
                    const AblationCell& cell, const AggregateRow& agg) {
        const std::pair<const char*, std::pair<double, double>> metrics[] = {
            {"acc", {agg.acc_mean, agg.acc_std}},
            {"auc", {agg.auc_mean, agg.auc_std}},
            {"precision", {agg.precision_mean, agg.precision_std}},
            {"recall", {agg.recall_mean, agg.recall_std}},
            {"f1", {agg.f1_mean, agg.f1_std}}};
        for (const auto& [metric, ms] : metrics)
            os << figure << ',' << variant << ',' << cell.patterns << ',' << metric << ','
               << ms.first << ',' << ms.second << '\n';
    };
    for (size_t i = 0; i < res.cells.size(); ++i) {
        const auto& cell = res.cells[i];
        const AggregateRow* agg = nullptr;
        for (const auto& a : res.aggregates)
            if (a.tag == cell.tag) agg = &a;
        if (!agg) continue;
        // The default sweep participates in every pairing.
        if (cell.axis == "patterns") {
            emit("branch", branch_mode_name(cell.branch_mode), cell, *agg);
            emit("embed", embed_variant_name(cell.embed_variant), cell, *agg);
            emit("agg", agg_mode_name(cell.agg_mode), cell, *agg);
        } else if (cell.axis == "branch") {
            emit("branch", branch_mode_name(cell.branch_mode), cell, *agg);
        } else if (cell.axis == "embed") {
            emit("embed", embed_variant_name(cell.embed_variant), cell, *agg);
        } else if (cell.axis == "agg") {
            emit("agg", agg_mode_name(cell.agg_mode), cell, *agg);
        }
    }
}

void write_summary_json(const AblationResult& res, const std::string& path) {
    nlohmann::json j;
    j["cells"] = nlohmann::json::array();
    for (const auto& c : res.cells)
        j["cells"].push_back({{"tag", c.tag},
                              {"axis", c.axis},
                              {"patterns", c.patterns},
                              {"branch_mode", branch_mode_name(c.branch_mode)},
                              {"embed_variant", embed_variant_name(c.embed_variant)},
                              {"agg_mode", agg_mode_name(c.agg_mode)}});
    j["aggregates"] = nlohmann::json::array();
    for (const auto& a : res.aggregates)
        j["aggregates"].push_back({{"tag", a.tag},
                                   {"runs", a.runs},
                                   {"acc", {{"mean", a.acc_mean}, {"std", a.acc_std}}},
                                   {"auc", {{"mean", a.auc_mean}, {"std", a.auc_std}}},
                                   {"precision",
                                    {{"mean", a.precision_mean}, {"std", a.precision_std}}},
                                   {"recall", {{"mean", a.recall_mean}, {"std", a.recall_std}}},
                                   {"f1", {{"mean", a.f1_mean}, {"std", a.f1_std}}}});
    j["failed_cells"] = res.failed_cells;

    // Best cell per metric over the completed aggregates.
    auto best_by = [&](auto metric) -> std::string {
        std::string best_tag;
        double best = -1;
        for (const auto& a : res.aggregates)
            if (metric(a) > best) {
                best = metric(a);
                best_tag = a.tag;
            }
        return best_tag;
    };
    j["best"] = {{"acc", best_by([](const AggregateRow& a) { return a.acc_mean; })},
                 {"auc", best_by([](const AggregateRow& a) { return a.auc_mean; })},
                 {"precision",
                  best_by([](const AggregateRow& a) { return a.precision_mean; })},
                 {"recall", best_by([](const AggregateRow& a) { return a.recall_mean; })},
                 {"f1", best_by([](const AggregateRow& a) { return a.f1_mean; })}};

    std::ofstream os(path, std::ios::trunc);
    if (!os) throw FormatError("cannot open '" + path + "' for writing");
    os << j.dump(2) << '\n';
}

} // namespace

AblationResult ablation_suite(const AblationGrid& grid, const LoadedDataset& data,
                              const ModelConfig& base_model, const TrainConfig& base_train,
                              const std::filesystem::path& out_dir, unsigned threads,
                              const EvalOptions& eval) {
    AblationResult res;
    res.cells = expand_grid(grid);
    std::filesystem::create_directories(out_dir);

    for (const auto& cell : res.cells) {
        ModelConfig mc = base_model;
        mc.patterns = cell.patterns;
        mc.branch_mode = cell.branch_mode;
        mc.embed_variant = cell.embed_variant;
        mc.agg_mode = cell.agg_mode;

        SeedRunOptions opts;
        opts.model_kind = "stamp";
        opts.seeds = grid.seeds;
        opts.threads = threads;
        opts.eval = eval;
        try {
            auto run = seed_averaged_run(data, mc, base_train, opts);
            for (auto rec : run.per_seed) {
                rec.tag = cell.tag;
                res.records.push_back(std::move(rec));
            }
            run.aggregate.tag = cell.tag;
            res.aggregates.push_back(run.aggregate);
        } catch (const std::exception& e) {
            res.failed_cells.push_back(cell.tag + ": " + e.what());
        }
    }

    write_records_csv(res.records, (out_dir / "records.csv").string());
    write_aggregates_csv(res.aggregates, (out_dir / "aggregates.csv").string());
    write_pattern_table_csv(res, grid.pattern_counts, (out_dir / "pattern_table.csv").string());
    write_figures_long_csv(res, (out_dir / "figures_long.csv").string());
    write_summary_json(res, (out_dir / "summary.json").string());
    return res;
}

} // namespace stamp
