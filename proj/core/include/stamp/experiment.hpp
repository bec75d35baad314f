#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "stamp/dataset.hpp"
#include "stamp/eval.hpp"
#include "stamp/train.hpp"

namespace stamp {

// Mean and population standard deviation per metric over a group of records.
struct AggregateRow {
    std::string tag;
    int runs = 0;
    double acc_mean = 0, auc_mean = 0, precision_mean = 0, recall_mean = 0, f1_mean = 0;
    double acc_std = 0, auc_std = 0, precision_std = 0, recall_std = 0, f1_std = 0;
};

AggregateRow aggregate_records(const std::string& tag,
                               const std::vector<MetricsRecord>& records);

struct SeedRunOptions {
    std::string model_kind = "stamp";
    std::vector<std::int64_t> seeds = {0, 1, 2, 3, 4, 5};
    unsigned threads = 0;      // 0 = hardware concurrency
    bool keep_checkpoints = false;
    EvalOptions eval;          // threshold / averaging; split fixed to test
};

struct SeedRunResult {
    std::vector<MetricsRecord> per_seed; // test-split records, one per seed
    AggregateRow aggregate;
    std::vector<Checkpoint> checkpoints; // when keep_checkpoints is set
};

// Full train + test evaluation per seed over a fixed dataset; the seed drives
// model init and epoch shuffling. Seeds run in parallel. If any seed fails,
// a PartialResultsError naming the failed seeds is thrown.
SeedRunResult seed_averaged_run(const LoadedDataset& data, const ModelConfig& model_cfg,
                                const TrainConfig& train_cfg, const SeedRunOptions& opts);

// The experiment grid: a pattern-count sweep at the default modes plus one
// pattern-count sweep per non-default branch/embedding/aggregation variant.
struct AblationGrid {
    std::vector<int> pattern_counts = {1, 2, 3, 4, 5};
    std::vector<BranchMode> branch_modes = {BranchMode::double_branch,
                                            BranchMode::head_only};
    std::vector<EmbedVariant> embed_variants = {EmbedVariant::joint_projection,
                                                EmbedVariant::token_append};
    std::vector<AggMode> agg_modes = {AggMode::fa, AggMode::pa};
    std::vector<std::int64_t> seeds = {0, 1, 2, 3, 4, 5};

    void validate() const;
};

struct AblationCell {
    std::string tag;     // e.g. "np3_double_joint_projection_fa"
    std::string axis;    // "patterns", "branch", "embed", "agg"
    int patterns = 3;
    BranchMode branch_mode = BranchMode::double_branch;
    EmbedVariant embed_variant = EmbedVariant::joint_projection;
    AggMode agg_mode = AggMode::fa;
};

// The cells the grid expands to (deduplicated, defaults first).
std::vector<AblationCell> expand_grid(const AblationGrid& grid);

struct AblationResult {
    std::vector<AblationCell> cells;
    std::vector<MetricsRecord> records;    // all per-seed records
    std::vector<AggregateRow> aggregates;  // one per completed cell
    std::vector<std::string> failed_cells; // tag + reason
};

// Runs one seed_averaged_run per cell (failures recorded, suite continues)
// and writes records.csv, aggregates.csv, pattern_table.csv, figures_long.csv
// and summary.json into out_dir.
AblationResult ablation_suite(const AblationGrid& grid, const LoadedDataset& data,
                              const ModelConfig& base_model, const TrainConfig& base_train,
                              const std::filesystem::path& out_dir, unsigned threads = 0,
                              const EvalOptions& eval = {});

} // namespace stamp
