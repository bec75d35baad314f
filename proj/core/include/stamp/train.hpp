#pragma once

#include <string>
#include <vector>

#include "stamp/checkpoint.hpp"
#include "stamp/dataset.hpp"
#include "stamp/eval.hpp"
#include "stamp/train_config.hpp"

namespace stamp {

struct EpochStats {
    int epoch = 0;          // 1-based
    double mean_total = 0;  // averaged over the epoch's steps
    double mean_ce = 0;     // unweighted cross entropy
    double mean_sim = 0;    // similarity penalty (0 for baselines)
    double lr_last = 0;     // learning rate of the epoch's final step
    MetricsRecord val;
};

struct TrainResult {
    Checkpoint best;   // highest validation AUC; ties keep the earlier epoch
    int best_epoch = 0;
    std::vector<EpochStats> history;
};

// One bag per optimization step, shuffled every epoch from the seed, cosine
// annealing per step over epochs * |train| steps. Validation runs after every
// epoch. Aborts with TrainError (epoch/bag context) on a non-finite loss.
// Baselines train with lambda forced to 1.
TrainResult train(const LoadedDataset& data, MilModel& model, const TrainConfig& tc,
                  const EvalOptions& val_opts = {});

void write_history_csv(const std::vector<EpochStats>& history, const std::string& path);

} // namespace stamp
