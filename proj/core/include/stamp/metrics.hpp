#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace stamp {

enum class Averaging { binary, macro, weighted };

const char* averaging_name(Averaging a);
Averaging averaging_from_name(const std::string& name);

// Mann-Whitney AUC: the fraction of (positive, negative) pairs where the
// positive scores higher, ties counted as half a win. Computed from tie-aware
// ranks, so the result is the exact pair statistic. Throws MetricError unless
// both classes are present.
double auc(std::span<const double> scores, std::span<const int> labels);

struct ThresholdMetrics {
    double acc = 0, precision = 0, recall = 0, f1 = 0;
};

// Confusion metrics at `score >= threshold -> positive`. Binary averaging
// reports the positive class; macro averages the per-class values; weighted
// weights them by class support. Per-class precision/recall fall back to 0
// on an empty denominator, and F1 is 0 when precision + recall is 0.
ThresholdMetrics threshold_metrics(std::span<const double> scores,
                                   std::span<const int> labels, double threshold,
                                   Averaging averaging);

struct MetricsRecord {
    double acc = 0, auc = 0, precision = 0, recall = 0, f1 = 0;
    Averaging averaging = Averaging::macro;
    double threshold = 0.5;
    std::int64_t seed = 0;
    std::string split;
    std::string tag; // model / variant provenance
    int n_pos = 0, n_neg = 0;

    int total() const { return n_pos + n_neg; }
};

struct BagScore {
    std::string bag_id;
    int label = 0;
    double score = 0; // positive-class probability
};

// Scores already computed for a split -> one MetricsRecord.
MetricsRecord metrics_from_scores(const std::vector<BagScore>& scores, double threshold,
                                  Averaging averaging);

void write_records_csv(const std::vector<MetricsRecord>& records,
                       const std::string& path);
std::vector<MetricsRecord> read_records_csv(const std::string& path);

void write_scores_csv(const std::vector<BagScore>& scores, const std::string& path);
std::vector<BagScore> read_scores_csv(const std::string& path);

} // namespace stamp
