#include "stamp/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "stamp/errors.hpp"

namespace stamp {

const char* averaging_name(Averaging a) {
    switch (a) {
        case Averaging::binary: return "binary";
        case Averaging::macro: return "macro";
        case Averaging::weighted: return "weighted";
    }
    return "?";
}

Averaging averaging_from_name(const std::string& name) {
    if (name == "binary") return Averaging::binary;
    if (name == "macro") return Averaging::macro;
    if (name == "weighted") return Averaging::weighted;
    throw ConfigError("unknown averaging '" + name + "' (binary/macro/weighted)");
}

double auc(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size())
        throw ValueError("auc: scores and labels differ in length");
    const size_t n = scores.size();
    std::int64_t n_pos = 0;
    for (int y : labels) {
        if (y != 0 && y != 1) throw ValueError("auc: labels must be 0 or 1");
        n_pos += y;
    }
    const std::int64_t n_neg = static_cast<std::int64_t>(n) - n_pos;
    if (n_pos == 0 || n_neg == 0)
        throw MetricError("auc undefined: both classes must be present");

    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), size_t{0});
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return scores[a] < scores[b]; });

    // Doubled tie-averaged ranks keep everything in integers: the numerator
    // below equals 2*wins + ties of the pair statistic exactly.
    std::vector<std::int64_t> rank2(n);
    size_t i = 0;
    while (i < n) {
        size_t j = i;
        while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
        const std::int64_t r2 = static_cast<std::int64_t>(i + j) + 2; // 2*avg rank
        for (size_t k = i; k <= j; ++k) rank2[order[k]] = r2;
        i = j + 1;
    }
    std::int64_t rank2_pos_sum = 0;
    for (size_t k = 0; k < n; ++k)
        if (labels[k] == 1) rank2_pos_sum += rank2[k];
    const std::int64_t numer = rank2_pos_sum - n_pos * (n_pos + 1);
    return static_cast<double>(numer) / static_cast<double>(2 * n_pos * n_neg);
}

namespace {

struct Confusion {
    std::int64_t tp = 0, fp = 0, tn = 0, fn = 0;
};

struct ClassStats {
    double precision = 0, recall = 0, f1 = 0;
};

ClassStats stats_for(std::int64_t tp, std::int64_t fp, std::int64_t fn) {
    ClassStats s;
    s.precision = (tp + fp) > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    s.recall = (tp + fn) > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
    s.f1 = (s.precision + s.recall) > 0
               ? 2.0 * s.precision * s.recall / (s.precision + s.recall)
               : 0.0;
    return s;
}

} // namespace

ThresholdMetrics threshold_metrics(std::span<const double> scores,
                                   std::span<const int> labels, double threshold,
                                   Averaging averaging) {
    if (scores.size() != labels.size())
        throw ValueError("threshold_metrics: scores and labels differ in length");
    if (scores.empty()) throw ValueError("threshold_metrics: empty input");
    if (!(threshold > 0.0 && threshold < 1.0))
        throw ValueError("threshold_metrics: threshold must be in (0,1)");

    Confusion c;
    for (size_t i = 0; i < scores.size(); ++i) {
        const bool pred = scores[i] >= threshold;
        if (labels[i] == 1)
            pred ? ++c.tp : ++c.fn;
        else
            pred ? ++c.fp : ++c.tn;
    }
    const auto n_pos = c.tp + c.fn;
    const auto n_neg = c.fp + c.tn;
    if (averaging != Averaging::binary && (n_pos == 0 || n_neg == 0))
        throw MetricError("threshold_metrics: " + std::string(averaging_name(averaging)) +
                          " averaging needs both classes present");

    ThresholdMetrics out;
    out.acc = static_cast<double>(c.tp + c.tn) / static_cast<double>(scores.size());
    const ClassStats pos = stats_for(c.tp, c.fp, c.fn);
    if (averaging == Averaging::binary) {
        out.precision = pos.precision;
        out.recall = pos.recall;
        out.f1 = pos.f1;
        return out;
    }
    const ClassStats neg = stats_for(c.tn, c.fn, c.fp);
    if (averaging == Averaging::macro) {
        out.precision = 0.5 * (pos.precision + neg.precision);
        out.recall = 0.5 * (pos.recall + neg.recall);
        out.f1 = 0.5 * (pos.f1 + neg.f1);
    } else {
        const double total = static_cast<double>(n_pos + n_neg);
        const double wp = static_cast<double>(n_pos) / total;
        const double wn = static_cast<double>(n_neg) / total;
        out.precision = wp * pos.precision + wn * neg.precision;
        out.recall = wp * pos.recall + wn * neg.recall;
        out.f1 = wp * pos.f1 + wn * neg.f1;
    }
    return out;
}

MetricsRecord metrics_from_scores(const std::vector<BagScore>& scores, double threshold,
                                  Averaging averaging) {
    std::vector<double> s;
    std::vector<int> y;
    s.reserve(scores.size());
    y.reserve(scores.size());
    for (const auto& b : scores) {
        s.push_back(b.score);
        y.push_back(b.label);
    }
    MetricsRecord rec;
    rec.threshold = threshold;
    rec.averaging = averaging;
    rec.auc = auc(s, y);
    const auto tm = threshold_metrics(s, y, threshold, averaging);
    rec.acc = tm.acc;
    rec.precision = tm.precision;
    rec.recall = tm.recall;
    rec.f1 = tm.f1;
    for (int label : y) (label == 1 ? rec.n_pos : rec.n_neg) += 1;
    return rec;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(f);
    return fields;
}

} // namespace

void write_records_csv(const std::vector<MetricsRecord>& records,
                       const std::string& path) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw FormatError("cannot open '" + path + "' for writing");
    os << "tag,split,seed,averaging,threshold,n_pos,n_neg,acc,auc,precision,recall,f1\n";
    os.precision(17);
    for (const auto& r : records)
        os << r.tag << ',' << r.split << ',' << r.seed << ',' << averaging_name(r.averaging)
           << ',' << r.threshold << ',' << r.n_pos << ',' << r.n_neg << ',' << r.acc << ','
           << r.auc << ',' << r.precision << ',' << r.recall << ',' << r.f1 << '\n';
}

std::vector<MetricsRecord> read_records_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw FormatError("cannot open records CSV '" + path + "'");
    std::string line;
    if (!std::getline(is, line)) throw FormatError("records CSV '" + path + "' is empty");
    std::vector<MetricsRecord> out;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        auto f = split_csv_line(line);
        if (f.size() != 12)
            throw FormatError("records CSV '" + path + "': expected 12 fields per row");
        MetricsRecord r;
        r.tag = f[0];
        r.split = f[1];
        r.seed = std::stoll(f[2]);
        r.averaging = averaging_from_name(f[3]);
        r.threshold = std::stod(f[4]);
        r.n_pos = std::stoi(f[5]);
        r.n_neg = std::stoi(f[6]);
        r.acc = std::stod(f[7]);
        r.auc = std::stod(f[8]);
        r.precision = std::stod(f[9]);
        r.recall = std::stod(f[10]);
        r.f1 = std::stod(f[11]);
        out.push_back(std::move(r));
    }
    return out;
}

void write_scores_csv(const std::vector<BagScore>& scores, const std::string& path) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw FormatError("cannot open '" + path + "' for writing");
    os << "bag_id,label,score\n";
    os.precision(17);
    for (const auto& s : scores) os << s.bag_id << ',' << s.label << ',' << s.score << '\n';
}

std::vector<BagScore> read_scores_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw FormatError("cannot open scores CSV '" + path + "'");
    std::string line;
    if (!std::getline(is, line)) throw FormatError("scores CSV '" + path + "' is empty");
    std::vector<BagScore> out;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        auto f = split_csv_line(line);
        if (f.size() != 3)
            throw FormatError("scores CSV '" + path + "': expected 3 fields per row");
        out.push_back(BagScore{f[0], std::stoi(f[1]), std::stod(f[2])});
    }
    return out;
}

} // namespace stamp
