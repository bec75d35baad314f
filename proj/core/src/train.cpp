#include "stamp/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numeric>

#include "stamp/errors.hpp"
#include "stamp/optimizer.hpp"
#include "stamp/schedule.hpp"

namespace stamp {

TrainResult train(const LoadedDataset& data, MilModel& model, const TrainConfig& tc,
                  const EvalOptions& val_opts) {
    tc.validate();
    if (data.train.empty()) throw ValueError("train: training split is empty");
    if (data.val.empty()) throw ValueError("train: validation split is empty");
    for (const auto& bag : data.train) bag.validate();

    const bool is_stamp = model.kind() == "stamp";
    const float lambda = is_stamp ? static_cast<float>(tc.lambda) : 1.0f;
    if (is_stamp && model.config().summary_rows() < 2)
        std::cerr << "[train] warning: pattern summary has a single row; "
                     "similarity loss is identically zero\n";

    // Optional inverse-frequency class weights on the cross entropy.
    std::array<float, 2> class_weight{1.0f, 1.0f};
    if (tc.class_weighted) {
        std::array<std::int64_t, 2> counts{0, 0};
        for (const auto& bag : data.train) counts[static_cast<size_t>(bag.label)] += 1;
        if (counts[0] == 0 || counts[1] == 0)
            throw ValueError("train: class weighting needs both classes in train split");
        const auto total = static_cast<double>(counts[0] + counts[1]);
        class_weight[0] = static_cast<float>(total / (2.0 * static_cast<double>(counts[0])));
        class_weight[1] = static_cast<float>(total / (2.0 * static_cast<double>(counts[1])));
    }

    auto params = model.tensors();
    OptimizerOpts opts;
    opts.beta1 = tc.beta1;
    opts.beta2 = tc.beta2;
    opts.eps = tc.eps;
    opts.weight_decay = tc.weight_decay;
    opts.lookahead_k = tc.lookahead_k;
    opts.lookahead_alpha = tc.lookahead_alpha;
    RangerOptimizer<float> optimizer(params, opts);

    const std::int64_t steps_per_epoch = static_cast<std::int64_t>(data.train.size());
    const std::int64_t total_steps = steps_per_epoch * tc.epochs;
    Rng shuffle_rng(mix_seed(tc.seed ^ 0x5a17f00dULL));

    EvalOptions vopts = val_opts;
    vopts.split = "val";
    vopts.seed = static_cast<std::int64_t>(tc.seed);

    TrainResult result;
    std::vector<size_t> order(data.train.size());
    std::iota(order.begin(), order.end(), size_t{0});
    std::int64_t global_step = 0;
    double best_auc = -1.0;

    for (int epoch = 1; epoch <= tc.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        double sum_total = 0, sum_ce = 0, sum_sim = 0, lr_last = tc.lr0;

        for (size_t idx : order) {
            const InstanceBag& bag = data.train[idx];
            Tape<float> tape;
            const auto lg = model.build_loss(tape, bag.features, bag.label, lambda,
                                             class_weight[static_cast<size_t>(bag.label)]);
            const double loss = static_cast<double>(tape.scalar(lg.total));
            if (!std::isfinite(loss))
                throw TrainError("non-finite loss at epoch " + std::to_string(epoch) +
                                 ", bag '" + bag.bag_id + "'");
            sum_total += loss;
            sum_ce += static_cast<double>(tape.scalar(lg.ce));
            if (lg.sim >= 0) sum_sim += static_cast<double>(tape.scalar(lg.sim));

            tape.backward(lg.total);
            std::vector<const MatF*> grads;
            grads.reserve(lg.param_nodes.size());
            for (const auto& [name, node] : lg.param_nodes) grads.push_back(&tape.grad(node));

            lr_last = cosine_lr(global_step, total_steps, tc.lr0, tc.lr_min);
            try {
                optimizer.step(lr_last, grads);
            } catch (const TrainError& e) {
                throw TrainError(std::string(e.what()) + " (epoch " + std::to_string(epoch) +
                                 ", bag '" + bag.bag_id + "')");
            }
            ++global_step;
        }

        EpochStats stats;
        stats.epoch = epoch;
        stats.mean_total = sum_total / static_cast<double>(steps_per_epoch);
        stats.mean_ce = sum_ce / static_cast<double>(steps_per_epoch);
        stats.mean_sim = sum_sim / static_cast<double>(steps_per_epoch);
        stats.lr_last = lr_last;
        stats.val = evaluate(model, data.val, vopts).record;
        result.history.push_back(stats);

        if (stats.val.auc > best_auc) {
            best_auc = stats.val.auc;
            result.best_epoch = epoch;
            result.best = checkpoint_from_model(model, tc, epoch, stats.val);
        }
    }
    return result;
}

void write_history_csv(const std::vector<EpochStats>& history, const std::string& path) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw FormatError("cannot open '" + path + "' for writing");
    os << "epoch,mean_total,mean_ce,mean_sim,lr_last,val_acc,val_auc,val_precision,"
          "val_recall,val_f1\n";
    os.precision(17);
    for (const auto& h : history)
        os << h.epoch << ',' << h.mean_total << ',' << h.mean_ce << ',' << h.mean_sim << ','
           << h.lr_last << ',' << h.val.acc << ',' << h.val.auc << ',' << h.val.precision
           << ',' << h.val.recall << ',' << h.val.f1 << '\n';
}

} // namespace stamp
