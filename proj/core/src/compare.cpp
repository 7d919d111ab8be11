#include "stegattn/compare.hpp"

#include <cstdio>

namespace stegattn {

CompareOutcome compare(const TrainConfig& base, const Dataset& dataset) {
    auto [train_split, eval_split] = split_dataset(dataset);
    CompareOutcome out;
    for (AttentionMode mode : kTableOrder) {
        TrainConfig cfg = base;
        cfg.mode = mode;
        MetricsReport rep;
        rep.model_name = mode_label(mode);
        std::vector<float> losses;
        try {
            TrainResult tr = train(cfg, train_split);
            losses = tr.loss_log;
            rep = evaluate_pairs(tr.params, eval_split.covers, eval_split.secrets,
                                 mode_label(mode));
            out.ok.push_back(true);
            out.errors.emplace_back();
        } catch (const std::exception& e) {
            out.ok.push_back(false);
            out.errors.emplace_back(e.what());
        }
        out.reports.push_back(rep);
        out.loss_logs.push_back(std::move(losses));
    }

    const std::size_t ibase = 0, ipar = 3;  // positions in kTableOrder
    if (out.ok[ibase] && out.ok[ipar]) {
        double mb = out.reports[ibase].mse_secret, mp = out.reports[ipar].mse_secret;
        char buf[160];
        std::snprintf(buf, sizeof(buf),
                      "trend: Parallel secret MSE %.6f %s Baseline secret MSE %.6f",
                      mp, mp < mb ? "<" : ">=", mb);
        out.trend_note = buf;
    } else {
        out.trend_note = "trend: unavailable (a required mode failed)";
    }
    return out;
}

CompareOutcome compare(const TrainConfig& base) {
    Dataset ds = load_dataset(base.data_dir, base.image_size, base.seed);
    return compare(base, ds);
}

std::string compare_csv(const CompareOutcome& outcome) {
    std::string csv = std::string(metrics_csv_header()) + "\n";
    for (std::size_t i = 0; i < outcome.reports.size(); ++i) {
        if (outcome.ok[i])
            csv += metrics_csv_row(outcome.reports[i]) + "\n";
        else
            csv += outcome.reports[i].model_name + ",ERROR,ERROR,ERROR,ERROR,ERROR,ERROR\n";
    }
    return csv;
}

}  // namespace stegattn
