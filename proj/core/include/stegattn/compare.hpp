#pragma once

#include <array>
#include <string>
#include <vector>

#include "stegattn/dataset.hpp"
#include "stegattn/metrics.hpp"
#include "stegattn/train.hpp"

namespace stegattn {

/// Row order of the comparison table.
inline constexpr std::array<AttentionMode, 6> kTableOrder = {
    AttentionMode::Baseline,           AttentionMode::Channel,
    AttentionMode::Spatial,            AttentionMode::Parallel,
    AttentionMode::ChannelThenSpatial, AttentionMode::SpatialThenChannel,
};

struct CompareOutcome {
    std::vector<MetricsReport> reports;         // one per kTableOrder entry
    std::vector<bool> ok;                       // false: that mode failed
    std::vector<std::string> errors;            // diagnostic per failed mode
    std::vector<std::vector<float>> loss_logs;  // per-mode training losses
    std::string trend_note;              // Parallel vs Baseline secret-MSE direction

    bool all_ok() const {
        for (bool b : ok)
            if (!b) return false;
        return true;
    }
};

/// Trains all six modes with identical seed/data/budget and evaluates each on
/// the held-out split (last 20% of pairs, never trained on). A failing mode
/// yields an error row; the others still run.
CompareOutcome compare(const TrainConfig& base, const Dataset& dataset);

/// Convenience overload loading base.data_dir.
CompareOutcome compare(const TrainConfig& base);

/// Full CSV: header plus six rows; failed modes render as "label,ERROR,...".
std::string compare_csv(const CompareOutcome& outcome);

}  // namespace stegattn
