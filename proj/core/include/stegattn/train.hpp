#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stegattn/dataset.hpp"
#include "stegattn/model.hpp"

namespace stegattn {

struct TrainConfig {
    std::uint64_t seed = 0;
    int image_size = 64;
    int batch_size = 8;
    int steps = 300;
    float learning_rate = 1e-3f;
    float beta = 1.0f;
    AttentionMode mode = AttentionMode::Baseline;
    std::string data_dir;
    int reduction_ratio = 8;
    bool decoder_attention = false;

    void validate() const;  // throws UsageError
};

struct TrainResult {
    StegoModelParams<float> params;
    std::vector<float> loss_log;  // scalar loss at every step
};

/// Deterministic Adam training (beta1 0.9, beta2 0.999, eps 1e-8) on the
/// given pairs. Batch order is drawn from the seed and reshuffled each epoch.
/// Throws NumericError naming the step if the loss goes non-finite.
TrainResult train(const TrainConfig& config, const Dataset& pairs);

/// Loads config.data_dir, holds out the evaluation split, trains on the rest.
TrainResult train(const TrainConfig& config);

/// "step,loss" CSV, loss printed with 9 significant digits.
std::string loss_log_csv(const std::vector<float>& loss_log);

}  // namespace stegattn
