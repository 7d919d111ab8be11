#include "stegattn/train.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>

namespace stegattn {

void TrainConfig::validate() const {
    if (image_size < 11)
        throw UsageError("image_size must be >= 11 (SSIM window), got " +
                         std::to_string(image_size));
    if (batch_size < 1) throw UsageError("batch_size must be >= 1");
    if (steps < 1) throw UsageError("steps must be >= 1");
    if (!(learning_rate > 0)) throw UsageError("learning_rate must be > 0");
    if (reduction_ratio < 1) throw UsageError("reduction_ratio must be >= 1");
}

namespace {

Tensor<float> stack_batch(const std::vector<Tensor<float>>& images,
                          const std::vector<std::size_t>& idx) {
    const auto& first = images[idx[0]];
    Tensor<float> out(static_cast<int>(idx.size()), first.c, first.h, first.w);
    for (std::size_t b = 0; b < idx.size(); ++b)
        std::copy(images[idx[b]].data.begin(), images[idx[b]].data.end(),
                  out.data.begin() + static_cast<std::ptrdiff_t>(b * first.size()));
    return out;
}

struct AdamState {
    std::vector<std::vector<float>> m, v;
    long t = 0;

    void init(StegoModelParams<float>& params) {
        for_each_param(params, [&](const std::string&, Tensor<float>& p) {
            m.emplace_back(p.size(), 0.0f);
            v.emplace_back(p.size(), 0.0f);
        });
    }

    void step(StegoModelParams<float>& params, ModelVars<float>& mv, float lr) {
        constexpr float b1 = 0.9f, b2 = 0.999f, eps = 1e-8f;
        ++t;
        const float c1 = 1.0f - std::pow(b1, static_cast<float>(t));
        const float c2 = 1.0f - std::pow(b2, static_cast<float>(t));
        std::vector<const Tensor<float>*> grads;
        for_each_var(mv, [&](VarPtr<float>& var) { grads.push_back(grad_if_present(var)); });
        std::size_t k = 0;
        for_each_param(params, [&](const std::string&, Tensor<float>& p) {
            if (!grads[k]) {  // parameter unused by this wiring
                ++k;
                return;
            }
            const Tensor<float>& g = *grads[k];
            auto &mk = m[k], &vk = v[k];
            for (std::size_t i = 0; i < p.size(); ++i) {
                mk[i] = b1 * mk[i] + (1.0f - b1) * g.data[i];
                vk[i] = b2 * vk[i] + (1.0f - b2) * g.data[i] * g.data[i];
                p.data[i] -= lr * (mk[i] / c1) / (std::sqrt(vk[i] / c2) + eps);
            }
            ++k;
        });
    }
};

}  // namespace

TrainResult train(const TrainConfig& config, const Dataset& pairs) {
    config.validate();
    if (pairs.pair_count() == 0) throw UsageError("train: empty dataset");

    TrainResult result;
    result.params = init_params(config.seed, config.mode, config.beta, config.reduction_ratio,
                                config.decoder_attention);
    AdamState adam;
    adam.init(result.params);

    std::mt19937_64 batch_rng(config.seed);
    std::vector<std::size_t> order(pairs.pair_count());
    std::iota(order.begin(), order.end(), 0);
    std::size_t cursor = order.size();  // forces a shuffle before the first batch

    for (int step = 0; step < config.steps; ++step) {
        if (cursor >= order.size()) {
            std::shuffle(order.begin(), order.end(), batch_rng);
            cursor = 0;
        }
        std::vector<std::size_t> batch;
        while (batch.size() < static_cast<std::size_t>(config.batch_size) &&
               cursor < order.size())
            batch.push_back(order[cursor++]);

        auto cover = make_constant(stack_batch(pairs.covers, batch));
        auto secret = make_constant(stack_batch(pairs.secrets, batch));
        auto mv = ModelVars<float>::from(result.params);
        auto fwd = model_loss(cover, secret, mv);
        float loss = fwd.loss->value.data[0];
        if (!std::isfinite(loss))
            throw NumericError("train: non-finite loss at step " + std::to_string(step));
        backward(fwd.loss);
        adam.step(result.params, mv, config.learning_rate);
        result.loss_log.push_back(loss);
    }
    return result;
}

TrainResult train(const TrainConfig& config) {
    Dataset full = load_dataset(config.data_dir, config.image_size, config.seed);
    auto [train_split, eval_split] = split_dataset(full);
    (void)eval_split;
    return train(config, train_split);
}

std::string loss_log_csv(const std::vector<float>& loss_log) {
    std::string out = "step,loss\n";
    char buf[48];
    for (std::size_t i = 0; i < loss_log.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%zu,%.9g\n", i, static_cast<double>(loss_log[i]));
        out += buf;
    }
    return out;
}

}  // namespace stegattn
