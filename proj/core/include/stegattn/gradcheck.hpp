#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "stegattn/model.hpp"

namespace stegattn {

struct GradCheckResult {
    std::string name;
    double rel_err = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

namespace gradcheck_detail {

// Norm-based comparison of the analytic and finite-difference gradient over
// a coordinate set: ||a - f|| / (||a|| + ||f|| + 1e-12).
inline double vec_rel_err(const std::vector<double>& a, const std::vector<double>& f) {
    double dn = 0, an = 0, fn = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dn += (a[i] - f[i]) * (a[i] - f[i]);
        an += a[i] * a[i];
        fn += f[i] * f[i];
    }
    return std::sqrt(dn) / (std::sqrt(an) + std::sqrt(fn) + 1e-12);
}

/// Central finite differences against backward() for the given leaves.
/// rebuild() must recompute the scalar loss graph from the leaves' current
/// values. Checks up to max_coords coordinates per leaf (all, when 0).
/// Leaves the loss does not depend on (unused parameters) are skipped.
///
/// With filter_kinks set, each coordinate's difference quotient is computed
/// at eps and eps/2; if the two estimates disagree, the perturbation crossed
/// a non-smooth point (a relu kink or a max-pool argmax flip) where finite
/// differences do not estimate the derivative, and the coordinate is dropped.
/// Coordinates whose gradient is below the rounding noise of the difference
/// quotient itself (forward-evaluation roundoff divided by the step) are
/// likewise dropped: finite differences cannot resolve them at any accuracy.
inline double check_leaves(const std::function<VarPtr<double>()>& rebuild,
                           const std::vector<VarPtr<double>>& leaves, double eps,
                           int max_coords, std::mt19937_64& rng,
                           bool filter_kinks = false) {
    auto loss = rebuild();
    backward(loss);
    const double noise_floor = 3e4 * std::numeric_limits<double>::epsilon() *
                               std::abs(loss->value.data[0]) / eps;
    auto fd_at = [&](const VarPtr<double>& leaf, std::size_t i, double step) {
        double orig = leaf->value.data[i];
        leaf->value.data[i] = orig + step;
        double up = rebuild()->value.data[0];
        leaf->value.data[i] = orig - step;
        double dn = rebuild()->value.data[0];
        leaf->value.data[i] = orig;
        return (up - dn) / (2 * step);
    };
    double worst = 0;
    for (const auto& leaf : leaves) {
        const Tensor<double>* analytic = grad_if_present(leaf);
        if (!analytic) continue;
        std::vector<std::size_t> coords(leaf->value.size());
        for (std::size_t i = 0; i < coords.size(); ++i) coords[i] = i;
        if (max_coords > 0 && coords.size() > static_cast<std::size_t>(max_coords)) {
            std::shuffle(coords.begin(), coords.end(), rng);
            coords.resize(max_coords);
        }
        std::vector<double> a, f;
        for (std::size_t i : coords) {
            double fd = fd_at(leaf, i, eps);
            if (filter_kinks) {
                if (std::abs(fd) < noise_floor && std::abs(analytic->data[i]) < noise_floor)
                    continue;
                // A pre-activation within eps of its kink makes the central
                // difference nearly step-invariant yet wrong (it averages the
                // two one-sided slopes), so the agreement bar must be strict.
                double fd_half = fd_at(leaf, i, eps / 2);
                if (std::abs(fd - fd_half) >
                    1e-5 * (std::abs(fd) + std::abs(fd_half)) + 1e-12)
                    continue;
                fd = fd_half;
            }
            a.push_back(analytic->data[i]);
            f.push_back(fd);
        }
        if (!a.empty()) worst = std::max(worst, vec_rel_err(a, f));
    }
    return worst;
}

inline Tensor<double> random_tensor(int n, int c, int h, int w, std::mt19937_64& rng,
                                    double lo = -1.0, double hi = 1.0) {
    Tensor<double> t(n, c, h, w);
    std::uniform_real_distribution<double> dist(lo, hi);
    for (double& v : t.data) v = dist(rng);
    return t;
}

}  // namespace gradcheck_detail

/// Finite-difference check of every differentiable operation in isolation,
/// 64-bit mode, randomized small instances. Tolerance 1e-4.
inline std::vector<GradCheckResult> run_op_gradchecks(std::uint64_t seed) {
    using namespace gradcheck_detail;
    constexpr double kEps = 1e-3;
    constexpr double kTol = 1e-4;
    std::mt19937_64 rng(seed);
    std::vector<GradCheckResult> out;

    auto record = [&](const std::string& name, double err) {
        out.push_back({name, err, kTol, err <= kTol});
    };

    {  // conv2d: x, weight, bias
        auto x = make_leaf(random_tensor(2, 3, 6, 6, rng));
        auto w = make_leaf(random_tensor(4, 3, 3, 3, rng));
        auto b = make_leaf(random_tensor(1, 4, 1, 1, rng));
        auto target = make_constant(random_tensor(2, 4, 6, 6, rng));
        auto rebuild = [&] { return mse(conv2d(x, w, b, same_padding_for_kernel(3)), target); };
        record("conv2d", check_leaves(rebuild, {x, w, b}, kEps, 0, rng, true));
    }
    {  // relu at inputs away from the kink
        auto x = make_leaf(random_tensor(2, 3, 4, 4, rng));
        for (double& v : x->value.data)
            if (std::abs(v) < 0.05) v = 0.1;
        auto target = make_constant(random_tensor(2, 3, 4, 4, rng));
        auto rebuild = [&] { return mse(relu(x), target); };
        record("relu", check_leaves(rebuild, {x}, kEps, 0, rng, true));
    }
    {
        auto x = make_leaf(random_tensor(2, 3, 4, 4, rng, -3.0, 3.0));
        auto target = make_constant(random_tensor(2, 3, 4, 4, rng));
        auto rebuild = [&] { return mse(sigmoid(x), target); };
        record("sigmoid", check_leaves(rebuild, {x}, kEps, 0, rng, true));
    }
    {
        auto a = make_leaf(random_tensor(2, 3, 4, 4, rng));
        auto b = make_leaf(random_tensor(2, 2, 4, 4, rng));
        auto target = make_constant(random_tensor(2, 5, 4, 4, rng));
        auto rebuild = [&] { return mse(concat_channels<double>({a, b}), target); };
        record("concat_channels", check_leaves(rebuild, {a, b}, kEps, 0, rng, true));
    }
    for (PoolKind kind : {PoolKind::Avg, PoolKind::Max}) {
        auto x = make_leaf(random_tensor(2, 4, 5, 5, rng));
        auto target = make_constant(random_tensor(2, 4, 1, 1, rng));
        auto rebuild = [&] { return mse(global_pool(x, kind), target); };
        record(kind == PoolKind::Avg ? "global_pool_avg" : "global_pool_max",
               check_leaves(rebuild, {x}, kEps, 0, rng, true));
    }
    for (PoolKind kind : {PoolKind::Avg, PoolKind::Max}) {
        auto x = make_leaf(random_tensor(2, 4, 5, 5, rng));
        auto target = make_constant(random_tensor(2, 1, 5, 5, rng));
        auto rebuild = [&] { return mse(channel_pool(x, kind), target); };
        record(kind == PoolKind::Avg ? "channel_pool_avg" : "channel_pool_max",
               check_leaves(rebuild, {x}, kEps, 0, rng, true));
    }
    {  // broadcast_mul with a per-channel map
        auto x = make_leaf(random_tensor(2, 4, 5, 5, rng));
        auto m = make_leaf(random_tensor(2, 4, 1, 1, rng));
        auto target = make_constant(random_tensor(2, 4, 5, 5, rng));
        auto rebuild = [&] { return mse(broadcast_mul(x, m), target); };
        record("broadcast_mul_channel", check_leaves(rebuild, {x, m}, kEps, 0, rng, true));
    }
    {  // broadcast_mul with a per-pixel map
        auto x = make_leaf(random_tensor(2, 4, 5, 5, rng));
        auto m = make_leaf(random_tensor(2, 1, 5, 5, rng));
        auto target = make_constant(random_tensor(2, 4, 5, 5, rng));
        auto rebuild = [&] { return mse(broadcast_mul(x, m), target); };
        record("broadcast_mul_spatial", check_leaves(rebuild, {x, m}, kEps, 0, rng, true));
    }
    {
        auto x = make_leaf(random_tensor(3, 6, 1, 1, rng));
        auto w = make_leaf(random_tensor(4, 6, 1, 1, rng));
        auto b = make_leaf(random_tensor(1, 4, 1, 1, rng));
        auto target = make_constant(random_tensor(3, 4, 1, 1, rng));
        auto rebuild = [&] { return mse(dense(x, w, b), target); };
        record("dense", check_leaves(rebuild, {x, w, b}, kEps, 0, rng, true));
    }
    {
        auto a = make_leaf(random_tensor(2, 3, 4, 4, rng));
        auto b = make_leaf(random_tensor(2, 3, 4, 4, rng));
        auto rebuild = [&] { return mse(a, b); };
        record("mse", check_leaves(rebuild, {a, b}, kEps, 0, rng, true));
    }
    {  // channel attention map end-to-end
        auto params = ChannelAttentionParams<double>::zeros(6, 2);
        std::uniform_real_distribution<double> d(-0.5, 0.5);
        for (Tensor<double>* t : {&params.w1, &params.b1, &params.w2, &params.b2})
            for (double& v : t->data) v = d(rng);
        auto f = make_leaf(random_tensor(2, 6, 5, 5, rng));
        auto cv = ChannelAttentionVars<double>::from(params);
        auto target = make_constant(random_tensor(2, 6, 5, 5, rng));
        auto rebuild = [&] { return mse(broadcast_mul(f, channel_attention_map(f, cv)), target); };
        record("channel_attention",
               check_leaves(rebuild, {f, cv.w1, cv.b1, cv.w2, cv.b2}, kEps, 0, rng, true));
    }
    {  // spatial attention map end-to-end
        auto params = SpatialAttentionParams<double>::zeros();
        std::uniform_real_distribution<double> d(-0.5, 0.5);
        for (double& v : params.w.data) v = d(rng);
        auto f = make_leaf(random_tensor(2, 4, 8, 8, rng));
        auto sv = SpatialAttentionVars<double>::from(params);
        auto target = make_constant(random_tensor(2, 4, 8, 8, rng));
        auto rebuild = [&] { return mse(broadcast_mul(f, spatial_attention_map(f, sv)), target); };
        record("spatial_attention", check_leaves(rebuild, {f, sv.w, sv.b}, kEps, 0, rng, true));
    }
    return out;
}

/// End-to-end check: d(loss)/d(every parameter tensor) on a tiny instance
/// (n=1, 8x8), 64-bit, sampled coordinates per tensor. Runs once per mode
/// when all_modes is set, otherwise Parallel only (it exercises every
/// attention path except the sequential orderings).
inline std::vector<GradCheckResult> run_model_gradcheck(std::uint64_t seed,
                                                        bool all_modes = false,
                                                        int coords_per_tensor = 6) {
    using namespace gradcheck_detail;
    // Smaller step than the per-op checks: the composed network is deep, so
    // at 1e-3 too many relu pre-activations sit within one step of the kink.
    constexpr double kEps = 1e-5;
    constexpr double kTol = 1e-4;
    std::vector<GradCheckResult> out;
    std::vector<AttentionMode> modes =
        all_modes ? std::vector<AttentionMode>(kAllModes.begin(), kAllModes.end())
                  : std::vector<AttentionMode>{AttentionMode::Parallel};
    for (AttentionMode mode : modes) {
        std::mt19937_64 rng(seed);
        auto params = init_params(seed, mode, 1.0f, 8, mode != AttentionMode::Baseline)
                          .cast<double>();
        auto mv = ModelVars<double>::from(params);
        auto cover = make_constant(random_tensor(1, 3, 8, 8, rng, 0.0, 1.0));
        auto secret = make_constant(random_tensor(1, 3, 8, 8, rng, 0.0, 1.0));
        std::vector<VarPtr<double>> leaves;
        for_each_var(mv, [&](VarPtr<double>& v) { leaves.push_back(v); });
        auto rebuild = [&] { return model_loss(cover, secret, mv).loss; };
        double err = check_leaves(rebuild, leaves, kEps, coords_per_tensor, rng,
                                  /*filter_kinks=*/true);
        out.push_back({std::string("model_loss[") + mode_token(mode) + "]", err, kTol,
                       err <= kTol});
    }
    return out;
}

}  // namespace stegattn
