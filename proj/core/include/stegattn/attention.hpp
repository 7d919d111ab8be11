#pragma once

#include <array>
#include <optional>
#include <string>

#include "stegattn/autodiff.hpp"

namespace stegattn {

/// The six wirings compared by the experiment. Baseline applies no
/// reweighting; the other five insert attention between hiding blocks.
enum class AttentionMode {
    Baseline,
    Channel,
    Spatial,
    ChannelThenSpatial,
    SpatialThenChannel,
    Parallel,
};

inline constexpr std::array<AttentionMode, 6> kAllModes = {
    AttentionMode::Baseline,           AttentionMode::Channel,
    AttentionMode::Spatial,            AttentionMode::ChannelThenSpatial,
    AttentionMode::SpatialThenChannel, AttentionMode::Parallel,
};

/// CLI token for a mode (kebab-case).
inline const char* mode_token(AttentionMode m) {
    switch (m) {
        case AttentionMode::Baseline: return "baseline";
        case AttentionMode::Channel: return "channel";
        case AttentionMode::Spatial: return "spatial";
        case AttentionMode::ChannelThenSpatial: return "channel-then-spatial";
        case AttentionMode::SpatialThenChannel: return "spatial-then-channel";
        case AttentionMode::Parallel: return "channel-spatial-parallel";
    }
    return "?";
}

/// Row label used in comparison CSV output.
inline const char* mode_label(AttentionMode m) {
    switch (m) {
        case AttentionMode::Baseline: return "Baseline";
        case AttentionMode::Channel: return "Channel Only";
        case AttentionMode::Spatial: return "Spatial Only";
        case AttentionMode::ChannelThenSpatial: return "Channel then Spatial";
        case AttentionMode::SpatialThenChannel: return "Spatial then Channel";
        case AttentionMode::Parallel: return "Channel-Spatial Parallel";
    }
    return "?";
}

inline std::optional<AttentionMode> parse_mode(const std::string& token) {
    for (AttentionMode m : kAllModes)
        if (token == mode_token(m)) return m;
    return std::nullopt;
}

inline std::string valid_mode_tokens() {
    std::string s;
    for (AttentionMode m : kAllModes) {
        if (!s.empty()) s += ", ";
        s += mode_token(m);
    }
    return s;
}

/// Shared two-layer MLP applied to the avg- and max-pooled channel
/// descriptors. Hidden width is max(1, c / reduction).
template <typename T>
struct ChannelAttentionParams {
    Tensor<T> w1, b1;  // (hidden, c, 1, 1), (1, hidden, 1, 1)
    Tensor<T> w2, b2;  // (c, hidden, 1, 1), (1, c, 1, 1)
    int reduction = 8;

    static int hidden_dim(int channels, int reduction) {
        return std::max(1, channels / reduction);
    }
    static ChannelAttentionParams zeros(int channels, int reduction) {
        int hid = hidden_dim(channels, reduction);
        ChannelAttentionParams p;
        p.w1 = Tensor<T>(hid, channels, 1, 1);
        p.b1 = Tensor<T>(1, hid, 1, 1);
        p.w2 = Tensor<T>(channels, hid, 1, 1);
        p.b2 = Tensor<T>(1, channels, 1, 1);
        p.reduction = reduction;
        return p;
    }
    int channels() const { return w1.c; }
};

/// Single 7x7 convolution over the stacked avg/max channel-pooled maps.
template <typename T>
struct SpatialAttentionParams {
    Tensor<T> w;  // (1, 2, 7, 7)
    Tensor<T> b;  // (1, 1, 1, 1)

    static SpatialAttentionParams zeros() {
        SpatialAttentionParams p;
        p.w = Tensor<T>(1, 2, 7, 7);
        p.b = Tensor<T>(1, 1, 1, 1);
        return p;
    }
};

/// Graph-side handles to attention parameters.
template <typename T>
struct ChannelAttentionVars {
    VarPtr<T> w1, b1, w2, b2;
    static ChannelAttentionVars from(const ChannelAttentionParams<T>& p) {
        return {make_leaf(p.w1), make_leaf(p.b1), make_leaf(p.w2), make_leaf(p.b2)};
    }
};

template <typename T>
struct SpatialAttentionVars {
    VarPtr<T> w, b;
    static SpatialAttentionVars from(const SpatialAttentionParams<T>& p) {
        return {make_leaf(p.w), make_leaf(p.b)};
    }
};

/// Per-channel gate in (0,1): sigmoid(MLP(avgpool f) + MLP(maxpool f)),
/// MLP shared, ReLU after its first layer. Output shape (n, c, 1, 1).
template <typename T>
VarPtr<T> channel_attention_map(const VarPtr<T>& f, const ChannelAttentionVars<T>& p) {
    if (p.w1->value.c != f->value.c)
        throw ShapeError("channel_attention: params expect " + std::to_string(p.w1->value.c) +
                         " channels, input has " + std::to_string(f->value.c));
    auto mlp = [&](const VarPtr<T>& pooled) {
        return dense(relu(dense(pooled, p.w1, p.b1)), p.w2, p.b2);
    };
    auto avg_path = mlp(global_pool(f, PoolKind::Avg));
    auto max_path = mlp(global_pool(f, PoolKind::Max));
    return sigmoid(add(avg_path, max_path));
}

/// Per-pixel gate in (0,1): sigmoid(conv7x7(concat(channel_avg f,
/// channel_max f))) with same-padding. Output shape (n, 1, h, w).
template <typename T>
VarPtr<T> spatial_attention_map(const VarPtr<T>& f, const SpatialAttentionVars<T>& p) {
    auto stacked = concat_channels<T>(
        {channel_pool(f, PoolKind::Avg), channel_pool(f, PoolKind::Max)});
    return sigmoid(conv2d(stacked, p.w, p.b, same_padding_for_kernel(7)));
}

/// One of the six wirings. Sequential modes recompute the second map from the
/// already reweighted features; Parallel computes both maps from the original
/// f, so the two multiplications commute.
template <typename T>
VarPtr<T> apply_attention(const VarPtr<T>& f, AttentionMode mode,
                          const ChannelAttentionVars<T>& cp, const SpatialAttentionVars<T>& sp) {
    switch (mode) {
        case AttentionMode::Baseline:
            return f;
        case AttentionMode::Channel:
            return broadcast_mul(f, channel_attention_map(f, cp));
        case AttentionMode::Spatial:
            return broadcast_mul(f, spatial_attention_map(f, sp));
        case AttentionMode::ChannelThenSpatial: {
            auto g = broadcast_mul(f, channel_attention_map(f, cp));
            return broadcast_mul(g, spatial_attention_map(g, sp));
        }
        case AttentionMode::SpatialThenChannel: {
            auto g = broadcast_mul(f, spatial_attention_map(f, sp));
            return broadcast_mul(g, channel_attention_map(g, cp));
        }
        case AttentionMode::Parallel:
            return broadcast_mul(broadcast_mul(f, channel_attention_map(f, cp)),
                                 spatial_attention_map(f, sp));
    }
    throw UsageError("apply_attention: unknown mode");
}

}  // namespace stegattn
