#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <string>

#include "stegattn/attention.hpp"
#include "stegattn/autodiff.hpp"

namespace stegattn {

inline constexpr int kBlockChannels = 65;     // 50 + 10 + 5
inline constexpr int kHidingInChannels = 68;  // 65 prep features + 3 cover channels

/// One convolutional block: 3x3 -> 50 maps, 4x4 -> 10 maps, 5x5 -> 5 maps,
/// each ReLU-activated, concatenated to 65 channels at unchanged h, w.
template <typename T>
struct ConvBlockParams {
    Tensor<T> w3, b3;  // (50, cin, 3, 3)
    Tensor<T> w4, b4;  // (10, cin, 4, 4)
    Tensor<T> w5, b5;  // (5, cin, 5, 5)

    static ConvBlockParams zeros(int cin) {
        ConvBlockParams p;
        p.w3 = Tensor<T>(50, cin, 3, 3);
        p.b3 = Tensor<T>(1, 50, 1, 1);
        p.w4 = Tensor<T>(10, cin, 4, 4);
        p.b4 = Tensor<T>(1, 10, 1, 1);
        p.w5 = Tensor<T>(5, cin, 5, 5);
        p.b5 = Tensor<T>(1, 5, 1, 1);
        return p;
    }
    int in_channels() const { return w3.c; }
};

template <typename T>
struct AttentionPairParams {
    ChannelAttentionParams<T> ca;
    SpatialAttentionParams<T> sa;

    static AttentionPairParams zeros(int channels, int reduction) {
        return {ChannelAttentionParams<T>::zeros(channels, reduction),
                SpatialAttentionParams<T>::zeros()};
    }
};

/// All learnable parameters plus the wiring choices they were built for.
/// Decoder attention parameters are always allocated (and serialized) so the
/// checkpoint layout does not depend on the flag; they enter the forward pass
/// only when decoder_attention is set.
template <typename T>
struct StegoModelParams {
    std::array<ConvBlockParams<T>, 2> prep;
    std::array<ConvBlockParams<T>, 5> hiding;
    Tensor<T> hiding_out_w, hiding_out_b;  // (3, 65, 3, 3)
    std::array<ConvBlockParams<T>, 5> reveal;
    Tensor<T> reveal_out_w, reveal_out_b;
    std::array<AttentionPairParams<T>, 4> hiding_attn;
    std::array<AttentionPairParams<T>, 4> reveal_attn;

    AttentionMode mode = AttentionMode::Baseline;
    float beta = 1.0f;
    int reduction = 8;
    bool decoder_attention = false;

    static StegoModelParams zeros(AttentionMode mode, float beta, int reduction,
                                  bool decoder_attention) {
        StegoModelParams p;
        p.prep = {ConvBlockParams<T>::zeros(3), ConvBlockParams<T>::zeros(kBlockChannels)};
        p.hiding[0] = ConvBlockParams<T>::zeros(kHidingInChannels);
        for (int i = 1; i < 5; ++i) p.hiding[i] = ConvBlockParams<T>::zeros(kBlockChannels);
        p.hiding_out_w = Tensor<T>(3, kBlockChannels, 3, 3);
        p.hiding_out_b = Tensor<T>(1, 3, 1, 1);
        p.reveal[0] = ConvBlockParams<T>::zeros(3);
        for (int i = 1; i < 5; ++i) p.reveal[i] = ConvBlockParams<T>::zeros(kBlockChannels);
        p.reveal_out_w = Tensor<T>(3, kBlockChannels, 3, 3);
        p.reveal_out_b = Tensor<T>(1, 3, 1, 1);
        for (auto& a : p.hiding_attn) a = AttentionPairParams<T>::zeros(kBlockChannels, reduction);
        for (auto& a : p.reveal_attn) a = AttentionPairParams<T>::zeros(kBlockChannels, reduction);
        p.mode = mode;
        p.beta = beta;
        p.reduction = reduction;
        p.decoder_attention = decoder_attention;
        return p;
    }

    template <typename U>
    StegoModelParams<U> cast() const;
};

/// Visits every parameter tensor in a fixed, checkpoint-stable order.
template <typename Params, typename F>
void for_each_param(Params& p, F&& f) {
    auto block = [&](const std::string& prefix, auto& b) {
        f(prefix + ".conv3.weight", b.w3);
        f(prefix + ".conv3.bias", b.b3);
        f(prefix + ".conv4.weight", b.w4);
        f(prefix + ".conv4.bias", b.b4);
        f(prefix + ".conv5.weight", b.w5);
        f(prefix + ".conv5.bias", b.b5);
    };
    auto attn = [&](const std::string& prefix, auto& a) {
        f(prefix + ".channel.mlp1.weight", a.ca.w1);
        f(prefix + ".channel.mlp1.bias", a.ca.b1);
        f(prefix + ".channel.mlp2.weight", a.ca.w2);
        f(prefix + ".channel.mlp2.bias", a.ca.b2);
        f(prefix + ".spatial.conv.weight", a.sa.w);
        f(prefix + ".spatial.conv.bias", a.sa.b);
    };
    for (int i = 0; i < 2; ++i) block("prep." + std::to_string(i), p.prep[i]);
    for (int i = 0; i < 5; ++i) block("hiding." + std::to_string(i), p.hiding[i]);
    f(std::string("hiding_out.weight"), p.hiding_out_w);
    f(std::string("hiding_out.bias"), p.hiding_out_b);
    for (int i = 0; i < 4; ++i) attn("hiding_attn." + std::to_string(i), p.hiding_attn[i]);
    for (int i = 0; i < 5; ++i) block("reveal." + std::to_string(i), p.reveal[i]);
    f(std::string("reveal_out.weight"), p.reveal_out_w);
    f(std::string("reveal_out.bias"), p.reveal_out_b);
    for (int i = 0; i < 4; ++i) attn("reveal_attn." + std::to_string(i), p.reveal_attn[i]);
}

template <typename T>
template <typename U>
StegoModelParams<U> StegoModelParams<T>::cast() const {
    StegoModelParams<U> out =
        StegoModelParams<U>::zeros(mode, beta, reduction, decoder_attention);
    std::vector<const Tensor<T>*> src;
    for_each_param(*this, [&](const std::string&, const Tensor<T>& t) { src.push_back(&t); });
    std::size_t i = 0;
    for_each_param(out, [&](const std::string&, Tensor<U>& t) { t = src[i++]->template cast<U>(); });
    return out;
}

template <typename T>
std::size_t param_count(const StegoModelParams<T>& p) {
    std::size_t n = 0;
    for_each_param(p, [&](const std::string&, const Tensor<T>& t) { n += t.size(); });
    return n;
}

/// Kaiming-style uniform init, bound sqrt(6 / fan_in); biases stay zero.
/// Deterministic given the seed.
inline StegoModelParams<float> init_params(std::uint64_t seed, AttentionMode mode, float beta,
                                           int reduction = 8, bool decoder_attention = false) {
    auto p = StegoModelParams<float>::zeros(mode, beta, reduction, decoder_attention);
    std::mt19937_64 rng(seed);
    for_each_param(p, [&](const std::string& name, Tensor<float>& t) {
        if (name.ends_with(".bias")) return;
        // fan_in: weights are (out, in, kh, kw) or (out, in, 1, 1).
        float fan_in = static_cast<float>(t.c) * t.h * t.w;
        float bound = std::sqrt(6.0f / fan_in);
        std::uniform_real_distribution<float> dist(-bound, bound);
        for (float& v : t.data) v = dist(rng);
    });
    return p;
}

// ---- graph construction ----

template <typename T>
struct ConvBlockVars {
    VarPtr<T> w3, b3, w4, b4, w5, b5;
    static ConvBlockVars from(const ConvBlockParams<T>& p) {
        return {make_leaf(p.w3), make_leaf(p.b3), make_leaf(p.w4),
                make_leaf(p.b4), make_leaf(p.w5), make_leaf(p.b5)};
    }
};

template <typename T>
struct AttentionPairVars {
    ChannelAttentionVars<T> ca;
    SpatialAttentionVars<T> sa;
    static AttentionPairVars from(const AttentionPairParams<T>& p) {
        return {ChannelAttentionVars<T>::from(p.ca), SpatialAttentionVars<T>::from(p.sa)};
    }
};

/// Leaf nodes for one training step's graph. Rebuilt from the parameter
/// tensors each step; gradients are read back through the same structure.
template <typename T>
struct ModelVars {
    std::array<ConvBlockVars<T>, 2> prep;
    std::array<ConvBlockVars<T>, 5> hiding;
    VarPtr<T> hiding_out_w, hiding_out_b;
    std::array<ConvBlockVars<T>, 5> reveal;
    VarPtr<T> reveal_out_w, reveal_out_b;
    std::array<AttentionPairVars<T>, 4> hiding_attn;
    std::array<AttentionPairVars<T>, 4> reveal_attn;
    AttentionMode mode;
    T beta;
    bool decoder_attention;

    static ModelVars from(const StegoModelParams<T>& p) {
        ModelVars mv;
        for (int i = 0; i < 2; ++i) mv.prep[i] = ConvBlockVars<T>::from(p.prep[i]);
        for (int i = 0; i < 5; ++i) mv.hiding[i] = ConvBlockVars<T>::from(p.hiding[i]);
        mv.hiding_out_w = make_leaf(p.hiding_out_w);
        mv.hiding_out_b = make_leaf(p.hiding_out_b);
        for (int i = 0; i < 5; ++i) mv.reveal[i] = ConvBlockVars<T>::from(p.reveal[i]);
        mv.reveal_out_w = make_leaf(p.reveal_out_w);
        mv.reveal_out_b = make_leaf(p.reveal_out_b);
        for (int i = 0; i < 4; ++i) mv.hiding_attn[i] = AttentionPairVars<T>::from(p.hiding_attn[i]);
        for (int i = 0; i < 4; ++i) mv.reveal_attn[i] = AttentionPairVars<T>::from(p.reveal_attn[i]);
        mv.mode = p.mode;
        mv.beta = static_cast<T>(p.beta);
        mv.decoder_attention = p.decoder_attention;
        return mv;
    }
};

/// Visits the parameter leaves in the same order as for_each_param.
template <typename T, typename F>
void for_each_var(ModelVars<T>& mv, F&& f) {
    auto block = [&](ConvBlockVars<T>& b) {
        f(b.w3); f(b.b3); f(b.w4); f(b.b4); f(b.w5); f(b.b5);
    };
    auto attn = [&](AttentionPairVars<T>& a) {
        f(a.ca.w1); f(a.ca.b1); f(a.ca.w2); f(a.ca.b2); f(a.sa.w); f(a.sa.b);
    };
    for (auto& b : mv.prep) block(b);
    for (auto& b : mv.hiding) block(b);
    f(mv.hiding_out_w);
    f(mv.hiding_out_b);
    for (auto& a : mv.hiding_attn) attn(a);
    for (auto& b : mv.reveal) block(b);
    f(mv.reveal_out_w);
    f(mv.reveal_out_b);
    for (auto& a : mv.reveal_attn) attn(a);
}

template <typename T>
VarPtr<T> conv_block_forward(const VarPtr<T>& x, const ConvBlockVars<T>& b) {
    return concat_channels<T>({
        relu(conv2d(x, b.w3, b.b3, same_padding_for_kernel(3))),
        relu(conv2d(x, b.w4, b.b4, same_padding_for_kernel(4))),
        relu(conv2d(x, b.w5, b.b5, same_padding_for_kernel(5))),
    });
}

/// Secret image (n,3,h,w) -> 65-channel feature map through 2 blocks.
template <typename T>
VarPtr<T> prep_forward(const VarPtr<T>& secret, const ModelVars<T>& mv) {
    return conv_block_forward(conv_block_forward(secret, mv.prep[0]), mv.prep[1]);
}

/// Cover + prep features -> stego image. 5 blocks with attention in the 4
/// gaps, then a 3x3 projection and sigmoid to keep pixels in (0,1).
template <typename T>
VarPtr<T> hide_forward(const VarPtr<T>& cover, const VarPtr<T>& prep_features,
                       const ModelVars<T>& mv) {
    auto x = concat_channels<T>({prep_features, cover});
    for (int i = 0; i < 5; ++i) {
        x = conv_block_forward(x, mv.hiding[i]);
        if (i < 4)
            x = apply_attention(x, mv.mode, mv.hiding_attn[i].ca, mv.hiding_attn[i].sa);
    }
    return sigmoid(conv2d(x, mv.hiding_out_w, mv.hiding_out_b, same_padding_for_kernel(3)));
}

/// Stego image -> reconstructed secret. Mirrors the hiding network;
/// attention only when decoder_attention is enabled.
template <typename T>
VarPtr<T> reveal_forward(const VarPtr<T>& stego, const ModelVars<T>& mv) {
    auto x = stego;
    for (int i = 0; i < 5; ++i) {
        x = conv_block_forward(x, mv.reveal[i]);
        if (i < 4 && mv.decoder_attention)
            x = apply_attention(x, mv.mode, mv.reveal_attn[i].ca, mv.reveal_attn[i].sa);
    }
    return sigmoid(conv2d(x, mv.reveal_out_w, mv.reveal_out_b, same_padding_for_kernel(3)));
}

/// mse(cover, stego) + beta * mse(secret, secret_rec), as a plain number.
template <typename T>
T loss_value(const Tensor<T>& cover, const Tensor<T>& stego, const Tensor<T>& secret,
             const Tensor<T>& secret_rec, T beta) {
    return mse_forward(cover, stego) + beta * mse_forward(secret, secret_rec);
}

template <typename T>
struct ForwardResult {
    VarPtr<T> stego;
    VarPtr<T> secret_rec;
    VarPtr<T> loss;
};

/// Full training graph for one batch.
template <typename T>
ForwardResult<T> model_loss(const VarPtr<T>& cover, const VarPtr<T>& secret,
                            const ModelVars<T>& mv) {
    ForwardResult<T> r;
    r.stego = hide_forward(cover, prep_forward(secret, mv), mv);
    r.secret_rec = reveal_forward(r.stego, mv);
    r.loss = add(mse(cover, r.stego), scale(mse(secret, r.secret_rec), mv.beta));
    return r;
}

}  // namespace stegattn
