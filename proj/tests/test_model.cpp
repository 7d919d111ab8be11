#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "stegattn/gradcheck.hpp"
#include "stegattn/model.hpp"

using namespace stegattn;

namespace {

ConvBlockParams<float> random_block(int cin, std::mt19937_64& rng) {
    auto b = ConvBlockParams<float>::zeros(cin);
    std::uniform_real_distribution<float> d(-0.2f, 0.2f);
    for (Tensor<float>* t : {&b.w3, &b.b3, &b.w4, &b.b4, &b.w5, &b.b5})
        for (float& v : t->data) v = d(rng);
    return b;
}

}  // namespace

TEST_CASE("conv block: shape contract and zero propagation") {
    std::mt19937_64 rng(1);
    auto x = oracle::random_tensor<float>(2, 3, 16, 16, rng);
    auto out = conv_block_forward(make_constant(x), ConvBlockVars<float>::from(random_block(3, rng)));
    CHECK(out->value.n == 2);
    CHECK(out->value.c == 65);
    CHECK(out->value.h == 16);
    CHECK(out->value.w == 16);

    auto zeros = ConvBlockVars<float>::from(ConvBlockParams<float>::zeros(3));
    auto zout = conv_block_forward(make_constant(x), zeros);
    for (float v : zout->value.data) CHECK(v == 0.0f);
}

TEST_CASE("conv block: channels partition 50/10/5 into the three paths") {
    std::mt19937_64 rng(2);
    auto p = random_block(4, rng);
    auto x = oracle::random_tensor<float>(1, 4, 10, 10, rng);
    auto out = conv_block_forward(make_constant(x), ConvBlockVars<float>::from(p))->value;

    auto path3 = relu_forward(conv2d_forward(x, p.w3, p.b3, same_padding_for_kernel(3)));
    auto path4 = relu_forward(conv2d_forward(x, p.w4, p.b4, same_padding_for_kernel(4)));
    auto path5 = relu_forward(conv2d_forward(x, p.w5, p.b5, same_padding_for_kernel(5)));
    CHECK(slice_channels(out, 0, 50).data == path3.data);
    CHECK(slice_channels(out, 50, 10).data == path4.data);
    CHECK(slice_channels(out, 60, 5).data == path5.data);
}

TEST_CASE("prep network: shape, zero case, composition") {
    auto params = init_params(11, AttentionMode::Baseline, 1.0f);
    auto mv = ModelVars<float>::from(params);
    std::mt19937_64 rng(3);
    auto secret = oracle::random_tensor<float>(1, 3, 16, 16, rng, 0.0f, 1.0f);
    auto feats = prep_forward(make_constant(secret), mv);
    CHECK(feats->value.c == 65);
    CHECK(feats->value.h == 16);

    // equals two manual block applications
    auto manual = conv_block_forward(conv_block_forward(make_constant(secret), mv.prep[0]),
                                     mv.prep[1]);
    CHECK(feats->value.data == manual->value.data);

    auto zparams = StegoModelParams<float>::zeros(AttentionMode::Baseline, 1.0f, 8, false);
    auto zmv = ModelVars<float>::from(zparams);
    Tensor<float> zsecret(1, 3, 16, 16);
    auto zfeats = prep_forward(make_constant(zsecret), zmv);
    for (float v : zfeats->value.data) CHECK(v == 0.0f);
}

TEST_CASE("hide: stego shape and strict (0,1) range for every mode") {
    std::mt19937_64 rng(4);
    auto cover = oracle::random_tensor<float>(2, 3, 16, 16, rng, 0.0f, 1.0f);
    auto secret = oracle::random_tensor<float>(2, 3, 16, 16, rng, 0.0f, 1.0f);
    for (AttentionMode mode : kAllModes) {
        auto params = init_params(5, mode, 1.0f);
        auto mv = ModelVars<float>::from(params);
        auto stego = hide_forward(make_constant(cover),
                                  prep_forward(make_constant(secret), mv), mv);
        CHECK(stego->value.n == 2);
        CHECK(stego->value.c == 3);
        CHECK(stego->value.h == 16);
        for (float v : stego->value.data) {
            CHECK(v > 0.0f);
            CHECK(v < 1.0f);
        }
    }
}

TEST_CASE("hide: first hiding block consumes 68 channels") {
    auto params = init_params(6, AttentionMode::Baseline, 1.0f);
    CHECK(params.hiding[0].in_channels() == 68);
    for (int i = 1; i < 5; ++i) CHECK(params.hiding[i].in_channels() == 65);
}

TEST_CASE("hide with Baseline equals an attention-free wiring") {
    auto params = init_params(7, AttentionMode::Baseline, 1.0f);
    auto mv = ModelVars<float>::from(params);
    std::mt19937_64 rng(8);
    auto cover = oracle::random_tensor<float>(1, 3, 16, 16, rng, 0.0f, 1.0f);
    auto secret = oracle::random_tensor<float>(1, 3, 16, 16, rng, 0.0f, 1.0f);
    auto feats = prep_forward(make_constant(secret), mv);
    auto stego = hide_forward(make_constant(cover), feats, mv);

    // same chain with the attention hook removed entirely
    auto x = concat_channels<float>({feats, make_constant(cover)});
    for (int i = 0; i < 5; ++i) x = conv_block_forward(x, mv.hiding[i]);
    auto plain = sigmoid(conv2d(x, mv.hiding_out_w, mv.hiding_out_b, same_padding_for_kernel(3)));
    CHECK(stego->value.data == plain->value.data);
}

TEST_CASE("reveal: shape, range, manual composition") {
    auto params = init_params(9, AttentionMode::Baseline, 1.0f);
    auto mv = ModelVars<float>::from(params);
    std::mt19937_64 rng(10);
    auto stego = oracle::random_tensor<float>(1, 3, 16, 16, rng, 0.0f, 1.0f);
    auto rec = reveal_forward(make_constant(stego), mv);
    CHECK(rec->value.same_shape(stego));
    for (float v : rec->value.data) {
        CHECK(v > 0.0f);
        CHECK(v < 1.0f);
    }

    auto x = make_constant(stego);
    for (int i = 0; i < 5; ++i) x = conv_block_forward(x, mv.reveal[i]);
    auto manual = sigmoid(conv2d(x, mv.reveal_out_w, mv.reveal_out_b, same_padding_for_kernel(3)));
    CHECK(rec->value.data == manual->value.data);
}

TEST_CASE("loss: zero at perfection, beta weighting, arithmetic fixture") {
    std::mt19937_64 rng(12);
    auto cover = oracle::random_tensor<float>(1, 3, 8, 8, rng, 0.0f, 1.0f);
    auto secret = oracle::random_tensor<float>(1, 3, 8, 8, rng, 0.0f, 1.0f);
    CHECK(loss_value(cover, cover, secret, secret, 1.0f) == 0.0f);

    auto stego = oracle::random_tensor<float>(1, 3, 8, 8, rng, 0.0f, 1.0f);
    auto rec = oracle::random_tensor<float>(1, 3, 8, 8, rng, 0.0f, 1.0f);
    CHECK(loss_value(cover, stego, secret, rec, 0.0f) ==
          doctest::Approx(mse_forward(cover, stego)));

    // published baseline-row terms as a pure arithmetic fixture
    Tensor<float> a(1, 1, 1, 1), b(1, 1, 1, 1), c(1, 1, 1, 1), d(1, 1, 1, 1);
    b.data[0] = std::sqrt(0.1620f);
    d.data[0] = std::sqrt(0.1701f);
    CHECK(loss_value(a, b, c, d, 1.0f) == doctest::Approx(0.3321).epsilon(1e-5));
}

TEST_CASE("init_params: deterministic per seed, distinct across seeds") {
    auto a = init_params(123, AttentionMode::Parallel, 0.75f);
    auto b = init_params(123, AttentionMode::Parallel, 0.75f);
    bool identical = true;
    std::size_t i = 0;
    std::vector<const Tensor<float>*> ta, tb;
    for_each_param(a, [&](const std::string&, Tensor<float>& t) { ta.push_back(&t); });
    for_each_param(b, [&](const std::string&, Tensor<float>& t) { tb.push_back(&t); });
    REQUIRE(ta.size() == tb.size());
    for (i = 0; i < ta.size(); ++i)
        if (ta[i]->data != tb[i]->data) identical = false;
    CHECK(identical);

    auto c = init_params(124, AttentionMode::Parallel, 0.75f);
    std::vector<const Tensor<float>*> tc;
    for_each_param(c, [&](const std::string&, Tensor<float>& t) { tc.push_back(&t); });
    bool any_diff = false;
    for (i = 0; i < ta.size(); ++i)
        if (ta[i]->data != tc[i]->data) any_diff = true;
    CHECK(any_diff);

    // biases all zero
    for_each_param(a, [&](const std::string& name, Tensor<float>& t) {
        if (name.ends_with(".bias"))
            for (float v : t.data) CHECK(v == 0.0f);
    });
}

TEST_CASE("parameter count matches the closed form from the layer dimensions") {
    auto params = init_params(1, AttentionMode::Parallel, 1.0f, 8, false);
    auto block_count = [](long cin) { return cin * (50 * 9 + 10 * 16 + 5 * 25) + 65; };
    const long attn_hidden = 65 / 8;  // reduction 8
    const long ca = attn_hidden * 65 + attn_hidden + 65 * attn_hidden + 65;
    const long sa = 2 * 7 * 7 + 1;
    const long out_head = 3L * 65 * 9 + 3;
    long expected = block_count(3) + block_count(65)                       // prep
                    + block_count(68) + 4 * block_count(65) + out_head     // hiding
                    + block_count(3) + 4 * block_count(65) + out_head      // reveal
                    + 8 * (ca + sa);                                       // 4 + 4 attention pairs
    CHECK(static_cast<long>(param_count(params)) == expected);
}

TEST_CASE("all six modes run forward+backward; parameters get gradients") {
    std::mt19937_64 rng(14);
    auto cover = make_constant(oracle::random_tensor<float>(1, 3, 8, 8, rng, 0.0f, 1.0f));
    auto secret = make_constant(oracle::random_tensor<float>(1, 3, 8, 8, rng, 0.0f, 1.0f));
    for (AttentionMode mode : kAllModes) {
        auto params = init_params(15, mode, 1.0f, 8, true);
        auto mv = ModelVars<float>::from(params);
        auto fwd = model_loss(cover, secret, mv);
        CHECK(std::isfinite(fwd.loss->value.data[0]));
        backward(fwd.loss);
        // every convolutional parameter is always in the graph; attention
        // parameters only when the wiring uses them
        for (auto& b : mv.hiding) CHECK_NOTHROW(grad(b.w3));
        for (auto& b : mv.reveal) CHECK_NOTHROW(grad(b.w3));
        if (mode == AttentionMode::Parallel) {
            for (auto& a : mv.hiding_attn) {
                CHECK_NOTHROW(grad(a.ca.w1));
                CHECK_NOTHROW(grad(a.sa.w));
            }
        }
        if (mode == AttentionMode::Baseline)
            CHECK(grad_if_present(mv.hiding_attn[0].ca.w1) == nullptr);
    }
}

TEST_CASE("end-to-end gradient matches finite differences (64-bit)") {
    for (const auto& r : run_model_gradcheck(99, /*all_modes=*/false)) {
        INFO(r.name, " rel_err=", r.rel_err);
        CHECK(r.rel_err <= r.tolerance);
    }
}

TEST_CASE("one small gradient step does not increase the loss (5 seeds)") {
    std::mt19937_64 data_rng(21);
    auto cover = make_constant(oracle::random_tensor<float>(2, 3, 16, 16, data_rng, 0.0f, 1.0f));
    auto secret = make_constant(oracle::random_tensor<float>(2, 3, 16, 16, data_rng, 0.0f, 1.0f));
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        auto params = init_params(seed, AttentionMode::Parallel, 1.0f);
        auto mv = ModelVars<float>::from(params);
        auto fwd = model_loss(cover, secret, mv);
        float before = fwd.loss->value.data[0];
        backward(fwd.loss);

        std::vector<const Tensor<float>*> grads;
        for_each_var(mv, [&](VarPtr<float>& v) { grads.push_back(grad_if_present(v)); });
        std::size_t k = 0;
        for_each_param(params, [&](const std::string&, Tensor<float>& t) {
            if (grads[k])
                for (std::size_t i = 0; i < t.size(); ++i)
                    t.data[i] -= 1e-4f * grads[k]->data[i];
            ++k;
        });

        auto mv2 = ModelVars<float>::from(params);
        float after = model_loss(cover, secret, mv2).loss->value.data[0];
        INFO("seed ", seed, ": ", before, " -> ", after);
        CHECK(after <= before);
    }
}

TEST_CASE("shape preservation holds for non-square and minimum sizes") {
    auto params = init_params(30, AttentionMode::Channel, 1.0f);
    auto mv = ModelVars<float>::from(params);
    std::mt19937_64 rng(31);
    for (auto [h, w] : {std::pair{8, 8}, std::pair{8, 12}, std::pair{9, 15}}) {
        auto cover = make_constant(oracle::random_tensor<float>(1, 3, h, w, rng, 0.0f, 1.0f));
        auto secret = make_constant(oracle::random_tensor<float>(1, 3, h, w, rng, 0.0f, 1.0f));
        auto stego = hide_forward(cover, prep_forward(secret, mv), mv);
        auto rec = reveal_forward(stego, mv);
        CHECK(stego->value.same_shape(cover->value));
        CHECK(rec->value.same_shape(secret->value));
    }
}
