#include "stegattn/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

#include "stegattn/ops.hpp"

namespace stegattn {

double psnr(const Tensor<float>& a, const Tensor<float>& b, double max_val) {
    require_same_shape(a, b, "psnr");
    double acc = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = static_cast<double>(a.data[i]) - b.data[i];
        acc += d * d;
    }
    double m = acc / static_cast<double>(a.size());
    if (m == 0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(max_val * max_val / m);
}

namespace {

constexpr int kWin = 11;
constexpr double kSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;  // (K1 * L)^2, L = 1
constexpr double kC2 = 0.03 * 0.03;

const std::array<double, kWin>& gauss1d() {
    static const std::array<double, kWin> g = [] {
        std::array<double, kWin> k{};
        double s = 0;
        for (int i = 0; i < kWin; ++i) {
            double d = i - kWin / 2;
            k[i] = std::exp(-d * d / (2 * kSigma * kSigma));
            s += k[i];
        }
        for (double& v : k) v /= s;
        return k;
    }();
    return g;
}

// Valid-region separable Gaussian filter of one channel plane.
std::vector<double> gauss_filter(const std::vector<double>& img, int h, int w) {
    const auto& g = gauss1d();
    const int vw = w - kWin + 1, vh = h - kWin + 1;
    std::vector<double> rows(static_cast<std::size_t>(h) * vw);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < vw; ++x) {
            double acc = 0;
            for (int k = 0; k < kWin; ++k) acc += g[k] * img[static_cast<std::size_t>(y) * w + x + k];
            rows[static_cast<std::size_t>(y) * vw + x] = acc;
        }
    std::vector<double> out(static_cast<std::size_t>(vh) * vw);
    for (int y = 0; y < vh; ++y)
        for (int x = 0; x < vw; ++x) {
            double acc = 0;
            for (int k = 0; k < kWin; ++k) acc += g[k] * rows[static_cast<std::size_t>(y + k) * vw + x];
            out[static_cast<std::size_t>(y) * vw + x] = acc;
        }
    return out;
}

}  // namespace

double ssim(const Tensor<float>& a, const Tensor<float>& b) {
    require_same_shape(a, b, "ssim");
    if (a.n != 1) throw UsageError("ssim: expects a single image pair (n=1), got n=" +
                                   std::to_string(a.n));
    if (a.h < kWin || a.w < kWin)
        throw UsageError("ssim: image " + a.shape_str() + " smaller than the 11x11 window");

    const int h = a.h, w = a.w;
    const std::size_t hw = static_cast<std::size_t>(h) * w;
    double total = 0;
    long count = 0;
    std::vector<double> pa(hw), pb(hw), paa(hw), pbb(hw), pab(hw);
    for (int ic = 0; ic < a.c; ++ic) {
        const float* ca = &a.data[a.index(0, ic, 0, 0)];
        const float* cb = &b.data[b.index(0, ic, 0, 0)];
        for (std::size_t i = 0; i < hw; ++i) {
            pa[i] = ca[i];
            pb[i] = cb[i];
            paa[i] = pa[i] * pa[i];
            pbb[i] = pb[i] * pb[i];
            pab[i] = pa[i] * pb[i];
        }
        auto mu_a = gauss_filter(pa, h, w);
        auto mu_b = gauss_filter(pb, h, w);
        auto e_aa = gauss_filter(paa, h, w);
        auto e_bb = gauss_filter(pbb, h, w);
        auto e_ab = gauss_filter(pab, h, w);
        for (std::size_t i = 0; i < mu_a.size(); ++i) {
            double va = e_aa[i] - mu_a[i] * mu_a[i];
            double vb = e_bb[i] - mu_b[i] * mu_b[i];
            double cab = e_ab[i] - mu_a[i] * mu_b[i];
            total += ((2 * mu_a[i] * mu_b[i] + kC1) * (2 * cab + kC2)) /
                     ((mu_a[i] * mu_a[i] + mu_b[i] * mu_b[i] + kC1) * (va + vb + kC2));
            ++count;
        }
    }
    return total / count;
}

std::string metrics_csv_row(const MetricsReport& r) {
    auto f3 = [](double v) {
        if (std::isinf(v)) return std::string("inf");
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.3f", v);
        return std::string(buf);
    };
    auto f4 = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.4f", v);
        return std::string(buf);
    };
    return r.model_name + "," + f3(r.psnr_cover) + "," + f3(r.ssim_cover) + "," +
           f3(r.psnr_secret) + "," + f3(r.ssim_secret) + "," + f4(r.mse_cover) + "," +
           f4(r.mse_secret);
}

MetricsReport evaluate_pairs(const StegoModelParams<float>& params,
                             const std::vector<Tensor<float>>& covers,
                             const std::vector<Tensor<float>>& secrets,
                             const std::string& model_name) {
    if (covers.empty() || covers.size() != secrets.size())
        throw UsageError("evaluate_pairs: need a non-empty matched cover/secret set");
    auto mv = ModelVars<float>::from(params);
    MetricsReport rep;
    rep.model_name = model_name;
    double se_cover = 0, se_secret = 0;
    std::size_t px_cover = 0, px_secret = 0;
    for (std::size_t i = 0; i < covers.size(); ++i) {
        auto cover = make_constant(covers[i]);
        auto secret = make_constant(secrets[i]);
        auto stego = hide_forward(cover, prep_forward(secret, mv), mv);
        auto rec = reveal_forward(stego, mv);
        rep.psnr_cover += psnr(covers[i], stego->value);
        rep.ssim_cover += ssim(covers[i], stego->value);
        rep.psnr_secret += psnr(secrets[i], rec->value);
        rep.ssim_secret += ssim(secrets[i], rec->value);
        for (std::size_t k = 0; k < covers[i].size(); ++k) {
            double d = static_cast<double>(covers[i].data[k]) - stego->value.data[k];
            se_cover += d * d;
        }
        for (std::size_t k = 0; k < secrets[i].size(); ++k) {
            double d = static_cast<double>(secrets[i].data[k]) - rec->value.data[k];
            se_secret += d * d;
        }
        px_cover += covers[i].size();
        px_secret += secrets[i].size();
    }
    const double n = static_cast<double>(covers.size());
    rep.psnr_cover /= n;
    rep.ssim_cover /= n;
    rep.psnr_secret /= n;
    rep.ssim_secret /= n;
    rep.mse_cover = se_cover / static_cast<double>(px_cover);
    rep.mse_secret = se_secret / static_cast<double>(px_secret);
    return rep;
}

}  // namespace stegattn
