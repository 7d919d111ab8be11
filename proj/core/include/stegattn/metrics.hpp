#pragma once

#include <string>
#include <vector>

#include "stegattn/model.hpp"
#include "stegattn/tensor.hpp"

namespace stegattn {

/// One comparison-table row. PSNR/SSIM are averaged per image then over the
/// dataset; MSE is the mean over all pixels of all images.
struct MetricsReport {
    std::string model_name;
    double psnr_cover = 0, ssim_cover = 0;
    double psnr_secret = 0, ssim_secret = 0;
    double mse_cover = 0, mse_secret = 0;
};

/// 10*log10(max_val^2 / mse); +inf when the images are identical.
double psnr(const Tensor<float>& a, const Tensor<float>& b, double max_val = 1.0);

/// Single-scale SSIM: 11x11 Gaussian window sigma 1.5, K1=0.01, K2=0.03,
/// dynamic range 1.0, valid-region windows, per channel, averaged.
/// Requires n == 1 and h, w >= 11.
double ssim(const Tensor<float>& a, const Tensor<float>& b);

inline const char* metrics_csv_header() {
    return "model,psnr_cover,ssim_cover,psnr_secret,ssim_secret,mse_cover,mse_secret";
}

/// PSNR/SSIM to 3 decimals, MSE to 4; infinite PSNR renders as "inf".
std::string metrics_csv_row(const MetricsReport& r);

/// Runs hide+reveal over every pair and aggregates the six metrics.
MetricsReport evaluate_pairs(const StegoModelParams<float>& params,
                             const std::vector<Tensor<float>>& covers,
                             const std::vector<Tensor<float>>& secrets,
                             const std::string& model_name);

}  // namespace stegattn
