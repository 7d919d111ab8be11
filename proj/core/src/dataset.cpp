#include "stegattn/dataset.hpp"

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <random>

namespace stegattn {

namespace {

Tensor<float> mat_to_tensor(const cv::Mat& bgr) {
    Tensor<float> t(1, 3, bgr.rows, bgr.cols);
    for (int y = 0; y < bgr.rows; ++y)
        for (int x = 0; x < bgr.cols; ++x) {
            const cv::Vec3b& px = bgr.at<cv::Vec3b>(y, x);
            t.at(0, 0, y, x) = px[2] / 255.0f;  // R
            t.at(0, 1, y, x) = px[1] / 255.0f;  // G
            t.at(0, 2, y, x) = px[0] / 255.0f;  // B
        }
    return t;
}

cv::Mat crop_and_resize(const cv::Mat& img, int size) {
    int side = std::min(img.rows, img.cols);
    cv::Rect roi((img.cols - side) / 2, (img.rows - side) / 2, side, side);
    cv::Mat sq = img(roi);
    if (size > 0 && size != side) {
        cv::Mat resized;
        cv::resize(sq, resized, cv::Size(size, size), 0, 0, cv::INTER_LINEAR);
        return resized;
    }
    return sq.clone();
}

}  // namespace

Tensor<float> load_image(const std::string& path, int size) {
    cv::Mat img = cv::imread(path, cv::IMREAD_COLOR);
    if (img.empty()) throw DataError("cannot decode image: " + path);
    return mat_to_tensor(crop_and_resize(img, size));
}

void save_image(const std::string& path, const Tensor<float>& img) {
    if (img.n != 1 || img.c != 3)
        throw UsageError("save_image: expected a (1,3,h,w) tensor, got " + img.shape_str());
    cv::Mat out(img.h, img.w, CV_8UC3);
    for (int y = 0; y < img.h; ++y)
        for (int x = 0; x < img.w; ++x) {
            auto q = [&](int ch) {
                float v = std::clamp(img.at(0, ch, y, x), 0.0f, 1.0f);
                return static_cast<unsigned char>(std::lround(v * 255.0f));
            };
            out.at<cv::Vec3b>(y, x) = cv::Vec3b(q(2), q(1), q(0));  // BGR
        }
    if (!cv::imwrite(path, out)) throw DataError("cannot write image: " + path);
}

Dataset load_dataset(const std::string& dir, int image_size, std::uint64_t seed) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) throw DataError("dataset directory not found: " + dir);
    std::vector<std::string> files;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_regular_file()) files.push_back(entry.path().string());
    std::sort(files.begin(), files.end());

    std::vector<Tensor<float>> images;
    for (const auto& path : files) {
        try {
            images.push_back(load_image(path, image_size));
        } catch (const DataError&) {
            std::cerr << "warning: skipping unreadable image " << path << "\n";
        }
    }
    if (images.size() < 2)
        throw UsageError("dataset " + dir + " has " + std::to_string(images.size()) +
                         " usable images; need at least 2");

    std::mt19937_64 rng(seed);
    std::shuffle(images.begin(), images.end(), rng);
    const std::size_t pairs = images.size() / 2;
    Dataset ds;
    ds.covers.assign(images.begin(), images.begin() + pairs);
    ds.secrets.assign(images.begin() + pairs, images.begin() + 2 * pairs);
    return ds;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(std::size_t pairs) {
    std::size_t eval_count = std::max<std::size_t>(1, pairs / 5);
    if (eval_count >= pairs)
        throw UsageError("dataset too small to hold out an evaluation split (" +
                         std::to_string(pairs) + " pairs)");
    std::vector<std::size_t> train_idx, eval_idx;
    for (std::size_t i = 0; i < pairs - eval_count; ++i) train_idx.push_back(i);
    for (std::size_t i = pairs - eval_count; i < pairs; ++i) eval_idx.push_back(i);
    return {train_idx, eval_idx};
}

std::pair<Dataset, Dataset> split_dataset(const Dataset& ds) {
    auto [train_idx, eval_idx] = split_indices(ds.pair_count());
    Dataset train, eval;
    for (std::size_t i : train_idx) {
        train.covers.push_back(ds.covers[i]);
        train.secrets.push_back(ds.secrets[i]);
    }
    for (std::size_t i : eval_idx) {
        eval.covers.push_back(ds.covers[i]);
        eval.secrets.push_back(ds.secrets[i]);
    }
    return {train, eval};
}

}  // namespace stegattn
