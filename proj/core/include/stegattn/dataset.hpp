#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "stegattn/tensor.hpp"

namespace stegattn {

/// Paired cover/secret images, each a (1, 3, s, s) tensor with pixels in
/// [0, 1]. Pair i is covers[i] with secrets[i].
struct Dataset {
    std::vector<Tensor<float>> covers;
    std::vector<Tensor<float>> secrets;
    std::size_t pair_count() const { return covers.size(); }
};

/// Decodes every readable image in dir, center-crops to square, resizes to
/// image_size (bilinear), maps pixels to [0, 1]. Files are sorted
/// lexicographically, shuffled by seed, then split into halves: first half
/// covers, second half secrets (odd count drops the last). Undecodable files
/// are skipped with a warning on stderr; fewer than 2 usable images is a
/// usage error.
Dataset load_dataset(const std::string& dir, int image_size, std::uint64_t seed);

/// Index split used by the comparison experiment: the last max(1, pairs/5)
/// pairs are held out for evaluation, the rest train.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(
    std::size_t pairs);

/// Applies split_indices to a dataset. Returns (train, eval).
std::pair<Dataset, Dataset> split_dataset(const Dataset& ds);

/// Loads one image as (1, 3, s, s); size 0 keeps the native (center-cropped,
/// square) resolution. Throws DataError when the file cannot be decoded.
Tensor<float> load_image(const std::string& path, int size);

/// Writes a (1, 3, h, w) tensor as an 8-bit RGB PNG, rounding to the nearest
/// of the 256 levels.
void save_image(const std::string& path, const Tensor<float>& img);

}  // namespace stegattn
