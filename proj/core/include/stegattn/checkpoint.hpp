#pragma once

#include <string>
#include <utility>

#include "stegattn/model.hpp"
#include "stegattn/train.hpp"

namespace stegattn {

/// Checkpoint file layout (all integers little-endian):
///   magic "STGA"
///   u32 format_version (currently 1)
///   u32 config length, then that many bytes of JSON (the TrainConfig)
///   u32 manifest entry count, then per entry:
///     u32 name length, name bytes, u32 rank (always 4), rank u32 extents
///   payload: raw 32-bit little-endian floats, concatenated in manifest order
///   u32 CRC32 of the payload bytes
inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const StegoModelParams<float>& params, const TrainConfig& config,
                     const std::string& path);

/// Round trip is bitwise exact. Throws DataError on magic/version mismatch,
/// manifest/structure disagreement (detected before the payload is read),
/// truncation, or CRC mismatch.
std::pair<StegoModelParams<float>, TrainConfig> load_checkpoint(const std::string& path);

}  // namespace stegattn
