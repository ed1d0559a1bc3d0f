#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "igs/synopsis/lod_model.hpp"

namespace igs {

inline constexpr uint16_t kModelFormatVersion = 1;

// "IGS1" file: self-describing header, SoA sections in fixed order (anchor
// ids, positions, offsets, base scales, idx bytes, bitmaps, active grid
// tables, codebook, decoder weights), trailing CRC32 over all prior bytes.
// Reals are 32-bit; serializing quantizes, so save(load(save(m))) is
// byte-identical to save(m).
std::vector<uint8_t> serialize_model(const LevelSnapshot& s);
LevelSnapshot parse_model(std::span<const uint8_t> bytes);

void save_model(const LevelSnapshot& s, const std::string& path);
LevelSnapshot load_model(const std::string& path);

bool meta_equal(const ModelMeta& a, const ModelMeta& b);

// "IGSZ" wrapper: deflated payload with its raw size, for the base stage of
// a packed hierarchy.
void save_compressed(std::span<const uint8_t> raw, int level, const std::string& path);
std::vector<uint8_t> load_compressed(const std::string& path);

}  // namespace igs
