#pragma once

#include <string>

#include "igs/render/image.hpp"

namespace igs {

// Binary PPM (P6, maxval 255); channels map as round(v * 255) on write and
// v / 255 on read, so write(read(f)) is byte-exact for any valid file.
void write_ppm(const Image& img, const std::string& path);
Image read_ppm(const std::string& path);

}  // namespace igs
