#include "igs/datasets/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <vector>

#include "igs/core/errors.hpp"
#include "igs/streamio/binary.hpp"

namespace igs {

void write_ppm(const Image& img, const std::string& path) {
    if (img.width < 1 || img.height < 1)
        throw ValidationError("ppm: empty image");
    std::string header = "P6\n" + std::to_string(img.width) + " " +
                         std::to_string(img.height) + "\n255\n";
    std::vector<uint8_t> bytes(header.begin(), header.end());
    bytes.reserve(bytes.size() + 3 * img.pixel_count());
    for (double v : img.data) {
        double q = std::round(std::clamp(v, 0.0, 1.0) * 255.0);
        bytes.push_back(static_cast<uint8_t>(q));
    }
    write_file_bytes(path, bytes);
}

namespace {

// Whitespace and '#' comments between header tokens, per the format.
void skip_separators(const std::vector<uint8_t>& b, size_t& i) {
    while (i < b.size()) {
        if (std::isspace(b[i])) {
            ++i;
        } else if (b[i] == '#') {
            while (i < b.size() && b[i] != '\n') ++i;
        } else {
            break;
        }
    }
}

long parse_int(const std::vector<uint8_t>& b, size_t& i, const std::string& what,
               const std::string& path) {
    skip_separators(b, i);
    size_t start = i;
    long v = 0;
    while (i < b.size() && std::isdigit(b[i])) {
        v = v * 10 + (b[i] - '0');
        ++i;
    }
    if (i == start)
        throw IoError(IoCode::malformed, path + ": expected " + what);
    return v;
}

}  // namespace

Image read_ppm(const std::string& path) {
    std::vector<uint8_t> b = read_file_bytes(path);
    if (b.size() < 2 || b[0] != 'P' || b[1] != '6')
        throw IoError(IoCode::bad_magic, path + ": not a P6 ppm");
    size_t i = 2;
    long w = parse_int(b, i, "width", path);
    long h = parse_int(b, i, "height", path);
    long maxval = parse_int(b, i, "maxval", path);
    if (w < 1 || h < 1 || maxval != 255)
        throw IoError(IoCode::malformed, path + ": unsupported ppm dimensions");
    if (i >= b.size() || !std::isspace(b[i]))
        throw IoError(IoCode::malformed, path + ": missing pixel separator");
    ++i;
    size_t need = 3 * static_cast<size_t>(w) * static_cast<size_t>(h);
    if (b.size() - i != need)
        throw IoError(IoCode::truncated, path + ": pixel payload size mismatch");
    Image img(static_cast<int>(w), static_cast<int>(h));
    for (size_t k = 0; k < need; ++k) img.data[k] = b[i + k] / 255.0;
    return img;
}

}  // namespace igs
