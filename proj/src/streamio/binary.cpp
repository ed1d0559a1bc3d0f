#include "igs/streamio/binary.hpp"

#include <zlib.h>

#include <bit>
#include <cstdio>
#include <cstring>

#include "igs/core/errors.hpp"

namespace igs {

void ByteWriter::u16(uint16_t v) {
    buf_.push_back(static_cast<uint8_t>(v));
    buf_.push_back(static_cast<uint8_t>(v >> 8));
}

void ByteWriter::u32(uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

void ByteWriter::u64(uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

void ByteWriter::f32(double v) {
    u32(std::bit_cast<uint32_t>(static_cast<float>(v)));
}

void ByteWriter::bytes(std::span<const uint8_t> b) {
    buf_.insert(buf_.end(), b.begin(), b.end());
}

void ByteWriter::tag(const char name[4]) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<uint8_t>(name[i]));
}

void ByteReader::need(size_t n) {
    if (pos_ + n > data_.size())
        throw IoError(IoCode::truncated, "truncated in section " + section_);
}

uint8_t ByteReader::u8() {
    need(1);
    return data_[pos_++];
}

uint16_t ByteReader::u16() {
    need(2);
    uint16_t v = static_cast<uint16_t>(data_[pos_] | (data_[pos_ + 1] << 8));
    pos_ += 2;
    return v;
}

uint32_t ByteReader::u32() {
    need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(data_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
}

uint64_t ByteReader::u64() {
    need(8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(data_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return v;
}

double ByteReader::f32() { return std::bit_cast<float>(u32()); }

void ByteReader::bytes(std::span<uint8_t> out) {
    need(out.size());
    std::memcpy(out.data(), data_.data() + pos_, out.size());
    pos_ += out.size();
}

void ByteReader::expect_tag(const char name[4]) {
    need(4);
    if (std::memcmp(data_.data() + pos_, name, 4) != 0)
        throw IoError(IoCode::bad_magic,
                      std::string("bad magic, expected ") + std::string(name, 4));
    pos_ += 4;
}

uint32_t crc32_of(std::span<const uint8_t> data) {
    return static_cast<uint32_t>(
        ::crc32(0L, data.empty() ? Z_NULL : data.data(),
                static_cast<uInt>(data.size())));
}

std::vector<uint8_t> deflate_bytes(std::span<const uint8_t> raw, int level) {
    uLongf bound = compressBound(static_cast<uLong>(raw.size()));
    std::vector<uint8_t> out(bound);
    int rc = compress2(out.data(), &bound, raw.empty() ? Z_NULL : raw.data(),
                       static_cast<uLong>(raw.size()), level);
    if (rc != Z_OK) throw IoError(IoCode::generic, "deflate failed");
    out.resize(bound);
    return out;
}

std::vector<uint8_t> inflate_bytes(std::span<const uint8_t> compressed,
                                   size_t raw_size) {
    std::vector<uint8_t> out(raw_size);
    uLongf len = static_cast<uLongf>(raw_size);
    int rc = uncompress(out.empty() ? Z_NULL : out.data(), &len, compressed.data(),
                        static_cast<uLong>(compressed.size()));
    if (rc != Z_OK || len != raw_size)
        throw IoError(IoCode::malformed, "inflate failed");
    return out;
}

int64_t compressed_size(std::span<const uint8_t> raw, int level) {
    return static_cast<int64_t>(deflate_bytes(raw, level).size());
}

std::vector<uint8_t> read_file_bytes(const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "rb");
    if (!f) throw IoError(IoCode::missing, "cannot open " + path);
    std::fseek(f, 0, SEEK_END);
    long size = std::ftell(f);
    std::fseek(f, 0, SEEK_SET);
    std::vector<uint8_t> out(size < 0 ? 0 : static_cast<size_t>(size));
    size_t got = out.empty() ? 0 : std::fread(out.data(), 1, out.size(), f);
    std::fclose(f);
    if (got != out.size()) throw IoError(IoCode::truncated, "short read on " + path);
    return out;
}

void write_file_bytes(const std::string& path, std::span<const uint8_t> data) {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw IoError(IoCode::generic, "cannot write " + path);
    size_t put = data.empty() ? 0 : std::fwrite(data.data(), 1, data.size(), f);
    std::fclose(f);
    if (put != data.size()) throw IoError(IoCode::generic, "short write on " + path);
}

}  // namespace igs
