#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace igs {

// Little-endian append-only buffer; reals narrow to IEEE-754 single.
class ByteWriter {
  public:
    void u8(uint8_t v) { buf_.push_back(v); }
    void u16(uint16_t v);
    void u32(uint32_t v);
    void u64(uint64_t v);
    void f32(double v);
    void bytes(std::span<const uint8_t> b);
    void tag(const char name[4]);

    const std::vector<uint8_t>& data() const { return buf_; }
    std::vector<uint8_t> take() { return std::move(buf_); }
    size_t size() const { return buf_.size(); }

  private:
    std::vector<uint8_t> buf_;
};

// Bounds-checked little-endian reader. Reads past the end throw a truncation
// error naming the section set via section().
class ByteReader {
  public:
    explicit ByteReader(std::span<const uint8_t> data) : data_(data) {}

    void section(std::string name) { section_ = std::move(name); }
    uint8_t u8();
    uint16_t u16();
    uint32_t u32();
    uint64_t u64();
    double f32();
    void bytes(std::span<uint8_t> out);
    void expect_tag(const char name[4]);

    size_t offset() const { return pos_; }
    size_t remaining() const { return data_.size() - pos_; }

  private:
    void need(size_t n);
    std::span<const uint8_t> data_;
    size_t pos_ = 0;
    std::string section_ = "header";
};

uint32_t crc32_of(std::span<const uint8_t> data);

std::vector<uint8_t> deflate_bytes(std::span<const uint8_t> raw, int level);
std::vector<uint8_t> inflate_bytes(std::span<const uint8_t> compressed,
                                   size_t raw_size);
int64_t compressed_size(std::span<const uint8_t> raw, int level = 6);

std::vector<uint8_t> read_file_bytes(const std::string& path);
void write_file_bytes(const std::string& path, std::span<const uint8_t> data);

}  // namespace igs
