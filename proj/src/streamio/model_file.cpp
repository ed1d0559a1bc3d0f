#include "igs/streamio/model_file.hpp"

#include <cmath>

#include "igs/core/errors.hpp"
#include "igs/streamio/binary.hpp"

namespace igs {

namespace {

void write_meta(ByteWriter& w, const ModelMeta& m) {
    w.u8(static_cast<uint8_t>(m.lmax));
    w.u8(static_cast<uint8_t>(m.mode));
    w.u8(static_cast<uint8_t>(m.K));
    w.u16(static_cast<uint16_t>(m.n_codes));
    w.u16(static_cast<uint16_t>(m.code_dim));
    w.u16(static_cast<uint16_t>(m.fused_dim));
    w.u16(static_cast<uint16_t>(m.mlp_hidden));
    w.u8(static_cast<uint8_t>(m.deflate_level));
    w.u8(static_cast<uint8_t>(m.grid.levels));
    w.u32(m.grid.table_size);
    w.u8(static_cast<uint8_t>(m.grid.feature_dim));
    w.u16(static_cast<uint16_t>(m.grid.n_min));
    w.u16(static_cast<uint16_t>(m.grid.n_max));
    for (int c = 0; c < 3; ++c) w.f32(m.grid.bb_min[c]);
    for (int c = 0; c < 3; ++c) w.f32(m.grid.bb_max[c]);
    for (int l = 0; l < m.lmax; ++l)
        w.u8(static_cast<uint8_t>(m.active_schedule[l]));
}

ModelMeta read_meta(ByteReader& r) {
    ModelMeta m;
    m.lmax = r.u8();
    m.mode = static_cast<AblationMode>(r.u8());
    if (static_cast<int>(m.mode) > 3)
        throw IoError(IoCode::malformed, "unknown ablation mode byte");
    m.K = r.u8();
    m.n_codes = r.u16();
    m.code_dim = r.u16();
    m.fused_dim = r.u16();
    m.mlp_hidden = r.u16();
    m.deflate_level = r.u8();
    m.grid.levels = r.u8();
    m.grid.table_size = r.u32();
    m.grid.feature_dim = r.u8();
    m.grid.n_min = r.u16();
    m.grid.n_max = r.u16();
    for (int c = 0; c < 3; ++c) m.grid.bb_min[c] = r.f32();
    for (int c = 0; c < 3; ++c) m.grid.bb_max[c] = r.f32();
    m.active_schedule.resize(m.lmax);
    for (int l = 0; l < m.lmax; ++l) m.active_schedule[l] = r.u8();
    return m;
}

void write_reals(ByteWriter& w, std::span<const double> v) {
    for (double x : v) w.f32(x);
}

void read_reals(ByteReader& r, std::vector<double>& v, size_t n) {
    v.resize(n);
    for (size_t i = 0; i < n; ++i) v[i] = r.f32();
}

}  // namespace

bool meta_equal(const ModelMeta& a, const ModelMeta& b) {
    auto f32 = [](double v) { return static_cast<float>(v); };
    bool bb = true;
    for (int c = 0; c < 3; ++c)
        bb = bb && f32(a.grid.bb_min[c]) == f32(b.grid.bb_min[c]) &&
             f32(a.grid.bb_max[c]) == f32(b.grid.bb_max[c]);
    return a.lmax == b.lmax && a.mode == b.mode && a.K == b.K &&
           a.n_codes == b.n_codes && a.code_dim == b.code_dim &&
           a.fused_dim == b.fused_dim && a.mlp_hidden == b.mlp_hidden &&
           a.deflate_level == b.deflate_level && a.grid.levels == b.grid.levels &&
           a.grid.table_size == b.grid.table_size &&
           a.grid.feature_dim == b.grid.feature_dim && a.grid.n_min == b.grid.n_min &&
           a.grid.n_max == b.grid.n_max && a.active_schedule == b.active_schedule && bb;
}

std::vector<uint8_t> serialize_model(const LevelSnapshot& s) {
    const ModelMeta& m = s.meta;
    m.validate();
    size_t A = s.ids.size();
    int stride = m.bitmap_stride();
    int active = m.active_levels(s.level);
    if (s.pos.size() != 3 * A || s.logscale.size() != 3 * A ||
        s.offsets.size() != 3 * static_cast<size_t>(m.K) * A || s.idx.size() != A ||
        s.bitmap.size() != static_cast<size_t>(stride) * A)
        throw ValidationError("serialize: inconsistent anchor sections");
    if (static_cast<int>(s.grid_tables.size()) != active)
        throw ValidationError("serialize: wrong grid table count for level");
    bool local = level_has_local(m, s.level);
    if (local != !s.codebook.empty())
        throw ValidationError("serialize: codebook presence mismatch");
    if (static_cast<int64_t>(s.dec_weights.size()) != decoder_total_size(m, s.level))
        throw ValidationError("serialize: decoder weight size mismatch");

    ByteWriter body;
    body.u8(static_cast<uint8_t>(s.level));
    body.u32(static_cast<uint32_t>(A));
    write_meta(body, m);
    for (uint32_t id : s.ids) body.u32(id);
    write_reals(body, s.pos);
    write_reals(body, s.offsets);
    write_reals(body, s.logscale);
    body.bytes(s.idx);
    body.bytes(s.bitmap);
    for (const auto& t : s.grid_tables) write_reals(body, t);
    write_reals(body, s.codebook);
    write_reals(body, s.dec_weights);

    ByteWriter w;
    w.tag("IGS1");
    w.u16(kModelFormatVersion);
    w.u64(4 + 2 + 8 + body.size() + 4);  // declared total file length
    w.bytes(body.data());
    w.u32(crc32_of(w.data()));
    return w.take();
}

LevelSnapshot parse_model(std::span<const uint8_t> bytes) {
    ByteReader r(bytes);
    r.expect_tag("IGS1");
    uint16_t version = r.u16();
    if (version != kModelFormatVersion)
        throw IoError(IoCode::bad_version,
                      "unsupported model version " + std::to_string(version));
    uint64_t declared = r.u64();
    if (bytes.size() > declared)
        throw IoError(IoCode::malformed, "trailing bytes after declared length");
    if (bytes.size() == declared &&
        crc32_of(bytes.subspan(0, bytes.size() - 4)) !=
            (static_cast<uint32_t>(bytes[bytes.size() - 4]) |
             (static_cast<uint32_t>(bytes[bytes.size() - 3]) << 8) |
             (static_cast<uint32_t>(bytes[bytes.size() - 2]) << 16) |
             (static_cast<uint32_t>(bytes[bytes.size() - 1]) << 24)))
        throw IoError(IoCode::crc_mismatch, "model file checksum mismatch");
    // A short file skips the checksum so parsing can name the cut section.

    LevelSnapshot s;
    s.level = r.u8();
    uint32_t A = r.u32();
    s.meta = read_meta(r);
    try {
        s.meta.validate();
    } catch (const ValidationError& e) {
        throw IoError(IoCode::malformed, e.what());
    }
    if (s.level >= s.meta.lmax)
        throw IoError(IoCode::malformed, "level out of range");

    int stride = s.meta.bitmap_stride();
    int active = s.meta.active_levels(s.level);
    r.section("anchor ids");
    s.ids.resize(A);
    for (uint32_t& id : s.ids) id = r.u32();
    for (size_t i = 1; i < s.ids.size(); ++i)
        if (s.ids[i] <= s.ids[i - 1])
            throw IoError(IoCode::malformed, "anchor ids not ascending");
    r.section("positions");
    read_reals(r, s.pos, 3 * static_cast<size_t>(A));
    r.section("offsets");
    read_reals(r, s.offsets, 3 * static_cast<size_t>(s.meta.K) * A);
    r.section("base scales");
    read_reals(r, s.logscale, 3 * static_cast<size_t>(A));
    r.section("idx bytes");
    s.idx.resize(A);
    r.bytes(s.idx);
    r.section("bitmaps");
    s.bitmap.resize(static_cast<size_t>(stride) * A);
    r.bytes(s.bitmap);
    r.section("grid tables");
    s.grid_tables.resize(active);
    for (auto& t : s.grid_tables)
        read_reals(r, t, static_cast<size_t>(s.meta.grid.level_entries()));
    r.section("codebook");
    if (level_has_local(s.meta, s.level))
        read_reals(r, s.codebook,
                   static_cast<size_t>(s.meta.n_codes) * s.meta.code_dim);
    r.section("decoder weights");
    read_reals(r, s.dec_weights,
               static_cast<size_t>(decoder_total_size(s.meta, s.level)));
    r.section("checksum");
    r.u32();
    if (r.remaining() != 0)
        throw IoError(IoCode::malformed, "trailing bytes after checksum");
    if (bytes.size() != declared)
        throw IoError(IoCode::truncated, "file shorter than declared length");
    return s;
}

void save_model(const LevelSnapshot& s, const std::string& path) {
    write_file_bytes(path, serialize_model(s));
}

LevelSnapshot load_model(const std::string& path) {
    return parse_model(read_file_bytes(path));
}

void save_compressed(std::span<const uint8_t> raw, int level, const std::string& path) {
    ByteWriter w;
    w.tag("IGSZ");
    w.u8(static_cast<uint8_t>(level));
    w.u64(raw.size());
    std::vector<uint8_t> z = deflate_bytes(raw, level);
    w.bytes(z);
    write_file_bytes(path, w.data());
}

std::vector<uint8_t> load_compressed(const std::string& path) {
    std::vector<uint8_t> bytes = read_file_bytes(path);
    ByteReader r(bytes);
    r.expect_tag("IGSZ");
    r.u8();
    uint64_t raw_size = r.u64();
    return inflate_bytes(bytes.empty() ? std::span<const uint8_t>{}
                                       : std::span<const uint8_t>(bytes).subspan(r.offset()),
                         raw_size);
}

}  // namespace igs
