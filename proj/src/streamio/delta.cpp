#include "igs/streamio/delta.hpp"

#include <algorithm>
#include <string>

#include "igs/core/errors.hpp"
#include "igs/streamio/binary.hpp"
#include "igs/streamio/model_file.hpp"

namespace igs {

namespace {

bool reals_f32_equal(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) return false;
    for (size_t i = 0; i < a.size(); ++i)
        if (static_cast<float>(a[i]) != static_cast<float>(b[i])) return false;
    return true;
}

void write_reals(ByteWriter& w, std::span<const double> v) {
    for (double x : v) w.f32(x);
}

void read_reals(ByteReader& r, std::vector<double>& v, size_t n) {
    v.resize(n);
    for (size_t i = 0; i < n; ++i) v[i] = r.f32();
}

}  // namespace

std::vector<uint8_t> compute_delta(const LevelSnapshot& from, const LevelSnapshot& to,
                                   DeltaStats* stats) {
    if (!meta_equal(from.meta, to.meta))
        throw IoError(IoCode::hierarchy_mismatch, "models disagree on hierarchy metadata");
    if (to.level != from.level + 1)
        throw IoError(IoCode::level_mismatch,
                      "delta requires consecutive levels, got " +
                          std::to_string(from.level) + " and " + std::to_string(to.level));
    const ModelMeta& meta = from.meta;
    int K = meta.K;
    int stride = meta.bitmap_stride();

    // Shared sections must match bit-for-bit at file precision.
    if (from.grid_tables.size() > to.grid_tables.size())
        throw IoError(IoCode::hierarchy_mismatch, "coarser level has more grid tables");
    for (size_t l = 0; l < from.grid_tables.size(); ++l)
        if (!reals_f32_equal(from.grid_tables[l], to.grid_tables[l]))
            throw IoError(IoCode::hierarchy_mismatch,
                          "shared grid table " + std::to_string(l) + " differs");

    ByteWriter records, patches;
    int n_new = 0, n_patch = 0;
    size_t i = 0;  // walks `from`, j walks `to`; both id-ascending
    for (size_t j = 0; j < to.ids.size(); ++j) {
        if (i < from.ids.size() && from.ids[i] == to.ids[j]) {
            auto sub = [](std::span<const double> v, size_t at, size_t n) {
                return v.subspan(at, n);
            };
            if (!reals_f32_equal(sub(from.pos, 3 * i, 3), sub(to.pos, 3 * j, 3)) ||
                !reals_f32_equal(sub(from.offsets, 3 * K * i, 3 * K),
                                 sub(to.offsets, 3 * K * j, 3 * K)) ||
                !reals_f32_equal(sub(from.logscale, 3 * i, 3), sub(to.logscale, 3 * j, 3)) ||
                from.idx[i] != to.idx[j])
                throw IoError(IoCode::hierarchy_mismatch,
                              "shared anchor " + std::to_string(to.ids[j]) + " differs");
            bool subset = true, equal = true;
            for (int b = 0; b < stride; ++b) {
                uint8_t fb = from.bitmap[i * stride + b];
                uint8_t tb = to.bitmap[j * stride + b];
                if (fb & ~tb) subset = false;
                if (fb != tb) equal = false;
            }
            if (!subset)
                throw IoError(IoCode::hierarchy_mismatch,
                              "anchor " + std::to_string(to.ids[j]) +
                                  " loses slots at the finer level");
            if (!equal) {
                patches.u32(to.ids[j]);
                for (int b = 0; b < stride; ++b) patches.u8(to.bitmap[j * stride + b]);
                ++n_patch;
            }
            ++i;
        } else {
            records.u32(to.ids[j]);
            for (int c = 0; c < 3; ++c) records.f32(to.pos[3 * j + c]);
            for (int c = 0; c < 3 * K; ++c) records.f32(to.offsets[3 * K * j + c]);
            for (int c = 0; c < 3; ++c) records.f32(to.logscale[3 * j + c]);
            records.u8(to.idx[j]);
            for (int b = 0; b < stride; ++b) records.u8(to.bitmap[j * stride + b]);
            ++n_new;
        }
    }
    if (i != from.ids.size())
        throw IoError(IoCode::hierarchy_mismatch,
                      "anchor " + std::to_string(from.ids[i]) +
                          " active at the coarser level only");

    int n_new_grids = static_cast<int>(to.grid_tables.size() - from.grid_tables.size());

    ByteWriter body;
    body.u8(static_cast<uint8_t>(from.level));
    body.u8(static_cast<uint8_t>(to.level));
    body.u8(static_cast<uint8_t>(K));
    body.u32(static_cast<uint32_t>(n_new));
    body.u32(static_cast<uint32_t>(n_patch));
    body.u8(static_cast<uint8_t>(n_new_grids));
    body.u32(static_cast<uint32_t>(to.codebook.size()));
    body.u32(static_cast<uint32_t>(to.dec_weights.size()));
    body.bytes(records.data());
    body.bytes(patches.data());
    for (size_t l = from.grid_tables.size(); l < to.grid_tables.size(); ++l)
        write_reals(body, to.grid_tables[l]);
    write_reals(body, to.codebook);
    write_reals(body, to.dec_weights);

    ByteWriter w;
    w.tag("IGSD");
    w.u16(kDeltaFormatVersion);
    w.u64(4 + 2 + 8 + body.size() + 4);
    w.bytes(body.data());
    w.u32(crc32_of(w.data()));

    if (stats) *stats = {n_new, n_patch, n_new_grids};
    return w.take();
}

LevelSnapshot apply_delta(const LevelSnapshot& from, std::span<const uint8_t> delta) {
    ByteReader r(delta);
    r.expect_tag("IGSD");
    uint16_t version = r.u16();
    if (version != kDeltaFormatVersion)
        throw IoError(IoCode::bad_version,
                      "unsupported delta version " + std::to_string(version));
    uint64_t declared = r.u64();
    if (delta.size() > declared)
        throw IoError(IoCode::malformed, "trailing bytes after declared length");
    if (delta.size() == declared &&
        crc32_of(delta.subspan(0, delta.size() - 4)) !=
            (static_cast<uint32_t>(delta[delta.size() - 4]) |
             (static_cast<uint32_t>(delta[delta.size() - 3]) << 8) |
             (static_cast<uint32_t>(delta[delta.size() - 2]) << 16) |
             (static_cast<uint32_t>(delta[delta.size() - 1]) << 24)))
        throw IoError(IoCode::crc_mismatch, "delta checksum mismatch");

    const ModelMeta& meta = from.meta;
    int K = meta.K;
    int stride = meta.bitmap_stride();
    int from_level = r.u8();
    int to_level = r.u8();
    if (from_level != from.level)
        throw IoError(IoCode::level_mismatch,
                      "delta starts at level " + std::to_string(from_level) +
                          ", model is at level " + std::to_string(from.level));
    if (to_level != from.level + 1 || to_level >= meta.lmax)
        throw IoError(IoCode::malformed, "delta target level out of range");
    if (r.u8() != K) throw IoError(IoCode::malformed, "delta K differs from model");
    uint32_t n_new = r.u32();
    uint32_t n_patch = r.u32();
    int n_new_grids = r.u8();
    uint32_t cb_len = r.u32();
    uint32_t dec_len = r.u32();

    struct NewAnchor {
        uint32_t id;
        double pos[3];
        std::vector<double> offsets;
        double logscale[3];
        uint8_t idx;
        std::vector<uint8_t> bitmap;
    };
    r.section("new anchor records");
    std::vector<NewAnchor> fresh(n_new);
    for (auto& na : fresh) {
        na.id = r.u32();
        for (int c = 0; c < 3; ++c) na.pos[c] = r.f32();
        na.offsets.resize(3 * static_cast<size_t>(K));
        for (auto& v : na.offsets) v = r.f32();
        for (int c = 0; c < 3; ++c) na.logscale[c] = r.f32();
        na.idx = r.u8();
        na.bitmap.resize(stride);
        r.bytes(na.bitmap);
    }
    r.section("bitmap patches");
    std::vector<std::pair<uint32_t, std::vector<uint8_t>>> patches(n_patch);
    for (auto& pt : patches) {
        pt.first = r.u32();
        pt.second.resize(stride);
        r.bytes(pt.second);
    }
    r.section("grid tables");
    std::vector<std::vector<double>> new_tables(n_new_grids);
    for (auto& t : new_tables)
        read_reals(r, t, static_cast<size_t>(meta.grid.level_entries()));
    r.section("codebook");
    std::vector<double> codebook;
    read_reals(r, codebook, cb_len);
    r.section("decoder weights");
    std::vector<double> dec;
    read_reals(r, dec, dec_len);
    r.section("checksum");
    r.u32();
    if (r.remaining() != 0)
        throw IoError(IoCode::malformed, "trailing bytes after checksum");
    if (delta.size() != declared)
        throw IoError(IoCode::truncated, "delta shorter than declared length");

    if (static_cast<int>(from.grid_tables.size()) + n_new_grids !=
        meta.active_levels(to_level))
        throw IoError(IoCode::malformed, "grid table count wrong for target level");
    bool local = level_has_local(meta, to_level);
    if (local != (cb_len > 0) ||
        (local && cb_len != static_cast<uint32_t>(meta.n_codes) * meta.code_dim))
        throw IoError(IoCode::malformed, "codebook section wrong for target level");
    if (dec_len != static_cast<uint32_t>(decoder_total_size(meta, to_level)))
        throw IoError(IoCode::malformed, "decoder section wrong for target level");

    LevelSnapshot out;
    out.meta = meta;
    out.level = to_level;
    size_t total = from.ids.size() + fresh.size();
    out.ids.reserve(total);
    out.pos.reserve(3 * total);
    out.offsets.reserve(3 * static_cast<size_t>(K) * total);
    out.logscale.reserve(3 * total);
    out.idx.reserve(total);
    out.bitmap.reserve(static_cast<size_t>(stride) * total);

    size_t pi = 0;  // next unconsumed patch, id-ascending like the anchors
    auto patched_bitmap = [&](uint32_t id, const uint8_t* current) -> const uint8_t* {
        if (pi < patches.size() && patches[pi].first == id) return patches[pi++].second.data();
        return current;
    };

    size_t i = 0, j = 0;
    uint32_t last_id = 0;
    bool first = true;
    while (i < from.ids.size() || j < fresh.size()) {
        bool take_new;
        if (i >= from.ids.size()) take_new = true;
        else if (j >= fresh.size()) take_new = false;
        else if (from.ids[i] == fresh[j].id)
            throw IoError(IoCode::malformed,
                          "delta re-adds anchor " + std::to_string(fresh[j].id));
        else take_new = fresh[j].id < from.ids[i];

        uint32_t id = take_new ? fresh[j].id : from.ids[i];
        if (!first && id <= last_id)
            throw IoError(IoCode::malformed, "delta anchor ids not ascending");
        first = false;
        last_id = id;
        out.ids.push_back(id);
        if (take_new) {
            const NewAnchor& na = fresh[j];
            out.pos.insert(out.pos.end(), na.pos, na.pos + 3);
            out.offsets.insert(out.offsets.end(), na.offsets.begin(), na.offsets.end());
            out.logscale.insert(out.logscale.end(), na.logscale, na.logscale + 3);
            out.idx.push_back(na.idx);
            out.bitmap.insert(out.bitmap.end(), na.bitmap.begin(), na.bitmap.end());
            ++j;
        } else {
            out.pos.insert(out.pos.end(), from.pos.begin() + 3 * i,
                           from.pos.begin() + 3 * (i + 1));
            out.offsets.insert(out.offsets.end(), from.offsets.begin() + 3 * K * i,
                               from.offsets.begin() + 3 * K * (i + 1));
            out.logscale.insert(out.logscale.end(), from.logscale.begin() + 3 * i,
                                from.logscale.begin() + 3 * (i + 1));
            out.idx.push_back(from.idx[i]);
            const uint8_t* bm = patched_bitmap(id, from.bitmap.data() + stride * i);
            out.bitmap.insert(out.bitmap.end(), bm, bm + stride);
            ++i;
        }
    }
    if (pi != patches.size())
        throw IoError(IoCode::malformed, "patch for an anchor absent at the base level");

    out.grid_tables = from.grid_tables;
    for (auto& t : new_tables) out.grid_tables.push_back(std::move(t));
    out.codebook = std::move(codebook);
    out.dec_weights = std::move(dec);
    return out;
}

}  // namespace igs
