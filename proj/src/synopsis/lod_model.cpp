#include "igs/synopsis/lod_model.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <tuple>

#include "igs/core/errors.hpp"
#include "igs/core/rng.hpp"
#include "igs/fields/codebook.hpp"

namespace igs {

const char* ablation_name(AblationMode m) {
    switch (m) {
        case AblationMode::full: return "full";
        case AblationMode::base: return "base";
        case AblationMode::lad_only: return "lad_only";
        case AblationMode::cbm_only: return "cbm_only";
    }
    return "full";
}

AblationMode ablation_from_name(const std::string& s) {
    if (s == "full") return AblationMode::full;
    if (s == "base") return AblationMode::base;
    if (s == "lad_only") return AblationMode::lad_only;
    if (s == "cbm_only") return AblationMode::cbm_only;
    throw ValidationError("unknown ablation mode: " + s);
}

void ModelMeta::validate() const {
    if (lmax < 1) throw ValidationError("model: lmax must be >= 1");
    if (K < 1 || K > 64) throw ValidationError("model: K out of range");
    if (n_codes < 1 || n_codes > 256)
        throw ValidationError("model: codebook size must fit a byte index");
    if (code_dim < 1 || fused_dim < 1 || mlp_hidden < 1)
        throw ValidationError("model: bad feature dims");
    if (static_cast<int>(active_schedule.size()) != lmax)
        throw ValidationError("model: active schedule must list one entry per LOD");
    for (int l = 0; l < lmax; ++l) {
        if (active_schedule[l] < 1 || active_schedule[l] > grid.levels)
            throw ValidationError("model: active grid levels out of range");
        if (l > 0 && active_schedule[l] <= active_schedule[l - 1])
            throw ValidationError("model: active schedule must increase with LOD");
    }
    if (active_schedule.back() != grid.levels)
        throw ValidationError("model: finest LOD must use every grid level");
    grid.resolutions();  // validates the progression
}

bool level_has_local(const ModelMeta& meta, int level) {
    if (meta.mode == AblationMode::lad_only && level < meta.lmax - 1) return false;
    return true;
}

int level_decoder_owner(const ModelMeta& meta, int level) {
    if (meta.mode == AblationMode::base || meta.mode == AblationMode::cbm_only)
        return meta.lmax - 1;
    return level;
}

int level_dec_in_width(const ModelMeta& meta, int level) {
    int owner = level_decoder_owner(meta, level);
    if (owner == meta.lmax - 1)
        return meta.grid.levels * meta.grid.feature_dim + meta.code_dim;
    int w = meta.active_levels(level) * meta.grid.feature_dim;
    if (level_has_local(meta, level)) w += meta.code_dim;
    return w;
}

std::string decoder_prefix(int owner_level) {
    return "dec" + std::to_string(owner_level);
}

std::string codebook_block_name(const ModelMeta& meta, int level) {
    if (!level_has_local(meta, level)) return "";
    int owner = level;
    if (meta.mode == AblationMode::base || level == meta.lmax - 1)
        owner = meta.lmax - 1;
    return "cb.L" + std::to_string(owner);
}

MlpDims fuse_dims(const ModelMeta& meta, int level) {
    return {level_dec_in_width(meta, level), meta.mlp_hidden, meta.fused_dim};
}

MlpDims head_dims(const ModelMeta& meta, int head) {
    static const int mult[4] = {1, 3, 3, 4};
    return {meta.fused_dim + 4, meta.mlp_hidden, mult[head] * meta.K};
}

bool bitmap_get(std::span<const uint8_t> bm, int stride, int anchor, int slot) {
    return (bm[static_cast<size_t>(anchor) * stride + slot / 8] >> (slot % 8)) & 1;
}

void bitmap_set(std::vector<uint8_t>& bm, int stride, int anchor, int slot, bool on) {
    uint8_t& byte = bm[static_cast<size_t>(anchor) * stride + slot / 8];
    if (on)
        byte |= static_cast<uint8_t>(1u << (slot % 8));
    else
        byte &= static_cast<uint8_t>(~(1u << (slot % 8)));
}

int64_t decoder_total_size(const ModelMeta& meta, int level) {
    int64_t n = fuse_dims(meta, level).total();
    for (int h = 0; h < 4; ++h) n += head_dims(meta, h).total();
    return n;
}

namespace {

const char* kHeadNames[4] = {"opacity", "color", "scale", "rot"};

DecoderWeights slice_decoder(std::span<const double> flat, const ModelMeta& meta,
                             int level) {
    if (static_cast<int64_t>(flat.size()) != decoder_total_size(meta, level))
        throw ValidationError("decoder weights: size mismatch");
    DecoderWeights dec;
    size_t off = 0;
    auto take = [&](int64_t n) {
        auto s = flat.subspan(off, static_cast<size_t>(n));
        off += static_cast<size_t>(n);
        return s;
    };
    auto fill = [&](MlpWeights& m, const MlpDims& d) {
        m.dims = d;
        m.w0 = take(d.w0_size());
        m.b0 = take(d.hidden);
        m.w1 = take(d.w1_size());
        m.b1 = take(d.out);
    };
    fill(dec.fuse, fuse_dims(meta, level));
    for (int h = 0; h < 4; ++h) fill(dec.heads[h], head_dims(meta, h));
    return dec;
}

}  // namespace

LevelView make_view(const LevelSnapshot& snap) {
    LevelView v;
    v.meta = &snap.meta;
    v.level = snap.level;
    v.anchor_count = snap.anchor_count();
    v.pos = snap.pos;
    v.offsets = snap.offsets;
    v.logscale = snap.logscale;
    v.idx = snap.idx;
    v.bitmap = snap.bitmap;
    for (const auto& t : snap.grid_tables) v.grid_tables.emplace_back(t);
    v.codebook = snap.codebook;
    v.dec = slice_decoder(snap.dec_weights, snap.meta, snap.level);
    return v;
}

DecoderWeights Hierarchy::decoder_weights(int level) const {
    std::string prefix = decoder_prefix(level_decoder_owner(meta, level));
    DecoderWeights dec;
    auto fill = [&](MlpWeights& m, const MlpDims& d, const std::string& name) {
        m.dims = d;
        m.w0 = params.at(prefix + "." + name + ".w0").value;
        m.b0 = params.at(prefix + "." + name + ".b0").value;
        m.w1 = params.at(prefix + "." + name + ".w1").value;
        m.b1 = params.at(prefix + "." + name + ".b1").value;
    };
    fill(dec.fuse, fuse_dims(meta, level), "fuse");
    for (int h = 0; h < 4; ++h) fill(dec.heads[h], head_dims(meta, h), kHeadNames[h]);
    return dec;
}

LevelView Hierarchy::view(int level, bool ste_phase) const {
    LevelView v;
    v.meta = &meta;
    v.level = level;
    v.anchor_count = anchor_count();
    v.pos = params.at("anchor.pos").value;
    v.offsets = params.at("anchor.offsets").value;
    v.logscale = params.at("anchor.logscale").value;
    v.idx = idx;
    v.bitmap = bitmaps.at(level);
    for (int l = 0; l < meta.active_levels(level); ++l)
        v.grid_tables.emplace_back(
            params.at("grid.l" + std::to_string(l)).value);
    std::string cb = codebook_block_name(meta, level);
    if (!cb.empty()) v.codebook = params.at(cb).value;
    v.dec = decoder_weights(level);
    if (ste_phase) v.vlogits = params.at("codebook.vlogits").value;
    return v;
}

LevelSnapshot Hierarchy::snapshot(int level) const {
    LevelSnapshot s;
    s.meta = meta;
    s.level = level;
    int stride = meta.bitmap_stride();
    const auto& pos = params.at("anchor.pos").value;
    const auto& off = params.at("anchor.offsets").value;
    const auto& ls = params.at("anchor.logscale").value;
    const auto& bm = bitmaps.at(level);

    for (int a = 0; a < anchor_count(); ++a) {
        bool active = false;
        for (int i = 0; i < meta.K; ++i)
            if (bitmap_get(bm, stride, a, i)) active = true;
        if (!active) continue;
        s.ids.push_back(anchor_ids[a]);
        for (int c = 0; c < 3; ++c) s.pos.push_back(pos[3 * a + c]);
        for (int c = 0; c < 3 * meta.K; ++c)
            s.offsets.push_back(off[static_cast<size_t>(3) * meta.K * a + c]);
        for (int c = 0; c < 3; ++c) s.logscale.push_back(ls[3 * a + c]);
        s.idx.push_back(idx[a]);
        for (int b = 0; b < stride; ++b)
            s.bitmap.push_back(bm[static_cast<size_t>(a) * stride + b]);
    }

    for (int l = 0; l < meta.active_levels(level); ++l) {
        const auto& t = params.at("grid.l" + std::to_string(l)).value;
        s.grid_tables.emplace_back(t.begin(), t.end());
    }
    std::string cb = codebook_block_name(meta, level);
    if (!cb.empty()) {
        const auto& c = params.at(cb).value;
        s.codebook.assign(c.begin(), c.end());
    }

    DecoderWeights dec = decoder_weights(level);
    auto append = [&](const MlpWeights& m) {
        s.dec_weights.insert(s.dec_weights.end(), m.w0.begin(), m.w0.end());
        s.dec_weights.insert(s.dec_weights.end(), m.b0.begin(), m.b0.end());
        s.dec_weights.insert(s.dec_weights.end(), m.w1.begin(), m.w1.end());
        s.dec_weights.insert(s.dec_weights.end(), m.b1.begin(), m.b1.end());
    };
    append(dec.fuse);
    for (int h = 0; h < 4; ++h) append(dec.heads[h]);
    return s;
}

int Hierarchy::active_slot_count(int level) const {
    const auto& bm = bitmaps.at(level);
    int stride = meta.bitmap_stride();
    int n = 0;
    for (int a = 0; a < anchor_count(); ++a)
        for (int i = 0; i < meta.K; ++i)
            if (bitmap_get(bm, stride, a, i)) ++n;
    return n;
}

int Hierarchy::active_anchor_count(int level) const {
    const auto& bm = bitmaps.at(level);
    int stride = meta.bitmap_stride();
    int n = 0;
    for (int a = 0; a < anchor_count(); ++a) {
        for (int i = 0; i < meta.K; ++i)
            if (bitmap_get(bm, stride, a, i)) {
                ++n;
                break;
            }
    }
    return n;
}

int Hierarchy::fully_pruned_anchor_count(int level) const {
    return anchor_count() - active_anchor_count(level);
}

namespace {

void init_mlp(ParamStore& store, const std::string& prefix, const MlpDims& d,
              Rng& rng, bool rot_bias) {
    auto& w0 = store.add(prefix + ".w0", {d.hidden, d.in});
    auto& b0 = store.add(prefix + ".b0", {d.hidden});
    auto& w1 = store.add(prefix + ".w1", {d.out, d.hidden});
    auto& b1 = store.add(prefix + ".b1", {d.out});
    double a0 = std::sqrt(6.0 / (d.in + d.hidden));
    for (auto& v : w0.value) v = rng.uniform(-a0, a0);
    (void)b0;
    double a1 = std::sqrt(6.0 / (d.hidden + d.out));
    for (auto& v : w1.value) v = rng.uniform(-a1, a1);
    if (rot_bias)
        for (int64_t i = 0; i < d.out; i += 4) b1.value[i] = 1.0;
}

}  // namespace

Hierarchy init_hierarchy(const ModelMeta& meta, std::span<const Vec3> points,
                         double voxel_size, uint64_t seed) {
    meta.validate();
    if (points.empty()) throw ValidationError("init: no seed points");
    if (voxel_size <= 0.0) throw ValidationError("init: voxel size must be positive");

    // One anchor per occupied voxel, at the voxel center, lexicographic order.
    std::map<std::tuple<int64_t, int64_t, int64_t>, bool> voxels;
    for (const Vec3& p : points) {
        voxels[{static_cast<int64_t>(std::floor(p.x / voxel_size)),
                static_cast<int64_t>(std::floor(p.y / voxel_size)),
                static_cast<int64_t>(std::floor(p.z / voxel_size))}] = true;
    }

    Hierarchy h;
    h.meta = meta;
    int A = static_cast<int>(voxels.size());
    Rng rng(seed);

    auto& pos = h.params.add("anchor.pos", {A, 3});
    auto& off = h.params.add("anchor.offsets", {A, meta.K, 3});
    auto& ls = h.params.add("anchor.logscale", {A, 3});
    auto& vl = h.params.add("codebook.vlogits", {A, meta.n_codes});
    auto& cb = h.params.add("cb.L" + std::to_string(meta.lmax - 1),
                            {meta.n_codes, meta.code_dim});
    for (int l = 0; l < meta.grid.levels; ++l) {
        auto& g = h.params.add("grid.l" + std::to_string(l),
                               {static_cast<int64_t>(meta.grid.table_size),
                                meta.grid.feature_dim});
        for (auto& v : g.value) v = rng.uniform(-1e-4, 1e-4);
    }

    int a = 0;
    for (const auto& [key, unused] : voxels) {
        (void)unused;
        pos.value[3 * a] = (static_cast<double>(std::get<0>(key)) + 0.5) * voxel_size;
        pos.value[3 * a + 1] = (static_cast<double>(std::get<1>(key)) + 0.5) * voxel_size;
        pos.value[3 * a + 2] = (static_cast<double>(std::get<2>(key)) + 0.5) * voxel_size;
        double lsv = std::log(voxel_size);
        for (int c = 0; c < 3; ++c) ls.value[3 * a + c] = lsv;
        ++a;
    }
    for (auto& v : off.value) v = rng.uniform(-0.5, 0.5);
    for (auto& v : vl.value) v = 0.01 * rng.normal();
    for (auto& v : cb.value) v = rng.uniform(-0.1, 0.1);

    std::string prefix = decoder_prefix(meta.lmax - 1);
    init_mlp(h.params, prefix + ".fuse", fuse_dims(meta, meta.lmax - 1), rng, false);
    for (int hd = 0; hd < 4; ++hd)
        init_mlp(h.params, prefix + "." + kHeadNames[hd], head_dims(meta, hd), rng,
                 hd == kRotation);

    h.anchor_ids.resize(A);
    for (int i = 0; i < A; ++i) h.anchor_ids[i] = static_cast<uint32_t>(i);
    h.idx.resize(A);
    for (int i = 0; i < A; ++i)
        h.idx[i] = static_cast<uint8_t>(codebook_argmax(
            std::span<const double>(vl.value.data() + static_cast<size_t>(i) * meta.n_codes,
                                    meta.n_codes)));

    int stride = meta.bitmap_stride();
    h.bitmaps.assign(meta.lmax, {});
    h.level_built.assign(meta.lmax, false);
    auto& top = h.bitmaps[meta.lmax - 1];
    top.assign(static_cast<size_t>(A) * stride, 0);
    for (int ai = 0; ai < A; ++ai)
        for (int s = 0; s < meta.K; ++s) bitmap_set(top, stride, ai, s, true);
    return h;
}

void Hierarchy::instantiate_level_params(int level) {
    int parent = level + 1;
    if (parent >= meta.lmax) throw ValidationError("instantiate: no parent level");

    if (meta.mode == AblationMode::full || meta.mode == AblationMode::cbm_only) {
        const auto& src = params.at(codebook_block_name(meta, parent)).value;
        auto& dst = params.add("cb.L" + std::to_string(level),
                               {meta.n_codes, meta.code_dim});
        std::copy(src.begin(), src.end(), dst.value.begin());
    }

    if (meta.mode == AblationMode::full || meta.mode == AblationMode::lad_only) {
        // The child fusion layer keeps the parent columns that survive: active
        // grid levels are a coarsest-first prefix, the local feature rides at
        // the tail.
        std::string src_prefix = decoder_prefix(level_decoder_owner(meta, parent));
        std::string dst_prefix = decoder_prefix(level);

        MlpDims pd = fuse_dims(meta, parent);
        MlpDims cd = fuse_dims(meta, level);
        int F = meta.grid.feature_dim;
        int child_grid_cols = meta.active_levels(level) * F;
        int parent_grid_cols = pd.in - (level_has_local(meta, parent) ? meta.code_dim : 0);
        if (child_grid_cols > parent_grid_cols)
            throw ValidationError("instantiate: child wider than parent");

        const auto& sw0 = params.at(src_prefix + ".fuse.w0").value;
        auto& w0 = params.add(dst_prefix + ".fuse.w0", {cd.hidden, cd.in});
        bool child_local = level_has_local(meta, level);
        for (int hrow = 0; hrow < cd.hidden; ++hrow) {
            const double* srow = sw0.data() + static_cast<size_t>(hrow) * pd.in;
            double* drow = w0.value.data() + static_cast<size_t>(hrow) * cd.in;
            for (int c = 0; c < child_grid_cols; ++c) drow[c] = srow[c];
            if (child_local)
                for (int c = 0; c < meta.code_dim; ++c)
                    drow[child_grid_cols + c] = srow[parent_grid_cols + c];
        }
        auto copy_block = [&](const std::string& name, std::vector<int64_t> shape) {
            const auto& src = params.at(src_prefix + name).value;
            auto& dst = params.add(dst_prefix + name, std::move(shape));
            std::copy(src.begin(), src.end(), dst.value.begin());
        };
        copy_block(".fuse.b0", {cd.hidden});
        copy_block(".fuse.w1", {cd.out, cd.hidden});
        copy_block(".fuse.b1", {cd.out});
        for (int h = 0; h < 4; ++h) {
            MlpDims hd = head_dims(meta, h);
            std::string n = std::string(".") + kHeadNames[h];
            copy_block(n + ".w0", {hd.hidden, hd.in});
            copy_block(n + ".b0", {hd.hidden});
            copy_block(n + ".w1", {hd.out, hd.hidden});
            copy_block(n + ".b1", {hd.out});
        }
    }
}

Hierarchy hierarchy_from_snapshot(const LevelSnapshot& snap) {
    const ModelMeta& meta = snap.meta;
    meta.validate();
    if (snap.level != meta.lmax - 1)
        throw ValidationError("hierarchy: only the finest checkpoint can seed unfolds");
    int A = snap.anchor_count();
    if (A < 1) throw ValidationError("hierarchy: checkpoint has no anchors");

    Hierarchy h;
    h.meta = meta;
    auto fill = [&](const std::string& name, std::vector<int64_t> shape,
                    std::span<const double> src) {
        auto& blk = h.params.add(name, std::move(shape));
        if (static_cast<int64_t>(src.size()) != blk.size())
            throw ValidationError("hierarchy: checkpoint section size mismatch at " + name);
        std::copy(src.begin(), src.end(), blk.value.begin());
    };
    fill("anchor.pos", {A, 3}, snap.pos);
    fill("anchor.offsets", {A, meta.K, 3}, snap.offsets);
    fill("anchor.logscale", {A, 3}, snap.logscale);
    fill("cb.L" + std::to_string(meta.lmax - 1), {meta.n_codes, meta.code_dim},
         snap.codebook);
    for (int l = 0; l < meta.grid.levels; ++l)
        fill("grid.l" + std::to_string(l),
             {static_cast<int64_t>(meta.grid.table_size), meta.grid.feature_dim},
             snap.grid_tables[static_cast<size_t>(l)]);

    std::string prefix = decoder_prefix(meta.lmax - 1);
    size_t off = 0;
    auto take = [&](const std::string& name, std::vector<int64_t> shape) {
        int64_t n = 1;
        for (int64_t d : shape) n *= d;
        fill(name, std::move(shape),
             std::span<const double>(snap.dec_weights.data() + off,
                                     static_cast<size_t>(n)));
        off += static_cast<size_t>(n);
    };
    auto take_mlp = [&](const std::string& stem, const MlpDims& d) {
        take(stem + ".w0", {d.hidden, d.in});
        take(stem + ".b0", {d.hidden});
        take(stem + ".w1", {d.out, d.hidden});
        take(stem + ".b1", {d.out});
    };
    take_mlp(prefix + ".fuse", fuse_dims(meta, meta.lmax - 1));
    for (int hd = 0; hd < 4; ++hd)
        take_mlp(prefix + "." + kHeadNames[hd], head_dims(meta, hd));

    h.anchor_ids = snap.ids;
    h.idx = snap.idx;
    h.bitmaps.assign(meta.lmax, {});
    h.bitmaps[meta.lmax - 1] = snap.bitmap;
    h.level_built.assign(meta.lmax, false);
    h.level_built[meta.lmax - 1] = true;
    return h;
}

}  // namespace igs
