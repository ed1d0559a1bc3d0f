#include <doctest.h>

#include <cmath>
#include <vector>

#include "igs/core/errors.hpp"
#include "igs/fields/codebook.hpp"
#include "igs/synopsis/lod_model.hpp"

using namespace igs;

namespace {

ModelMeta small_meta(AblationMode mode = AblationMode::full) {
    ModelMeta m;
    m.lmax = 4;
    m.K = 4;
    m.n_codes = 8;
    m.code_dim = 4;
    m.fused_dim = 6;
    m.mlp_hidden = 5;
    m.grid.levels = 4;
    m.grid.table_size = 1u << 8;
    m.grid.feature_dim = 2;
    m.grid.n_min = 4;
    m.grid.n_max = 32;
    m.active_schedule = {1, 2, 3, 4};
    m.mode = mode;
    return m;
}

std::vector<Vec3> corner_points() {
    return {{0.01, 0.01, 0.01}, {0.02, 0.03, 0.01}, {0.23, 0.38, 0.71},
            {0.82, 0.12, 0.44}, {0.81, 0.11, 0.43}, {0.55, 0.91, 0.07}};
}

}  // namespace

TEST_CASE("meta validation catches bad schedules") {
    ModelMeta m = small_meta();
    CHECK_NOTHROW(m.validate());

    m.active_schedule = {1, 2, 2, 4};
    CHECK_THROWS_AS(m.validate(), ValidationError);
    m.active_schedule = {1, 2, 3};
    CHECK_THROWS_AS(m.validate(), ValidationError);
    m.active_schedule = {1, 2, 3, 3};  // finest must use every grid level
    CHECK_THROWS_AS(m.validate(), ValidationError);
    m = small_meta();
    m.n_codes = 300;  // byte index cannot address it
    CHECK_THROWS_AS(m.validate(), ValidationError);
}

TEST_CASE("resolution scale halves per coarser level") {
    ModelMeta m = small_meta();
    CHECK(m.resolution_scale(3) == 1.0);
    CHECK(m.resolution_scale(2) == 0.5);
    CHECK(m.resolution_scale(0) == 0.125);
    CHECK(m.bitmap_stride() == 1);
    m.K = 9;
    CHECK(m.bitmap_stride() == 2);
}

TEST_CASE("bitmap bits round trip") {
    ModelMeta m = small_meta();
    m.K = 9;
    int stride = m.bitmap_stride();
    std::vector<uint8_t> bm(static_cast<size_t>(3) * stride, 0);
    bitmap_set(bm, stride, 1, 8, true);
    bitmap_set(bm, stride, 2, 0, true);
    CHECK(bitmap_get(bm, stride, 1, 8));
    CHECK_FALSE(bitmap_get(bm, stride, 1, 0));
    CHECK(bitmap_get(bm, stride, 2, 0));
    CHECK(bm[1 * stride + 1] == 1);  // LSB-first within each byte
    bitmap_set(bm, stride, 1, 8, false);
    CHECK_FALSE(bitmap_get(bm, stride, 1, 8));
}

TEST_CASE("ablation modes pick decoder owner and local branch") {
    ModelMeta full = small_meta(AblationMode::full);
    CHECK(level_decoder_owner(full, 1) == 1);
    CHECK(level_has_local(full, 1));
    CHECK(codebook_block_name(full, 1) == "cb.L1");
    CHECK(codebook_block_name(full, 3) == "cb.L3");
    // Coarser levels read a prefix of the grid features plus the local tail.
    CHECK(level_dec_in_width(full, 1) == 2 * 2 + 4);
    CHECK(level_dec_in_width(full, 3) == 4 * 2 + 4);

    ModelMeta base = small_meta(AblationMode::base);
    CHECK(level_decoder_owner(base, 0) == 3);
    CHECK(codebook_block_name(base, 0) == "cb.L3");
    // Foundational width everywhere; missing grid levels are zero padding.
    CHECK(level_dec_in_width(base, 0) == 4 * 2 + 4);

    ModelMeta lad = small_meta(AblationMode::lad_only);
    CHECK(level_decoder_owner(lad, 1) == 1);
    CHECK_FALSE(level_has_local(lad, 1));
    CHECK(level_has_local(lad, 3));
    CHECK(codebook_block_name(lad, 1).empty());
    CHECK(level_dec_in_width(lad, 1) == 2 * 2);

    ModelMeta cbm = small_meta(AblationMode::cbm_only);
    CHECK(level_decoder_owner(cbm, 1) == 3);
    CHECK(codebook_block_name(cbm, 1) == "cb.L1");
    CHECK(level_dec_in_width(cbm, 1) == 4 * 2 + 4);
}

TEST_CASE("hierarchy init places one anchor per occupied voxel") {
    ModelMeta m = small_meta();
    auto pts = corner_points();
    Hierarchy h = init_hierarchy(m, pts, 0.05, 7);
    // Points 0/1 share a voxel, 3/4 share a voxel: 6 points, 4 anchors.
    CHECK(h.anchor_count() == 4);

    std::span<const double> pos = h.params.values("anchor.pos");
    std::span<const double> ls = h.params.values("anchor.logscale");
    for (int a = 0; a < h.anchor_count(); ++a) {
        for (int c = 0; c < 3; ++c) {
            double v = pos[3 * a + c] / 0.05 - 0.5;  // back to the voxel index
            CHECK(v == doctest::Approx(std::round(v)).epsilon(1e-9));
            CHECK(ls[3 * a + c] == std::log(0.05));
        }
    }
    for (double v : h.params.values("anchor.offsets")) {
        CHECK(v >= -0.5);
        CHECK(v <= 0.5);
    }

    // Frozen index equals the straight-through argmax at init.
    std::span<const double> vl = h.params.values("codebook.vlogits");
    for (int a = 0; a < h.anchor_count(); ++a) {
        auto row = vl.subspan(static_cast<size_t>(a) * m.n_codes, m.n_codes);
        CHECK(h.idx[a] == codebook_argmax(row));
    }

    // Finest bitmap starts with every slot on, but no level counts as built
    // until training publishes it.
    CHECK(h.active_slot_count(3) == h.anchor_count() * m.K);
    CHECK(h.level_built == std::vector<bool>{false, false, false, false});

    // Rotation head bias starts each slot at the identity quaternion.
    std::span<const double> rb = h.params.values("dec3.rot.b1");
    for (size_t i = 0; i < rb.size(); ++i) CHECK(rb[i] == (i % 4 == 0 ? 1.0 : 0.0));
}

TEST_CASE("hierarchy init is deterministic and seed-sensitive") {
    ModelMeta m = small_meta();
    auto pts = corner_points();
    Hierarchy a = init_hierarchy(m, pts, 0.05, 7);
    Hierarchy b = init_hierarchy(m, pts, 0.05, 7);
    Hierarchy c = init_hierarchy(m, pts, 0.05, 8);
    for (const std::string& name : a.params.order()) {
        CHECK(a.params.values(name).size() == b.params.values(name).size());
        CHECK(std::equal(a.params.values(name).begin(), a.params.values(name).end(),
                         b.params.values(name).begin()));
    }
    CHECK_FALSE(std::equal(a.params.values("anchor.offsets").begin(),
                           a.params.values("anchor.offsets").end(),
                           c.params.values("anchor.offsets").begin()));
}

TEST_CASE("instantiating a level copies the codebook and slices the fusion layer") {
    ModelMeta m = small_meta();
    Hierarchy h = init_hierarchy(m, corner_points(), 0.05, 3);
    h.instantiate_level_params(2);

    REQUIRE(h.params.has("cb.L2"));
    CHECK(std::equal(h.params.values("cb.L2").begin(), h.params.values("cb.L2").end(),
                     h.params.values("cb.L3").begin()));

    MlpDims pd = fuse_dims(m, 3), cd = fuse_dims(m, 2);
    std::span<const double> pw = h.params.values("dec3.fuse.w0");
    std::span<const double> cw = h.params.values("dec2.fuse.w0");
    int grid_cols = m.active_levels(2) * m.grid.feature_dim;
    for (int r = 0; r < cd.hidden; ++r) {
        for (int c = 0; c < grid_cols; ++c)
            CHECK(cw[r * cd.in + c] == pw[r * pd.in + c]);
        for (int c = 0; c < m.code_dim; ++c)
            CHECK(cw[r * cd.in + grid_cols + c] ==
                  pw[r * pd.in + (pd.in - m.code_dim) + c]);
    }
    CHECK(std::equal(h.params.values("dec2.fuse.b1").begin(),
                     h.params.values("dec2.fuse.b1").end(),
                     h.params.values("dec3.fuse.b1").begin()));
    CHECK(h.params.values("dec2.opacity.w0").size() ==
          h.params.values("dec3.opacity.w0").size());
}

TEST_CASE("base mode instantiates nothing new") {
    ModelMeta m = small_meta(AblationMode::base);
    Hierarchy h = init_hierarchy(m, corner_points(), 0.05, 3);
    size_t before = h.params.order().size();
    h.instantiate_level_params(2);
    CHECK(h.params.order().size() == before);
    CHECK_FALSE(h.params.has("cb.L2"));
    CHECK_FALSE(h.params.has("dec2.fuse.w0"));
}

TEST_CASE("snapshot keeps only active anchors") {
    ModelMeta m = small_meta();
    Hierarchy h = init_hierarchy(m, corner_points(), 0.05, 3);
    int stride = m.bitmap_stride();

    // Prune anchor 1 fully, anchor 2 partially at level 2.
    h.bitmaps[2] = h.bitmaps[3];
    for (int s = 0; s < m.K; ++s) bitmap_set(h.bitmaps[2], stride, 1, s, false);
    bitmap_set(h.bitmaps[2], stride, 2, 0, false);
    h.instantiate_level_params(2);
    h.level_built[2] = true;

    LevelSnapshot s2 = h.snapshot(2);
    CHECK(s2.anchor_count() == 3);
    CHECK(s2.ids == std::vector<uint32_t>{0, 2, 3});
    CHECK(s2.grid_tables.size() == 3);  // active levels at LOD 2
    CHECK(h.active_anchor_count(2) == 3);
    CHECK(h.fully_pruned_anchor_count(2) == 1);
    CHECK(h.active_slot_count(2) == 3 * m.K - 1);

    LevelSnapshot s3 = h.snapshot(3);
    CHECK(s3.anchor_count() == 4);
    CHECK(s3.grid_tables.size() == 4);
    CHECK(static_cast<int64_t>(s3.dec_weights.size()) == decoder_total_size(m, 3));
}

TEST_CASE("a rebuilt hierarchy matches the snapshot it came from") {
    ModelMeta m = small_meta();
    Hierarchy h = init_hierarchy(m, corner_points(), 0.05, 9);
    LevelSnapshot snap = h.snapshot(3);

    Hierarchy r = hierarchy_from_snapshot(snap);
    CHECK(r.anchor_count() == h.anchor_count());
    CHECK(r.idx == h.idx);
    CHECK(r.bitmaps[3] == h.bitmaps[3]);
    CHECK(r.level_built[3]);
    CHECK_FALSE(r.level_built[2]);
    LevelSnapshot snap2 = r.snapshot(3);
    CHECK(snap2.pos == snap.pos);
    CHECK(snap2.offsets == snap.offsets);
    CHECK(snap2.logscale == snap.logscale);
    CHECK(snap2.codebook == snap.codebook);
    CHECK(snap2.dec_weights == snap.dec_weights);
    for (size_t l = 0; l < snap.grid_tables.size(); ++l)
        CHECK(snap2.grid_tables[l] == snap.grid_tables[l]);

    // Rebuilding from a coarser level is rejected.
    snap.level = 2;
    CHECK_THROWS_AS(hierarchy_from_snapshot(snap), ValidationError);
}

TEST_CASE("views expose the right sections per level") {
    ModelMeta m = small_meta();
    Hierarchy h = init_hierarchy(m, corner_points(), 0.05, 4);
    LevelView v3 = h.view(3);
    CHECK(v3.grid_tables.size() == 4);
    CHECK(v3.codebook.size() == static_cast<size_t>(m.n_codes) * m.code_dim);
    CHECK(v3.vlogits.empty());
    LevelView ste = h.view(3, /*ste_phase=*/true);
    CHECK_FALSE(ste.vlogits.empty());
    CHECK(ste.dec.fuse.dims.in == level_dec_in_width(m, 3));
}
