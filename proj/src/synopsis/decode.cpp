#include "igs/synopsis/decode.hpp"

#include <cmath>

#include "igs/core/errors.hpp"
#include "igs/fields/codebook.hpp"
#include "igs/fields/hash_grid.hpp"
#include "igs/synopsis/mask.hpp"

namespace igs {

MaskLayout build_mask_layout(const ModelMeta& meta, int anchor_count,
                             const std::vector<uint8_t>& parent_bitmap) {
    MaskLayout ml;
    ml.slot_index.assign(static_cast<size_t>(anchor_count) * meta.K, -1);
    ml.group_starts.push_back(0);
    int stride = meta.bitmap_stride();
    for (int a = 0; a < anchor_count; ++a) {
        bool any = false;
        for (int i = 0; i < meta.K; ++i) {
            if (!bitmap_get(parent_bitmap, stride, a, i)) continue;
            ml.slot_index[static_cast<size_t>(a) * meta.K + i] = ml.count++;
            any = true;
        }
        if (any) ml.group_starts.push_back(ml.count);
    }
    return ml;
}

namespace {

// Grid features first (padded with zeros when a frozen foundational decoder
// expects more levels than are active), local feature at the tail.
void build_fuse_input(const LevelView& v, std::span<const double> fhier,
                      std::span<const double> floc, std::vector<double>& out) {
    const ModelMeta& meta = *v.meta;
    int width = level_dec_in_width(meta, v.level);
    out.assign(static_cast<size_t>(width), 0.0);
    std::copy(fhier.begin(), fhier.end(), out.begin());
    if (!floc.empty())
        std::copy(floc.begin(), floc.end(), out.end() - floc.size());
}

}  // namespace

DecodeResult decode_level(const LevelView& view, const Vec3& cam_pos,
                          DecodePhase phase, std::span<const double> mask_logits,
                          const MaskLayout* mask_layout, double mask_threshold) {
    const ModelMeta& meta = *view.meta;
    int K = meta.K;
    int stride = meta.bitmap_stride();
    int active = meta.active_levels(view.level);
    int F = meta.grid.feature_dim;
    bool has_local = level_has_local(meta, view.level);
    if (phase == DecodePhase::unfold_train && (mask_layout == nullptr))
        throw ValidationError("decode: unfold phase requires a mask layout");
    if (phase == DecodePhase::ste_train && view.vlogits.empty())
        throw ValidationError("decode: ste phase requires soft indices");

    DecodeResult dr;
    std::vector<double> floc(has_local ? meta.code_dim : 0);
    std::vector<double> fuse_in;
    double radius = meta.bound_radius();

    for (int a = 0; a < view.anchor_count; ++a) {
        std::vector<int> slots;
        for (int i = 0; i < K; ++i)
            if (bitmap_get(view.bitmap, stride, a, i))
                slots.push_back(i);
        if (slots.empty()) continue;

        Vec3 xa{view.pos[3 * a], view.pos[3 * a + 1], view.pos[3 * a + 2]};
        Vec3 la{std::exp(view.logscale[3 * a]), std::exp(view.logscale[3 * a + 1]),
                std::exp(view.logscale[3 * a + 2])};

        std::vector<double> fhier(static_cast<size_t>(active) * F);
        grid_interpolate(meta.grid, view.grid_tables, active, xa, fhier);

        SteCache ste;
        if (has_local) {
            if (phase == DecodePhase::ste_train) {
                codebook_lookup_train(
                    view.codebook, meta.n_codes, meta.code_dim,
                    view.vlogits.subspan(static_cast<size_t>(a) * meta.n_codes,
                                         meta.n_codes),
                    floc, &ste);
            } else {
                codebook_lookup_infer(view.codebook, meta.n_codes, meta.code_dim,
                                      view.idx[a], floc);
            }
        }
        build_fuse_input(view, fhier, floc, fuse_in);

        Vec3 delta = xa - cam_pos;
        double sigma_c = std::max(delta.norm(), 1e-12);
        Vec3 dir = delta / sigma_c;

        AnchorAttrCache cache;
        AnchorAttrs attrs = predict_attributes(view.dec, fuse_in, sigma_c / radius,
                                               dir, la, K, cache);

        for (int i : slots) {
            double mb = 1.0;
            if (phase == DecodePhase::unfold_train) {
                int64_t mi = mask_layout->slot_index[static_cast<size_t>(a) * K + i];
                if (mi < 0) throw ValidationError("decode: slot without mask logit");
                mb = mask_value(mask_logits[mi], mask_threshold);
            }
            GaussianPrim prim;
            const double* off = view.offsets.data() + (static_cast<size_t>(a) * K + i) * 3;
            prim.mu = {xa.x + off[0] * la.x, xa.y + off[1] * la.y,
                       xa.z + off[2] * la.z};
            prim.alpha = mb * attrs.alpha[i];
            prim.scale = attrs.scale[i] * mb;
            prim.rot = attrs.rot[i];
            prim.color = attrs.color[i];
            dr.prims.push_back(prim);
            dr.anchor_of.push_back(a);
            dr.slot_of.push_back(i);
            dr.mbit.push_back(static_cast<uint8_t>(mb));
            dr.alpha_pre.push_back(attrs.alpha[i]);
            dr.scale_pre.push_back(attrs.scale[i]);
        }
        dr.anchors.push_back(a);
        dr.cache.push_back(std::move(cache));
        dr.attrs.push_back(std::move(attrs));
        dr.ste.push_back(std::move(ste));
        dr.fhier.push_back(std::move(fhier));
        dr.l_a.push_back(la);
        dr.dirhat.push_back(dir);
        dr.sigma_c.push_back(sigma_c);
    }
    return dr;
}

void decode_level_backward(const LevelView& view, const Vec3& cam_pos,
                           DecodePhase phase, std::span<const double> mask_logits,
                           const MaskLayout* mask_layout, double mask_threshold,
                           const DecodeResult& dr,
                           std::span<const PrimGrad> prim_grads, DecodeSinks& sinks) {
    (void)cam_pos;
    (void)mask_threshold;
    const ModelMeta& meta = *view.meta;
    int K = meta.K;
    int active = meta.active_levels(view.level);
    int F = meta.grid.feature_dim;
    bool has_local = level_has_local(meta, view.level);
    double radius = meta.bound_radius();
    if (prim_grads.size() != dr.prims.size())
        throw ValidationError("decode backward: gradient count mismatch");

    std::vector<double> d_alpha(K), d_fuse_in;
    std::vector<Vec3> d_color(K), d_scale(K);
    std::vector<Vec4> d_rot(K);

    size_t p = 0;  // prims are grouped by anchor in emission order
    for (size_t ci = 0; ci < dr.anchors.size(); ++ci) {
        int a = dr.anchors[ci];
        std::fill(d_alpha.begin(), d_alpha.end(), 0.0);
        std::fill(d_color.begin(), d_color.end(), Vec3{});
        std::fill(d_scale.begin(), d_scale.end(), Vec3{});
        std::fill(d_rot.begin(), d_rot.end(), Vec4{0, 0, 0, 0});

        const Vec3& la = dr.l_a[ci];
        Vec3 d_xa{0, 0, 0}, d_la{0, 0, 0};

        for (; p < dr.prims.size() && dr.anchor_of[p] == a; ++p) {
            const PrimGrad& g = prim_grads[p];
            int i = dr.slot_of[p];
            double mb = dr.mbit[p];

            d_alpha[i] += mb * g.d_alpha;
            for (int c = 0; c < 3; ++c) {
                d_scale[i][c] += mb * g.d_scale[c];
                d_color[i][c] += g.d_color[c];
            }
            for (int c = 0; c < 4; ++c) d_rot[i][c] += g.d_rot[c];

            if (phase == DecodePhase::unfold_train && !sinks.mask_logits.empty()) {
                int64_t mi = mask_layout->slot_index[static_cast<size_t>(a) * K + i];
                double slope = mask_grad(mask_logits[mi]);
                double up = dr.alpha_pre[p] * g.d_alpha;
                for (int c = 0; c < 3; ++c) up += dr.scale_pre[p][c] * g.d_scale[c];
                sinks.mask_logits[mi] += slope * up;
            }

            const double* off = view.offsets.data() + (static_cast<size_t>(a) * K + i) * 3;
            for (int c = 0; c < 3; ++c) {
                d_xa[c] += g.d_mu[c];
                if (!sinks.offsets.empty())
                    sinks.offsets[(static_cast<size_t>(a) * K + i) * 3 + c] +=
                        g.d_mu[c] * la[c];
                d_la[c] += g.d_mu[c] * off[c];
            }
        }

        int width = level_dec_in_width(meta, view.level);
        d_fuse_in.assign(static_cast<size_t>(width), 0.0);
        double d_sigma_norm = 0.0;
        Vec3 d_dir{0, 0, 0};
        AnchorAttrGrads upstream{d_alpha, d_color, d_scale, d_rot};
        predict_attributes_backward(view.dec, dr.cache[ci], dr.attrs[ci], la, K,
                                    upstream, sinks.dec, d_fuse_in, d_sigma_norm,
                                    d_dir, d_la);

        // sigma_c = |x_a - x_c|, dir = (x_a - x_c)/sigma_c.
        double sc = dr.sigma_c[ci];
        const Vec3& dir = dr.dirhat[ci];
        double d_sc = d_sigma_norm / radius;
        double proj = d_dir.dot(dir);
        for (int c = 0; c < 3; ++c)
            d_xa[c] += dir[c] * d_sc + (d_dir[c] - dir[c] * proj) / sc;

        if (has_local) {
            std::span<const double> d_floc(d_fuse_in.data() + width - meta.code_dim,
                                           static_cast<size_t>(meta.code_dim));
            if (phase == DecodePhase::ste_train) {
                std::span<double> d_v;
                if (!sinks.vlogits.empty())
                    d_v = sinks.vlogits.subspan(static_cast<size_t>(a) * meta.n_codes,
                                                meta.n_codes);
                codebook_lookup_train_backward(view.codebook, meta.n_codes,
                                               meta.code_dim, dr.ste[ci], d_floc,
                                               sinks.codebook, d_v);
            } else if (!sinks.codebook.empty()) {
                double* row = sinks.codebook.data() +
                              static_cast<size_t>(view.idx[a]) * meta.code_dim;
                for (int f = 0; f < meta.code_dim; ++f) row[f] += d_floc[f];
            }
        }

        Vec3 xa{view.pos[3 * a], view.pos[3 * a + 1], view.pos[3 * a + 2]};
        bool want_pos = !sinks.pos.empty();
        grid_interpolate_backward(
            meta.grid, view.grid_tables, active, xa,
            std::span<const double>(d_fuse_in.data(), static_cast<size_t>(active) * F),
            sinks.grid_tables, want_pos ? &d_xa : nullptr);

        if (want_pos)
            for (int c = 0; c < 3; ++c) sinks.pos[3 * a + c] += d_xa[c];
        if (!sinks.logscale.empty())
            for (int c = 0; c < 3; ++c)
                sinks.logscale[3 * a + c] += d_la[c] * la[c];
    }
}

}  // namespace igs
