#include "igs/synopsis/trainer.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "igs/core/errors.hpp"
#include "igs/core/rng.hpp"
#include "igs/diffcore/optimizer.hpp"
#include "igs/fields/codebook.hpp"
#include "igs/synopsis/decode.hpp"
#include "igs/synopsis/mask.hpp"

namespace igs {

double lambda_mask_at(const TrainPhaseConfig& cfg, const ModelMeta& meta, int level) {
    return cfg.lambda_mask * std::pow(4.0, meta.lmax - 2 - level);
}

namespace {

double family_rate(const std::string& name, const OptimRates& r) {
    auto starts = [&](const char* p) { return name.rfind(p, 0) == 0; };
    if (name == "anchor.pos") return r.pos;
    if (name == "anchor.offsets") return r.offsets;
    if (name == "anchor.logscale") return r.logscale;
    if (name == "codebook.vlogits") return r.vlogits;
    if (starts("grid.")) return r.grid;
    if (starts("cb.")) return r.codebook;
    if (starts("dec")) return r.mlp;
    if (starts("mask.")) return r.mask;
    return r.mlp;
}

AdamState make_optimizer(const ParamStore& params, const TrainPhaseConfig& cfg) {
    AdamState adam;
    adam.schedule = {1.0, cfg.rates.final_ratio, cfg.iterations};
    for (const auto& name : params.order())
        adam.set_block_lr(name, family_rate(name, cfg.rates));
    return adam;
}

MlpGrads mlp_grads(ParamStore& p, const std::string& prefix) {
    return {p.grads(prefix + ".w0"), p.grads(prefix + ".b0"),
            p.grads(prefix + ".w1"), p.grads(prefix + ".b1")};
}

DecoderGrads decoder_grads(ParamStore& p, int owner_level) {
    std::string prefix = decoder_prefix(owner_level);
    DecoderGrads g;
    g.fuse = mlp_grads(p, prefix + ".fuse");
    g.heads[kOpacity] = mlp_grads(p, prefix + ".opacity");
    g.heads[kColor] = mlp_grads(p, prefix + ".color");
    g.heads[kScale] = mlp_grads(p, prefix + ".scale");
    g.heads[kRotation] = mlp_grads(p, prefix + ".rot");
    return g;
}

// Renders one view, scores it, and pushes gradients back into the sinks.
// Returns the image-space loss terms; the caller adds any sparsity term.
FullLossResult step_view(const LevelView& view, const Camera& cam, const Image& gt,
                         DecodePhase phase, std::span<const double> mask_logits,
                         const MaskLayout* layout, const TrainPhaseConfig& cfg,
                         DecodeSinks& sinks) {
    DecodeResult dr = decode_level(view, cam.position(), phase, mask_logits, layout,
                                   cfg.mask_threshold);
    RenderContext ctx;
    Image img = render_image(dr.prims, cam, cfg.render, &ctx);

    std::vector<Vec3> scales(dr.prims.size());
    for (size_t i = 0; i < dr.prims.size(); ++i) scales[i] = dr.prims[i].scale;

    Image d_img(img.width, img.height);
    std::vector<Vec3> d_scales(dr.prims.size());
    FullLossResult loss =
        loss_full_backward(img, gt, scales, cfg.loss, d_img, d_scales);
    if (!std::isfinite(loss.total))
        throw NumericalError("training loss diverged");

    std::vector<PrimGrad> pg =
        render_image_backward(dr.prims, cam, cfg.render, ctx, d_img);
    for (size_t i = 0; i < pg.size(); ++i)
        for (int c = 0; c < 3; ++c) pg[i].d_scale[c] += d_scales[i][c];

    decode_level_backward(view, cam.position(), phase, mask_logits, layout,
                          cfg.mask_threshold, dr, pg, sinks);
    return loss;
}

}  // namespace

void train_full(Hierarchy& h, std::span<const TrainItem> views,
                const TrainPhaseConfig& cfg, const MetricsSink& sink) {
    if (views.empty()) throw ValidationError("train: no views");
    if (cfg.iterations < 1) throw ValidationError("train: iterations must be positive");
    const ModelMeta& meta = h.meta;
    int top = meta.lmax - 1;
    ParamStore& p = h.params;
    for (const auto& name : p.order()) p.at(name).trainable = true;

    AdamState adam = make_optimizer(p, cfg);
    Rng rng(cfg.seed);

    LevelView view = h.view(top, /*ste_phase=*/true);
    DecodeSinks sinks;
    sinks.pos = p.grads("anchor.pos");
    sinks.offsets = p.grads("anchor.offsets");
    sinks.logscale = p.grads("anchor.logscale");
    for (int l = 0; l < meta.active_levels(top); ++l)
        sinks.grid_tables.push_back(p.grads("grid.l" + std::to_string(l)));
    sinks.codebook = p.grads(codebook_block_name(meta, top));
    sinks.vlogits = p.grads("codebook.vlogits");
    sinks.dec = decoder_grads(p, level_decoder_owner(meta, top));

    for (int it = 0; it < cfg.iterations; ++it) {
        const TrainItem& item = views[rng.uniform_int(static_cast<int>(views.size()))];
        p.zero_grad();
        FullLossResult loss = step_view(view, item.cam, *item.gt,
                                        DecodePhase::ste_train, {}, nullptr, cfg, sinks);
        p.check_finite_grads();
        adam.step(p, adam.schedule.at(it));

        if (sink && (it % cfg.log_every == 0 || it + 1 == cfg.iterations)) {
            MetricsRow row;
            row.phase = "full";
            row.iteration = it;
            row.total = loss.total;
            row.l1 = loss.l1;
            row.dssim = loss.dssim;
            row.vol = loss.vol;
            row.active_anchors = h.active_anchor_count(top);
            row.active_slots = h.active_slot_count(top);
            sink(row);
        }
    }

    refresh_codebook_indices(h);
    h.level_built[top] = true;
}

// Freezes the straight-through choice into the byte indices.
void refresh_codebook_indices(Hierarchy& h) {
    std::span<const double> vl = h.params.values("codebook.vlogits");
    for (int a = 0; a < h.anchor_count(); ++a)
        h.idx[a] = static_cast<uint8_t>(codebook_argmax(
            vl.subspan(static_cast<size_t>(a) * h.meta.n_codes, h.meta.n_codes)));
}

void unfold_level(Hierarchy& h, int level, std::span<const TrainItem> views,
                  const TrainPhaseConfig& cfg, const MetricsSink& sink) {
    const ModelMeta& meta = h.meta;
    if (level < 0 || level >= meta.lmax - 1)
        throw ValidationError("unfold: level must have a parent");
    if (!h.level_built[level + 1])
        throw ValidationError("unfold: parent level not trained");
    if (h.level_built[level]) throw ValidationError("unfold: level already built");
    if (views.empty()) throw ValidationError("unfold: no views");

    ParamStore& p = h.params;
    h.instantiate_level_params(level);

    const std::vector<uint8_t>& parent_bm = h.bitmaps[level + 1];
    MaskLayout layout = build_mask_layout(meta, h.anchor_count(), parent_bm);
    if (layout.count == 0) throw ValidationError("unfold: parent has no active slots");

    std::string mask_name = "mask.L" + std::to_string(level);
    auto& mask_block = p.add(mask_name, {layout.count});
    const double init_logit = std::log(9.0);  // sigmoid 0.9, everything passes
    std::fill(mask_block.value.begin(), mask_block.value.end(), init_logit);

    bool train_cb = meta.mode == AblationMode::full || meta.mode == AblationMode::cbm_only;
    bool train_dec = meta.mode == AblationMode::full || meta.mode == AblationMode::lad_only;
    std::string cb_name = train_cb ? "cb.L" + std::to_string(level) : "";
    std::string dec_pref = decoder_prefix(level_decoder_owner(meta, level)) + ".";
    for (const auto& name : p.order()) {
        bool on = name == mask_name || (train_cb && name == cb_name) ||
                  (train_dec && name.rfind(dec_pref, 0) == 0);
        p.at(name).trainable = on;
    }

    double scale = meta.resolution_scale(level);
    std::vector<Camera> cams;
    std::vector<Image> gts;
    cams.reserve(views.size());
    gts.reserve(views.size());
    for (const TrainItem& item : views) {
        cams.push_back(item.cam.scaled(scale));
        gts.push_back(resize_bilinear(*item.gt, cams.back().width, cams.back().height));
    }

    LevelView view = h.view(level);
    view.bitmap = parent_bm;
    DecodeSinks sinks;
    if (train_cb) sinks.codebook = p.grads(cb_name);
    if (train_dec) sinks.dec = decoder_grads(p, level);
    sinks.mask_logits = p.grads(mask_name);

    double lam_mask = lambda_mask_at(cfg, meta, level);
    AdamState adam = make_optimizer(p, cfg);
    Rng rng(cfg.seed + 11 * static_cast<uint64_t>(level) + 1);
    std::string phase_name = "unfold.L" + std::to_string(level);

    for (int it = 0; it < cfg.iterations; ++it) {
        int vi = rng.uniform_int(static_cast<int>(views.size()));
        p.zero_grad();
        std::span<const double> logits = p.values(mask_name);
        FullLossResult loss = step_view(view, cams[vi], gts[vi],
                                        DecodePhase::unfold_train, logits, &layout,
                                        cfg, sinks);
        SparsityResult sp = loss_sparsity_backward(logits, layout.group_starts,
                                                   cfg.loss.lambda_group, lam_mask,
                                                   p.grads(mask_name));
        if (!std::isfinite(sp.total)) throw NumericalError("sparsity loss diverged");
        p.check_finite_grads();
        adam.step(p, adam.schedule.at(it));

        if (sink && (it % cfg.log_every == 0 || it + 1 == cfg.iterations)) {
            std::span<const double> m = p.values(mask_name);
            int slots = 0;
            for (double v : m) slots += mask_bit(v, cfg.mask_threshold) ? 1 : 0;
            int anchors = 0;
            for (size_t g = 0; g + 1 < layout.group_starts.size(); ++g) {
                for (int64_t i = layout.group_starts[g]; i < layout.group_starts[g + 1]; ++i)
                    if (mask_bit(m[i], cfg.mask_threshold)) {
                        ++anchors;
                        break;
                    }
            }
            MetricsRow row;
            row.phase = phase_name;
            row.iteration = it;
            row.total = loss.total + lam_mask * sp.total;
            row.l1 = loss.l1;
            row.dssim = loss.dssim;
            row.vol = loss.vol;
            row.sparsity = sp.total;
            row.active_anchors = anchors;
            row.active_slots = slots;
            sink(row);
        }
    }

    // bitmap(L) = bitmap(L+1) AND surviving mask bits; nested by construction.
    int stride = meta.bitmap_stride();
    std::vector<uint8_t> bm(static_cast<size_t>(h.anchor_count()) * stride, 0);
    std::span<const double> m = p.values(mask_name);
    int survivors = 0;
    for (int a = 0; a < h.anchor_count(); ++a)
        for (int i = 0; i < meta.K; ++i) {
            int64_t mi = layout.slot_index[static_cast<size_t>(a) * meta.K + i];
            if (mi < 0) continue;
            bool on = mask_bit(m[mi], cfg.mask_threshold);
            bitmap_set(bm, stride, a, i, on);
            survivors += on ? 1 : 0;
        }
    if (survivors == 0)
        throw ValidationError("unfold: every slot pruned at level " +
                              std::to_string(level));
    h.bitmaps[level] = std::move(bm);
    h.level_built[level] = true;
    p.remove(mask_name);
}

}  // namespace igs
