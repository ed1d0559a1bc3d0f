#include "igs/datasets/metrics.hpp"

#include <cmath>
#include <sstream>

#include "igs/core/errors.hpp"
#include "igs/losses/ssim.hpp"
#include "igs/synopsis/decode.hpp"

namespace igs {

double psnr(const Image& a, const Image& b) {
    if (a.width != b.width || a.height != b.height)
        throw ValidationError("psnr: image dimensions differ");
    double mse = 0.0;
    for (size_t i = 0; i < a.data.size(); ++i) {
        double d = a.data[i] - b.data[i];
        mse += d * d;
    }
    mse /= static_cast<double>(a.data.size());
    if (mse <= 0.0) return kPsnrSentinel;
    return std::min(kPsnrSentinel, 10.0 * std::log10(1.0 / mse));
}

std::vector<EvalRow> evaluate_level(const LevelSnapshot& snap, const Dataset& ds,
                                    const RenderOptions& opts) {
    if (ds.test_views.empty()) throw ValidationError("evaluate: empty test split");
    double scale = snap.meta.resolution_scale(snap.level);
    LevelView view = make_view(snap);

    std::vector<EvalRow> rows;
    for (int vi : ds.test_views) {
        Camera cam = ds.cameras[vi].scaled(scale);
        Image gt = resize_bilinear(ds.images[vi], cam.width, cam.height);
        DecodeResult dr = decode_level(view, cam.position(), DecodePhase::inference);
        Image img = render_image(dr.prims, cam, opts);
        EvalRow row;
        row.level = snap.level;
        row.view = vi;
        row.psnr = psnr(img, gt);
        row.ssim = ssim(img, gt);
        rows.push_back(row);
    }
    return rows;
}

double mean_psnr(const std::vector<EvalRow>& rows) {
    if (rows.empty()) return 0.0;
    double s = 0.0;
    for (const EvalRow& r : rows) s += r.psnr;
    return s / static_cast<double>(rows.size());
}

std::string eval_csv(const std::vector<EvalRow>& rows) {
    std::ostringstream out;
    out.precision(10);
    out << "level,view,psnr,ssim\n";
    for (const EvalRow& r : rows)
        out << r.level << "," << r.view << "," << r.psnr << "," << r.ssim << "\n";
    return out.str();
}

}  // namespace igs
