#pragma once

#include <string>
#include <vector>

#include "igs/datasets/dataset.hpp"
#include "igs/render/rasterizer.hpp"
#include "igs/synopsis/lod_model.hpp"

namespace igs {

// 10*log10(1/MSE) over all channels; identical images report the 99 dB
// sentinel instead of infinity.
double psnr(const Image& a, const Image& b);
inline constexpr double kPsnrSentinel = 99.0;

struct EvalRow {
    int level = 0;
    int view = 0;       // dataset camera index
    double psnr = 0.0;
    double ssim = 0.0;
};

// Renders every test view at the level's resolution scale against bilinearly
// downsampled ground truth. Pure given its inputs.
std::vector<EvalRow> evaluate_level(const LevelSnapshot& snap, const Dataset& ds,
                                    const RenderOptions& opts);

double mean_psnr(const std::vector<EvalRow>& rows);

std::string eval_csv(const std::vector<EvalRow>& rows);

}  // namespace igs
