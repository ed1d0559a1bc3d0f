#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "igs/synopsis/lod_model.hpp"
#include "igs/synopsis/trainer.hpp"

namespace igs {

// Flat key=value run configuration. Every field has a default; unknown keys
// are rejected; the effective config is echoed into every output directory.
struct RunConfig {
    uint64_t seed = 1;
    int levels = 4;
    int offsets_per_anchor = 4;
    int n_codes = 256;
    int code_dim = 32;
    int fused_dim = 32;
    int mlp_hidden = 64;
    int grid_levels = 12;
    int grid_table_log2 = 15;
    int grid_feature_dim = 4;
    int grid_n_min = 16;
    int grid_n_max = 512;
    std::vector<int> grid_schedule{6, 8, 10, 12};  // active levels, L0 first
    std::string mode = "full";
    double voxel_size = 0.05;

    int full_iters = 30000;
    int unfold_iters = 10000;
    double lambda_ssim = 0.2;
    double lambda_vol = 0.001;
    double lambda_group = 0.01;
    double lambda_mask = 5e-4;
    double mask_threshold = 0.01;

    double lr_pos = 2e-4;
    double lr_offsets = 4e-3;
    double lr_logscale = 4e-3;
    double lr_grid = 8e-3;
    double lr_mlp = 2e-3;
    double lr_codebook = 4e-3;
    double lr_vlogits = 2e-2;
    double lr_mask = 1e-2;
    double lr_final_ratio = 0.1;

    int threads = 1;
    int deflate_level = 6;
    int log_every = 50;
};

RunConfig parse_config_text(const std::string& text);
RunConfig load_config(const std::string& path);  // empty path keeps defaults
std::string config_text(const RunConfig& cfg);

ModelMeta make_meta(const RunConfig& cfg, const Vec3& bb_min, const Vec3& bb_max);
TrainPhaseConfig full_phase(const RunConfig& cfg);
TrainPhaseConfig unfold_phase(const RunConfig& cfg);

}  // namespace igs
