#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "igs/render/camera.hpp"
#include "igs/render/image.hpp"
#include "igs/render/projection.hpp"

namespace igs {

struct Dataset {
    std::vector<Camera> cameras;
    std::vector<Image> images;        // parallel to cameras
    std::vector<Vec3> points;
    std::vector<Vec3> point_colors;
    Vec3 bb_min, bb_max;
    std::vector<int> train_views, test_views;

    const Camera& camera(int i) const { return cameras.at(i); }
};

struct SceneGenConfig {
    uint64_t seed = 1;
    int n_gauss = 16;
    int n_cams = 24;
    int width = 64;
    int height = 64;
};

// Ground-truth mixture rendered by this repo's own rasterizer, so the
// training target is exactly realizable. Deterministic per seed.
std::vector<GaussianPrim> sample_mixture(const SceneGenConfig& cfg);

void gen_synthetic_scene(const SceneGenConfig& cfg, const std::string& out_dir);

// Reads cameras.json, the ppm images, and points.txt; validates and applies
// the every-8th-view test split.
Dataset load_dataset(const std::string& dir);

std::vector<GaussianPrim> load_mixture(const std::string& path);

}  // namespace igs
