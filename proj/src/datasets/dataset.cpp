#include "igs/datasets/dataset.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "igs/core/errors.hpp"
#include "igs/core/rng.hpp"
#include "igs/datasets/image_io.hpp"
#include "igs/render/rasterizer.hpp"
#include "igs/streamio/binary.hpp"

namespace igs {

namespace {

using nlohmann::json;

constexpr double kCamRadius = 3.0;
constexpr double kPointNoise = 0.02;
constexpr int kPointsPerGaussian = 8;

std::string view_name(int i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "view_%03d.ppm", i);
    return buf;
}

json vec3_json(const Vec3& v) { return json::array({v.x, v.y, v.z}); }

Vec3 vec3_from(const json& j, const std::string& what) {
    if (!j.is_array() || j.size() != 3)
        throw IoError(IoCode::malformed, what + ": expected 3 numbers");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

void write_text(const std::string& path, const std::string& text) {
    write_file_bytes(path, std::span<const uint8_t>(
                               reinterpret_cast<const uint8_t*>(text.data()),
                               text.size()));
}

std::string read_text(const std::string& path) {
    std::vector<uint8_t> b = read_file_bytes(path);
    return std::string(b.begin(), b.end());
}

json mixture_json(std::span<const GaussianPrim> prims) {
    json arr = json::array();
    for (const GaussianPrim& g : prims) {
        json e;
        e["mu"] = vec3_json(g.mu);
        e["scale"] = vec3_json(g.scale);
        e["rot"] = json::array({g.rot.w, g.rot.x, g.rot.y, g.rot.z});
        e["color"] = vec3_json(g.color);
        e["alpha"] = g.alpha;
        arr.push_back(e);
    }
    return arr;
}

}  // namespace

std::vector<GaussianPrim> sample_mixture(const SceneGenConfig& cfg) {
    Rng rng(cfg.seed);
    std::vector<GaussianPrim> prims(cfg.n_gauss);
    for (GaussianPrim& g : prims) {
        g.mu = rng.uniform_vec3(0.15, 0.85);
        g.scale = rng.uniform_vec3(0.02, 0.1);
        g.rot = rng.unit_quaternion();
        g.color = rng.uniform_vec3(0.05, 0.95);
        g.alpha = rng.uniform(0.5, 1.0);
    }
    return prims;
}

void gen_synthetic_scene(const SceneGenConfig& cfg, const std::string& out_dir) {
    if (cfg.n_gauss < 1) throw ValidationError("gen: need at least one gaussian");
    if (cfg.n_cams < 3) throw ValidationError("gen: need at least three cameras");
    if (cfg.width < 8 || cfg.height < 8)
        throw ValidationError("gen: resolution too small");
    std::filesystem::create_directories(out_dir);

    std::vector<GaussianPrim> prims = sample_mixture(cfg);

    // Camera ring: radius 3 around the cube center, pole gap so the up vector
    // never degenerates.
    Rng rng(cfg.seed + 0x9e3779b97f4a7c15ull);
    Vec3 center{0.5, 0.5, 0.5};
    double f = 1.6 * std::min(cfg.width, cfg.height);
    std::vector<Camera> cams(cfg.n_cams);
    for (int i = 0; i < cfg.n_cams; ++i) {
        double z = rng.uniform(-0.85, 0.85);
        double phi = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
        double r = std::sqrt(1.0 - z * z);
        Vec3 eye = center + Vec3{r * std::cos(phi), r * std::sin(phi), z} * kCamRadius;
        cams[i] = Camera::look_at(eye, center, {0, 0, 1}, f, f, cfg.width, cfg.height);
        cams[i].image_name = view_name(i);
    }

    RenderOptions opts;
    json jcams = json::array();
    for (int i = 0; i < cfg.n_cams; ++i) {
        Image img = render_image(prims, cams[i], opts);
        write_ppm(img, out_dir + "/" + cams[i].image_name);
        json jc;
        json w2c = json::array();
        for (int rr = 0; rr < 3; ++rr) {
            for (int cc = 0; cc < 3; ++cc) w2c.push_back(cams[i].R(rr, cc));
            w2c.push_back(cams[i].t[rr]);
        }
        jc["w2c"] = w2c;
        jc["fx"] = cams[i].fx;
        jc["fy"] = cams[i].fy;
        jc["cx"] = cams[i].cx;
        jc["cy"] = cams[i].cy;
        jc["width"] = cams[i].width;
        jc["height"] = cams[i].height;
        jc["image"] = cams[i].image_name;
        jcams.push_back(jc);
    }

    std::vector<Vec3> points;
    std::vector<Vec3> colors;
    for (const GaussianPrim& g : prims) {
        for (int s = 0; s < kPointsPerGaussian; ++s) {
            Vec3 p = g.mu + Vec3{rng.normal(), rng.normal(), rng.normal()} * kPointNoise;
            points.push_back(p);
            colors.push_back(g.color);
        }
    }
    Vec3 lo = points[0], hi = points[0];
    for (const Vec3& p : points)
        for (int c = 0; c < 3; ++c) {
            lo[c] = std::min(lo[c], p[c]);
            hi[c] = std::max(hi[c], p[c]);
        }
    lo = lo - Vec3{0.05, 0.05, 0.05};
    hi = hi + Vec3{0.05, 0.05, 0.05};

    std::ostringstream pts;
    pts.precision(17);
    for (size_t i = 0; i < points.size(); ++i)
        pts << points[i].x << " " << points[i].y << " " << points[i].z << " "
            << colors[i].x << " " << colors[i].y << " " << colors[i].z << "\n";
    write_text(out_dir + "/points.txt", pts.str());

    json root;
    root["bb_min"] = vec3_json(lo);
    root["bb_max"] = vec3_json(hi);
    root["cameras"] = jcams;
    write_text(out_dir + "/cameras.json", root.dump(2) + "\n");
    write_text(out_dir + "/mixture.json", mixture_json(prims).dump(2) + "\n");
}

Dataset load_dataset(const std::string& dir) {
    json root;
    try {
        root = json::parse(read_text(dir + "/cameras.json"));
    } catch (const json::exception& e) {
        throw IoError(IoCode::malformed, dir + "/cameras.json: " + e.what());
    }

    Dataset ds;
    ds.bb_min = vec3_from(root.at("bb_min"), "bb_min");
    ds.bb_max = vec3_from(root.at("bb_max"), "bb_max");
    for (int c = 0; c < 3; ++c)
        if (!(ds.bb_min[c] < ds.bb_max[c]))
            throw ValidationError("dataset: degenerate bounding box");

    if (!root.contains("cameras") || !root["cameras"].is_array())
        throw IoError(IoCode::malformed, "cameras.json: missing camera list");
    for (const json& jc : root["cameras"]) {
        Camera cam;
        try {
            const json& w2c = jc.at("w2c");
            if (!w2c.is_array() || w2c.size() != 12)
                throw IoError(IoCode::malformed, "camera w2c: expected 12 numbers");
            for (int rr = 0; rr < 3; ++rr) {
                for (int cc = 0; cc < 3; ++cc)
                    cam.R(rr, cc) = w2c[4 * rr + cc].get<double>();
                cam.t[rr] = w2c[4 * rr + 3].get<double>();
            }
            cam.fx = jc.at("fx").get<double>();
            cam.fy = jc.at("fy").get<double>();
            cam.cx = jc.at("cx").get<double>();
            cam.cy = jc.at("cy").get<double>();
            cam.width = jc.at("width").get<int>();
            cam.height = jc.at("height").get<int>();
            cam.image_name = jc.at("image").get<std::string>();
        } catch (const json::exception& e) {
            throw IoError(IoCode::malformed,
                          "camera " + std::to_string(ds.cameras.size()) + ": " + e.what());
        }
        if (cam.width < 1 || cam.height < 1)
            throw ValidationError("camera " + cam.image_name +
                                  ": non-positive resolution");
        if (cam.fx <= 0 || cam.fy <= 0)
            throw ValidationError("camera " + cam.image_name + ": non-positive focal");
        ds.cameras.push_back(cam);
    }
    if (ds.cameras.size() < 3)
        throw ValidationError("dataset: need at least three views for a split");

    for (const Camera& cam : ds.cameras) {
        Image img = read_ppm(dir + "/" + cam.image_name);
        if (img.width != cam.width || img.height != cam.height)
            throw ValidationError(cam.image_name + ": resolution differs from camera");
        ds.images.push_back(std::move(img));
    }

    std::istringstream pts(read_text(dir + "/points.txt"));
    std::string line;
    int lineno = 0;
    while (std::getline(pts, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ls(line);
        Vec3 p, c;
        if (!(ls >> p.x >> p.y >> p.z >> c.x >> c.y >> c.z))
            throw IoError(IoCode::malformed,
                          "points.txt line " + std::to_string(lineno) + ": expected 6 numbers");
        ds.points.push_back(p);
        ds.point_colors.push_back(c);
    }
    if (ds.points.empty()) throw ValidationError("dataset: no points");
    for (const Vec3& p : ds.points)
        for (int c = 0; c < 3; ++c)
            if (p[c] < ds.bb_min[c] || p[c] > ds.bb_max[c])
                throw ValidationError("dataset: point outside the bounding box");

    for (int i = 0; i < static_cast<int>(ds.cameras.size()); ++i)
        (i % 8 == 0 ? ds.test_views : ds.train_views).push_back(i);
    return ds;
}

std::vector<GaussianPrim> load_mixture(const std::string& path) {
    json arr;
    try {
        arr = json::parse(read_text(path));
    } catch (const json::exception& e) {
        throw IoError(IoCode::malformed, path + ": " + e.what());
    }
    std::vector<GaussianPrim> prims;
    for (const json& e : arr) {
        GaussianPrim g;
        g.mu = vec3_from(e.at("mu"), "mu");
        g.scale = vec3_from(e.at("scale"), "scale");
        const json& q = e.at("rot");
        g.rot = {q[0].get<double>(), q[1].get<double>(), q[2].get<double>(),
                 q[3].get<double>()};
        g.color = vec3_from(e.at("color"), "color");
        g.alpha = e.at("alpha").get<double>();
        prims.push_back(g);
    }
    return prims;
}

}  // namespace igs
