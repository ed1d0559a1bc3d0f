#include "igs/fields/hash_grid.hpp"

#include <algorithm>
#include <cmath>

#include "igs/core/errors.hpp"

namespace igs {

std::vector<int> GridMeta::resolutions() const {
    if (levels < 1) throw ValidationError("grid: levels must be >= 1");
    if (n_min < 1 || n_max < n_min) throw ValidationError("grid: bad resolution range");
    std::vector<int> res(levels);
    if (levels == 1) {
        res[0] = n_min;
    } else {
        double b = std::exp(std::log(static_cast<double>(n_max) / n_min) /
                            (levels - 1));
        for (int l = 0; l < levels; ++l)
            res[l] = static_cast<int>(std::floor(n_min * std::pow(b, l) + 0.5));
    }
    for (int l = 1; l < levels; ++l)
        if (res[l] <= res[l - 1])
            throw ValidationError("grid: resolutions must strictly increase");
    return res;
}

uint64_t hash_index(int64_t cx, int64_t cy, int64_t cz, uint32_t table_size) {
    uint64_t h = static_cast<uint64_t>(cx) * 1ULL ^
                 static_cast<uint64_t>(cy) * 2654435761ULL ^
                 static_cast<uint64_t>(cz) * 805459861ULL;
    return h % table_size;
}

namespace {

struct LevelGather {
    uint64_t corner[8];
    double weight[8];
    double dwdp[8][3];  // d(weight)/d(cell position), per axis
    double dp_dx[3];    // cell position per world unit, zero on clamped axes
};

LevelGather gather(const GridMeta& meta, int resolution, const Vec3& x) {
    LevelGather g;
    double p[3], frac[3];
    int64_t base[3];
    for (int a = 0; a < 3; ++a) {
        double lo = (&meta.bb_min.x)[a], hi = (&meta.bb_max.x)[a];
        double u = (x[a] - lo) / (hi - lo);
        bool clamped = u <= 0.0 || u >= 1.0;
        u = std::clamp(u, 0.0, 1.0);
        p[a] = u * resolution;
        base[a] = static_cast<int64_t>(std::floor(p[a]));
        frac[a] = p[a] - static_cast<double>(base[a]);
        g.dp_dx[a] = clamped ? 0.0 : resolution / (hi - lo);
    }
    for (int i = 0; i < 8; ++i) {
        int dx = i & 1, dy = (i >> 1) & 1, dz = (i >> 2) & 1;
        g.corner[i] = hash_index(base[0] + dx, base[1] + dy, base[2] + dz,
                                 meta.table_size);
        double wx = dx ? frac[0] : 1.0 - frac[0];
        double wy = dy ? frac[1] : 1.0 - frac[1];
        double wz = dz ? frac[2] : 1.0 - frac[2];
        g.weight[i] = wx * wy * wz;
        g.dwdp[i][0] = (dx ? 1.0 : -1.0) * wy * wz;
        g.dwdp[i][1] = (dy ? 1.0 : -1.0) * wx * wz;
        g.dwdp[i][2] = (dz ? 1.0 : -1.0) * wx * wy;
    }
    return g;
}

}  // namespace

void grid_interpolate(const GridMeta& meta,
                      std::span<const std::span<const double>> tables,
                      int active_levels, const Vec3& x, std::span<double> out) {
    if (active_levels < 1 || active_levels > meta.levels ||
        static_cast<int>(tables.size()) < active_levels)
        throw ValidationError("grid_interpolate: bad active level count");
    if (out.size() != static_cast<size_t>(active_levels) * meta.feature_dim)
        throw ValidationError("grid_interpolate: bad output size");

    std::vector<int> res = meta.resolutions();
    int F = meta.feature_dim;
    for (int l = 0; l < active_levels; ++l) {
        LevelGather g = gather(meta, res[l], x);
        const std::span<const double>& table = tables[l];
        double* dst = out.data() + static_cast<size_t>(l) * F;
        for (int f = 0; f < F; ++f) dst[f] = 0.0;
        for (int i = 0; i < 8; ++i) {
            const double* row = table.data() + g.corner[i] * F;
            for (int f = 0; f < F; ++f) dst[f] += g.weight[i] * row[f];
        }
    }
}

void grid_interpolate_backward(const GridMeta& meta,
                               std::span<const std::span<const double>> tables,
                               int active_levels, const Vec3& x,
                               std::span<const double> d_out,
                               std::span<const std::span<double>> d_tables,
                               Vec3* d_x) {
    std::vector<int> res = meta.resolutions();
    int F = meta.feature_dim;
    for (int l = 0; l < active_levels; ++l) {
        LevelGather g = gather(meta, res[l], x);
        const double* dy = d_out.data() + static_cast<size_t>(l) * F;
        bool want_tables = l < static_cast<int>(d_tables.size()) && !d_tables[l].empty();
        for (int i = 0; i < 8; ++i) {
            if (want_tables) {
                double* row = d_tables[l].data() + g.corner[i] * F;
                for (int f = 0; f < F; ++f) row[f] += g.weight[i] * dy[f];
            }
            if (d_x) {
                const double* row = tables[l].data() + g.corner[i] * F;
                double dot = 0.0;
                for (int f = 0; f < F; ++f) dot += row[f] * dy[f];
                for (int a = 0; a < 3; ++a)
                    (&d_x->x)[a] += dot * g.dwdp[i][a] * g.dp_dx[a];
            }
        }
    }
}

}  // namespace igs
