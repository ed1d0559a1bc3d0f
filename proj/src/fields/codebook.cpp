#include "igs/fields/codebook.hpp"

#include <algorithm>
#include <cmath>

#include "igs/core/errors.hpp"

namespace igs {

int codebook_argmax(std::span<const double> v) {
    if (v.empty()) throw ValidationError("codebook_argmax: empty logits");
    int best = 0;
    for (size_t i = 1; i < v.size(); ++i)
        if (v[i] > v[best]) best = static_cast<int>(i);
    return best;
}

void codebook_lookup_train(std::span<const double> codebook, int n_rows, int dim,
                           std::span<const double> v, std::span<double> out,
                           SteCache* cache) {
    if (static_cast<int>(v.size()) != n_rows || static_cast<int>(out.size()) != dim ||
        static_cast<int>(codebook.size()) != n_rows * dim)
        throw ValidationError("codebook_lookup_train: size mismatch");
    int am = codebook_argmax(v);
    const double* row = codebook.data() + static_cast<size_t>(am) * dim;
    std::copy(row, row + dim, out.begin());
    if (cache) {
        cache->argmax = am;
        cache->softmax.resize(v.size());
        double mx = v[am];
        double sum = 0.0;
        for (size_t i = 0; i < v.size(); ++i) {
            cache->softmax[i] = std::exp(v[i] - mx);
            sum += cache->softmax[i];
        }
        for (auto& w : cache->softmax) w /= sum;
    }
}

void codebook_lookup_train_backward(std::span<const double> codebook, int n_rows,
                                    int dim, const SteCache& cache,
                                    std::span<const double> d_out,
                                    std::span<double> d_codebook,
                                    std::span<double> d_v) {
    if (!d_codebook.empty()) {
        double* row = d_codebook.data() + static_cast<size_t>(cache.argmax) * dim;
        for (int f = 0; f < dim; ++f) row[f] += d_out[f];
    }
    if (!d_v.empty()) {
        // Through softmax(v)^T * C: g_r = C_r . d_out, dv = w * (g - w.g).
        double mean = 0.0;
        std::vector<double> g(n_rows);
        for (int r = 0; r < n_rows; ++r) {
            const double* row = codebook.data() + static_cast<size_t>(r) * dim;
            double acc = 0.0;
            for (int f = 0; f < dim; ++f) acc += row[f] * d_out[f];
            g[r] = acc;
            mean += cache.softmax[r] * acc;
        }
        for (int r = 0; r < n_rows; ++r)
            d_v[r] += cache.softmax[r] * (g[r] - mean);
    }
}

void codebook_lookup_infer(std::span<const double> codebook, int n_rows, int dim,
                           uint8_t idx, std::span<double> out) {
    if (idx >= n_rows) throw ValidationError("codebook_lookup_infer: index out of range");
    const double* row = codebook.data() + static_cast<size_t>(idx) * dim;
    std::copy(row, row + dim, out.begin());
}

}  // namespace igs
