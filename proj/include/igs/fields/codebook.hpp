#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace igs {

// Ties resolve to the lowest index.
int codebook_argmax(std::span<const double> v);

// Straight-through lookup used while the foundational model trains: the
// forward value is exactly the argmax row, the backward pass behaves as if
// the output were softmax(v)^T * codebook.
struct SteCache {
    int argmax = 0;
    std::vector<double> softmax;
};

void codebook_lookup_train(std::span<const double> codebook, int n_rows, int dim,
                           std::span<const double> v, std::span<double> out,
                           SteCache* cache);

// d_codebook/d_v sinks may be empty (frozen).
void codebook_lookup_train_backward(std::span<const double> codebook, int n_rows,
                                    int dim, const SteCache& cache,
                                    std::span<const double> d_out,
                                    std::span<double> d_codebook,
                                    std::span<double> d_v);

// Inference path: plain row fetch by the frozen byte index.
void codebook_lookup_infer(std::span<const double> codebook, int n_rows, int dim,
                           uint8_t idx, std::span<double> out);

}  // namespace igs
