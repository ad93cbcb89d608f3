#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "adma/tensor.hpp"

namespace adma {

// A labeled dataset: inputs (n x feature-shape), labels (n x classes) one-hot.
// Inputs are normalized to [0,1]; every label row has exactly one 1 entry.
struct Dataset {
    Tensor inputs;
    Tensor labels;
    std::string name;
    std::size_t class_count = 0;

    std::size_t size() const { return inputs.rank() == 0 ? 0 : inputs.dim(0); }
    std::size_t feature_size() const { return size() == 0 ? 0 : inputs.size() / size(); }
    std::size_t label_index(std::size_t i) const;
};

// Throws if the one-hot / normalization invariants do not hold.
void validate_dataset(const Dataset& ds);

struct SplitSpec {
    double train_fraction = 0.8;
    std::uint64_t seed = 0;
    bool stratified = true;
};

// IDX binary container (MNIST family): big-endian magic, 32-bit extents, raw bytes.
// Images use magic 0x00000803 (n, rows, cols); labels use 0x00000801 (n).
Dataset load_idx(const std::string& images_path, const std::string& labels_path);
void save_idx(const Dataset& ds, const std::string& images_path,
              const std::string& labels_path);

// Gaussian clusters around distinct centers inside the unit cube.
// Linearly separable when spread is small relative to the center spacing.
Dataset synth_blobs(std::size_t classes, std::size_t dims, std::size_t per_class,
                    double spread, std::uint64_t seed);

// MNIST-shaped surrogate: 10 classes of 28x28x1 glyph images built from
// per-class random prototypes with per-sample shift, intensity, and noise.
// Pixel values are byte-quantized so an IDX round trip is exact.
Dataset synth_digits(std::size_t per_class, std::uint64_t seed);

// Keeps the first per-class samples so that at most `limit` samples remain,
// preserving class balance within one sample. limit == 0 means no cap.
Dataset stratified_head(const Dataset& ds, std::size_t limit);

Dataset gather(const Dataset& ds, const std::vector<std::size_t>& indices);

std::pair<Dataset, Dataset> split(const Dataset& ds, const SplitSpec& spec);

// Index blocks covering 0..n-1 once; the final short block is included.
// The permutation is deterministic per (seed, epoch); shuffle=false keeps order.
std::vector<std::vector<std::size_t>> batch_indices(std::size_t n, std::size_t batch_size,
                                                    std::uint64_t seed, std::uint64_t epoch,
                                                    bool shuffle);

struct Batch {
    Tensor inputs;
    Tensor labels;
};

std::vector<Batch> batches(const Dataset& ds, std::size_t batch_size, std::uint64_t shuffle_seed,
                           std::uint64_t epoch, bool shuffle);

}  // namespace adma
