#include "adma/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "adma/rng.hpp"

namespace adma {

namespace {

constexpr std::uint32_t kImageMagic = 0x00000803;
constexpr std::uint32_t kLabelMagic = 0x00000801;

std::uint32_t get_u32_be(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    return (static_cast<std::uint32_t>(b[0]) << 24) | (static_cast<std::uint32_t>(b[1]) << 16) |
           (static_cast<std::uint32_t>(b[2]) << 8) | static_cast<std::uint32_t>(b[3]);
}

void put_u32_be(std::ostream& os, std::uint32_t v) {
    const char b[4] = {static_cast<char>((v >> 24) & 0xFF), static_cast<char>((v >> 16) & 0xFF),
                       static_cast<char>((v >> 8) & 0xFF), static_cast<char>(v & 0xFF)};
    os.write(b, 4);
}

Tensor one_hot(const std::vector<std::size_t>& labels, std::size_t classes) {
    Tensor out({labels.size(), classes});
    for (std::size_t i = 0; i < labels.size(); ++i) out(i, labels[i]) = 1.0;
    return out;
}

}  // namespace

std::size_t Dataset::label_index(std::size_t i) const {
    const std::size_t classes = labels.dim(1);
    const double* row = labels.data() + i * classes;
    std::size_t best = 0;
    for (std::size_t c = 1; c < classes; ++c)
        if (row[c] > row[best]) best = c;
    return best;
}

void validate_dataset(const Dataset& ds) {
    if (ds.inputs.rank() < 2 || ds.labels.rank() != 2) {
        throw std::invalid_argument("dataset needs rank >= 2 inputs and rank-2 labels");
    }
    if (ds.inputs.dim(0) != ds.labels.dim(0)) {
        throw std::invalid_argument("dataset has " + std::to_string(ds.inputs.dim(0)) +
                                    " inputs but " + std::to_string(ds.labels.dim(0)) + " labels");
    }
    if (ds.labels.dim(1) != ds.class_count) {
        throw std::invalid_argument("label width does not match class_count");
    }
    for (std::size_t i = 0; i < ds.inputs.size(); ++i) {
        if (!(ds.inputs[i] >= 0.0 && ds.inputs[i] <= 1.0)) {
            throw std::invalid_argument("input value " + std::to_string(ds.inputs[i]) +
                                        " outside [0,1] at index " + std::to_string(i));
        }
    }
    for (std::size_t i = 0; i < ds.size(); ++i) {
        std::size_t ones = 0;
        double sum = 0.0;
        for (std::size_t c = 0; c < ds.class_count; ++c) {
            const double v = ds.labels(i, c);
            if (v == 1.0) ++ones;
            else if (v != 0.0) throw std::invalid_argument("label entries must be 0 or 1");
            sum += v;
        }
        if (ones != 1 || sum != 1.0) {
            throw std::invalid_argument("label row " + std::to_string(i) + " is not one-hot");
        }
    }
}

// ---------------------------------------------------------------- idx io

Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
    std::ifstream imgs(images_path, std::ios::binary);
    if (!imgs) throw std::runtime_error("cannot open IDX image file: " + images_path);
    std::ifstream labs(labels_path, std::ios::binary);
    if (!labs) throw std::runtime_error("cannot open IDX label file: " + labels_path);

    const std::uint32_t img_magic = get_u32_be(imgs);
    if (!imgs || img_magic != kImageMagic) {
        throw std::runtime_error("bad IDX image magic in " + images_path);
    }
    const std::size_t n = get_u32_be(imgs);
    const std::size_t rows = get_u32_be(imgs);
    const std::size_t cols = get_u32_be(imgs);
    if (!imgs) throw std::runtime_error("truncated IDX image header in " + images_path);

    const std::uint32_t lab_magic = get_u32_be(labs);
    if (!labs || lab_magic != kLabelMagic) {
        throw std::runtime_error("bad IDX label magic in " + labels_path);
    }
    const std::size_t n_labels = get_u32_be(labs);
    if (!labs) throw std::runtime_error("truncated IDX label header in " + labels_path);
    if (n != n_labels) {
        throw std::runtime_error("IDX count mismatch: " + std::to_string(n) + " images vs " +
                                 std::to_string(n_labels) + " labels");
    }

    std::vector<unsigned char> pixel_bytes(n * rows * cols);
    imgs.read(reinterpret_cast<char*>(pixel_bytes.data()),
              static_cast<std::streamsize>(pixel_bytes.size()));
    if (!imgs) throw std::runtime_error("truncated IDX image data in " + images_path);
    std::vector<unsigned char> label_bytes(n);
    labs.read(reinterpret_cast<char*>(label_bytes.data()), static_cast<std::streamsize>(n));
    if (!labs) throw std::runtime_error("truncated IDX label data in " + labels_path);

    Dataset ds;
    ds.inputs = Tensor({n, rows, cols, 1});
    for (std::size_t i = 0; i < pixel_bytes.size(); ++i) {
        ds.inputs[i] = static_cast<double>(pixel_bytes[i]) / 255.0;
    }
    std::vector<std::size_t> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (label_bytes[i] > 9) {
            throw std::runtime_error("IDX label " + std::to_string(label_bytes[i]) +
                                     " exceeds the 10-class range");
        }
        labels[i] = label_bytes[i];
    }
    ds.labels = one_hot(labels, 10);
    ds.class_count = 10;
    ds.name = "idx";
    return ds;
}

void save_idx(const Dataset& ds, const std::string& images_path,
              const std::string& labels_path) {
    if (ds.inputs.rank() != 4 || ds.inputs.dim(3) != 1) {
        throw std::invalid_argument("save_idx expects (n, rows, cols, 1) inputs, got " +
                                    shape_str(ds.inputs.shape()));
    }
    const std::size_t n = ds.size(), rows = ds.inputs.dim(1), cols = ds.inputs.dim(2);

    std::ofstream imgs(images_path, std::ios::binary);
    if (!imgs) throw std::runtime_error("cannot open IDX image file for writing: " + images_path);
    put_u32_be(imgs, kImageMagic);
    put_u32_be(imgs, static_cast<std::uint32_t>(n));
    put_u32_be(imgs, static_cast<std::uint32_t>(rows));
    put_u32_be(imgs, static_cast<std::uint32_t>(cols));
    for (std::size_t i = 0; i < ds.inputs.size(); ++i) {
        const long byte = std::lround(ds.inputs[i] * 255.0);
        imgs.put(static_cast<char>(std::clamp(byte, 0L, 255L)));
    }
    if (!imgs) throw std::runtime_error("IDX image write failed: " + images_path);

    std::ofstream labs(labels_path, std::ios::binary);
    if (!labs) throw std::runtime_error("cannot open IDX label file for writing: " + labels_path);
    put_u32_be(labs, kLabelMagic);
    put_u32_be(labs, static_cast<std::uint32_t>(n));
    for (std::size_t i = 0; i < n; ++i) labs.put(static_cast<char>(ds.label_index(i)));
    if (!labs) throw std::runtime_error("IDX label write failed: " + labels_path);
}

// ---------------------------------------------------------------- synthetic

Dataset synth_blobs(std::size_t classes, std::size_t dims, std::size_t per_class, double spread,
                    std::uint64_t seed) {
    if (classes < 2) throw std::invalid_argument("synth_blobs needs at least 2 classes");
    if (per_class < 1) throw std::invalid_argument("synth_blobs needs per_class >= 1");
    if (dims < 1) throw std::invalid_argument("synth_blobs needs dims >= 1");
    if (spread < 0.0) throw std::invalid_argument("synth_blobs spread must be >= 0");

    // distinct centers inside the unit cube: spaced on a circle in the first
    // two dims, centered elsewhere
    std::vector<std::vector<double>> centers(classes, std::vector<double>(dims, 0.5));
    for (std::size_t c = 0; c < classes; ++c) {
        const double t = 2.0 * 3.14159265358979323846 * static_cast<double>(c) /
                         static_cast<double>(classes);
        if (dims == 1) {
            centers[c][0] = (static_cast<double>(c) + 0.5) / static_cast<double>(classes);
        } else {
            centers[c][0] = 0.5 + 0.35 * std::cos(t);
            centers[c][1] = 0.5 + 0.35 * std::sin(t);
        }
    }

    const std::size_t n = classes * per_class;
    Dataset ds;
    ds.inputs = Tensor({n, dims});
    std::vector<std::size_t> labels(n);
    Rng rng(seed);
    std::size_t row = 0;
    for (std::size_t c = 0; c < classes; ++c) {
        for (std::size_t s = 0; s < per_class; ++s, ++row) {
            labels[row] = c;
            for (std::size_t d = 0; d < dims; ++d) {
                const double v = centers[c][d] + spread * rng.gaussian();
                ds.inputs(row, d) = std::clamp(v, 0.0, 1.0);
            }
        }
    }
    ds.labels = one_hot(labels, classes);
    ds.class_count = classes;
    ds.name = "blobs";
    return ds;
}

Dataset synth_digits(std::size_t per_class, std::uint64_t seed) {
    if (per_class < 1) throw std::invalid_argument("synth_digits needs per_class >= 1");
    constexpr std::size_t kClasses = 10, kSide = 28, kCoarse = 7, kCell = 4;

    // per-class prototype: shared random base mask on a 7x7 grid with a few
    // class-specific cell flips, upsampled 4x; sharing the base keeps the
    // classes confusable enough that accuracy does not trivially saturate
    std::vector<unsigned char> base(kCoarse * kCoarse);
    Rng base_rng(mix_seed(seed, 999));
    for (auto& cell : base) cell = base_rng.uniform() < 0.5 ? 1 : 0;
    std::vector<std::vector<unsigned char>> protos(kClasses, base);
    for (std::size_t c = 0; c < kClasses; ++c) {
        Rng proto_rng(mix_seed(seed, 1000 + c));
        std::vector<std::size_t> cells(kCoarse * kCoarse);
        std::iota(cells.begin(), cells.end(), std::size_t{0});
        proto_rng.shuffle(cells);
        for (std::size_t i = 0; i < 4; ++i) protos[c][cells[i]] ^= 1;
    }

    const std::size_t n = kClasses * per_class;
    Dataset ds;
    ds.inputs = Tensor({n, kSide, kSide, 1});
    std::vector<std::size_t> labels(n);
    std::size_t row = 0;
    for (std::size_t c = 0; c < kClasses; ++c) {
        Rng rng(mix_seed(seed, c));
        for (std::size_t s = 0; s < per_class; ++s, ++row) {
            labels[row] = c;
            const long dy = static_cast<long>(rng.below(9)) - 4;
            const long dx = static_cast<long>(rng.below(9)) - 4;
            const double intensity = 0.5 + 0.5 * rng.uniform();
            double* img = ds.inputs.data() + row * kSide * kSide;
            for (std::size_t y = 0; y < kSide; ++y) {
                for (std::size_t x = 0; x < kSide; ++x) {
                    const long sy = static_cast<long>(y) - dy;
                    const long sx = static_cast<long>(x) - dx;
                    long byte = 0;
                    if (sy >= 0 && sy < static_cast<long>(kSide) && sx >= 0 &&
                        sx < static_cast<long>(kSide)) {
                        const std::size_t cy = static_cast<std::size_t>(sy) / kCell;
                        const std::size_t cx = static_cast<std::size_t>(sx) / kCell;
                        if (protos[c][cy * kCoarse + cx]) {
                            byte = std::lround(255.0 * intensity);
                        }
                    }
                    if (rng.uniform() < 0.22) byte = static_cast<long>(rng.below(256));
                    img[y * kSide + x] = static_cast<double>(byte) / 255.0;
                }
            }
        }
    }
    ds.labels = one_hot(labels, kClasses);
    ds.class_count = kClasses;
    ds.name = "digits";
    return ds;
}

// ---------------------------------------------------------------- subsetting

Dataset gather(const Dataset& ds, const std::vector<std::size_t>& indices) {
    const std::size_t stride = ds.feature_size();
    std::vector<std::size_t> shape = ds.inputs.shape();
    shape[0] = indices.size();

    Dataset out;
    out.inputs = Tensor(shape);
    out.labels = Tensor({indices.size(), ds.class_count});
    out.name = ds.name;
    out.class_count = ds.class_count;
    for (std::size_t i = 0; i < indices.size(); ++i) {
        const std::size_t src = indices[i];
        if (src >= ds.size()) {
            throw std::invalid_argument("gather index " + std::to_string(src) +
                                        " out of range for " + std::to_string(ds.size()) +
                                        " samples");
        }
        std::memcpy(out.inputs.data() + i * stride, ds.inputs.data() + src * stride,
                    stride * sizeof(double));
        std::memcpy(out.labels.data() + i * ds.class_count,
                    ds.labels.data() + src * ds.class_count, ds.class_count * sizeof(double));
    }
    return out;
}

Dataset stratified_head(const Dataset& ds, std::size_t limit) {
    if (limit == 0 || limit >= ds.size()) return ds;
    const std::size_t per_class = limit / ds.class_count;
    std::vector<std::size_t> taken(ds.class_count, 0);
    std::vector<std::size_t> keep;
    keep.reserve(limit);
    for (std::size_t i = 0; i < ds.size() && keep.size() < per_class * ds.class_count; ++i) {
        const std::size_t c = ds.label_index(i);
        if (taken[c] < per_class) {
            ++taken[c];
            keep.push_back(i);
        }
    }
    return gather(ds, keep);
}

std::pair<Dataset, Dataset> split(const Dataset& ds, const SplitSpec& spec) {
    if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0)) {
        throw std::invalid_argument("train_fraction must lie in (0, 1), got " +
                                    std::to_string(spec.train_fraction));
    }
    const std::size_t n = ds.size();
    const auto n_train = static_cast<std::size_t>(
        std::llround(spec.train_fraction * static_cast<double>(n)));
    if (n_train == 0 || n_train == n) {
        throw std::invalid_argument("train_fraction " + std::to_string(spec.train_fraction) +
                                    " leaves one side of a " + std::to_string(n) +
                                    "-sample split empty");
    }

    Rng rng(mix_seed(spec.seed, 0x53504C4954ULL));
    std::vector<std::size_t> train_idx, val_idx;
    if (!spec.stratified) {
        std::vector<std::size_t> perm(n);
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        rng.shuffle(perm);
        train_idx.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_train));
        val_idx.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_train), perm.end());
    } else {
        std::vector<std::vector<std::size_t>> by_class(ds.class_count);
        for (std::size_t i = 0; i < n; ++i) by_class[ds.label_index(i)].push_back(i);
        for (auto& cls : by_class) rng.shuffle(cls);

        // floor per class, then hand out the remainder by largest fractional part
        std::vector<std::size_t> take(ds.class_count);
        std::vector<std::pair<double, std::size_t>> residue;
        std::size_t assigned = 0;
        for (std::size_t c = 0; c < ds.class_count; ++c) {
            const double exact = spec.train_fraction * static_cast<double>(by_class[c].size());
            take[c] = static_cast<std::size_t>(exact);
            assigned += take[c];
            residue.push_back({exact - static_cast<double>(take[c]), c});
        }
        std::stable_sort(residue.begin(), residue.end(),
                         [](const auto& a, const auto& b) { return a.first > b.first; });
        for (std::size_t i = 0; assigned < n_train && i < residue.size(); ++i) {
            const std::size_t c = residue[i].second;
            if (take[c] < by_class[c].size()) {
                ++take[c];
                ++assigned;
            }
        }
        for (std::size_t c = 0; c < ds.class_count; ++c) {
            for (std::size_t i = 0; i < by_class[c].size(); ++i) {
                (i < take[c] ? train_idx : val_idx).push_back(by_class[c][i]);
            }
        }
        std::sort(train_idx.begin(), train_idx.end());
        std::sort(val_idx.begin(), val_idx.end());
    }
    return {gather(ds, train_idx), gather(ds, val_idx)};
}

// ---------------------------------------------------------------- batching

std::vector<std::vector<std::size_t>> batch_indices(std::size_t n, std::size_t batch_size,
                                                    std::uint64_t seed, std::uint64_t epoch,
                                                    bool shuffle) {
    if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    if (shuffle) {
        Rng rng(mix_seed(seed, epoch));
        rng.shuffle(perm);
    }
    std::vector<std::vector<std::size_t>> out;
    for (std::size_t start = 0; start < n; start += batch_size) {
        const std::size_t end = std::min(n, start + batch_size);
        out.emplace_back(perm.begin() + static_cast<std::ptrdiff_t>(start),
                         perm.begin() + static_cast<std::ptrdiff_t>(end));
    }
    return out;
}

std::vector<Batch> batches(const Dataset& ds, std::size_t batch_size, std::uint64_t shuffle_seed,
                           std::uint64_t epoch, bool shuffle) {
    std::vector<Batch> out;
    for (const auto& idx : batch_indices(ds.size(), batch_size, shuffle_seed, epoch, shuffle)) {
        Dataset part = gather(ds, idx);
        out.push_back({std::move(part.inputs), std::move(part.labels)});
    }
    return out;
}

}  // namespace adma
