// Benchmark assembly on top of IDX sets: train/valid/test splits, the noisy
// and image-background variants, and class-stratified subsampling.
#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "nnreg/idx.hpp"

namespace nnreg {

enum class BenchmarkKind { Std, Noise, Img };

BenchmarkKind benchmark_kind_from_name(const std::string& name);
const char* benchmark_kind_name(BenchmarkKind k);

struct BenchmarkSplit {
    LabeledImageSet train;
    LabeledImageSet valid;
    LabeledImageSet test;
    std::string tag = "all"; // subset size tag of the train set
};

struct NoiseParams {
    std::size_t filter_k = 5; // box-filter width, odd
    double threshold = 0.1;   // digit pixels above this overwrite the background
};

struct BenchmarkOptions {
    NoiseParams noise;
    // Carved off the end of the source train set before any resampling.
    std::size_t valid_count = 10000;
    // Resampled sizes for the noise and img kinds (std passes splits through).
    std::size_t noise_train = 100000;
    std::size_t noise_valid = 20000;
    std::size_t noise_test = 50000;
    // Background pool for the img kind; any grayscale set works.
    const LabeledImageSet* background_pool = nullptr;
};

// std: source train split into train/valid, test passed through, pixels
// untouched. noise/img: each split resampled with replacement to the
// configured size, every draw composited over a freshly generated background
// (filtered uniform noise, or a random crop from the pool).
BenchmarkSplit build_benchmark(BenchmarkKind kind, const LabeledImageSet& train_source,
                               const LabeledImageSet& test_source, std::uint64_t seed,
                               const BenchmarkOptions& opts = {});

// "1k"/"3k"/"5k"/"50k"/"100k"/"all" or a plain integer; "all" returns nullopt.
std::optional<std::size_t> parse_subset_tag(const std::string& tag);

// Class-stratified subset of the train set (equal per class, remainder to the
// lowest class ids); valid/test pass through untouched.
BenchmarkSplit subsample(const BenchmarkSplit& split, const std::string& tag, std::uint64_t seed);

} // namespace nnreg
