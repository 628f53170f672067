#include "nnreg/dataset.hpp"

#include <algorithm>
#include <map>

#include "nnreg/errors.hpp"
#include "nnreg/rng.hpp"

namespace nnreg {

namespace {

constexpr std::uint64_t kSplitStreamTrain = 0xB301;
constexpr std::uint64_t kSplitStreamValid = 0xB302;
constexpr std::uint64_t kSplitStreamTest = 0xB303;
constexpr std::uint64_t kSubsampleStream = 0xB310;

// U(0,1) noise field smoothed by a k x k box filter; windows are clipped at
// the borders and normalized by their actual size, so edges stay in range.
void filtered_noise(Rng& rng, std::size_t rows, std::size_t cols, std::size_t k, std::vector<double>& out) {
    const std::size_t h = k / 2;
    std::vector<double> raw(rows * cols);
    for (double& v : raw) v = rng.uniform(0.0, 1.0);
    out.assign(rows * cols, 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
        const std::size_t r0 = r >= h ? r - h : 0;
        const std::size_t r1 = std::min(rows - 1, r + h);
        for (std::size_t c = 0; c < cols; ++c) {
            const std::size_t c0 = c >= h ? c - h : 0;
            const std::size_t c1 = std::min(cols - 1, c + h);
            double acc = 0.0;
            for (std::size_t rr = r0; rr <= r1; ++rr)
                for (std::size_t cc = c0; cc <= c1; ++cc) acc += raw[rr * cols + cc];
            out[r * cols + c] = acc / static_cast<double>((r1 - r0 + 1) * (c1 - c0 + 1));
        }
    }
}

void crop_background(Rng& rng, const LabeledImageSet& pool, std::size_t rows, std::size_t cols,
                     std::vector<double>& out) {
    const std::size_t pick = rng.below(pool.count());
    if (pool.image_rows < rows || pool.image_cols < cols)
        throw ConfigError("background pool images are smaller than the digit images");
    const std::size_t r_off = rng.below(pool.image_rows - rows + 1);
    const std::size_t c_off = rng.below(pool.image_cols - cols + 1);
    out.resize(rows * cols);
    const double* src = pool.images.row(pick);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] = src[(r + r_off) * pool.image_cols + (c + c_off)];
}

LabeledImageSet resample_with_background(const LabeledImageSet& base, std::size_t target, BenchmarkKind kind,
                                         const BenchmarkOptions& opts, std::uint64_t seed, std::uint64_t stream) {
    if (base.count() == 0) throw ConfigError("cannot resample an empty split");
    LabeledImageSet out;
    out.image_rows = base.image_rows;
    out.image_cols = base.image_cols;
    out.images = Matrix2D(target, base.images.cols());
    out.labels.resize(target);
    std::vector<double> background;
    for (std::size_t i = 0; i < target; ++i) {
        Rng rng = derive_rng(seed, stream, i);
        const std::size_t pick = rng.below(base.count());
        if (kind == BenchmarkKind::Noise)
            filtered_noise(rng, base.image_rows, base.image_cols, opts.noise.filter_k, background);
        else
            crop_background(rng, *opts.background_pool, base.image_rows, base.image_cols, background);
        const double* digit = base.images.row(pick);
        double* dst = out.images.row(i);
        for (std::size_t p = 0; p < out.images.cols(); ++p)
            dst[p] = digit[p] > opts.noise.threshold ? digit[p] : background[p];
        out.labels[i] = base.labels[pick];
    }
    return out;
}

} // namespace

BenchmarkKind benchmark_kind_from_name(const std::string& name) {
    if (name == "std") return BenchmarkKind::Std;
    if (name == "noise") return BenchmarkKind::Noise;
    if (name == "img") return BenchmarkKind::Img;
    throw ConfigError("unknown benchmark kind '" + name + "' (expected std, noise, or img)");
}

const char* benchmark_kind_name(BenchmarkKind k) {
    switch (k) {
    case BenchmarkKind::Std: return "std";
    case BenchmarkKind::Noise: return "noise";
    case BenchmarkKind::Img: return "img";
    }
    throw ConfigError("invalid benchmark kind enum value");
}

BenchmarkSplit build_benchmark(BenchmarkKind kind, const LabeledImageSet& train_source,
                               const LabeledImageSet& test_source, std::uint64_t seed, const BenchmarkOptions& opts) {
    if (train_source.count() <= opts.valid_count)
        throw ConfigError("train source has " + std::to_string(train_source.count()) +
                          " samples, not enough to carve a validation set of " + std::to_string(opts.valid_count));
    if (opts.noise.filter_k == 0 || opts.noise.filter_k % 2 == 0)
        throw ConfigError("box filter width must be odd and positive");
    if (kind == BenchmarkKind::Img && (opts.background_pool == nullptr || opts.background_pool->count() == 0))
        throw ConfigError("img benchmark needs a non-empty background pool");

    BenchmarkSplit split;
    split.tag = "all";
    const std::size_t train_count = train_source.count() - opts.valid_count;
    split.train = slice_set(train_source, 0, train_count);
    split.valid = slice_set(train_source, train_count, opts.valid_count);
    split.test = slice_set(test_source, 0, test_source.count());
    if (kind == BenchmarkKind::Std) return split;

    split.train = resample_with_background(split.train, opts.noise_train, kind, opts, seed, kSplitStreamTrain);
    split.valid = resample_with_background(split.valid, opts.noise_valid, kind, opts, seed, kSplitStreamValid);
    split.test = resample_with_background(split.test, opts.noise_test, kind, opts, seed, kSplitStreamTest);
    return split;
}

std::optional<std::size_t> parse_subset_tag(const std::string& tag) {
    if (tag == "all") return std::nullopt;
    std::string digits = tag;
    std::size_t mult = 1;
    if (!digits.empty() && (digits.back() == 'k' || digits.back() == 'K')) {
        mult = 1000;
        digits.pop_back();
    }
    if (digits.empty() || digits.find_first_not_of("0123456789") != std::string::npos)
        throw ConfigError("bad subset tag '" + tag + "' (expected e.g. 1k, 3k, 5000, or all)");
    return std::stoull(digits) * mult;
}

BenchmarkSplit subsample(const BenchmarkSplit& split, const std::string& tag, std::uint64_t seed) {
    const auto target = parse_subset_tag(tag);
    if (!target.has_value()) {
        BenchmarkSplit out = split;
        out.tag = "all";
        return out;
    }
    const std::size_t n = *target;
    if (n == 0) throw ConfigError("subset size must be positive");
    if (n > split.train.count())
        throw ConfigError("subset " + std::to_string(n) + " exceeds train size " + std::to_string(split.train.count()));

    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < split.train.count(); ++i) by_class[split.train.labels[i]].push_back(i);
    const std::size_t class_count = by_class.size();
    const std::size_t base = n / class_count;
    const std::size_t remainder = n % class_count;

    std::vector<std::size_t> chosen;
    chosen.reserve(n);
    std::size_t rank = 0;
    for (auto& [label, rows] : by_class) {
        const std::size_t quota = base + (rank < remainder ? 1 : 0);
        ++rank;
        if (quota > rows.size())
            throw ConfigError("class " + std::to_string(label) + " has " + std::to_string(rows.size()) +
                              " samples, fewer than its quota " + std::to_string(quota));
        Rng rng = derive_rng(seed, kSubsampleStream, static_cast<std::uint64_t>(label));
        rng.shuffle(rows);
        rows.resize(quota);
        std::sort(rows.begin(), rows.end());
        chosen.insert(chosen.end(), rows.begin(), rows.end());
    }

    BenchmarkSplit out;
    out.tag = tag;
    out.valid = split.valid;
    out.test = split.test;
    out.train.image_rows = split.train.image_rows;
    out.train.image_cols = split.train.image_cols;
    out.train.images = take_rows(split.train.images, chosen);
    out.train.labels.resize(chosen.size());
    for (std::size_t i = 0; i < chosen.size(); ++i) out.train.labels[i] = split.train.labels[chosen[i]];
    return out;
}

} // namespace nnreg
