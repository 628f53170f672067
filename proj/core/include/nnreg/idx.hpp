// IDX image/label container: the standard big-endian MNIST layout, loaded
// into [0,1] doubles and saved back bit-exactly.
#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "nnreg/matrix.hpp"

namespace nnreg {

struct LabeledImageSet {
    Matrix2D images; // one flattened image per row, pixels in [0,1]
    std::vector<int> labels;
    std::size_t image_rows = 0;
    std::size_t image_cols = 0;

    std::size_t count() const { return labels.size(); }
};

// Reads an images file (magic 0x00000803) and a labels file (magic
// 0x00000801); counts must agree. Pixels come out divided by 255.
LabeledImageSet load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path);

// Inverse of load_idx: pixel bytes are round(p*255), so a loaded set saves
// back to the original bytes.
void save_idx(const LabeledImageSet& set, const std::filesystem::path& images_path,
              const std::filesystem::path& labels_path);

// Copy of `count` samples starting at `begin`.
LabeledImageSet slice_set(const LabeledImageSet& set, std::size_t begin, std::size_t count);

} // namespace nnreg
