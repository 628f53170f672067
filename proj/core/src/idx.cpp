#include "nnreg/idx.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>

#include "nnreg/errors.hpp"

namespace nnreg {

namespace {

constexpr std::uint32_t kImagesMagic = 0x00000803;
constexpr std::uint32_t kLabelsMagic = 0x00000801;

std::uint32_t read_be_u32(std::ifstream& in, const std::filesystem::path& path) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4))
        throw FormatError(FormatError::Kind::Truncated, path.string() + ": truncated header");
    return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) | std::uint32_t{b[3]};
}

void write_be_u32(std::ofstream& out, std::uint32_t v) {
    const unsigned char b[4] = {static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
                                static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

std::vector<unsigned char> read_payload(std::ifstream& in, std::size_t count, const std::filesystem::path& path) {
    std::vector<unsigned char> bytes(count);
    if (!in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(count)))
        throw FormatError(FormatError::Kind::Truncated,
                          path.string() + ": expected " + std::to_string(count) + " payload bytes");
    return bytes;
}

} // namespace

LabeledImageSet slice_set(const LabeledImageSet& set, std::size_t begin, std::size_t count) {
    if (begin + count > set.count())
        throw FormatError(FormatError::Kind::CountMismatch, "slice past the end of the set");
    LabeledImageSet out;
    out.image_rows = set.image_rows;
    out.image_cols = set.image_cols;
    out.images = Matrix2D(count, set.images.cols());
    out.labels.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        const double* src = set.images.row(begin + i);
        std::copy(src, src + set.images.cols(), out.images.row(i));
        out.labels[i] = set.labels[begin + i];
    }
    return out;
}

LabeledImageSet load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path) {
    std::ifstream img(images_path, std::ios::binary);
    if (!img) throw FormatError(FormatError::Kind::Io, "cannot open " + images_path.string());
    std::ifstream lab(labels_path, std::ios::binary);
    if (!lab) throw FormatError(FormatError::Kind::Io, "cannot open " + labels_path.string());

    const std::uint32_t img_magic = read_be_u32(img, images_path);
    if (img_magic != kImagesMagic)
        throw FormatError(FormatError::Kind::BadMagic, images_path.string() + ": magic " + std::to_string(img_magic) +
                                                           ", expected " + std::to_string(kImagesMagic));
    const std::uint32_t img_count = read_be_u32(img, images_path);
    const std::uint32_t rows = read_be_u32(img, images_path);
    const std::uint32_t cols = read_be_u32(img, images_path);
    if (rows == 0 || cols == 0)
        throw FormatError(FormatError::Kind::CountMismatch, images_path.string() + ": zero image dimensions");

    const std::uint32_t lab_magic = read_be_u32(lab, labels_path);
    if (lab_magic != kLabelsMagic)
        throw FormatError(FormatError::Kind::BadMagic, labels_path.string() + ": magic " + std::to_string(lab_magic) +
                                                           ", expected " + std::to_string(kLabelsMagic));
    const std::uint32_t lab_count = read_be_u32(lab, labels_path);
    if (img_count != lab_count)
        throw FormatError(FormatError::Kind::CountMismatch, std::to_string(img_count) + " images vs " +
                                                                std::to_string(lab_count) + " labels");

    const std::size_t pixels = static_cast<std::size_t>(rows) * cols;
    const auto img_bytes = read_payload(img, static_cast<std::size_t>(img_count) * pixels, images_path);
    const auto lab_bytes = read_payload(lab, lab_count, labels_path);

    LabeledImageSet set;
    set.image_rows = rows;
    set.image_cols = cols;
    set.images = Matrix2D(img_count, pixels);
    double* out = set.images.data();
    for (std::size_t i = 0; i < img_bytes.size(); ++i) out[i] = static_cast<double>(img_bytes[i]) / 255.0;
    set.labels.assign(lab_bytes.begin(), lab_bytes.end());
    return set;
}

void save_idx(const LabeledImageSet& set, const std::filesystem::path& images_path,
              const std::filesystem::path& labels_path) {
    if (set.images.rows() != set.labels.size())
        throw FormatError(FormatError::Kind::CountMismatch, std::to_string(set.images.rows()) + " images vs " +
                                                                std::to_string(set.labels.size()) + " labels");
    if (set.image_rows * set.image_cols != set.images.cols())
        throw FormatError(FormatError::Kind::CountMismatch, "image dims do not multiply to the pixel count");

    std::ofstream img(images_path, std::ios::binary | std::ios::trunc);
    if (!img) throw FormatError(FormatError::Kind::Io, "cannot open " + images_path.string() + " for writing");
    write_be_u32(img, kImagesMagic);
    write_be_u32(img, static_cast<std::uint32_t>(set.images.rows()));
    write_be_u32(img, static_cast<std::uint32_t>(set.image_rows));
    write_be_u32(img, static_cast<std::uint32_t>(set.image_cols));
    std::vector<unsigned char> bytes(set.images.size());
    const double* p = set.images.data();
    for (std::size_t i = 0; i < bytes.size(); ++i) {
        if (!(p[i] >= 0.0 && p[i] <= 1.0))
            throw FormatError(FormatError::Kind::CountMismatch, "pixel outside [0,1] cannot serialize");
        bytes[i] = static_cast<unsigned char>(std::lround(p[i] * 255.0));
    }
    img.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!img) throw FormatError(FormatError::Kind::Io, "write failed on " + images_path.string());

    std::ofstream lab(labels_path, std::ios::binary | std::ios::trunc);
    if (!lab) throw FormatError(FormatError::Kind::Io, "cannot open " + labels_path.string() + " for writing");
    write_be_u32(lab, kLabelsMagic);
    write_be_u32(lab, static_cast<std::uint32_t>(set.labels.size()));
    std::vector<unsigned char> lbytes(set.labels.size());
    for (std::size_t i = 0; i < lbytes.size(); ++i) {
        if (set.labels[i] < 0 || set.labels[i] > 255)
            throw FormatError(FormatError::Kind::CountMismatch, "label outside byte range cannot serialize");
        lbytes[i] = static_cast<unsigned char>(set.labels[i]);
    }
    lab.write(reinterpret_cast<const char*>(lbytes.data()), static_cast<std::streamsize>(lbytes.size()));
    if (!lab) throw FormatError(FormatError::Kind::Io, "write failed on " + labels_path.string());
}

} // namespace nnreg
