#include "nnreg/synthetic.hpp"

#include <algorithm>
#include <cmath>

#include "nnreg/errors.hpp"
#include "nnreg/rng.hpp"

namespace nnreg {

namespace {

constexpr std::uint64_t kLandmarkStream = 0xE11A;
constexpr std::uint64_t kTwoClassStream = 0xE11B;
constexpr double kPi = 3.14159265358979323846;
constexpr double kSplatSigma = 1.0; // pixels

struct Contour {
    std::vector<double> xs, ys; // unit-square coordinates
};

// Point on the perturbed ellipse at parameter angle phi.
void ellipse_point(const EllipseParams& p, double phi, double& x, double& y) {
    double r = 1.0;
    for (std::size_t m = 0; m < p.c.size(); ++m)
        r += p.c[m] * std::cos(static_cast<double>(m + 1) * phi + p.psi[m]);
    const double u = p.ax * r * std::cos(phi);
    const double v = p.ay * r * std::sin(phi);
    const double cr = std::cos(p.rot), sr = std::sin(p.rot);
    x = p.cx + u * cr - v * sr;
    y = p.cy + u * sr + v * cr;
}

void splat(Matrix2D& images, std::size_t row, std::size_t side, double px, double py, double intensity,
           double sigma) {
    const double radius = 3.0 * sigma;
    const std::ptrdiff_t c0 = std::max<std::ptrdiff_t>(0, static_cast<std::ptrdiff_t>(std::floor(px - radius)));
    const std::ptrdiff_t c1 =
        std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(side) - 1, static_cast<std::ptrdiff_t>(std::ceil(px + radius)));
    const std::ptrdiff_t r0 = std::max<std::ptrdiff_t>(0, static_cast<std::ptrdiff_t>(std::floor(py - radius)));
    const std::ptrdiff_t r1 =
        std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(side) - 1, static_cast<std::ptrdiff_t>(std::ceil(py + radius)));
    double* img = images.row(row);
    const double inv = 1.0 / (2.0 * sigma * sigma);
    for (std::ptrdiff_t r = r0; r <= r1; ++r) {
        for (std::ptrdiff_t c = c0; c <= c1; ++c) {
            const double dx = (static_cast<double>(c) + 0.5) - px;
            const double dy = (static_cast<double>(r) + 0.5) - py;
            img[static_cast<std::size_t>(r) * side + static_cast<std::size_t>(c)] +=
                intensity * std::exp(-(dx * dx + dy * dy) * inv);
        }
    }
}

// Gaussian splats at the vertices, plus the closed polyline sampled every
// half pixel at half intensity, additively, clipped afterwards.
void rasterize(Matrix2D& images, std::size_t row, std::size_t side, const Contour& contour, bool draw_vertices) {
    const double s = static_cast<double>(side);
    const std::size_t n = contour.xs.size();
    if (draw_vertices)
        for (std::size_t i = 0; i < n; ++i) splat(images, row, side, contour.xs[i] * s, contour.ys[i] * s, 1.0, kSplatSigma);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t j = (i + 1) % n;
        const double x0 = contour.xs[i] * s, y0 = contour.ys[i] * s;
        const double x1 = contour.xs[j] * s, y1 = contour.ys[j] * s;
        const double len = std::hypot(x1 - x0, y1 - y0);
        const std::size_t steps = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(len * 2.0)));
        for (std::size_t t = 1; t <= steps; ++t) {
            const double f = static_cast<double>(t) / static_cast<double>(steps + 1);
            // Samples half a pixel apart overlap to roughly 3x the single-splat
            // peak, so this puts the drawn line near half the vertex intensity.
            splat(images, row, side, x0 + f * (x1 - x0), y0 + f * (y1 - y0), 0.17, 0.6);
        }
    }
    double* img = images.row(row);
    for (std::size_t p = 0; p < side * side; ++p) img[p] = std::clamp(img[p], 0.0, 1.0);
}

EllipseParams draw_params(Rng& rng, double amplitude, std::size_t harmonics) {
    EllipseParams p;
    p.cx = rng.uniform(0.42, 0.58);
    p.cy = rng.uniform(0.42, 0.58);
    p.ax = rng.uniform(0.14, 0.30);
    p.ay = rng.uniform(0.14, 0.30);
    p.rot = rng.uniform(0.0, kPi);
    p.c.resize(harmonics);
    p.psi.resize(harmonics);
    for (std::size_t m = 0; m < harmonics; ++m) {
        const double bound = amplitude / static_cast<double>(m + 1);
        p.c[m] = rng.uniform(-bound, bound);
        p.psi[m] = rng.uniform(0.0, 2.0 * kPi);
    }
    return p;
}

} // namespace

SyntheticLandmarkTask gen_synthetic_landmarks(std::size_t count, std::size_t point_count, std::size_t image_side,
                                              std::uint64_t seed, const SyntheticOptions& opts) {
    if (point_count < 4) throw ConfigError("landmark generator needs at least 4 points");
    if (image_side < 16) throw ConfigError("landmark generator needs image side >= 16");
    if (opts.perturb_amplitude < 0.0 || opts.perturb_amplitude > 0.3)
        throw ConfigError("perturbation amplitude outside [0, 0.3] would leave the frame");
    if (opts.background_noise < 0.0 || opts.background_noise >= 1.0)
        throw ConfigError("background noise level must lie in [0, 1)");

    SyntheticLandmarkTask task;
    task.point_count = point_count;
    task.image_side = image_side;
    task.images = Matrix2D(count, image_side * image_side);
    task.targets = Matrix2D(count, 2 * point_count);
    task.params.resize(count);
    task.ref_a = 0;
    task.ref_b = point_count / 2;

    // A full-circle pose makes the regression target ambiguous: turning an
    // ellipse by 2pi/P relabels the equally spaced landmarks while leaving
    // the rendered contour almost unchanged, so nets collapse to the mean
    // shape. Poses stay inside a wedge well below that symmetry angle.
    const double rot_range = kPi / (2.0 * static_cast<double>(point_count));

    Contour contour;
    contour.xs.resize(point_count);
    contour.ys.resize(point_count);
    for (std::size_t i = 0; i < count; ++i) {
        Rng rng = derive_rng(seed, kLandmarkStream, i);
        task.params[i] = draw_params(rng, opts.perturb_amplitude, opts.harmonics);
        task.params[i].rot = rng.uniform(0.0, rot_range);
        for (std::size_t k = 0; k < point_count; ++k) {
            const double phi = 2.0 * kPi * static_cast<double>(k) / static_cast<double>(point_count);
            ellipse_point(task.params[i], phi, contour.xs[k], contour.ys[k]);
            task.targets(i, 2 * k) = 2.0 * contour.xs[k] - 1.0;
            task.targets(i, 2 * k + 1) = 2.0 * contour.ys[k] - 1.0;
        }
        rasterize(task.images, i, image_side, contour, true);
        if (opts.background_noise > 0.0) {
            double* img = task.images.row(i);
            for (std::size_t p = 0; p < image_side * image_side; ++p)
                img[p] = std::min(1.0, img[p] + rng.uniform(0.0, opts.background_noise));
        }
    }
    return task;
}

LabeledImageSet gen_synthetic_two_class(std::size_t count, std::size_t image_side, std::uint64_t seed) {
    if (image_side < 16) throw ConfigError("two-class generator needs image side >= 16");
    LabeledImageSet set;
    set.image_rows = image_side;
    set.image_cols = image_side;
    set.images = Matrix2D(count, image_side * image_side);
    set.labels.resize(count);

    const std::size_t samples_per_contour = 48;
    Contour contour;
    contour.xs.resize(samples_per_contour);
    contour.ys.resize(samples_per_contour);
    for (std::size_t i = 0; i < count; ++i) {
        Rng rng = derive_rng(seed, kTwoClassStream, i);
        const int label = static_cast<int>(i % 2);
        EllipseParams p = draw_params(rng, 0.08, 2);
        if (label == 1) {
            // Five-lobed star: one strong fixed harmonic on top of the ring.
            p.c.push_back(rng.uniform(0.22, 0.30));
            p.psi.push_back(rng.uniform(0.0, 2.0 * kPi));
            // Pad so the pushed harmonic lands at m=5.
            while (p.c.size() < 5) {
                p.c.insert(p.c.end() - 1, 0.0);
                p.psi.insert(p.psi.end() - 1, 0.0);
            }
            p.ax *= 0.85;
            p.ay *= 0.85;
        }
        for (std::size_t k = 0; k < samples_per_contour; ++k) {
            const double phi = 2.0 * kPi * static_cast<double>(k) / static_cast<double>(samples_per_contour);
            ellipse_point(p, phi, contour.xs[k], contour.ys[k]);
            contour.xs[k] = std::clamp(contour.xs[k], 0.02, 0.98);
            contour.ys[k] = std::clamp(contour.ys[k], 0.02, 0.98);
        }
        rasterize(set.images, i, image_side, contour, false);
        set.labels[i] = label;
    }
    return set;
}

} // namespace nnreg
