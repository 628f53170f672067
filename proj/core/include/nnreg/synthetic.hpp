// Synthetic image tasks: a structured landmark-regression generator (points
// on randomly deformed ellipses, rasterized to grayscale) and a two-class
// contour-family generator for classification experiments.
#pragma once

#include <cstdint>
#include <vector>

#include "nnreg/idx.hpp"
#include "nnreg/matrix.hpp"

namespace nnreg {

// Generating parameters of one sample, exposed so tests can check the
// pre-rasterization geometry exactly.
struct EllipseParams {
    double cx = 0.0, cy = 0.0;  // center, unit square
    double ax = 0.0, ay = 0.0;  // semi-axes
    double rot = 0.0;           // rotation, radians
    std::vector<double> c;      // radial perturbation amplitudes per harmonic
    std::vector<double> psi;    // radial perturbation phases
};

struct SyntheticLandmarkTask {
    std::size_t point_count = 0;
    std::size_t image_side = 0;
    Matrix2D images;  // one flattened side x side image per row, in [0,1]
    Matrix2D targets; // x0,y0,x1,y1,... point coordinates scaled to [-1,1]
    std::vector<EllipseParams> params;
    // Reference landmarks for the normalized shape error: first point and the
    // diametrically opposite one.
    std::size_t ref_a = 0;
    std::size_t ref_b = 0;
};

struct SyntheticOptions {
    // Max relative radial deformation; harmonic m draws its amplitude from
    // U(-amplitude/m, amplitude/m). Zero gives exact ellipses.
    double perturb_amplitude = 0.15;
    std::size_t harmonics = 2;
    // Per-pixel additive clutter U(0, background_noise), clamped with the
    // strokes. Zero renders clean images.
    double background_noise = 0.35;
};

// `count` samples of P points each: points sit at equal parameter angles on a
// randomly placed, rotated ellipse whose radius is modulated by a smooth
// low-harmonic perturbation. Images render each point as a Gaussian splat
// plus the closed contour at half intensity. Deterministic in the seed.
SyntheticLandmarkTask gen_synthetic_landmarks(std::size_t count, std::size_t point_count, std::size_t image_side,
                                              std::uint64_t seed, const SyntheticOptions& opts = {});

// Two contour families rendered with the same machinery: class 0 near-elliptic
// rings, class 1 five-lobed stars. Labels balanced (class = index parity).
LabeledImageSet gen_synthetic_two_class(std::size_t count, std::size_t image_side, std::uint64_t seed);

} // namespace nnreg
