#pragma once

#include <vector>

#include "rascore/common.hpp"
#include "rascore/image.hpp"
#include "rascore/svdh.hpp"

namespace rascore {

/// One synthetic phantom: the image, the per-site grade table it was drawn
/// from, and the exact SvdH total of that table. The total is computed by the
/// real scoring arithmetic, so a phantom dataset has a learnable monotone
/// image-to-score relationship by construction.
struct PhantomSample {
    GrayImage image;
    SvdhScore grades;
    double total = 0.0;
};

/// Grade tables for the two extreme phantoms.
SvdhScore healthy_phantom_grades();
SvdhScore max_phantom_grades();

/// Random grade table; `severity` in [0,1] scales how many sites are
/// affected. Occasionally draws component sums above 5 so the clamp rule is
/// exercised.
SvdhScore sample_phantom_grades(double severity, Rng& rng);

/// Renders a grade table onto a side_px x side_px gray canvas: one fixed
/// template of 2 x 31 joint sites; erosions appear as bright notches and JSN
/// as dark gap blobs, with size and contrast growing with the grade.
GrayImage render_phantom(const SvdhScore& grades, int side_px);

/// Deterministic phantom batch for a fixed seed. count >= 1, side_px >= 32.
std::vector<PhantomSample> generate_synthetic(int count, int side_px, std::uint64_t seed);

}  // namespace rascore
