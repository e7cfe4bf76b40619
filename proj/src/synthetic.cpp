#include "rascore/synthetic.hpp"

#include <algorithm>
#include <cmath>

namespace rascore {

namespace {

constexpr double kBackground = 0.45;

// Site layout: per hand a 4-column x 8-row grid over that half of the canvas;
// sites 0..15 are the erosion areas, 16..30 the JSN joints.
struct Site {
    double cx, cy, cell;
};

Site site_center(Hand hand, int site_index, int side_px) {
    const double half = side_px / 2.0;
    const double cell_w = half / 4.0;
    const double cell_h = side_px / 8.0;
    const int col = site_index % 4;
    const int row = site_index / 4;
    Site s;
    s.cx = (hand == Hand::left ? 0.0 : half) + (col + 0.5) * cell_w;
    s.cy = (row + 0.5) * cell_h;
    s.cell = std::min(cell_w, cell_h);
    return s;
}

// Soft-edged disk: each pixel blends toward `intensity` by its coverage, so
// the deposited mass tracks the continuous disk area instead of the
// rasterized pixel count.
void draw_disk(GrayImage& image, const Site& site, double radius, double intensity) {
    const int r0 = std::max(0, static_cast<int>(std::floor(site.cy - radius - 1)));
    const int r1 = std::min(image.height - 1, static_cast<int>(std::ceil(site.cy + radius + 1)));
    const int c0 = std::max(0, static_cast<int>(std::floor(site.cx - radius - 1)));
    const int c1 = std::min(image.width - 1, static_cast<int>(std::ceil(site.cx + radius + 1)));
    for (int r = r0; r <= r1; ++r) {
        for (int c = c0; c <= c1; ++c) {
            const double dy = (r + 0.5) - site.cy;
            const double dx = (c + 0.5) - site.cx;
            const double dist = std::sqrt(dx * dx + dy * dy);
            const double coverage = std::clamp(radius - dist + 0.5, 0.0, 1.0);
            if (coverage > 0.0) {
                double& pixel = image.at(r, c);
                pixel = (1.0 - coverage) * pixel + coverage * intensity;
            }
        }
    }
}

}  // namespace

SvdhScore healthy_phantom_grades() { return SvdhScore{}; }

SvdhScore max_phantom_grades() {
    SvdhScore grades;
    for (Hand hand : {Hand::left, Hand::right}) {
        for (int a = 0; a < kErosionAreaCount; ++a) {
            grades.erosion_entries.push_back({hand, static_cast<ErosionArea>(a), {3, 2}});
        }
        for (int j = 0; j < kJsnJointCount; ++j) {
            grades.jsn_entries.push_back({hand, static_cast<JsnJoint>(j), kMaxJsnGrade});
        }
    }
    return grades;
}

SvdhScore sample_phantom_grades(double severity, Rng& rng) {
    severity = std::clamp(severity, 0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<int> component(1, 3);
    std::uniform_int_distribution<int> jsn_grade(1, kMaxJsnGrade);

    SvdhScore grades;
    for (Hand hand : {Hand::left, Hand::right}) {
        for (int a = 0; a < kErosionAreaCount; ++a) {
            if (unit(rng) >= severity) continue;
            ErosionEntry entry{hand, static_cast<ErosionArea>(a), {}};
            int n_components = 1 + static_cast<int>(unit(rng) * 2.0);
            if (unit(rng) < 0.1) n_components += 2;  // exceeds the per-area cap sometimes
            for (int i = 0; i < n_components; ++i) entry.components.push_back(component(rng));
            grades.erosion_entries.push_back(std::move(entry));
        }
        for (int j = 0; j < kJsnJointCount; ++j) {
            if (unit(rng) >= severity) continue;
            grades.jsn_entries.push_back({hand, static_cast<JsnJoint>(j), jsn_grade(rng)});
        }
    }
    return grades;
}

GrayImage render_phantom(const SvdhScore& grades, int side_px) {
    if (side_px < 32) throw ValidationError("phantom side must be at least 32 pixels");
    GrayImage image(side_px, side_px, kBackground);

    // Lesion area grows linearly with the grade (radius ~ sqrt(grade)) at
    // full contrast, so the per-pixel bright and dark masses are linear in
    // the erosion and JSN totals.
    for (const ErosionEntry& entry : grades.erosion_entries) {
        const int score = erosion_area_score(entry);
        if (score == 0) continue;
        const Site site = site_center(entry.hand, static_cast<int>(entry.area), side_px);
        const double frac = static_cast<double>(score) / kMaxErosionPerArea;
        draw_disk(image, site, 0.45 * site.cell * std::sqrt(frac), 1.0);
    }
    for (const JsnEntry& entry : grades.jsn_entries) {
        if (entry.grade == 0) continue;
        const Site site =
            site_center(entry.hand, kErosionAreaCount + static_cast<int>(entry.joint), side_px);
        const double frac = static_cast<double>(entry.grade) / kMaxJsnGrade;
        draw_disk(image, site, 0.45 * site.cell * std::sqrt(frac), 0.0);
    }
    return image;
}

std::vector<PhantomSample> generate_synthetic(int count, int side_px, std::uint64_t seed) {
    if (count < 1) throw ValidationError("phantom count must be at least 1");
    if (side_px < 32) throw ValidationError("phantom side must be at least 32 pixels");
    Rng rng = derived_rng(seed, /*stream=*/0x7068616e746f6d);  // "phantom"
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    std::vector<PhantomSample> samples;
    samples.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        PhantomSample sample;
        sample.grades = sample_phantom_grades(unit(rng), rng);
        sample.total = total_score(sample.grades);
        sample.image = render_phantom(sample.grades, side_px);
        samples.push_back(std::move(sample));
    }
    return samples;
}

}  // namespace rascore
