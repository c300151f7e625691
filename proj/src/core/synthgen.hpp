#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "core/field.hpp"

namespace scafm {

// Knobs for the synthetic MoS2-like sample generator. Numeric defaults are
// generator settings chosen to look like typical monolayer growth; they are
// not calibrated measurements.
struct SampleSpec {
    int grid_size = 512;
    double extent_um = 2.0;
    double nucleation_density = 8.0;  // islands per um^2
    double coverage_target = 0.7;     // (0, 1]
    double defect_density = 2.0;      // point defects per um^2
    int crack_count = 2;
    double monolayer_height_nm = 0.65;
    double on_current_nA = 1.2;
    double off_current_nA = 0.05;
    double noise_sigma = 0.02;        // std dev relative to field range
    int tip_radius_px = 2;
    uint64_t rng_seed = 0;

    void validate() const;
    static SampleSpec from_json_text(const std::string& text);
    std::string to_json_text() const;
};

// Per-pixel ground truth labels for one generated sample.
struct GroundTruthMask {
    int height = 0;
    int width = 0;
    std::vector<uint8_t> film;        // material present
    std::vector<uint8_t> boundaries;  // island/grain boundary ridge pixels
    std::vector<uint8_t> defects;     // planted point-defect centres
    std::vector<uint8_t> cracks;      // carved crack pixels

    size_t idx(int r, int c) const { return static_cast<size_t>(r) * width + c; }
    void validate() const;
};

// Deterministic sample synthesis: Poisson-disk nucleation, uniform radial
// island growth to the coverage target, Voronoi-ridge grain boundaries,
// carved polyline cracks, point defects, tip broadening and additive noise.
std::pair<ScanPair, GroundTruthMask> generate_sample(const SampleSpec& spec);

// Grey-scale dilation by a disk: the first-order geometric model of the
// finite tip apex widening surface features. Radius 0 is the identity.
ScanField tip_convolve(const ScanField& field, int tip_radius_px);

// Adds zero-mean Gaussian noise with std = sigma_rel * (max - min).
ScanField add_noise(const ScanField& field, double sigma_rel, uint64_t rng_seed);

// "SCMK" mask container: magic | version u32 | H u32 | W u32 | 4 planes of
// H*W bytes (film, boundaries, defects, cracks).
void write_mask(const GroundTruthMask& mask, const std::string& path);
GroundTruthMask read_mask(const std::string& path);

} // namespace scafm
