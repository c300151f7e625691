#pragma once

#include <cstdint>
#include <utility>

#include "core/field.hpp"

namespace scafm {

// Strided subsampling keeping every sigma-th row/column starting at index 0.
// Metadata (extent, units, normalization) carries over unchanged: the scan
// covers the same area with fewer samples.
ScanField downsample(const ScanField& field, SparsityFactor sigma);

// Per-field min-max map to [0,1]; records (min,max) so denormalize undoes it.
// A constant field maps to all zeros with min == max recorded.
ScanField normalize(const ScanField& field);
ScanField denormalize(const ScanField& field);

// One of the 8 symmetries of the square grid:
//   0 identity        4 flip columns (left-right)
//   1 rotate 90 ccw   5 flip rows (up-down)
//   2 rotate 180      6 transpose
//   3 rotate 270 ccw  7 anti-transpose
ScanField augment(const ScanField& field, int code);
std::pair<ScanField, ScanField> augment_pair(const ScanField& low,
                                             const ScanField& high, int code);

// Co-registered random crops: the high crop has side crop_high, the low crop
// side crop_high/sigma, and low[i,j] == high[sigma*i, sigma*j] exactly.
std::pair<ScanField, ScanField> random_crop_pair(const ScanField& low,
                                                 const ScanField& high,
                                                 int crop_high, uint64_t rng_seed);

// Crop helper shared with the training pipeline (offsets in high-res pixels).
ScanField crop(const ScanField& field, int r0, int c0, int h, int w);

// Nearest-neighbour upsampling aligned with the downsample phase:
// out[i,j] = in[i/sigma, j/sigma].
ScanField upsample_nearest(const ScanField& field, SparsityFactor sigma);

} // namespace scafm
