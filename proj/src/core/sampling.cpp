#include "core/sampling.hpp"

#include <algorithm>
#include <cmath>

#include "core/rng.hpp"

namespace scafm {

ScanField downsample(const ScanField& field, SparsityFactor sigma) {
    field.validate();
    int s = sigma.value();
    require(field.height % s == 0 && field.width % s == 0, ErrorCode::dimension,
            "sparsity factor " + std::to_string(s) + " does not divide " +
                std::to_string(field.height) + "x" + std::to_string(field.width));

    ScanField out = field;
    out.height = field.height / s;
    out.width = field.width / s;
    out.data.resize(static_cast<size_t>(out.height) * out.width);
    for (int r = 0; r < out.height; ++r)
        for (int c = 0; c < out.width; ++c)
            out.at(r, c) = field.at(r * s, c * s);
    return out;
}

ScanField normalize(const ScanField& field) {
    field.validate();
    require(field.norm_state == NormState::raw, ErrorCode::state,
            "normalize requires a raw field (already normalized)");

    auto [mn_it, mx_it] = std::minmax_element(field.data.begin(), field.data.end());
    float mn = *mn_it, mx = *mx_it;

    ScanField out = field;
    out.norm_state = NormState::normalized;
    out.norm_min = mn;
    out.norm_max = mx;
    if (mn == mx) {
        std::fill(out.data.begin(), out.data.end(), 0.0f);
        return out;
    }
    float scale = 1.0f / (mx - mn);
    for (float& v : out.data) v = std::clamp((v - mn) * scale, 0.0f, 1.0f);
    return out;
}

ScanField denormalize(const ScanField& field) {
    field.validate();
    require(field.norm_state == NormState::normalized, ErrorCode::state,
            "denormalize requires a normalized field");

    ScanField out = field;
    out.norm_state = NormState::raw;
    float mn = field.norm_min, mx = field.norm_max;
    for (float& v : out.data) v = mn + v * (mx - mn);
    out.norm_min = 0.0f;
    out.norm_max = 0.0f;
    return out;
}

ScanField augment(const ScanField& field, int code) {
    field.validate();
    require(code >= 0 && code <= 7, ErrorCode::validation,
            "augmentation code must be in 0..7, got " + std::to_string(code));

    int h = field.height, w = field.width;
    bool swaps = (code == 1 || code == 3 || code == 6 || code == 7);
    ScanField out = field;
    out.height = swaps ? w : h;
    out.width = swaps ? h : w;
    if (swaps) std::swap(out.extent_w_um, out.extent_h_um);

    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            int nr = r, nc = c;
            switch (code) {
                case 0: break;
                case 1: nr = w - 1 - c; nc = r; break;        // rot 90 ccw
                case 2: nr = h - 1 - r; nc = w - 1 - c; break; // rot 180
                case 3: nr = c; nc = h - 1 - r; break;        // rot 270 ccw
                case 4: nr = r; nc = w - 1 - c; break;        // flip left-right
                case 5: nr = h - 1 - r; nc = c; break;        // flip up-down
                case 6: nr = c; nc = r; break;                // transpose
                case 7: nr = w - 1 - c; nc = h - 1 - r; break; // anti-transpose
            }
            out.at(nr, nc) = field.at(r, c);
        }
    }
    return out;
}

std::pair<ScanField, ScanField> augment_pair(const ScanField& low,
                                             const ScanField& high, int code) {
    return {augment(low, code), augment(high, code)};
}

ScanField crop(const ScanField& field, int r0, int c0, int h, int w) {
    require(r0 >= 0 && c0 >= 0 && h >= 1 && w >= 1 && r0 + h <= field.height &&
                c0 + w <= field.width,
            ErrorCode::dimension, "crop window exceeds field bounds");
    ScanField out = field;
    out.height = h;
    out.width = w;
    out.extent_h_um = field.pitch_h_um() * h;
    out.extent_w_um = field.pitch_w_um() * w;
    out.data.resize(static_cast<size_t>(h) * w);
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c)
            out.at(r, c) = field.at(r0 + r, c0 + c);
    return out;
}

std::pair<ScanField, ScanField> random_crop_pair(const ScanField& low,
                                                 const ScanField& high,
                                                 int crop_high, uint64_t rng_seed) {
    low.validate();
    high.validate();
    require(high.height % low.height == 0 && high.width % low.width == 0,
            ErrorCode::dimension, "high field is not an integer multiple of low");
    int s = high.height / low.height;
    require(s >= 1 && high.width / low.width == s, ErrorCode::dimension,
            "low/high fields have inconsistent scale factors per axis");
    require(crop_high >= 1 && crop_high % s == 0, ErrorCode::dimension,
            "crop size must be a positive multiple of the scale factor");
    require(crop_high <= high.height && crop_high <= high.width, ErrorCode::dimension,
            "crop larger than field: " + std::to_string(crop_high) + " vs " +
                std::to_string(high.height) + "x" + std::to_string(high.width));

    // Offsets are multiples of s so the low crop is exactly the strided
    // subsample of the high crop.
    Rng rng(rng_seed);
    int max_r = (high.height - crop_high) / s;
    int max_c = (high.width - crop_high) / s;
    int r0 = static_cast<int>(rng.uniform_int(max_r + 1)) * s;
    int c0 = static_cast<int>(rng.uniform_int(max_c + 1)) * s;

    ScanField high_crop = crop(high, r0, c0, crop_high, crop_high);
    ScanField low_crop = crop(low, r0 / s, c0 / s, crop_high / s, crop_high / s);
    return {std::move(low_crop), std::move(high_crop)};
}

ScanField upsample_nearest(const ScanField& field, SparsityFactor sigma) {
    field.validate();
    int s = sigma.value();
    ScanField out = field;
    out.height = field.height * s;
    out.width = field.width * s;
    out.data.resize(static_cast<size_t>(out.height) * out.width);
    for (int r = 0; r < out.height; ++r)
        for (int c = 0; c < out.width; ++c)
            out.at(r, c) = field.at(r / s, c / s);
    return out;
}

} // namespace scafm
