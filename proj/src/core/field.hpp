#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "core/errors.hpp"

namespace scafm {

enum class Channel : uint8_t { morphology = 0, current = 1 };
enum class NormState : uint8_t { raw = 0, normalized = 1 };

const char* channel_name(Channel c);
Channel channel_from_name(const std::string& name);

// A single-channel 2D raster scan with physical metadata. Values are float32,
// row-major. When norm_state == normalized, data lies in [0,1] and
// (norm_min, norm_max) record the raw range so the mapping can be undone.
struct ScanField {
    int height = 0;
    int width = 0;
    std::vector<float> data;
    Channel channel = Channel::morphology;
    double extent_w_um = 1.0;
    double extent_h_um = 1.0;
    std::string units = "nm";
    NormState norm_state = NormState::raw;
    float norm_min = 0.0f;
    float norm_max = 0.0f;
    std::string sample_id;

    float& at(int r, int c) { return data[static_cast<size_t>(r) * width + c]; }
    float at(int r, int c) const { return data[static_cast<size_t>(r) * width + c]; }
    size_t size() const { return data.size(); }

    double pitch_w_um() const { return extent_w_um / width; }
    double pitch_h_um() const { return extent_h_um / height; }

    void validate() const; // throws Error on any invariant violation

    static ScanField make(int h, int w, Channel ch, float fill = 0.0f);
};

// Co-registered morphology + current maps of one sample area.
struct ScanPair {
    ScanField morphology;
    ScanField current;
    std::string sample_id;

    void validate() const;
};

// Upsampling factor; only 2, 4 and 8 are meaningful for this workflow.
class SparsityFactor {
public:
    explicit SparsityFactor(int s) : sigma_(s) {
        require(s == 2 || s == 4 || s == 8, ErrorCode::validation,
                "sparsity factor must be one of {2,4,8}, got " + std::to_string(s));
    }
    int value() const { return sigma_; }

private:
    int sigma_;
};

} // namespace scafm
