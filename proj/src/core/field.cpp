#include "core/field.hpp"

#include <cmath>

namespace scafm {

const char* channel_name(Channel c) {
    return c == Channel::morphology ? "morphology" : "current";
}

Channel channel_from_name(const std::string& name) {
    if (name == "morphology") return Channel::morphology;
    if (name == "current") return Channel::current;
    raise(ErrorCode::validation, "unknown channel name: " + name);
}

void ScanField::validate() const {
    require(height >= 1 && width >= 1, ErrorCode::validation,
            "field dimensions must be >= 1");
    require(data.size() == static_cast<size_t>(height) * width, ErrorCode::validation,
            "field data size does not match dimensions");
    require(extent_w_um > 0.0 && extent_h_um > 0.0, ErrorCode::validation,
            "physical extent must be strictly positive");
    for (float v : data) {
        require(std::isfinite(v), ErrorCode::validation,
                "field contains a non-finite value");
    }
    if (norm_state == NormState::normalized) {
        require(norm_min <= norm_max, ErrorCode::validation,
                "normalized field must record min <= max");
        bool degenerate = (norm_min == norm_max);
        for (float v : data) {
            if (degenerate) {
                require(v == 0.0f, ErrorCode::validation,
                        "degenerate normalized field must be all zeros");
            } else {
                require(v >= 0.0f && v <= 1.0f, ErrorCode::validation,
                        "normalized values must lie in [0,1]");
            }
        }
    }
}

ScanField ScanField::make(int h, int w, Channel ch, float fill) {
    ScanField f;
    f.height = h;
    f.width = w;
    f.data.assign(static_cast<size_t>(h) * w, fill);
    f.channel = ch;
    f.units = (ch == Channel::morphology) ? "nm" : "nA";
    return f;
}

void ScanPair::validate() const {
    morphology.validate();
    current.validate();
    require(morphology.channel == Channel::morphology, ErrorCode::validation,
            "pair morphology field has wrong channel tag");
    require(current.channel == Channel::current, ErrorCode::validation,
            "pair current field has wrong channel tag");
    require(morphology.height == current.height && morphology.width == current.width,
            ErrorCode::validation, "pair fields must share dimensions");
    require(morphology.extent_w_um == current.extent_w_um &&
                morphology.extent_h_um == current.extent_h_um,
            ErrorCode::validation, "pair fields must share physical extent");
}

} // namespace scafm
