#pragma once

#include <string>

#include "core/errors.hpp"

namespace scafm {

// Architecture hyperparameters of the upsampler. Defaults follow the
// production recipe; tests and the CI profile shrink them.
struct ModelConfig {
    int sigma = 2;
    int embed_dim = 180;
    int rstb_count = 6;
    int stl_per_rstb = 6;
    int window_size = 8;
    int num_heads = 6;
    int in_channels = 1;
    double mlp_ratio = 2.0;

    void validate() const {
        require(sigma == 2 || sigma == 4 || sigma == 8, ErrorCode::config,
                "sigma must be one of {2,4,8}");
        require(embed_dim >= 1 && num_heads >= 1 && embed_dim % num_heads == 0,
                ErrorCode::config, "embed_dim must be divisible by num_heads");
        require(window_size >= 2, ErrorCode::config, "window_size must be >= 2");
        require(window_size % 2 == 0, ErrorCode::config,
                "window_size must be even (cyclic shift is window_size/2)");
        require(rstb_count >= 1 && stl_per_rstb >= 1, ErrorCode::config,
                "block counts must be >= 1");
        require(in_channels == 1, ErrorCode::config, "only single-channel input is supported");
        require(mlp_ratio > 0.0, ErrorCode::config, "mlp_ratio must be positive");
    }

    int upsample_stages() const {
        return sigma == 2 ? 1 : sigma == 4 ? 2 : 3;
    }
};

} // namespace scafm
