#pragma once

#include "ram/errors.hpp"
#include "ram/glimpse.hpp"

namespace ram {

// Architecture dimensions shared by the encoder stack, the glimpse network
// and the recurrent core.
struct ModelConfig {
    int image_side = 64;
    int glimpse_size = 12;       // g
    int glimpse_scale = 2;
    double pad_value = 0.0;
    int enc1_channels = 8;       // C1
    int enc2_channels = 16;      // C2
    int kernel_size = 3;
    int loc_feature_dim = 32;    // d_loc
    int glimpse_feature_dim = 128; // d_b
    int hidden_dim = 128;        // d_h
    int num_classes = 2;
    int n_glimpses = 6;
    double sigma = 0.1;          // locator policy std-dev, normalized units

    bool operator==(const ModelConfig&) const = default;

    GlimpseConfig glimpse_config() const {
        return {glimpse_size, glimpse_scale, pad_value};
    }

    // Two patches, each encoded to C2 x (g/4) x (g/4) and flattened.
    int img_feature_dim() const {
        const int side = glimpse_size / 4;
        return 2 * enc2_channels * side * side;
    }

    void validate() const {
        if (image_side < 4) throw ConfigError("model: image side too small");
        glimpse_config().validate(image_side);
        if (glimpse_size % 4 != 0) {
            throw ConfigError("model: glimpse size must be divisible by 4 "
                              "(two pooling stages)");
        }
        if (kernel_size % 2 == 0 || kernel_size < 1) {
            throw ConfigError("model: kernel size must be odd and positive");
        }
        if (enc1_channels < 1 || enc2_channels < 1) {
            throw ConfigError("model: encoder channel counts must be positive");
        }
        if (loc_feature_dim < 1 || glimpse_feature_dim < 1 || hidden_dim < 1) {
            throw ConfigError("model: feature dimensions must be positive");
        }
        if (num_classes < 2) throw ConfigError("model: need at least two classes");
        if (n_glimpses < 1) throw ConfigError("model: need at least one glimpse");
        if (sigma <= 0.0) throw ConfigError("model: sigma must be positive");
    }
};

} // namespace ram
