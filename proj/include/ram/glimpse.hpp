#pragma once

#include <utility>

#include "ram/tensor.hpp"

namespace ram {

// Normalized image coordinates. (-1,-1) is the top-left pixel center,
// (1,1) the bottom-right pixel center.
struct Location {
    double x = 0.0;
    double y = 0.0;
};

Location clamp_location(const Location& loc);

struct GlimpseConfig {
    int g = 12;             // base patch side in pixels
    int scale = 2;          // coarse-to-fine side ratio
    double pad_value = 0.0; // fill for out-of-bounds pixels

    void validate(int image_side) const;
};

// Two concentric patches matched in size: the fine crop and the coarse
// context crop already downscaled to g x g.
struct Glimpse {
    TensorPtr fine;   // [1 x g x g]
    TensorPtr coarse; // [1 x g x g]
    Location center;
};

// col = (x+1)/2 * (side-1), row = (y+1)/2 * (side-1).
std::pair<double, double> loc_to_pixel(const Location& loc, int side);

// Round half up; the window anchor convention used everywhere.
int round_half_up(double v);

// Extract the two-scale observation centered at loc. The window anchor is
// round(loc_to_pixel) - side/2 for each patch; the coarse crop of side
// g*scale is reduced to g x g by scale x scale average pooling, each block
// summed in row-major order before one division. Out-of-bounds pixels take
// cfg.pad_value. Extraction is not differentiable: the result tensors are
// constants.
Glimpse extract_glimpse(const TensorPtr& image, const Location& loc,
                        const GlimpseConfig& cfg);

} // namespace ram
