#include "ram/glimpse.hpp"

#include <algorithm>
#include <cmath>

namespace ram {

Location clamp_location(const Location& loc) {
    return {std::clamp(loc.x, -1.0, 1.0), std::clamp(loc.y, -1.0, 1.0)};
}

void GlimpseConfig::validate(int image_side) const {
    if (g < 2) throw ConfigError("glimpse: patch side must be at least 2");
    if (scale < 1) throw ConfigError("glimpse: scale must be at least 1");
    if (g * scale > image_side) {
        throw ConfigError("glimpse: coarse patch side " + std::to_string(g * scale) +
                          " exceeds image side " + std::to_string(image_side));
    }
}

std::pair<double, double> loc_to_pixel(const Location& loc, int side) {
    const double col = (loc.x + 1.0) / 2.0 * (side - 1);
    const double row = (loc.y + 1.0) / 2.0 * (side - 1);
    return {row, col};
}

int round_half_up(double v) {
    return static_cast<int>(std::floor(v + 0.5));
}

namespace {

// g x g crop anchored at center - side/2 in each axis.
std::vector<double> crop(const double* img, int S, int ctr_row, int ctr_col, int side,
                         double pad_value) {
    std::vector<double> out(static_cast<std::size_t>(side) * side);
    const int top = ctr_row - side / 2;
    const int left = ctr_col - side / 2;
    for (int r = 0; r < side; ++r) {
        const int rr = top + r;
        for (int c = 0; c < side; ++c) {
            const int cc = left + c;
            out[r * side + c] = (rr < 0 || rr >= S || cc < 0 || cc >= S)
                                    ? pad_value
                                    : img[rr * S + cc];
        }
    }
    return out;
}

std::vector<double> avg_pool(const std::vector<double>& in, int side, int factor) {
    const int out_side = side / factor;
    std::vector<double> out(static_cast<std::size_t>(out_side) * out_side);
    const double inv = 1.0 / (factor * factor);
    for (int r = 0; r < out_side; ++r) {
        for (int c = 0; c < out_side; ++c) {
            double acc = 0.0;
            for (int i = 0; i < factor; ++i) {
                for (int j = 0; j < factor; ++j) {
                    acc += in[(r * factor + i) * side + c * factor + j];
                }
            }
            out[r * out_side + c] = acc * inv;
        }
    }
    return out;
}

} // namespace

Glimpse extract_glimpse(const TensorPtr& image, const Location& loc,
                        const GlimpseConfig& cfg) {
    if (image->shape.size() != 3 || image->shape[0] != 1) {
        throw DimensionError("extract_glimpse: expected a [1 x S x S] grayscale image, got " +
                             shape_str(image->shape));
    }
    if (image->shape[1] != image->shape[2]) {
        throw DimensionError("extract_glimpse: image must be square, got " +
                             shape_str(image->shape));
    }
    const int S = image->shape[1];
    cfg.validate(S);

    const Location l = clamp_location(loc);
    const auto [row, col] = loc_to_pixel(l, S);
    const int ctr_row = round_half_up(row);
    const int ctr_col = round_half_up(col);
    const double* img = image->data.data();

    auto fine = crop(img, S, ctr_row, ctr_col, cfg.g, cfg.pad_value);
    const int coarse_side = cfg.g * cfg.scale;
    auto coarse_full = crop(img, S, ctr_row, ctr_col, coarse_side, cfg.pad_value);
    auto coarse = avg_pool(coarse_full, coarse_side, cfg.scale);

    Glimpse out;
    out.fine = make_tensor({1, cfg.g, cfg.g}, std::move(fine));
    out.coarse = make_tensor({1, cfg.g, cfg.g}, std::move(coarse));
    out.center = l;
    return out;
}

} // namespace ram
