#pragma once

#include <string>
#include <vector>

#include "ram/rng.hpp"
#include "ram/tensor.hpp"

namespace ram {

// Implant placement band for the device task, as fractions of the image side
// (rows grow downward). Mirrors where pacemakers and tubes sit in a frontal
// chest view: upper chest, between the lung apices.
inline constexpr double kDeviceBandRowLo = 0.15;
inline constexpr double kDeviceBandRowHi = 0.50;
inline constexpr double kDeviceBandColLo = 0.30;
inline constexpr double kDeviceBandColHi = 0.70;

// Non-implant content (thorax, heart, clutter) never exceeds this intensity,
// so implant pixels are the only ones that can sit above it.
inline constexpr double kBackgroundCap = 0.88;

struct SynthConfig {
    int image_side = 64;
    std::string task = "cardio"; // cardio | device
    double noise = 0.02;         // additive Gaussian std-dev after rendering
    int clutter = 6;             // soft blob count (device task)
    double ctr_threshold = 0.5;  // cardiothoracic-ratio decision boundary
    double ctr_margin = 0.04;    // dead zone around the boundary (resampled)

    void validate() const;
};

struct LabeledImage {
    TensorPtr image; // [1 x S x S], values in [0,1]
    int label = 0;   // 0 normal, 1 abnormal
    bool has_meta = false;
    int meta_x = 0;  // target-object center column
    int meta_y = 0;  // target-object center row
};

// Geometry in pixel units at the output scale. Exposed so tests can pin a
// ratio (e.g. 0.8) and check the label without relying on sampling.
struct CardioGeometry {
    double thorax_cx, thorax_cy;
    double thorax_a, thorax_b; // semi-axes; thoracic width W_t = 2a
    double heart_cx, heart_cy;
    double heart_a, heart_b;   // cardiac width W_c = 2a
    double ratio() const { return heart_a / thorax_a; }
};

struct ClutterBlob {
    double cx, cy, sigma, amplitude;
};

struct DeviceGeometry {
    double thorax_cx, thorax_cy;
    double thorax_a, thorax_b;
    double heart_cx, heart_cy;
    double heart_a, heart_b;
    bool implant_present = false;
    double implant_cx = 0, implant_cy = 0;
    double implant_w = 0, implant_h = 0; // full extents
    double implant_intensity = 0;
    std::vector<ClutterBlob> clutter;
};

CardioGeometry sample_cardio_geometry(const SynthConfig& cfg, Rng& rng);
DeviceGeometry sample_device_geometry(const SynthConfig& cfg, Rng& rng);

// Render a fixed geometry; `rng` drives only the additive pixel noise.
LabeledImage render_cardio(const SynthConfig& cfg, const CardioGeometry& geo,
                           Rng& rng);
LabeledImage render_device(const SynthConfig& cfg, const DeviceGeometry& geo,
                           Rng& rng);

LabeledImage gen_cardio(const SynthConfig& cfg, Rng& rng);
LabeledImage gen_device(const SynthConfig& cfg, Rng& rng);

// Dispatch on cfg.task.
LabeledImage gen_image(const SynthConfig& cfg, Rng& rng);

// Area-average resampling to side x side; no upscaling. Constant images map
// to the same constant exactly, and outputs never leave the input range.
TensorPtr downscale_to(const TensorPtr& image, int side);

// Binary 8-bit portable graymap (magic P5, maxval 255), values in [0,1].
void write_pgm(const std::string& path, const TensorPtr& image);
TensorPtr read_pgm(const std::string& path);

// Directory layout: index.csv (filename,label,meta_x,meta_y; empty meta
// allowed) plus one PGM per image. Loading reproduces labels exactly and
// pixels within 1/255.
void dataset_save(const std::string& dir, const std::vector<LabeledImage>& images);
std::vector<LabeledImage> dataset_load(const std::string& dir);

} // namespace ram
