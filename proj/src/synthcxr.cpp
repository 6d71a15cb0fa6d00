#include "ram/synthcxr.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>

#include "ram/errors.hpp"

namespace ram {

namespace fs = std::filesystem;

void SynthConfig::validate() const {
    if (image_side < 16) throw ConfigError("synth: image side must be >= 16");
    if (task != "cardio" && task != "device") {
        throw ConfigError("synth: task must be 'cardio' or 'device'");
    }
    if (noise < 0.0) throw ConfigError("synth: noise must be non-negative");
    if (clutter < 0) throw ConfigError("synth: clutter count must be non-negative");
    if (ctr_threshold <= 0.0 || ctr_threshold >= 1.0) {
        throw ConfigError("synth: ctr_threshold must lie in (0,1)");
    }
    const double room = std::min(ctr_threshold - 0.30, 0.70 - ctr_threshold);
    if (ctr_margin < 0.0 || ctr_margin >= room) {
        throw ConfigError("synth: ctr_margin leaves no sampling room around the "
                          "ratio boundary");
    }
}

// --- geometry ---------------------------------------------------------------

CardioGeometry sample_cardio_geometry(const SynthConfig& cfg, Rng& rng) {
    const double S = cfg.image_side;
    CardioGeometry g;
    g.thorax_cx = S * (0.5 + rng.uniform(-0.03, 0.03));
    g.thorax_cy = S * (0.5 + rng.uniform(-0.03, 0.03));
    // Wide width range so absolute heart size alone does not determine the
    // label; the ratio is what carries it.
    g.thorax_a = S * rng.uniform(0.30, 0.46);
    g.thorax_b = S * rng.uniform(0.40, 0.48);
    double ratio;
    do {
        ratio = rng.uniform(0.30, 0.70);
    } while (std::abs(ratio - cfg.ctr_threshold) <= cfg.ctr_margin);
    g.heart_a = ratio * g.thorax_a;
    g.heart_b = std::min(g.heart_a * rng.uniform(0.90, 1.20), 0.75 * g.thorax_b);
    g.heart_cx = g.thorax_cx + S * rng.uniform(-0.10, 0.10);
    g.heart_cy = g.thorax_cy + S * rng.uniform(0.00, 0.12);
    return g;
}

DeviceGeometry sample_device_geometry(const SynthConfig& cfg, Rng& rng) {
    const double S = cfg.image_side;
    DeviceGeometry g;
    g.thorax_cx = S * (0.5 + rng.uniform(-0.03, 0.03));
    g.thorax_cy = S * (0.5 + rng.uniform(-0.03, 0.03));
    g.thorax_a = S * rng.uniform(0.36, 0.46);
    g.thorax_b = S * rng.uniform(0.40, 0.48);
    const double ratio = rng.uniform(0.38, 0.46);
    g.heart_a = ratio * g.thorax_a;
    g.heart_b = std::min(g.heart_a * rng.uniform(1.00, 1.20), 0.75 * g.thorax_b);
    g.heart_cx = g.thorax_cx + S * rng.uniform(-0.06, 0.06);
    g.heart_cy = g.thorax_cy + S * rng.uniform(0.04, 0.10);
    g.implant_present = rng.uniform01() < 0.5;
    if (g.implant_present) {
        g.implant_w = S * rng.uniform(0.09, 0.15);
        g.implant_h = S * rng.uniform(0.055, 0.095);
        g.implant_cx = S * rng.uniform(kDeviceBandColLo, kDeviceBandColHi);
        g.implant_cy = S * rng.uniform(kDeviceBandRowLo, kDeviceBandRowHi);
        g.implant_intensity = rng.uniform(0.95, 1.00);
    }
    g.clutter.reserve(static_cast<std::size_t>(cfg.clutter));
    for (int k = 0; k < cfg.clutter; ++k) {
        const double theta = rng.uniform(0.0, 2.0 * M_PI);
        const double rad = std::sqrt(rng.uniform01());
        ClutterBlob blob;
        blob.cx = g.thorax_cx + std::cos(theta) * rad * 0.9 * g.thorax_a;
        blob.cy = g.thorax_cy + std::sin(theta) * rad * 0.9 * g.thorax_b;
        blob.sigma = S * rng.uniform(0.02, 0.05);
        blob.amplitude = rng.uniform(0.10, 0.30);
        g.clutter.push_back(blob);
    }
    return g;
}

// --- rendering --------------------------------------------------------------

namespace {

bool inside_ellipse(double x, double y, double cx, double cy, double a, double b) {
    const double dx = (x - cx) / a;
    const double dy = (y - cy) / b;
    return dx * dx + dy * dy <= 1.0;
}

bool inside_rounded_rect(double x, double y, double cx, double cy, double w,
                         double h, double radius) {
    const double qx = std::abs(x - cx) - (0.5 * w - radius);
    const double qy = std::abs(y - cy) - (0.5 * h - radius);
    const double ox = std::max(qx, 0.0);
    const double oy = std::max(qy, 0.0);
    return ox * ox + oy * oy <= radius * radius;
}

double background_shade(double y, double side) {
    return 0.08 + 0.07 * (y / side);
}

// Evaluate the shader on a 2x supersampled canvas and box-average down, so
// shape edges come out antialiased rather than stair-stepped.
TensorPtr render_supersampled(int side,
                              const std::function<double(double, double)>& shade) {
    const int big = 2 * side;
    std::vector<double> canvas(static_cast<std::size_t>(big) * big);
    for (int r = 0; r < big; ++r) {
        const double y = (r + 0.5) / 2.0;
        for (int c = 0; c < big; ++c) {
            const double x = (c + 0.5) / 2.0;
            canvas[static_cast<std::size_t>(r) * big + c] = shade(x, y);
        }
    }
    return downscale_to(make_tensor({1, big, big}, std::move(canvas)), side);
}

void apply_noise_and_clamp(const TensorPtr& image, double noise, Rng& rng) {
    for (auto& v : image->data) {
        if (noise > 0.0) v += noise * rng.normal();
        v = std::clamp(v, 0.0, 1.0);
    }
}

int clamp_meta(double v, int side) {
    return std::clamp(static_cast<int>(std::lround(v)), 0, side - 1);
}

} // namespace

LabeledImage render_cardio(const SynthConfig& cfg, const CardioGeometry& geo,
                           Rng& rng) {
    const double S = cfg.image_side;
    const auto shade = [&](double x, double y) {
        double v = background_shade(y, S);
        if (inside_ellipse(x, y, geo.thorax_cx, geo.thorax_cy, geo.thorax_a,
                           geo.thorax_b)) {
            v = 0.40;
        }
        if (inside_ellipse(x, y, geo.heart_cx, geo.heart_cy, geo.heart_a,
                           geo.heart_b)) {
            v = 0.80;
        }
        return v;
    };
    LabeledImage img;
    img.image = render_supersampled(cfg.image_side, shade);
    apply_noise_and_clamp(img.image, cfg.noise, rng);
    img.label = geo.ratio() > cfg.ctr_threshold ? 1 : 0;
    img.has_meta = true;
    img.meta_x = clamp_meta(geo.heart_cx, cfg.image_side);
    img.meta_y = clamp_meta(geo.heart_cy, cfg.image_side);
    return img;
}

LabeledImage render_device(const SynthConfig& cfg, const DeviceGeometry& geo,
                           Rng& rng) {
    const double S = cfg.image_side;
    const auto shade = [&](double x, double y) {
        double v = background_shade(y, S);
        if (inside_ellipse(x, y, geo.thorax_cx, geo.thorax_cy, geo.thorax_a,
                           geo.thorax_b)) {
            v = 0.40;
        }
        if (inside_ellipse(x, y, geo.heart_cx, geo.heart_cy, geo.heart_a,
                           geo.heart_b)) {
            v = 0.55;
        }
        for (const auto& blob : geo.clutter) {
            const double dx = x - blob.cx;
            const double dy = y - blob.cy;
            const double d2 = (dx * dx + dy * dy) / (2.0 * blob.sigma * blob.sigma);
            v = std::min(kBackgroundCap, v + blob.amplitude * std::exp(-d2));
        }
        if (geo.implant_present) {
            const double radius = 0.3 * std::min(geo.implant_w, geo.implant_h);
            if (inside_rounded_rect(x, y, geo.implant_cx, geo.implant_cy,
                                    geo.implant_w, geo.implant_h, radius)) {
                v = geo.implant_intensity;
            }
        }
        return v;
    };
    LabeledImage img;
    img.image = render_supersampled(cfg.image_side, shade);
    apply_noise_and_clamp(img.image, cfg.noise, rng);
    img.label = geo.implant_present ? 1 : 0;
    if (geo.implant_present) {
        img.has_meta = true;
        img.meta_x = clamp_meta(geo.implant_cx, cfg.image_side);
        img.meta_y = clamp_meta(geo.implant_cy, cfg.image_side);
    }
    return img;
}

LabeledImage gen_cardio(const SynthConfig& cfg, Rng& rng) {
    const auto geo = sample_cardio_geometry(cfg, rng);
    return render_cardio(cfg, geo, rng);
}

LabeledImage gen_device(const SynthConfig& cfg, Rng& rng) {
    const auto geo = sample_device_geometry(cfg, rng);
    return render_device(cfg, geo, rng);
}

LabeledImage gen_image(const SynthConfig& cfg, Rng& rng) {
    cfg.validate();
    return cfg.task == "cardio" ? gen_cardio(cfg, rng) : gen_device(cfg, rng);
}

// --- resampling -------------------------------------------------------------

namespace {

struct AxisWeights {
    // For each output index: first input index plus a weight per overlapped
    // input cell. Weights along one axis sum to the scale factor.
    std::vector<int> first;
    std::vector<std::vector<double>> weights;
};

AxisWeights box_weights(int in_extent, int out_extent) {
    AxisWeights w;
    w.first.resize(static_cast<std::size_t>(out_extent));
    w.weights.resize(static_cast<std::size_t>(out_extent));
    const double scale = static_cast<double>(in_extent) / out_extent;
    for (int o = 0; o < out_extent; ++o) {
        const double lo = o * scale;
        const double hi = (o + 1) * scale;
        const int i0 = static_cast<int>(std::floor(lo));
        const int i1 = std::min(static_cast<int>(std::ceil(hi)), in_extent);
        w.first[static_cast<std::size_t>(o)] = i0;
        auto& row = w.weights[static_cast<std::size_t>(o)];
        for (int i = i0; i < i1; ++i) {
            const double overlap = std::min(hi, i + 1.0) - std::max(lo, static_cast<double>(i));
            if (overlap > 0.0) row.push_back(overlap);
        }
    }
    return w;
}

} // namespace

TensorPtr downscale_to(const TensorPtr& image, int side) {
    if (image->shape.size() != 3 || image->shape[0] != 1) {
        throw DimensionError("downscale_to: expected a [1 x H x W] image, got " +
                             shape_str(image->shape));
    }
    if (side < 1) throw ArgumentError("downscale_to: side must be positive");
    const int h = image->shape[1];
    const int w = image->shape[2];
    if (side > h || side > w) {
        throw ArgumentError("downscale_to: no upscaling (side exceeds input)");
    }
    if (h == side && w == side) {
        return make_tensor({1, side, side}, image->data);
    }

    double in_min = std::numeric_limits<double>::infinity();
    double in_max = -in_min;
    for (const auto v : image->data) {
        in_min = std::min(in_min, v);
        in_max = std::max(in_max, v);
    }

    const auto rows = box_weights(h, side);
    const auto cols = box_weights(w, side);
    std::vector<double> out(static_cast<std::size_t>(side) * side);
    for (int r = 0; r < side; ++r) {
        const auto& rw = rows.weights[static_cast<std::size_t>(r)];
        const int r0 = rows.first[static_cast<std::size_t>(r)];
        for (int c = 0; c < side; ++c) {
            const auto& cw = cols.weights[static_cast<std::size_t>(c)];
            const int c0 = cols.first[static_cast<std::size_t>(c)];
            double acc = 0.0;
            double wsum = 0.0;
            for (std::size_t i = 0; i < rw.size(); ++i) {
                const double* in_row =
                    image->data.data() + static_cast<std::size_t>(r0 + static_cast<int>(i)) * w;
                for (std::size_t j = 0; j < cw.size(); ++j) {
                    const double weight = rw[i] * cw[j];
                    acc += weight * in_row[c0 + static_cast<int>(j)];
                    wsum += weight;
                }
            }
            // Clamping keeps the output inside the input range despite
            // floating-point drift, which also makes constant images exact.
            out[static_cast<std::size_t>(r) * side + c] =
                std::clamp(acc / wsum, in_min, in_max);
        }
    }
    return make_tensor({1, side, side}, std::move(out));
}

// --- PGM and dataset I/O ----------------------------------------------------

void write_pgm(const std::string& path, const TensorPtr& image) {
    if (image->shape.size() != 3 || image->shape[0] != 1) {
        throw DimensionError("write_pgm: expected a [1 x H x W] image, got " +
                             shape_str(image->shape));
    }
    const int h = image->shape[1];
    const int w = image->shape[2];
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("write_pgm: cannot open " + path);
    out << "P5\n" << w << " " << h << "\n255\n";
    std::vector<unsigned char> bytes;
    bytes.reserve(image->data.size());
    for (const auto v : image->data) {
        const long q = std::lround(std::clamp(v, 0.0, 1.0) * 255.0);
        bytes.push_back(static_cast<unsigned char>(std::clamp(q, 0L, 255L)));
    }
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write_pgm: write failed for " + path);
}

namespace {

// Reads one PGM header token, skipping whitespace and '#' comment lines.
std::string pgm_token(std::istream& in, const std::string& path) {
    std::string tok;
    int ch;
    while ((ch = in.get()) != EOF) {
        if (ch == '#') {
            while ((ch = in.get()) != EOF && ch != '\n') {
            }
            continue;
        }
        if (std::isspace(ch)) {
            if (!tok.empty()) return tok;
            continue;
        }
        tok.push_back(static_cast<char>(ch));
    }
    if (tok.empty()) throw FormatError("read_pgm: truncated header in " + path);
    return tok;
}

int pgm_int(std::istream& in, const std::string& path) {
    const auto tok = pgm_token(in, path);
    try {
        std::size_t pos = 0;
        const int v = std::stoi(tok, &pos);
        if (pos != tok.size()) throw std::invalid_argument(tok);
        return v;
    } catch (const std::exception&) {
        throw FormatError("read_pgm: bad header number '" + tok + "' in " + path);
    }
}

} // namespace

TensorPtr read_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("read_pgm: cannot open " + path);
    if (pgm_token(in, path) != "P5") {
        throw FormatError("read_pgm: not a binary graymap (P5): " + path);
    }
    const int w = pgm_int(in, path);
    const int h = pgm_int(in, path);
    const int maxval = pgm_int(in, path);
    if (w < 1 || h < 1) throw FormatError("read_pgm: bad dimensions in " + path);
    if (maxval != 255) {
        throw FormatError("read_pgm: only maxval 255 supported, got " +
                          std::to_string(maxval) + " in " + path);
    }
    // The single whitespace byte after maxval was already consumed by the
    // tokenizer; pixel data starts here.
    std::vector<unsigned char> bytes(static_cast<std::size_t>(w) * h);
    in.read(reinterpret_cast<char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
    if (in.gcount() != static_cast<std::streamsize>(bytes.size())) {
        throw FormatError("read_pgm: truncated pixel data in " + path);
    }
    std::vector<double> data(bytes.size());
    for (std::size_t i = 0; i < bytes.size(); ++i) data[i] = bytes[i] / 255.0;
    return make_tensor({1, h, w}, std::move(data));
}

void dataset_save(const std::string& dir, const std::vector<LabeledImage>& images) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("dataset_save: cannot create " + dir + ": " + ec.message());
    std::ofstream index(fs::path(dir) / "index.csv");
    if (!index) throw IoError("dataset_save: cannot write index in " + dir);
    index << "filename,label,meta_x,meta_y\n";
    char name[32];
    for (std::size_t i = 0; i < images.size(); ++i) {
        std::snprintf(name, sizeof(name), "img_%05zu.pgm", i);
        write_pgm((fs::path(dir) / name).string(), images[i].image);
        index << name << "," << images[i].label << ",";
        if (images[i].has_meta) {
            index << images[i].meta_x << "," << images[i].meta_y;
        } else {
            index << ",";
        }
        index << "\n";
    }
    if (!index) throw IoError("dataset_save: index write failed in " + dir);
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (const char ch : line) {
        if (ch == ',') {
            fields.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    fields.push_back(cur);
    return fields;
}

int parse_int_field(const std::string& s, const char* what, int line_no) {
    try {
        std::size_t pos = 0;
        const int v = std::stoi(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw FormatError("index.csv line " + std::to_string(line_no) + ": bad " +
                          what + " '" + s + "'");
    }
}

} // namespace

std::vector<LabeledImage> dataset_load(const std::string& dir) {
    const auto index_path = fs::path(dir) / "index.csv";
    std::ifstream index(index_path);
    if (!index) throw FormatError("dataset_load: missing index " + index_path.string());
    std::string line;
    if (!std::getline(index, line)) {
        throw FormatError("dataset_load: empty index " + index_path.string());
    }
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "filename,label,meta_x,meta_y") {
        throw FormatError("dataset_load: unexpected index header '" + line + "'");
    }
    std::vector<LabeledImage> images;
    int line_no = 1;
    while (std::getline(index, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = split_csv(line);
        if (fields.size() != 4) {
            throw FormatError("index.csv line " + std::to_string(line_no) +
                              ": expected 4 fields, got " +
                              std::to_string(fields.size()));
        }
        LabeledImage img;
        img.label = parse_int_field(fields[1], "label", line_no);
        if (img.label != 0 && img.label != 1) {
            throw FormatError("index.csv line " + std::to_string(line_no) +
                              ": label must be 0 or 1");
        }
        const bool has_x = !fields[2].empty();
        const bool has_y = !fields[3].empty();
        if (has_x != has_y) {
            throw FormatError("index.csv line " + std::to_string(line_no) +
                              ": meta fields must be both present or both empty");
        }
        if (has_x) {
            img.has_meta = true;
            img.meta_x = parse_int_field(fields[2], "meta_x", line_no);
            img.meta_y = parse_int_field(fields[3], "meta_y", line_no);
        }
        const auto img_path = (fs::path(dir) / fields[0]).string();
        try {
            img.image = read_pgm(img_path);
        } catch (const IoError&) {
            throw ConsistencyError("dataset_load: index lists " + fields[0] +
                                   " but the file cannot be read");
        }
        images.push_back(std::move(img));
    }
    return images;
}

} // namespace ram
