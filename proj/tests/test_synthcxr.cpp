#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "ram/synthcxr.hpp"

#include "oracles.hpp"
#include "testutil.hpp"

using namespace ram;
namespace fs = std::filesystem;

namespace {

// Fresh scratch directory under the system temp root, wiped on entry.
fs::path scratch_dir(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("ram_synthcxr_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

double pixel(const TensorPtr& img, int row, int col) {
    const int w = img->shape[2];
    return img->data[static_cast<std::size_t>(row) * w + col];
}

// 4-connected components of {pixel > threshold}.
int bright_region_count(const TensorPtr& img, double threshold) {
    const int h = img->shape[1];
    const int w = img->shape[2];
    std::vector<char> seen(static_cast<std::size_t>(h) * w, 0);
    int regions = 0;
    std::vector<std::pair<int, int>> stack;
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            const auto idx = static_cast<std::size_t>(r) * w + c;
            if (seen[idx] || pixel(img, r, c) <= threshold) continue;
            ++regions;
            stack.push_back({r, c});
            seen[idx] = 1;
            while (!stack.empty()) {
                const auto [cr, cc] = stack.back();
                stack.pop_back();
                const int dr[] = {-1, 1, 0, 0};
                const int dc[] = {0, 0, -1, 1};
                for (int k = 0; k < 4; ++k) {
                    const int nr = cr + dr[k];
                    const int nc = cc + dc[k];
                    if (nr < 0 || nr >= h || nc < 0 || nc >= w) continue;
                    const auto nidx = static_cast<std::size_t>(nr) * w + nc;
                    if (seen[nidx] || pixel(img, nr, nc) <= threshold) continue;
                    seen[nidx] = 1;
                    stack.push_back({nr, nc});
                }
            }
        }
    }
    return regions;
}

SynthConfig noiseless_cardio(int side = 64) {
    SynthConfig cfg;
    cfg.image_side = side;
    cfg.task = "cardio";
    cfg.noise = 0.0;
    return cfg;
}

} // namespace

// --- config validation -------------------------------------------------------

TEST_CASE("synth config rejects out-of-range knobs") {
    SynthConfig cfg;
    CHECK_NOTHROW(cfg.validate());

    auto bad = cfg;
    bad.image_side = 15;
    CHECK_THROWS_AS(bad.validate(), ConfigError);

    bad = cfg;
    bad.task = "both";
    CHECK_THROWS_AS(bad.validate(), ConfigError);

    bad = cfg;
    bad.noise = -0.1;
    CHECK_THROWS_AS(bad.validate(), ConfigError);

    bad = cfg;
    bad.clutter = -1;
    CHECK_THROWS_AS(bad.validate(), ConfigError);

    bad = cfg;
    bad.ctr_threshold = 0.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad.ctr_threshold = 1.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);

    // The margin dead zone must leave room inside the sampled ratio range.
    bad = cfg;
    bad.ctr_margin = 0.2;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad.ctr_margin = 0.19;
    CHECK_NOTHROW(bad.validate());

    bad = cfg;
    bad.ctr_threshold = 0.32; // room is only 0.02, default margin 0.04
    CHECK_THROWS_AS(bad.validate(), ConfigError);

    bad = cfg;
    bad.ctr_margin = -0.01;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

// --- cardio task ---------------------------------------------------------------

TEST_CASE("a pinned wide heart is labelled abnormal") {
    const auto cfg = noiseless_cardio();
    CardioGeometry geo;
    geo.thorax_cx = 32.0;
    geo.thorax_cy = 32.0;
    geo.thorax_a = 20.0;
    geo.thorax_b = 28.0;
    geo.heart_a = 16.0; // ratio 0.8
    geo.heart_b = 18.0;
    geo.heart_cx = 33.0;
    geo.heart_cy = 36.0;
    CHECK(geo.ratio() == doctest::Approx(0.8));

    Rng rng(1);
    const auto img = render_cardio(cfg, geo, rng);
    CHECK(img.label == 1);
    CHECK(img.has_meta);
    CHECK(img.meta_x == 33);
    CHECK(img.meta_y == 36);
    REQUIRE(img.image->shape == std::vector<int>{1, 64, 64});

    // Interior anchors: heart core, thorax ring, background corner.
    CHECK(pixel(img.image, 36, 33) == 0.80);
    CHECK(pixel(img.image, 32, 13) == 0.40);
    CHECK(pixel(img.image, 1, 1) < 0.2);
}

TEST_CASE("a pinned narrow heart is labelled normal") {
    const auto cfg = noiseless_cardio();
    CardioGeometry geo;
    geo.thorax_cx = 31.0;
    geo.thorax_cy = 33.0;
    geo.thorax_a = 22.0;
    geo.thorax_b = 29.0;
    geo.heart_a = 6.6; // ratio 0.3
    geo.heart_b = 7.5;
    geo.heart_cx = 30.0;
    geo.heart_cy = 35.0;
    CHECK(geo.ratio() == doctest::Approx(0.3));

    Rng rng(2);
    const auto img = render_cardio(cfg, geo, rng);
    CHECK(img.label == 0);
    CHECK(img.meta_x == 30);
    CHECK(img.meta_y == 35);
}

TEST_CASE("cardio labels are balanced and ratio-determined") {
    SynthConfig cfg;
    Rng rng(300);
    int positive = 0;
    const int n = 10000;
    for (int i = 0; i < n; ++i) {
        const auto geo = sample_cardio_geometry(cfg, rng);
        CHECK(std::abs(geo.ratio() - cfg.ctr_threshold) > cfg.ctr_margin);
        if (geo.ratio() > cfg.ctr_threshold) ++positive;
    }
    CHECK(positive >= 4500);
    CHECK(positive <= 5500);

    // Rendering must agree with the geometry's ratio rule.
    auto render_cfg = noiseless_cardio();
    Rng geo_rng(301);
    for (int i = 0; i < 10; ++i) {
        const auto geo = sample_cardio_geometry(render_cfg, geo_rng);
        Rng noise_rng(1);
        const auto img = render_cardio(render_cfg, geo, noise_rng);
        CHECK(img.label == (geo.ratio() > render_cfg.ctr_threshold ? 1 : 0));
        CHECK(img.has_meta);
        CHECK(img.meta_x == std::lround(geo.heart_cx));
        CHECK(img.meta_y == std::lround(geo.heart_cy));
    }
}

// --- device task ---------------------------------------------------------------

TEST_CASE("a clean positive shows exactly one bright region at the implant") {
    SynthConfig cfg;
    cfg.task = "device";
    cfg.noise = 0.0;
    cfg.clutter = 0;

    Rng rng(302);
    int positives = 0;
    while (positives < 20) {
        auto geo = sample_device_geometry(cfg, rng);
        if (!geo.implant_present) continue;
        ++positives;
        Rng noise_rng(1);
        const auto img = render_device(cfg, geo, noise_rng);
        CHECK(img.label == 1);
        CHECK(img.has_meta);
        CHECK(img.meta_x == std::lround(geo.implant_cx));
        CHECK(img.meta_y == std::lround(geo.implant_cy));
        CHECK(bright_region_count(img.image, 0.9) == 1);

        // Every bright pixel sits inside the implant's bounding box.
        const int side = cfg.image_side;
        for (int r = 0; r < side; ++r) {
            for (int c = 0; c < side; ++c) {
                if (pixel(img.image, r, c) <= 0.9) continue;
                CHECK(std::abs(c - geo.implant_cx) <= 0.5 * geo.implant_w + 1.0);
                CHECK(std::abs(r - geo.implant_cy) <= 0.5 * geo.implant_h + 1.0);
            }
        }
    }
}

TEST_CASE("clean negatives never cross the background intensity cap") {
    SynthConfig cfg;
    cfg.task = "device";
    cfg.noise = 0.0; // default clutter stays on

    Rng rng(303);
    int negatives = 0;
    while (negatives < 20) {
        auto geo = sample_device_geometry(cfg, rng);
        if (geo.implant_present) continue;
        ++negatives;
        Rng noise_rng(1);
        const auto img = render_device(cfg, geo, noise_rng);
        CHECK(img.label == 0);
        CHECK(!img.has_meta);
        double peak = 0.0;
        for (const double v : img.image->data) peak = std::max(peak, v);
        CHECK(peak <= kBackgroundCap + 1e-12);
        CHECK(peak < 0.9);
    }
}

TEST_CASE("implants appear half the time and only inside the band") {
    SynthConfig cfg;
    cfg.task = "device";
    const double S = cfg.image_side;

    Rng rng(304);
    const int n = 10000;
    int present = 0;
    for (int i = 0; i < n; ++i) {
        const auto geo = sample_device_geometry(cfg, rng);
        if (!geo.implant_present) continue;
        ++present;
        CHECK(geo.implant_cx >= kDeviceBandColLo * S);
        CHECK(geo.implant_cx <= kDeviceBandColHi * S);
        CHECK(geo.implant_cy >= kDeviceBandRowLo * S);
        CHECK(geo.implant_cy <= kDeviceBandRowHi * S);
        CHECK(geo.implant_intensity >= 0.95);
        CHECK(geo.implant_intensity <= 1.0);
    }
    const double frac = static_cast<double>(present) / n;
    CHECK(std::abs(frac - 0.5) < 0.015);
}

TEST_CASE("generated images are bit-identical for equal seeds") {
    SynthConfig cfg;
    cfg.task = "device";

    auto gen_batch = [&](std::uint64_t seed) {
        Rng rng(seed);
        std::vector<LabeledImage> out;
        for (int i = 0; i < 10; ++i) out.push_back(gen_image(cfg, rng));
        return out;
    };
    const auto a = gen_batch(7);
    const auto b = gen_batch(7);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].label == b[i].label);
        CHECK(a[i].has_meta == b[i].has_meta);
        CHECK(a[i].meta_x == b[i].meta_x);
        CHECK(a[i].meta_y == b[i].meta_y);
        CHECK(a[i].image->data == b[i].image->data);
    }

    const auto c = gen_batch(8);
    bool any_differs = false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].image->data != c[i].image->data) any_differs = true;
    }
    CHECK(any_differs);
}

TEST_CASE("heavy noise still leaves pixels inside the unit range") {
    SynthConfig cfg;
    cfg.noise = 5.0;
    Rng rng(305);
    for (int i = 0; i < 3; ++i) {
        const auto img = gen_image(cfg, rng);
        for (const double v : img.image->data) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
        }
    }
}

TEST_CASE("gen_image validates its config") {
    SynthConfig cfg;
    cfg.task = "neither";
    Rng rng(1);
    CHECK_THROWS_AS(gen_image(cfg, rng), ConfigError);
}

// --- downscaling ----------------------------------------------------------------

TEST_CASE("downscaling a constant image is exact") {
    auto img = zeros({1, 96, 80});
    for (auto& v : img->data) v = 0.7;
    const auto out = downscale_to(img, 32);
    REQUIRE(out->shape == std::vector<int>{1, 32, 32});
    for (const double v : out->data) CHECK(v == 0.7);
}

TEST_CASE("integer-factor downscaling matches the box-filter oracle") {
    Rng rng(306);
    auto img = zeros({1, 512, 512});
    for (auto& v : img->data) v = rng.uniform01();

    const auto out = downscale_to(img, 256);
    const auto ref = oracles::block_mean_reference(img->data, 512, 512, 2);
    REQUIRE(out->data.size() == ref.size());
    for (std::size_t i = 0; i < ref.size(); ++i) {
        CHECK(std::abs(out->data[i] - ref[i]) < 1e-12);
    }
}

TEST_CASE("same-size downscaling is the identity") {
    Rng rng(307);
    auto img = zeros({1, 256, 256});
    for (auto& v : img->data) v = rng.uniform01();
    const auto out = downscale_to(img, 256);
    CHECK(out->data == img->data);
}

TEST_CASE("downscaling never leaves the input range") {
    Rng rng(308);
    auto img = zeros({1, 50, 37});
    for (auto& v : img->data) v = rng.uniform(0.2, 0.9);
    double lo = 1e9, hi = -1e9;
    for (const double v : img->data) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const auto out = downscale_to(img, 19);
    for (const double v : out->data) {
        CHECK(v >= lo);
        CHECK(v <= hi);
    }
}

TEST_CASE("downscale_to rejects bad inputs") {
    auto img = zeros({1, 32, 32});
    CHECK_THROWS_AS(downscale_to(img, 33), ArgumentError); // no upscaling
    CHECK_THROWS_AS(downscale_to(img, 0), ArgumentError);

    auto rect = zeros({1, 64, 48});
    CHECK_NOTHROW(downscale_to(rect, 48));
    CHECK_THROWS_AS(downscale_to(rect, 49), ArgumentError);

    CHECK_THROWS_AS(downscale_to(zeros({2, 16, 16}), 8), DimensionError);
    CHECK_THROWS_AS(downscale_to(zeros({16, 16}), 8), DimensionError);
}

// --- PGM I/O --------------------------------------------------------------------

TEST_CASE("PGM round trip quantizes to at most one grey level") {
    const auto dir = scratch_dir("pgm_roundtrip");
    Rng rng(309);
    auto img = zeros({1, 17, 24});
    for (auto& v : img->data) v = rng.uniform01();
    img->data[0] = 0.0;
    img->data[1] = 1.0;

    const auto path = (dir / "x.pgm").string();
    write_pgm(path, img);
    const auto back = read_pgm(path);
    REQUIRE(back->shape == img->shape);
    for (std::size_t i = 0; i < img->data.size(); ++i) {
        CHECK(std::abs(back->data[i] - img->data[i]) <= 1.0 / 255.0);
    }
    CHECK(back->data[0] == 0.0);
    CHECK(back->data[1] == 1.0);

    // Out-of-range values clamp at the byte boundary.
    auto wild = zeros({1, 1, 2});
    wild->data = {1.7, -0.5};
    write_pgm(path, wild);
    const auto clamped = read_pgm(path);
    CHECK(clamped->data[0] == 1.0);
    CHECK(clamped->data[1] == 0.0);

    fs::remove_all(dir);
}

TEST_CASE("PGM headers may carry comments") {
    const auto dir = scratch_dir("pgm_comment");
    const auto path = (dir / "c.pgm").string();
    {
        std::ofstream out(path, std::ios::binary);
        out << "P5\n# a comment line\n4 3\n# another\n255\n";
        for (int i = 0; i < 12; ++i) out.put(static_cast<char>(10 * i));
    }
    const auto img = read_pgm(path);
    REQUIRE(img->shape == std::vector<int>{1, 3, 4});
    CHECK(img->data[5] == 50.0 / 255.0);
    fs::remove_all(dir);
}

TEST_CASE("PGM reader rejects malformed files") {
    const auto dir = scratch_dir("pgm_bad");

    CHECK_THROWS_AS(read_pgm((dir / "absent.pgm").string()), IoError);

    const auto write_file = [&](const std::string& name, const std::string& bytes) {
        std::ofstream out(dir / name, std::ios::binary);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        return (dir / name).string();
    };

    CHECK_THROWS_AS(read_pgm(write_file("ascii.pgm", "P2\n2 2\n255\n0 0 0 0\n")),
                    FormatError);
    CHECK_THROWS_AS(
        read_pgm(write_file("depth.pgm", std::string("P5\n2 2\n65535\n") +
                                             std::string(8, '\0'))),
        FormatError);
    CHECK_THROWS_AS(read_pgm(write_file("short.pgm", std::string("P5\n4 4\n255\n") +
                                                         std::string(7, '\0'))),
                    FormatError);
    CHECK_THROWS_AS(read_pgm(write_file("garbled.pgm", "P5\n4x 4\n255\n")),
                    FormatError);
    CHECK_THROWS_AS(read_pgm(write_file("zero.pgm", "P5\n0 4\n255\n")), FormatError);
    CHECK_THROWS_AS(read_pgm(write_file("empty.pgm", "")), FormatError);

    fs::remove_all(dir);
}

TEST_CASE("write_pgm validates shape and destination") {
    CHECK_THROWS_AS(write_pgm("/tmp/irrelevant.pgm", zeros({3, 3})),
                    DimensionError);
    CHECK_THROWS_AS(
        write_pgm("/nonexistent-root-dir/x.pgm", zeros({1, 2, 2})), IoError);
}

// --- dataset I/O -----------------------------------------------------------------

TEST_CASE("an empty dataset is a header-only index") {
    const auto dir = scratch_dir("ds_empty");
    dataset_save(dir.string(), {});

    std::ifstream index(dir / "index.csv");
    REQUIRE(index.good());
    std::string line;
    REQUIRE(std::getline(index, line));
    CHECK(line == "filename,label,meta_x,meta_y");
    CHECK(!std::getline(index, line));

    CHECK(dataset_load(dir.string()).empty());
    fs::remove_all(dir);
}

TEST_CASE("a generated dataset survives the round trip") {
    const auto dir = scratch_dir("ds_roundtrip");

    std::vector<LabeledImage> images;
    SynthConfig cardio;
    cardio.image_side = 32;
    SynthConfig device = cardio;
    device.task = "device";
    Rng rng(310);
    for (int i = 0; i < 50; ++i) images.push_back(gen_image(cardio, rng));
    for (int i = 0; i < 50; ++i) images.push_back(gen_image(device, rng));

    dataset_save(dir.string(), images);
    CHECK(fs::exists(dir / "img_00000.pgm"));
    CHECK(fs::exists(dir / "img_00099.pgm"));

    const auto back = dataset_load(dir.string());
    REQUIRE(back.size() == images.size());
    for (std::size_t i = 0; i < images.size(); ++i) {
        CHECK(back[i].label == images[i].label);
        CHECK(back[i].has_meta == images[i].has_meta);
        if (images[i].has_meta) {
            CHECK(back[i].meta_x == images[i].meta_x);
            CHECK(back[i].meta_y == images[i].meta_y);
        }
        REQUIRE(back[i].image->shape == images[i].image->shape);
        double max_err = 0.0;
        for (std::size_t j = 0; j < images[i].image->data.size(); ++j) {
            max_err = std::max(max_err, std::abs(back[i].image->data[j] -
                                                 images[i].image->data[j]));
        }
        CHECK(max_err <= 1.0 / 255.0);
    }
    fs::remove_all(dir);
}

TEST_CASE("index rows parse into labels and meta") {
    const auto dir = scratch_dir("ds_rows");
    write_pgm((dir / "img_00007.pgm").string(), zeros({1, 4, 4}));
    write_pgm((dir / "plain.pgm").string(), zeros({1, 4, 4}));
    {
        std::ofstream index(dir / "index.csv");
        index << "filename,label,meta_x,meta_y\n";
        index << "img_00007.pgm,1,31,12\n";
        index << "plain.pgm,0,,\n";
    }
    const auto images = dataset_load(dir.string());
    REQUIRE(images.size() == 2);
    CHECK(images[0].label == 1);
    CHECK(images[0].has_meta);
    CHECK(images[0].meta_x == 31);
    CHECK(images[0].meta_y == 12);
    CHECK(images[1].label == 0);
    CHECK(!images[1].has_meta);
    fs::remove_all(dir);
}

TEST_CASE("dataset_load rejects broken directories") {
    const auto missing = scratch_dir("ds_missing_index");
    CHECK_THROWS_AS(dataset_load(missing.string()), FormatError);
    fs::remove_all(missing);

    const auto make_dir = [](const std::string& tag, const std::string& index_body,
                             bool with_pgm) {
        const auto dir = scratch_dir(tag);
        if (with_pgm) write_pgm((dir / "a.pgm").string(), zeros({1, 4, 4}));
        std::ofstream index(dir / "index.csv");
        index << index_body;
        return dir;
    };

    auto dir = make_dir("ds_empty_index", "", false);
    CHECK_THROWS_AS(dataset_load(dir.string()), FormatError);
    fs::remove_all(dir);

    dir = make_dir("ds_bad_header", "file,lbl\n", false);
    CHECK_THROWS_AS(dataset_load(dir.string()), FormatError);
    fs::remove_all(dir);

    dir = make_dir("ds_ghost_pgm", "filename,label,meta_x,meta_y\nghost.pgm,1,2,3\n",
                   false);
    CHECK_THROWS_AS(dataset_load(dir.string()), ConsistencyError);
    fs::remove_all(dir);

    dir = make_dir("ds_bad_label", "filename,label,meta_x,meta_y\na.pgm,2,,\n", true);
    CHECK_THROWS_AS(dataset_load(dir.string()), FormatError);
    fs::remove_all(dir);

    dir = make_dir("ds_label_text", "filename,label,meta_x,meta_y\na.pgm,yes,,\n",
                   true);
    CHECK_THROWS_AS(dataset_load(dir.string()), FormatError);
    fs::remove_all(dir);

    dir = make_dir("ds_half_meta", "filename,label,meta_x,meta_y\na.pgm,1,5,\n",
                   true);
    CHECK_THROWS_AS(dataset_load(dir.string()), FormatError);
    fs::remove_all(dir);

    dir = make_dir("ds_field_count", "filename,label,meta_x,meta_y\na.pgm,1\n", true);
    CHECK_THROWS_AS(dataset_load(dir.string()), FormatError);
    fs::remove_all(dir);
}
