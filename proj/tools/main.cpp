#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ram/checkpoint.hpp"
#include "ram/config.hpp"
#include "ram/core_ram.hpp"
#include "ram/errors.hpp"
#include "ram/glimpse.hpp"
#include "ram/synthcxr.hpp"
#include "ram/trainer.hpp"

namespace fs = std::filesystem;
using namespace ram;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitCheckpoint = 4;

struct CommonArgs {
    std::string config_path;
    std::uint64_t seed = 0;
    bool seed_given = false;
    int epochs = -1;
    int threads = 1;
};

// Config resolution order: file (if given) < --seed/--epochs overrides.
RunConfig resolve_config(const CommonArgs& args) {
    RunConfig cfg = args.config_path.empty() ? RunConfig{}
                                             : load_config_file(args.config_path);
    if (args.seed_given) cfg.seed = args.seed;
    if (args.epochs >= 0) cfg.epochs = args.epochs;
    cfg.validate();
    return cfg;
}

void add_common(CLI::App* cmd, CommonArgs& args, bool with_epochs) {
    cmd->add_option("--config", args.config_path, "Run configuration file");
    cmd->add_option("--seed", args.seed, "Master seed (overrides config)")
        ->each([&args](const std::string&) { args.seed_given = true; });
    if (with_epochs) {
        cmd->add_option("--epochs", args.epochs,
                        "Epoch count (overrides config)");
    }
}

void require_architecture_match(const ModelConfig& from_ckpt,
                                const ModelConfig& from_cfg) {
    if (!(from_ckpt == from_cfg)) {
        throw ConfigError(
            "checkpoint architecture differs from the given config; drop the "
            "conflicting keys or use a matching config file");
    }
}

int cmd_gen_data(const RunConfig& cfg, const std::string& out_dir, int count) {
    if (count < 0) throw ArgumentError("gen-data: count must be non-negative");
    const auto synth = cfg.synth_config();
    const Rng rng(cfg.seed);
    std::vector<LabeledImage> images;
    images.reserve(static_cast<std::size_t>(count));
    long long positives = 0;
    for (int i = 0; i < count; ++i) {
        auto child = rng.child(static_cast<std::uint64_t>(i));
        images.push_back(gen_image(synth, child));
        positives += images.back().label;
    }
    dataset_save(out_dir, images);
    std::printf("wrote %d %s images to %s (positives %.1f%%)\n", count,
                synth.task.c_str(), out_dir.c_str(),
                count > 0 ? 100.0 * positives / count : 0.0);
    return kExitOk;
}

std::vector<TensorPtr> sample_patches(const RunConfig& cfg,
                                      const std::vector<LabeledImage>& data,
                                      Rng& rng) {
    const auto gcfg = cfg.model_config().glimpse_config();
    std::vector<TensorPtr> patches;
    patches.reserve(static_cast<std::size_t>(cfg.pretrain_patches) + 1);
    while (patches.size() < static_cast<std::size_t>(cfg.pretrain_patches)) {
        const auto& img = data[static_cast<std::size_t>(
            rng.uniform_int(0, static_cast<int>(data.size()) - 1))];
        const Location loc{rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
        const auto glimpse = extract_glimpse(img.image, loc, gcfg);
        patches.push_back(glimpse.fine);
        patches.push_back(glimpse.coarse);
    }
    patches.resize(static_cast<std::size_t>(cfg.pretrain_patches));
    return patches;
}

int cmd_pretrain(const RunConfig& cfg, const std::string& data_dir,
                 const std::string& out_ckpt) {
    const auto data = dataset_load(data_dir);
    if (data.empty()) throw ArgumentError("pretrain: dataset is empty");
    const Rng rng(cfg.seed);
    auto init_rng = rng.child(0);
    RamModel model = RamModel::init(cfg.model_config(), init_rng);

    auto patch_rng = rng.child(1);
    auto patches = sample_patches(cfg, data, patch_rng);
    const auto holdout_n = std::max<std::size_t>(1, patches.size() / 10);
    const std::vector<TensorPtr> holdout(patches.end() - static_cast<long>(holdout_n),
                                         patches.end());
    patches.resize(patches.size() - holdout_n);

    const double mse0 = stack_reconstruction_mse(model.stack, holdout);
    const double cae1_mse0 = cae1_reconstruction_mse(model.stack, holdout);
    auto train_rng = rng.child(2);
    cae_pretrain(model.stack, patches, cfg.pretrain_epochs,
                 {cfg.pretrain_lr, cfg.momentum, cfg.pretrain_batch}, train_rng);
    const double mse1 = stack_reconstruction_mse(model.stack, holdout);
    const double cae1_mse1 = cae1_reconstruction_mse(model.stack, holdout);

    save_checkpoint(out_ckpt, model, cfg, {cfg.seed, 0});
    std::printf("pretrain: held-out stack MSE %.6f -> %.6f (cae1 %.6f -> %.6f), "
                "%d epochs/layer, %zu train patches\n",
                mse0, mse1, cae1_mse0, cae1_mse1, cfg.pretrain_epochs,
                patches.size());
    return kExitOk;
}

int cmd_train(const RunConfig& cli_cfg, const std::string& data_dir,
              const std::string& in_ckpt, const std::string& out_dir,
              int threads) {
    RunConfig cfg = cli_cfg;
    RamModel model;
    if (in_ckpt.empty()) {
        auto init_rng = Rng(cfg.seed).child(0);
        model = RamModel::init(cfg.model_config(), init_rng);
    } else {
        auto loaded = load_checkpoint(in_ckpt);
        require_architecture_match(loaded.model.cfg, cfg.model_config());
        model = std::move(loaded.model);
    }

    const auto data = dataset_load(data_dir);
    if (data.empty()) throw ArgumentError("train: dataset is empty");
    const auto val_n =
        static_cast<std::size_t>(cfg.val_fraction * static_cast<double>(data.size()));
    if (data.size() - val_n < 1) {
        throw ConfigError("train: validation split leaves no training data");
    }
    const std::vector<LabeledImage> train_set(data.begin(),
                                              data.end() - static_cast<long>(val_n));
    std::vector<LabeledImage> val_set(data.end() - static_cast<long>(val_n),
                                      data.end());
    if (val_set.empty()) {
        std::fprintf(stderr,
                     "note: val_fraction yields an empty split; validating on "
                     "the training set\n");
        val_set = train_set;
    }

    const auto result = run_training(model, train_set, val_set, cfg, out_dir, threads);
    if (!result.chunks.empty()) {
        const auto& last = result.chunks.back();
        std::printf("train: %d epochs done; final chunk val %.4f greedy %.4f\n",
                    last.end_epoch, last.val_accuracy, last.greedy_accuracy);
    } else {
        std::printf("train: 0 epochs requested; checkpoint passed through\n");
    }
    return kExitOk;
}

int cmd_eval(const std::string& ckpt_path, const std::string& data_dir,
             bool ablation, int sampled_repeats, const CommonArgs& args) {
    auto loaded = load_checkpoint(ckpt_path);
    RunConfig cfg = loaded.config;
    if (args.seed_given) cfg.seed = args.seed;
    const auto data = dataset_load(data_dir);
    if (data.empty()) throw ArgumentError("eval: dataset is empty");
    const Rng rng(cfg.seed);

    const auto greedy = validate(loaded.model, data, RolloutMode::Greedy, 1,
                                 cfg.heatmap_cell, rng.child(0xE0), args.threads);
    std::printf("greedy accuracy %.4f (n=%zu)\n", greedy.accuracy, data.size());
    if (!std::isnan(greedy.mean_final_dist)) {
        std::printf("mean final-glimpse distance to target %.2f px over %lld "
                    "positives\n",
                    greedy.mean_final_dist, greedy.dist_count);
    }
    if (sampled_repeats > 0) {
        const auto sampled =
            validate(loaded.model, data, RolloutMode::Sample, sampled_repeats,
                     cfg.heatmap_cell, rng.child(0xE1), args.threads);
        std::printf("sampled accuracy %.4f (%d repeats)\n", sampled.accuracy,
                    sampled_repeats);
    }
    if (ablation) {
        const int repeats = std::max(10, sampled_repeats);
        const double abl = random_policy_ablation(loaded.model, data, repeats,
                                                  rng.child(0xEA), args.threads);
        std::printf("ablation accuracy %.4f (%d repeats)\n", abl, repeats);
        std::printf("policy gap %+.2f points\n", 100.0 * (greedy.accuracy - abl));
    }
    return kExitOk;
}

// --- trace rendering ---------------------------------------------------------

void put_pixel(const TensorPtr& img, int r, int c, double v) {
    const int side = img->shape[1];
    if (r < 0 || c < 0 || r >= side || c >= img->shape[2]) return;
    img->data[static_cast<std::size_t>(r) * img->shape[2] + c] = v;
}

void draw_line(const TensorPtr& img, double r0, double c0, double r1, double c1,
               double v) {
    const int steps =
        std::max(2, static_cast<int>(2.0 * std::max(std::abs(r1 - r0),
                                                    std::abs(c1 - c0))));
    for (int i = 0; i <= steps; ++i) {
        const double t = static_cast<double>(i) / steps;
        put_pixel(img, round_half_up(r0 + t * (r1 - r0)),
                  round_half_up(c0 + t * (c1 - c0)), v);
    }
}

void draw_circle(const TensorPtr& img, double r, double c, double radius,
                 double v) {
    for (int i = 0; i < 64; ++i) {
        const double a = 2.0 * M_PI * i / 64.0;
        put_pixel(img, round_half_up(r + radius * std::sin(a)),
                  round_half_up(c + radius * std::cos(a)), v);
    }
}

void draw_triangle(const TensorPtr& img, double r, double c, double radius,
                   double v) {
    double pr[3], pc[3];
    for (int i = 0; i < 3; ++i) {
        const double a = -M_PI / 2.0 + 2.0 * M_PI * i / 3.0;
        pr[i] = r + radius * std::sin(a);
        pc[i] = c + radius * std::cos(a);
    }
    for (int i = 0; i < 3; ++i) {
        draw_line(img, pr[i], pc[i], pr[(i + 1) % 3], pc[(i + 1) % 3], v);
    }
}

void render_trace(const TensorPtr& image, const EpisodeTrace& trace,
                  const std::string& path) {
    auto out = make_tensor(image->shape, image->data);
    const int side = image->shape[1];
    std::pair<double, double> prev{0, 0};
    for (std::size_t t = 0; t < trace.locations.size(); ++t) {
        const auto [row, col] = loc_to_pixel(trace.locations[t], side);
        if (t > 0) draw_line(out, prev.first, prev.second, row, col, 0.6);
        prev = {row, col};
    }
    for (std::size_t t = 1; t + 1 < trace.locations.size(); ++t) {
        const auto [row, col] = loc_to_pixel(trace.locations[t], side);
        put_pixel(out, round_half_up(row), round_half_up(col), 1.0);
    }
    const auto [r0, c0] = loc_to_pixel(trace.locations.front(), side);
    draw_circle(out, r0, c0, 3.0, 1.0);
    const auto [rn, cn] = loc_to_pixel(trace.locations.back(), side);
    draw_triangle(out, rn, cn, 3.0, 1.0);
    write_pgm(path, out);
}

int cmd_trace(const std::string& ckpt_path, const std::string& image_path,
              const std::string& out_path, const std::string& render_path,
              bool sampled, const CommonArgs& args) {
    auto loaded = load_checkpoint(ckpt_path);
    if (args.seed_given) loaded.config.seed = args.seed;
    auto image = read_pgm(image_path);
    const int side = loaded.model.cfg.image_side;
    if (image->shape[1] != side || image->shape[2] != side) {
        if (image->shape[1] < side || image->shape[2] < side) {
            throw ArgumentError("trace: image smaller than the model's input");
        }
        image = downscale_to(image, side);
    }

    NoGradGuard guard;
    auto rng = Rng(loaded.config.seed).child(0x7);
    const auto trace =
        rollout(loaded.model, image, loaded.model.cfg.n_glimpses,
                sampled ? RolloutMode::Sample : RolloutMode::Greedy, rng);

    std::ofstream out(out_path);
    if (!out) throw IoError("trace: cannot write " + out_path);
    out << "step x y row col o_x o_y log_density\n";
    char line[256];
    for (std::size_t t = 0; t < trace.locations.size(); ++t) {
        const auto& l = trace.locations[t];
        const auto [row, col] = loc_to_pixel(l, side);
        if (t == 0) {
            std::snprintf(line, sizeof(line), "%zu %.6f %.6f %.2f %.2f - - -\n",
                          t + 1, l.x, l.y, row, col);
        } else {
            std::snprintf(line, sizeof(line),
                          "%zu %.6f %.6f %.2f %.2f %.6f %.6f %.6f\n", t + 1, l.x,
                          l.y, row, col, trace.means[t - 1][0],
                          trace.means[t - 1][1], trace.log_densities[t - 1]);
        }
        out << line;
    }
    out << "predicted " << trace.predicted << "\n";
    if (!out) throw IoError("trace: write failed for " + out_path);
    if (!render_path.empty()) render_trace(image, trace, render_path);
    std::printf("trace: %zu steps, predicted class %d -> %s\n",
                trace.locations.size(), trace.predicted, out_path.c_str());
    return kExitOk;
}

int dispatch(int argc, char** argv) {
    CLI::App app{"Recurrent visual attention model for synthetic chest images"};
    app.require_subcommand(1);

    CommonArgs args;
    std::string data_dir, out_path, ckpt_path, image_path, render_path;
    int count = 1000;
    int sampled_repeats = 0;
    bool ablation = false;
    bool sampled = false;

    auto* gen = app.add_subcommand("gen-data", "Generate a synthetic dataset");
    add_common(gen, args, false);
    gen->add_option("--out", out_path, "Output dataset directory")->required();
    gen->add_option("--count", count, "Number of images");

    auto* pre = app.add_subcommand("pretrain", "Pretrain the encoder stack");
    add_common(pre, args, false);
    pre->add_option("--data", data_dir, "Dataset directory")->required();
    pre->add_option("--out", out_path, "Output checkpoint path")->required();

    auto* train = app.add_subcommand("train", "Train the attention model");
    add_common(train, args, true);
    train->add_option("--data", data_dir, "Dataset directory")->required();
    train->add_option("--ckpt", ckpt_path, "Starting checkpoint (optional)");
    train->add_option("--out", out_path, "Output directory")->required();
    train->add_option("--threads", args.threads, "Validation worker threads");

    auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint");
    add_common(eval, args, false);
    eval->add_option("--ckpt", ckpt_path, "Checkpoint path")->required();
    eval->add_option("--data", data_dir, "Dataset directory")->required();
    eval->add_flag("--ablation", ablation,
                   "Also report uniform-random-policy accuracy");
    eval->add_option("--sampled", sampled_repeats,
                     "Also report sampled-mode accuracy over N repeats");
    eval->add_option("--threads", args.threads, "Validation worker threads");

    auto* trace = app.add_subcommand("trace", "Dump one glimpse trajectory");
    add_common(trace, args, false);
    trace->add_option("--ckpt", ckpt_path, "Checkpoint path")->required();
    trace->add_option("--image", image_path, "Input PGM image")->required();
    trace->add_option("--out", out_path, "Trace text output path")->required();
    trace->add_option("--render", render_path, "Annotated PGM output path");
    trace->add_flag("--sampled", sampled, "Sample locations instead of greedy");

    CLI11_PARSE(app, argc, argv);

    if (gen->parsed()) return cmd_gen_data(resolve_config(args), out_path, count);
    if (pre->parsed()) return cmd_pretrain(resolve_config(args), data_dir, out_path);
    if (train->parsed()) {
        return cmd_train(resolve_config(args), data_dir, ckpt_path, out_path,
                         args.threads);
    }
    if (eval->parsed()) {
        return cmd_eval(ckpt_path, data_dir, ablation, sampled_repeats, args);
    }
    if (trace->parsed()) {
        return cmd_trace(ckpt_path, image_path, out_path, render_path, sampled,
                         args);
    }
    return kExitFailure; // unreachable: a subcommand is required

}

} // namespace

int main(int argc, char** argv) {
    try {
        return dispatch(argc, argv);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitConfig;
    } catch (const CheckpointError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitCheckpoint;
    } catch (const IoError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitIo;
    } catch (const FormatError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitIo;
    } catch (const ConsistencyError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitIo;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitFailure;
    }
}
