#include "ram/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <thread>

#include "ram/checkpoint.hpp"
#include "ram/errors.hpp"
#include "ram/glimpse.hpp"
#include "ram/ops.hpp"

namespace ram {

namespace fs = std::filesystem;

double reward(int predicted, int label) {
    if (predicted < 0 || label < 0) {
        throw ArgumentError("reward: class indices must be non-negative");
    }
    return predicted == label ? 1.0 : 0.0;
}

TensorPtr hybrid_loss(const EpisodeTrace& trace, int label,
                      double baseline_weight) {
    if (!trace.logits_node) throw StateError("hybrid_loss: trace has no logits");
    if (!trace.reward_set) throw StateError("hybrid_loss: reward not set on trace");
    if (!trace.logp_nodes.empty() &&
        trace.logp_nodes.size() + 1 != trace.baseline_nodes.size()) {
        throw StateError("hybrid_loss: trace has " +
                         std::to_string(trace.logp_nodes.size()) +
                         " policy terms for " +
                         std::to_string(trace.baseline_nodes.size()) + " steps");
    }
    const double r = trace.reward;
    auto loss = softmax_cross_entropy(trace.logits_node, label);
    for (std::size_t t = 0; t < trace.logp_nodes.size(); ++t) {
        const double advantage = r - trace.baselines[t];
        loss = add(loss, scale(trace.logp_nodes[t], -advantage));
    }
    if (baseline_weight > 0.0) {
        for (const auto& v : trace.baseline_nodes) {
            const auto diff = add(scalar_tensor(r), scale(v, -1.0));
            loss = add(loss, scale(mul(diff, diff), baseline_weight));
        }
    }
    return loss;
}

Optimizers make_optimizers(const RunConfig& cfg) {
    const double loc_lr = cfg.locator_lr > 0.0 ? cfg.locator_lr : cfg.lr;
    const double base_lr = cfg.baseline_lr > 0.0 ? cfg.baseline_lr : cfg.lr;
    return {SgdMomentum(cfg.lr, cfg.momentum), SgdMomentum(loc_lr, cfg.momentum),
            SgdMomentum(base_lr, cfg.momentum)};
}

EpochStats train_epoch(RamModel& model, const std::vector<LabeledImage>& data,
                       const RunConfig& cfg, Rng& rng, Optimizers& opt) {
    if (data.empty()) throw ArgumentError("train_epoch: empty training set");
    std::vector<int> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    shuffle(order, rng);

    const int episodes = cfg.episodes_per_epoch > 0
                             ? cfg.episodes_per_epoch
                             : static_cast<int>(data.size());
    EpochStats stats;
    int done = 0;
    while (done < episodes) {
        const int batch = std::min(cfg.batch_size, episodes - done);
        model.zero_grad();
        for (int j = 0; j < batch; ++j) {
            const int k = done + j;
            const auto& sample =
                data[static_cast<std::size_t>(order[static_cast<std::size_t>(k) % order.size()])];
            auto ep_rng = rng.child(static_cast<std::uint64_t>(k));
            auto trace = rollout(model, sample.image, cfg.n_glimpses,
                                 RolloutMode::Sample, ep_rng);
            trace.set_reward(reward(trace.predicted, sample.label));
            const auto loss = hybrid_loss(trace, sample.label, cfg.baseline_weight);
            stats.mean_loss += loss->value();
            stats.mean_reward += trace.reward;
            stats.accuracy += trace.predicted == sample.label ? 1.0 : 0.0;
            backward(scale(loss, 1.0 / batch));
        }
        opt.main.step(model.main_params());
        opt.locator.step(model.locator_params());
        opt.baseline.step(model.baseline_params());
        done += batch;
    }
    stats.mean_loss /= episodes;
    stats.mean_reward /= episodes;
    stats.accuracy /= episodes;
    return stats;
}

Histogram::Histogram(int image_side, int cell_px) : cell(cell_px) {
    if (cell_px < 1) throw ArgumentError("histogram: cell must be positive");
    if (image_side < 1) throw ArgumentError("histogram: image side must be positive");
    grid = (image_side + cell_px - 1) / cell_px;
    counts.assign(static_cast<std::size_t>(grid) * grid, 0);
}

void Histogram::add(const Location& loc, int image_side) {
    const auto [row, col] = loc_to_pixel(loc, image_side);
    const int r = std::clamp(round_half_up(row), 0, image_side - 1);
    const int c = std::clamp(round_half_up(col), 0, image_side - 1);
    counts[static_cast<std::size_t>(r / cell) * grid + c / cell] += 1;
}

long long Histogram::total() const {
    return std::accumulate(counts.begin(), counts.end(), 0LL);
}

namespace {

struct EvalAccum {
    long long correct = 0;
    std::vector<long long> hist;
};

double final_glimpse_distance(const EpisodeTrace& trace, const LabeledImage& img,
                              int side) {
    const auto [row, col] = loc_to_pixel(trace.locations.back(), side);
    const double dr = row - img.meta_y;
    const double dc = col - img.meta_x;
    return std::sqrt(dr * dr + dc * dc);
}

ValidationResult run_eval(const RamModel& model,
                          const std::vector<LabeledImage>& data, RolloutMode mode,
                          int repeats, int heatmap_cell, const Rng& rng,
                          int threads) {
    if (repeats < 1) throw ArgumentError("validate: repeats must be positive");
    ValidationResult res;
    res.histogram = Histogram(model.cfg.image_side, heatmap_cell);
    res.mean_final_dist = std::numeric_limits<double>::quiet_NaN();
    if (data.empty()) return res;

    const long long total = static_cast<long long>(data.size()) * repeats;
    const int side = model.cfg.image_side;
    const int workers = std::max(1, std::min<int>(threads, static_cast<int>(total)));
    std::vector<EvalAccum> acc(static_cast<std::size_t>(workers));
    // One slot per episode so the distance sum reduces in episode order no
    // matter how episodes were split across workers.
    std::vector<double> dist_by_episode(static_cast<std::size_t>(total),
                                        std::numeric_limits<double>::quiet_NaN());

    // Episode k (image k/repeats, repeat k%repeats) always uses rng stream k,
    // so the outcome is invariant to the worker count.
    const auto work = [&](int w) {
        NoGradGuard guard;
        auto& a = acc[static_cast<std::size_t>(w)];
        Histogram local(side, heatmap_cell);
        for (long long k = w; k < total; k += workers) {
            const auto& sample = data[static_cast<std::size_t>(k / repeats)];
            auto ep_rng = rng.child(static_cast<std::uint64_t>(k));
            const auto trace = rollout(model, sample.image, model.cfg.n_glimpses,
                                       mode, ep_rng);
            if (trace.predicted == sample.label) a.correct += 1;
            for (const auto& loc : trace.locations) local.add(loc, side);
            if (sample.label == 1 && sample.has_meta) {
                dist_by_episode[static_cast<std::size_t>(k)] =
                    final_glimpse_distance(trace, sample, side);
            }
        }
        a.hist = std::move(local.counts);
    };

    if (workers == 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w) pool.emplace_back(work, w);
        for (auto& t : pool) t.join();
    }

    long long correct = 0;
    double dist_sum = 0.0;
    for (const auto& a : acc) {
        correct += a.correct;
        for (std::size_t i = 0; i < a.hist.size(); ++i) {
            res.histogram.counts[i] += a.hist[i];
        }
    }
    for (double d : dist_by_episode) {
        if (!std::isnan(d)) {
            dist_sum += d;
            res.dist_count += 1;
        }
    }
    res.accuracy = static_cast<double>(correct) / static_cast<double>(total);
    if (res.dist_count > 0) res.mean_final_dist = dist_sum / res.dist_count;
    return res;
}

} // namespace

ValidationResult validate(const RamModel& model,
                          const std::vector<LabeledImage>& data, RolloutMode mode,
                          int repeats, int heatmap_cell, const Rng& rng,
                          int threads) {
    return run_eval(model, data, mode, repeats, heatmap_cell, rng, threads);
}

double random_policy_ablation(const RamModel& model,
                              const std::vector<LabeledImage>& data, int repeats,
                              const Rng& rng, int threads) {
    return run_eval(model, data, RolloutMode::UniformRandom, repeats,
                    model.cfg.image_side, rng, threads)
        .accuracy;
}

namespace {

void write_heatmap_csv(const std::string& path, const Histogram& hist) {
    std::ofstream out(path);
    if (!out) throw IoError("heatmap: cannot write " + path);
    for (int r = 0; r < hist.grid; ++r) {
        for (int c = 0; c < hist.grid; ++c) {
            out << hist.counts[static_cast<std::size_t>(r) * hist.grid + c]
                << (c + 1 < hist.grid ? "," : "\n");
        }
    }
    if (!out) throw IoError("heatmap: write failed for " + path);
}

void write_heatmap_pgm(const std::string& path, const Histogram& hist) {
    const long long peak =
        *std::max_element(hist.counts.begin(), hist.counts.end());
    std::vector<double> img(hist.counts.size());
    for (std::size_t i = 0; i < img.size(); ++i) {
        img[i] = peak > 0 ? static_cast<double>(hist.counts[i]) /
                                static_cast<double>(peak)
                          : 0.0;
    }
    write_pgm(path, make_tensor({1, hist.grid, hist.grid}, std::move(img)));
}

std::string chunk_name(const char* prefix, int chunk, const char* ext) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%s_chunk_%04d%s", prefix, chunk, ext);
    return buf;
}

} // namespace

RunResult run_training(RamModel& model, const std::vector<LabeledImage>& train_data,
                       const std::vector<LabeledImage>& val_data,
                       const RunConfig& cfg, const std::string& out_dir,
                       int threads) {
    const bool writing = !out_dir.empty();
    std::ofstream metrics;
    std::ofstream chunks_csv;
    if (writing) {
        std::error_code ec;
        fs::create_directories(out_dir, ec);
        if (ec) {
            throw IoError("run_training: cannot create " + out_dir + ": " +
                          ec.message());
        }
        metrics.open(fs::path(out_dir) / "metrics.csv");
        chunks_csv.open(fs::path(out_dir) / "chunks.csv");
        if (!metrics || !chunks_csv) {
            throw IoError("run_training: cannot write outputs in " + out_dir);
        }
        metrics << "epoch,loss,accuracy,mean_reward\n";
        chunks_csv << "chunk,end_epoch,val_accuracy,greedy_accuracy,"
                      "mean_final_dist,hist_total\n";
    }

    const Rng base(cfg.seed);
    const RolloutMode val_mode = cfg.val_mode == "greedy" ? RolloutMode::Greedy
                                                          : RolloutMode::Sample;
    Optimizers opt = make_optimizers(cfg);
    RunResult result;
    char line[256];

    int epoch = 0;
    int chunk = 0;
    while (epoch < cfg.epochs) {
        ++chunk;
        const int chunk_end = std::min(cfg.epochs, epoch + cfg.chunk_epochs);
        for (; epoch < chunk_end; ++epoch) {
            auto epoch_rng = base.child(0x100000ULL + static_cast<std::uint64_t>(epoch));
            const auto stats = train_epoch(model, train_data, cfg, epoch_rng, opt);
            result.epochs.push_back(stats);
            if (writing) {
                std::snprintf(line, sizeof(line), "%d,%.10g,%.10g,%.10g\n",
                              epoch + 1, stats.mean_loss, stats.accuracy,
                              stats.mean_reward);
                metrics << line;
            }
        }

        ChunkStats cs;
        cs.chunk = chunk;
        cs.end_epoch = epoch;
        const auto val_rng = base.child(0x200000ULL + static_cast<std::uint64_t>(chunk));
        const auto val = validate(model, val_data, val_mode,
                                  cfg.validations_per_chunk, cfg.heatmap_cell,
                                  val_rng, threads);
        const auto greedy = validate(model, val_data, RolloutMode::Greedy, 1,
                                     cfg.heatmap_cell, val_rng, threads);
        cs.val_accuracy = val.accuracy;
        cs.greedy_accuracy = greedy.accuracy;
        cs.mean_final_dist = greedy.mean_final_dist;
        cs.histogram = val.histogram;
        result.chunks.push_back(cs);

        if (writing) {
            std::snprintf(line, sizeof(line), "%d,%d,%.10g,%.10g,%.10g,%lld\n",
                          cs.chunk, cs.end_epoch, cs.val_accuracy,
                          cs.greedy_accuracy, cs.mean_final_dist,
                          cs.histogram.total());
            chunks_csv << line;
            const auto dir = fs::path(out_dir);
            write_heatmap_csv((dir / chunk_name("heatmap", chunk, ".csv")).string(),
                              cs.histogram);
            write_heatmap_pgm((dir / chunk_name("heatmap", chunk, ".pgm")).string(),
                              cs.histogram);
            save_checkpoint((dir / chunk_name("ckpt", chunk, ".ramckpt")).string(),
                            model, cfg,
                            {cfg.seed, static_cast<std::uint64_t>(epoch)});
        }
    }

    if (writing) {
        save_checkpoint((fs::path(out_dir) / "model_final.ramckpt").string(), model,
                        cfg, {cfg.seed, static_cast<std::uint64_t>(epoch)});
        if (!metrics || !chunks_csv) {
            throw IoError("run_training: output write failed in " + out_dir);
        }
    }
    return result;
}

} // namespace ram
