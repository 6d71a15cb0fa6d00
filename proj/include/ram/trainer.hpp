#pragma once

#include <string>
#include <vector>

#include "ram/config.hpp"
#include "ram/core_ram.hpp"
#include "ram/optimizer.hpp"
#include "ram/synthcxr.hpp"

namespace ram {

// 0/1 terminal reward: granted only for a correct final classification.
double reward(int predicted, int label);

// L = CE(logits, label)
//     - sum_t (R - v_t) * log pi(l_{t+1} | o_t)   [(R - v_t) held constant]
//     + baseline_weight * sum_t (R - v_t)^2.
// The policy sum runs over the trace's sampled transitions; a one-glimpse
// episode reduces to CE plus the baseline term.
TensorPtr hybrid_loss(const EpisodeTrace& trace, int label,
                      double baseline_weight);

// Three groups so the policy head and the reward predictor can run at their
// own learning rates, and momentum state survives across epochs.
struct Optimizers {
    SgdMomentum main;
    SgdMomentum locator;
    SgdMomentum baseline;
};

Optimizers make_optimizers(const RunConfig& cfg);

struct EpochStats {
    double mean_loss = 0.0;
    double accuracy = 0.0;
    double mean_reward = 0.0;
};

EpochStats train_epoch(RamModel& model, const std::vector<LabeledImage>& data,
                       const RunConfig& cfg, Rng& rng, Optimizers& opt);

// 2-D count grid over glimpse centers, cells of `cell` pixels; the last row
// and column of cells may be partial when cell does not divide the side.
struct Histogram {
    int cell = 25;
    int grid = 0;
    std::vector<long long> counts;

    Histogram() = default;
    Histogram(int image_side, int cell);
    void add(const Location& loc, int image_side);
    long long total() const;
};

struct ValidationResult {
    double accuracy = 0.0;
    Histogram histogram;
    // Mean distance (pixels) from the final glimpse center to the meta
    // target center, over positive-labelled images carrying meta; NaN when
    // the set has none.
    double mean_final_dist = 0.0;
    long long dist_count = 0;
};

// Runs `repeats` rollouts per image with per-episode rng streams split from
// `rng`, so results are independent of the thread count.
ValidationResult validate(const RamModel& model,
                          const std::vector<LabeledImage>& data,
                          RolloutMode mode, int repeats, int heatmap_cell,
                          const Rng& rng, int threads = 1);

// Same trained weights, uniformly random locations instead of the locator.
double random_policy_ablation(const RamModel& model,
                              const std::vector<LabeledImage>& data, int repeats,
                              const Rng& rng, int threads = 1);

struct ChunkStats {
    int chunk = 0;     // 1-based
    int end_epoch = 0; // global epochs completed at this boundary
    double val_accuracy = 0.0;    // cfg.val_mode rollouts, averaged
    double greedy_accuracy = 0.0; // deterministic pass
    double mean_final_dist = 0.0; // greedy pass, see ValidationResult
    Histogram histogram;          // cfg.val_mode rollouts
};

struct RunResult {
    std::vector<EpochStats> epochs;
    std::vector<ChunkStats> chunks;
};

// Chunked protocol: train chunk_epochs, then validate repeatedly, record the
// location histogram, and checkpoint. With a non-empty out_dir writes
// metrics.csv, chunks.csv, per-chunk heatmap PGM/CSV pairs and checkpoints,
// plus model_final.ramckpt.
RunResult run_training(RamModel& model, const std::vector<LabeledImage>& train_data,
                       const std::vector<LabeledImage>& val_data,
                       const RunConfig& cfg, const std::string& out_dir,
                       int threads = 1);

} // namespace ram
