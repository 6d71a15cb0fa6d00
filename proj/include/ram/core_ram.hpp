#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "ram/encoder.hpp"
#include "ram/glimpse.hpp"
#include "ram/model_config.hpp"
#include "ram/rng.hpp"
#include "ram/tensor.hpp"

namespace ram {

// Gate weights are [d_h x (d_b + d_h)] over the concatenated [b_t, h_{t-1}].
struct LstmParams {
    TensorPtr wi, bi; // input gate
    TensorPtr wf, bf; // forget gate (bias initialised to +1)
    TensorPtr wo, bo; // output gate
    TensorPtr wc, bc; // candidate
};

struct LstmState {
    TensorPtr h; // [d_h]
    TensorPtr c; // [d_h]
};

LstmParams make_lstm(int input_dim, int hidden_dim, Rng& rng);
LstmState make_lstm_state(int hidden_dim);

LstmState lstm_step(const LstmParams& params, const TensorPtr& b_t,
                    const LstmState& state);

// Policy head: o_t = tanh(dense(h_t)), kept inside (-1,1) so the mean is a
// valid location. sigma is the fixed policy std-dev in normalized units.
struct LocatorParams {
    TensorPtr w; // [2 x d_h]
    TensorPtr b; // [2]
    double sigma = 0.1;
};

TensorPtr locate(const LocatorParams& params, const TensorPtr& h);

struct ClassifierParams {
    TensorPtr w; // [K x d_h]
    TensorPtr b; // [K]
};

TensorPtr classify(const ClassifierParams& params, const TensorPtr& h);

// Reward predictor v_t = dense(h_t), trained only against the episode reward.
struct BaselineParams {
    TensorPtr w; // [1 x d_h]
    TensorPtr b; // [1]
};

enum class RolloutMode {
    Sample,        // l_{t+1} = clamp(o_t + sigma * z), training behaviour
    Greedy,        // l_{t+1} = clamp(o_t), deterministic evaluation
    UniformRandom, // l_{t+1} uniform in [-1,1]^2; locator ignored (ablation)
};

struct SampledLocation {
    Location loc;               // post-clamp, what the sensor sees
    std::array<double, 2> draw; // pre-clamp Gaussian draw (log-density argument)
};

SampledLocation sample_location(const std::array<double, 2>& o, double sigma,
                                Rng& rng, RolloutMode mode);

struct RamModel {
    ModelConfig cfg;
    CaeStack stack;
    GlimpseNetParams gnet;
    LstmParams lstm;
    LocatorParams locator;
    ClassifierParams classifier;
    BaselineParams baseline;

    static RamModel init(const ModelConfig& cfg, Rng& rng);

    // Stable name -> tensor mapping; iteration order is the serialization
    // order and must not change between versions.
    std::vector<std::pair<std::string, TensorPtr>> named_params() const;

    // Parameter groups for the three optimizers. The locator is trained only
    // by the policy term and the baseline only by reward regression, so each
    // gets its own group.
    std::vector<TensorPtr> main_params() const;
    std::vector<TensorPtr> locator_params() const;
    std::vector<TensorPtr> baseline_params() const;
    std::vector<TensorPtr> all_params() const;

    void zero_grad() const;
    int param_count() const;
};

// One episode. locations and baselines have n entries; means, draws and
// log_densities have n-1 (one per sampled transition; the first location is
// always the fixed center). Graph handles are alive until the trace dies, so
// a hybrid loss can be built from a training rollout.
struct EpisodeTrace {
    std::vector<Location> locations;
    std::vector<std::array<double, 2>> means;
    std::vector<std::array<double, 2>> draws;
    std::vector<double> log_densities;
    std::vector<double> baselines;
    std::vector<double> final_logits;
    int predicted = -1;
    double reward = 0.0;
    bool reward_set = false;

    TensorPtr logits_node;
    std::vector<TensorPtr> logp_nodes;
    std::vector<TensorPtr> baseline_nodes;

    void set_reward(double r) {
        reward = r;
        reward_set = true;
    }
};

EpisodeTrace rollout(const RamModel& model, const TensorPtr& image,
                     int n_glimpses, RolloutMode mode, Rng& rng);

// Deterministic rollout at externally supplied locations (first must be the
// center). With `draws` empty the trace carries only the classification and
// baseline graph; given n-1 fixed pre-clamp draws it also builds the locator
// log-density nodes, yielding a deterministic hybrid-loss graph for gradient
// checking.
EpisodeTrace rollout_fixed(const RamModel& model, const TensorPtr& image,
                           const std::vector<Location>& locations,
                           const std::vector<std::array<double, 2>>& draws = {});

} // namespace ram
