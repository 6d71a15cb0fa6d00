#include "ram/core_ram.hpp"

#include <algorithm>

#include "ram/errors.hpp"
#include "ram/ops.hpp"

namespace ram {

LstmParams make_lstm(int input_dim, int hidden_dim, Rng& rng) {
    if (input_dim < 1 || hidden_dim < 1) {
        throw ConfigError("lstm: dimensions must be positive");
    }
    const int in = input_dim + hidden_dim;
    LstmParams p;
    p.wi = init_uniform({hidden_dim, in}, in, rng);
    p.bi = init_constant({hidden_dim}, 0.0);
    p.wf = init_uniform({hidden_dim, in}, in, rng);
    p.bf = init_constant({hidden_dim}, 1.0);
    p.wo = init_uniform({hidden_dim, in}, in, rng);
    p.bo = init_constant({hidden_dim}, 0.0);
    p.wc = init_uniform({hidden_dim, in}, in, rng);
    p.bc = init_constant({hidden_dim}, 0.0);
    return p;
}

LstmState make_lstm_state(int hidden_dim) {
    return {zeros({hidden_dim}), zeros({hidden_dim})};
}

LstmState lstm_step(const LstmParams& params, const TensorPtr& b_t,
                    const LstmState& state) {
    const auto zin = concat({b_t, state.h});
    const auto i = sigmoid(linear(params.wi, params.bi, zin));
    const auto f = sigmoid(linear(params.wf, params.bf, zin));
    const auto o = sigmoid(linear(params.wo, params.bo, zin));
    const auto g = tanh(linear(params.wc, params.bc, zin));
    LstmState next;
    next.c = add(mul(f, state.c), mul(i, g));
    next.h = mul(o, tanh(next.c));
    return next;
}

TensorPtr locate(const LocatorParams& params, const TensorPtr& h) {
    return tanh(linear(params.w, params.b, h));
}

TensorPtr classify(const ClassifierParams& params, const TensorPtr& h) {
    return linear(params.w, params.b, h);
}

SampledLocation sample_location(const std::array<double, 2>& o, double sigma,
                                Rng& rng, RolloutMode mode) {
    SampledLocation s;
    switch (mode) {
        case RolloutMode::Sample: {
            if (sigma <= 0.0) {
                throw ConfigError("sample_location: sigma must be positive");
            }
            const auto z = rng.normal2();
            s.draw = {o[0] + sigma * z.first, o[1] + sigma * z.second};
            break;
        }
        case RolloutMode::Greedy:
            s.draw = o;
            break;
        case RolloutMode::UniformRandom:
            s.draw = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
            break;
    }
    s.loc = clamp_location({s.draw[0], s.draw[1]});
    return s;
}

RamModel RamModel::init(const ModelConfig& cfg, Rng& rng) {
    cfg.validate();
    RamModel m;
    m.cfg = cfg;
    m.stack = make_cae_stack(cfg, rng);
    m.gnet = make_glimpse_net(cfg, rng);
    m.lstm = make_lstm(cfg.glimpse_feature_dim, cfg.hidden_dim, rng);
    m.locator.w = init_uniform({2, cfg.hidden_dim}, cfg.hidden_dim, rng);
    m.locator.b = init_constant({2}, 0.0);
    m.locator.sigma = cfg.sigma;
    m.classifier.w = init_uniform({cfg.num_classes, cfg.hidden_dim}, cfg.hidden_dim, rng);
    m.classifier.b = init_constant({cfg.num_classes}, 0.0);
    m.baseline.w = init_uniform({1, cfg.hidden_dim}, cfg.hidden_dim, rng);
    m.baseline.b = init_constant({1}, 0.0);
    return m;
}

std::vector<std::pair<std::string, TensorPtr>> RamModel::named_params() const {
    return {
        {"cae1/enc_kernels", stack.cae1.enc_kernels},
        {"cae1/enc_bias", stack.cae1.enc_bias},
        {"cae1/dec_kernels", stack.cae1.dec_kernels},
        {"cae1/dec_bias", stack.cae1.dec_bias},
        {"cae2/enc_kernels", stack.cae2.enc_kernels},
        {"cae2/enc_bias", stack.cae2.enc_bias},
        {"cae2/dec_kernels", stack.cae2.dec_kernels},
        {"cae2/dec_bias", stack.cae2.dec_bias},
        {"gnet/loc_w", gnet.loc_w},
        {"gnet/loc_b", gnet.loc_b},
        {"gnet/fuse_w", gnet.fuse_w},
        {"gnet/fuse_b", gnet.fuse_b},
        {"lstm/wi", lstm.wi},
        {"lstm/bi", lstm.bi},
        {"lstm/wf", lstm.wf},
        {"lstm/bf", lstm.bf},
        {"lstm/wo", lstm.wo},
        {"lstm/bo", lstm.bo},
        {"lstm/wc", lstm.wc},
        {"lstm/bc", lstm.bc},
        {"locator/w", locator.w},
        {"locator/b", locator.b},
        {"classifier/w", classifier.w},
        {"classifier/b", classifier.b},
        {"baseline/w", baseline.w},
        {"baseline/b", baseline.b},
    };
}

std::vector<TensorPtr> RamModel::main_params() const {
    return {stack.cae1.enc_kernels, stack.cae1.enc_bias,
            stack.cae1.dec_kernels, stack.cae1.dec_bias,
            stack.cae2.enc_kernels, stack.cae2.enc_bias,
            stack.cae2.dec_kernels, stack.cae2.dec_bias,
            gnet.loc_w,             gnet.loc_b,
            gnet.fuse_w,            gnet.fuse_b,
            lstm.wi,                lstm.bi,
            lstm.wf,                lstm.bf,
            lstm.wo,                lstm.bo,
            lstm.wc,                lstm.bc,
            classifier.w,           classifier.b};
}

std::vector<TensorPtr> RamModel::locator_params() const {
    return {locator.w, locator.b};
}

std::vector<TensorPtr> RamModel::baseline_params() const {
    return {baseline.w, baseline.b};
}

std::vector<TensorPtr> RamModel::all_params() const {
    std::vector<TensorPtr> out;
    for (auto& [name, t] : named_params()) {
        (void)name;
        out.push_back(t);
    }
    return out;
}

void RamModel::zero_grad() const {
    for (const auto& t : all_params()) t->zero_grad();
}

int RamModel::param_count() const {
    int n = 0;
    for (const auto& t : all_params()) n += t->numel();
    return n;
}

namespace {

// Shared per-step state advance: extract, encode, fuse, recur; records the
// location and the (detached-input) baseline node.
LstmState advance(const RamModel& model, const TensorPtr& image,
                  const Location& l, const LstmState& state,
                  EpisodeTrace& trace, TensorPtr& h_detached) {
    const auto glimpse = extract_glimpse(image, l, model.cfg.glimpse_config());
    const auto feat = encode_glimpse(model.stack, glimpse);
    const auto b_t = glimpse_net(model.gnet, feat, l);
    const LstmState next = lstm_step(model.lstm, b_t, state);
    trace.locations.push_back(l);
    h_detached = detach(next.h);
    const auto v = linear(model.baseline.w, model.baseline.b, h_detached);
    trace.baseline_nodes.push_back(v);
    trace.baselines.push_back(v->data[0]);
    return next;
}

void finish(const RamModel& model, const LstmState& state, EpisodeTrace& trace) {
    trace.logits_node = classify(model.classifier, state.h);
    trace.final_logits = trace.logits_node->data;
    const auto it = std::max_element(trace.final_logits.begin(),
                                     trace.final_logits.end());
    trace.predicted = static_cast<int>(it - trace.final_logits.begin());
}

} // namespace

EpisodeTrace rollout(const RamModel& model, const TensorPtr& image,
                     int n_glimpses, RolloutMode mode, Rng& rng) {
    if (n_glimpses < 1) throw ArgumentError("rollout: need at least one glimpse");
    EpisodeTrace trace;
    Location l{0.0, 0.0};
    LstmState state = make_lstm_state(model.cfg.hidden_dim);
    for (int t = 1; t <= n_glimpses; ++t) {
        TensorPtr h_detached;
        state = advance(model, image, l, state, trace, h_detached);
        if (t == n_glimpses) break;
        if (mode == RolloutMode::UniformRandom) {
            // Ablation: the locator is not consulted, so no policy record.
            l = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
            continue;
        }
        const auto o_node = locate(model.locator, h_detached);
        const std::array<double, 2> o{o_node->data[0], o_node->data[1]};
        const auto s = sample_location(o, model.locator.sigma, rng, mode);
        const auto logp = gaussian_log_pdf(s.draw, o_node, model.locator.sigma);
        trace.means.push_back(o);
        trace.draws.push_back(s.draw);
        trace.log_densities.push_back(logp->data[0]);
        trace.logp_nodes.push_back(logp);
        l = s.loc;
    }
    finish(model, state, trace);
    return trace;
}

EpisodeTrace rollout_fixed(const RamModel& model, const TensorPtr& image,
                           const std::vector<Location>& locations,
                           const std::vector<std::array<double, 2>>& draws) {
    if (locations.empty()) throw ArgumentError("rollout_fixed: empty location list");
    if (locations[0].x != 0.0 || locations[0].y != 0.0) {
        throw ArgumentError("rollout_fixed: first location must be the center");
    }
    const auto n = locations.size();
    if (!draws.empty() && draws.size() != n - 1) {
        throw ArgumentError("rollout_fixed: need one draw per sampled transition");
    }
    EpisodeTrace trace;
    LstmState state = make_lstm_state(model.cfg.hidden_dim);
    for (std::size_t t = 0; t < n; ++t) {
        TensorPtr h_detached;
        state = advance(model, image, locations[t], state, trace, h_detached);
        if (t + 1 < n && !draws.empty()) {
            const auto o_node = locate(model.locator, h_detached);
            const auto logp =
                gaussian_log_pdf(draws[t], o_node, model.locator.sigma);
            trace.means.push_back({o_node->data[0], o_node->data[1]});
            trace.draws.push_back(draws[t]);
            trace.log_densities.push_back(logp->data[0]);
            trace.logp_nodes.push_back(logp);
        }
    }
    finish(model, state, trace);
    return trace;
}

} // namespace ram
