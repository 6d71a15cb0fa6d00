#include "ram/config.hpp"

#include <cctype>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

#include "ram/errors.hpp"

namespace ram {

ModelConfig RunConfig::model_config() const {
    ModelConfig m;
    m.image_side = image_side;
    m.glimpse_size = glimpse_size;
    m.glimpse_scale = glimpse_scale;
    m.pad_value = pad_value;
    m.enc1_channels = enc1_channels;
    m.enc2_channels = enc2_channels;
    m.kernel_size = kernel_size;
    m.loc_feature_dim = loc_feature_dim;
    m.glimpse_feature_dim = glimpse_feature_dim;
    m.hidden_dim = hidden_dim;
    m.num_classes = num_classes;
    m.n_glimpses = n_glimpses;
    m.sigma = sigma;
    return m;
}

SynthConfig RunConfig::synth_config() const {
    SynthConfig s;
    s.image_side = image_side;
    s.task = task;
    s.noise = noise;
    s.clutter = clutter;
    s.ctr_threshold = ctr_threshold;
    s.ctr_margin = ctr_margin;
    return s;
}

void RunConfig::validate() const {
    model_config().validate();
    synth_config().validate();
    if (epochs < 0) throw ConfigError("config: epochs must be non-negative");
    if (episodes_per_epoch < 0) {
        throw ConfigError("config: episodes_per_epoch must be non-negative");
    }
    if (batch_size < 1) throw ConfigError("config: batch_size must be positive");
    if (lr < 0.0 || locator_lr < 0.0 || baseline_lr < 0.0 || pretrain_lr < 0.0) {
        throw ConfigError("config: learning rates must be non-negative");
    }
    if (momentum < 0.0 || momentum >= 1.0) {
        throw ConfigError("config: momentum must lie in [0,1)");
    }
    if (baseline_weight < 0.0) {
        throw ConfigError("config: baseline_weight must be non-negative");
    }
    if (chunk_epochs < 1) throw ConfigError("config: chunk_epochs must be positive");
    if (validations_per_chunk < 1) {
        throw ConfigError("config: validations_per_chunk must be positive");
    }
    if (heatmap_cell < 1) throw ConfigError("config: heatmap_cell must be positive");
    if (val_fraction < 0.0 || val_fraction >= 1.0) {
        throw ConfigError("config: val_fraction must lie in [0,1)");
    }
    if (val_mode != "sampled" && val_mode != "greedy") {
        throw ConfigError("config: val_mode must be 'sampled' or 'greedy'");
    }
    if (pretrain_epochs < 0) {
        throw ConfigError("config: pretrain_epochs must be non-negative");
    }
    if (pretrain_patches < 1) {
        throw ConfigError("config: pretrain_patches must be positive");
    }
    if (pretrain_batch < 1) {
        throw ConfigError("config: pretrain_batch must be positive");
    }
}

namespace {

struct FieldRef {
    enum class Kind { Int, Double, Str, U64 } kind;
    int RunConfig::* i = nullptr;
    double RunConfig::* d = nullptr;
    std::string RunConfig::* s = nullptr;
    std::uint64_t RunConfig::* u = nullptr;
};

// Definition order is the canonical serialization order.
const std::vector<std::pair<std::string, FieldRef>>& field_table() {
    using K = FieldRef::Kind;
    auto fi = [](int RunConfig::* p) { return FieldRef{K::Int, p, nullptr, nullptr, nullptr}; };
    auto fd = [](double RunConfig::* p) { return FieldRef{K::Double, nullptr, p, nullptr, nullptr}; };
    auto fs = [](std::string RunConfig::* p) { return FieldRef{K::Str, nullptr, nullptr, p, nullptr}; };
    auto fu = [](std::uint64_t RunConfig::* p) { return FieldRef{K::U64, nullptr, nullptr, nullptr, p}; };
    static const std::vector<std::pair<std::string, FieldRef>> table = {
        {"image_side", fi(&RunConfig::image_side)},
        {"glimpse_size", fi(&RunConfig::glimpse_size)},
        {"glimpse_scale", fi(&RunConfig::glimpse_scale)},
        {"pad_value", fd(&RunConfig::pad_value)},
        {"enc1_channels", fi(&RunConfig::enc1_channels)},
        {"enc2_channels", fi(&RunConfig::enc2_channels)},
        {"kernel_size", fi(&RunConfig::kernel_size)},
        {"loc_feature_dim", fi(&RunConfig::loc_feature_dim)},
        {"glimpse_feature_dim", fi(&RunConfig::glimpse_feature_dim)},
        {"hidden_dim", fi(&RunConfig::hidden_dim)},
        {"num_classes", fi(&RunConfig::num_classes)},
        {"n_glimpses", fi(&RunConfig::n_glimpses)},
        {"sigma", fd(&RunConfig::sigma)},
        {"epochs", fi(&RunConfig::epochs)},
        {"episodes_per_epoch", fi(&RunConfig::episodes_per_epoch)},
        {"batch_size", fi(&RunConfig::batch_size)},
        {"lr", fd(&RunConfig::lr)},
        {"locator_lr", fd(&RunConfig::locator_lr)},
        {"baseline_lr", fd(&RunConfig::baseline_lr)},
        {"momentum", fd(&RunConfig::momentum)},
        {"baseline_weight", fd(&RunConfig::baseline_weight)},
        {"chunk_epochs", fi(&RunConfig::chunk_epochs)},
        {"validations_per_chunk", fi(&RunConfig::validations_per_chunk)},
        {"heatmap_cell", fi(&RunConfig::heatmap_cell)},
        {"val_fraction", fd(&RunConfig::val_fraction)},
        {"val_mode", fs(&RunConfig::val_mode)},
        {"pretrain_epochs", fi(&RunConfig::pretrain_epochs)},
        {"pretrain_lr", fd(&RunConfig::pretrain_lr)},
        {"pretrain_patches", fi(&RunConfig::pretrain_patches)},
        {"pretrain_batch", fi(&RunConfig::pretrain_batch)},
        {"task", fs(&RunConfig::task)},
        {"noise", fd(&RunConfig::noise)},
        {"clutter", fi(&RunConfig::clutter)},
        {"ctr_threshold", fd(&RunConfig::ctr_threshold)},
        {"ctr_margin", fd(&RunConfig::ctr_margin)},
        {"seed", fu(&RunConfig::seed)},
    };
    return table;
}

const FieldRef* find_field(const std::string& key) {
    for (const auto& [name, ref] : field_table()) {
        if (name == key) return &ref;
    }
    return nullptr;
}

std::string trim(const std::string& s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

[[noreturn]] void bad_line(int line_no, const std::string& why) {
    throw ConfigError("config line " + std::to_string(line_no) + ": " + why);
}

void assign(RunConfig& cfg, const FieldRef& ref, const std::string& value,
            int line_no) {
    try {
        std::size_t pos = 0;
        switch (ref.kind) {
            case FieldRef::Kind::Int:
                cfg.*(ref.i) = std::stoi(value, &pos);
                break;
            case FieldRef::Kind::Double:
                cfg.*(ref.d) = std::stod(value, &pos);
                break;
            case FieldRef::Kind::U64:
                if (value[0] == '-') bad_line(line_no, "value must be non-negative");
                cfg.*(ref.u) = std::stoull(value, &pos);
                break;
            case FieldRef::Kind::Str:
                cfg.*(ref.s) = value;
                pos = value.size();
                break;
        }
        if (pos != value.size()) bad_line(line_no, "trailing junk in value '" + value + "'");
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception&) {
        bad_line(line_no, "cannot parse value '" + value + "'");
    }
}

} // namespace

RunConfig parse_config_text(const std::string& text) {
    RunConfig cfg;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    std::map<std::string, int> seen;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) bad_line(line_no, "expected 'key = value'");
        const auto key = trim(line.substr(0, eq));
        const auto value = trim(line.substr(eq + 1));
        if (key.empty()) bad_line(line_no, "empty key");
        if (value.empty()) bad_line(line_no, "empty value for '" + key + "'");
        const auto* ref = find_field(key);
        if (ref == nullptr) bad_line(line_no, "unknown key '" + key + "'");
        if (const auto [it, fresh] = seen.emplace(key, line_no); !fresh) {
            bad_line(line_no, "duplicate key '" + key + "' (first on line " +
                                  std::to_string(it->second) + ")");
        }
        assign(cfg, *ref, value, line_no);
    }
    cfg.validate();
    return cfg;
}

RunConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("config: cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

std::string serialize_config(const RunConfig& cfg) {
    std::string out;
    char line[128];
    for (const auto& [name, ref] : field_table()) {
        switch (ref.kind) {
            case FieldRef::Kind::Int:
                std::snprintf(line, sizeof(line), "%s = %d\n", name.c_str(),
                              cfg.*(ref.i));
                break;
            case FieldRef::Kind::Double:
                std::snprintf(line, sizeof(line), "%s = %.17g\n", name.c_str(),
                              cfg.*(ref.d));
                break;
            case FieldRef::Kind::U64:
                std::snprintf(line, sizeof(line), "%s = %" PRIu64 "\n",
                              name.c_str(), cfg.*(ref.u));
                break;
            case FieldRef::Kind::Str:
                std::snprintf(line, sizeof(line), "%s = %s\n", name.c_str(),
                              (cfg.*(ref.s)).c_str());
                break;
        }
        out += line;
    }
    return out;
}

void save_config_file(const std::string& path, const RunConfig& cfg) {
    std::ofstream out(path);
    if (!out) throw IoError("config: cannot write " + path);
    out << serialize_config(cfg);
    if (!out) throw IoError("config: write failed for " + path);
}

} // namespace ram
