#include "ram/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>

#include "ram/errors.hpp"

namespace ram {

namespace {

constexpr char kMagic[8] = {'R', 'A', 'M', 'C', 'K', 'P', 'T', '1'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double v) {
    put_u64(out, std::bit_cast<std::uint64_t>(v));
}

struct Reader {
    const std::string& buf;
    std::size_t pos = 0;
    const std::string& path;

    void need(std::size_t n) const {
        if (pos + n > buf.size()) {
            throw CheckpointError("checkpoint: truncated file " + path);
        }
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) {
            v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
        }
        pos += 4;
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) {
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
        }
        pos += 8;
        return v;
    }
    double f64() { return std::bit_cast<double>(u64()); }
    std::string bytes(std::size_t n) {
        need(n);
        std::string s = buf.substr(pos, n);
        pos += n;
        return s;
    }
};

} // namespace

void save_checkpoint(const std::string& path, const RamModel& model,
                     const RunConfig& config, const CheckpointMeta& meta) {
    std::string out;
    out.append(kMagic, sizeof(kMagic));
    put_u32(out, kVersion);
    put_u64(out, meta.master_seed);
    put_u64(out, meta.epoch_counter);
    const auto cfg_text = serialize_config(config);
    put_u32(out, static_cast<std::uint32_t>(cfg_text.size()));
    out += cfg_text;
    const auto named = model.named_params();
    put_u32(out, static_cast<std::uint32_t>(named.size()));
    for (const auto& [name, t] : named) {
        put_u32(out, static_cast<std::uint32_t>(name.size()));
        out += name;
        put_u32(out, static_cast<std::uint32_t>(t->shape.size()));
        for (const int d : t->shape) put_u32(out, static_cast<std::uint32_t>(d));
        for (const double v : t->data) put_f64(out, v);
    }

    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("checkpoint: cannot open " + path + " for writing");
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw IoError("checkpoint: write failed for " + path);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("checkpoint: cannot open " + path);
    std::string buf((std::istreambuf_iterator<char>(f)),
                    std::istreambuf_iterator<char>());
    Reader r{buf, 0, path};

    const auto magic = r.bytes(sizeof(kMagic));
    if (std::memcmp(magic.data(), kMagic, sizeof(kMagic)) != 0) {
        throw CheckpointError("checkpoint: bad magic in " + path);
    }
    const auto version = r.u32();
    if (version != kVersion) {
        throw CheckpointError("checkpoint: unsupported version " +
                              std::to_string(version) + " in " + path);
    }

    LoadedCheckpoint loaded;
    loaded.meta.master_seed = r.u64();
    loaded.meta.epoch_counter = r.u64();
    const auto cfg_len = r.u32();
    loaded.config = parse_config_text(r.bytes(cfg_len));

    Rng scratch(0); // placeholder init; every tensor is overwritten below
    loaded.model = RamModel::init(loaded.config.model_config(), scratch);

    std::map<std::string, TensorPtr> by_name;
    for (const auto& [name, t] : loaded.model.named_params()) by_name[name] = t;

    const auto n_tensors = r.u32();
    if (n_tensors != by_name.size()) {
        throw CheckpointError("checkpoint: expected " +
                              std::to_string(by_name.size()) + " tensors, found " +
                              std::to_string(n_tensors) + " in " + path);
    }
    for (std::uint32_t i = 0; i < n_tensors; ++i) {
        const auto name = r.bytes(r.u32());
        const auto it = by_name.find(name);
        if (it == by_name.end()) {
            throw CheckpointError("checkpoint: unknown tensor '" + name + "' in " +
                                  path);
        }
        const auto& t = it->second;
        const auto rank = r.u32();
        if (rank != t->shape.size()) {
            throw CheckpointError("checkpoint: rank mismatch for '" + name + "'");
        }
        for (std::size_t d = 0; d < rank; ++d) {
            if (r.u32() != static_cast<std::uint32_t>(t->shape[d])) {
                throw CheckpointError("checkpoint: shape mismatch for '" + name + "'");
            }
        }
        for (auto& v : t->data) v = r.f64();
        by_name.erase(it);
    }
    if (r.pos != buf.size()) {
        throw CheckpointError("checkpoint: trailing bytes in " + path);
    }
    return loaded;
}

} // namespace ram
