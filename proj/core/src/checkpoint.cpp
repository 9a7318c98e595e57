// SPDX-License-Identifier: Apache-2.0

#include "fgrn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>

namespace fgrn {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'F', 'G', 'R', 'N'};
constexpr std::uint8_t kDtypeF32 = 0;

struct Writer {
    std::ofstream out;

    explicit Writer(const std::string& path) : out(path, std::ios::binary) {
        if (!out) raise(ErrorCode::CorruptFile, "cannot open " + path + " for writing");
    }
    void bytes(const void* p, std::size_t n) { out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n)); }
    void u8(std::uint8_t v) { bytes(&v, 1); }
    void u32(std::uint32_t v) { bytes(&v, 4); }
    void u64(std::uint64_t v) { bytes(&v, 8); }
    void tensor(const std::string& name, const Shape& shape, const std::vector<float>& values) {
        u32(static_cast<std::uint32_t>(name.size()));
        bytes(name.data(), name.size());
        u8(kDtypeF32);
        u8(static_cast<std::uint8_t>(shape.size()));
        for (auto d : shape) u64(static_cast<std::uint64_t>(d));
        bytes(values.data(), values.size() * sizeof(float));
    }
};

struct Reader {
    std::vector<std::uint8_t> buf;
    std::size_t pos = 0;

    explicit Reader(const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) raise(ErrorCode::CorruptFile, "cannot open " + path);
        in.seekg(0, std::ios::end);
        const auto n = in.tellg();
        in.seekg(0, std::ios::beg);
        buf.resize(static_cast<std::size_t>(n));
        in.read(reinterpret_cast<char*>(buf.data()), n);
        if (!in) raise(ErrorCode::CorruptFile, "short read on " + path);
    }
    void need(std::size_t n) {
        if (pos + n > buf.size()) raise(ErrorCode::CorruptFile, "checkpoint truncated");
    }
    void bytes(void* p, std::size_t n) {
        need(n);
        std::memcpy(p, buf.data() + pos, n);
        pos += n;
    }
    std::uint8_t u8() { std::uint8_t v; bytes(&v, 1); return v; }
    std::uint32_t u32() { std::uint32_t v; bytes(&v, 4); return v; }
    std::uint64_t u64() { std::uint64_t v; bytes(&v, 8); return v; }
    std::string str(std::size_t n) {
        need(n);
        std::string s(reinterpret_cast<const char*>(buf.data() + pos), n);
        pos += n;
        return s;
    }
    bool done() const { return pos == buf.size(); }
};

struct StoredTensor {
    Shape shape;
    std::vector<float> values;
};

} // namespace

void checkpoint_save(const RescaleModelT<float>& model, const TrainStateT<float>* state,
                     const TrainConfig& cfg, const std::string& path) {
    Writer w(path);
    w.bytes(kMagic, 4);
    w.u32(kCheckpointVersion);
    const std::string config = cfg.to_text();
    w.u64(config.size());
    w.bytes(config.data(), config.size());

    const auto params = model.params();
    std::uint64_t count = params.size();
    if (state != nullptr) count += 2 * params.size() + 3;
    w.u64(count);
    for (const auto& [name, p] : params) w.tensor(name, p.shape(), p.values());

    if (state != nullptr) {
        auto moments = [&](const char* tag, const ParamMapT<float>& group, const AdamT<float>& adam) {
            for (std::size_t i = 0; i < group.size(); ++i) {
                w.tensor(std::string("opt.m.") + group[i].first, group[i].second.shape(), adam.m[i]);
                w.tensor(std::string("opt.v.") + group[i].first, group[i].second.shape(), adam.v[i]);
            }
            (void)tag;
        };
        auto rp = model.rescale_params();
        auto fp = model.flow_params();
        moments("rescale", rp, state->adam_rescale);
        moments("flow", fp, state->adam_flow);
        w.tensor("opt.t.rescale", Shape{1}, {static_cast<float>(state->adam_rescale.t)});
        w.tensor("opt.t.flow", Shape{1}, {static_cast<float>(state->adam_flow.t)});
        w.tensor("opt.iter", Shape{1}, {static_cast<float>(state->iter)});
    }
    w.out.flush();
    if (!w.out) raise(ErrorCode::CorruptFile, "write failed for " + path);
}

RescaleModelT<float> checkpoint_load(const std::string& path, TrainConfig* cfg_out,
                                     TrainStateT<float>* state_out) {
    Reader r(path);
    char magic[4];
    r.bytes(magic, 4);
    if (std::memcmp(magic, kMagic, 4) != 0)
        raise(ErrorCode::CorruptFile, "bad magic in " + path);
    const std::uint32_t version = r.u32();
    if (version != kCheckpointVersion)
        raise(ErrorCode::VersionMismatch, "checkpoint version " + std::to_string(version) +
                                              ", expected " + std::to_string(kCheckpointVersion));
    const std::uint64_t cfg_len = r.u64();
    const std::string config_text = r.str(static_cast<std::size_t>(cfg_len));
    TrainConfig cfg;
    try {
        cfg = TrainConfig::parse_text(config_text);
    } catch (const Error& e) {
        raise(ErrorCode::CorruptFile, std::string("embedded config invalid: ") + e.what());
    }

    const std::uint64_t count = r.u64();
    std::map<std::string, StoredTensor> stored;
    for (std::uint64_t i = 0; i < count; ++i) {
        const std::uint32_t name_len = r.u32();
        std::string name = r.str(name_len);
        const std::uint8_t dtype = r.u8();
        if (dtype != kDtypeF32)
            raise(ErrorCode::CorruptFile, "unsupported dtype code " + std::to_string(dtype));
        const std::uint8_t ndim = r.u8();
        if (ndim == 0 || ndim > 8) raise(ErrorCode::CorruptFile, "bad rank for tensor " + name);
        StoredTensor t;
        std::uint64_t n = 1;
        for (std::uint8_t d = 0; d < ndim; ++d) {
            const std::uint64_t dim = r.u64();
            if (dim == 0 || dim > (1ull << 32)) raise(ErrorCode::CorruptFile, "bad dim for tensor " + name);
            t.shape.push_back(static_cast<std::int64_t>(dim));
            n *= dim;
        }
        t.values.resize(static_cast<std::size_t>(n));
        r.bytes(t.values.data(), static_cast<std::size_t>(n) * sizeof(float));
        stored.emplace(std::move(name), std::move(t));
    }
    if (!r.done()) raise(ErrorCode::CorruptFile, "trailing bytes in " + path);

    auto model = RescaleModelT<float>::create(cfg.model, cfg.seed);
    auto params = model.params();
    for (auto& [name, p] : params) {
        auto it = stored.find(name);
        if (it == stored.end()) raise(ErrorCode::CorruptFile, "missing tensor " + name);
        if (it->second.shape != p.shape())
            raise(ErrorCode::CorruptFile, "shape mismatch for tensor " + name);
        p.mut_values() = it->second.values;
    }
    for (const auto& [name, t] : stored) {
        if (name.rfind("opt.", 0) == 0) continue;
        bool known = false;
        for (const auto& [pname, p] : params) {
            if (pname == name) { known = true; break; }
        }
        if (!known) raise(ErrorCode::CorruptFile, "unexpected tensor " + name);
    }

    if (state_out != nullptr) {
        *state_out = TrainStateT<float>::make(model);
        auto fill = [&](const ParamMapT<float>& group, AdamT<float>& adam) {
            for (std::size_t i = 0; i < group.size(); ++i) {
                auto im = stored.find("opt.m." + group[i].first);
                auto iv = stored.find("opt.v." + group[i].first);
                if (im == stored.end() || iv == stored.end()) return false;
                if (im->second.values.size() != adam.m[i].size() ||
                    iv->second.values.size() != adam.v[i].size())
                    raise(ErrorCode::CorruptFile, "optimizer moment shape mismatch for " + group[i].first);
                adam.m[i] = im->second.values;
                adam.v[i] = iv->second.values;
            }
            return true;
        };
        auto rp = model.rescale_params();
        auto fp = model.flow_params();
        const bool have_r = fill(rp, state_out->adam_rescale);
        const bool have_f = fill(fp, state_out->adam_flow);
        if (have_r && stored.count("opt.t.rescale"))
            state_out->adam_rescale.t = static_cast<std::int64_t>(stored.at("opt.t.rescale").values[0]);
        if (have_f && stored.count("opt.t.flow"))
            state_out->adam_flow.t = static_cast<std::int64_t>(stored.at("opt.t.flow").values[0]);
        if (stored.count("opt.iter"))
            state_out->iter = static_cast<std::int64_t>(stored.at("opt.iter").values[0]);
    }
    if (cfg_out != nullptr) *cfg_out = cfg;
    return model;
}

} // namespace fgrn
