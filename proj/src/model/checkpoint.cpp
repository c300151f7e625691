#include "model/checkpoint.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <map>

namespace scafm {

using nlohmann::json;

namespace {

constexpr uint32_t kCkptVersion = 1;

void put_u32(std::ostream& out, uint32_t v) {
    uint8_t b[4] = {static_cast<uint8_t>(v & 0xff), static_cast<uint8_t>((v >> 8) & 0xff),
                    static_cast<uint8_t>((v >> 16) & 0xff), static_cast<uint8_t>(v >> 24)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

uint32_t get_u32(std::istream& in) {
    uint8_t b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    require(in.good(), ErrorCode::corruption, "truncated checkpoint");
    return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
           (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

void write_entry(std::ostream& out, const std::string& name, const Tensor<float>& t) {
    put_u32(out, static_cast<uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put_u32(out, static_cast<uint32_t>(t.ndim()));
    for (int i = 0; i < t.ndim(); ++i) put_u32(out, static_cast<uint32_t>(t.dim(i)));
    out.write(reinterpret_cast<const char*>(t.data()),
              static_cast<std::streamsize>(t.numel() * 4));
}

std::pair<std::string, Tensor<float>> read_entry(std::istream& in) {
    uint32_t name_len = get_u32(in);
    require(name_len > 0 && name_len < 4096, ErrorCode::corruption,
            "implausible tensor name length");
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    uint32_t ndim = get_u32(in);
    require(ndim >= 1 && ndim <= 8, ErrorCode::corruption, "implausible tensor rank");
    std::vector<int> shape(ndim);
    for (auto& d : shape) d = static_cast<int>(get_u32(in));
    Tensor<float> t(shape);
    in.read(reinterpret_cast<char*>(t.data()),
            static_cast<std::streamsize>(t.numel() * 4));
    require(in.good(), ErrorCode::corruption, "truncated tensor payload for " + name);
    return {std::move(name), std::move(t)};
}

json meta_to_json(const TrainingMeta& m) {
    json j;
    j["epoch"] = m.epoch;
    j["step"] = m.step;
    j["channel"] = m.channel;
    j["checkpoint_id"] = m.checkpoint_id;
    j["lineage"] = m.lineage;
    json hist = json::array();
    for (const auto& e : m.history)
        hist.push_back({{"epoch", e.epoch},
                        {"train_loss", e.train_loss},
                        {"val_loss", e.val_loss},
                        {"val_psnr", e.val_psnr}});
    j["history"] = hist;
    return j;
}

TrainingMeta meta_from_json(const json& j) {
    TrainingMeta m;
    m.epoch = j.value("epoch", 0);
    m.step = j.value("step", int64_t{0});
    m.channel = j.value("channel", std::string("current"));
    m.checkpoint_id = j.value("checkpoint_id", std::string());
    m.lineage = j.value("lineage", std::vector<std::string>{});
    if (j.contains("history"))
        for (const auto& e : j["history"])
            m.history.push_back({e.value("epoch", 0), e.value("train_loss", 0.0),
                                 e.value("val_loss", 0.0), e.value("val_psnr", 0.0)});
    return m;
}

} // namespace

json model_config_to_json(const ModelConfig& cfg) {
    return json{{"sigma", cfg.sigma},
                {"embed_dim", cfg.embed_dim},
                {"rstb_count", cfg.rstb_count},
                {"stl_per_rstb", cfg.stl_per_rstb},
                {"window_size", cfg.window_size},
                {"num_heads", cfg.num_heads},
                {"in_channels", cfg.in_channels},
                {"mlp_ratio", cfg.mlp_ratio}};
}

ModelConfig model_config_from_json(const json& j) {
    ModelConfig cfg;
    require(j.is_object(), ErrorCode::config, "model config must be a JSON object");
    for (auto& [key, val] : j.items()) {
        try {
            if (key == "sigma") cfg.sigma = val.get<int>();
            else if (key == "embed_dim") cfg.embed_dim = val.get<int>();
            else if (key == "rstb_count") cfg.rstb_count = val.get<int>();
            else if (key == "stl_per_rstb") cfg.stl_per_rstb = val.get<int>();
            else if (key == "window_size") cfg.window_size = val.get<int>();
            else if (key == "num_heads") cfg.num_heads = val.get<int>();
            else if (key == "in_channels") cfg.in_channels = val.get<int>();
            else if (key == "mlp_ratio") cfg.mlp_ratio = val.get<double>();
            else raise(ErrorCode::config, "unknown model config key: " + key);
        } catch (const json::exception& e) {
            raise(ErrorCode::config, "bad model config value for '" + key + "': " + e.what());
        }
    }
    cfg.validate();
    return cfg;
}

Checkpoint Checkpoint::from_model(const SwinUpsampler<float>& model, TrainingMeta meta) {
    Checkpoint c;
    c.config = model.config();
    c.meta = std::move(meta);
    for (const auto& p : model.params())
        c.tensors.emplace_back(p.name, *p.value);
    c.meta.checkpoint_id = compute_checkpoint_id(c);
    return c;
}

void Checkpoint::apply_to(SwinUpsampler<float>& model) const {
    require(model.config().sigma == config.sigma, ErrorCode::config,
            "checkpoint sigma does not match model sigma");
    std::map<std::string, const Tensor<float>*> by_name;
    for (const auto& [name, t] : tensors) by_name[name] = &t;
    size_t used = 0;
    for (auto& p : model.params()) {
        auto it = by_name.find(p.name);
        require(it != by_name.end(), ErrorCode::config,
                "checkpoint is missing parameter " + p.name);
        require(it->second->shape() == p.value->shape(), ErrorCode::config,
                "checkpoint shape mismatch for " + p.name + ": " +
                    it->second->shape_str() + " vs " + p.value->shape_str());
        *p.value = *it->second;
        ++used;
    }
    require(used == by_name.size(), ErrorCode::config,
            "checkpoint carries parameters unknown to this architecture");
}

std::string compute_checkpoint_id(const Checkpoint& ckpt) {
    uint64_t h = 0xcbf29ce484222325ull;
    auto feed = [&](const void* p, size_t n) {
        const uint8_t* b = static_cast<const uint8_t*>(p);
        for (size_t i = 0; i < n; ++i) {
            h ^= b[i];
            h *= 0x100000001b3ull;
        }
    };
    for (const auto& [name, t] : ckpt.tensors) {
        feed(name.data(), name.size());
        feed(t.data(), static_cast<size_t>(t.numel()) * 4);
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    require(out.good(), ErrorCode::io, "cannot open for writing: " + path);
    out.write("SCKP", 4);
    put_u32(out, kCkptVersion);
    json header;
    header["config"] = model_config_to_json(ckpt.config);
    header["meta"] = meta_to_json(ckpt.meta);
    header["opt_step"] = ckpt.opt_step;
    std::string hs = header.dump();
    put_u32(out, static_cast<uint32_t>(hs.size()));
    out.write(hs.data(), static_cast<std::streamsize>(hs.size()));
    put_u32(out, static_cast<uint32_t>(ckpt.tensors.size() + ckpt.opt_state.size()));
    for (const auto& [name, t] : ckpt.tensors) write_entry(out, name, t);
    for (const auto& [name, t] : ckpt.opt_state) write_entry(out, "opt." + name, t);
    require(out.good(), ErrorCode::io, "write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), ErrorCode::io, "cannot open for reading: " + path);
    char magic[4];
    in.read(magic, 4);
    require(in.good() && std::memcmp(magic, "SCKP", 4) == 0, ErrorCode::format,
            "bad magic: not a checkpoint file");
    uint32_t version = get_u32(in);
    require(version == kCkptVersion, ErrorCode::format, "unsupported checkpoint version");
    uint32_t hlen = get_u32(in);
    std::string hs(hlen, '\0');
    in.read(hs.data(), hlen);
    require(in.good(), ErrorCode::corruption, "truncated checkpoint header");
    json header = json::parse(hs, nullptr, false);
    require(!header.is_discarded(), ErrorCode::corruption, "unparseable checkpoint header");

    Checkpoint c;
    c.config = model_config_from_json(header.at("config"));
    c.meta = meta_from_json(header.at("meta"));
    c.opt_step = header.value("opt_step", int64_t{0});
    uint32_t n = get_u32(in);
    for (uint32_t i = 0; i < n; ++i) {
        auto [name, t] = read_entry(in);
        if (name.rfind("opt.", 0) == 0)
            c.opt_state.emplace_back(name.substr(4), std::move(t));
        else
            c.tensors.emplace_back(std::move(name), std::move(t));
    }
    return c;
}

Tensor<float> field_to_tensor(const ScanField& f) {
    Tensor<float> t({1, f.height, f.width});
    std::copy(f.data.begin(), f.data.end(), t.data());
    return t;
}

ScanField upsample_field(const SwinUpsampler<float>& model, const ScanField& x) {
    x.validate();
    require(x.norm_state == NormState::normalized, ErrorCode::state,
            "model input must be normalized");
    int s = model.config().sigma;
    Tensor<float> out = model.forward(field_to_tensor(x), nullptr);

    ScanField y = x;
    y.height = x.height * s;
    y.width = x.width * s;
    y.data.resize(static_cast<size_t>(y.height) * y.width);
    for (size_t i = 0; i < y.data.size(); ++i)
        y.data[i] = std::clamp(out[static_cast<int64_t>(i)], 0.0f, 1.0f);
    return y;
}

} // namespace scafm
