#include "core/scan_io.hpp"

#include <cstring>
#include <fstream>

#include <json.hpp>

namespace scafm {

namespace {

using nlohmann::json;

constexpr uint32_t kScafVersion = 1;

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
    out.push_back(static_cast<uint8_t>(v & 0xff));
    out.push_back(static_cast<uint8_t>((v >> 8) & 0xff));
    out.push_back(static_cast<uint8_t>((v >> 16) & 0xff));
    out.push_back(static_cast<uint8_t>((v >> 24) & 0xff));
}

uint32_t get_u32(const uint8_t* p) {
    return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
           (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}

} // namespace

std::vector<uint8_t> encode_scan(const ScanField& field) {
    field.validate();

    std::vector<uint8_t> out;
    out.reserve(13 + field.size() * 4 + 128);
    out.insert(out.end(), {'S', 'C', 'A', 'F'});
    put_u32(out, kScafVersion);
    put_u32(out, static_cast<uint32_t>(field.height));
    put_u32(out, static_cast<uint32_t>(field.width));
    out.push_back(static_cast<uint8_t>(field.channel));

    size_t payload_off = out.size();
    out.resize(payload_off + field.size() * 4);
    static_assert(sizeof(float) == 4);
    std::memcpy(out.data() + payload_off, field.data.data(), field.size() * 4);

    json trailer;
    trailer["physical_extent_um"] = {field.extent_w_um, field.extent_h_um};
    trailer["units"] = field.units;
    trailer["norm_state"] = field.norm_state == NormState::raw ? "raw" : "normalized";
    trailer["norm_min"] = static_cast<double>(field.norm_min);
    trailer["norm_max"] = static_cast<double>(field.norm_max);
    trailer["sample_id"] = field.sample_id;
    std::string t = trailer.dump();
    out.insert(out.end(), t.begin(), t.end());
    return out;
}

ScanField decode_scan(const std::vector<uint8_t>& bytes) {
    require(bytes.size() >= 4, ErrorCode::corruption, "scan file shorter than magic");
    require(std::memcmp(bytes.data(), "SCAF", 4) == 0, ErrorCode::format,
            "bad magic: not a SCAF file");
    require(bytes.size() >= 17, ErrorCode::corruption, "truncated SCAF header");

    uint32_t version = get_u32(bytes.data() + 4);
    require(version == kScafVersion, ErrorCode::format,
            "unsupported SCAF version " + std::to_string(version));

    uint32_t h = get_u32(bytes.data() + 8);
    uint32_t w = get_u32(bytes.data() + 12);
    uint8_t ch = bytes[16];
    require(h >= 1 && w >= 1, ErrorCode::corruption, "SCAF header has zero dimension");
    require(ch <= 1, ErrorCode::corruption, "SCAF header has unknown channel code");

    size_t payload = static_cast<size_t>(h) * w * 4;
    require(bytes.size() >= 17 + payload, ErrorCode::corruption,
            "truncated SCAF payload");

    ScanField f;
    f.height = static_cast<int>(h);
    f.width = static_cast<int>(w);
    f.channel = static_cast<Channel>(ch);
    f.data.resize(static_cast<size_t>(h) * w);
    std::memcpy(f.data.data(), bytes.data() + 17, payload);

    std::string t(bytes.begin() + 17 + payload, bytes.end());
    require(!t.empty(), ErrorCode::corruption, "missing SCAF metadata trailer");
    json trailer = json::parse(t, nullptr, false);
    require(!trailer.is_discarded(), ErrorCode::corruption,
            "unparseable SCAF metadata trailer");
    try {
        auto extent = trailer.at("physical_extent_um");
        f.extent_w_um = extent.at(0).get<double>();
        f.extent_h_um = extent.at(1).get<double>();
        f.units = trailer.at("units").get<std::string>();
        std::string ns = trailer.at("norm_state").get<std::string>();
        require(ns == "raw" || ns == "normalized", ErrorCode::corruption,
                "unknown norm_state in trailer: " + ns);
        f.norm_state = ns == "raw" ? NormState::raw : NormState::normalized;
        f.norm_min = trailer.at("norm_min").get<float>();
        f.norm_max = trailer.at("norm_max").get<float>();
        f.sample_id = trailer.at("sample_id").get<std::string>();
    } catch (const json::exception& e) {
        raise(ErrorCode::corruption, std::string("bad SCAF trailer: ") + e.what());
    }

    f.validate();
    return f;
}

void write_scan(const ScanField& field, const std::string& path) {
    std::vector<uint8_t> bytes = encode_scan(field);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    require(out.good(), ErrorCode::io, "cannot open for writing: " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    require(out.good(), ErrorCode::io, "write failed: " + path);
}

ScanField read_scan(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), ErrorCode::io, "cannot open for reading: " + path);
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                               std::istreambuf_iterator<char>());
    require(!in.bad(), ErrorCode::io, "read failed: " + path);
    return decode_scan(bytes);
}

} // namespace scafm
