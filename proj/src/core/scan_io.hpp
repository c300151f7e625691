#pragma once

#include <string>
#include <vector>

#include "core/field.hpp"

namespace scafm {

// "SCAF" container, little-endian:
//   magic "SCAF" | version u32 | H u32 | W u32 | channel u8
//   | H*W float32 row-major | UTF-8 JSON trailer to EOF
// Trailer keys: physical_extent_um [w,h], units, norm_state, norm_min,
// norm_max, sample_id. Round-trips float payloads bit-exactly.
void write_scan(const ScanField& field, const std::string& path);
ScanField read_scan(const std::string& path);

// In-memory variants of the same encoding. write_scan/read_scan are thin
// file wrappers around these.
std::vector<uint8_t> encode_scan(const ScanField& field);
ScanField decode_scan(const std::vector<uint8_t>& bytes);

} // namespace scafm
