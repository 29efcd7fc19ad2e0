#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "openfed/param.hpp"

namespace openfed {

// Wire message kinds. GlobalModel/ModelUpdate/ControlVariate carry params;
// Join/Leave/Abort never do; Meta carries auxiliary key/values only.
enum class envelope_kind : std::uint8_t {
    global_model = 1,
    model_update = 2,
    control_variate = 3,
    meta = 4,
    join = 5,
    leave = 6,
    abort = 7,
};

const char* to_string(envelope_kind kind);

// The unit of message flow: model payload plus free-form auxiliary metadata
// (learning rate, round number, sample counts, ...). Aux values are strings
// so the protocol stays schema-free.
struct envelope {
    envelope_kind kind = envelope_kind::meta;
    std::uint64_t round = 0;
    std::string sender;
    std::uint32_t group_id = 0;
    std::optional<param_vector> params;
    std::map<std::string, std::string> aux;  // standard keys: lr, round, num_samples, wall_ms

    friend bool operator==(const envelope&, const envelope&) = default;
};

inline constexpr std::uint8_t frame_magic0 = 0x4f;  // 'O'
inline constexpr std::uint8_t frame_magic1 = 0x46;  // 'F'
inline constexpr std::uint8_t frame_version = 1;

// Frame layout (little-endian):
//   magic 0x4F 0x46 | version u8 | kind u8 | round u64 | group_id u32 |
//   sender-len u16 + sender | aux-count u16, per pair (key-len u16 + key,
//   val-len u16 + val) | tensor-count u16, per tensor (name-len u16 + name,
//   element-count u32, elements f64) | crc32 u32 over all bytes after the
//   version byte.
// Deterministic for a given envelope. Throws payload_too_large when the
// frame or any length field would overflow its width.
std::vector<std::uint8_t> encode(const envelope& e);

// Exact inverse of encode. Throws bad_magic, unsupported_version,
// truncated_frame, checksum_mismatch, malformed_frame.
envelope decode(const std::uint8_t* data, std::size_t size);
envelope decode(const std::vector<std::uint8_t>& frame);

}  // namespace openfed
