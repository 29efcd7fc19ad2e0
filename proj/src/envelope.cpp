#include "openfed/envelope.hpp"

#include <bit>
#include <cstring>
#include <limits>

#include <zlib.h>

namespace openfed {

const char* to_string(envelope_kind kind) {
    switch (kind) {
        case envelope_kind::global_model: return "GlobalModel";
        case envelope_kind::model_update: return "ModelUpdate";
        case envelope_kind::control_variate: return "ControlVariate";
        case envelope_kind::meta: return "Meta";
        case envelope_kind::join: return "Join";
        case envelope_kind::leave: return "Leave";
        case envelope_kind::abort: return "Abort";
    }
    return "?";
}

namespace {

constexpr std::uint64_t max_frame_bytes = std::numeric_limits<std::uint32_t>::max();

class frame_writer {
public:
    void u8(std::uint8_t v) { buf_.push_back(v); }

    void u16(std::uint16_t v) {
        buf_.push_back(static_cast<std::uint8_t>(v));
        buf_.push_back(static_cast<std::uint8_t>(v >> 8));
    }

    void u32(std::uint32_t v) {
        for (int shift = 0; shift < 32; shift += 8) {
            buf_.push_back(static_cast<std::uint8_t>(v >> shift));
        }
    }

    void u64(std::uint64_t v) {
        for (int shift = 0; shift < 64; shift += 8) {
            buf_.push_back(static_cast<std::uint8_t>(v >> shift));
        }
    }

    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

    void sized_string(const std::string& s, const char* what) {
        if (s.size() > std::numeric_limits<std::uint16_t>::max()) {
            throw payload_too_large(std::string(what) + " exceeds 65535 bytes");
        }
        u16(static_cast<std::uint16_t>(s.size()));
        buf_.insert(buf_.end(), s.begin(), s.end());
    }

    std::vector<std::uint8_t> take() { return std::move(buf_); }
    std::size_t size() const { return buf_.size(); }

private:
    std::vector<std::uint8_t> buf_;
};

class frame_reader {
public:
    frame_reader(const std::uint8_t* data, std::size_t size) : data_(data), size_(size) {}

    std::uint8_t u8() {
        need(1);
        return data_[pos_++];
    }

    std::uint16_t u16() {
        need(2);
        std::uint16_t v = static_cast<std::uint16_t>(data_[pos_]) |
                          static_cast<std::uint16_t>(data_[pos_ + 1]) << 8;
        pos_ += 2;
        return v;
    }

    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 3; i >= 0; --i) v = (v << 8) | data_[pos_ + i];
        pos_ += 4;
        return v;
    }

    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 7; i >= 0; --i) v = (v << 8) | data_[pos_ + i];
        pos_ += 8;
        return v;
    }

    double f64() { return std::bit_cast<double>(u64()); }

    std::string sized_string() {
        std::size_t len = u16();
        need(len);
        std::string s(reinterpret_cast<const char*>(data_ + pos_), len);
        pos_ += len;
        return s;
    }

    std::size_t pos() const { return pos_; }
    std::size_t remaining() const { return size_ - pos_; }

private:
    void need(std::size_t n) const {
        if (size_ - pos_ < n) throw truncated_frame("frame ends mid-field");
    }

    const std::uint8_t* data_;
    std::size_t size_;
    std::size_t pos_ = 0;
};

std::uint32_t crc32_ieee(const std::uint8_t* data, std::size_t size) {
    return static_cast<std::uint32_t>(
        ::crc32(0ul, reinterpret_cast<const Bytef*>(data), static_cast<uInt>(size)));
}

}  // namespace

std::vector<std::uint8_t> encode(const envelope& e) {
    frame_writer w;
    w.u8(frame_magic0);
    w.u8(frame_magic1);
    w.u8(frame_version);
    w.u8(static_cast<std::uint8_t>(e.kind));
    w.u64(e.round);
    w.u32(e.group_id);
    w.sized_string(e.sender, "sender id");

    if (e.aux.size() > std::numeric_limits<std::uint16_t>::max()) {
        throw payload_too_large("aux map exceeds 65535 entries");
    }
    w.u16(static_cast<std::uint16_t>(e.aux.size()));
    for (const auto& [key, value] : e.aux) {
        w.sized_string(key, "aux key");
        w.sized_string(value, "aux value");
    }

    const param_vector::map_type* tensors = nullptr;
    static const param_vector::map_type no_tensors;
    tensors = e.params ? &e.params->entries() : &no_tensors;
    if (tensors->size() > std::numeric_limits<std::uint16_t>::max()) {
        throw payload_too_large("tensor map exceeds 65535 entries");
    }
    w.u16(static_cast<std::uint16_t>(tensors->size()));
    for (const auto& [name, values] : *tensors) {
        w.sized_string(name, "tensor name");
        if (values.size() > std::numeric_limits<std::uint32_t>::max()) {
            throw payload_too_large("tensor '" + name + "' exceeds u32 element count");
        }
        w.u32(static_cast<std::uint32_t>(values.size()));
        for (double v : values) w.f64(v);
    }

    if (static_cast<std::uint64_t>(w.size()) + 4 > max_frame_bytes) {
        throw payload_too_large("frame exceeds 2^32 - 1 bytes");
    }

    std::vector<std::uint8_t> frame = w.take();
    const std::uint32_t crc = crc32_ieee(frame.data() + 3, frame.size() - 3);
    for (int shift = 0; shift < 32; shift += 8) {
        frame.push_back(static_cast<std::uint8_t>(crc >> shift));
    }
    return frame;
}

envelope decode(const std::uint8_t* data, std::size_t size) {
    if (size < 2) throw truncated_frame("frame shorter than magic");
    if (data[0] != frame_magic0 || data[1] != frame_magic1) {
        throw bad_magic("frame does not start with 0x4F 0x46");
    }
    if (size < 3) throw truncated_frame("frame ends before version byte");
    if (data[2] != frame_version) {
        throw unsupported_version("unsupported frame version " + std::to_string(data[2]));
    }
    if (size < 3 + 4) throw truncated_frame("frame shorter than header plus checksum");

    // checksum covers everything between the version byte and the trailing crc
    const std::size_t body_end = size - 4;
    std::uint32_t stored = 0;
    for (int i = 3; i >= 0; --i) stored = (stored << 8) | data[body_end + i];
    const std::uint32_t computed = crc32_ieee(data + 3, body_end - 3);
    if (stored != computed) {
        throw checksum_mismatch("frame checksum mismatch");
    }

    frame_reader r(data + 3, body_end - 3);
    envelope e;
    const std::uint8_t kind = r.u8();
    if (kind < 1 || kind > 7) {
        throw malformed_frame("unknown message kind " + std::to_string(kind));
    }
    e.kind = static_cast<envelope_kind>(kind);
    e.round = r.u64();
    e.group_id = r.u32();
    e.sender = r.sized_string();

    const std::uint16_t aux_count = r.u16();
    for (std::uint16_t i = 0; i < aux_count; ++i) {
        std::string key = r.sized_string();
        std::string value = r.sized_string();
        e.aux.emplace(std::move(key), std::move(value));
    }

    const std::uint16_t tensor_count = r.u16();
    if (tensor_count > 0) {
        param_vector::map_type tensors;
        for (std::uint16_t i = 0; i < tensor_count; ++i) {
            std::string name = r.sized_string();
            const std::uint32_t elements = r.u32();
            if (elements == 0) throw malformed_frame("tensor '" + name + "' has zero elements");
            std::vector<double> values(elements);
            for (std::uint32_t j = 0; j < elements; ++j) values[j] = r.f64();
            tensors.emplace(std::move(name), std::move(values));
        }
        e.params = param_vector(std::move(tensors));
    }

    if (r.remaining() != 0) {
        throw malformed_frame("frame has trailing bytes after tensor section");
    }
    return e;
}

envelope decode(const std::vector<std::uint8_t>& frame) {
    return decode(frame.data(), frame.size());
}

}  // namespace openfed
