#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace openfed {

// Base class for every error raised by this library.
class error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define OPENFED_DEFINE_ERROR(name)          \
    class name : public error {             \
    public:                                 \
        using error::error;                 \
    }

// parameter arithmetic
OPENFED_DEFINE_ERROR(shape_mismatch);
OPENFED_DEFINE_ERROR(non_finite_value);

// topology construction and decomposition
OPENFED_DEFINE_ERROR(duplicate_node);
OPENFED_DEFINE_ERROR(unknown_node);
OPENFED_DEFINE_ERROR(self_loop);
OPENFED_DEFINE_ERROR(duplicate_edge);
OPENFED_DEFINE_ERROR(cyclic_leadership);

// federated optimizer
OPENFED_DEFINE_ERROR(empty_update_set);
OPENFED_DEFINE_ERROR(zero_total_weight);
OPENFED_DEFINE_ERROR(unknown_client);

// wire codec
OPENFED_DEFINE_ERROR(payload_too_large);
OPENFED_DEFINE_ERROR(bad_magic);
OPENFED_DEFINE_ERROR(unsupported_version);
OPENFED_DEFINE_ERROR(truncated_frame);
OPENFED_DEFINE_ERROR(checksum_mismatch);
OPENFED_DEFINE_ERROR(malformed_frame);

// transport
OPENFED_DEFINE_ERROR(unknown_peer);
OPENFED_DEFINE_ERROR(connection_lost);
OPENFED_DEFINE_ERROR(timeout_error);

// training
OPENFED_DEFINE_ERROR(non_finite_loss);

// experiment harness
OPENFED_DEFINE_ERROR(config_error);
OPENFED_DEFINE_ERROR(runtime_abort);
OPENFED_DEFINE_ERROR(io_error);

#undef OPENFED_DEFINE_ERROR

// Raised when a round closes with fewer updates than the configured minimum.
// Carries what did arrive so callers can report the aborted round.
class insufficient_participants : public error {
public:
    insufficient_participants(const std::string& msg, std::uint32_t group,
                              std::vector<std::string> arrived_ids)
        : error(msg), group_id(group), arrived(std::move(arrived_ids)) {}

    std::uint32_t group_id;
    std::vector<std::string> arrived;
};

}  // namespace openfed
