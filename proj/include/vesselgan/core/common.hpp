#ifndef VESSELGAN_CORE_COMMON_HPP
#define VESSELGAN_CORE_COMMON_HPP

#include <cstdint>
#include <stdexcept>
#include <string>

namespace vesselgan {

inline constexpr const char* kVersion = "0.1.0";

// Error taxonomy; the CLI maps these onto exit codes.
struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
// Bad parameters, impossible layer chains, malformed config files.
struct config_error : error {
    using error::error;
};
// Dataset integrity problems, unreadable or malformed input files.
struct data_error : error {
    using error::error;
};
// Non-finite values where finite ones are required.
struct numeric_error : error {
    using error::error;
};
// Serialization containers (VGPS/checkpoint) with bad magic or truncation.
struct io_error : error {
    using error::error;
};

}  // namespace vesselgan

#endif
