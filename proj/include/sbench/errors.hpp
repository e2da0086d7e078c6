#pragma once

#include <stdexcept>
#include <string>

namespace sbench {

// Base for all library failures. The CLI exits 2 on validation errors
// (config_error, bad command lines) and 3 on everything else.
struct error : std::runtime_error {
    explicit error(const std::string& msg) : std::runtime_error(msg) {}
};

// Geometric or key-space input outside the declared domain.
struct domain_error : error {
    explicit domain_error(const std::string& msg) : error(msg) {}
};

// Page contents would not fit or violate the node class capacity.
struct layout_error : error {
    explicit layout_error(const std::string& msg) : error(msg) {}
};

// Malformed curve or policy structure.
struct structure_error : error {
    explicit structure_error(const std::string& msg) : error(msg) {}
};

// Filesystem-level failure (open/read/write).
struct io_error : error {
    explicit io_error(const std::string& msg) : error(msg) {}
};

// Bad configuration value or unusable workload/index combination.
struct config_error : error {
    explicit config_error(const std::string& msg) : error(msg) {}
};

}  // namespace sbench
