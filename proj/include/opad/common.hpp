#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace opad {

using Vec = std::vector<double>;

// Bad user-supplied configuration (sizes, missing keys, invalid ranges).
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Violation of an internal contract (pool disjointness, regime guards, ...).
struct IntegrityError : std::runtime_error {
    explicit IntegrityError(const std::string& what) : std::runtime_error(what) {}
};

struct IoError : std::runtime_error {
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

enum class TaskKind : std::uint32_t { Detection = 0, Sequence = 1 };

inline const char* task_name(TaskKind t) {
    return t == TaskKind::Detection ? "detection" : "sequence";
}

}  // namespace opad
