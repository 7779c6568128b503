#pragma once

#include <stdexcept>
#include <string>

namespace condosc {

/// A computation failed numerically (no convergence, non-physical result).
/// Validation problems use std::invalid_argument instead.
class numeric_error : public std::runtime_error {
public:
    explicit numeric_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace condosc
