#pragma once

#include <stdexcept>
#include <string>

namespace kimura {

inline constexpr const char* kVersion = "0.1.0";

/// A computation stopped because a node, memory or time budget ran out.
struct BudgetExhausted : std::runtime_error {
  explicit BudgetExhausted(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace kimura
