#pragma once

#include <string_view>

namespace unlearn {

enum class LossId { squared, logistic };

std::string_view to_string(LossId id) noexcept;

/// Accepts "squared" and "logistic"; throws InvalidArgument otherwise.
LossId parse_loss_id(std::string_view text);

}  // namespace unlearn
