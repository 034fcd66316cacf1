#pragma once

#include <span>

#include "unlearn/data.hpp"
#include "unlearn/loss_id.hpp"

namespace unlearn {

// Per-dataset losses are sums over rows, not means.
//   squared:  (y - x^T theta)^2, no 1/2 factor, so gradients carry a -2.
//   logistic: log(1 + exp(x^T theta)) - y x^T theta with y in {0, 1}.

double loss_value(LossId loss, std::span<const double> theta, const Dataset& d);

Vector loss_grad(LossId loss, std::span<const double> theta, const Dataset& d);

/// Squared-loss gradient from normalized moments: -2 n (m - sigma theta).
Vector squared_loss_grad(const SufficientStats& stats, std::span<const double> theta);

/// Throws InvalidArgument for logistic loss when some response is not 0 or 1.
void check_responses(LossId loss, const Dataset& d);

}  // namespace unlearn
