// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <vector>

namespace collatz {

/// Split R-hat: every chain is cut in half and the potential scale reduction
/// is computed over the 2M half-chains. Chains must have equal length >= 4.
double split_rhat(std::span<const std::vector<double>> chains);

/// Multi-chain effective sample size with Geyer's initial monotone sequence
/// estimator on the combined autocorrelation.
double effective_sample_size(std::span<const std::vector<double>> chains);

}  // namespace collatz
