// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "heal/prob_dist.hpp"

namespace heal {

enum class Domain { Target, General };

std::string_view to_string(Domain d);
/// Accepts "target" or "general"; anything else is a ValidationError.
Domain parse_domain(std::string_view s);

/// One generated response y_i together with everything measured while it was
/// sampled. Channels that an external trace may lack are left empty.
struct Trajectory {
  std::string prompt_id;
  Domain domain = Domain::Target;
  int index = 0;  // position within its rollout group

  std::vector<int> tokens;
  std::vector<double> step_entropies;  // H_t of the sampling distribution, nats
  std::vector<double> step_logprobs;   // log pi(o_t | .); empty when not recorded
  std::vector<ProbDist> step_dists;    // sampling distributions; may be empty
  std::vector<std::size_t> context_rows;  // simulator only: policy row per step

  std::optional<bool> correct;

  std::size_t length() const { return step_entropies.size(); }
  /// "<prompt_id>/<index>"
  std::string id() const;
};

}  // namespace heal
