#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "tllctl/core.hpp"

namespace tllctl::sizing {

/** Architecture summary for a lowered network: the number of affine pieces
 *  the lattice form carries, the number of selector groups, and the layer
 *  width chain (input, hidden..., output) of the rectifier lowering. */
struct ArchDescriptor {
  std::int64_t num_linear_fns = 0;
  std::int64_t num_selector_groups = 0;
  std::vector<std::int64_t> layer_widths;  // n, w1, ..., m

  void validate() const {
    if (num_linear_fns < 1) throw std::invalid_argument("ArchDescriptor: num_linear_fns < 1");
    if (num_selector_groups < 1 || num_selector_groups > num_linear_fns)
      throw std::invalid_argument("ArchDescriptor: selector group count out of range");
    for (auto w : layer_widths)
      if (w < 1) throw std::invalid_argument("ArchDescriptor: layer width < 1");
  }
};

}  // namespace tllctl::sizing

namespace tllctl::tll {

namespace detail {

inline std::int64_t checked_mul(std::int64_t a, std::int64_t b) {
  if (a != 0 && b > std::numeric_limits<std::int64_t>::max() / a)
    throw OverflowError("architecture width arithmetic overflow");
  return a * b;
}

inline std::int64_t checked_add(std::int64_t a, std::int64_t b) {
  if (b > std::numeric_limits<std::int64_t>::max() - a)
    throw OverflowError("architecture width arithmetic overflow");
  return a + b;
}

// One tree-reduction stage over `live` values: paired values spend a
// four-neuron min/max gadget, an odd straggler spends a two-neuron carry.
inline std::int64_t stage_width(std::int64_t live) {
  return checked_add(checked_mul(4, live / 2), 2 * (live % 2));
}

}  // namespace detail

/** Layer widths of the rectifier lowering for the worst case admitted by a
 *  region bound N: N selector groups, each selecting up to N affine
 *  functions.  Deterministic in (N, n, m); mirrors the width accounting of
 *  lower_to_relu exactly. */
inline sizing::ArchDescriptor arch_of_bound(std::int64_t N, int n, int m) {
  if (N < 1) throw std::invalid_argument("arch_of_bound: N must be >= 1");
  if (n < 1 || m < 1) throw std::invalid_argument("arch_of_bound: dimensions must be >= 1");

  sizing::ArchDescriptor d;
  d.num_linear_fns = N;
  d.num_selector_groups = N;
  d.layer_widths.push_back(n);

  if (N == 1) {
    // one affine map, one singleton group: a single linear layer
    d.layer_widths.push_back(m);
    return d;
  }

  // pair-encoded affine values, per output coordinate
  d.layer_widths.push_back(detail::checked_mul(2LL * N, m));

  std::int64_t group_live = N;  // values alive inside every group
  while (group_live > 1) {
    std::int64_t w = detail::checked_mul(detail::stage_width(group_live), N);  // N groups
    d.layer_widths.push_back(detail::checked_mul(w, m));
    group_live = (group_live + 1) / 2;
  }

  std::int64_t min_live = N;  // one value per group enters the min tree
  while (min_live > 1) {
    d.layer_widths.push_back(detail::checked_mul(detail::stage_width(min_live), m));
    min_live = (min_live + 1) / 2;
  }

  d.layer_widths.push_back(m);  // final affine read-out
  return d;
}

}  // namespace tllctl::tll
