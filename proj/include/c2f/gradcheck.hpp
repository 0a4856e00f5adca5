#pragma once
#include <functional>
#include <vector>

#include "c2f/tensor.hpp"

namespace c2f {

// Scalar-valued function under test: given a tape (nullptr = plain forward)
// and the input tensors (tracked when a tape is supplied), returns the loss.
using ScalarFn =
    std::function<Tensor(Tape*, const std::vector<Tensor>&)>;

struct GradCheckResult {
  double max_rel_err = 0.0;
  i64 coords_checked = 0;
};

// Central-difference check of reverse-mode gradients.
// rel err = |analytic - numeric| / max(1e-8, |analytic| + |numeric|), maxed
// over the probed coordinates. When max_coords_per_input > 0, a deterministic
// random subset of coordinates is probed per input (seeded).
GradCheckResult gradcheck(const ScalarFn& f, const std::vector<Tensor>& inputs,
                          double eps, i64 max_coords_per_input = -1,
                          u64 seed = 0);

}  // namespace c2f
