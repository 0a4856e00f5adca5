#include "c2f/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "c2f/rng.hpp"

namespace c2f {

GradCheckResult gradcheck(const ScalarFn& f, const std::vector<Tensor>& inputs,
                          double eps, i64 max_coords_per_input, u64 seed) {
  // Analytic pass.
  Tape tape;
  std::vector<Tensor> tracked;
  tracked.reserve(inputs.size());
  for (const Tensor& in : inputs)
    tracked.push_back(in.tracked_as(&tape, tape.leaf(in.size())));
  const Tensor loss = f(&tape, tracked);
  require(loss.size() == 1, "gradcheck: function must be scalar-valued");
  tape.backward(loss);

  std::vector<std::vector<double>> analytic;
  for (const Tensor& tr : tracked) analytic.push_back(tape.grad_of(tr));

  Rng rng(seed);
  GradCheckResult res;
  for (size_t which = 0; which < inputs.size(); ++which) {
    const Tensor& in = inputs[which];
    const i64 n = in.size();
    std::vector<i64> coords(n);
    for (i64 i = 0; i < n; ++i) coords[i] = i;
    if (max_coords_per_input > 0 && n > max_coords_per_input) {
      rng.shuffle(coords);
      coords.resize(max_coords_per_input);
      std::sort(coords.begin(), coords.end());
    }
    for (i64 c : coords) {
      auto probe = [&](double delta) {
        std::vector<double> vals = in.vec();
        vals[c] += delta;
        std::vector<Tensor> shifted = inputs;
        shifted[which] = Tensor::from(in.shape(), std::move(vals));
        return f(nullptr, shifted).item();
      };
      const double numeric = (probe(eps) - probe(-eps)) / (2.0 * eps);
      const double a = analytic[which][c];
      const double err =
          std::abs(a - numeric) / std::max(1e-8, std::abs(a) + std::abs(numeric));
      res.max_rel_err = std::max(res.max_rel_err, err);
      ++res.coords_checked;
    }
  }
  return res;
}

}  // namespace c2f
