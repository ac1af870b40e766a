#pragma once

#include <string>
#include <vector>

namespace mattekit {

struct GradCheckCase {
  std::string name;
  double max_rel_err = 0.0;
  double tolerance = 0.0;
  bool passed = false;
};

// Finite-difference checks for every differentiable op, each network stage,
// every loss, and the full network end to end (1×4×16×16, tiny widths).
// Deterministic: fixed internal seeds.
std::vector<GradCheckCase> run_gradcheck_suite(double epsilon = 1e-4);

bool all_passed(const std::vector<GradCheckCase>& cases);

}  // namespace mattekit
