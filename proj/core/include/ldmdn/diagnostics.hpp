#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace ldmdn {

struct DiagCheck {
  std::string name;
  double measured = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

struct DiagOptions {
  std::uint64_t seed = 0;
  int points = 40;                 // patch points in the random graph fixtures
  bool inject_asymmetry = false;   // perturbs one weight before the symmetry check
};

/// Graph, solver, dual and gradient invariants on random fixtures. A check
/// passes when measured <= tolerance.
std::vector<DiagCheck> run_diagnostics(const DiagOptions& opts);

void print_diagnostics(std::ostream& os, const std::vector<DiagCheck>& checks);

}  // namespace ldmdn
