#pragma once

#include <map>
#include <string>
#include <vector>

#include "gpqn/linalg.hpp"

namespace gpqn {

struct IterateRecord {
  int iteration = 0;
  Vector x;
  double cost = 0.0;
  double grad_norm = 0.0;
  double step = 0.0;
  std::string status;  // "ok", "ls_fail", "skip", ...
};

struct OptimizationTrace {
  std::vector<IterateRecord> iterates;
  std::map<std::string, std::string> header;  // hyperparameter echo
  bool failed = false;
  std::string failure;

  const IterateRecord& last() const { return iterates.back(); }
};

}  // namespace gpqn
