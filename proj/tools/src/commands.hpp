#pragma once

#include "pipeline.hpp"

namespace morsenorm::cli {

int cmd_analyze(const Options& opts);
int cmd_normalize(const Options& opts);
int cmd_conjugate(const Options& opts);
int cmd_fixedpoint(const Options& opts);
int cmd_verify(const Options& opts);

/// Loads the problem file and applies --order.
ProblemSpec load_spec(const Options& opts);

}  // namespace morsenorm::cli
