#pragma once

#include "run_config.hpp"

namespace glemb::cli {

// Exit codes: 0 success, 1 verification failure (check), 2 I/O or config
// error, 3 numerical divergence during training.
inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitDiverged = 3;

int cmd_gen_data(const RunConfig& config);
int cmd_train(const RunConfig& config);
int cmd_eval(const RunConfig& config);
int cmd_check(const RunConfig& config);

}  // namespace glemb::cli
