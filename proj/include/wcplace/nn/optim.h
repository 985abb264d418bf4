// Copyright 2026 The wcplace Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef WCPLACE_NN_OPTIM_H_
#define WCPLACE_NN_OPTIM_H_

#include <string>

#include "json.hpp"
#include "wcplace/nn/autodiff.h"

namespace wcplace::nn {

// Linear interpolation from `start` at step 0 to `end` at step `total`,
// constant afterwards.
struct LinearSchedule {
  double start = 0.0;
  double end = 0.0;
  int total = 1;

  double value(int step) const;
};

// Plain gradient descent on a loss. Minimizing -J is gradient ascent on J.
class Sgd {
 public:
  explicit Sgd(LinearSchedule lr) : lr_(lr) {}

  double learning_rate() const { return lr_.value(step_); }
  int step_count() const { return step_; }
  // theta <- theta - lr * grad for every parameter, then advances the
  // schedule. Returns the L2 norm of the applied update.
  double step(ParamStore& params);

 private:
  LinearSchedule lr_;
  int step_ = 0;
};

inline constexpr int kCheckpointVersion = 1;

// {"version", "params": {name: {"shape": [rows, cols], "values": [...]}}}
nlohmann::json params_to_json(const ParamStore& params);
ParamStore params_from_json(const nlohmann::json& doc);

}  // namespace wcplace::nn

#endif  // WCPLACE_NN_OPTIM_H_
