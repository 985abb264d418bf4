// Copyright 2026 The wcplace Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef WCPLACE_STATS_H_
#define WCPLACE_STATS_H_

#include <vector>

namespace wcplace {

double mean(const std::vector<double>& xs);
// Sample standard deviation (n - 1); 0 for fewer than two values.
double stddev(const std::vector<double>& xs);

// Both throw std::invalid_argument on length mismatch, fewer than two points,
// or a constant series.
double pearson(const std::vector<double>& xs, const std::vector<double>& ys);
// Pearson correlation of ranks, ties sharing their average rank.
double spearman(const std::vector<double>& xs, const std::vector<double>& ys);

std::vector<double> average_ranks(const std::vector<double>& xs);

}  // namespace wcplace

#endif  // WCPLACE_STATS_H_
