#pragma once

#include <vector>

namespace speechmark {

struct RankInfo {
  std::vector<double> ranks;  // 1-based midranks, aligned with the input
  double tie_term = 0.0;      // sum of t^3 - t over tie groups
  bool has_ties = false;
};

/// Midranks of a sample: tied values share the average of the ranks they
/// would occupy. Exact in floating point (midranks are multiples of 1/2).
RankInfo midranks(const std::vector<double>& values);

}  // namespace speechmark
