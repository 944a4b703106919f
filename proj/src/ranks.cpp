#include "speechmark/ranks.hpp"

#include <algorithm>
#include <cstddef>
#include <numeric>

namespace speechmark {

RankInfo midranks(const std::vector<double>& values) {
  const std::size_t n = values.size();
  RankInfo info;
  info.ranks.assign(n, 0.0);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });

  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    // positions i..j (0-based) share the midrank (i+1 + j+1) / 2
    const double rank = 0.5 * static_cast<double>(i + j + 2);
    const double t = static_cast<double>(j - i + 1);
    if (t > 1.0) {
      info.has_ties = true;
      info.tie_term += t * t * t - t;
    }
    for (std::size_t k = i; k <= j; ++k) info.ranks[order[k]] = rank;
    i = j + 1;
  }
  return info;
}

}  // namespace speechmark
