#pragma once

#include <cstdlib>
#include <string>
#include <vector>

#include "proposalkit/geometry.hpp"
#include "proposalkit/postprocess.hpp"
#include "proposalkit/random.hpp"

namespace testutil {

inline std::string data_dir() {
  if (const char* env = std::getenv("PROPOSALKIT_DATA")) return env;
  return "tests/data";
}

inline proposalkit::Box random_box(proposalkit::Rng& rng, double extent = 100.0,
                                   double min_side = 1.0) {
  const double w = rng.uniform(min_side, extent * 0.5);
  const double h = rng.uniform(min_side, extent * 0.5);
  const double x1 = rng.uniform(0.0, extent - w);
  const double y1 = rng.uniform(0.0, extent - h);
  return proposalkit::Box(x1, y1, x1 + w, y1 + h);
}

inline std::vector<proposalkit::Detection> random_detections(
    proposalkit::Rng& rng, int n, double extent = 100.0) {
  std::vector<proposalkit::Detection> dets;
  dets.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    dets.push_back(proposalkit::Detection{random_box(rng, extent),
                                          rng.uniform(0.0, 1.0),
                                          std::nullopt, 1});
  }
  return dets;
}

}  // namespace testutil
