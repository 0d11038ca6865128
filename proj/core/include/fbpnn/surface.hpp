#pragma once

#include <string>
#include <vector>

#include "fbpnn/trainer.hpp"

namespace fbpnn {

struct SurfaceAxis {
  ParamRef param;
  std::string name;
  double lo{0.0};
  double hi{1.0};
  int steps{2};

  double value_at(int index) const {
    return lo + (hi - lo) * static_cast<double>(index) /
                    static_cast<double>(steps - 1);
  }
};

struct SurfaceGridSpec {
  SurfaceAxis a;
  SurfaceAxis b;

  void validate() const;  // steps >= 2, lo < hi on both axes
};

/// Mean squared error sampled over a 2-D parameter grid; values are
/// row-major with axis a outermost.
struct SurfaceGrid {
  SurfaceAxis a;
  SurfaceAxis b;
  std::vector<double> values;

  double value_at(int ia, int ib) const {
    return values[static_cast<size_t>(ia) * static_cast<size_t>(b.steps) +
                  static_cast<size_t>(ib)];
  }
};

/// Evaluates mean_squared_error over the grid, installing each (a, b) pair
/// into a copy of the template network. Pure: same inputs, same grid.
SurfaceGrid sample_error_surface(const Mlp& network_template,
                                 const Dataset& dataset,
                                 const SurfaceGridSpec& grid);

}  // namespace fbpnn
