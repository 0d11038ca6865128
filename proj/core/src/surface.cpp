#include "fbpnn/surface.hpp"

#include <stdexcept>

namespace fbpnn {

void SurfaceGridSpec::validate() const {
  for (const SurfaceAxis* axis : {&a, &b}) {
    if (axis->steps < 2) {
      throw std::invalid_argument("surface axis needs at least 2 steps");
    }
    if (!(axis->lo < axis->hi)) {
      throw std::invalid_argument("surface axis needs lo < hi");
    }
  }
}

SurfaceGrid sample_error_surface(const Mlp& network_template,
                                 const Dataset& dataset,
                                 const SurfaceGridSpec& grid) {
  grid.validate();
  dataset.validate(network_template.input_width,
                   network_template.output_width());

  SurfaceGrid result;
  result.a = grid.a;
  result.b = grid.b;
  result.values.resize(static_cast<size_t>(grid.a.steps) *
                       static_cast<size_t>(grid.b.steps));

  Mlp probe = network_template;
  for (int ia = 0; ia < grid.a.steps; ++ia) {
    set_param(probe, grid.a.param, grid.a.value_at(ia));
    for (int ib = 0; ib < grid.b.steps; ++ib) {
      set_param(probe, grid.b.param, grid.b.value_at(ib));
      result.values[static_cast<size_t>(ia) * static_cast<size_t>(grid.b.steps) +
                    static_cast<size_t>(ib)] = mean_squared_error(probe, dataset);
    }
  }
  return result;
}

}  // namespace fbpnn
