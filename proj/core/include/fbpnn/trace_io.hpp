#pragma once

#include <filesystem>
#include <string>

#include "fbpnn/surface.hpp"
#include "fbpnn/trainer.hpp"

namespace fbpnn {

struct RunSummary;

/// One real with 17 significant digits, enough to round-trip any double.
std::string format_real(double value);

/// Columns: iteration,f_hat,order_v,<tracked...>,saddle_perturbed.
void write_trace_csv(const std::filesystem::path& path, const TrainTrace& trace);
TrainTrace read_trace_csv(const std::filesystem::path& path);

void write_summary_json(const std::filesystem::path& path,
                        const RunSummary& summary);

/// Two axis-description rows (name, lo, hi, steps), then a header row and
/// one row per grid cell in row-major order.
void write_surface_csv(const std::filesystem::path& path,
                       const SurfaceGrid& grid);

}  // namespace fbpnn
