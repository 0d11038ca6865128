#include "fbpnn/trace_io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "fbpnn/experiments.hpp"

namespace fbpnn {

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot open " + path.string() + " for writing");
  }
  return out;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

double parse_real(const std::string& text) {
  double value = 0.0;
  const auto* begin = text.data();
  const auto* end = text.data() + text.size();
  const auto [ptr, err] = std::from_chars(begin, end, value);
  if (err != std::errc() || ptr != end) {
    throw std::runtime_error("bad numeric field: '" + text + "'");
  }
  return value;
}

}  // namespace

std::string format_real(double value) {
  char buffer[64];
  std::snprintf(buffer, sizeof buffer, "%.17g", value);
  return buffer;
}

void write_trace_csv(const std::filesystem::path& path,
                     const TrainTrace& trace) {
  std::ofstream out = open_out(path);
  out << "iteration,f_hat,order_v";
  for (const std::string& name : trace.tracked_names) out << ',' << name;
  out << ",saddle_perturbed\n";
  for (const TrainTraceRow& row : trace.rows) {
    out << row.iteration << ',' << format_real(row.f_hat) << ','
        << format_real(row.order_v);
    for (double v : row.tracked) out << ',' << format_real(v);
    out << ',' << (row.saddle_perturbed ? 1 : 0) << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

TrainTrace read_trace_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());

  std::string line;
  if (!std::getline(in, line)) {
    throw std::runtime_error("empty trace file: " + path.string());
  }
  const std::vector<std::string> header = split_csv_line(line);
  if (header.size() < 4 || header[0] != "iteration" || header[1] != "f_hat" ||
      header[2] != "order_v" || header.back() != "saddle_perturbed") {
    throw std::runtime_error("unexpected trace header in " + path.string());
  }

  TrainTrace trace;
  trace.tracked_names.assign(header.begin() + 3, header.end() - 1);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::vector<std::string> fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      throw std::runtime_error("ragged trace row in " + path.string());
    }
    TrainTraceRow row;
    row.iteration = static_cast<long>(parse_real(fields[0]));
    row.f_hat = parse_real(fields[1]);
    row.order_v = parse_real(fields[2]);
    for (size_t i = 3; i + 1 < fields.size(); ++i) {
      row.tracked.push_back(parse_real(fields[i]));
    }
    row.saddle_perturbed = fields.back() == "1";
    trace.rows.push_back(std::move(row));
  }
  return trace;
}

void write_summary_json(const std::filesystem::path& path,
                        const RunSummary& summary) {
  nlohmann::json j;
  j["experiment"] = summary.experiment_id;
  j["mode"] = summary.mode;
  j["final_f_hat"] = summary.final_f_hat;
  j["tracked"] = nlohmann::json::object();
  for (size_t i = 0; i < summary.tracked_names.size(); ++i) {
    j["tracked"][summary.tracked_names[i]] = summary.final_tracked[i];
  }
  j["iterations_executed"] = summary.iterations_executed;
  j["converged"] = summary.converged;
  j["status"] = summary.status;
  j["wall_seconds"] = summary.wall_seconds;

  std::ofstream out = open_out(path);
  out << j.dump(2) << '\n';
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

void write_surface_csv(const std::filesystem::path& path,
                       const SurfaceGrid& grid) {
  std::ofstream out = open_out(path);
  out << "param_a," << grid.a.name << ',' << format_real(grid.a.lo) << ','
      << format_real(grid.a.hi) << ',' << grid.a.steps << '\n';
  out << "param_b," << grid.b.name << ',' << format_real(grid.b.lo) << ','
      << format_real(grid.b.hi) << ',' << grid.b.steps << '\n';
  out << grid.a.name << ',' << grid.b.name << ",mse\n";
  for (int ia = 0; ia < grid.a.steps; ++ia) {
    for (int ib = 0; ib < grid.b.steps; ++ib) {
      out << format_real(grid.a.value_at(ia)) << ','
          << format_real(grid.b.value_at(ib)) << ','
          << format_real(grid.value_at(ia, ib)) << '\n';
    }
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace fbpnn
