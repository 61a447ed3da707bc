#pragma once

#include "bilayer/flow.hpp"
#include "bilayer/kirchhoff.hpp"

#include <filesystem>
#include <fstream>
#include <ostream>
#include <string>

namespace bilayer {

/// Legacy ASCII unstructured grid: deformed vertex positions, one quad (VTK type 9) per cell,
/// point data `displacement` = y(z) - (z, 0) and `metric_defect` = |grad y(z)^T grad y(z) - I|_1.
void write_vtk(std::ostream& out, const DeformationField& y, const std::string& title = "bilayer plate");
/// Throws Error when the file cannot be written.
void write_vtk(const std::filesystem::path& path, const DeformationField& y, const std::string& title = "bilayer plate");

inline constexpr const char* kTraceHeader =
    "k,time,energy,bending,coupling,constant,load,reporting_energy,defect,inner_iters,wall_ms";

/// CSV writer for TraceRecord rows with the header above.
class TraceWriter {
 public:
  explicit TraceWriter(const std::filesystem::path& path);
  void write(const TraceRecord& rec);
  void flush() { out_.flush(); }

 private:
  std::ofstream out_;
};

std::string trace_row(const TraceRecord& rec);

}  // namespace bilayer
