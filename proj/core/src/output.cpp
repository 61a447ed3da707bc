#include "bilayer/output.hpp"

#include "bilayer/error.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>

namespace bilayer {

void write_vtk(std::ostream& out, const DeformationField& y, const std::string& title) {
  const Mesh& mesh = y.mesh();
  const Index nv = mesh.num_vertices();
  const Index nc = mesh.num_cells();
  out << std::setprecision(17);
  out << "# vtk DataFile Version 3.0\n" << title << "\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << nv << " double\n";
  for (Index v = 0; v < nv; ++v) {
    const Vec3 p = y.value(v);
    out << p.x() << ' ' << p.y() << ' ' << p.z() << '\n';
  }
  out << "CELLS " << nc << ' ' << 5 * nc << '\n';
  for (Index c = 0; c < nc; ++c) {
    const auto& cell = mesh.cell(c);
    out << 4 << ' ' << cell[0] << ' ' << cell[1] << ' ' << cell[2] << ' ' << cell[3] << '\n';
  }
  out << "CELL_TYPES " << nc << '\n';
  for (Index c = 0; c < nc; ++c) out << "9\n";
  out << "POINT_DATA " << nv << '\n';
  out << "VECTORS displacement double\n";
  for (Index v = 0; v < nv; ++v) {
    const Vec2& x = mesh.vertex(v);
    const Vec3 d = y.value(v) - Vec3(x.x(), x.y(), 0.0);
    out << d.x() << ' ' << d.y() << ' ' << d.z() << '\n';
  }
  out << "SCALARS metric_defect double 1\nLOOKUP_TABLE default\n";
  for (Index v = 0; v < nv; ++v) {
    const Mat32 g = y.gradient(v);
    out << (g.transpose() * g - Mat2::Identity()).cwiseAbs().sum() << '\n';
  }
}

void write_vtk(const std::filesystem::path& path, const DeformationField& y, const std::string& title) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  write_vtk(out, y, title);
  if (!out) throw Error("write failed for " + path.string());
}

std::string trace_row(const TraceRecord& r) {
  std::ostringstream out;
  out << std::setprecision(15);
  out << r.k << ',' << r.time << ',' << r.energy.total << ',' << r.energy.bending << ',' << r.energy.coupling << ','
      << r.energy.constant << ',' << r.energy.load << ',';
  if (std::isfinite(r.reporting_energy)) out << r.reporting_energy;
  out << ',' << r.defect << ',' << r.inner_iters << ',' << std::setprecision(6) << r.wall_ms;
  return out.str();
}

TraceWriter::TraceWriter(const std::filesystem::path& path) : out_(path) {
  if (!out_) throw Error("cannot write " + path.string());
  out_ << kTraceHeader << '\n';
}

void TraceWriter::write(const TraceRecord& rec) { out_ << trace_row(rec) << '\n'; }

}  // namespace bilayer
