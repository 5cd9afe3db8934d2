#include "fraktur/io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace fraktur {

std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void ensure_directory(const std::string& path) {
  std::error_code ec;
  std::filesystem::create_directories(path, ec);
  if (ec) throw std::runtime_error("cannot create directory '" + path + "': " + ec.message());
}

void write_vtk_step(const std::string& path, const FemSystem& fem, const Vec& u, const Vec& phi,
                    const Vec* rate_multiplier) {
  const Mesh2D& mesh = fem.mesh();
  const DofMap& dofs = fem.dofs();
  const int np = static_cast<int>(mesh.nodes.size());
  const int ne = static_cast<int>(mesh.elements.size());

  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << "# vtk DataFile Version 3.0\n";
  out << "fraktur step output\n";
  out << "ASCII\n";
  out << "DATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << np << " double\n";
  for (int i = 0; i < np; ++i)
    out << format_g17(mesh.nodes[i][0]) << ' ' << format_g17(mesh.nodes[i][1]) << " 0\n";
  out << "CELLS " << ne << ' ' << 4 * ne << '\n';
  for (int e = 0; e < ne; ++e)
    out << "3 " << mesh.elements[e][0] << ' ' << mesh.elements[e][1] << ' ' << mesh.elements[e][2] << '\n';
  out << "CELL_TYPES " << ne << '\n';
  for (int e = 0; e < ne; ++e) out << "5\n";

  out << "POINT_DATA " << np << '\n';
  out << "VECTORS displacement double\n";
  for (int i = 0; i < np; ++i) {
    const int d = dofs.vec_of_node[i];
    const double ux = d >= 0 ? u[d] : 0.0;
    const double uy = d >= 0 ? u[d + 1] : 0.0;
    out << format_g17(ux) << ' ' << format_g17(uy) << " 0\n";
  }
  out << "SCALARS phase double 1\n";
  out << "LOOKUP_TABLE default\n";
  for (int i = 0; i < np; ++i) out << format_g17(phi[i]) << '\n';
  if (rate_multiplier) {
    out << "SCALARS rate_multiplier double 1\n";
    out << "LOOKUP_TABLE default\n";
    for (int i = 0; i < np; ++i) out << format_g17((*rate_multiplier)[i]) << '\n';
  }
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

struct CsvWriter::Impl {
  std::ofstream out;
  std::size_t columns = 0;
  std::string path;
};

CsvWriter::CsvWriter(const std::string& path, const std::vector<std::string>& header)
    : impl_(new Impl) {
  impl_->path = path;
  impl_->columns = header.size();
  impl_->out.open(path);
  if (!impl_->out) {
    delete impl_;
    impl_ = nullptr;
    throw std::runtime_error("cannot open '" + path + "' for writing");
  }
  for (std::size_t i = 0; i < header.size(); ++i)
    impl_->out << header[i] << (i + 1 < header.size() ? "," : "\n");
}

void CsvWriter::row(const std::vector<double>& values) {
  if (!impl_) throw std::logic_error("CsvWriter used after close");
  if (values.size() != impl_->columns)
    throw std::logic_error("CsvWriter: row width does not match header");
  for (std::size_t i = 0; i < values.size(); ++i)
    impl_->out << format_g17(values[i]) << (i + 1 < values.size() ? "," : "\n");
}

void CsvWriter::close() {
  if (!impl_) return;
  impl_->out.flush();
  const bool ok = static_cast<bool>(impl_->out);
  const std::string path = impl_->path;
  delete impl_;
  impl_ = nullptr;
  if (!ok) throw std::runtime_error("write failed for '" + path + "'");
}

CsvWriter::~CsvWriter() {
  if (impl_) {
    delete impl_;
    impl_ = nullptr;
  }
}

}  // namespace fraktur
