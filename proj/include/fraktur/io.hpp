#pragma once

#include <string>
#include <vector>

#include "fraktur/assembly.hpp"

namespace fraktur {

// All text output is locale-independent and uses %.17g so reruns with the
// same config and seed are byte-identical.
std::string format_g17(double v);

void write_vtk_step(const std::string& path, const FemSystem& fem, const Vec& u, const Vec& phi,
                    const Vec* rate_multiplier);

struct CsvWriter {
  explicit CsvWriter(const std::string& path, const std::vector<std::string>& header);
  void row(const std::vector<double>& values);
  void close();
  ~CsvWriter();

 private:
  struct Impl;
  Impl* impl_;
};

void ensure_directory(const std::string& path);

}  // namespace fraktur
