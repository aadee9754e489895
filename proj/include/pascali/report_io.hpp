#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pascali/approx.hpp"
#include "pascali/errors.hpp"
#include "pascali/grid.hpp"

namespace pascali::io {

/// File could not be written; carries the path.
class IoError : public Error {
 public:
  IoError(const std::filesystem::path& path, const std::string& what)
      : Error(path.string() + ": " + what), path_(path) {}
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

/// One row of a sample table: the n-vector value at z and an optional
/// residual (absent for samples off the grid).
struct SampleRow {
  cplx z;
  std::vector<cplx> value;
  std::optional<double> residual;
};

/// Header "x,y,re,im,abs,residual" for n = 1, "x,y,re0,im0,re1,im1,...,abs,residual"
/// otherwise; abs is the Euclidean norm of the value. LF line ends.
std::string samples_csv(std::span<const SampleRow> rows, int dim);

/// Rows for every node of m in node order; residual is taken from `residual`
/// (scalar field) when given.
std::vector<SampleRow> grid_rows(const GridFunction& value, const Mask& m, const GridFunction* residual = nullptr);

/// Largest abs over the rows; 0 for an empty table.
double max_abs(std::span<const SampleRow> rows);

/// Viridis-like ramp: t in [0, 1] to "#rrggbb".
std::string ramp_color(double t);

/// Heatmap of a scalar field over the masked nodes (one rect per node,
/// unmasked nodes left blank) with a color bar showing the value range.
std::string heatmap_svg(const Grid& grid, std::span<const double> values, const Mask& m, const std::string& title);

/// Writes text to path in binary mode; throws IoError with the path.
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace pascali::io
