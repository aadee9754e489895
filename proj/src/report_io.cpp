#include "pascali/report_io.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace pascali::io {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (v == 0.0) return "0";  // folds -0
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string samples_csv(std::span<const SampleRow> rows, int dim) {
  std::string out = "x,y";
  if (dim == 1) {
    out += ",re,im";
  } else {
    for (int c = 0; c < dim; ++c) out += ",re" + std::to_string(c) + ",im" + std::to_string(c);
  }
  out += ",abs,residual\n";
  for (const auto& r : rows) {
    if (int(r.value.size()) != dim) throw DimensionError("sample row has the wrong number of components");
    out += format_double(r.z.real());
    out += ',';
    out += format_double(r.z.imag());
    double sq = 0.0;
    for (cplx v : r.value) {
      out += ',';
      out += format_double(v.real());
      out += ',';
      out += format_double(v.imag());
      sq += std::norm(v);
    }
    out += ',';
    out += format_double(std::sqrt(sq));
    out += ',';
    if (r.residual) out += format_double(*r.residual);
    out += '\n';
  }
  return out;
}

std::vector<SampleRow> grid_rows(const GridFunction& value, const Mask& m, const GridFunction* residual) {
  if (!(m.grid() == value.grid())) throw DimensionError("mask and field live on different grids");
  if (residual && !(residual->grid() == value.grid())) throw DimensionError("residual lives on another grid");
  std::vector<SampleRow> rows;
  const Grid& g = value.grid();
  for (std::size_t k : m.indices()) {
    SampleRow r;
    r.z = g.node(k);
    auto v = value.node(k);
    r.value.assign(v.begin(), v.end());
    if (residual) r.residual = residual->norm_at(k);
    rows.push_back(std::move(r));
  }
  return rows;
}

double max_abs(std::span<const SampleRow> rows) {
  double best = 0.0;
  for (const auto& r : rows) {
    double sq = 0.0;
    for (cplx v : r.value) sq += std::norm(v);
    best = std::max(best, std::sqrt(sq));
  }
  return best;
}

std::string ramp_color(double t) {
  // anchors sampled from the viridis map
  static constexpr std::array<std::array<double, 3>, 9> anchors = {{
      {68, 1, 84},
      {72, 40, 120},
      {62, 74, 137},
      {49, 104, 142},
      {38, 130, 142},
      {31, 158, 137},
      {53, 183, 121},
      {109, 205, 89},
      {253, 231, 37},
  }};
  if (!(t >= 0.0)) t = 0.0;
  if (t > 1.0) t = 1.0;
  const double s = t * double(anchors.size() - 1);
  const std::size_t i = std::min(std::size_t(s), anchors.size() - 2);
  const double u = s - double(i);
  char buf[8];
  int rgb[3];
  for (int c = 0; c < 3; ++c) {
    rgb[c] = int(std::lround(anchors[i][std::size_t(c)] * (1.0 - u) + anchors[i + 1][std::size_t(c)] * u));
  }
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", rgb[0], rgb[1], rgb[2]);
  return buf;
}

namespace {

std::string label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

constexpr int kMaxCells = 128;  // display cells per side
constexpr int kLevels = 64;     // color quantization; adjacent equal cells merge into one rect
constexpr int kCell = 4;        // pixels per display cell

}  // namespace

std::string heatmap_svg(const Grid& grid, std::span<const double> values, const Mask& m, const std::string& title) {
  if (values.size() != grid.node_count()) throw DimensionError("heatmap values do not match the grid");
  if (!(m.grid() == grid)) throw DimensionError("heatmap mask lives on another grid");
  const int n = grid.size();
  const int block = std::max(1, n / kMaxCells);
  const int cells = n / block;

  // block means over masked nodes
  std::vector<double> cell(std::size_t(cells) * std::size_t(cells), 0.0);
  std::vector<int> count(cell.size(), 0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (!m.at(i, j)) continue;
      const double v = values[grid.index(i, j)];
      if (!std::isfinite(v)) continue;
      const std::size_t c = std::size_t(i / block) * std::size_t(cells) + std::size_t(j / block);
      cell[c] += v;
      ++count[c];
    }
  }
  double lo = 0.0;
  double hi = 0.0;
  bool any = false;
  for (std::size_t c = 0; c < cell.size(); ++c) {
    if (count[c] == 0) continue;
    cell[c] /= count[c];
    if (!any) {
      lo = hi = cell[c];
      any = true;
    }
    lo = std::min(lo, cell[c]);
    hi = std::max(hi, cell[c]);
  }
  const double span = hi > lo ? hi - lo : 1.0;
  auto level = [&](double v) { return std::clamp(int((v - lo) / span * kLevels), 0, kLevels - 1); };

  const int map_px = cells * kCell;
  const int bar_x = map_px + 16;
  const int width = bar_x + 80;
  const int top = 24;
  const int height = top + map_px + 8;

  std::string out;
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) + "\" height=\"" +
         std::to_string(height) + "\" viewBox=\"0 0 " + std::to_string(width) + " " + std::to_string(height) +
         "\">\n";
  out += "<text x=\"0\" y=\"16\" font-family=\"sans-serif\" font-size=\"12\">" + escape(title) + "</text>\n";
  out += "<g shape-rendering=\"crispEdges\">\n";
  // row r of the picture is imaginary index cells - 1 - r
  for (int r = 0; r < cells; ++r) {
    const int jc = cells - 1 - r;
    int ic = 0;
    while (ic < cells) {
      const std::size_t c = std::size_t(ic) * std::size_t(cells) + std::size_t(jc);
      if (count[c] == 0) {
        ++ic;
        continue;
      }
      const int lv = level(cell[c]);
      int end = ic + 1;
      while (end < cells) {
        const std::size_t c2 = std::size_t(end) * std::size_t(cells) + std::size_t(jc);
        if (count[c2] == 0 || level(cell[c2]) != lv) break;
        ++end;
      }
      out += "<rect x=\"" + std::to_string(ic * kCell) + "\" y=\"" + std::to_string(top + r * kCell) +
             "\" width=\"" + std::to_string((end - ic) * kCell) + "\" height=\"" + std::to_string(kCell) +
             "\" fill=\"" + ramp_color((lv + 0.5) / kLevels) + "\"/>\n";
      ic = end;
    }
  }
  // color bar, high values on top
  const int step_px = std::max(1, map_px / kLevels);
  for (int lv = 0; lv < kLevels; ++lv) {
    const int y = top + map_px - (lv + 1) * step_px;
    out += "<rect x=\"" + std::to_string(bar_x) + "\" y=\"" + std::to_string(y) + "\" width=\"16\" height=\"" +
           std::to_string(step_px) + "\" fill=\"" + ramp_color((lv + 0.5) / kLevels) + "\"/>\n";
  }
  out += "</g>\n";
  const int bar_top = top + map_px - kLevels * step_px;
  out += "<text x=\"" + std::to_string(bar_x + 20) + "\" y=\"" + std::to_string(bar_top + 10) +
         "\" font-family=\"sans-serif\" font-size=\"10\">" + label(any ? hi : 0.0) + "</text>\n";
  out += "<text x=\"" + std::to_string(bar_x + 20) + "\" y=\"" + std::to_string(top + map_px) +
         "\" font-family=\"sans-serif\" font-size=\"10\">" + label(any ? lo : 0.0) + "</text>\n";
  out += "</svg>\n";
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError(path, "cannot open for writing");
  os.write(text.data(), std::streamsize(text.size()));
  os.close();
  if (!os) throw IoError(path, "write failed");
}

}  // namespace pascali::io
