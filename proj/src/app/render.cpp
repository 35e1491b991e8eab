#include "pseudolab/app/render.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "pseudolab/autodiff.hpp"
#include "pseudolab/diagnostics.hpp"
#include "pseudolab/errors.hpp"
#include "pseudolab/numfmt.hpp"

namespace pseudolab::app {

namespace {

double cell_x0(const GridSpec& g, std::size_t c) {
  return g.x0_min + (static_cast<double>(c) + 0.5) * (g.x0_max - g.x0_min) / static_cast<double>(g.width);
}

double cell_x1(const GridSpec& g, std::size_t r) {
  return g.x1_max - (static_cast<double>(r) + 0.5) * (g.x1_max - g.x1_min) / static_cast<double>(g.height);
}

// Tableau-like palette; cycles for more classes.
constexpr std::array<std::array<unsigned char, 3>, 8> kPalette{{
    {31, 119, 180},
    {255, 127, 14},
    {44, 160, 44},
    {214, 39, 40},
    {148, 103, 189},
    {140, 86, 75},
    {227, 119, 194},
    {188, 189, 34},
}};

}  // namespace

Tensor grid_points(const GridSpec& grid) {
  grid.validate();
  Tensor pts({grid.width * grid.height, 2});
  for (std::size_t r = 0; r < grid.height; ++r)
    for (std::size_t c = 0; c < grid.width; ++c) {
      pts.at(r * grid.width + c, 0) = cell_x0(grid, c);
      pts.at(r * grid.width + c, 1) = cell_x1(grid, r);
    }
  return pts;
}

Tensor evaluate_grid(const Mlp& model, const GridSpec& grid) {
  if (model.spec().input_size() != 2) {
    throw ContractError("decision boundaries need a model with 2 inputs, this one takes " +
                        std::to_string(model.spec().input_size()));
  }
  return model.predict(grid_points(grid));
}

void write_grid_csv(const Tensor& points, const Tensor& probs, std::ostream& out) {
  if (points.rows() != probs.rows() || points.cols() != 2) {
    throw DimensionError("grid points and probabilities disagree");
  }
  out << "x0,x1";
  for (std::size_t c = 0; c < probs.cols(); ++c) out << ",p_" << c;
  out << '\n';
  for (std::size_t i = 0; i < points.rows(); ++i) {
    out << format_double(points.at(i, 0)) << ',' << format_double(points.at(i, 1));
    for (double p : probs.row(i)) out << ',' << format_double(p);
    out << '\n';
  }
}

ClassGrid class_grid(const GridSpec& grid, const Tensor& probs) {
  if (probs.rows() != grid.width * grid.height) throw DimensionError("probabilities do not cover the grid");
  ClassGrid out{grid.width, grid.height, predictions(probs)};
  return out;
}

ClassGrid read_grid_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(1, "empty grid file");
  if (line.rfind("x0,x1,p_0", 0) != 0) throw ParseError(1, "expected header x0,x1,p_0,...");
  const std::size_t fields = static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1;
  ClassGrid grid;
  std::size_t number = 1;
  double first_x1 = 0.0;
  bool first_row_open = true;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty()) continue;
    std::vector<double> values;
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      auto v = parse_double(tok);
      if (!v) throw ParseError(number, "bad number '" + tok + "'");
      values.push_back(*v);
    }
    if (values.size() != fields) throw ParseError(number, "wrong field count");
    if (grid.classes.empty()) first_x1 = values[1];
    if (first_row_open && values[1] != first_x1) first_row_open = false;
    if (first_row_open) ++grid.width;
    grid.classes.push_back(static_cast<int>(argmax(std::span<const double>(values).subspan(2))));
  }
  if (grid.width == 0 || grid.classes.size() % grid.width != 0) {
    throw ParseError(number, "grid rows have unequal lengths");
  }
  grid.height = grid.classes.size() / grid.width;
  return grid;
}

ClassGrid read_grid_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open grid file " + path.string());
  return read_grid_csv(in);
}

std::size_t max_line_crossings(const ClassGrid& grid, std::size_t min_run) {
  if (grid.width == 0 || grid.height == 0) return 0;
  const double w = static_cast<double>(grid.width), h = static_cast<double>(grid.height);
  const double cx = w / 2.0, cy = h / 2.0;
  const double reach = std::hypot(w, h) / 2.0;
  std::size_t best = 0;
  // Straight lines every 2 degrees and every pixel of offset, sampled every
  // half pixel.
  for (int deg = 0; deg < 180; deg += 2) {
    const double theta = deg * 3.14159265358979323846 / 180.0;
    const double dx = std::cos(theta), dy = std::sin(theta);
    for (double off = -reach; off <= reach; off += 1.0) {
      std::vector<std::pair<int, std::size_t>> runs;  // (class, length)
      for (double t = -reach; t <= reach; t += 0.5) {
        const double x = cx + t * dx - off * dy;
        const double y = cy + t * dy + off * dx;
        if (x < 0 || y < 0 || x >= w || y >= h) continue;
        const int cls = grid.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x));
        if (!runs.empty() && runs.back().first == cls) ++runs.back().second;
        else runs.emplace_back(cls, 1);
      }
      // Short runs are rasterization noise; fold them into their neighbours.
      std::vector<int> kept;
      for (const auto& [cls, len] : runs) {
        if (len < min_run) continue;
        if (kept.empty() || kept.back() != cls) kept.push_back(cls);
      }
      if (!kept.empty()) best = std::max(best, kept.size() - 1);
    }
  }
  return best;
}

std::string render_ppm(const GridSpec& grid, const Tensor& probs, const Tensor* labeled_points) {
  grid.validate();
  if (probs.rows() != grid.width * grid.height) throw DimensionError("probabilities do not cover the grid");
  std::string header = "P6\n" + std::to_string(grid.width) + ' ' + std::to_string(grid.height) + "\n255\n";
  std::string image = header;
  image.reserve(header.size() + 3 * probs.rows());
  for (std::size_t i = 0; i < probs.rows(); ++i) {
    const auto row = probs.row(i);
    const std::size_t cls = argmax(row);
    const double scale = row[cls];
    for (unsigned char channel : kPalette[cls % kPalette.size()]) {
      image.push_back(static_cast<char>(std::lround(channel * scale)));
    }
  }
  if (labeled_points && labeled_points->size() > 0) {
    const double sx = static_cast<double>(grid.width) / (grid.x0_max - grid.x0_min);
    const double sy = static_cast<double>(grid.height) / (grid.x1_max - grid.x1_min);
    for (std::size_t i = 0; i < labeled_points->rows(); ++i) {
      const double fc = std::floor((labeled_points->at(i, 0) - grid.x0_min) * sx);
      const double fr = std::floor((grid.x1_max - labeled_points->at(i, 1)) * sy);
      for (double dr = -1; dr <= 1; ++dr)
        for (double dc = -1; dc <= 1; ++dc) {
          const double r = fr + dr, c = fc + dc;
          if (r < 0 || c < 0 || r >= static_cast<double>(grid.height) || c >= static_cast<double>(grid.width)) {
            continue;
          }
          const std::size_t px = static_cast<std::size_t>(r) * grid.width + static_cast<std::size_t>(c);
          for (std::size_t ch = 0; ch < 3; ++ch) image[header.size() + 3 * px + ch] = 0;
        }
    }
  }
  return image;
}

}  // namespace pseudolab::app
