#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "pseudolab/app/run_config.hpp"
#include "pseudolab/network.hpp"
#include "pseudolab/tensor.hpp"

namespace pseudolab::app {

/// Cell centres of the grid in pixel order (row-major, top row first),
/// shape [height * width x 2].
Tensor grid_points(const GridSpec& grid);

/// Eval-mode softmax of `model` at every grid point. Throws ContractError
/// unless the model takes 2-D inputs.
Tensor evaluate_grid(const Mlp& model, const GridSpec& grid);

/// `x0,x1,p_0..p_{C-1}` rows in pixel order.
void write_grid_csv(const Tensor& points, const Tensor& probs, std::ostream& out);

/// Class map recovered from a grid CSV.
struct ClassGrid {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<int> classes;  // row-major, top row first

  int at(std::size_t r, std::size_t c) const { return classes[r * width + c]; }
};

ClassGrid class_grid(const GridSpec& grid, const Tensor& probs);
/// Parses a grid CSV written by write_grid_csv. Throws ParseError.
ClassGrid read_grid_csv(std::istream& in);
ClassGrid read_grid_csv(const std::filesystem::path& path);

/// Largest number of argmax changes along any straight line through the
/// grid (all directions in 2 degree steps). Runs of fewer than `min_run`
/// half-pixel samples are ignored so the staircase of a rasterized straight
/// boundary does not count. A linear boundary crosses a line at most once,
/// so 2 or more means the boundary is not a straight line.
std::size_t max_line_crossings(const ClassGrid& grid, std::size_t min_run = 4);

/// Complete P6 image: one pixel per grid cell coloured by argmax class and
/// darkened by the winning probability; `labeled_points` ([n x 2], may be
/// empty) are overdrawn as 3x3 black squares.
std::string render_ppm(const GridSpec& grid, const Tensor& probs, const Tensor* labeled_points);

}  // namespace pseudolab::app
