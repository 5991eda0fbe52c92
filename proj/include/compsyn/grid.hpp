#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace compsyn {

using CellId = std::int64_t;

/// Uniform rectangular grid over a box, with a distinguished absorbing sink
/// cell for points outside the box. Cells are half-open [lo, lo+width) per
/// dimension except that the top edge of the box belongs to the last cell.
/// Cell ids are row-major over dimensions; the sink id equals n_cells().
class Grid {
 public:
  Grid() = default;

  /// `width` is a request; the actual width per dimension is re-derived so an
  /// integer number of cells fits the box exactly. width_adjusted() reports
  /// whether any dimension was changed by more than 1e-9 relative.
  Grid(std::vector<double> lo, std::vector<double> hi, std::vector<double> width);

  /// convenience for per-dimension-identical width
  Grid(std::vector<double> lo, std::vector<double> hi, double width);

  std::size_t dims() const { return lo_.size(); }
  CellId n_cells() const { return total_; }
  CellId sink() const { return total_; }
  std::int64_t cells_in_dim(std::size_t d) const { return n_[d]; }
  double width(std::size_t d) const { return width_[d]; }
  double lo(std::size_t d) const { return lo_[d]; }
  double hi(std::size_t d) const { return hi_[d]; }
  bool width_adjusted() const { return adjusted_; }
  double requested_width(std::size_t d) const { return requested_[d]; }

  /// largest cell width across dimensions; the grid discretization parameter
  double delta() const;

  /// maps a point to its cell id, or sink() for points outside the box.
  /// NaN input throws.
  CellId quantize(std::span<const double> x) const;

  /// center of a non-sink cell
  void representative(CellId cell, std::span<double> out) const;
  std::vector<double> representative(CellId cell) const;

  /// per-dimension index decomposition of a non-sink cell
  void decompose(CellId cell, std::span<std::int64_t> idx) const;

  /// grid with every cell split `factor` ways per dimension (factor >= 2)
  Grid refined(int factor) const;

  /// true if every cell of this grid lies inside one cell of `coarse`
  bool refines(const Grid& coarse) const;

  bool operator==(const Grid& o) const {
    return lo_ == o.lo_ && hi_ == o.hi_ && n_ == o.n_;
  }

 private:
  std::vector<double> lo_, hi_, width_, requested_;
  std::vector<std::int64_t> n_;
  CellId total_ = 0;
  bool adjusted_ = false;
};

/// volume of the safe-set box (product of side lengths)
double box_volume(std::span<const std::pair<double, double>> box);

/// closed-form abstraction error: horizon * volume * (delta*Hx + mu*Hw)
double abstraction_error(int horizon, double volume, double delta, double lipschitz_x,
                         double mu, double lipschitz_w);

}  // namespace compsyn
