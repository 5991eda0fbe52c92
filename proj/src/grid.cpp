#include "compsyn/grid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace compsyn {

Grid::Grid(std::vector<double> lo, std::vector<double> hi, std::vector<double> width)
    : lo_(std::move(lo)), hi_(std::move(hi)), requested_(std::move(width)) {
  if (lo_.empty() || lo_.size() != hi_.size() || lo_.size() != requested_.size())
    throw std::invalid_argument("grid: dimension mismatch");
  width_.resize(lo_.size());
  n_.resize(lo_.size());
  total_ = 1;
  for (std::size_t d = 0; d < lo_.size(); ++d) {
    const double span = hi_[d] - lo_[d];
    if (!(span > 0.0)) throw std::invalid_argument("grid: box side must be positive");
    if (!(requested_[d] > 0.0)) throw std::invalid_argument("grid: width must be positive");
    std::int64_t n = std::llround(span / requested_[d]);
    if (n < 1) n = 1;
    width_[d] = span / static_cast<double>(n);
    if (std::abs(width_[d] - requested_[d]) > 1e-9 * requested_[d]) adjusted_ = true;
    n_[d] = n;
    total_ *= n;
  }
}

Grid::Grid(std::vector<double> lo, std::vector<double> hi, double width)
    : Grid(lo, std::move(hi), std::vector<double>(lo.size(), width)) {}

double Grid::delta() const {
  double m = 0.0;
  for (double w : width_) m = std::max(m, w);
  return m;
}

CellId Grid::quantize(std::span<const double> x) const {
  if (x.size() != dims()) throw std::invalid_argument("quantize: dimension mismatch");
  CellId id = 0;
  for (std::size_t d = 0; d < dims(); ++d) {
    const double v = x[d];
    if (std::isnan(v)) throw std::invalid_argument("quantize: NaN input");
    if (v < lo_[d] || v > hi_[d]) return sink();
    std::int64_t idx = static_cast<std::int64_t>(std::floor((v - lo_[d]) / width_[d] + 1e-9));
    if (idx >= n_[d]) idx = n_[d] - 1;  // top edge belongs to the last cell
    if (idx < 0) idx = 0;
    id = id * n_[d] + idx;
  }
  return id;
}

void Grid::decompose(CellId cell, std::span<std::int64_t> idx) const {
  if (cell < 0 || cell >= total_) throw std::invalid_argument("decompose: not a grid cell");
  for (std::size_t d = dims(); d-- > 0;) {
    idx[d] = cell % n_[d];
    cell /= n_[d];
  }
}

void Grid::representative(CellId cell, std::span<double> out) const {
  if (cell < 0 || cell >= total_) throw std::invalid_argument("representative: not a grid cell");
  for (std::size_t d = dims(); d-- > 0;) {
    const std::int64_t i = cell % n_[d];
    cell /= n_[d];
    out[d] = lo_[d] + (static_cast<double>(i) + 0.5) * width_[d];
  }
}

std::vector<double> Grid::representative(CellId cell) const {
  std::vector<double> v(dims());
  representative(cell, v);
  return v;
}

Grid Grid::refined(int factor) const {
  if (factor < 2) throw std::invalid_argument("refined: factor must be >= 2");
  std::vector<double> w(dims());
  for (std::size_t d = 0; d < dims(); ++d)
    w[d] = (hi_[d] - lo_[d]) / (static_cast<double>(n_[d]) * factor);
  return Grid(lo_, hi_, w);
}

bool Grid::refines(const Grid& coarse) const {
  if (dims() != coarse.dims()) return false;
  for (std::size_t d = 0; d < dims(); ++d) {
    if (lo_[d] != coarse.lo_[d] || hi_[d] != coarse.hi_[d]) return false;
    if (n_[d] % coarse.n_[d] != 0) return false;
  }
  return true;
}

double box_volume(std::span<const std::pair<double, double>> box) {
  double v = 1.0;
  for (const auto& [lo, hi] : box) v *= (hi - lo);
  return v;
}

double abstraction_error(int horizon, double volume, double delta, double lipschitz_x,
                         double mu, double lipschitz_w) {
  if (horizon < 0) throw std::invalid_argument("abstraction_error: negative horizon");
  return static_cast<double>(horizon) * volume * (delta * lipschitz_x + mu * lipschitz_w);
}

}  // namespace compsyn
