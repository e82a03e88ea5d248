#pragma once

#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

namespace rwlab {

class IncompatibleGrids : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Layout of a composite 1-D grid: a uniform panel on [x_lo, x_hi] and an
/// optional geometric refinement panel on both sides of a singular point.
/// Uniform nodes closer to the singular point than the outer panel radius
/// are replaced by the geometric nodes; the singular point itself is never
/// a node.
struct GridSpec {
  double x_lo = -8.0;
  double x_hi = 8.0;
  int uniform_intervals = 1 << 14;
  bool refine = true;
  double singular_point = 0.0;
  double panel_min = 1e-6;
  double panel_max = 1e-1;
  int panel_nodes = 1 << 9;  // per side

  double spacing() const { return (x_hi - x_lo) / uniform_intervals; }
  /// Outer radius of the refinement panel, snapped onto a uniform node.
  double panel_outer() const;
  std::vector<double> nodes() const;
  /// Same panel, with panel_min divided by `factor` and the node count
  /// raised so that the geometric ratio between neighbours is unchanged.
  GridSpec deepened(double factor) const;
  /// Uniform panel with twice as many intervals (and twice the panel nodes).
  GridSpec doubled() const;

  static GridSpec uniform(double lo, double hi, int intervals);
};

/// Nonnegative density sampled on a strictly increasing grid.
class GridDensity {
 public:
  GridDensity(GridSpec spec, std::vector<double> values);
  GridDensity(GridSpec spec, std::vector<double> nodes, std::vector<double> values);

  static GridDensity sample(const GridSpec& spec, const std::function<double(double)>& f);

  const GridSpec& spec() const { return spec_; }
  const std::vector<double>& nodes() const { return nodes_; }
  const std::vector<double>& values() const { return values_; }
  std::vector<double>& mutable_values() { return values_; }
  std::size_t size() const { return nodes_.size(); }
  double lo() const { return nodes_.front(); }
  double hi() const { return nodes_.back(); }
  bool is_uniform() const { return !spec_.refine; }

  /// Trapezoid integral.
  double mass() const;
  GridDensity normalized() const;
  void normalize();

  bool contains(double x) const { return x >= nodes_.front() && x <= nodes_.back(); }
  /// Interpolated value. On composite grids segments on one side of the
  /// singular point are interpolated as power laws in the distance to it
  /// (log-linear); the segment straddling the singular point extrapolates
  /// the nearest side. Linear interpolation on uniform grids. Zero outside.
  double operator()(double x) const;

  /// Exact integral of the interpolant from the first node to each node.
  std::vector<double> cumulative() const;
  /// Distribution function of the interpolant, normalized by its own total
  /// (which differs from mass() by the trapezoid error).
  double cdf(double x) const;
  /// Exact inverse of cdf() on (0,1).
  double quantile(double u) const;
  /// Exact integral of the interpolant over [a, b] (not normalized).
  double integral(double a, double b) const;
  /// Total integral of the interpolant.
  double interpolant_mass() const { return cum_.back(); }

  double max_value() const;

  /// Values on the uniform panel nodes x_lo + i h (composite grids are
  /// interpolated).
  std::vector<double> uniform_values() const;

 private:
  // One interval of the interpolant: linear, or a power law in the distance
  // to the singular point.
  struct Piece {
    double a = 0.0, b = 0.0;
    bool power = false;
    double va = 0.0, vb = 0.0;
    double s = 0.0, vref = 0.0, dref = 1.0, p = 0.0;
    int side = 1;
    double value(double x) const;
    double partial(double x) const;  // integral over [a, min(x, b)]
    double solve(double m) const;    // x with partial(x) = m
  };
  int pieces(std::size_t j, Piece out[2]) const;
  double below(double x) const;
  void build_cdf();

  double trapezoid_mass_ = 0.0;
  GridSpec spec_;
  std::vector<double> nodes_;
  std::vector<double> values_;
  std::vector<double> cum_;
};

/// Linear convolution of two real sequences via FFT (FFTW).
std::vector<double> fft_convolve(const std::vector<double>& a, const std::vector<double>& b);

struct GridConvolution {
  GridDensity density;
  /// Trapezoid mass before the product-mass normalization.
  double raw_mass;
};

/// Density of the sum of independent variables with densities f and g.
/// Both are resampled onto their uniform panels, which must share the same
/// spacing; the result lives on the uniform grid over [lo_f+lo_g, hi_f+hi_g]
/// and is scaled so that its mass equals mass(f) mass(g).
GridConvolution grid_convolve_detailed(const GridDensity& f, const GridDensity& g);
GridDensity grid_convolve(const GridDensity& f, const GridDensity& g);

/// O(n^2) trapezoid quadrature of the same convolution; test oracle.
GridDensity grid_convolve_direct(const GridDensity& f, const GridDensity& g);

struct PositivityInterval {
  double lo;
  double hi;
};

/// Maximal runs of nodes where the density exceeds `threshold`.
std::vector<PositivityInterval> positivity_region(const GridDensity& f, double threshold = 0.0);

}  // namespace rwlab
