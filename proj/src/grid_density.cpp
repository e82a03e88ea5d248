#include "rwlab/grid_density.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <memory>
#include <numeric>

namespace rwlab {

double GridSpec::panel_outer() const {
  const double h = spacing();
  return std::max(h, h * std::round(panel_max / h));
}

std::vector<double> GridSpec::nodes() const {
  if (!(x_hi > x_lo) || uniform_intervals < 1) throw std::invalid_argument("grid needs x_lo < x_hi and >= 1 interval");
  const double h = spacing();
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(uniform_intervals) + 1 + (refine ? 2 * static_cast<std::size_t>(panel_nodes) : 0));
  const double outer = refine ? panel_outer() : 0.0;
  if (refine) {
    if (!(panel_min > 0.0) || !(panel_min < outer) || panel_nodes < 2) {
      throw std::invalid_argument("refinement panel needs 0 < panel_min < panel_max and >= 2 nodes");
    }
    if (singular_point - outer <= x_lo || singular_point + outer >= x_hi) {
      throw std::invalid_argument("refinement panel must lie inside the uniform panel");
    }
  }
  for (int i = 0; i <= uniform_intervals; ++i) {
    const double x = x_lo + i * h;
    if (refine && std::abs(x - singular_point) < outer * (1.0 - 1e-12)) continue;
    out.push_back(x);
  }
  if (refine) {
    const double log_ratio = std::log(outer / panel_min);
    for (int k = 0; k + 1 < panel_nodes; ++k) {
      const double r = panel_min * std::exp(log_ratio * k / (panel_nodes - 1));
      out.push_back(singular_point + r);
      out.push_back(singular_point - r);
    }
    std::sort(out.begin(), out.end());
    // The snapped outer radius coincides with a uniform node; drop any
    // near-duplicates produced by rounding.
    std::vector<double> dedup;
    dedup.reserve(out.size());
    for (double x : out) {
      if (!dedup.empty() && x - dedup.back() <= 1e-12 * h) continue;
      dedup.push_back(x);
    }
    out = std::move(dedup);
  }
  return out;
}

GridSpec GridSpec::deepened(double factor) const {
  GridSpec s = *this;
  const double outer = panel_outer();
  const double old_span = std::log(outer / panel_min);
  s.panel_min = panel_min / factor;
  const double new_span = std::log(outer / s.panel_min);
  s.panel_nodes = 1 + static_cast<int>(std::lround((panel_nodes - 1) * new_span / old_span));
  return s;
}

GridSpec GridSpec::doubled() const {
  GridSpec s = *this;
  s.uniform_intervals = uniform_intervals * 2;
  s.panel_nodes = panel_nodes * 2 - 1;
  return s;
}

GridSpec GridSpec::uniform(double lo, double hi, int intervals) {
  GridSpec s;
  s.x_lo = lo;
  s.x_hi = hi;
  s.uniform_intervals = intervals;
  s.refine = false;
  return s;
}

GridDensity::GridDensity(GridSpec spec, std::vector<double> values)
    : GridDensity(spec, spec.nodes(), std::move(values)) {}

GridDensity::GridDensity(GridSpec spec, std::vector<double> nodes, std::vector<double> values)
    : spec_(spec), nodes_(std::move(nodes)), values_(std::move(values)) {
  if (nodes_.size() != values_.size()) throw std::invalid_argument("grid nodes and values differ in length");
  if (nodes_.size() < 2) throw std::invalid_argument("grid needs at least two nodes");
  for (std::size_t i = 1; i < nodes_.size(); ++i) {
    if (!(nodes_[i] > nodes_[i - 1])) throw std::invalid_argument("grid nodes must be strictly increasing");
  }
  for (double v : values_) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw std::invalid_argument("density values must be finite and nonnegative");
  }
  build_cdf();
}

GridDensity GridDensity::sample(const GridSpec& spec, const std::function<double(double)>& f) {
  auto nodes = spec.nodes();
  std::vector<double> v(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) v[i] = f(nodes[i]);
  return GridDensity(spec, std::move(nodes), std::move(v));
}

namespace {

constexpr double kMinStraddleExponent = -0.95;

double power_exponent(double da, double va, double db, double vb) {
  return std::log(vb / va) / std::log(db / da);
}

// Antiderivative in the distance d of vref (d / dref)^p.
double power_primitive(double vref, double dref, double p, double d) {
  if (std::abs(p + 1.0) < 1e-9) return vref * dref * std::log(d / dref);
  return vref * dref / (p + 1.0) * std::pow(d / dref, p + 1.0);
}

double power_primitive_inverse(double vref, double dref, double p, double F) {
  if (std::abs(p + 1.0) < 1e-9) return dref * std::exp(F / (vref * dref));
  return dref * std::pow(F * (p + 1.0) / (vref * dref), 1.0 / (p + 1.0));
}

}  // namespace

// Power pieces: v(x) = vref (|x - s| / dref)^p on [a, b], all of it on the
// side `side` of s. A piece touching s needs p > -1 (F(0) = 0).
double GridDensity::Piece::value(double x) const {
  if (!power) return va + (x - a) / (b - a) * (vb - va);
  const double d = side > 0 ? x - s : s - x;
  return vref * std::pow(d / dref, p);
}

double GridDensity::Piece::partial(double x) const {
  if (x <= a) return 0.0;
  x = std::min(x, b);
  if (!power) {
    const double u = x - a;
    return va * u + 0.5 * (vb - va) / (b - a) * u * u;
  }
  auto F = [&](double d) { return d > 0.0 ? power_primitive(vref, dref, p, d) : 0.0; };
  if (side > 0) return F(x - s) - F(a - s);
  return F(s - a) - F(s - x);
}

double GridDensity::Piece::solve(double m) const {
  if (m <= 0.0) return a;
  if (!power) {
    const double c = (vb - va) / (b - a);
    const double disc = std::max(0.0, va * va + 2.0 * c * m);
    const double den = va + std::sqrt(disc);
    const double u = den > 0.0 ? 2.0 * m / den : 0.0;
    return std::clamp(a + u, a, b);
  }
  auto F = [&](double d) { return d > 0.0 ? power_primitive(vref, dref, p, d) : 0.0; };
  double x;
  if (side > 0) {
    x = s + power_primitive_inverse(vref, dref, p, F(a - s) + m);
  } else {
    // F < 0 throughout when p < -1, so only a piece touching s may hit 0.
    const double rest = F(s - a) - m;
    x = (p > -1.0 && rest <= 0.0) ? s : s - power_primitive_inverse(vref, dref, p, rest);
  }
  return std::isfinite(x) ? std::clamp(x, a, b) : b;
}

int GridDensity::pieces(std::size_t j, Piece out[2]) const {
  const double x0 = nodes_[j], x1 = nodes_[j + 1];
  const double v0 = values_[j], v1 = values_[j + 1];
  auto linear = [&](double a, double b) {
    auto lin = [&](double x) { return v0 + (x - x0) / (x1 - x0) * (v1 - v0); };
    Piece q;
    q.a = a;
    q.b = b;
    q.va = lin(a);
    q.vb = lin(b);
    return q;
  };
  auto power = [&](double a, double b, double vref, double dref, double p, int side) {
    Piece q;
    q.a = a;
    q.b = b;
    q.power = true;
    q.s = spec_.singular_point;
    q.vref = vref;
    q.dref = dref;
    q.p = p;
    q.side = side;
    return q;
  };
  if (spec_.refine) {
    const double s = spec_.singular_point;
    const double d0 = x0 - s, d1 = x1 - s;
    if (d0 * d1 > 0.0) {
      if (v0 > 0.0 && v1 > 0.0) {
        out[0] = power(x0, x1, v0, std::abs(d0), power_exponent(std::abs(d0), v0, std::abs(d1), v1), d0 > 0.0 ? 1 : -1);
        return 1;
      }
    } else if (d0 < 0.0 && d1 > 0.0) {
      // Straddling segment: each half extrapolates the two nodes on its side.
      if (j >= 1 && v0 > 0.0 && values_[j - 1] > 0.0) {
        const double p = std::max(kMinStraddleExponent, power_exponent(-d0, v0, s - nodes_[j - 1], values_[j - 1]));
        out[0] = power(x0, s, v0, -d0, p, -1);
      } else {
        out[0] = linear(x0, s);
      }
      if (j + 2 < nodes_.size() && v1 > 0.0 && values_[j + 2] > 0.0) {
        const double p = std::max(kMinStraddleExponent, power_exponent(d1, v1, nodes_[j + 2] - s, values_[j + 2]));
        out[1] = power(s, x1, v1, d1, p, 1);
      } else {
        out[1] = linear(s, x1);
      }
      return 2;
    }
  }
  out[0] = linear(x0, x1);
  return 1;
}

void GridDensity::build_cdf() {
  cum_.assign(nodes_.size(), 0.0);
  trapezoid_mass_ = 0.0;
  Piece pc[2];
  for (std::size_t j = 0; j + 1 < nodes_.size(); ++j) {
    trapezoid_mass_ += 0.5 * (values_[j + 1] + values_[j]) * (nodes_[j + 1] - nodes_[j]);
    double m = 0.0;
    const int np = pieces(j, pc);
    for (int k = 0; k < np; ++k) m += pc[k].partial(pc[k].b);
    cum_[j + 1] = cum_[j] + m;
  }
}

double GridDensity::mass() const { return trapezoid_mass_; }

void GridDensity::normalize() {
  const double m = mass();
  if (!(m > 0.0)) throw std::domain_error("cannot normalize a density with zero mass");
  for (double& v : values_) v /= m;
  build_cdf();
}

GridDensity GridDensity::normalized() const {
  GridDensity out = *this;
  out.normalize();
  return out;
}

double GridDensity::operator()(double x) const {
  if (x < nodes_.front() || x > nodes_.back()) return 0.0;
  auto it = std::upper_bound(nodes_.begin(), nodes_.end(), x);
  if (it == nodes_.end()) return values_.back();
  const std::size_t j = static_cast<std::size_t>(it - nodes_.begin()) - 1;
  Piece pc[2];
  const int np = pieces(j, pc);
  if (np == 2 && x == pc[0].b) {
    // At the singular point itself fall back to the chord.
    const double t = (x - nodes_[j]) / (nodes_[j + 1] - nodes_[j]);
    return values_[j] + t * (values_[j + 1] - values_[j]);
  }
  return (np == 2 && x > pc[0].b) ? pc[1].value(x) : pc[0].value(x);
}

std::vector<double> GridDensity::cumulative() const { return cum_; }

double GridDensity::below(double x) const {
  if (x <= nodes_.front()) return 0.0;
  if (x >= nodes_.back()) return cum_.back();
  auto it = std::upper_bound(nodes_.begin(), nodes_.end(), x);
  const std::size_t j = static_cast<std::size_t>(it - nodes_.begin()) - 1;
  Piece pc[2];
  const int np = pieces(j, pc);
  double m = cum_[j];
  for (int k = 0; k < np; ++k) m += pc[k].partial(x);
  return m;
}

double GridDensity::cdf(double x) const {
  if (x <= nodes_.front()) return 0.0;
  if (x >= nodes_.back()) return 1.0;
  return std::min(1.0, below(x) / cum_.back());
}

double GridDensity::quantile(double u) const {
  if (!(u > 0.0 && u < 1.0)) throw std::domain_error("quantile level must lie in (0,1)");
  const double target = u * cum_.back();
  auto it = std::upper_bound(cum_.begin(), cum_.end(), target);
  if (it == cum_.end()) return nodes_.back();
  if (it == cum_.begin()) return nodes_.front();
  const std::size_t j = static_cast<std::size_t>(it - cum_.begin()) - 1;
  Piece pc[2];
  const int np = pieces(j, pc);
  double rest = target - cum_[j];
  for (int k = 0; k < np; ++k) {
    const double m = pc[k].partial(pc[k].b);
    if (rest <= m || k + 1 == np) return pc[k].solve(std::min(rest, m));
    rest -= m;
  }
  return nodes_[j + 1];
}

double GridDensity::integral(double a, double b) const {
  if (b <= a) return 0.0;
  return below(b) - below(a);
}

double GridDensity::max_value() const { return *std::max_element(values_.begin(), values_.end()); }

std::vector<double> GridDensity::uniform_values() const {
  const double h = spec_.spacing();
  std::vector<double> out(static_cast<std::size_t>(spec_.uniform_intervals) + 1);
  if (!spec_.refine) {
    if (out.size() != values_.size()) throw std::logic_error("uniform grid size mismatch");
    return values_;
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double x = spec_.x_lo + static_cast<double>(i) * h;
    if (std::abs(x - spec_.singular_point) < 0.5 * h) {
      out[i] = integral(x - 0.5 * h, x + 0.5 * h) / h;
    } else {
      out[i] = (*this)(x);
    }
  }
  return out;
}

std::vector<double> fft_convolve(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.empty() || b.empty()) return {};
  const std::size_t out_len = a.size() + b.size() - 1;
  std::size_t n = 1;
  while (n < out_len) n <<= 1;
  const std::size_t nc = n / 2 + 1;

  struct Free {
    void operator()(void* p) const { fftw_free(p); }
  };
  std::unique_ptr<double, Free> ra(fftw_alloc_real(n)), rb(fftw_alloc_real(n));
  std::unique_ptr<fftw_complex, Free> ca(fftw_alloc_complex(nc)), cb(fftw_alloc_complex(nc));
  std::fill(ra.get(), ra.get() + n, 0.0);
  std::fill(rb.get(), rb.get() + n, 0.0);
  std::copy(a.begin(), a.end(), ra.get());
  std::copy(b.begin(), b.end(), rb.get());

  // FFTW_ESTIMATE keeps plans deterministic from run to run.
  fftw_plan pa = fftw_plan_dft_r2c_1d(static_cast<int>(n), ra.get(), ca.get(), FFTW_ESTIMATE);
  fftw_plan pb = fftw_plan_dft_r2c_1d(static_cast<int>(n), rb.get(), cb.get(), FFTW_ESTIMATE);
  fftw_execute(pa);
  fftw_execute(pb);
  for (std::size_t k = 0; k < nc; ++k) {
    const double re = ca.get()[k][0] * cb.get()[k][0] - ca.get()[k][1] * cb.get()[k][1];
    const double im = ca.get()[k][0] * cb.get()[k][1] + ca.get()[k][1] * cb.get()[k][0];
    ca.get()[k][0] = re;
    ca.get()[k][1] = im;
  }
  fftw_plan pc = fftw_plan_dft_c2r_1d(static_cast<int>(n), ca.get(), ra.get(), FFTW_ESTIMATE);
  fftw_execute(pc);
  fftw_destroy_plan(pa);
  fftw_destroy_plan(pb);
  fftw_destroy_plan(pc);

  std::vector<double> out(out_len);
  const double scale = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < out_len; ++i) out[i] = ra.get()[i] * scale;
  return out;
}

namespace {

void check_compatible(const GridDensity& f, const GridDensity& g) {
  const double hf = f.spec().spacing(), hg = g.spec().spacing();
  if (std::abs(hf - hg) > 1e-9 * std::max(hf, hg)) {
    throw IncompatibleGrids("uniform spacings differ after resampling");
  }
}

GridSpec sum_spec(const GridDensity& f, const GridDensity& g) {
  return GridSpec::uniform(f.spec().x_lo + g.spec().x_lo, f.spec().x_hi + g.spec().x_hi,
                           f.spec().uniform_intervals + g.spec().uniform_intervals);
}

}  // namespace

GridConvolution grid_convolve_detailed(const GridDensity& f, const GridDensity& g) {
  check_compatible(f, g);
  const double h = f.spec().spacing();
  auto fv = f.uniform_values();
  auto gv = g.uniform_values();
  fv.front() *= 0.5;
  fv.back() *= 0.5;
  auto c = fft_convolve(fv, gv);
  for (double& v : c) v = std::max(0.0, v * h);  // FFT round-off can dip below zero
  GridDensity out(sum_spec(f, g), std::move(c));
  const double raw = out.mass();
  const double target = f.mass() * g.mass();
  if (raw > 0.0) {
    for (double& v : out.mutable_values()) v *= target / raw;
    out = GridDensity(out.spec(), out.nodes(), out.values());
  }
  return {std::move(out), raw};
}

GridDensity grid_convolve(const GridDensity& f, const GridDensity& g) { return grid_convolve_detailed(f, g).density; }

GridDensity grid_convolve_direct(const GridDensity& f, const GridDensity& g) {
  check_compatible(f, g);
  const double h = f.spec().spacing();
  const auto fv = f.uniform_values();
  const auto gv = g.uniform_values();
  const std::size_t nf = fv.size(), ng = gv.size();
  std::vector<double> c(nf + ng - 1, 0.0);
  for (std::size_t k = 0; k < c.size(); ++k) {
    double acc = 0.0;
    const std::size_t i_lo = k >= ng - 1 ? k - (ng - 1) : 0;
    const std::size_t i_hi = std::min(k, nf - 1);
    for (std::size_t i = i_lo; i <= i_hi; ++i) {
      const double w = (i == 0 || i == nf - 1) ? 0.5 : 1.0;
      acc += w * fv[i] * gv[k - i];
    }
    c[k] = acc * h;
  }
  return GridDensity(sum_spec(f, g), std::move(c));
}

std::vector<PositivityInterval> positivity_region(const GridDensity& f, double threshold) {
  std::vector<PositivityInterval> out;
  const auto& x = f.nodes();
  const auto& v = f.values();
  std::size_t i = 0;
  while (i < x.size()) {
    if (v[i] > threshold) {
      std::size_t j = i;
      while (j + 1 < x.size() && v[j + 1] > threshold) ++j;
      out.push_back({x[i], x[j]});
      i = j + 1;
    } else {
      ++i;
    }
  }
  return out;
}

}  // namespace rwlab
