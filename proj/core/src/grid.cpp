#include "robarb/grid.hpp"

#include "robarb/error.hpp"

#include <algorithm>
#include <cmath>

namespace robarb {

GridSpec GridSpec::cube(int n, double half_width, int m, double horizon, long time_steps) {
  GridSpec g;
  g.dimension = n;
  g.lower.assign(static_cast<std::size_t>(n), -half_width);
  g.upper.assign(static_cast<std::size_t>(n), half_width);
  g.nodes.assign(static_cast<std::size_t>(n), m);
  g.horizon = horizon;
  g.time_steps = time_steps;
  return g;
}

void GridSpec::validate() const {
  const char* ctx = "GridSpec";
  if (dimension != 2 && dimension != 3) throw InvalidArgument(ctx, "dimension must be 2 or 3");
  const auto n = static_cast<std::size_t>(dimension);
  if (lower.size() != n || upper.size() != n || nodes.size() != n) {
    throw InvalidArgument(ctx, "lower/upper/nodes must have one entry per axis");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!(lower[i] < upper[i]) || !std::isfinite(lower[i]) || !std::isfinite(upper[i])) {
      throw InvalidArgument(ctx, "axis " + std::to_string(i) + " needs finite lower < upper");
    }
    if (nodes[i] < 8) throw InvalidArgument(ctx, "axis " + std::to_string(i) + " needs at least 8 nodes");
  }
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw InvalidArgument(ctx, "horizon must be positive");
  if (time_steps < 0) throw InvalidArgument(ctx, "time_steps must be >= 1 (or 0 for automatic)");
}

double GridSpec::step(int axis) const {
  const auto a = static_cast<std::size_t>(axis);
  return (upper[a] - lower[a]) / (nodes[a] - 1);
}

double GridSpec::coord(int axis, int index) const {
  const auto a = static_cast<std::size_t>(axis);
  if (index == nodes[a] - 1) return upper[a];
  return lower[a] + index * step(axis);
}

std::size_t GridSpec::node_count() const {
  std::size_t c = 1;
  for (int m : nodes) c *= static_cast<std::size_t>(m);
  return c;
}

std::vector<std::size_t> GridSpec::strides() const {
  std::vector<std::size_t> s(static_cast<std::size_t>(dimension), 1);
  for (int a = dimension - 2; a >= 0; --a) {
    s[static_cast<std::size_t>(a)] = s[static_cast<std::size_t>(a) + 1] * static_cast<std::size_t>(nodes[static_cast<std::size_t>(a) + 1]);
  }
  return s;
}

void GridSpec::unflatten(std::size_t flat, int* index) const {
  for (int a = dimension - 1; a >= 0; --a) {
    const auto m = static_cast<std::size_t>(nodes[static_cast<std::size_t>(a)]);
    index[a] = static_cast<int>(flat % m);
    flat /= m;
  }
}

Vec GridSpec::point(std::size_t flat) const {
  int idx[kMaxAssets];
  unflatten(flat, idx);
  Vec z(dimension);
  for (int a = 0; a < dimension; ++a) z[a] = std::exp(coord(a, idx[a]));
  return z;
}

bool GridSpec::is_interior(const int* index) const {
  for (int a = 0; a < dimension; ++a) {
    if (index[a] == 0 || index[a] == nodes[static_cast<std::size_t>(a)] - 1) return false;
  }
  return true;
}

std::string to_string(Quantity q) {
  switch (q) {
  case Quantity::U: return "U";
  case Quantity::V: return "V";
  default: return "policy_index";
  }
}

Quantity quantity_from_string(const std::string& s) {
  if (s == "U") return Quantity::U;
  if (s == "V") return Quantity::V;
  if (s == "policy_index") return Quantity::PolicyIndex;
  throw InvalidArgument("GridFunction", "unknown quantity tag '" + s + "'");
}

double GridFunction::value(std::size_t slice, const Vec& z) const {
  const int n = grid.dimension;
  const auto strides = grid.strides();
  std::size_t base = 0;
  double w[kMaxAssets];
  for (int a = 0; a < n; ++a) {
    const auto ua = static_cast<std::size_t>(a);
    const double h = grid.step(a);
    double pos = (std::log(z[a]) - grid.lower[ua]) / h;
    pos = std::clamp(pos, 0.0, static_cast<double>(grid.nodes[ua] - 1));
    int i = std::min(static_cast<int>(pos), grid.nodes[ua] - 2);
    w[a] = pos - i;
    base += static_cast<std::size_t>(i) * strides[ua];
  }
  const auto& s = slices.at(slice);
  double acc = 0.0;
  for (int corner = 0; corner < (1 << n); ++corner) {
    double wt = 1.0;
    std::size_t off = base;
    for (int a = 0; a < n; ++a) {
      if (corner & (1 << a)) {
        wt *= w[a];
        off += strides[static_cast<std::size_t>(a)];
      } else {
        wt *= 1.0 - w[a];
      }
    }
    if (wt != 0.0) acc += wt * s[off];
  }
  return acc;
}

GridFunction tabulate(const GridSpec& grid, Quantity tag, const std::vector<double>& tau,
                      const std::function<double(double, const Vec&)>& f) {
  grid.validate();
  GridFunction g;
  g.grid = grid;
  g.tag = tag;
  g.tau = tau;
  const std::size_t count = grid.node_count();
  for (double t : tau) {
    std::vector<double> s(count);
    for (std::size_t p = 0; p < count; ++p) s[p] = f(t, grid.point(p));
    g.slices.push_back(std::move(s));
  }
  return g;
}

GridInterpolator::GridInterpolator(GridFunction f) : f_(std::move(f)) {
  const char* ctx = "GridInterpolator";
  f_.grid.validate();
  if (f_.slices.empty() || f_.slices.size() != f_.tau.size()) {
    throw InvalidArgument(ctx, "grid function has no slices or mismatched tau levels");
  }
  for (std::size_t k = 1; k < f_.tau.size(); ++k) {
    if (!(f_.tau[k] > f_.tau[k - 1])) throw InvalidArgument(ctx, "tau levels must increase");
  }
  const GridSpec& g = f_.grid;
  const int n = g.dimension;
  const std::size_t count = g.node_count();
  strides_ = g.strides();
  for (int a = 0; a < n; ++a) {
    center_.push_back(0.5 * (g.lower[static_cast<std::size_t>(a)] + g.upper[static_cast<std::size_t>(a)]));
  }

  // First differences: central inside, one-sided on the edges.
  auto diff = [&](const std::vector<double>& u, int a) {
    std::vector<double> d(count);
    const std::size_t st = strides_[static_cast<std::size_t>(a)];
    const int m = g.nodes[static_cast<std::size_t>(a)];
    const double h = g.step(a);
    int idx[kMaxAssets];
    for (std::size_t p = 0; p < count; ++p) {
      g.unflatten(p, idx);
      if (idx[a] == 0) d[p] = (u[p + st] - u[p]) / h;
      else if (idx[a] == m - 1) d[p] = (u[p] - u[p - st]) / h;
      else d[p] = (u[p + st] - u[p - st]) / (2.0 * h);
    }
    return d;
  };
  auto second = [&](const std::vector<double>& u, int a) {
    std::vector<double> d(count);
    const std::size_t st = strides_[static_cast<std::size_t>(a)];
    const int m = g.nodes[static_cast<std::size_t>(a)];
    const double h2 = g.step(a) * g.step(a);
    int idx[kMaxAssets];
    for (std::size_t p = 0; p < count; ++p) {
      g.unflatten(p, idx);
      std::size_t c = p;
      if (idx[a] == 0) c = p + st;
      else if (idx[a] == m - 1) c = p - st;
      d[p] = (u[c + st] - 2.0 * u[c] + u[c - st]) / h2;
    }
    return d;
  };

  const std::size_t ns = f_.slices.size();
  grad_.assign(static_cast<std::size_t>(n), std::vector<std::vector<double>>(ns));
  hess_.assign(static_cast<std::size_t>(n * n), std::vector<std::vector<double>>(ns));
  for (std::size_t s = 0; s < ns; ++s) {
    for (int a = 0; a < n; ++a) grad_[static_cast<std::size_t>(a)][s] = diff(f_.slices[s], a);
    for (int a = 0; a < n; ++a) {
      hess_[static_cast<std::size_t>(a * n + a)][s] = second(f_.slices[s], a);
      for (int b = a + 1; b < n; ++b) {
        auto ab = diff(grad_[static_cast<std::size_t>(a)][s], b);
        auto ba = diff(grad_[static_cast<std::size_t>(b)][s], a);
        for (std::size_t p = 0; p < count; ++p) ab[p] = 0.5 * (ab[p] + ba[p]);
        hess_[static_cast<std::size_t>(b * n + a)][s] = ab;
        hess_[static_cast<std::size_t>(a * n + b)][s] = std::move(ab);
      }
    }
  }
}

GridInterpolator::Locate GridInterpolator::locate(double tau, const Vec& z) const {
  const GridSpec& g = f_.grid;
  const int n = g.dimension;
  Locate loc{};
  if (z.size() != n) throw InvalidArgument("GridInterpolator", "point dimension mismatch");

  const auto& t = f_.tau;
  const double tc = std::clamp(tau, t.front(), t.back());
  loc.clamped = tau < t.front() - 1e-12 || tau > t.back() + 1e-12;
  if (t.size() == 1) {
    loc.s0 = loc.s1 = 0;
    loc.wt = 0.0;
  } else {
    auto it = std::upper_bound(t.begin(), t.end(), tc);
    std::size_t hi = static_cast<std::size_t>(it - t.begin());
    hi = std::clamp<std::size_t>(hi, 1, t.size() - 1);
    loc.s0 = hi - 1;
    loc.s1 = hi;
    loc.wt = (tc - t[loc.s0]) / (t[loc.s1] - t[loc.s0]);
  }

  double y[kMaxAssets];
  for (int a = 0; a < n; ++a) y[a] = std::log(z[a]);
  if (f_.scale_invariant) {
    double shift = 0.0;
    for (int a = 0; a < n; ++a) shift += center_[static_cast<std::size_t>(a)] - y[a];
    shift /= n;
    for (int a = 0; a < n; ++a) y[a] += shift;
  }
  loc.base = 0;
  for (int a = 0; a < n; ++a) {
    const auto ua = static_cast<std::size_t>(a);
    const double h = g.step(a);
    double pos = (y[a] - g.lower[ua]) / h;
    const double top = static_cast<double>(g.nodes[ua] - 1);
    if (pos < -1e-9 || pos > top + 1e-9) loc.clamped = true;
    pos = std::clamp(pos, 0.0, top);
    const int i = std::min(static_cast<int>(pos), g.nodes[ua] - 2);
    loc.w[a] = pos - i;
    loc.base += static_cast<std::size_t>(i) * strides_[ua];
  }
  return loc;
}

double GridInterpolator::interp(const std::vector<double>& field, const Locate& loc,
                                std::size_t) const {
  const int n = f_.grid.dimension;
  double acc = 0.0;
  for (int corner = 0; corner < (1 << n); ++corner) {
    double wt = 1.0;
    std::size_t off = loc.base;
    for (int a = 0; a < n; ++a) {
      if (corner & (1 << a)) {
        wt *= loc.w[a];
        off += strides_[static_cast<std::size_t>(a)];
      } else {
        wt *= 1.0 - loc.w[a];
      }
    }
    if (wt != 0.0) acc += wt * field[off];
  }
  return acc;
}

double GridInterpolator::interp_tau(const std::vector<std::vector<double>>& field,
                                    const Locate& loc) const {
  const double v0 = interp(field[loc.s0], loc, loc.s0);
  if (loc.s1 == loc.s0 || loc.wt == 0.0) return v0;
  const double v1 = interp(field[loc.s1], loc, loc.s1);
  return v0 + loc.wt * (v1 - v0);
}

GridInterpolator::Sample GridInterpolator::first_order(double tau, const Vec& z) const {
  const int n = f_.grid.dimension;
  const Locate loc = locate(tau, z);
  Sample s;
  s.clamped = loc.clamped;
  s.value = interp_tau(f_.slices, loc);
  if (loc.s1 != loc.s0) {
    s.dtau = (interp(f_.slices[loc.s1], loc, loc.s1) - interp(f_.slices[loc.s0], loc, loc.s0)) /
             (f_.tau[loc.s1] - f_.tau[loc.s0]);
  }
  s.grad.resize(n);
  for (int a = 0; a < n; ++a) s.grad[a] = interp_tau(grad_[static_cast<std::size_t>(a)], loc);
  return s;
}

GridInterpolator::Sample GridInterpolator::sample(double tau, const Vec& z) const {
  Sample s = first_order(tau, z);
  const int n = f_.grid.dimension;
  const Locate loc = locate(tau, z);
  s.hess.resize(n, n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) s.hess(a, b) = interp_tau(hess_[static_cast<std::size_t>(a * n + b)], loc);
  return s;
}

double GridInterpolator::value(double tau, const Vec& z) const {
  return interp_tau(f_.slices, locate(tau, z));
}

} // namespace robarb
