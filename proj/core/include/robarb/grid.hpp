#pragma once

#include "robarb/linalg.hpp"

#include <nlohmann/json.hpp>

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

namespace robarb {

// Tensor grid in log-capitalization coordinates y_i = ln z_i, plus the
// time horizon. time_steps == 0 lets the solver pick the minimal stable K.
struct GridSpec {
  int dimension = 2;
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<int> nodes;
  double horizon = 1.0;
  long time_steps = 0;

  // Cube [-half_width, half_width]^n with m nodes per axis.
  static GridSpec cube(int n, double half_width, int m, double horizon, long time_steps = 0);

  void validate() const;
  double step(int axis) const;
  double coord(int axis, int index) const;
  std::size_t node_count() const;
  // Flat index strides, last axis fastest.
  std::vector<std::size_t> strides() const;
  void unflatten(std::size_t flat, int* index) const;
  // z-space point of a node.
  Vec point(std::size_t flat) const;
  bool is_interior(const int* index) const;
  bool operator==(const GridSpec&) const = default;
};

enum class Quantity { U, V, PolicyIndex };

std::string to_string(Quantity q);
Quantity quantity_from_string(const std::string& s);

// Retained time slices of a grid solution. Slice k holds values at tau[k]
// over every node (flat index, last axis fastest).
struct GridFunction {
  GridSpec grid;
  Quantity tag = Quantity::U;
  std::vector<double> tau;
  std::vector<std::vector<double>> slices;
  bool scale_invariant = false;
  nlohmann::json metadata = nlohmann::json::object();

  std::size_t slice_count() const { return slices.size(); }
  const std::vector<double>& last() const { return slices.back(); }
  // Multilinear interpolation of one slice at a z-space point (clamped).
  double value(std::size_t slice, const Vec& z) const;
};

// Builds a GridFunction by evaluating f(tau, z) at the given levels.
GridFunction tabulate(const GridSpec& grid, Quantity tag, const std::vector<double>& tau,
                      const std::function<double(double, const Vec&)>& f);

// Values, log-coordinate gradients and Hessians of a U grid at arbitrary
// (tau, z): multilinear in space, linear in tau between retained slices.
class GridInterpolator {
public:
  struct Sample {
    double value = 0.0;
    double dtau = 0.0;
    Vec grad;
    Mat hess;
    bool clamped = false;
  };

  explicit GridInterpolator(GridFunction f);

  // Scale-invariant grids are re-centred along the diagonal before clamping.
  Sample sample(double tau, const Vec& z) const;
  double value(double tau, const Vec& z) const;
  // Gradient and value only (skips Hessian interpolation).
  Sample first_order(double tau, const Vec& z) const;

  const GridFunction& function() const noexcept { return f_; }
  double horizon() const noexcept { return f_.tau.back(); }

private:
  struct Locate {
    std::size_t s0, s1;
    double wt;
    std::size_t base;
    double w[kMaxAssets];
    bool clamped;
  };
  Locate locate(double tau, const Vec& z) const;
  double interp(const std::vector<double>& field, const Locate& loc, std::size_t slice) const;
  double interp_tau(const std::vector<std::vector<double>>& field, const Locate& loc) const;

  GridFunction f_;
  std::vector<std::size_t> strides_;
  std::vector<double> center_;
  // grad_[a][slice], hess_[a*n+b][slice]
  std::vector<std::vector<std::vector<double>>> grad_;
  std::vector<std::vector<std::vector<double>>> hess_;
};

} // namespace robarb
