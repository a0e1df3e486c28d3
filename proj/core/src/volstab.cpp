#include "robarb/volstab.hpp"

#include "robarb/error.hpp"
#include "robarb/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace robarb {

std::shared_ptr<const UncertaintySetFamily> volstab_family(int n, double delta, double c1, double c2,
                                                           double growth_constant) {
  return std::make_shared<const UncertaintySetFamily>(n, VolStabBand{delta, c1, c2}, growth_constant);
}

Mat volstab_covariance(const Vec& z, double eta2) {
  const auto n = z.size();
  const double x = z.sum();
  Mat a = Mat::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) a(i, i) = eta2 * x / z[i];
  return a;
}

namespace {

MarketModelSpec volstab_primal(int n, std::function<double(double, const Vec&)> eta, double zeta,
                               std::string name, std::shared_ptr<const UncertaintySetFamily> family) {
  if (n < 2) throw InvalidArgument("volstab", "need at least two assets");
  MarketModelSpec m;
  m.name = std::move(name);
  m.dimension = n;
  m.mode = ModelMode::Primal;
  m.covariance = [eta](double t, const Vec& z) {
    const double e = eta(t, z);
    return volstab_covariance(z, e * e);
  };
  m.sqrt_covariance = [eta](double t, const Vec& z) {
    const double e = eta(t, z);
    Mat s = volstab_covariance(z, e * e);
    for (Eigen::Index i = 0; i < z.size(); ++i) s(i, i) = std::sqrt(s(i, i));
    return s;
  };
  m.theta = [eta, zeta](double t, const Vec& z) {
    const double e = eta(t, z);
    const double x = z.sum();
    Vec th(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) th[i] = zeta * std::sqrt(e * e * x / z[i]);
    return th;
  };
  m.family = family ? std::move(family) : volstab_family(n);
  return m;
}

} // namespace

MarketModelSpec least_favorable_model(int n, std::shared_ptr<const UncertaintySetFamily> family) {
  return volstab_primal(n, [](double, const Vec&) { return 1.0; }, 1.0, "least_favorable", std::move(family));
}

MarketModelSpec perturbed_model(int n, double eta, double zeta, std::shared_ptr<const UncertaintySetFamily> family) {
  if (!family) family = volstab_family(n, std::max(0.0, eta - 1.0), std::min(1.0, zeta * zeta),
                                       std::max(2.0, zeta * zeta * 1.0001));
  return volstab_primal(n, [eta](double, const Vec&) { return eta; }, zeta,
                        "eta=" + std::to_string(eta), std::move(family));
}

MarketModelSpec perturbed_model(int n, std::function<double(double, const Vec&)> eta, std::string name,
                                double zeta, std::shared_ptr<const UncertaintySetFamily> family) {
  if (!eta) throw InvalidArgument("perturbed_model", "empty eta selector");
  return volstab_primal(n, std::move(eta), zeta, std::move(name), std::move(family));
}

MarketModelSpec auxiliary_model(int n, double eta, std::shared_ptr<const UncertaintySetFamily> family) {
  if (n < 2) throw InvalidArgument("volstab", "need at least two assets");
  MarketModelSpec m;
  m.name = "auxiliary";
  m.dimension = n;
  m.mode = ModelMode::Auxiliary;
  const double e2 = eta * eta;
  m.covariance = [e2](double, const Vec& z) { return volstab_covariance(z, e2); };
  m.sqrt_covariance = [e2](double, const Vec& z) {
    Mat s = volstab_covariance(z, e2);
    for (Eigen::Index i = 0; i < z.size(); ++i) s(i, i) = std::sqrt(s(i, i));
    return s;
  };
  m.family = family ? std::move(family) : volstab_family(n, std::max(0.0, eta - 1.0));
  return m;
}

Solution solve_example_pde(const GridSpec& grid, const SolverOptions& opts) {
  auto sol = solve_linear([](const Vec& z) { return volstab_covariance(z); }, grid, opts);
  sol.value.scale_invariant = true;
  sol.value.metadata["solver"] = "solve_example_pde";
  sol.value.metadata["reference"] = "volstab";
  return sol;
}

double besq4_step(double psi, double h, std::mt19937_64& rng, std::normal_distribution<double>& normal) {
  const double a = normal(rng) + std::sqrt(psi / h);
  const double b = normal(rng);
  const double c = normal(rng);
  const double d = normal(rng);
  return h * (a * a + b * b + c * c + d * d);
}

namespace {

struct BesqPath {
  double f = 0.0;
  double clock = 0.0;
  long steps = 0;
  double bracket = 0.0;
  double min_psi = std::numeric_limits<double>::infinity();
  Vec x;
};

BesqPath besq_path(const Vec& z0, double T, double du, std::mt19937_64 rng) {
  std::normal_distribution<double> normal;
  const auto n = z0.size();
  Vec psi = z0, nxt(n);
  double t = 0.0, u = 0.0;
  BesqPath r;
  double prod0 = 1.0;
  for (Eigen::Index i = 0; i < n; ++i) prod0 *= z0[i];
  const double h0 = prod0 / z0.sum();
  while (true) {
    for (Eigen::Index i = 0; i < n; ++i) nxt[i] = besq4_step(psi[i], du, rng, normal);
    r.min_psi = std::min(r.min_psi, nxt.minCoeff());
    const double dt = 0.5 * du * (4.0 / psi.sum() + 4.0 / nxt.sum());
    ++r.steps;
    if (t + dt >= T) {
      const double w = (T - t) / dt;
      r.x = psi + w * (nxt - psi);
      r.clock = u + w * du;
      r.bracket = dt;
      break;
    }
    t += dt;
    u += du;
    psi = nxt;
  }
  double prod = 1.0;
  for (Eigen::Index i = 0; i < n; ++i) prod *= r.x[i];
  r.f = h0 * r.x.sum() / prod;
  return r;
}

} // namespace

OracleResult oracle_u(const Vec& z0, double T, long paths, std::uint64_t seed, const OracleOptions& opts) {
  const char* ctx = "oracle_u";
  if (z0.size() < 2 || !all_positive(z0) || !all_finite(z0)) throw InvalidArgument(ctx, "z0 must be positive");
  if (!(T > 0.0) || !std::isfinite(T)) throw InvalidArgument(ctx, "T must be positive");
  if (paths < 1) throw InvalidArgument(ctx, "paths must be >= 1");
  if (!(opts.u_step_fraction > 0.0)) throw InvalidArgument(ctx, "u_step_fraction must be positive");

  OracleResult r;
  r.paths = paths;
  r.seed = seed;
  double du = opts.u_step;
  if (!(du > 0.0)) {
    // Pilot on a coarse clock grid sized from the initial clock speed.
    const long pilot = std::max<long>(1, opts.pilot_paths);
    const double du0 = 1e-2 * z0.sum() * T / 4.0;
    std::vector<double> clocks(static_cast<std::size_t>(pilot));
    parallel_for(clocks.size(), opts.threads, [&](std::size_t p) {
      clocks[p] = besq_path(z0, T, du0, path_rng(~seed, p)).clock;
    });
    const auto e = mean_of(clocks);
    r.pilot_paths = pilot;
    r.pilot_mean_clock = e.mean;
    du = opts.u_step_fraction * e.mean;
  }
  r.u_step = du;

  std::vector<BesqPath> res(static_cast<std::size_t>(paths));
  parallel_for(res.size(), opts.threads, [&](std::size_t p) { res[p] = besq_path(z0, T, du, path_rng(seed, p)); });

  std::vector<double> f(res.size()), clock(res.size());
  double steps = 0.0;
  for (std::size_t p = 0; p < res.size(); ++p) {
    f[p] = res[p].f;
    clock[p] = res[p].clock;
    steps += static_cast<double>(res[p].steps);
  }
  const auto ef = mean_of(f);
  const auto ec = mean_of(clock);
  r.u_hat = ef.mean;
  r.std_error = ef.std_error;
  r.mean_clock = ec.mean;
  r.clock_std_error = ec.std_error;
  r.mean_steps = steps / static_cast<double>(res.size());
  if (opts.keep_ensemble) {
    auto& en = r.ensemble;
    en.dimension = static_cast<int>(z0.size());
    en.min_psi = std::numeric_limits<double>::infinity();
    for (const auto& b : res) {
      for (Eigen::Index i = 0; i < b.x.size(); ++i) en.terminal_x.push_back(b.x[i]);
      en.clock.push_back(b.clock);
      en.steps.push_back(b.steps);
      en.max_bracket_error = std::max(en.max_bracket_error, b.bracket);
      en.min_psi = std::min(en.min_psi, b.min_psi);
    }
  }
  return r;
}

MeanEstimate arbitrage_functional(const PathBundle& b) {
  const auto n = static_cast<Eigen::Index>(b.dimension);
  double prod0 = 1.0;
  for (Eigen::Index i = 0; i < n; ++i) prod0 *= b.x0[i];
  const double h0 = prod0 / b.x0.sum();
  std::vector<double> f(b.absorbed_step.size());
  for (std::size_t p = 0; p < f.size(); ++p) {
    if (b.absorbed_step[p] >= 0) {
      f[p] = 0.0;
      continue;
    }
    const Vec x = b.terminal(p);
    double prod = 1.0;
    for (Eigen::Index i = 0; i < n; ++i) prod *= x[i];
    f[p] = h0 * x.sum() / prod;
  }
  return mean_of(f);
}

} // namespace robarb
