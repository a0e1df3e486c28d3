#include "robarb/sde.hpp"

#include "robarb/error.hpp"
#include "robarb/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace robarb {

std::string to_string(ModelMode m) { return m == ModelMode::Primal ? "primal" : "auxiliary"; }

std::string to_string(Scheme s) {
  return s == Scheme::EulerFullTruncation ? "euler_full_truncation" : "log_euler";
}

Scheme scheme_from_string(const std::string& s) {
  if (s == "euler_full_truncation" || s == "euler") return Scheme::EulerFullTruncation;
  if (s == "log_euler") return Scheme::LogEuler;
  throw InvalidArgument("sim", "unknown scheme '" + s + "'");
}

void MarketModelSpec::validate() const {
  if (dimension < 1 || dimension > kMaxAssets) throw InvalidArgument("model", "bad dimension");
  if (!covariance) throw InvalidArgument("model", "missing covariance selector");
  if (family && family->dimension() != dimension) {
    throw InvalidArgument("model", "family dimension does not match model dimension");
  }
}

MarketModelSpec frozen_model(int n, ModelMode mode) {
  MarketModelSpec m;
  m.name = "frozen";
  m.dimension = n;
  m.mode = mode;
  m.covariance = [n](double, const Vec&) { return Mat(Mat::Zero(n, n)); };
  m.theta = [n](double, const Vec&) { return Vec(Vec::Zero(n)); };
  return m;
}

void SimConfig::validate() const {
  const char* ctx = "SimConfig";
  if (!(horizon >= 0.0) || !std::isfinite(horizon)) throw InvalidArgument(ctx, "horizon must be >= 0");
  if (steps < 1) throw InvalidArgument(ctx, "steps must be >= 1");
  if (paths < 1) throw InvalidArgument(ctx, "paths must be >= 1");
  if (!(absorb_eps > 0.0 && absorb_eps < 1.0)) throw InvalidArgument(ctx, "absorb_eps must lie in (0, 1)");
  if (observe_every < 0) throw InvalidArgument(ctx, "observe_every must be >= 0");
}

long SimConfig::observation_stride() const {
  return observe_every > 0 ? observe_every : (steps + 63) / 64;
}

std::vector<long> SimConfig::observation_steps() const {
  const long s = observation_stride();
  std::vector<long> out;
  for (long k = 0; k < steps; k += s) out.push_back(k);
  out.push_back(steps);
  return out;
}

std::mt19937_64 path_rng(std::uint64_t seed, std::uint64_t path) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(path), static_cast<std::uint32_t>(path >> 32)};
  return std::mt19937_64(seq);
}

PathStepper::PathStepper(const MarketModelSpec& model, const SimConfig& cfg, const Vec& x0,
                         std::uint64_t path)
    : model_(model), cfg_(cfg), rng_(path_rng(cfg.seed, path)), x_(x0), prev_(x0) {
  x0_total_ = x0.sum();
  dt_ = cfg.horizon / static_cast<double>(cfg.steps);
  sqdt_ = std::sqrt(dt_);
  a_ = Mat::Zero(model.dimension, model.dimension);
}

bool PathStepper::step() {
  const int n = model_.dimension;
  prev_ = x_;
  if (absorbed_) {
    ++k_;
    t_ = static_cast<double>(k_) * dt_;
    return false;
  }
  const double t = t_;
  const Vec& z = x_;
  a_ = model_.covariance(t, z);
  Mat s;
  if (model_.sqrt_covariance) {
    s = model_.sqrt_covariance(t, z);
  } else if (a_.isZero(0.0)) {
    s = Mat::Zero(n, n);
  } else {
    auto l = cholesky_lower(a_);
    if (!l) {
      std::ostringstream os;
      os << "covariance is not SPD at t=" << t << " z=" << z.transpose();
      throw NumericalError("simulate", os.str());
    }
    s = *l;
  }
  Vec theta = Vec::Zero(n);
  if (model_.mode == ModelMode::Primal && model_.theta) theta = model_.theta(t, z);

  if (model_.family && model_.check_every > 0 && k_ % model_.check_every == 0) {
    ++checks_;
    const Vec th = model_.mode == ModelMode::Primal ? theta : Vec();
    if (!model_.family->contains(z, th, a_, model_.check_tol)) {
      std::ostringstream os;
      os << "model '" << model_.name << "' leaves the uncertainty set at t=" << t << " z=" << z.transpose();
      throw NumericalError("simulate", os.str());
    }
  }

  Vec dw(n);
  for (int i = 0; i < n; ++i) dw[i] = sqdt_ * normal_(rng_);
  const Vec noise = s * dw;

  Vec beta(n);
  if (model_.mode == ModelMode::Primal) {
    beta = s * theta;
  } else {
    const double x = z.sum();
    beta = a_ * z / x;
  }

  Vec next(n);
  if (cfg_.scheme == Scheme::LogEuler) {
    for (int i = 0; i < n; ++i) next[i] = z[i] * std::exp((beta[i] - 0.5 * a_(i, i)) * dt_ + noise[i]);
  } else {
    // Coefficients are evaluated at the pre-step state, which is positive
    // until absorption; truncation therefore only acts on the frozen state.
    for (int i = 0; i < n; ++i) next[i] = z[i] + z[i] * (beta[i] * dt_ + noise[i]);
  }
  if (model_.mode == ModelMode::Primal) {
    log_l_ += -theta.dot(dw) - 0.5 * theta.squaredNorm() * dt_;
  }
  if (!next.allFinite() || !std::isfinite(log_l_)) {
    std::ostringstream os;
    os << "nonfinite state at t=" << t + dt_ << " from z=" << z.transpose();
    throw NumericalError("simulate", os.str());
  }
  const double threshold = cfg_.absorb_eps * x0_total_;
  for (int i = 0; i < n; ++i) {
    if (next[i] <= threshold) absorbed_ = true;
  }
  if (absorbed_) next = next.cwiseMax(0.0);
  clock_ += 0.125 * (z.sum() + next.sum()) * dt_;
  x_ = next;
  ++k_;
  t_ = static_cast<double>(k_) * dt_;
  return !absorbed_;
}

Vec PathBundle::state(std::size_t path, std::size_t obs) const {
  const auto& r = paths.at(path);
  Vec z(dimension);
  for (int i = 0; i < dimension; ++i) z[i] = r.x.at(obs * static_cast<std::size_t>(dimension) + static_cast<std::size_t>(i));
  return z;
}

Vec PathBundle::terminal(std::size_t path) const {
  Vec z(dimension);
  for (int i = 0; i < dimension; ++i) z[i] = terminal_x.at(path * static_cast<std::size_t>(dimension) + static_cast<std::size_t>(i));
  return z;
}

bool PathBundle::alive(std::size_t path, std::size_t obs) const {
  const long a = absorbed_step.at(path);
  return a < 0 || obs_steps.at(obs) < a;
}

long PathBundle::absorbed_count() const {
  return static_cast<long>(std::count_if(absorbed_step.begin(), absorbed_step.end(), [](long a) { return a >= 0; }));
}

PathBundle simulate(const MarketModelSpec& model, const Vec& x0, const SimConfig& cfg) {
  model.validate();
  cfg.validate();
  const int n = model.dimension;
  if (x0.size() != n) throw InvalidArgument("simulate", "x0 dimension does not match the model");
  if (!all_positive(x0) || !all_finite(x0)) throw InvalidArgument("simulate", "x0 must be positive");

  PathBundle b;
  b.model_name = model.name;
  b.mode = model.mode;
  b.dimension = n;
  b.config = cfg;
  b.x0 = x0;
  b.obs_steps = cfg.observation_steps();
  const double dt = cfg.horizon / static_cast<double>(cfg.steps);
  for (long k : b.obs_steps) b.obs_times.push_back(static_cast<double>(k) * dt);
  const auto M = static_cast<std::size_t>(cfg.paths);
  const auto nobs = b.obs_steps.size();
  if (cfg.keep_paths) b.paths.resize(M);
  b.terminal_x.assign(M * static_cast<std::size_t>(n), 0.0);
  b.terminal_clock.assign(M, 0.0);
  b.absorbed_step.assign(M, -1);
  std::vector<long> checks(M, 0);
  const double x0_total = x0.sum();
  const bool primal = model.mode == ModelMode::Primal;
  const double nan = std::numeric_limits<double>::quiet_NaN();

  parallel_for(M, cfg.threads, [&](std::size_t p) {
    PathStepper st(model, cfg, x0, p);
    PathRecord rec;
    if (cfg.keep_paths) {
      rec.x.reserve(nobs * static_cast<std::size_t>(n));
      rec.deflator.reserve(nobs);
      rec.lambda.reserve(nobs);
      rec.clock.reserve(nobs);
    }
    auto observe = [&] {
      if (!cfg.keep_paths) return;
      const Vec& z = st.state();
      for (int i = 0; i < n; ++i) rec.x.push_back(z[i]);
      if (!primal) {
        rec.deflator.push_back(nan);
        rec.lambda.push_back(nan);
      } else if (st.absorbed()) {
        rec.deflator.push_back(std::numeric_limits<double>::infinity());
        rec.lambda.push_back(0.0);
      } else {
        const double l = std::exp(st.log_deflator());
        rec.deflator.push_back(l);
        rec.lambda.push_back(x0_total / (l * z.sum()));
      }
      rec.clock.push_back(st.clock());
    };
    std::size_t next_obs = 0;
    for (long k = 0; k <= cfg.steps; ++k) {
      if (next_obs < nobs && b.obs_steps[next_obs] == k) {
        observe();
        ++next_obs;
      }
      if (k == cfg.steps) break;
      const bool was_alive = !st.absorbed();
      st.step();
      if (was_alive && st.absorbed()) rec.absorbed_step = k + 1;
    }
    for (int i = 0; i < n; ++i) b.terminal_x[p * static_cast<std::size_t>(n) + static_cast<std::size_t>(i)] = st.state()[i];
    b.terminal_clock[p] = st.clock();
    b.absorbed_step[p] = rec.absorbed_step;
    checks[p] = st.checks();
    if (cfg.keep_paths) b.paths[p] = std::move(rec);
  });
  for (long c : checks) b.constraint_checks += c;
  return b;
}

ContainmentEstimate containment_probability(const MarketModelSpec& model, const Vec& x0,
                                            const SimConfig& cfg) {
  if (model.mode != ModelMode::Auxiliary) {
    throw InvalidArgument("containment_probability", "model must be in auxiliary mode");
  }
  SimConfig c = cfg;
  c.keep_paths = false;
  const PathBundle b = simulate(model, x0, c);
  ContainmentEstimate e;
  e.paths = cfg.paths;
  e.absorbed = b.absorbed_count();
  e.q_hat = static_cast<double>(e.paths - e.absorbed) / static_cast<double>(e.paths);
  e.std_error = std::sqrt(e.q_hat * (1.0 - e.q_hat) / static_cast<double>(e.paths));
  return e;
}

MeanEstimate mean_of(const std::vector<double>& v) {
  MeanEstimate e;
  e.count = static_cast<long>(v.size());
  if (v.empty()) return e;
  double s = 0.0;
  for (double x : v) s += x;
  e.mean = s / static_cast<double>(v.size());
  if (v.size() > 1) {
    double q = 0.0;
    for (double x : v) q += (x - e.mean) * (x - e.mean);
    e.std_error = std::sqrt(q / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
  }
  return e;
}

TrendReport supermartingale_check(const MarketModelSpec& model, const GridFunction& U,
                                  const Vec& x0, const SimConfig& cfg, TrendKind kind,
                                  double sigmas) {
  return supermartingale_check(model, GridInterpolator(U), x0, cfg, kind, sigmas);
}

TrendReport supermartingale_check(const MarketModelSpec& model, const GridInterpolator& U,
                                  const Vec& x0, const SimConfig& cfg, TrendKind kind,
                                  double sigmas) {
  if (U.function().grid.dimension != model.dimension) {
    throw InvalidArgument("supermartingale_check", "grid dimension does not match the model");
  }
  SimConfig c = cfg;
  c.keep_paths = true;
  const PathBundle b = simulate(model, x0, c);
  const std::size_t M = b.paths.size();
  const std::size_t nobs = b.obs_count();
  const bool primal = model.mode == ModelMode::Primal;
  const double T = cfg.horizon;

  // xi[obs][path], NaN where excluded
  std::vector<std::vector<double>> xi(nobs, std::vector<double>(M));
  std::vector<long> clamped(M, 0);
  parallel_for(M, cfg.threads, [&](std::size_t p) {
    for (std::size_t k = 0; k < nobs; ++k) {
      const Vec z = b.state(p, k);
      const bool alive = b.alive(p, k);
      double v;
      if (primal) {
        if (!alive) {
          v = std::numeric_limits<double>::quiet_NaN();
        } else {
          const auto s = U.first_order(T - b.obs_times[k], z);
          clamped[p] += s.clamped ? 1 : 0;
          v = b.paths[p].deflator[k] * z.sum() * s.value;
        }
      } else if (!alive) {
        v = 0.0;
      } else {
        const auto s = U.first_order(T - b.obs_times[k], z);
        clamped[p] += s.clamped ? 1 : 0;
        v = s.value;
      }
      xi[k][p] = v;
    }
  });

  TrendReport r;
  r.kind = kind;
  r.sigmas = sigmas;
  r.times = b.obs_times;
  r.absorbed = b.absorbed_count();
  for (long cl : clamped) r.clamped += cl;
  for (std::size_t k = 0; k < nobs; ++k) {
    std::vector<double> vals;
    for (double v : xi[k])
      if (!std::isnan(v)) vals.push_back(v);
    const auto e = mean_of(vals);
    r.means.push_back(e.mean);
    r.stderrs.push_back(e.std_error);
    r.counts.push_back(e.count);
  }
  const double scale = std::abs(r.means.front()) + 1e-300;
  auto paired = [&](std::size_t j, std::size_t k) {
    std::vector<double> d;
    for (std::size_t p = 0; p < M; ++p) {
      if (!std::isnan(xi[j][p]) && !std::isnan(xi[k][p])) d.push_back(xi[k][p] - xi[j][p]);
    }
    return mean_of(d);
  };
  for (std::size_t k = 1; k < nobs; ++k) {
    bool bad = false;
    if (kind == TrendKind::Constant) {
      const auto d = paired(0, k);
      bad = std::abs(d.mean) > sigmas * d.std_error + 1e-12 * scale;
    } else {
      for (std::size_t j = 0; j < k && !bad; ++j) {
        const auto d = paired(j, k);
        bad = d.mean > sigmas * d.std_error + 1e-12 * scale;
      }
    }
    if (bad) r.witness_times.push_back(r.times[k]);
  }
  r.pass = r.witness_times.empty();
  return r;
}

} // namespace robarb
