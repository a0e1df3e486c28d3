#include "robarb/hjb.hpp"

#include "robarb/error.hpp"

#include <algorithm>
#include <atomic>
#include <barrier>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

namespace robarb {

std::string to_string(DriftScheme d) { return d == DriftScheme::Hybrid ? "hybrid" : "upwind"; }

DriftScheme drift_scheme_from_string(const std::string& s) {
  if (s == "hybrid") return DriftScheme::Hybrid;
  if (s == "upwind") return DriftScheme::Upwind;
  throw InvalidArgument("drift", "unknown drift scheme '" + s + "' (expected hybrid or upwind)");
}

std::string to_string(BoundaryMode m) { return m == BoundaryMode::Ray ? "ray" : "axis"; }

BoundaryMode boundary_mode_from_string(const std::string& s) {
  if (s == "ray") return BoundaryMode::Ray;
  if (s == "axis") return BoundaryMode::Axis;
  throw InvalidArgument("boundary", "unknown boundary mode '" + s + "' (expected ray or axis)");
}

double BoundaryOptions::floor_at(double tau) const {
  if (floor_table.empty()) return floor;
  if (tau <= floor_table.front().first) return floor_table.front().second;
  for (std::size_t k = 1; k < floor_table.size(); ++k) {
    const auto& [t1, v1] = floor_table[k];
    if (tau <= t1) {
      const auto& [t0, v0] = floor_table[k - 1];
      return v0 + (v1 - v0) * (tau - t0) / (t1 - t0);
    }
  }
  return floor_table.back().second;
}

double PolicyField::fraction_selecting(int candidate) const {
  if (interior_pairs == 0 || candidate < 0 || static_cast<std::size_t>(candidate) >= selections.size()) return 0.0;
  return static_cast<double>(selections[static_cast<std::size_t>(candidate)]) / static_cast<double>(interior_pairs);
}

namespace {

enum class Op { Hjb, Pucci };

using CandidateFn = std::function<std::vector<Mat>(const Vec& z)>;

std::string describe_node(const GridSpec& g, std::size_t p) {
  int idx[kMaxAssets];
  g.unflatten(p, idx);
  const Vec z = g.point(p);
  std::ostringstream os;
  os << "node (";
  for (int a = 0; a < g.dimension; ++a) os << (a ? "," : "") << idx[a];
  os << ") z=(";
  for (int a = 0; a < g.dimension; ++a) os << (a ? "," : "") << z[a];
  os << ")";
  return os.str();
}

// Off-center stencil weights per candidate, stored node-major per offset.
struct Stencil {
  std::vector<std::ptrdiff_t> offsets;
  int candidates = 1;
  std::vector<std::vector<std::vector<double>>> w; // w[c][k][p]
  std::vector<int> count;                          // real candidates per node
  std::vector<std::size_t> rows;                   // first node of each interior row
  std::size_t row_length = 0;
  double max_rate = 0.0;
  long negative = 0;
};

int offset_code(const int* d, int n) {
  int code = 0;
  for (int a = 0; a < n; ++a) code = code * 3 + (d[a] + 1);
  return code;
}

// Adds the weights of one candidate at one node into `wt` (indexed by offset code).
void node_weights(const Mat& a, const Vec& z, const GridSpec& g, Op op, DriftScheme drift, double* wt) {
  const int n = g.dimension;
  double x = 0.0;
  for (int i = 0; i < n; ++i) x += z[i];
  int d[kMaxAssets];
  auto add = [&](double v) { wt[offset_code(d, n)] += v; };
  auto clear = [&] { std::fill(d, d + n, 0); };
  for (int i = 0; i < n; ++i) {
    const double h = g.step(i);
    double c = -0.5 * a(i, i);
    if (op == Op::Hjb) {
      double s = 0.0;
      for (int j = 0; j < n; ++j) s += a(i, j) * z[j];
      c += s / x;
    }
    const double diff = 0.5 * a(i, i) / (h * h);
    double cross = 0.0;
    for (int j = 0; j < n; ++j) {
      if (j != i) cross += std::abs(0.5 * (a(i, j) + a(j, i))) / (2.0 * h * g.step(j));
    }
    clear();
    if (drift == DriftScheme::Hybrid && diff - std::abs(c) / (2.0 * h) >= cross) {
      d[i] = 1;
      add(diff + c / (2.0 * h));
      d[i] = -1;
      add(diff - c / (2.0 * h));
    } else {
      d[i] = 1;
      add(diff + (c > 0.0 ? c / h : 0.0));
      d[i] = -1;
      add(diff + (c < 0.0 ? -c / h : 0.0));
    }
  }
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double s = 0.5 * (a(i, j) + a(j, i));
      if (s == 0.0) continue;
      const double k = std::abs(s) / (2.0 * g.step(i) * g.step(j));
      const int sj = s > 0.0 ? 1 : -1;
      clear();
      d[i] = 1; d[j] = sj; add(k);
      d[i] = -1; d[j] = -sj; add(k);
      clear();
      d[i] = 1; add(-k);
      d[i] = -1; add(-k);
      clear();
      d[j] = 1; add(-k);
      d[j] = -1; add(-k);
    }
  }
}

Stencil build_stencil(const GridSpec& g, const CandidateFn& cands, Op op, bool allow_zero,
                      DriftScheme drift) {
  const int n = g.dimension;
  const std::size_t count = g.node_count();
  const auto strides = g.strides();
  int ncodes = 1;
  for (int a = 0; a < n; ++a) ncodes *= 3;
  const int center = (ncodes - 1) / 2;

  Stencil st;
  st.count.assign(count, 0);
  std::vector<std::size_t> interior;
  int idx[kMaxAssets];
  for (std::size_t p = 0; p < count; ++p) {
    g.unflatten(p, idx);
    if (g.is_interior(idx)) interior.push_back(p);
    if (g.is_interior(idx) && idx[n - 1] == 1) st.rows.push_back(p);
  }
  st.row_length = static_cast<std::size_t>(g.nodes.back() - 2);

  // Candidate matrices are regenerated per node rather than stored.
  int cmax = 0;
  for (std::size_t p : interior) {
    const auto mats = cands(g.point(p));
    if (mats.empty()) {
      throw NumericalError("hjb", "no candidate covariance yields an update at " + describe_node(g, p));
    }
    st.count[p] = static_cast<int>(mats.size());
    cmax = std::max(cmax, st.count[p]);
  }
  st.candidates = std::max(cmax, 1);

  std::vector<std::vector<std::vector<double>>> full(
      static_cast<std::size_t>(st.candidates),
      std::vector<std::vector<double>>(static_cast<std::size_t>(ncodes)));
  for (auto& c : full)
    for (auto& v : c) v.assign(count, 0.0);
  std::vector<double> wt(static_cast<std::size_t>(ncodes));
  for (std::size_t p : interior) {
    const Vec z = g.point(p);
    const auto mats = cands(z);
    for (int c = 0; c < st.candidates; ++c) {
      // Short lists are padded with candidate 0, which never wins a strict comparison.
      const Mat& a = mats[static_cast<std::size_t>(c < static_cast<int>(mats.size()) ? c : 0)];
      if (a.rows() != n || a.cols() != n || !a.allFinite()) {
        throw NumericalError("hjb", "malformed covariance at " + describe_node(g, p));
      }
      const bool zero = a.isZero(0.0);
      if (!(zero && allow_zero) && !is_spd(a)) {
        throw NumericalError("hjb", "covariance candidate " + std::to_string(c) +
                                        " is not symmetric positive definite at " + describe_node(g, p));
      }
      std::fill(wt.begin(), wt.end(), 0.0);
      node_weights(a, z, g, op, drift, wt.data());
      double rate = 0.0;
      for (int k = 0; k < ncodes; ++k) {
        if (k == center) continue;
        full[static_cast<std::size_t>(c)][static_cast<std::size_t>(k)][p] = wt[static_cast<std::size_t>(k)];
        rate += wt[static_cast<std::size_t>(k)];
        if (wt[static_cast<std::size_t>(k)] < 0.0 && c < st.count[p]) ++st.negative;
      }
      st.max_rate = std::max(st.max_rate, rate);
    }
  }

  // Keep only offsets that carry weight somewhere.
  for (int k = 0; k < ncodes; ++k) {
    if (k == center) continue;
    bool used = false;
    for (int c = 0; c < st.candidates && !used; ++c) {
      const auto& v = full[static_cast<std::size_t>(c)][static_cast<std::size_t>(k)];
      used = std::any_of(v.begin(), v.end(), [](double x) { return x != 0.0; });
    }
    if (!used) continue;
    int d[kMaxAssets];
    int code = k;
    for (int a = n - 1; a >= 0; --a) {
      d[a] = code % 3 - 1;
      code /= 3;
    }
    std::ptrdiff_t off = 0;
    for (int a = 0; a < n; ++a) off += d[a] * static_cast<std::ptrdiff_t>(strides[static_cast<std::size_t>(a)]);
    st.offsets.push_back(off);
  }
  st.w.resize(static_cast<std::size_t>(st.candidates));
  for (int c = 0; c < st.candidates; ++c) {
    for (int k = 0, kept = 0; k < ncodes; ++k) {
      if (k == center) continue;
      auto& v = full[static_cast<std::size_t>(c)][static_cast<std::size_t>(k)];
      bool used = false;
      for (int cc = 0; cc < st.candidates && !used; ++cc) {
        const auto& vv = full[static_cast<std::size_t>(cc)][static_cast<std::size_t>(k)];
        used = std::any_of(vv.begin(), vv.end(), [](double x) { return x != 0.0; });
      }
      if (!used) continue;
      st.w[static_cast<std::size_t>(c)].push_back(std::move(v));
      ++kept;
    }
  }
  return st;
}

// Boundary rules, applied to values normalized by `norm`.
struct BoundaryNode {
  enum Kind { Copy, Robin, Floor, Extrapolate } kind;
  std::size_t p;
  std::size_t src = 0;
  std::size_t src2 = 0;
  double factor = 1.0;
};

std::vector<BoundaryNode> build_boundary(const GridSpec& g, const BoundaryOptions& bo) {
  const int n = g.dimension;
  const std::size_t count = g.node_count();
  const auto strides = g.strides();
  auto flat = [&](const int* idx) {
    std::size_t f = 0;
    for (int a = 0; a < n; ++a) f += static_cast<std::size_t>(idx[a]) * strides[static_cast<std::size_t>(a)];
    return f;
  };
  auto mu_min = [&](std::size_t p) {
    const Vec z = g.point(p);
    return z.minCoeff() / z.sum();
  };
  std::vector<BoundaryNode> out;
  int idx[kMaxAssets], q[kMaxAssets];
  for (std::size_t p = 0; p < count; ++p) {
    g.unflatten(p, idx);
    if (g.is_interior(idx)) continue;
    bool low = false, high = false;
    for (int a = 0; a < n; ++a) {
      low |= idx[a] == 0;
      high |= idx[a] == g.nodes[static_cast<std::size_t>(a)] - 1;
    }
    BoundaryNode b{BoundaryNode::Copy, p};
    if (bo.mode == BoundaryMode::Axis) {
      if (low) {
        b.kind = BoundaryNode::Floor;
      } else {
        int q2[kMaxAssets];
        for (int a = 0; a < n; ++a) {
          const bool top = idx[a] == g.nodes[static_cast<std::size_t>(a)] - 1;
          q[a] = idx[a] - (top ? 1 : 0);
          q2[a] = idx[a] - (top ? 2 : 0);
        }
        b.kind = BoundaryNode::Extrapolate;
        b.src = flat(q);
        b.src2 = flat(q2);
      }
      out.push_back(b);
      continue;
    }
    bool ray = !(low && high);
    if (ray) {
      const int dir = low ? 1 : -1;
      for (int a = 0; a < n; ++a) q[a] = idx[a] + dir;
      ray = g.is_interior(q);
    }
    if (ray) {
      b.kind = BoundaryNode::Copy;
      b.src = flat(q);
    } else {
      for (int a = 0; a < n; ++a) {
        const int c = (g.nodes[static_cast<std::size_t>(a)] - 1) / 2;
        q[a] = idx[a] + (idx[a] < c ? 1 : (idx[a] > c ? -1 : 0));
      }
      b.kind = BoundaryNode::Robin;
      b.src = flat(q);
      b.factor = mu_min(p) / mu_min(b.src);
    }
    out.push_back(b);
  }
  return out;
}

void apply_boundary(std::vector<double>& u, const std::vector<BoundaryNode>& nodes,
                    const std::vector<double>& norm, double floor) {
  for (const auto& b : nodes) {
    double r = 0.0;
    switch (b.kind) {
    case BoundaryNode::Copy: r = u[b.src] / norm[b.src]; break;
    case BoundaryNode::Robin: r = u[b.src] / norm[b.src] * b.factor; break;
    case BoundaryNode::Floor: r = floor; break;
    case BoundaryNode::Extrapolate: r = 2.0 * u[b.src] / norm[b.src] - u[b.src2] / norm[b.src2]; break;
    }
    u[b.p] = std::clamp(r, 0.0, 1.0) * norm[b.p];
  }
}

// Fixed set of workers that repeatedly process a shared row range.
class RowPool {
public:
  using Body = std::function<void(std::size_t, std::size_t, int)>;

  RowPool(int threads, std::size_t rows, Body body)
      : workers_(std::clamp<int>(threads, 1, static_cast<int>(std::max<std::size_t>(rows, 1)))),
        rows_(rows), body_(std::move(body)), start_(workers_), done_(workers_) {
    for (int w = 1; w < workers_; ++w) {
      pool_.emplace_back([this, w] {
        while (true) {
          start_.arrive_and_wait();
          if (stop_) return;
          chunk(w);
          done_.arrive_and_wait();
        }
      });
    }
  }
  ~RowPool() {
    if (workers_ > 1) {
      stop_ = true;
      start_.arrive_and_wait();
    }
  }
  RowPool(const RowPool&) = delete;
  RowPool& operator=(const RowPool&) = delete;

  void run() {
    if (workers_ == 1) {
      body_(0, rows_, 0);
      return;
    }
    start_.arrive_and_wait();
    chunk(0);
    done_.arrive_and_wait();
    if (failure_) {
      auto f = failure_;
      failure_ = nullptr;
      std::rethrow_exception(f);
    }
  }
  int workers() const { return workers_; }

private:
  void chunk(int w) {
    const std::size_t per = (rows_ + static_cast<std::size_t>(workers_) - 1) / static_cast<std::size_t>(workers_);
    const std::size_t b = std::min(rows_, per * static_cast<std::size_t>(w));
    const std::size_t e = std::min(rows_, b + per);
    try {
      if (b < e) body_(b, e, w);
    } catch (...) {
      std::lock_guard lock(mutex_);
      if (!failure_) failure_ = std::current_exception();
    }
  }

  int workers_;
  std::size_t rows_;
  Body body_;
  std::barrier<> start_;
  std::barrier<> done_;
  std::atomic<bool> stop_{false};
  std::mutex mutex_;
  std::exception_ptr failure_;
  std::vector<std::jthread> pool_;
};

void check_finite(const std::vector<double>& u, const GridSpec& g, double tau) {
  for (std::size_t p = 0; p < u.size(); ++p) {
    if (!std::isfinite(u[p])) {
      throw NumericalError("hjb", "nonfinite value at " + describe_node(g, p) + " tau=" + std::to_string(tau));
    }
  }
}

nlohmann::json stats_json(const SolverStats& s) {
  return {{"steps", s.steps},         {"required_steps", s.required_steps},
          {"dtau", s.dtau},           {"max_rate", s.max_rate},
          {"cfl_number", s.cfl_number}, {"negative_weights", s.negative_weights},
          {"candidates", s.candidates}, {"boundary", s.boundary}};
}

Solution solve_core(const GridSpec& g, const CandidateFn& cands, Op op, const SolverOptions& opts,
                    const std::string& solver_name) {
  const auto t0 = std::chrono::steady_clock::now();
  g.validate();
  if (!(opts.cfl_safety > 0.0 && opts.cfl_safety <= 1.0)) {
    throw InvalidArgument("hjb", "cfl_safety must lie in (0, 1]");
  }
  if (opts.max_retained < 1) throw InvalidArgument("hjb", "max_retained must be >= 1");

  const Stencil st = build_stencil(g, cands, op, opts.allow_zero_matrix, opts.drift);
  const auto boundary = build_boundary(g, opts.boundary);
  const std::size_t count = g.node_count();
  const double T = g.horizon;

  SolverStats stats;
  stats.max_rate = st.max_rate;
  stats.negative_weights = st.negative;
  stats.candidates = st.candidates;
  stats.boundary = to_string(opts.boundary.mode);
  stats.required_steps = st.max_rate > 0.0
                             ? std::max<long>(1, static_cast<long>(std::ceil(T * st.max_rate / opts.cfl_safety)))
                             : 1;
  long K = g.time_steps == 0 ? stats.required_steps : g.time_steps;
  if (K < stats.required_steps) {
    throw CflError("hjb", "time_steps=" + std::to_string(K) + " violates the stability bound; need at least " +
                              std::to_string(stats.required_steps),
                   stats.required_steps);
  }
  const double dt = T / static_cast<double>(K);
  stats.steps = K;
  stats.dtau = dt;
  stats.cfl_number = dt * st.max_rate;

  std::vector<double> norm(count, 1.0);
  if (op == Op::Pucci) {
    for (std::size_t p = 0; p < count; ++p) norm[p] = g.point(p).sum();
  }
  std::vector<double> u = norm; // U(0) = 1, V(0) = X
  std::vector<double> next = u;

  const long stride = (K + opts.max_retained - 1) / opts.max_retained;
  auto retained = [&](long k) { return k % stride == 0 || k == K; };

  Solution sol;
  sol.value.grid = g;
  sol.value.grid.time_steps = K;
  sol.value.tag = op == Op::Pucci ? Quantity::V : Quantity::U;
  sol.policy.grid = sol.value.grid;
  sol.policy.candidate_count = st.count;
  sol.policy.selections.assign(static_cast<std::size_t>(st.candidates), 0);

  const int C = st.candidates;
  const std::size_t nk = st.offsets.size();
  const std::size_t len = st.row_length;
  const int threads = std::max(1, opts.threads);
  std::vector<std::vector<long>> counts(static_cast<std::size_t>(threads),
                                        std::vector<long>(static_cast<std::size_t>(C), 0));
  std::vector<int>* policy_slice = nullptr;
  bool update = true;

  auto body = [&](std::size_t rb, std::size_t re, int worker) {
    std::vector<double> acc(len), best(len);
    std::vector<int> arg(len);
    auto& cnt = counts[static_cast<std::size_t>(worker)];
    for (std::size_t r = rb; r < re; ++r) {
      const std::size_t p0 = st.rows[r];
      const double* up = u.data() + p0;
      for (int c = 0; c < C; ++c) {
        std::fill(acc.begin(), acc.end(), 0.0);
        for (std::size_t k = 0; k < nk; ++k) {
          const double* w = st.w[static_cast<std::size_t>(c)][k].data() + p0;
          const double* un = up + st.offsets[k];
          for (std::size_t j = 0; j < len; ++j) acc[j] += w[j] * (un[j] - up[j]);
        }
        if (c == 0) {
          std::copy(acc.begin(), acc.end(), best.begin());
          std::fill(arg.begin(), arg.end(), 0);
        } else {
          for (std::size_t j = 0; j < len; ++j) {
            if (acc[j] > best[j]) {
              best[j] = acc[j];
              arg[j] = c;
            }
          }
        }
      }
      if (update) {
        double* out = next.data() + p0;
        for (std::size_t j = 0; j < len; ++j) out[j] = up[j] + dt * best[j];
        if (C > 1)
          for (std::size_t j = 0; j < len; ++j) ++cnt[static_cast<std::size_t>(arg[j])];
      }
      if (policy_slice) std::copy(arg.begin(), arg.end(), policy_slice->begin() + static_cast<std::ptrdiff_t>(p0));
    }
  };
  RowPool pool(threads, st.rows.size(), body);
  stats.threads = pool.workers();

  auto record = [&](long k) {
    const double tau = k == K ? T : static_cast<double>(k) * dt;
    check_finite(u, g, tau);
    sol.value.tau.push_back(tau);
    sol.value.slices.push_back(u);
    sol.policy.tau.push_back(tau);
    sol.policy.index.emplace_back(count, 0);
    return &sol.policy.index.back();
  };

  for (long k = 0; k < K; ++k) {
    policy_slice = retained(k) ? record(k) : nullptr;
    pool.run();
    apply_boundary(next, boundary, norm, opts.boundary.floor_at(static_cast<double>(k + 1) * dt));
    std::swap(u, next);
  }
  policy_slice = record(K);
  update = false;
  pool.run();

  long total = 0;
  for (int c = 0; c < C; ++c) {
    long s = 0;
    for (const auto& cnt : counts) s += cnt[static_cast<std::size_t>(c)];
    sol.policy.selections[static_cast<std::size_t>(c)] = s;
    total += s;
  }
  if (C == 1) {
    total = K * static_cast<long>(st.rows.size() * len);
    sol.policy.selections[0] = total;
  }
  sol.policy.interior_pairs = total;

  stats.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  sol.stats = stats;
  sol.value.metadata = {{"solver", solver_name}, {"stats", stats_json(stats)}};
  return sol;
}

} // namespace

Solution solve_linear(const CovarianceField& a, const GridSpec& grid, const SolverOptions& opts) {
  if (!a) throw InvalidArgument("solve_linear", "empty covariance field");
  return solve_core(grid, [&](const Vec& z) { return std::vector<Mat>{a(z)}; }, Op::Hjb, opts,
                    "solve_linear");
}

Solution solve_hjb(const UncertaintySetFamily& family, const CandidateScan& scan,
                   const GridSpec& grid, const SolverOptions& opts) {
  if (family.dimension() != grid.dimension) {
    throw InvalidArgument("solve_hjb", "family dimension " + std::to_string(family.dimension()) +
                                           " does not match grid dimension " + std::to_string(grid.dimension));
  }
  auto sol = solve_core(grid, [&](const Vec& z) { return family.covariances(z, scan); }, Op::Hjb,
                        opts, "solve_hjb");
  sol.value.scale_invariant = family.scale_invariant();
  sol.value.metadata["family"] = family.kind_name();
  return sol;
}

Solution solve_pucci(const UncertaintySetFamily& family, const CandidateScan& scan,
                     const GridSpec& grid, const SolverOptions& opts) {
  if (family.dimension() != grid.dimension) {
    throw InvalidArgument("solve_pucci", "family dimension " + std::to_string(family.dimension()) +
                                             " does not match grid dimension " + std::to_string(grid.dimension));
  }
  auto sol = solve_core(grid, [&](const Vec& z) { return family.covariances(z, scan); }, Op::Pucci,
                        opts, "solve_pucci");
  sol.value.metadata["family"] = family.kind_name();
  return sol;
}

long required_time_steps(const UncertaintySetFamily& family, const CandidateScan& scan,
                         const GridSpec& grid, double cfl_safety, DriftScheme drift) {
  grid.validate();
  const Stencil st = build_stencil(grid, [&](const Vec& z) { return family.covariances(z, scan); },
                                   Op::Hjb, false, drift);
  return std::max<long>(1, static_cast<long>(std::ceil(grid.horizon * st.max_rate / cfl_safety)));
}

ResidualReport pdi_residual(const GridFunction& U, const UncertaintySetFamily& family,
                            const CandidateScan& scan, double tol, double skip_below,
                            DriftScheme drift) {
  const char* ctx = "pdi_residual";
  if (U.tag != Quantity::U) throw InvalidArgument(ctx, "grid function is not tagged U");
  if (U.slices.size() < 2 || U.tau.size() != U.slices.size()) {
    throw InvalidArgument(ctx, "need at least two retained slices");
  }
  if (family.dimension() != U.grid.dimension) throw InvalidArgument(ctx, "dimension mismatch");
  const GridSpec& g = U.grid;
  const Stencil st = build_stencil(g, [&](const Vec& z) { return family.covariances(z, scan); },
                                   Op::Hjb, false, drift);
  const std::size_t count = g.node_count();
  const std::size_t len = st.row_length;

  ResidualReport rep;
  rep.tolerance = tol;
  rep.min_residual = std::numeric_limits<double>::infinity();
  auto apply = [&](const std::vector<double>& u, int c, std::size_t p0, std::vector<double>& acc) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (std::size_t k = 0; k < st.offsets.size(); ++k) {
      const double* w = st.w[static_cast<std::size_t>(c)][k].data() + p0;
      const double* up = u.data() + p0;
      const double* un = up + st.offsets[k];
      for (std::size_t j = 0; j < len; ++j) acc[j] += w[j] * (un[j] - up[j]);
    }
  };
  std::vector<double> a0(len), a1(len), best(len);
  for (std::size_t s = 0; s + 1 < U.slices.size(); ++s) {
    const double dtau = U.tau[s + 1] - U.tau[s];
    if (!(dtau > 0.0)) throw InvalidArgument(ctx, "tau levels must increase");
    const double mid = 0.5 * (U.tau[s] + U.tau[s + 1]);
    if (mid < skip_below) continue;
    std::vector<double> field(count, std::numeric_limits<double>::quiet_NaN());
    const auto& u0 = U.slices[s];
    const auto& u1 = U.slices[s + 1];
    for (std::size_t p0 : st.rows) {
      for (int c = 0; c < st.candidates; ++c) {
        apply(u0, c, p0, a0);
        apply(u1, c, p0, a1);
        for (std::size_t j = 0; j < len; ++j) {
          const double v = 0.5 * (a0[j] + a1[j]);
          if (c == 0 || v > best[j]) best[j] = v;
        }
      }
      for (std::size_t j = 0; j < len; ++j) {
        const std::size_t p = p0 + j;
        const double r = (u1[p] - u0[p]) / dtau - best[j];
        field[p] = r;
        rep.max_abs_residual = std::max(rep.max_abs_residual, std::abs(r));
        if (r < rep.min_residual) {
          rep.min_residual = r;
          rep.witness_node = p;
          rep.witness_tau = mid;
        }
      }
    }
    rep.tau_mid.push_back(mid);
    rep.field.push_back(std::move(field));
  }
  if (rep.field.empty()) throw InvalidArgument(ctx, "no slice pairs above skip_below");
  rep.witness_z = g.point(rep.witness_node);
  rep.pass = rep.min_residual >= -tol;
  return rep;
}

} // namespace robarb
