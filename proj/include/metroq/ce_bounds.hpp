#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "metroq/fisher.hpp"

namespace metroq {

// Kraus operators K_{x,j} = |x><j| A_x with A_x = sqrt(M_{x,phi}) U(theta0),
// where M_{x,phi} = V^dagger M_x V. They differ from |x><j| U^dagger
// sqrt(M_{x,phi}) U only by a theta-dependent unitary on the j index, which
// the gauge freedom absorbs. With this choice dK/dtheta = i K h.
struct CanonicalKraus {
  std::vector<CMat> blocks;  // A_x, d x d
  CMat h;
  double theta0 = 0.0;
  Index d = 0;
  Index nx = 0;

  std::vector<CMat> operators() const {
    std::vector<CMat> out;
    for (Index x = 0; x < nx; ++x)
      for (Index j = 0; j < d; ++j) {
        CMat k = CMat::Zero(nx, d);
        k.row(x) = blocks[static_cast<std::size_t>(x)].row(j);
        out.push_back(k);
      }
    return out;
  }
  std::vector<CMat> derivatives() const {
    auto ks = operators();
    for (auto& k : ks) k = I * k * h;
    return ks;
  }
};

class GaugeGenerator {
 public:
  explicit GaugeGenerator(CMat g) : g_(std::move(g)) {
    if (!is_hermitian(g_)) throw invalid_object("gauge generator is not Hermitian");
    g_ = hermitian_part(g_);
  }
  static GaugeGenerator zero(Index n) { return GaugeGenerator(CMat::Zero(n, n)); }
  const CMat& matrix() const { return g_; }

 private:
  CMat g_;
};

struct CeSolverConfig {
  double mu0 = 0.05;       // initial smoothing, relative to the objective scale
  double mu_min = 1e-8;    // smoothing schedule stops below this
  std::size_t max_iters = 400;  // BFGS iterations per smoothing stage
  double gap_tol = 1e-6;   // relative primal-dual gap for convergence
};

struct CeResult {
  double alpha_norm = 0.0;
  double beta_norm = 0.0;
  int N = 1;
  double bound_finite = 0.0;
  double bound_asymptotic = std::numeric_limits<double>::infinity();
  double per_probe_c = std::numeric_limits<double>::infinity();  // min ||alpha|| with beta = 0
  double dual_bound = 0.0;  // certified lower bound on per_probe_c
  std::size_t iterations = 0;
  bool feasible = true;  // a beta = 0 gauge exists
  bool converged = false;
  std::optional<GaugeGenerator> g_opt;
};

inline CanonicalKraus canonical_kraus(const Povm& m, const UnitaryEncoding& enc, const CMat& v) {
  require_dims(enc.dim() == m.dim(), "encoding and POVM dimensions differ");
  require_dims(v.rows() == m.dim() && v.cols() == m.dim(), "control unitary dimension");
  if (!is_unitary(v)) throw invalid_object("control matrix is not unitary");
  CanonicalKraus k;
  k.d = m.dim();
  k.nx = static_cast<Index>(m.outcomes());
  k.h = enc.generator();
  k.theta0 = enc.theta0();
  const CMat u = enc.unitary();
  for (const auto& e : m.elements()) k.blocks.push_back(psd_sqrt(v.adjoint() * e * v) * u);
  return k;
}

// alpha and beta for a general stacked gauge generator g of size (|X| d).
inline std::pair<CMat, CMat> alpha_beta(const CanonicalKraus& k, const GaugeGenerator& g) {
  const Index n = k.nx * k.d;
  require_dims(g.matrix().rows() == n, "gauge generator size must be |X| d");
  const auto ks = k.operators();
  const auto dks = k.derivatives();
  CMat alpha = CMat::Zero(k.d, k.d), beta = CMat::Zero(k.d, k.d);
  for (Index a = 0; a < n; ++a) {
    CMat t = dks[static_cast<std::size_t>(a)];
    for (Index b = 0; b < n; ++b) {
      const cplx gab = g.matrix()(a, b);
      if (gab != cplx(0.0)) t -= I * gab * ks[static_cast<std::size_t>(b)];
    }
    alpha += t.adjoint() * t;
    beta += I * t.adjoint() * ks[static_cast<std::size_t>(a)];
  }
  return {hermitian_part(alpha), hermitian_part(beta)};
}

namespace detail {

// Block-diagonal gauge g = diag(g_x) parameterised by real coordinates of
// each Hermitian g_x in an orthonormal Hermitian basis. Off-diagonal blocks
// only add positive terms to alpha and leave beta unchanged, so the optimum
// is always block diagonal.
class BlockGauge {
 public:
  explicit BlockGauge(const CanonicalKraus& k) : k_(k), basis_(hermitian_basis(k.d)) {}

  Index size() const { return k_.nx * static_cast<Index>(basis_.size()); }
  Index per_block() const { return static_cast<Index>(basis_.size()); }
  const std::vector<CMat>& basis() const { return basis_; }
  const CanonicalKraus& kraus() const { return k_; }

  std::vector<CMat> blocks(const RVec& t) const {
    std::vector<CMat> g(static_cast<std::size_t>(k_.nx), CMat::Zero(k_.d, k_.d));
    for (Index x = 0; x < k_.nx; ++x)
      for (Index b = 0; b < per_block(); ++b) g[static_cast<std::size_t>(x)] += t[x * per_block() + b] * basis_[static_cast<std::size_t>(b)];
    return g;
  }

  // D_x = A_x h - g_x A_x.
  std::vector<CMat> residuals(const RVec& t) const {
    auto g = blocks(t);
    std::vector<CMat> d;
    for (Index x = 0; x < k_.nx; ++x) {
      const CMat& a = k_.blocks[static_cast<std::size_t>(x)];
      d.push_back(a * k_.h - g[static_cast<std::size_t>(x)] * a);
    }
    return d;
  }

  CMat alpha(const std::vector<CMat>& d) const {
    CMat al = CMat::Zero(k_.d, k_.d);
    for (const auto& dx : d) al += dx.adjoint() * dx;
    return hermitian_part(al);
  }

  CMat beta(const RVec& t) const {
    auto g = blocks(t);
    CMat b = k_.h;
    for (Index x = 0; x < k_.nx; ++x) {
      const CMat& a = k_.blocks[static_cast<std::size_t>(x)];
      b -= a.adjoint() * g[static_cast<std::size_t>(x)] * a;
    }
    return hermitian_part(b);
  }

  // Real-linear map t -> coordinates of sum_x A_x^dagger g_x A_x.
  RMat beta_map() const {
    const Index m = per_block();
    RMat out(m, size());
    for (Index x = 0; x < k_.nx; ++x) {
      const CMat& a = k_.blocks[static_cast<std::size_t>(x)];
      for (Index b = 0; b < m; ++b) {
        const CMat img = a.adjoint() * basis_[static_cast<std::size_t>(b)] * a;
        for (Index r = 0; r < m; ++r) out(r, x * m + b) = (basis_[static_cast<std::size_t>(r)] * img).trace().real();
      }
    }
    return out;
  }

  RVec coords(const CMat& herm) const {
    RVec c(per_block());
    for (Index r = 0; r < per_block(); ++r) c[r] = (basis_[static_cast<std::size_t>(r)] * herm).trace().real();
    return c;
  }

  // d/dt Tr(G alpha(t)) for Hermitian G.
  RVec alpha_gradient(const std::vector<CMat>& d, const CMat& g) const {
    RVec grad(size());
    for (Index x = 0; x < k_.nx; ++x) {
      const CMat z = d[static_cast<std::size_t>(x)] * g * k_.blocks[static_cast<std::size_t>(x)].adjoint();
      for (Index b = 0; b < per_block(); ++b)
        grad[x * per_block() + b] = -2.0 * (basis_[static_cast<std::size_t>(b)] * z).trace().real();
    }
    return grad;
  }

  // d/dt Re Tr(Y beta(t)) for Hermitian Y.
  RVec beta_gradient(const CMat& y) const {
    RVec grad(size());
    for (Index x = 0; x < k_.nx; ++x) {
      const CMat& a = k_.blocks[static_cast<std::size_t>(x)];
      const CMat z = a * y * a.adjoint();
      for (Index b = 0; b < per_block(); ++b)
        grad[x * per_block() + b] = -(basis_[static_cast<std::size_t>(b)] * z).trace().real();
    }
    return grad;
  }

  GaugeGenerator stacked(const RVec& t) const {
    const Index n = k_.nx * k_.d;
    CMat g = CMat::Zero(n, n);
    auto gb = blocks(t);
    for (Index x = 0; x < k_.nx; ++x) g.block(x * k_.d, x * k_.d, k_.d, k_.d) = gb[static_cast<std::size_t>(x)];
    return GaugeGenerator(g);
  }

 private:
  const CanonicalKraus& k_;
  std::vector<CMat> basis_;
};

// Smoothed largest eigenvalue mu log sum exp(lambda_i / mu) and its gradient
// projector G = sum_i w_i v_i v_i^dagger (softmax weights).
struct SmoothMax {
  double value;
  CMat grad;
};

inline SmoothMax smooth_max(const CMat& a, double mu) {
  auto es = herm_eig(a);
  const RVec& ev = es.eigenvalues();
  const double m = ev.maxCoeff();
  RVec w = ((ev.array() - m) / mu).exp();
  const double s = w.sum();
  w /= s;
  return {m + mu * std::log(s), es.eigenvectors() * w.cast<cplx>().asDiagonal() * es.eigenvectors().adjoint()};
}

// Lower bound min_t Tr(G alpha(t)) over the affine set t = t0 + basis z,
// an equality-constrained least-squares problem in t.
inline double alpha_dual(const BlockGauge& bg, const RVec& t0, const RMat& null_basis, const CMat& g) {
  const auto& k = bg.kraus();
  const CMat s = psd_sqrt(hermitian_part(g), 1e-8);
  const Index dd = k.d * k.d;
  const Index rows = 2 * dd * k.nx;
  RVec c(rows);
  RMat b = RMat::Zero(rows, bg.size());
  auto d0 = bg.residuals(t0);
  for (Index x = 0; x < k.nx; ++x) {
    const CMat cx = d0[static_cast<std::size_t>(x)] * s;
    const CMat as = k.blocks[static_cast<std::size_t>(x)] * s;
    for (Index e = 0; e < dd; ++e) {
      c[2 * (x * dd + e)] = cx(e / k.d, e % k.d).real();
      c[2 * (x * dd + e) + 1] = cx(e / k.d, e % k.d).imag();
    }
    for (Index bb = 0; bb < bg.per_block(); ++bb) {
      const CMat col = bg.basis()[static_cast<std::size_t>(bb)] * as;
      for (Index e = 0; e < dd; ++e) {
        b(2 * (x * dd + e), x * bg.per_block() + bb) = col(e / k.d, e % k.d).real();
        b(2 * (x * dd + e) + 1, x * bg.per_block() + bb) = col(e / k.d, e % k.d).imag();
      }
    }
  }
  // Residual of c - b (basis z); the sign of the correction is absorbed in z.
  const RMat bz = b * null_basis;
  RVec z = bz.size() ? RVec(bz.completeOrthogonalDecomposition().solve(c)) : RVec();
  const RVec r = bz.size() ? RVec(c - bz * z) : c;
  return r.squaredNorm();
}

}  // namespace detail

// Gauge with beta = 0 built directly from the detection channel: in the basis
// of the ideal projectors, g_x = V^dagger G V for all x with
// G_ii' = <pi_i|V h V^dagger|pi_i'> / sum_x sqrt(p(x|i) p(x|i')).
inline std::optional<GaugeGenerator> beta_zero_feasible(const DetectionChannel& p, const ProjectiveMeasurement& pi,
                                                        const UnitaryEncoding& enc, const CMat& v) {
  if (!is_nontrivial(p)) return std::nullopt;
  const Index d = pi.dim(), nx = p.outcomes();
  require_dims(enc.dim() == d, "encoding and measurement dimensions differ");
  CMat w(d, d);  // rows <pi_i|
  for (Index i = 0; i < d; ++i) {
    const auto es = herm_eig(pi.projectors()[static_cast<std::size_t>(i)]);
    w.row(i) = es.eigenvectors().col(d - 1).adjoint();
  }
  const CMat hh = w * v * enc.generator() * v.adjoint() * w.adjoint();
  CMat gg(d, d);
  for (Index i = 0; i < d; ++i)
    for (Index j = 0; j < d; ++j) {
      double s = 0.0;
      for (Index x = 0; x < nx; ++x) s += std::sqrt(p(x, i) * p(x, j));
      gg(i, j) = hh(i, j) / s;
    }
  const CMat gx = v.adjoint() * w.adjoint() * gg * w * v;
  CMat g = CMat::Zero(nx * d, nx * d);
  for (Index x = 0; x < nx; ++x) g.block(x * d, x * d, d, d) = gx;
  GaugeGenerator out(hermitian_part(g));
  const auto k = canonical_kraus(povm_from_detection(p, pi), enc, v);
  const auto [alpha, beta] = alpha_beta(k, out);
  (void)alpha;
  if (beta.cwiseAbs().maxCoeff() > 1e-8) return std::nullopt;
  return out;
}

// 4 min ||alpha(g)|| subject to beta(g) = 0, per probe.
inline CeResult asymptotic_ce_bound(const Povm& m, const UnitaryEncoding& enc, const CMat& v,
                                    const CeSolverConfig& cfg = {}, int N = 1) {
  const auto k = canonical_kraus(m, enc, v);
  detail::BlockGauge bg(k);
  CeResult res;
  res.N = N;
  const RMat lmap = bg.beta_map();
  const RVec target = bg.coords(k.h);
  Eigen::JacobiSVD<RMat> svd(lmap, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const RVec sv = svd.singularValues();
  const double smax = sv.size() ? sv.maxCoeff() : 0.0;
  Index rank = 0;
  for (Index i = 0; i < sv.size(); ++i)
    if (sv[i] > 1e-10 * std::max(1.0, smax)) ++rank;
  const RVec t0 = svd.solve(target);
  if ((lmap * t0 - target).norm() > 1e-8 * std::max(1.0, target.norm())) {
    res.feasible = false;
    res.converged = true;
    return res;
  }
  const RMat nb = svd.matrixV().rightCols(bg.size() - rank);

  auto lift = [&](const RVec& z) -> RVec { return nb.cols() ? RVec(t0 + nb * z) : t0; };
  double mu = cfg.mu0 * std::max(1.0, lambda_max(bg.alpha(bg.residuals(t0))));
  RVec z = RVec::Zero(nb.cols());
  std::size_t iters = 0;
  while (true) {
    const double mu_k = mu;
    Objective f = [&](const RVec& zz) { return detail::smooth_max(bg.alpha(bg.residuals(lift(zz))), mu_k).value; };
    Gradient gfun = [&](const RVec& zz, RVec& out) {
      const RVec t = lift(zz);
      const auto d = bg.residuals(t);
      const auto sm = detail::smooth_max(bg.alpha(d), mu_k);
      const RVec gt = bg.alpha_gradient(d, sm.grad);
      out = nb.cols() ? RVec(nb.transpose() * gt) : RVec();
    };
    BfgsOptions bo;
    bo.max_iters = cfg.max_iters;
    bo.grad_tol = 1e-12;
    bo.step = 0.1;
    auto r = bfgs(f, gfun, z, bo);
    iters += r.iterations;
    z = r.x;
    // Every softmax projector certifies a lower bound; keep the best one.
    const CMat g_k = detail::smooth_max(bg.alpha(bg.residuals(lift(z))), mu_k).grad;
    res.dual_bound = std::max(res.dual_bound, detail::alpha_dual(bg, t0, nb, g_k));
    if (mu < cfg.mu_min) break;
    mu *= 0.5;
  }
  const RVec t = lift(z);
  const auto d = bg.residuals(t);
  res.per_probe_c = lambda_max(bg.alpha(d));
  res.alpha_norm = res.per_probe_c;
  res.beta_norm = herm_norm(bg.beta(t));
  res.iterations = iters;
  res.converged = res.per_probe_c - res.dual_bound <= cfg.gap_tol * std::max(1.0, res.per_probe_c);
  res.bound_asymptotic = 4.0 * N * res.per_probe_c;
  res.bound_finite = res.bound_asymptotic;
  res.g_opt = bg.stacked(t);
  return res;
}

// 4 min_g { N ||alpha(g)|| + N (N - 1) ||beta(g)||^2 }. Every gauge gives a
// valid upper bound, so the returned value is an upper estimate even if the
// smoothing schedule stops early.
inline CeResult finite_ce_bound(const Povm& m, const UnitaryEncoding& enc, const CMat& v, int N,
                                const CeSolverConfig& cfg = {}) {
  if (N < 1) throw std::invalid_argument("N must be positive");
  const auto k = canonical_kraus(m, enc, v);
  detail::BlockGauge bg(k);
  CeResult res;
  res.N = N;
  const double n1 = N, n2 = double(N) * (N - 1);
  // Start from the least-squares beta = 0 gauge.
  const RMat lmap = bg.beta_map();
  RVec t = lmap.completeOrthogonalDecomposition().solve(bg.coords(k.h));
  auto exact = [&](const RVec& tt) {
    const double a = lambda_max(bg.alpha(bg.residuals(tt)));
    const double b = herm_norm(bg.beta(tt));
    return n1 * a + n2 * b * b;
  };
  {
    // Compare with the trivial gauge, which can be better for small N.
    RVec t_zero = RVec::Zero(bg.size());
    if (exact(t_zero) < exact(t)) t = t_zero;
  }
  const Index dd = k.d;
  auto pm_beta = [&](const CMat& b) {
    CMat big = CMat::Zero(2 * dd, 2 * dd);
    big.topLeftCorner(dd, dd) = b;
    big.bottomRightCorner(dd, dd) = -b;
    return big;
  };
  double scale = std::max(1.0, lambda_max(bg.alpha(bg.residuals(t))));
  double mu = cfg.mu0 * scale;
  std::size_t iters = 0;
  double best = exact(t);
  RVec best_t = t;
  while (true) {
    const double mu_k = mu;
    Objective f = [&](const RVec& tt) {
      const double a = detail::smooth_max(bg.alpha(bg.residuals(tt)), mu_k).value;
      const double b = n2 > 0 ? detail::smooth_max(pm_beta(bg.beta(tt)), mu_k).value : 0.0;
      return n1 * a + n2 * b * b;
    };
    Gradient gfun = [&](const RVec& tt, RVec& out) {
      const auto d = bg.residuals(tt);
      const auto sa = detail::smooth_max(bg.alpha(d), mu_k);
      out = n1 * bg.alpha_gradient(d, sa.grad);
      if (n2 > 0) {
        const auto sb = detail::smooth_max(pm_beta(bg.beta(tt)), mu_k);
        const CMat y = sb.grad.topLeftCorner(dd, dd) - sb.grad.bottomRightCorner(dd, dd);
        out += n2 * 2.0 * sb.value * bg.beta_gradient(y);
      }
    };
    BfgsOptions bo;
    bo.max_iters = cfg.max_iters;
    bo.grad_tol = 1e-12 * std::max(1.0, n2);
    bo.step = 0.1 / std::max(1.0, std::sqrt(n2));
    auto r = bfgs(f, gfun, t, bo);
    iters += r.iterations;
    t = r.x;
    const double e = exact(t);
    if (e < best) {
      best = e;
      best_t = t;
    }
    if (mu < cfg.mu_min) break;
    mu *= 0.5;
  }
  res.alpha_norm = lambda_max(bg.alpha(bg.residuals(best_t)));
  res.beta_norm = herm_norm(bg.beta(best_t));
  res.bound_finite = 4.0 * best;
  res.iterations = iters;
  res.converged = true;
  res.g_opt = bg.stacked(best_t);
  return res;
}

// Per-probe asymptotic CE coefficient 4c for the asymmetric bit flip.
inline double bitflip_ce_closed_form(double p, double q) {
  auto f = [](double x) { return std::sqrt(x * (1 - x)); };
  const double d = p - q;
  if (std::abs(d) < 1e-6) {
    const double m = 0.5 * (p + q);
    if (m <= 0.0 || m >= 1.0) return std::numeric_limits<double>::infinity();
    const double fp = (1 - 2 * m) / (2 * f(m));
    return fp * fp;
  }
  const double n = f(p) - f(q);
  return n * n / (d * d);
}

// Per-probe asymptotic CE coefficient for the single-photon dual-rail channel.
inline double photonic_ce_closed_form(double eta, double pd) {
  if (!(eta > 0.0 && eta <= 1.0) || !(pd >= 0.0 && pd < 0.5))
    throw std::invalid_argument("photonic parameters out of range");
  const double num = eta * (eta - 3 * pd * eta + 2 * pd * pd);
  const double den = 2 * pd + eta * eta * (3 * pd - 1) + eta * (1 - 4 * pd - 2 * pd * pd);
  if (den <= 0.0) return std::numeric_limits<double>::infinity();
  return num / den;
}

}  // namespace metroq
