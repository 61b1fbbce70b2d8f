#pragma once

// Thin wrappers around GSL multimin and Boost.Math Brent search, plus the
// seeded random helpers used by multi-start optimisers.

#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

#include <boost/math/tools/minima.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <mutex>
#include <random>
#include <vector>
#include <utility>

#include "metroq/linalg.hpp"

namespace metroq {

using Objective = std::function<double(const RVec&)>;
using Gradient = std::function<void(const RVec&, RVec&)>;

struct MinimizeResult {
  RVec x;
  double f = std::numeric_limits<double>::infinity();
  std::size_t iterations = 0;
  bool converged = false;
};

struct SimplexOptions {
  double step = 0.3;
  double size_tol = 1e-10;
  std::size_t max_iters = 20000;
};

struct BfgsOptions {
  double step = 1e-2;
  double line_tol = 0.1;
  double grad_tol = 1e-10;
  std::size_t max_iters = 2000;
};

namespace detail {

inline void gsl_quiet() {
  static std::once_flag flag;
  std::call_once(flag, [] { gsl_set_error_handler_off(); });
}

inline RVec from_gsl(const gsl_vector* v) {
  RVec out(static_cast<Index>(v->size));
  for (std::size_t i = 0; i < v->size; ++i) out[static_cast<Index>(i)] = gsl_vector_get(v, i);
  return out;
}

inline void to_gsl(const RVec& x, gsl_vector* v) {
  for (Index i = 0; i < x.size(); ++i) gsl_vector_set(v, static_cast<std::size_t>(i), x[i]);
}

struct VecDeleter {
  void operator()(gsl_vector* v) const { gsl_vector_free(v); }
};
using VecPtr = std::unique_ptr<gsl_vector, VecDeleter>;

inline VecPtr make_vec(const RVec& x) {
  VecPtr v(gsl_vector_alloc(static_cast<std::size_t>(x.size())));
  to_gsl(x, v.get());
  return v;
}

inline double finite_or_huge(double v) {
  return std::isfinite(v) ? v : std::numeric_limits<double>::max() / 4;
}

struct FdfParams {
  const Objective* f;
  const Gradient* g;
};

}  // namespace detail

// Derivative-free local minimisation (GSL nmsimplex2).
inline MinimizeResult nelder_mead(const Objective& f, const RVec& x0, const SimplexOptions& opt = {}) {
  detail::gsl_quiet();
  const auto n = static_cast<std::size_t>(x0.size());
  MinimizeResult res;
  if (n == 0) {
    res.x = x0;
    res.f = f(x0);
    res.converged = true;
    return res;
  }
  gsl_multimin_function fn;
  fn.n = n;
  fn.params = const_cast<Objective*>(&f);
  fn.f = [](const gsl_vector* v, void* p) {
    return detail::finite_or_huge((*static_cast<Objective*>(p))(detail::from_gsl(v)));
  };
  auto x = detail::make_vec(x0);
  auto step = detail::make_vec(RVec::Constant(x0.size(), opt.step));
  std::unique_ptr<gsl_multimin_fminimizer, decltype(&gsl_multimin_fminimizer_free)> s(
      gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, n), &gsl_multimin_fminimizer_free);
  gsl_multimin_fminimizer_set(s.get(), &fn, x.get(), step.get());
  int status = GSL_CONTINUE;
  std::size_t it = 0;
  while (status == GSL_CONTINUE && it < opt.max_iters) {
    ++it;
    if (gsl_multimin_fminimizer_iterate(s.get()) != GSL_SUCCESS) break;
    status = gsl_multimin_test_size(gsl_multimin_fminimizer_size(s.get()), opt.size_tol);
  }
  res.x = detail::from_gsl(gsl_multimin_fminimizer_x(s.get()));
  res.f = gsl_multimin_fminimizer_minimum(s.get());
  res.iterations = it;
  res.converged = status == GSL_SUCCESS;
  return res;
}

// Quasi-Newton minimisation with an analytic gradient (GSL vector_bfgs2).
inline MinimizeResult bfgs(const Objective& f, const Gradient& grad, const RVec& x0,
                           const BfgsOptions& opt = {}) {
  detail::gsl_quiet();
  const auto n = static_cast<std::size_t>(x0.size());
  MinimizeResult res;
  if (n == 0) {
    res.x = x0;
    res.f = f(x0);
    res.converged = true;
    return res;
  }
  detail::FdfParams params{&f, &grad};
  gsl_multimin_function_fdf fn;
  fn.n = n;
  fn.params = &params;
  fn.f = [](const gsl_vector* v, void* p) {
    auto* fp = static_cast<detail::FdfParams*>(p);
    return detail::finite_or_huge((*fp->f)(detail::from_gsl(v)));
  };
  fn.df = [](const gsl_vector* v, void* p, gsl_vector* g) {
    auto* fp = static_cast<detail::FdfParams*>(p);
    RVec gr(static_cast<Index>(v->size));
    (*fp->g)(detail::from_gsl(v), gr);
    detail::to_gsl(gr, g);
  };
  fn.fdf = [](const gsl_vector* v, void* p, double* fx, gsl_vector* g) {
    auto* fp = static_cast<detail::FdfParams*>(p);
    RVec x = detail::from_gsl(v);
    *fx = detail::finite_or_huge((*fp->f)(x));
    RVec gr(x.size());
    (*fp->g)(x, gr);
    detail::to_gsl(gr, g);
  };
  auto x = detail::make_vec(x0);
  std::unique_ptr<gsl_multimin_fdfminimizer, decltype(&gsl_multimin_fdfminimizer_free)> s(
      gsl_multimin_fdfminimizer_alloc(gsl_multimin_fdfminimizer_vector_bfgs2, n),
      &gsl_multimin_fdfminimizer_free);
  gsl_multimin_fdfminimizer_set(s.get(), &fn, x.get(), opt.step, opt.line_tol);
  int status = GSL_CONTINUE;
  std::size_t it = 0;
  bool stalled = false;
  while (status == GSL_CONTINUE && it < opt.max_iters) {
    ++it;
    if (gsl_multimin_fdfminimizer_iterate(s.get()) != GSL_SUCCESS) {
      stalled = true;
      break;
    }
    status = gsl_multimin_test_gradient(gsl_multimin_fdfminimizer_gradient(s.get()), opt.grad_tol);
  }
  res.x = detail::from_gsl(gsl_multimin_fdfminimizer_x(s.get()));
  res.f = gsl_multimin_fdfminimizer_minimum(s.get());
  res.iterations = it;
  // A line search that cannot make progress has reached the floating point
  // resolution of the objective, which we accept as convergence.
  res.converged = status == GSL_SUCCESS || stalled;
  return res;
}

struct ScalarOptimum {
  double x = 0.0;
  double f = -std::numeric_limits<double>::infinity();
};

// Global maximum of a smooth function on [lo, hi]: uniform grid scan, then
// Brent refinement around the best grid point.
template <class F>
ScalarOptimum maximize_scalar(F&& f, double lo, double hi, int grid = 64) {
  ScalarOptimum best;
  int ibest = 0;
  const double h = (hi - lo) / grid;
  for (int i = 0; i <= grid; ++i) {
    const double x = lo + h * i;
    const double v = f(x);
    if (v > best.f) {
      best = {x, v};
      ibest = i;
    }
  }
  const double a = lo + h * std::max(0, ibest - 1);
  const double b = lo + h * std::min(grid, ibest + 1);
  if (b > a) {
    auto r = boost::math::tools::brent_find_minima([&](double x) { return -f(x); }, a, b,
                                                   std::numeric_limits<double>::digits / 2);
    if (-r.second > best.f) best = {r.first, -r.second};
  }
  return best;
}

template <class F>
ScalarOptimum minimize_scalar(F&& f, double lo, double hi, int grid = 64) {
  auto r = maximize_scalar([&](double x) { return -f(x); }, lo, hi, grid);
  return {r.x, -r.f};
}

// Independent, reproducible seeds for restart k of a run seeded with `seed`.
// A multistart search counts as converged when its best run met the local
// stopping rule, or when an independent restart reproduces the best value
// to within tol * max(1, |best|).
inline bool multistart_converged(const std::vector<double>& values, std::size_t best, bool best_converged,
                                 double tol) {
  if (best_converged) return true;
  const double scale = std::max(1.0, std::abs(values[best]));
  for (std::size_t i = 0; i < values.size(); ++i)
    if (i != best && std::abs(values[i] - values[best]) <= tol * scale) return true;
  return false;
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t k) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (k + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline RVec random_normal(Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  RVec v(n);
  for (Index i = 0; i < n; ++i) v[i] = nd(rng);
  return v;
}

inline CVec random_state(Index d, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  CVec v(d);
  for (Index i = 0; i < d; ++i) v[i] = cplx(nd(rng), nd(rng));
  return v / v.norm();
}

inline CMat random_unitary(Index d, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  CMat a(d, d);
  for (Index i = 0; i < d; ++i)
    for (Index j = 0; j < d; ++j) a(i, j) = cplx(nd(rng), nd(rng));
  Eigen::HouseholderQR<CMat> qr(a);
  CMat q = qr.householderQ();
  CMat r = qr.matrixQR();
  for (Index j = 0; j < d; ++j) {
    const double m = std::abs(r(j, j));
    if (m > 0) q.col(j) *= r(j, j) / m;
  }
  return q;
}

}  // namespace metroq
