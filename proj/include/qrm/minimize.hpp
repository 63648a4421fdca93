#pragma once

// Thin RAII front end over the GSL multidimensional minimizers: the simplex
// method for global-ish descent and BFGS for the final polish.

#include <cmath>
#include <exception>
#include <functional>
#include <limits>
#include <memory>

#include <Eigen/Dense>
#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>
#include <gsl/gsl_vector.h>

namespace qrm::optim {

using Objective = std::function<double(const Eigen::VectorXd&)>;
using Gradient = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

struct MinimizeResult {
  Eigen::VectorXd x;
  double value = std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool converged = false;
};

namespace detail {

struct VectorDeleter {
  void operator()(gsl_vector* v) const { gsl_vector_free(v); }
};
struct SimplexDeleter {
  void operator()(gsl_multimin_fminimizer* m) const { gsl_multimin_fminimizer_free(m); }
};
struct GradientDeleter {
  void operator()(gsl_multimin_fdfminimizer* m) const { gsl_multimin_fdfminimizer_free(m); }
};
using VectorPtr = std::unique_ptr<gsl_vector, VectorDeleter>;

inline VectorPtr to_gsl(const Eigen::VectorXd& x) {
  VectorPtr v(gsl_vector_alloc(static_cast<std::size_t>(x.size())));
  for (Eigen::Index i = 0; i < x.size(); ++i) gsl_vector_set(v.get(), static_cast<std::size_t>(i), x[i]);
  return v;
}

inline Eigen::VectorXd from_gsl(const gsl_vector* v) {
  Eigen::VectorXd x(static_cast<Eigen::Index>(v->size));
  for (std::size_t i = 0; i < v->size; ++i) x[static_cast<Eigen::Index>(i)] = gsl_vector_get(v, i);
  return x;
}

// Exceptions must not cross the C callback boundary; park them here.
struct Callbacks {
  const Objective* f = nullptr;
  const Gradient* grad = nullptr;
  std::exception_ptr error;
};

inline double call_f(const gsl_vector* v, void* p) {
  auto* cb = static_cast<Callbacks*>(p);
  try {
    const double y = (*cb->f)(from_gsl(v));
    return std::isfinite(y) ? y : GSL_POSINF;
  } catch (...) {
    if (!cb->error) cb->error = std::current_exception();
    return GSL_NAN;
  }
}

inline void call_df(const gsl_vector* v, void* p, gsl_vector* out) {
  auto* cb = static_cast<Callbacks*>(p);
  try {
    const Eigen::VectorXd g = (*cb->grad)(from_gsl(v));
    for (Eigen::Index i = 0; i < g.size(); ++i) gsl_vector_set(out, static_cast<std::size_t>(i), g[i]);
  } catch (...) {
    if (!cb->error) cb->error = std::current_exception();
    gsl_vector_set_all(out, GSL_NAN);
  }
}

inline void call_fdf(const gsl_vector* v, void* p, double* f, gsl_vector* out) {
  *f = call_f(v, p);
  call_df(v, p, out);
}

inline void quiet_gsl() {
  static const bool once = [] {
    gsl_set_error_handler_off();
    return true;
  }();
  (void)once;
}

}  // namespace detail

/// Simplex search; stops when the simplex size falls below size_tol.
inline MinimizeResult nelder_mead(const Objective& f, const Eigen::VectorXd& start, double step,
                                  double size_tol, int max_iter) {
  detail::quiet_gsl();
  const auto n = static_cast<std::size_t>(start.size());
  detail::Callbacks cb{&f, nullptr, nullptr};
  gsl_multimin_function fn{&detail::call_f, n, &cb};
  auto x = detail::to_gsl(start);
  detail::VectorPtr steps(gsl_vector_alloc(n));
  gsl_vector_set_all(steps.get(), step);
  std::unique_ptr<gsl_multimin_fminimizer, detail::SimplexDeleter> m(
      gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, n));
  gsl_multimin_fminimizer_set(m.get(), &fn, x.get(), steps.get());

  MinimizeResult r;
  for (r.iterations = 0; r.iterations < max_iter; ++r.iterations) {
    if (gsl_multimin_fminimizer_iterate(m.get()) != GSL_SUCCESS) break;
    if (cb.error) std::rethrow_exception(cb.error);
    if (gsl_multimin_test_size(gsl_multimin_fminimizer_size(m.get()), size_tol) == GSL_SUCCESS) {
      r.converged = true;
      break;
    }
  }
  if (cb.error) std::rethrow_exception(cb.error);
  r.x = detail::from_gsl(gsl_multimin_fminimizer_x(m.get()));
  r.value = gsl_multimin_fminimizer_minimum(m.get());
  return r;
}

/// BFGS polish from a good starting point; stops on gradient norm.
inline MinimizeResult bfgs(const Objective& f, const Gradient& grad, const Eigen::VectorXd& start,
                           double grad_tol, int max_iter) {
  detail::quiet_gsl();
  const auto n = static_cast<std::size_t>(start.size());
  detail::Callbacks cb{&f, &grad, nullptr};
  gsl_multimin_function_fdf fn{&detail::call_f, &detail::call_df, &detail::call_fdf, n, &cb};
  auto x = detail::to_gsl(start);
  std::unique_ptr<gsl_multimin_fdfminimizer, detail::GradientDeleter> m(
      gsl_multimin_fdfminimizer_alloc(gsl_multimin_fdfminimizer_vector_bfgs2, n));
  gsl_multimin_fdfminimizer_set(m.get(), &fn, x.get(), 1e-3, 0.1);

  MinimizeResult r;
  for (r.iterations = 0; r.iterations < max_iter; ++r.iterations) {
    if (gsl_multimin_test_gradient(gsl_multimin_fdfminimizer_gradient(m.get()), grad_tol) ==
        GSL_SUCCESS) {
      r.converged = true;
      break;
    }
    // A failed line search near the minimum is GSL's way of saying "no progress".
    if (gsl_multimin_fdfminimizer_iterate(m.get()) != GSL_SUCCESS) break;
    if (cb.error) std::rethrow_exception(cb.error);
  }
  if (cb.error) std::rethrow_exception(cb.error);
  r.x = detail::from_gsl(gsl_multimin_fdfminimizer_x(m.get()));
  r.value = gsl_multimin_fdfminimizer_minimum(m.get());
  return r;
}

}  // namespace qrm::optim
