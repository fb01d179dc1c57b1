#ifndef NHMECH_NUMDIFF_HPP
#define NHMECH_NUMDIFF_HPP

#include <Eigen/Dense>
#include <functional>

namespace nhmech::numdiff {

/// Default relative step for first-order central differences.
inline constexpr double kStepFirst = 1e-6;

/// Step for a coordinate of magnitude |v|: h = base * (1 + |v|).
inline double step(double v, double base = kStepFirst) {
  return base * (1.0 + std::abs(v));
}

/// Step for second-derivative stencils: sqrt(base)-scaled.
inline double step2(double v, double base = kStepFirst) {
  return std::sqrt(base) * (1.0 + std::abs(v));
}

/// Central difference d f / d s of a scalar function of one real.
inline double scalar(const std::function<double(double)>& f, double s,
                     double base = kStepFirst) {
  const double h = step(s, base);
  return (f(s + h) - f(s - h)) / (2.0 * h);
}

/// Central-difference gradient of f with respect to the vector argument.
inline Eigen::VectorXd gradient(
    const std::function<double(const Eigen::VectorXd&)>& f,
    const Eigen::VectorXd& v, double base = kStepFirst) {
  Eigen::VectorXd g(v.size());
  Eigen::VectorXd w = v;
  for (Eigen::Index q = 0; q < v.size(); ++q) {
    const double h = step(v[q], base);
    w[q] = v[q] + h;
    const double fp = f(w);
    w[q] = v[q] - h;
    const double fm = f(w);
    w[q] = v[q];
    g[q] = (fp - fm) / (2.0 * h);
  }
  return g;
}

/// Central-difference Jacobian of a vector function of a vector argument.
inline Eigen::MatrixXd jacobian(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f,
    const Eigen::VectorXd& v, double base = kStepFirst) {
  Eigen::VectorXd w = v;
  Eigen::MatrixXd jac;
  for (Eigen::Index q = 0; q < v.size(); ++q) {
    const double h = step(v[q], base);
    w[q] = v[q] + h;
    const Eigen::VectorXd fp = f(w);
    w[q] = v[q] - h;
    const Eigen::VectorXd fm = f(w);
    w[q] = v[q];
    if (jac.size() == 0) jac.resize(fp.size(), v.size());
    jac.col(q) = (fp - fm) / (2.0 * h);
  }
  return jac;
}

/// Reciprocal condition number estimate from an LU factorization.
/// Cheap 1-norm bound; good enough to flag near-singular solves.
inline double rcond(const Eigen::MatrixXd& a) {
  if (a.size() == 0) return 1.0;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
  if (!lu.isInvertible()) return 0.0;
  const double na = a.cwiseAbs().colwise().sum().maxCoeff();
  const double nai = lu.inverse().cwiseAbs().colwise().sum().maxCoeff();
  const double p = na * nai;
  return p > 0.0 ? 1.0 / p : 0.0;
}

}  // namespace nhmech::numdiff

#endif
