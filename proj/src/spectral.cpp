#include "netheat/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/SparseCholesky>

#include "netheat/error.hpp"
#include "parallel.hpp"

namespace netheat {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

double norm1(const SparseMatrix& a) {
  double best = 0.0;
  for (Eigen::Index c = 0; c < a.outerSize(); ++c) {
    double s = 0.0;
    for (SparseMatrix::InnerIterator it(a, c); it; ++it) s += std::abs(it.value());
    best = std::max(best, s);
  }
  return best;
}

// Fix each eigenvector's sign so its first significant entry is positive.
void normalize_signs(MatrixXd& vecs) {
  for (Eigen::Index c = 0; c < vecs.cols(); ++c) {
    const double scale = vecs.col(c).cwiseAbs().maxCoeff();
    for (Eigen::Index r = 0; r < vecs.rows(); ++r) {
      if (std::abs(vecs(r, c)) > 1e-8 * scale) {
        if (vecs(r, c) < 0) vecs.col(c) *= -1.0;
        break;
      }
    }
  }
}

SpectralDecomposition dense_eigs(const SymmetricMatrix& K, const SymmetricMatrix& M, std::size_t k) {
  const MatrixXd md = M.dense();
  Eigen::LLT<MatrixXd> llt(md);
  if (llt.info() != Eigen::Success)
    throw Error(ErrorKind::not_positive_definite, "eigensolver: mass matrix is not positive definite");
  // L^{-1} K L^{-T} y = lambda y,  x = L^{-T} y.
  MatrixXd c = llt.matrixL().solve(K.dense());
  c = llt.matrixL().solve(c.transpose().eval());
  c = 0.5 * (c + c.transpose().eval());
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(c);
  if (es.info() != Eigen::Success)
    throw Error(ErrorKind::no_convergence, "eigensolver: dense symmetric eigensolver failed");
  const auto kk = static_cast<Eigen::Index>(k);
  SpectralDecomposition out;
  out.eigenvalues = es.eigenvalues().head(kk);
  out.eigenvectors = llt.matrixU().solve(es.eigenvectors().leftCols(kk));
  return out;
}

// M-orthonormalises the columns of y (Cholesky QR, applied twice).
bool m_orthonormalize(MatrixXd& y, const SparseMatrix& m) {
  for (int pass = 0; pass < 2; ++pass) {
    MatrixXd g = y.transpose() * (m * y);
    g = 0.5 * (g + g.transpose().eval());
    Eigen::LLT<MatrixXd> llt(g);
    if (llt.info() != Eigen::Success) return false;
    y = llt.matrixL().solve(y.transpose()).transpose();
  }
  return true;
}

// Subspace iteration on (K + sigma M)^{-1} M with Rayleigh-Ritz projection.
SpectralDecomposition shift_invert_eigs(const SymmetricMatrix& K, const SymmetricMatrix& M,
                                        std::size_t k, const EigenOptions& opt) {
  const SparseMatrix& ks = K.sparse();
  const SparseMatrix& ms = M.sparse();
  const auto n = ks.rows();

  Eigen::SimplicialLLT<SparseMatrix> mcheck(ms);
  if (mcheck.info() != Eigen::Success)
    throw Error(ErrorKind::not_positive_definite, "eigensolver: mass matrix is not positive definite");

  const double knorm = norm1(ks);
  const double mnorm = norm1(ms);
  const double sigma = std::max(1e-2 * knorm / mnorm, 1e-12);
  SparseMatrix shifted = ks + sigma * ms;
  Eigen::SimplicialLDLT<SparseMatrix> solver(shifted);
  if (solver.info() != Eigen::Success)
    throw Error(ErrorKind::not_positive_definite, "eigensolver: K + sigma M is not positive definite");

  const auto p = static_cast<Eigen::Index>(
      std::min<std::size_t>(static_cast<std::size_t>(n), std::max(2 * k, k + 8)));
  const auto kk = static_cast<Eigen::Index>(k);

  std::mt19937 rng(20130521u);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  MatrixXd x(n, p);
  for (Eigen::Index c = 0; c < p; ++c)
    for (Eigen::Index r = 0; r < n; ++r) x(r, c) = dist(rng);

  for (std::size_t it = 1; it <= opt.max_iterations; ++it) {
    MatrixXd y = solver.solve(ms * x);
    if (!m_orthonormalize(y, ms))
      throw Error(ErrorKind::no_convergence, "eigensolver: subspace basis lost rank");
    MatrixXd kr = y.transpose() * (ks * y);
    kr = 0.5 * (kr + kr.transpose().eval());
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(kr);
    x = y * es.eigenvectors();

    bool converged = true;
    for (Eigen::Index c = 0; c < kk && converged; ++c) {
      const double lambda = es.eigenvalues()[c];
      const VectorXd r = ks * x.col(c) - lambda * (ms * x.col(c));
      converged = r.norm() <= opt.rtol * (knorm + std::abs(lambda) * mnorm) * x.col(c).norm();
    }
    if (converged) {
      SpectralDecomposition out;
      out.eigenvalues = es.eigenvalues().head(kk);
      out.eigenvectors = x.leftCols(kk);
      out.iterations = it;
      return out;
    }
  }
  throw Error(ErrorKind::no_convergence, "eigensolver: shift-invert iteration did not converge");
}

}  // namespace

std::vector<std::pair<std::size_t, std::size_t>> SpectralDecomposition::clusters(double rtol) const {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  const auto n = static_cast<std::size_t>(eigenvalues.size());
  const double scale = n ? std::max(1.0, eigenvalues.cwiseAbs().maxCoeff()) : 1.0;
  std::size_t first = 0;
  for (std::size_t i = 1; i <= n; ++i) {
    if (i == n || eigenvalues[static_cast<Eigen::Index>(i)] -
                          eigenvalues[static_cast<Eigen::Index>(i - 1)] > rtol * scale) {
      out.emplace_back(first, i);
      first = i;
    }
  }
  return out;
}

double SpectralDecomposition::max_relative_residual(const SymmetricMatrix& K,
                                                    const SymmetricMatrix& M) const {
  const double knorm = norm1(K.sparse());
  const double mnorm = norm1(M.sparse());
  double worst = 0.0;
  for (Eigen::Index c = 0; c < eigenvalues.size(); ++c) {
    const double lambda = eigenvalues[c];
    const VectorXd r = K.sparse() * eigenvectors.col(c) - lambda * (M.sparse() * eigenvectors.col(c));
    worst = std::max(worst, r.norm() / ((knorm + std::abs(lambda) * mnorm) * eigenvectors.col(c).norm()));
  }
  return worst;
}

SpectralDecomposition generalized_eigs(const SymmetricMatrix& K, const SymmetricMatrix& M,
                                       std::size_t k, const EigenOptions& options) {
  const std::size_t n = K.dimension();
  if (M.dimension() != n) throw Error(ErrorKind::invalid_argument, "eigensolver: K and M differ in size");
  if (k < 1 || k > n) throw Error(ErrorKind::invalid_argument, "eigensolver: k must lie in 1..dim");

  const bool dense = options.method == EigenMethod::dense ||
                     (options.method == EigenMethod::automatic && n <= options.dense_limit);
  SpectralDecomposition out = dense ? dense_eigs(K, M, k) : shift_invert_eigs(K, M, k, options);

  // Exact M-normalisation, then a deterministic sign.
  for (Eigen::Index c = 0; c < out.eigenvectors.cols(); ++c) {
    const double mn = std::sqrt(out.eigenvectors.col(c).dot(M.sparse() * out.eigenvectors.col(c)));
    out.eigenvectors.col(c) /= mn;
  }
  normalize_signs(out.eigenvectors);

  if (dense && out.max_relative_residual(K, M) > options.rtol)
    throw Error(ErrorKind::no_convergence, "eigensolver: residual above tolerance");
  return out;
}

SpectralTrack track_spectrum(const AssembledSystem& system, std::span<const double> times,
                             std::size_t k, const EigenOptions& options) {
  if (times.empty()) throw Error(ErrorKind::invalid_argument, "track_spectrum: empty time grid");
  for (std::size_t i = 0; i + 1 < times.size(); ++i)
    if (!(times[i] < times[i + 1]))
      throw Error(ErrorKind::invalid_argument, "track_spectrum: times must be strictly increasing");
  if (k < 2) throw Error(ErrorKind::invalid_argument, "track_spectrum: need k >= 2");

  SpectralTrack track;
  track.times.assign(times.begin(), times.end());
  track.eigenvalues.resize(times.size());
  detail::parallel_for(times.size(), [&](std::size_t i) {
    track.eigenvalues[i] =
        generalized_eigs(system.stiffness(times[i]), system.mass(), k, options).eigenvalues;
  });

  track.lambda2_lower = std::numeric_limits<double>::infinity();
  for (const auto& ev : track.eigenvalues) track.lambda2_lower = std::min(track.lambda2_lower, ev[1]);
  for (std::size_t i = 0; i + 1 < times.size(); ++i) {
    const double dt = times[i + 1] - times[i];
    const double jump = (track.eigenvalues[i + 1] - track.eigenvalues[i]).cwiseAbs().maxCoeff();
    track.continuity_modulus = std::max(track.continuity_modulus, jump / dt);
  }
  return track;
}

SpectralTrack track_spectrum_to_limit(const AssembledSystem& system, std::span<const double> times,
                                      std::size_t k, double settle_tol,
                                      const EigenOptions& options) {
  const auto& coeffs = system.coefficients();
  const auto limit = coeffs.limit_set();
  const auto settle = coeffs.settle_time(settle_tol);
  if (!limit || !settle || times.empty()) return track_spectrum(system, times, k, options);

  std::vector<double> grid(times.begin(), times.end());
  if (*settle > grid.back()) {
    const double last_step = grid.size() > 1 ? grid.back() - grid[grid.size() - 2] : *settle - grid.back();
    const double step = std::max(last_step, (*settle - grid.back()) / 200.0);
    const double start = grid.back();
    for (std::size_t i = 1;; ++i) {
      const double t = start + static_cast<double>(i) * step;
      if (t >= *settle) {
        grid.push_back(*settle);
        break;
      }
      grid.push_back(t);
    }
  }

  SpectralTrack track = track_spectrum(system, grid, k, options);
  const AssembledSystem limit_system = system.with_coefficients(*limit);
  track.limit_eigenvalues =
      generalized_eigs(limit_system.stiffness(0.0), limit_system.mass(), k, options).eigenvalues;
  track.lambda2_lower = std::min(track.lambda2_lower, (*track.limit_eigenvalues)[1]);
  return track;
}

ContinuityReport eigenvalue_continuity_test(const AssembledSystem& system,
                                            const BoundsCertificate& cert, double t,
                                            std::span<const double> deltas, std::size_t k,
                                            bool check_halving, const EigenOptions& options) {
  ContinuityReport report{t, {deltas.begin(), deltas.end()}, {}, true};
  const VectorXd base = generalized_eigs(system.stiffness(t), system.mass(), k, options).eigenvalues;
  std::vector<VectorXd> shifted(deltas.size());
  detail::parallel_for(deltas.size(), [&](std::size_t n) {
    shifted[n] =
        generalized_eigs(system.stiffness(t + deltas[n]), system.mass(), k, options).eigenvalues;
  });

  const double lip = cert.max_lipschitz_mu();
  for (std::size_t i = 0; i < k; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    ContinuityReport::PerEigenvalue pe;
    pe.index = i;
    pe.lipschitz_bound = std::abs(base[ii]) * lip / cert.epsilon;
    const double floor = 1e-11 * std::max(1.0, std::abs(base[ii]));

    pe.within_lipschitz = true;
    for (std::size_t n = 0; n < deltas.size(); ++n) {
      const double d = std::abs(shifted[n][ii] - base[ii]);
      pe.differences.push_back(d);
      pe.within_lipschitz = pe.within_lipschitz && d <= pe.lipschitz_bound * deltas[n] + floor;
    }

    pe.monotone_tail = true;
    for (std::size_t n = deltas.size() / 2; n + 1 < deltas.size(); ++n)
      pe.monotone_tail = pe.monotone_tail && pe.differences[n + 1] <= pe.differences[n] + floor;

    for (std::size_t n = 0; n + 1 < deltas.size(); ++n) {
      const double a = pe.differences[n];
      const double b = pe.differences[n + 1];
      if (a <= floor || b <= floor) continue;
      const double ratio = a / b;
      pe.halving_ratios.push_back(ratio);
      if (check_halving) pe.halving_ok = pe.halving_ok && ratio >= 1.8 && ratio <= 2.2;
    }

    pe.passed = pe.within_lipschitz && pe.monotone_tail && pe.halving_ok;
    report.passed = report.passed && pe.passed;
    report.eigenvalues.push_back(std::move(pe));
  }
  return report;
}

ResolventReport check_discrete_resolvent_bounds(const AssembledSystem& system, double t,
                                                double omega) {
  if (!(omega > 0.0))
    throw Error(ErrorKind::invalid_argument,
                "resolvent: omega must be positive (omega M + K is singular or indefinite otherwise)");
  const SparseMatrix& m = system.mass().sparse();
  const SparseMatrix a = omega * m + system.stiffness(t).sparse();
  Eigen::SimplicialLDLT<SparseMatrix> solver(a);
  if (solver.info() != Eigen::Success)
    throw Error(ErrorKind::solve_failure, "resolvent: factorisation of omega M + K failed");

  const auto n = m.rows();
  VectorXd x(n);
  for (Eigen::Index i = 0; i < n; ++i) x[i] = 1.0 + 0.5 * std::sin(static_cast<double>(i + 1));
  auto mnorm = [&](const VectorXd& v) { return std::sqrt(v.dot(m * v)); };
  x /= mnorm(x);

  double estimate = 0.0;
  std::size_t it = 0;
  for (it = 1; it <= 5000; ++it) {
    VectorXd y = solver.solve(m * x);
    const double next = mnorm(y);
    x = y / next;
    const bool done = std::abs(next - estimate) <= 1e-15 * next;
    estimate = next;
    if (done) break;
  }
  const double bound = 1.0 / omega;
  return {omega, estimate, bound, it, estimate <= bound * (1.0 + 1e-12)};
}

}  // namespace netheat
