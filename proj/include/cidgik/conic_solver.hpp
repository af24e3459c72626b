#pragma once

// Linear-cost SDP solvers and the sparse SDPA text format used to hand
// instances to external solvers.
//
//   min tr(C Z)  s.t.  tr(A_k Z) = a_k,  tr(B_j Z) <= b_j,  Z PSD
//
// The default is a primal-dual interior-point method run on the face of the
// PSD cone cut out by the instance's known kernel. The alternative is operator
// splitting (ADMM): matrices are vectorized with svec (upper triangle,
// row-major, off-diagonal entries times sqrt 2) so that tr(A Z) = svec(A) .
// svec(Z), and with a slack t for the inequalities the iteration alternates
// between projecting (z, t) onto {A z = a, B z + t = b} and onto PSD x R+.

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "cidgik/errors.hpp"
#include "cidgik/sdp_relaxation.hpp"

namespace cidgik {

enum class SolverMethod { interior_point, admm };

struct SolverSettings {
  SolverMethod method = SolverMethod::interior_point;
  double eps_abs = 1e-7;
  double eps_rel = 1e-7;
  int max_iterations = 50000;     ///< ADMM iterations
  int ipm_max_iterations = 100;   ///< interior-point iterations
  bool scaling = true;
  double rho = 1.0;
  double relaxation = 1.5;
  int check_interval = 10;
  int adapt_interval = 100;
  /// Checks without primal progress before a certificate search.
  int stall_iterations = 2000;
};

inline void validate(const SolverSettings& s) {
  if (!(s.eps_abs > 0.0) || !(s.eps_rel > 0.0)) throw InputError("solver tolerances must be positive");
  if (s.max_iterations < 1 || s.ipm_max_iterations < 1) throw InputError("solver needs at least one iteration");
  if (!(s.rho > 0.0) || !(s.relaxation > 0.0 && s.relaxation < 2.0)) throw InputError("invalid solver parameters");
  if (s.check_interval < 1 || s.adapt_interval < 1 || s.stall_iterations < 1)
    throw InputError("solver intervals must be positive");
}

enum class SolveStatus { optimal, infeasible, max_iters };

inline std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::infeasible: return "infeasible";
    case SolveStatus::max_iters: return "max_iters";
  }
  return "?";
}

/// Farkas witness: sum y_k A_k + sum w_j B_j = S with S PSD, w >= 0 and
/// y.a + w.b = -1. No PSD Z can then satisfy the constraints, since
/// 0 <= tr(S Z) <= y.a + w.b < 0.
struct InfeasibilityCertificate {
  Eigen::VectorXd y;
  Eigen::VectorXd w;
  Eigen::MatrixXd S;
  double gap = 0.0;             ///< y.a + w.b after normalization
  double psd_violation = 0.0;   ///< ||S - proj_psd(S)||_F
  bool verified = false;
};

/// Iterates carried from one solve to the next for warm starting.
struct SolverState {
  Eigen::VectorXd y;
  Eigen::VectorXd u;
  double rho = 1.0;
};

struct SolveResult {
  SolveStatus status = SolveStatus::max_iters;
  LiftedSolution solution;
  double objective = 0.0;
  int iterations = 0;
  double wall_time = 0.0;  ///< seconds
  double primal_residual = 0.0;  ///< max of unscaled equality and inequality residuals
  double dual_residual = 0.0;
  double gap = 0.0;
  std::optional<InfeasibilityCertificate> certificate;
  SolverState state;
};

// ---------------------------------------------------------------------------
// Vectorization helpers

inline int svec_size(int n) { return n * (n + 1) / 2; }
inline int svec_index(int n, int i, int j) { return i * n - i * (i - 1) / 2 + (j - i); }

inline Eigen::VectorXd svec(const Eigen::MatrixXd& Z) {
  const int n = static_cast<int>(Z.rows());
  Eigen::VectorXd v(svec_size(n));
  int k = 0;
  for (int i = 0; i < n; ++i) {
    v[k++] = Z(i, i);
    for (int j = i + 1; j < n; ++j) v[k++] = std::numbers::sqrt2 * Z(i, j);
  }
  return v;
}

inline Eigen::MatrixXd smat(const Eigen::VectorXd& v, int n) {
  Eigen::MatrixXd Z(n, n);
  int k = 0;
  for (int i = 0; i < n; ++i) {
    Z(i, i) = v[k++];
    for (int j = i + 1; j < n; ++j) Z(i, j) = Z(j, i) = v[k++] / std::numbers::sqrt2;
  }
  return Z;
}

inline Eigen::VectorXd svec(const SymmetricConstraint& c, int n) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(svec_size(n));
  for (const auto& e : c.entries) v[svec_index(n, e.row, e.col)] = e.row == e.col ? e.value : std::numbers::sqrt2 * e.value;
  return v;
}

/// Nearest PSD matrix in Frobenius norm: negative eigenvalues clamped to zero.
inline Eigen::MatrixXd project_psd(const Eigen::MatrixXd& M) {
  if (!M.allFinite()) throw NumericalError("cannot project a matrix with non-finite entries");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(M);
  if (eig.info() != Eigen::Success) throw NumericalError("eigendecomposition failed");
  const Eigen::VectorXd lambda = eig.eigenvalues().cwiseMax(0.0);
  return eig.eigenvectors() * lambda.asDiagonal() * eig.eigenvectors().transpose();
}

/// Checks a candidate Farkas witness against the instance, normalizing it so
/// that y.a + w.b = -1. Negative entries of w are clipped to zero first.
inline InfeasibilityCertificate check_certificate(const SdpInstance& sdp, const Eigen::VectorXd& y,
                                                  const Eigen::VectorXd& w_in) {
  if (y.size() != static_cast<Eigen::Index>(sdp.equalities.size()) ||
      w_in.size() != static_cast<Eigen::Index>(sdp.inequalities.size()))
    throw InputError("certificate size does not match the instance");
  InfeasibilityCertificate cert;
  const Eigen::VectorXd w = w_in.cwiseMax(0.0);
  double gap = 0.0;
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(sdp.side, sdp.side);
  for (std::size_t k = 0; k < sdp.equalities.size(); ++k) {
    S += y[static_cast<Eigen::Index>(k)] * sdp.equalities[k].dense(sdp.side);
    gap += y[static_cast<Eigen::Index>(k)] * sdp.equalities[k].rhs;
  }
  for (std::size_t j = 0; j < sdp.inequalities.size(); ++j) {
    S += w[static_cast<Eigen::Index>(j)] * sdp.inequalities[j].dense(sdp.side);
    gap += w[static_cast<Eigen::Index>(j)] * sdp.inequalities[j].rhs;
  }
  cert.y = y;
  cert.w = w;
  cert.S = S;
  cert.gap = gap;
  if (!(gap < 0.0) || !std::isfinite(gap)) return cert;
  const double scale = -1.0 / gap;
  cert.y *= scale;
  cert.w *= scale;
  cert.S *= scale;
  cert.gap = -1.0;
  cert.psd_violation = (cert.S - project_psd(cert.S)).norm();
  cert.verified = cert.psd_violation <= 1e-6;
  return cert;
}

/// Re-verifies the certificate attached to an infeasible result. A result whose
/// certificate does not hold is downgraded to max_iters.
inline bool certify(const SdpInstance& sdp, SolveResult& result) {
  if (result.status != SolveStatus::infeasible || !result.certificate)
    throw InputError("certify needs a result reported infeasible");
  *result.certificate = check_certificate(sdp, result.certificate->y, result.certificate->w);
  if (!result.certificate->verified) result.status = SolveStatus::max_iters;
  return result.certificate->verified;
}

// ---------------------------------------------------------------------------
// Solver

/// Holds the factorized affine projection of one instance; solve() may then be
/// called repeatedly with different cost matrices.
class ConicSolver {
 public:
  explicit ConicSolver(SdpInstance sdp, SolverSettings settings = {})
      : sdp_(std::move(sdp)), settings_(settings) {
    validate(settings_);
    n_ = sdp_.side;
    N_ = svec_size(n_);
    me_ = static_cast<int>(sdp_.equalities.size());
    mi_ = static_cast<int>(sdp_.inequalities.size());
    A_.resize(me_, N_);
    B_.resize(mi_, N_);
    a_.resize(me_);
    b_.resize(mi_);
    scale_a_ = Eigen::VectorXd::Ones(me_);
    scale_b_ = Eigen::VectorXd::Ones(mi_);
    for (int k = 0; k < me_; ++k) {
      A_.row(k) = svec(sdp_.equalities[k], n_).transpose();
      a_[k] = sdp_.equalities[k].rhs;
      const double norm = A_.row(k).norm();
      if (settings_.scaling && norm > 0.0) scale_a_[k] = 1.0 / norm;
    }
    for (int j = 0; j < mi_; ++j) {
      B_.row(j) = svec(sdp_.inequalities[j], n_).transpose();
      b_[j] = sdp_.inequalities[j].rhs;
      const double norm = B_.row(j).norm();
      if (settings_.scaling && norm > 0.0) scale_b_[j] = 1.0 / norm;
    }
    A_ = scale_a_.asDiagonal() * A_;
    a_ = scale_a_.cwiseProduct(a_);
    B_ = scale_b_.asDiagonal() * B_;
    b_ = scale_b_.cwiseProduct(b_);

    Eigen::MatrixXd M = Eigen::MatrixXd::Identity(N_, N_);
    if (mi_ > 0) M.noalias() += B_.transpose() * B_;
    Eigen::LLT<Eigen::MatrixXd> llt(M);
    if (llt.info() != Eigen::Success) throw NumericalError("affine projection factorization failed");
    K_ = llt.solve(Eigen::MatrixXd::Identity(N_, N_));
    W_ = K_ * A_.transpose();
    const Eigen::MatrixXd S = A_ * W_;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(S);
    if (eig.info() != Eigen::Success) throw NumericalError("normal system eigendecomposition failed");
    const Eigen::VectorXd mu = eig.eigenvalues();
    const double cutoff = 1e-10 * std::max(1.0, mu.size() ? mu.maxCoeff() : 1.0);
    Eigen::VectorXd inv = Eigen::VectorXd::Zero(mu.size());
    for (Eigen::Index i = 0; i < mu.size(); ++i)
      if (mu[i] > cutoff) inv[i] = 1.0 / mu[i];
    S_pinv_ = eig.eigenvectors() * inv.asDiagonal() * eig.eigenvectors().transpose();
    build_face();

    // Equalities that no matrix can satisfy together: a has a component in the
    // null space of A A^T (equivalently of the normal system S).
    const Eigen::VectorXd a_null = a_ - S * (S_pinv_ * a_);
    if (a_null.norm() > 1e-9 * (1.0 + a_.norm())) {
      const Eigen::VectorXd y = -scale_a_.cwiseProduct(a_null);
      affine_certificate_ = check_certificate(sdp_, y, Eigen::VectorXd::Zero(mi_));
    }
  }

  const SdpInstance& instance() const { return sdp_; }
  const SolverSettings& settings() const { return settings_; }
  /// The instance restricted to its known face; interior-point certificates
  /// refer to this instance.
  const SdpInstance& face() const { return face_; }

  SolveResult solve(const Eigen::MatrixXd& C, const SolverState* warm = nullptr) const {
    const auto start = std::chrono::steady_clock::now();
    if (C.rows() != n_ || C.cols() != n_) throw InputError("cost matrix side does not match instance");
    if ((C - C.transpose()).norm() > 1e-12 * std::max(1.0, C.norm()))
      throw InputError("cost matrix must be symmetric");
    SolveResult result;
    auto finish = [&](SolveResult& r) {
      r.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      return r;
    };

    if (affine_certificate_ && affine_certificate_->verified) {
      result.status = SolveStatus::infeasible;
      result.certificate = affine_certificate_;
      result.solution = make_lifted_solution(sdp_, Eigen::MatrixXd::Zero(n_, n_));
      result.primal_residual = std::max(result.solution.equality_residual, result.solution.inequality_residual);
      result.state = {Eigen::VectorXd::Zero(N_ + mi_), Eigen::VectorXd::Zero(N_ + mi_), settings_.rho};
      return finish(result);
    }
    if (settings_.method == SolverMethod::interior_point) solve_interior_point(C, result);
    else solve_admm(C, warm, result);
    return finish(result);
  }

 private:
  void solve_admm(const Eigen::MatrixXd& C, const SolverState* warm, SolveResult& result) const {
    const Eigen::VectorXd c_raw = svec(C);
    const double c_norm = c_raw.norm();
    const double sigma = settings_.scaling && c_norm > 0.0 ? 1.0 / c_norm : 1.0;
    const Eigen::VectorXd c = sigma * c_raw;
    const double alpha = settings_.relaxation;
    const int dim = N_ + mi_;

    Eigen::VectorXd y = Eigen::VectorXd::Zero(dim);
    Eigen::VectorXd u = Eigen::VectorXd::Zero(dim);
    double rho = settings_.rho;
    if (warm && warm->y.size() == dim && warm->u.size() == dim) {
      y = warm->y;
      u = warm->u;
      rho = warm->rho;
    }

    const double a_inf = a_.size() ? scale_a_.cwiseInverse().cwiseProduct(a_).cwiseAbs().maxCoeff() : 0.0;
    const double b_inf = b_.size() ? scale_b_.cwiseInverse().cwiseProduct(b_).cwiseAbs().maxCoeff() : 0.0;
    const double eq_tol = settings_.eps_abs + settings_.eps_rel * a_inf;
    const double ineq_tol = settings_.eps_abs + settings_.eps_rel * b_inf;

    Eigen::VectorXd x(dim), x_hat(dim), y_prev(dim), w(dim), r(N_), lambda(me_), nu_b(mi_);
    Eigen::MatrixXd work(n_, n_);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(n_);

    double best_primal = std::numeric_limits<double>::infinity();
    int stall_start = 0;
    Eigen::VectorXd stall_nu_a = Eigen::VectorXd::Zero(me_);
    Eigen::VectorXd stall_nu_b = Eigen::VectorXd::Zero(mi_);

    int it = 0;
    for (it = 1; it <= settings_.max_iterations; ++it) {
      // Affine projection of v = y - u - c / rho.
      r = y.head(N_) - u.head(N_) - c / rho;
      if (mi_ > 0) r.noalias() += B_.transpose() * (b_ - (y.tail(mi_) - u.tail(mi_)));
      lambda.noalias() = S_pinv_ * (W_.transpose() * r - a_);
      x.head(N_).noalias() = K_ * r;
      x.head(N_).noalias() -= W_ * lambda;
      if (mi_ > 0) {
        x.tail(mi_) = b_;
        x.tail(mi_).noalias() -= B_ * x.head(N_);
        nu_b = (y.tail(mi_) - u.tail(mi_)) - x.tail(mi_);
      }

      x_hat = alpha * x + (1.0 - alpha) * y;
      y_prev = y;
      w = x_hat + u;
      y.head(N_) = project_svec(w.head(N_), work, eig);
      if (mi_ > 0) y.tail(mi_) = w.tail(mi_).cwiseMax(0.0);
      u = w - y;
      if (!y.allFinite() || !u.allFinite()) throw NumericalError("solver iterates became non-finite");

      const bool last = it == settings_.max_iterations;
      if (it % settings_.check_interval != 0 && !last) continue;

      const Eigen::VectorXd z = y.head(N_);
      const Eigen::VectorXd eq_res = (A_ * z - a_).cwiseQuotient(scale_a_);
      double primal = eq_res.size() ? eq_res.cwiseAbs().maxCoeff() : 0.0;
      double ineq = 0.0;
      if (mi_ > 0) ineq = std::max(0.0, (B_ * z - b_).cwiseQuotient(scale_b_).maxCoeff());
      const double admm_primal = (x - y).lpNorm<Eigen::Infinity>();
      const double admm_dual = rho * (y - y_prev).lpNorm<Eigen::Infinity>();
      const Eigen::VectorXd nu_a = rho * lambda;
      const Eigen::VectorXd nu_b_scaled = rho * nu_b;
      const double p_obj = c.dot(z);
      const double d_obj = -(a_.dot(nu_a) + (mi_ > 0 ? b_.dot(nu_b_scaled) : 0.0));
      const double gap = std::abs(p_obj - d_obj);

      result.primal_residual = std::max(primal, ineq);
      result.dual_residual = admm_dual / sigma;
      result.gap = gap / sigma;
      const double u_inf = rho * u.lpNorm<Eigen::Infinity>();
      const bool primal_ok = primal <= eq_tol && ineq <= ineq_tol;
      const bool dual_ok = admm_dual <= settings_.eps_abs + settings_.eps_rel * u_inf;
      const bool gap_ok = gap <= settings_.eps_abs + settings_.eps_rel * (std::abs(p_obj) + std::abs(d_obj));
      if (primal_ok && dual_ok && gap_ok) {
        result.status = SolveStatus::optimal;
        break;
      }

      // Infeasibility: the multipliers of an infeasible problem drift along a
      // ray; their change over a long stall is the candidate witness.
      if (result.primal_residual < 0.99 * best_primal) {
        best_primal = result.primal_residual;
        stall_start = it;
        stall_nu_a = nu_a;
        stall_nu_b = nu_b_scaled;
      } else if (it - stall_start >= settings_.stall_iterations && !primal_ok) {
        const Eigen::VectorXd dy = scale_a_.cwiseProduct(nu_a - stall_nu_a);
        const Eigen::VectorXd dw = mi_ > 0 ? Eigen::VectorXd(scale_b_.cwiseProduct(nu_b_scaled - stall_nu_b))
                                           : Eigen::VectorXd::Zero(0);
        auto cert = check_certificate(sdp_, dy, dw);
        if (cert.verified) {
          result.status = SolveStatus::infeasible;
          result.certificate = std::move(cert);
          break;
        }
        stall_start = it;
        stall_nu_a = nu_a;
        stall_nu_b = nu_b_scaled;
      }

      if (it % settings_.adapt_interval == 0) {
        const double prim_rel = admm_primal / std::max({x.lpNorm<Eigen::Infinity>(), y.lpNorm<Eigen::Infinity>(), 1e-12});
        const double dual_rel = admm_dual / std::max(u_inf, 1e-12);
        const double ratio = std::sqrt(prim_rel / std::max(dual_rel, 1e-300));
        if ((ratio > 5.0 || ratio < 0.2) && std::isfinite(ratio)) {
          const double factor = std::clamp(ratio, 1e-2, 1e2);
          const double next = std::clamp(rho * factor, 1e-6, 1e6);
          u *= rho / next;
          rho = next;
        }
      }
    }
    result.iterations = std::min(it, settings_.max_iterations);
    const Eigen::MatrixXd Z = smat(y.head(N_), n_);
    result.solution = make_lifted_solution(sdp_, Z);
    result.solution.dual_residual = result.dual_residual;
    result.objective = (C.cwiseProduct(Z)).sum();
    result.state = {y, u, rho};
  }

  /// Restricts the instance to the face cut out by the known kernel: Z = Q W Q^T
  /// with Q an orthonormal basis of the kernel's complement. Constraints become
  /// dense W-side matrices, scaled to unit norm; only a linearly independent
  /// subset of the equalities is kept.
  void build_face() {
    const Eigen::MatrixXd& K = sdp_.kernel;
    if (K.cols() == 0) {
      Q_ = Eigen::MatrixXd::Identity(n_, n_);
    } else {
      if (K.rows() != n_) throw InputError("kernel rows do not match instance side");
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(K, Eigen::ComputeFullU);
      const Eigen::VectorXd& sv = svd.singularValues();
      int rank = 0;
      for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv[i] > 1e-9 * std::max(1.0, sv[0])) ++rank;
      Q_ = svd.matrixU().rightCols(n_ - rank);
    }
    face_.side = static_cast<int>(Q_.cols());
    face_.dimension = sdp_.dimension;
    face_.num_points = sdp_.num_points;
    auto reduce = [&](const SymmetricConstraint& c) {
      Eigen::MatrixXd AQ = Eigen::MatrixXd::Zero(n_, Q_.cols());
      for (const auto& e : c.entries) {
        AQ.row(e.row) += e.value * Q_.row(e.col);
        if (e.row != e.col) AQ.row(e.col) += e.value * Q_.row(e.row);
      }
      const Eigen::MatrixXd R = Q_.transpose() * AQ;
      return Eigen::MatrixXd(0.5 * (R + R.transpose()));
    };
    auto to_constraint = [&](const Eigen::MatrixXd& R, const SymmetricConstraint& c) {
      SymmetricConstraint out;
      out.rhs = c.rhs;
      out.tag = c.tag;
      const double tiny = 1e-14 * std::max(1.0, R.cwiseAbs().maxCoeff());
      for (Eigen::Index r = 0; r < R.rows(); ++r)
        for (Eigen::Index col = r; col < R.cols(); ++col)
          if (std::abs(R(r, col)) > tiny)
            out.entries.push_back({static_cast<int>(r), static_cast<int>(col), R(r, col)});
      return out;
    };

    std::vector<Eigen::MatrixXd> eq, in;
    for (const auto& c : sdp_.equalities) {
      eq.push_back(reduce(c));
      face_.equalities.push_back(to_constraint(eq.back(), c));
    }
    for (const auto& c : sdp_.inequalities) {
      in.push_back(reduce(c));
      face_.inequalities.push_back(to_constraint(in.back(), c));
    }

    face_rows_.clear();
    eq_rows_.clear();
    const int me = static_cast<int>(eq.size());
    if (me > 0) {
      Eigen::MatrixXd S(svec_size(face_.side), me);
      for (int k = 0; k < me; ++k) {
        const double norm = eq[k].norm();
        S.col(k) = svec(eq[k]) / (norm > 0.0 ? norm : 1.0);
      }
      Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(S);
      qr.setThreshold(1e-10);
      const auto& perm = qr.colsPermutation().indices();
      for (Eigen::Index k = 0; k < qr.rank(); ++k) eq_rows_.push_back(perm[k]);
      std::sort(eq_rows_.begin(), eq_rows_.end());
    }
    const int kept = static_cast<int>(eq_rows_.size());
    face_rhs_.resize(kept + mi_);
    face_scale_.resize(kept + mi_);
    auto add = [&](const Eigen::MatrixXd& R, double rhs, int slot) {
      const double norm = R.norm();
      const double scale = settings_.scaling && norm > 0.0 ? 1.0 / norm : 1.0;
      face_rows_.push_back(scale * R);
      face_rhs_[slot] = scale * rhs;
      face_scale_[slot] = scale;
    };
    for (int k = 0; k < kept; ++k) add(eq[eq_rows_[k]], sdp_.equalities[eq_rows_[k]].rhs, k);
    for (int j = 0; j < mi_; ++j) add(in[j], sdp_.inequalities[j].rhs, kept + j);
  }

  /// Largest step in (0, inf] keeping X + alpha dX positive definite.
  static double max_step(const Eigen::LLT<Eigen::MatrixXd>& chol, const Eigen::MatrixXd& dX) {
    Eigen::MatrixXd W = chol.matrixL().solve(dX);
    W = chol.matrixL().solve(W.transpose()).transpose();
    const double lambda = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(0.5 * (W + W.transpose()),
                                                                         Eigen::EigenvaluesOnly)
                              .eigenvalues()
                              .minCoeff();
    return lambda >= 0.0 ? std::numeric_limits<double>::infinity() : -1.0 / lambda;
  }

  static double max_step(const Eigen::VectorXd& v, const Eigen::VectorXd& dv) {
    double alpha = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < v.size(); ++i)
      if (dv[i] < 0.0) alpha = std::min(alpha, -v[i] / dv[i]);
    return alpha;
  }

  /// Infeasible-start primal-dual path following on the face problem
  ///   min <C, X>  s.t.  <A_i, X> (+ s_i) = r_i,  X PSD, s >= 0
  /// with dual Z = C - sum y_i A_i, z = -y (inequality rows). Search directions
  /// use the HKM linearization X dZ + dX Z = sigma mu I - X Z with Mehrotra's
  /// predictor-corrector.
  void solve_interior_point(const Eigen::MatrixXd& C_full, SolveResult& result) const {
    const int n = face_.side;
    const int me = static_cast<int>(eq_rows_.size());
    const int m = me + mi_;
    const Eigen::MatrixXd C = Q_.transpose() * C_full * Q_;
    const double c_norm = C.norm();
    const double sigma_c = settings_.scaling && c_norm > 0.0 ? 1.0 / c_norm : 1.0;
    const Eigen::MatrixXd Cs = sigma_c * C;
    const double nu = static_cast<double>(n + mi_);
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
    auto inner = [](const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) { return A.cwiseProduct(B).sum(); };

    double rhs_max = 1.0;
    for (int i = 0; i < m; ++i) rhs_max = std::max(rhs_max, std::abs(face_rhs_[i]));
    const double xi = std::max(10.0, std::sqrt(static_cast<double>(n)) * rhs_max);
    const double eta = std::max({10.0, std::sqrt(static_cast<double>(n)), Cs.norm()});
    Eigen::MatrixXd X = xi * I;
    Eigen::MatrixXd Z = eta * I;
    Eigen::VectorXd s = Eigen::VectorXd::Constant(mi_, xi);
    Eigen::VectorXd z = Eigen::VectorXd::Constant(mi_, eta);
    Eigen::VectorXd y = Eigen::VectorXd::Zero(m);

    double a_inf = 0.0, b_inf = 0.0;
    for (const auto& c : sdp_.equalities) a_inf = std::max(a_inf, std::abs(c.rhs));
    for (const auto& c : sdp_.inequalities) b_inf = std::max(b_inf, std::abs(c.rhs));
    const double eq_tol = settings_.eps_abs + settings_.eps_rel * a_inf;
    const double ineq_tol = settings_.eps_abs + settings_.eps_rel * b_inf;

    auto try_certificate = [&] {
      Eigen::VectorXd ry = Eigen::VectorXd::Zero(me_);
      for (int k = 0; k < me; ++k) ry[eq_rows_[k]] = -face_scale_[k] * y[k];
      const Eigen::VectorXd rw = -face_scale_.tail(mi_).cwiseProduct(y.tail(mi_));
      auto cert = check_certificate(face_, ry, rw);
      if (!cert.verified) return false;
      result.status = SolveStatus::infeasible;
      result.certificate = std::move(cert);
      return true;
    };

    Eigen::MatrixXd M(m, m);
    Eigen::VectorXd rp(m), rhs(m), rds(mi_), AX(m);
    Eigen::MatrixXd Rd(n, n);
    std::vector<Eigen::MatrixXd> P(static_cast<std::size_t>(m));
    int it = 0;
    for (it = 1; it <= settings_.ipm_max_iterations; ++it) {
      for (int i = 0; i < m; ++i) AX[i] = inner(face_rows_[i], X);
      rp = face_rhs_ - AX;
      if (mi_ > 0) rp.tail(mi_) -= s;
      Rd = Cs - Z;
      for (int i = 0; i < m; ++i) Rd -= y[i] * face_rows_[i];
      if (mi_ > 0) rds = -y.tail(mi_) - z;

      double primal = 0.0;
      for (int k = 0; k < me; ++k) primal = std::max(primal, std::abs(rp[k]) / face_scale_[k]);
      double ineq = 0.0;
      for (int j = 0; j < mi_; ++j) ineq = std::max(ineq, (AX[me + j] - face_rhs_[me + j]) / face_scale_[me + j]);
      const double complementarity = inner(X, Z) + (mi_ > 0 ? s.dot(z) : 0.0);
      const double mu = complementarity / nu;
      const double p_obj = inner(Cs, X);
      const double d_obj = face_rhs_.dot(y);
      const double dual_inf = std::max(Rd.norm(), mi_ > 0 ? rds.norm() : 0.0);
      result.primal_residual = std::max(primal, ineq);
      result.dual_residual = dual_inf / sigma_c;
      result.gap = std::abs(p_obj - d_obj) / sigma_c;
      const bool primal_ok = primal <= eq_tol && ineq <= ineq_tol;
      const bool dual_ok = dual_inf <= settings_.eps_abs + settings_.eps_rel * Cs.norm();
      const bool gap_ok =
          complementarity <= settings_.eps_abs + settings_.eps_rel * (1.0 + std::abs(p_obj) + std::abs(d_obj));
      if (primal_ok && dual_ok && gap_ok) {
        result.status = SolveStatus::optimal;
        break;
      }
      // On an empty face the dual objective grows without bound along a Farkas ray.
      if (!primal_ok && d_obj > 1.0 + std::abs(p_obj) && try_certificate()) break;

      Eigen::LLT<Eigen::MatrixXd> z_chol(Z);
      Eigen::LLT<Eigen::MatrixXd> x_chol(X);
      if (z_chol.info() != Eigen::Success || x_chol.info() != Eigen::Success) break;
      const Eigen::MatrixXd Zi = z_chol.solve(I);
      // Schur complement M_ij = tr(A_i X A_j Z^-1) (+ s_i / z_i on inequality rows).
      for (int j = 0; j < m; ++j) P[j] = X * face_rows_[j] * Zi;
      for (int i = 0; i < m; ++i)
        for (int j = i; j < m; ++j) M(i, j) = M(j, i) = face_rows_[i].cwiseProduct(P[j].transpose()).sum();
      for (int j = 0; j < mi_; ++j) M(me + j, me + j) += s[j] / z[j];
      const Eigen::LDLT<Eigen::MatrixXd> m_fact(M);
      const Eigen::MatrixXd XRdZi = X * Rd * Zi;
      const Eigen::MatrixXd T = 0.5 * (XRdZi + XRdZi.transpose());

      struct Direction {
        Eigen::MatrixXd dX, dZ;
        Eigen::VectorXd dy, ds, dz;
      };
      auto direction = [&](double target, const Eigen::MatrixXd* corr_x, const Eigen::VectorXd* corr_s) {
        Eigen::MatrixXd H = target * I - X * Z;
        if (corr_x) H -= *corr_x;
        const Eigen::MatrixXd HZi = H * Zi;
        const Eigen::MatrixXd G = 0.5 * (HZi + HZi.transpose());
        Eigen::VectorXd gs(mi_);
        for (int j = 0; j < mi_; ++j) gs[j] = (target - s[j] * z[j] - (corr_s ? (*corr_s)[j] : 0.0)) / z[j];
        const Eigen::MatrixXd GT = G - T;
        for (int i = 0; i < m; ++i) rhs[i] = rp[i] - inner(face_rows_[i], GT);
        for (int j = 0; j < mi_; ++j) rhs[me + j] -= gs[j] - s[j] / z[j] * rds[j];
        Direction d;
        d.dy = m_fact.solve(rhs);
        d.dZ = Rd;
        for (int i = 0; i < m; ++i) d.dZ -= d.dy[i] * face_rows_[i];
        const Eigen::MatrixXd XdZZi = X * d.dZ * Zi;
        d.dX = G - 0.5 * (XdZZi + XdZZi.transpose());
        if (mi_ > 0) {
          d.dz = rds - d.dy.tail(mi_);
          d.ds = gs - s.cwiseQuotient(z).cwiseProduct(d.dz);
        }
        return d;
      };
      constexpr double kUnbounded = std::numeric_limits<double>::infinity();
      auto steps = [&](const Direction& d) {
        const double ap = std::min(max_step(x_chol, d.dX), mi_ > 0 ? max_step(s, d.ds) : kUnbounded);
        const double ad = std::min(max_step(z_chol, d.dZ), mi_ > 0 ? max_step(z, d.dz) : kUnbounded);
        return std::pair{ap, ad};
      };

      const Direction pred = direction(0.0, nullptr, nullptr);
      const auto [ap_aff_max, ad_aff_max] = steps(pred);
      const double ap_aff = std::min(1.0, ap_aff_max);
      const double ad_aff = std::min(1.0, ad_aff_max);
      double mu_aff = inner(X + ap_aff * pred.dX, Z + ad_aff * pred.dZ);
      if (mi_ > 0) mu_aff += (s + ap_aff * pred.ds).dot(z + ad_aff * pred.dz);
      mu_aff /= nu;
      const double sigma = std::clamp(std::pow(std::max(mu_aff, 0.0) / mu, 3.0), 0.0, 1.0);
      const Eigen::MatrixXd corr_x = pred.dX * pred.dZ;
      const Eigen::VectorXd corr_s = mi_ > 0 ? Eigen::VectorXd(pred.ds.cwiseProduct(pred.dz)) : Eigen::VectorXd();
      const Direction step = direction(sigma * mu, &corr_x, mi_ > 0 ? &corr_s : nullptr);
      const auto [ap_max, ad_max] = steps(step);
      const double ap = std::min(1.0, 0.98 * ap_max);
      const double ad = std::min(1.0, 0.98 * ad_max);
      if (ap < 1e-10 && ad < 1e-10) break;
      X += ap * step.dX;
      X = 0.5 * (X + X.transpose());
      Z += ad * step.dZ;
      Z = 0.5 * (Z + Z.transpose());
      y += ad * step.dy;
      if (mi_ > 0) {
        s += ap * step.ds;
        z += ad * step.dz;
      }
      if (!X.allFinite() || !Z.allFinite() || !y.allFinite())
        throw NumericalError("interior-point iterates became non-finite");
    }
    if (result.status == SolveStatus::max_iters && face_rhs_.dot(y) > 0.0) try_certificate();
    result.iterations = std::min(it, settings_.ipm_max_iterations);
    const Eigen::MatrixXd Z_full = Q_ * X * Q_.transpose();
    result.solution = make_lifted_solution(sdp_, 0.5 * (Z_full + Z_full.transpose()));
    result.solution.dual_residual = result.dual_residual;
    result.objective = inner(C_full, result.solution.Z);
    result.state = {svec(result.solution.Z), Eigen::VectorXd::Zero(N_ + mi_), settings_.rho};
  }

  Eigen::VectorXd project_svec(const Eigen::VectorXd& v, Eigen::MatrixXd& work,
                               Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>& eig) const {
    int k = 0;
    for (int i = 0; i < n_; ++i) {
      work(i, i) = v[k++];
      for (int j = i + 1; j < n_; ++j) work(i, j) = work(j, i) = v[k++] / std::numbers::sqrt2;
    }
    eig.compute(work);
    if (eig.info() != Eigen::Success) throw NumericalError("eigendecomposition failed inside the solver");
    const Eigen::VectorXd& lambda = eig.eigenvalues();
    if (lambda.minCoeff() >= 0.0) return v;
    int first = 0;
    while (first < n_ && lambda[first] <= 0.0) ++first;
    const int positive = n_ - first;
    Eigen::MatrixXd V = eig.eigenvectors().rightCols(positive);
    V = V * lambda.tail(positive).cwiseSqrt().asDiagonal();
    work.noalias() = V * V.transpose();
    Eigen::VectorXd out(v.size());
    k = 0;
    for (int i = 0; i < n_; ++i) {
      out[k++] = work(i, i);
      for (int j = i + 1; j < n_; ++j) out[k++] = std::numbers::sqrt2 * work(i, j);
    }
    return out;
  }

  SdpInstance sdp_;
  SolverSettings settings_;
  int n_ = 0;
  int N_ = 0;
  int me_ = 0;
  int mi_ = 0;
  Eigen::MatrixXd A_, B_, K_, W_, S_pinv_;
  Eigen::VectorXd a_, b_, scale_a_, scale_b_;
  // Interior-point data on the face Z = Q W Q^T.
  Eigen::MatrixXd Q_;
  SdpInstance face_;
  std::vector<Eigen::MatrixXd> face_rows_;
  std::vector<int> eq_rows_;
  Eigen::VectorXd face_rhs_, face_scale_;
  std::optional<InfeasibilityCertificate> affine_certificate_;
};

inline SolveResult solve(const SdpInstance& sdp, const Eigen::MatrixXd& C, const SolverSettings& settings = {},
                         const SolverState* warm = nullptr) {
  return ConicSolver(sdp, settings).solve(C, warm);
}

// ---------------------------------------------------------------------------
// Sparse SDPA format
//
// The instance is written as an SDPA dual problem: max tr(F0 Y) subject to
// tr(F_i Y) = c_i and Y PSD, with Y = diag(Z, s). F0 = -C; each equality is
// (A_k, 0) with c = a_k; each inequality is (B_j, e_j) with c = b_j, the slack
// s_j >= 0 living in a diagonal block.

namespace detail {

inline std::string format_number(double v) {
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "%.17g", v == 0.0 ? 0.0 : v);
  return buffer;
}

}  // namespace detail

inline std::string export_sdpa(const SdpInstance& sdp, const Eigen::MatrixXd& C) {
  if (C.rows() != sdp.side || C.cols() != sdp.side) throw InputError("cost matrix side does not match instance");
  const std::size_t me = sdp.equalities.size();
  const std::size_t mi = sdp.inequalities.size();
  std::string out;
  out += std::to_string(me + mi) + "\n";
  out += (mi > 0 ? "2" : "1") + std::string("\n");
  out += std::to_string(sdp.side) + (mi > 0 ? " -" + std::to_string(mi) : std::string()) + "\n";
  std::string rhs;
  for (const auto& c : sdp.equalities) rhs += (rhs.empty() ? "" : " ") + detail::format_number(c.rhs);
  for (const auto& c : sdp.inequalities) rhs += (rhs.empty() ? "" : " ") + detail::format_number(c.rhs);
  out += rhs + "\n";
  auto line = [&](std::size_t matrix, int block, int i, int j, double value) {
    out += std::to_string(matrix) + " " + std::to_string(block) + " " + std::to_string(i + 1) + " " +
           std::to_string(j + 1) + " " + detail::format_number(value) + "\n";
  };
  for (int i = 0; i < sdp.side; ++i)
    for (int j = i; j < sdp.side; ++j)
      if (C(i, j) != 0.0) line(0, 1, i, j, -C(i, j));
  std::size_t matrix = 1;
  for (const auto& c : sdp.equalities) {
    for (const auto& e : c.entries) line(matrix, 1, e.row, e.col, e.value);
    ++matrix;
  }
  for (std::size_t j = 0; j < mi; ++j) {
    for (const auto& e : sdp.inequalities[j].entries) line(matrix, 1, e.row, e.col, e.value);
    line(matrix, 2, static_cast<int>(j), static_cast<int>(j), 1.0);
    ++matrix;
  }
  return out;
}

struct SdpaDocument {
  SdpInstance instance;  ///< dimension and num_points are unknown from the file; num_points = side
  Eigen::MatrixXd C;
};

/// Reads a document in the layout written by export_sdpa(). Constraints with a
/// slack-block entry become inequalities.
inline SdpaDocument parse_sdpa(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(in, line)) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '"' || line[first] == '*') continue;
    for (char& ch : line)
      if (ch == ',' || ch == '{' || ch == '}' || ch == '(' || ch == ')') ch = ' ';
    lines.push_back(line);
  }
  if (lines.size() < 4) throw InputError("SDPA document is truncated");
  auto fail = [](const std::string& what) -> SdpaDocument { throw InputError("malformed SDPA document: " + what); };
  std::istringstream header(lines[0] + " " + lines[1] + " " + lines[2]);
  long m = 0, blocks = 0, side = 0, slack = 0;
  if (!(header >> m >> blocks >> side) || m < 0 || side <= 0) return fail("header");
  if (blocks == 2 && (!(header >> slack) || slack >= 0)) return fail("slack block");
  if (blocks != 1 && blocks != 2) return fail("block count");
  std::istringstream rhs_line(lines[3]);
  std::vector<double> rhs(static_cast<std::size_t>(m));
  for (auto& v : rhs)
    if (!(rhs_line >> v)) return fail("right-hand side");

  SdpaDocument doc;
  doc.instance.side = static_cast<int>(side);
  doc.instance.num_points = static_cast<int>(side);
  doc.C = Eigen::MatrixXd::Zero(side, side);
  std::vector<std::vector<SymmetricEntry>> entries(static_cast<std::size_t>(m));
  std::vector<bool> has_slack(static_cast<std::size_t>(m), false);
  for (std::size_t l = 4; l < lines.size(); ++l) {
    std::istringstream row(lines[l]);
    long k = 0, block = 0, i = 0, j = 0;
    double value = 0.0;
    if (!(row >> k >> block >> i >> j >> value)) return fail("entry line " + std::to_string(l + 1));
    if (k < 0 || k > m || i < 1 || j < 1) return fail("entry index");
    if (i > j) std::swap(i, j);
    if (block == 1) {
      if (j > side) return fail("entry outside the matrix block");
      if (k == 0) {
        doc.C(i - 1, j - 1) = doc.C(j - 1, i - 1) = -value;
      } else {
        entries[static_cast<std::size_t>(k - 1)].push_back({static_cast<int>(i - 1), static_cast<int>(j - 1), value});
      }
    } else if (block == 2 && k > 0) {
      has_slack[static_cast<std::size_t>(k - 1)] = true;
    } else if (block != 2) {
      return fail("block index");
    }
  }
  for (std::size_t k = 0; k < static_cast<std::size_t>(m); ++k) {
    SymmetricConstraint c;
    std::sort(entries[k].begin(), entries[k].end(),
              [](const SymmetricEntry& a, const SymmetricEntry& b) { return std::pair{a.row, a.col} < std::pair{b.row, b.col}; });
    c.entries = std::move(entries[k]);
    c.rhs = rhs[k];
    (has_slack[k] ? doc.instance.inequalities : doc.instance.equalities).push_back(std::move(c));
  }
  return doc;
}

}  // namespace cidgik
