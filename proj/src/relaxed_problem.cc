#include "srp/relaxed_problem.h"

#include <algorithm>
#include <cmath>

#include "term_eval.h"

namespace srp {
namespace internal {
namespace {

// sum_i ca_i J_a^T fwd_i + cb_i J_b^T bwd_i + c_cov L^T vec(cov_residual).
Vector CombineAdjoints(const RelaxedProblem& problem, const Matrix& fwd, const Matrix& bwd,
                       const Vector& ca, const Vector& cb, const Matrix& cov_residual,
                       double c_cov) {
  const int d = problem.dim();
  const PointPairs& pts = problem.pairs();
  Vector g = Vector::Zero(problem.num_variables());
  const Matrix wf = fwd * ca.asDiagonal();
  Matrix grad_a = wf * pts.p().transpose();
  if (problem.has_backward()) {
    const Matrix wb = bwd * cb.asDiagonal();
    grad_a += pts.q() * wb.transpose();
    if (problem.has_s()) g.segment(problem.s_offset(), d) = wb.rowwise().sum();
  }
  if (problem.has_t()) g.segment(problem.t_offset(), d) = wf.rowwise().sum();
  if (c_cov != 0.0 && cov_residual.size() > 0) {
    grad_a += c_cov * (cov_residual * problem.covariance()->cov_p -
                       problem.covariance()->cov_q * cov_residual);
  }
  g.head(d * d) = Eigen::Map<const Vector>(grad_a.data(), d * d);
  return g;
}

}  // namespace

TermEval EvaluateTerms(const RelaxedProblem& problem, const Vector& x, double eps) {
  const PointPairs& pts = problem.pairs();
  const int n = pts.size();
  const RelaxedSolution v = problem.Unpack(x);
  TermEval ev;
  ev.a = v.a;
  ev.t = v.t;
  ev.s = v.s;
  ev.fwd = (v.a * pts.p() - pts.q()).colwise() + v.t;
  ev.bwd = problem.has_backward() ? Matrix((v.a.transpose() * pts.q() - pts.p()).colwise() + v.s)
                                  : Matrix::Zero(pts.dim(), n);
  ev.na.resize(n);
  ev.nb.resize(n);
  ev.phi.resize(n);
  ev.ca.resize(n);
  ev.cb.resize(n);
  ev.m11 = Vector::Zero(n);
  ev.m12 = Vector::Zero(n);
  ev.m22 = Vector::Zero(n);

  const RelaxationKind kind = problem.kind();
  const NormPower p = problem.power();
  const double norm_eps =
      (kind == RelaxationKind::kSymmetric && p == NormPower::kInf) ? 0.5 * eps : eps;
  const double e2 = norm_eps * norm_eps;

  for (int i = 0; i < n; ++i) {
    const double fa = ev.fwd.col(i).squaredNorm();
    const double fb = ev.bwd.col(i).squaredNorm();
    if (kind == RelaxationKind::kSquared) {
      ev.na(i) = std::sqrt(fa);
      ev.nb(i) = std::sqrt(fb);
      ev.phi(i) = 0.5 * (fa + fb);
      ev.ca(i) = 1.0;
      ev.cb(i) = 1.0;
      continue;
    }
    const double x_ = std::sqrt(fa + e2);
    const double y_ = std::sqrt(fb + e2);
    ev.na(i) = x_;
    ev.nb(i) = y_;
    double dx = 0, dy = 0, dxx = 0, dxy = 0, dyy = 0;
    if (kind == RelaxationKind::kNonSymmetric) {
      ev.phi(i) = x_;
      dx = 1.0;
    } else if (p == NormPower::kOne) {
      ev.phi(i) = 0.5 * (x_ + y_);
      dx = dy = 0.5;
    } else if (p == NormPower::kTwo) {
      const double rho = std::sqrt(0.5 * (x_ * x_ + y_ * y_));
      const double rho3 = rho * rho * rho;
      ev.phi(i) = rho;
      dx = x_ / (2 * rho);
      dy = y_ / (2 * rho);
      dxx = 1 / (2 * rho) - x_ * x_ / (4 * rho3);
      dyy = 1 / (2 * rho) - y_ * y_ / (4 * rho3);
      dxy = -x_ * y_ / (4 * rho3);
    } else {
      const double gap = x_ - y_;
      const double dd = std::sqrt(gap * gap + eps * eps);
      ev.phi(i) = 0.5 * (x_ + y_ + dd);
      dx = 0.5 * (1 + gap / dd);
      dy = 0.5 * (1 - gap / dd);
      dxx = dyy = 0.5 * eps * eps / (dd * dd * dd);
      dxy = -dxx;
    }
    // Hessian of phi in (a, b): diag(ca I, cb I) + [a/na, b/nb] M [a/na, b/nb]^T.
    ev.ca(i) = dx / x_;
    ev.cb(i) = dy / y_;
    ev.m11(i) = dxx - ev.ca(i);
    ev.m12(i) = dxy;
    ev.m22(i) = dyy - ev.cb(i);
  }
  if (kind == RelaxationKind::kNonSymmetric) ev.cb.setZero(), ev.m22.setZero();
  ev.value = ev.phi.sum();

  if (problem.has_covariance_term()) {
    const CovariancePair& cov = *problem.covariance();
    ev.cov_residual = v.a * cov.cov_p - cov.cov_q * v.a;
    const double m2 = ev.cov_residual.squaredNorm();
    if (kind == RelaxationKind::kSquared) {
      ev.cov_norm = std::sqrt(m2);
      ev.value += problem.lambda() * m2;
    } else {
      ev.cov_norm = std::sqrt(m2 + eps * eps);
      ev.value += problem.lambda() * ev.cov_norm;
    }
  }
  return ev;
}

double CovarianceCurvature(const RelaxedProblem& problem, const TermEval& ev) {
  if (!problem.has_covariance_term()) return 0.0;
  if (problem.kind() == RelaxationKind::kSquared) return 2.0 * problem.lambda();
  return problem.lambda() / ev.cov_norm;
}

Vector AssembleGradient(const RelaxedProblem& problem, const TermEval& ev) {
  return CombineAdjoints(problem, ev.fwd, ev.bwd, ev.ca, ev.cb, ev.cov_residual,
                         CovarianceCurvature(problem, ev));
}

Vector CovarianceAdjoint(const RelaxedProblem& problem, const Matrix& cov_residual) {
  const int n = problem.pairs().size();
  const int d = problem.dim();
  const Matrix zero = Matrix::Zero(d, n);
  return CombineAdjoints(problem, zero, zero, Vector::Zero(n), Vector::Zero(n), cov_residual,
                         1.0);
}

Matrix AssembleCurvature(const RelaxedProblem& problem, const Vector& ca, const Vector& cb,
                         double c_cov) {
  const int d = problem.dim();
  const int da = d * d;
  const PointPairs& pts = problem.pairs();
  Matrix h = Matrix::Zero(problem.num_variables(), problem.num_variables());

  // Forward block: (sum ca p p^T) kron I, coupling to t through (sum ca p) kron I.
  const Matrix xp = pts.p() * ca.asDiagonal() * pts.p().transpose();
  const Vector mp = pts.p() * ca;
  for (int j = 0; j < d; ++j)
    for (int l = 0; l < d; ++l)
      for (int k = 0; k < d; ++k) h(k + d * j, k + d * l) += xp(j, l);
  if (problem.has_t()) {
    const int to = problem.t_offset();
    for (int j = 0; j < d; ++j)
      for (int k = 0; k < d; ++k) {
        h(k + d * j, to + k) += mp(j);
        h(to + k, k + d * j) += mp(j);
      }
    for (int k = 0; k < d; ++k) h(to + k, to + k) += ca.sum();
  }

  // Backward block: I kron (sum cb q q^T), coupling to s through I kron (sum cb q).
  if (problem.has_backward()) {
    const Matrix yq = pts.q() * cb.asDiagonal() * pts.q().transpose();
    const Vector mq = pts.q() * cb;
    for (int j = 0; j < d; ++j) h.block(d * j, d * j, d, d) += yq;
    if (problem.has_s()) {
      const int so = problem.s_offset();
      for (int j = 0; j < d; ++j)
        for (int k = 0; k < d; ++k) {
          h(k + d * j, so + j) += mq(k);
          h(so + j, k + d * j) += mq(k);
        }
      for (int k = 0; k < d; ++k) h(so + k, so + k) += cb.sum();
    }
  }

  if (c_cov != 0.0 && problem.has_covariance_term()) {
    const CovariancePair& cov = *problem.covariance();
    // vec(A C_p - C_q A) = (C_p kron I - I kron C_q) vec(A) for symmetric C_p.
    Matrix l = Matrix::Zero(da, da);
    for (int j = 0; j < d; ++j)
      for (int jj = 0; jj < d; ++jj)
        for (int k = 0; k < d; ++k) l(k + d * j, k + d * jj) += cov.cov_p(jj, j);
    for (int j = 0; j < d; ++j) l.block(d * j, d * j, d, d) -= cov.cov_q;
    h.topLeftCorner(da, da).noalias() += c_cov * l.transpose() * l;
  }
  return h;
}

Vector AssembleTarget(const RelaxedProblem& problem, const Vector& ca, const Vector& cb) {
  const int d = problem.dim();
  const PointPairs& pts = problem.pairs();
  Vector r = Vector::Zero(problem.num_variables());
  Vector w = ca;
  if (problem.has_backward()) w += cb;
  const Matrix qp = pts.q() * w.asDiagonal() * pts.p().transpose();
  r.head(d * d) = Eigen::Map<const Vector>(qp.data(), d * d);
  if (problem.has_t()) r.segment(problem.t_offset(), d) = pts.q() * ca;
  if (problem.has_s()) r.segment(problem.s_offset(), d) = pts.p() * cb;
  return r;
}

}  // namespace internal

RelaxedProblem::RelaxedProblem(PointPairs pts, RelaxationKind kind, NormPower p,
                               bool use_translations)
    : pts_(std::move(pts)), kind_(kind), p_(p), use_translations_(use_translations) {}

RelaxedProblem& RelaxedProblem::WithCovariance(CovariancePair cov, double lambda) {
  if (cov.cov_p.rows() != dim() || cov.cov_q.rows() != dim()) {
    throw DimensionError("covariance pair does not match point dimension");
  }
  if (!(lambda >= 0)) throw std::invalid_argument("lambda must be >= 0");
  cov_ = std::move(cov);
  lambda_ = lambda;
  return *this;
}

int RelaxedProblem::num_variables() const {
  const int d = dim();
  return d * d + (has_t() ? d : 0) + (has_s() ? d : 0);
}

Vector RelaxedProblem::Pack(const Matrix& a, const Vector& t, const Vector& s) const {
  const int d = dim();
  if (a.rows() != d || a.cols() != d) throw DimensionError("pack: matrix has wrong shape");
  Vector x(num_variables());
  x.head(d * d) = Eigen::Map<const Vector>(a.data(), d * d);
  if (has_t()) {
    if (t.size() != d) throw DimensionError("pack: t has wrong length");
    x.segment(t_offset(), d) = t;
  }
  if (has_s()) {
    if (s.size() != d) throw DimensionError("pack: s has wrong length");
    x.segment(s_offset(), d) = s;
  }
  return x;
}

RelaxedSolution RelaxedProblem::Unpack(const Vector& x) const {
  const int d = dim();
  if (x.size() != num_variables()) throw DimensionError("unpack: wrong variable count");
  RelaxedSolution sol;
  sol.a = Eigen::Map<const Matrix>(x.data(), d, d);
  sol.t = has_t() ? Vector(x.segment(t_offset(), d)) : Vector::Zero(d);
  sol.s = has_s() ? Vector(x.segment(s_offset(), d)) : Vector::Zero(d);
  sol.p = p_;
  return sol;
}

double RelaxedProblem::Value(const Vector& x) const {
  const RelaxedSolution v = Unpack(x);
  double value = 0.0;
  switch (kind_) {
    case RelaxationKind::kSymmetric:
      value = EnergyRelaxedRigid(v.a, v.t, v.s, pts_, p_);
      break;
    case RelaxationKind::kNonSymmetric:
      value = EnergyNonSym(v.a, v.t, pts_);
      break;
    case RelaxationKind::kSquared:
      value = 0.5 * (((v.a * pts_.p() - pts_.q()).colwise() + v.t).squaredNorm() +
                     ((v.a.transpose() * pts_.q() - pts_.p()).colwise() + v.s).squaredNorm());
      break;
  }
  if (has_covariance_term()) {
    const double e = CovarianceEnergy(v.a, *cov_);
    value += lambda_ * (kind_ == RelaxationKind::kSquared ? e * e : e);
  }
  return value;
}

ValueAndGradient RelaxedProblem::Smoothed(const Vector& x, double eps) const {
  if (!(eps > 0)) throw std::invalid_argument("smoothing scale eps must be positive");
  const internal::TermEval ev = internal::EvaluateTerms(*this, x, eps);
  return {ev.value, internal::AssembleGradient(*this, ev)};
}

Vector RelaxedProblem::Subgradient(const Vector& x) const {
  const RelaxedSolution v = Unpack(x);
  const int n = pts_.size();
  const Matrix fwd = (v.a * pts_.p() - pts_.q()).colwise() + v.t;
  const Matrix bwd = has_backward()
                         ? Matrix((v.a.transpose() * pts_.q() - pts_.p()).colwise() + v.s)
                         : Matrix::Zero(dim(), n);
  Vector ca = Vector::Zero(n);
  Vector cb = Vector::Zero(n);
  auto inv = [](double r) { return r > 0 ? 1.0 / r : 0.0; };
  for (int i = 0; i < n; ++i) {
    const double ra = fwd.col(i).norm();
    const double rb = bwd.col(i).norm();
    if (kind_ == RelaxationKind::kSquared) {
      ca(i) = cb(i) = 1.0;
    } else if (kind_ == RelaxationKind::kNonSymmetric) {
      ca(i) = inv(ra);
    } else if (p_ == NormPower::kOne) {
      ca(i) = 0.5 * inv(ra);
      cb(i) = 0.5 * inv(rb);
    } else if (p_ == NormPower::kTwo) {
      const double rho = std::sqrt(0.5 * (ra * ra + rb * rb));
      ca(i) = cb(i) = 0.5 * inv(rho);
    } else if (ra >= rb) {
      ca(i) = inv(ra);
    } else {
      cb(i) = inv(rb);
    }
  }
  Matrix cov_residual;
  double c_cov = 0.0;
  if (has_covariance_term()) {
    cov_residual = v.a * cov_->cov_p - cov_->cov_q * v.a;
    c_cov = kind_ == RelaxationKind::kSquared ? 2.0 * lambda_
                                              : lambda_ * inv(cov_residual.norm());
  }
  return internal::CombineAdjoints(*this, fwd, bwd, ca, cb, cov_residual, c_cov);
}

double RelaxedProblem::ResidualScale() const {
  std::vector<double> r(pts_.size());
  for (int i = 0; i < pts_.size(); ++i) {
    r[i] = std::sqrt(pts_.p().col(i).squaredNorm() + pts_.q().col(i).squaredNorm());
  }
  std::nth_element(r.begin(), r.begin() + r.size() / 2, r.end());
  return r[r.size() / 2];
}

ValueAndGradient SmoothedValueAndGradient(const RelaxedProblem& problem, const Vector& x,
                                          double eps) {
  return problem.Smoothed(x, eps);
}

}  // namespace srp
