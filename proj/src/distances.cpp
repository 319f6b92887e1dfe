#include "ixbsp/distances.hpp"

#include <algorithm>
#include <cmath>

namespace ixbsp {

namespace {

const MatrixXd& info_of(const GaussianBelief& b, MatrixXd& scratch) {
  if (b.info.size()) return b.info;
  scratch = spd_inverse(b.cov, ErrorKind::InvalidBelief);
  return scratch;
}

// Both beliefs restricted to their shared variables, in a canonical order.
struct Aligned {
  GaussianBelief p_store, q_store;
  const GaussianBelief* p = nullptr;
  const GaussianBelief* q = nullptr;
};

void align(const GaussianBelief& p, const GaussianBelief& q, Aligned& a) {
  if (p.index == q.index) {
    a.p = &p;
    a.q = &q;
    return;
  }
  std::vector<VariableId> common;
  for (const auto& v : p.index)
    if (q.has(v)) common.push_back(v);
  if (common.empty()) throw Error(ErrorKind::InvalidInput, "beliefs share no variables");
  std::sort(common.begin(), common.end());
  a.p_store = marginal(p, common);
  a.q_store = marginal(q, common);
  a.p = &a.p_store;
  a.q = &a.q_store;
}

VectorXd mean_gap(const GaussianBelief& p, const GaussianBelief& q) {
  VectorXd d = p.mean - q.mean;
  int o = 0;
  for (const auto& v : p.index) {
    if (v.kind == VarKind::Pose) d[o + 2] = wrap_angle(d[o + 2]);
    o += v.dim;
  }
  return d;
}

double log_det_spd(const MatrixXd& m) {
  Eigen::LLT<MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) throw Error(ErrorKind::InvalidBelief, "covariance not positive definite");
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

// tr(X Y) for symmetric X, Y.
double trace_prod(const MatrixXd& X, const MatrixXd& Y) { return X.cwiseProduct(Y).sum(); }

double sqrtj_core(const VectorXd& d, const MatrixXd& Sp, const MatrixXd& Lp, const MatrixXd& Sq,
                  const MatrixXd& Lq) {
  const double arg = d.dot((Lq + Lp) * d) + trace_prod(Lq, Sp) + trace_prod(Lp, Sq) - 2.0 * double(d.size());
  if (arg < -1e-9) throw Error(ErrorKind::NumericalError, "negative argument under square root");
  return 0.5 * std::sqrt(std::max(arg, 0.0));
}

}  // namespace

double kl_gaussian(const GaussianBelief& p, const GaussianBelief& q) {
  Aligned a;
  align(p, q, a);
  MatrixXd s;
  const MatrixXd& Lq = info_of(*a.q, s);
  const VectorXd d = mean_gap(*a.p, *a.q);
  const double n = double(d.size());
  return 0.5 * (log_det_spd(a.q->cov) - log_det_spd(a.p->cov) - n + trace_prod(Lq, a.p->cov) + d.dot(Lq * d));
}

double d_sqrt_j(const GaussianBelief& p, const GaussianBelief& q) {
  if (p.index == q.index && p.mean == q.mean && p.cov == q.cov) return 0.0;
  Aligned a;
  align(p, q, a);
  if (a.p->mean == a.q->mean && a.p->cov == a.q->cov) return 0.0;
  MatrixXd s1, s2;
  const MatrixXd& Lp = info_of(*a.p, s1);
  const MatrixXd& Lq = info_of(*a.q, s2);
  return sqrtj_core(mean_gap(*a.p, *a.q), a.p->cov, Lp, a.q->cov, Lq);
}

double d_sqrt_j(const VectorXd& mp, const MatrixXd& Sp, const VectorXd& mq, const MatrixXd& Sq) {
  if (mp == mq && Sp == Sq) return 0.0;
  return sqrtj_core(mp - mq, Sp, spd_inverse(Sp, ErrorKind::InvalidBelief), Sq,
                    spd_inverse(Sq, ErrorKind::InvalidBelief));
}

DaKey d_da(const GaussianBelief& a, const GaussianBelief& b, int index) {
  auto first_time = [](const GaussianBelief& x) {
    return x.history.steps.empty() ? x.label.t : x.history.steps.front().time;
  };
  const int from = std::min(first_time(a), first_time(b));
  const std::vector<Step> sa = collect_steps(a.history, from);
  const std::vector<Step> sb = collect_steps(b.history, from);
  std::map<int, const Step*> tb;
  for (const auto& s : sb) tb[s.time] = &s;
  DaKey key;
  key.index = index;
  bool overlap = false;
  double gap2 = 0.0;
  for (const auto& s : sa) {
    auto it = tb.find(s.time);
    if (it == tb.end()) continue;
    overlap = true;
    const DaDiff d = da_diff(s.da, it->second->da);
    key.count += static_cast<int>(d.remove.entries.size() + d.add.entries.size());
    for (const auto& [t, id] : d.keep.entries) gap2 += (s.z.at(id) - it->second->z.at(id)).squaredNorm();
  }
  if (!overlap) throw Error(ErrorKind::IncompatibleHistories, "no overlapping history span");
  key.gap = std::sqrt(gap2);
  return key;
}

DistanceValue distance(const GaussianBelief& p, const GaussianBelief& q, DistanceKind kind, int index) {
  DistanceValue v;
  v.kind = kind;
  if (kind == DistanceKind::SqrtJ) {
    v.value = d_sqrt_j(p, q);
  } else {
    v.key = d_da(p, q, index);
    v.value = v.key.count + v.key.gap;
  }
  return v;
}

PropagationSpec make_propagation_spec(const GaussianBelief& before, const GaussianBelief& after,
                                      const std::optional<MatrixXd>& A) {
  PropagationSpec s;
  s.d_post = after.dim();
  s.A = A;
  VectorXd padded_mean = VectorXd::Zero(s.d_post);
  MatrixXd padded_info = MatrixXd::Zero(s.d_post, s.d_post);
  MatrixXd scratch;
  const MatrixXd& L = info_of(before, scratch);
  int o = 0;
  for (const auto& v : before.index) {
    const int po = after.offset(v);
    if (po < 0) throw Error(ErrorKind::UnknownVariable, v.str());
    for (int k = 0; k < v.dim; ++k) s.pad.push_back(po + k);
    o += v.dim;
  }
  const int d = before.dim();
  for (int i = 0; i < d; ++i) {
    padded_mean[s.pad[i]] = before.mean[i];
    for (int j = 0; j < d; ++j) padded_info(s.pad[i], s.pad[j]) = L(i, j);
  }
  MatrixXd scratch2;
  const MatrixXd& Lp = info_of(after, scratch2);
  s.gain = A ? MatrixXd(A->transpose() * *A) : MatrixXd(Lp - padded_info);
  s.zeta = after.mean - padded_mean;
  return s;
}

double incremental_delta(const GaussianBelief& b1, const GaussianBelief& b2, const PropagationSpec& s1,
                         const PropagationSpec& s2) {
  if (b1.dim() != b2.dim() || s1.d_post != s2.d_post || s1.pad != s2.pad ||
      static_cast<int>(s1.pad.size()) != b1.dim())
    throw Error(ErrorKind::InvalidInput, "propagation specs do not line up");
  const int d = b1.dim();
  const int dp = s1.d_post;
  MatrixXd t1, t2;
  const MatrixXd& L1 = info_of(b1, t1);
  const MatrixXd& L2 = info_of(b2, t2);

  auto pad_vec = [&](const VectorXd& v) {
    VectorXd out = VectorXd::Zero(dp);
    for (int i = 0; i < d; ++i) out[s1.pad[i]] = v[i];
    return out;
  };
  auto pad_mat = [&](const MatrixXd& m) {
    MatrixXd out = MatrixXd::Zero(dp, dp);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) out(s1.pad[i], s1.pad[j]) = m(i, j);
    return out;
  };
  auto old_block = [&](const MatrixXd& m) {
    MatrixXd out(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) out(i, j) = m(s1.pad[i], s1.pad[j]);
    return out;
  };

  const MatrixXd L1p = pad_mat(L1) + s1.gain;
  const MatrixXd L2p = pad_mat(L2) + s2.gain;
  const MatrixXd S1p = spd_inverse(L1p, ErrorKind::NumericalError);
  const MatrixXd S2p = spd_inverse(L2p, ErrorKind::NumericalError);
  const VectorXd dm = pad_vec(b2.mean - b1.mean);
  const VectorXd dz = s2.zeta - s1.zeta;
  const MatrixXd Lsum = L1p + L2p;

  double delta = 0.25 * dm.dot((s1.gain + s2.gain) * dm) + 0.5 * dm.dot(Lsum * dz) + 0.25 * dz.dot(Lsum * dz);

  // tr(A_b'A_b S_ap) - tr(S_b^-1 W_a), W_a the covariance reduction of a.
  auto trace_term = [&](const GaussianBelief& a, const PropagationSpec& sa, const MatrixXd& Sap,
                        const PropagationSpec& sb, const MatrixXd& Lb) {
    MatrixXd W;
    if (sa.A && dp == d) {
      const MatrixXd& A = *sa.A;
      const MatrixXd inner = MatrixXd::Identity(A.rows(), A.rows()) + A * a.cov * A.transpose();
      Eigen::LLT<MatrixXd> llt(inner);
      if (llt.info() != Eigen::Success) throw Error(ErrorKind::NumericalError, "I + A S A' is singular");
      const MatrixXd AS = A * a.cov;
      W = AS.transpose() * llt.solve(AS);
    } else {
      W = a.cov - old_block(Sap);
    }
    return trace_prod(sb.gain, Sap) - trace_prod(Lb, W);
  };
  delta += 0.25 * trace_term(b1, s1, S1p, s2, L2);
  delta += 0.25 * trace_term(b2, s2, S2p, s1, L1);
  delta -= 0.5 * double(dp - d);
  return delta;
}

namespace {

struct LinearParts {
  MatrixXd F, J, H, Sw, Sv;
  VectorXd u;
};

LinearParts linear_parts(const ActionId& action, const Models& models) {
  if (!models.motion.linear() || !models.meas.linear())
    throw Error(ErrorKind::UnsupportedModel, "linear motion and measurement models required");
  const auto& mm = std::get<LinearMotion>(models.motion.model);
  const auto& zm = std::get<LinearMeas>(models.meas.model);
  LinearParts p{mm.F, mm.J, zm.H, mm.noise, zm.noise, action.u};
  if (p.u.size() == 0) p.u = VectorXd::Zero(p.J.cols());
  return p;
}

}  // namespace

Gaussian zeta_distribution(const GaussianBelief& b, const ActionId& action, const Models& models) {
  const LinearParts m = linear_parts(action, models);
  const VectorXd mu0 = b.robot_mean();
  const MatrixXd S0 = b.robot_cov();
  const int n = static_cast<int>(mu0.size());
  const MatrixXd S0i = spd_inverse(S0, ErrorKind::InvalidBelief);
  const MatrixXd Swi = spd_inverse(m.Sw, ErrorKind::NumericalError);
  const MatrixXd Svi = m.H.rows() ? spd_inverse(m.Sv, ErrorKind::NumericalError) : MatrixXd(0, 0);

  MatrixXd AtA(2 * n, 2 * n);
  AtA.topLeftCorner(n, n) = S0i + m.F.transpose() * Swi * m.F;
  AtA.topRightCorner(n, n) = -m.F.transpose() * Swi;
  AtA.bottomLeftCorner(n, n) = -Swi * m.F;
  AtA.bottomRightCorner(n, n) = Swi;
  if (m.H.rows()) AtA.bottomRightCorner(n, n) += m.H.transpose() * Svi * m.H;
  const MatrixXd S = spd_inverse(AtA, ErrorKind::NumericalError);
  const MatrixXd s21 = S.bottomLeftCorner(n, n);
  const MatrixXd s22 = S.bottomRightCorner(n, n);

  const VectorXd Ju = m.J * m.u;
  Gaussian g;
  VectorXd tail = Swi * Ju;
  if (m.H.rows()) tail += m.H.transpose() * Svi * (m.H * m.F * mu0 + m.H * Ju);
  g.mean = s21 * (S0i * mu0 - m.F.transpose() * Swi * Ju) + s22 * tail - mu0;
  if (m.H.rows()) {
    const MatrixXd K = s22 * m.H.transpose() * Svi;
    const MatrixXd HF = m.H * m.F;
    g.cov = K * (m.H * m.Sw * m.H.transpose() + HF * S0 * HF.transpose()) * K.transpose() +
            s22 * m.H.transpose() * Svi * m.H * s22;
  } else {
    g.cov = MatrixXd::Zero(n, n);
  }
  g.cov = 0.5 * (g.cov + g.cov.transpose());
  return g;
}

Gaussian linear_measurement_likelihood(const GaussianBelief& b, const ActionId& action, const Models& models) {
  const LinearParts m = linear_parts(action, models);
  const VectorXd mu0 = b.robot_mean();
  const MatrixXd S0 = b.robot_cov();
  const MatrixXd HF = m.H * m.F;
  Gaussian g;
  g.mean = HF * mu0 + m.H * m.J * m.u;
  g.cov = m.Sv + m.H * m.Sw * m.H.transpose() + HF * S0 * HF.transpose();
  g.cov = 0.5 * (g.cov + g.cov.transpose());
  return g;
}

QuadMoments gaussian_quadratic_moments(const MatrixXd& C, const VectorXd& c, double y, const VectorXd& mu,
                                       const MatrixXd& Sigma) {
  const double scale = std::max(1.0, C.size() ? C.cwiseAbs().maxCoeff() : 0.0);
  if (C.rows() != C.cols() || (C - C.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale)
    throw Error(ErrorKind::InvalidInput, "quadratic form matrix is not symmetric");
  const MatrixXd CS = C * Sigma;
  const VectorXd lin = c + 2.0 * C * mu;
  QuadMoments m;
  m.mean = CS.trace() + mu.dot(C * mu) + c.dot(mu) + y;
  m.variance = 2.0 * (CS * CS).trace() + lin.dot(Sigma * lin);
  return m;
}

bool check_chi_squared_conditions(const MatrixXd& C, const VectorXd& c, double y, const MatrixXd& Sigma) {
  constexpr double tol = 1e-8;
  if ((C * Sigma * C - C).cwiseAbs().maxCoeff() > tol) return false;
  if ((C * Sigma * c - c).cwiseAbs().maxCoeff() > tol) return false;
  return std::abs(y - 0.25 * c.dot(Sigma * c)) <= tol;
}

}  // namespace ixbsp
