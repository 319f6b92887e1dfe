#include "ixbsp/sampling.hpp"

#include <cmath>
#include <numbers>

namespace ixbsp {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t stream_seed(std::uint64_t base, const std::vector<int>& path) {
  std::uint64_t h = splitmix64(base);
  for (int p : path) h = splitmix64(h ^ (static_cast<std::uint64_t>(p) + 0x51ed270b27ULL));
  return h;
}

namespace {

VectorXd standard_normal(int n, Rng& rng) {
  std::normal_distribution<double> N(0.0, 1.0);
  VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = N(rng);
  return v;
}

StateSample draw(const GaussianBelief& b, const MatrixXd& L, Rng& rng) {
  StateSample s;
  s.index = b.index;
  s.source = b.label;
  s.chi = b.mean + L * standard_normal(static_cast<int>(L.cols()), rng);
  return s;
}

// Cholesky factor embedded in full dimension; landmarks fixed at their mean when not sampled.
MatrixXd sampling_factor(const GaussianBelief& b, bool sample_landmarks) {
  if (sample_landmarks) {
    Eigen::LLT<MatrixXd> llt(b.cov);
    if (llt.info() != Eigen::Success) throw Error(ErrorKind::InvalidBelief, "covariance not positive definite");
    return llt.matrixL();
  }
  const VariableId rv = b.robot_var();
  const int o = b.offset(rv);
  Eigen::LLT<MatrixXd> llt(b.cov.block(o, o, rv.dim, rv.dim));
  if (llt.info() != Eigen::Success) throw Error(ErrorKind::InvalidBelief, "pose covariance not positive definite");
  MatrixXd L = MatrixXd::Zero(b.dim(), rv.dim);
  L.middleRows(o, rv.dim) = llt.matrixL();
  return L;
}

int state_offset(const StateSample& chi, const VariableId& v) {
  int o = 0;
  for (const auto& id : chi.index) {
    if (id == v) return o;
    o += id.dim;
  }
  return -1;
}

VariableId latest_robot(const std::vector<VariableId>& index) {
  const VariableId* best = nullptr;
  for (const auto& id : index)
    if (id.is_robot() && (!best || id.key > best->key)) best = &id;
  if (!best) throw Error(ErrorKind::InvalidBelief, "no robot variable");
  return *best;
}

double log_normal(const VectorXd& r, const MatrixXd& S) {
  Eigen::LLT<MatrixXd> llt(S);
  if (llt.info() != Eigen::Success) throw Error(ErrorKind::NumericalError, "likelihood covariance not positive definite");
  const VectorXd w = llt.matrixL().solve(r);
  const double logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  return -0.5 * (w.squaredNorm() + logdet + double(r.size()) * std::log(2.0 * std::numbers::pi));
}

}  // namespace

StateSample sample_state(const GaussianBelief& b, Rng& rng, bool sample_landmarks) {
  return draw(b, sampling_factor(b, sample_landmarks), rng);
}

DataAssociation predicted_da(const StateSample& chi, const MeasModel& model) {
  DataAssociation da;
  const VariableId rv = latest_robot(chi.index);
  const VectorXd pose = chi.chi.segment(state_offset(chi, rv), rv.dim);
  if (model.linear()) {
    da.entries.insert({rv.key, kDirect});
    return da;
  }
  int o = 0;
  for (const auto& id : chi.index) {
    if (id.kind == VarKind::Landmark && model.visible(pose, chi.chi.segment(o, 2))) da.entries.insert({rv.key, id.key});
    o += id.dim;
  }
  return da;
}

MeasurementSet sample_measurement(const StateSample& chi, const DataAssociation& da, const MeasModel& model,
                                  Rng& rng) {
  MeasurementSet z;
  const VariableId rv = latest_robot(chi.index);
  const VectorXd pose = chi.chi.segment(state_offset(chi, rv), rv.dim);
  Eigen::LLT<MatrixXd> llt(model.noise());
  const MatrixXd L = llt.info() == Eigen::Success ? MatrixXd(llt.matrixL()) : MatrixXd::Zero(model.z_dim(), model.z_dim());
  for (const auto& [t, id] : da.entries) {
    VectorXd clean;
    if (id == kDirect) {
      clean = model.predict_direct(pose);
    } else {
      const int o = state_offset(chi, VariableId::landmark(id));
      if (o < 0) throw Error(ErrorKind::UnknownLandmark, std::to_string(id));
      clean = model.predict(pose, chi.chi.segment(o, 2));
    }
    VectorXd v = clean + L * standard_normal(model.z_dim(), rng);
    if (id != kDirect) v[1] = wrap_angle(v[1]);
    z[id] = std::move(v);
  }
  return z;
}

std::vector<MeasurementSample> sample_future_measurements(const PropagatedBelief& prop, const MeasModel& model,
                                                          int n_x, int n_z, Rng& rng, bool sample_landmarks) {
  if (n_x < 1 || n_z < 1) throw Error(ErrorKind::InvalidInput, "n_x and n_z must be positive");
  const MatrixXd L = sampling_factor(prop, sample_landmarks);
  std::vector<MeasurementSample> out;
  out.reserve(static_cast<size_t>(n_x * n_z));
  for (int i = 0; i < n_x; ++i) {
    StateSample chi = draw(prop, L, rng);
    const DataAssociation da = predicted_da(chi, model);
    for (int j = 0; j < n_z; ++j) {
      MeasurementSample s;
      s.da = da;
      s.z = sample_measurement(chi, da, model, rng);
      s.state = chi;
      s.dist = {prop.label.k, -1, DistKind::Nominal};
      out.push_back(std::move(s));
    }
  }
  return out;
}

double measurement_likelihood_density(const MeasurementSet& z, const GaussianBelief& prop, const MeasModel& model,
                                      const DataAssociation& da) {
  if (z.size() != da.entries.size()) throw Error(ErrorKind::DaMismatch, "measurement keys differ from association");
  for (const auto& [t, id] : da.entries)
    if (!z.count(id)) throw Error(ErrorKind::DaMismatch, "no measurement for " + std::to_string(id));
  if (z.empty()) return 0.0;

  const VariableId rv = prop.robot_var();
  const int po = prop.offset(rv);
  const int m = model.z_dim();
  const int rows = m * static_cast<int>(z.size());
  MatrixXd J = MatrixXd::Zero(rows, prop.dim());
  VectorXd r(rows);
  MatrixXd R = MatrixXd::Zero(rows, rows);
  const MatrixXd Rv = model.noise();
  const VectorXd pose = prop.mean.segment(po, rv.dim);
  int row = 0;
  for (const auto& [t, id] : da.entries) {
    const VectorXd& zi = z.at(id);
    if (zi.size() != m) throw Error(ErrorKind::DaMismatch, "measurement dimension");
    if (id == kDirect) {
      const MatrixXd& H = std::get<LinearMeas>(model.model).H;
      J.block(row, po, m, rv.dim) = H;
      r.segment(row, m) = zi - H * pose;
    } else {
      const int lo = prop.offset(VariableId::landmark(id));
      if (lo < 0) throw Error(ErrorKind::UnknownLandmark, std::to_string(id));
      const Eigen::Vector2d lm = prop.mean.segment(lo, 2);
      MatrixXd Hp, Hl;
      model.jacobians(pose, lm, Hp, Hl);
      J.block(row, po, m, 3) = Hp;
      J.block(row, lo, m, 2) = Hl;
      r.segment(row, m) = model.residual(zi, model.predict(pose, lm));
    }
    R.block(row, row, m, m) = Rv;
    row += m;
  }
  MatrixXd S = R + J * prop.cov * J.transpose();
  S = 0.5 * (S + S.transpose());
  return log_normal(r, S);
}

MeasurementSample most_likely_measurement(const PropagatedBelief& prop, const MeasModel& model) {
  MeasurementSample s;
  s.state.chi = prop.mean;
  s.state.index = prop.index;
  s.state.source = prop.label;
  s.da = predicted_da(s.state, model);
  const VariableId rv = prop.robot_var();
  const VectorXd pose = prop.mean.segment(prop.offset(rv), rv.dim);
  for (const auto& [t, id] : s.da.entries) {
    if (id == kDirect) s.z[id] = model.predict_direct(pose);
    else s.z[id] = model.predict(pose, prop.mean.segment(prop.offset(VariableId::landmark(id)), 2));
  }
  s.dist = {prop.label.k, -1, DistKind::Nominal};
  return s;
}

}  // namespace ixbsp
