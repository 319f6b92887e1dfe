#include "ixbsp/bounds.hpp"

#include "ixbsp/distances.hpp"
#include "ixbsp/errors.hpp"
#include "ixbsp/incremental.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace ixbsp {

namespace {

double std_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double holder_factor(const HolderSpec& spec) { return std::pow(4.0 * std::numbers::ln2, 0.5 * spec.alpha) * spec.lambda; }

MatrixXd spd_inverse(const MatrixXd& S) {
  Eigen::LLT<MatrixXd> llt(S);
  if (llt.info() != Eigen::Success) throw Error(ErrorKind::NumericalError, "covariance is not positive definite");
  return llt.solve(MatrixXd::Identity(S.rows(), S.cols()));
}

// Log density of a Gaussian up to the shared normalising constant.
struct LogDensity {
  VectorXd mean;
  Eigen::LLT<MatrixXd> llt;
  double half_logdet = 0.0;

  LogDensity(const VectorXd& m, const MatrixXd& S) : mean(m), llt(S) {
    if (llt.info() != Eigen::Success) throw Error(ErrorKind::NumericalError, "predictive covariance is singular");
    half_logdet = llt.matrixLLT().diagonal().array().log().sum();
  }
  double operator()(const VectorXd& z) const {
    const VectorXd r = llt.matrixL().solve(z - mean);
    return -0.5 * r.squaredNorm() - half_logdet;
  }
};

MatrixXd random_spd(int d, Rng& rng) {
  std::normal_distribution<double> n01;
  MatrixXd A(d, d);
  for (int i = 0; i < A.size(); ++i) A.data()[i] = n01(rng);
  return 0.5 * A * A.transpose() + 0.3 * MatrixXd::Identity(d, d);
}

}  // namespace

void HolderSpec::check() const {
  if (!(lambda >= 0.0)) throw Error(ErrorKind::InvalidInput, "Hölder constant must be non-negative");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw Error(ErrorKind::InvalidInput, "Hölder exponent must lie in [0, 1]");
}

double reward_bound(double dist, const HolderSpec& spec) {
  spec.check();
  if (dist < 0.0) throw Error(ErrorKind::InvalidInput, "negative distance");
  return holder_factor(spec) * std::pow(dist, spec.alpha);
}

double reward_bound(const GaussianBelief& b, const GaussianBelief& b2, const HolderSpec& spec) {
  return reward_bound(d_sqrt_j(b, b2), spec);
}

BoundReport objective_bound_sampled(const PlanningTree& now, const PlanningTree& prev, const std::vector<int>& seq,
                                    const HolderSpec& spec, const PathWeights& weights) {
  spec.check();
  if (now.L != prev.L || now.n_u() != prev.n_u()) throw Error(ErrorKind::IncompatibleTrees, "tree shapes differ");
  const auto levels_now = now.nodes_along(seq);
  const auto levels_prev = prev.nodes_along(seq);
  if (!weights.empty() && static_cast<int>(weights.size()) != now.L)
    throw Error(ErrorKind::InvalidInput, "one weight vector per level expected");

  BoundReport rep;
  rep.method = BoundMethod::Sampled;
  double weighted = 0.0;
  for (int i = 0; i < now.L; ++i) {
    const auto& a = levels_now[i];
    const auto& b = levels_prev[i];
    if (a.size() != b.size()) throw Error(ErrorKind::IncompatibleTrees, "sample counts differ at depth " + std::to_string(i + 1));
    if (!weights.empty() && weights[i].size() != a.size())
      throw Error(ErrorKind::InvalidInput, "weight count differs from sample count");
    for (std::size_t j = 0; j < a.size(); ++j) {
      const TreeNode& n = now.nodes[a[j]];
      const TreeNode& p = prev.nodes[b[j]];
      if (n.path != p.path) throw Error(ErrorKind::IncompatibleTrees, "sample paths are not paired");
      const double w = weights.empty() ? 1.0 / double(a.size()) : weights[i][j];
      weighted += w * p.reward;
      rep.psi += w * reward_bound(d_sqrt_j(*n.belief, *p.belief), spec);
    }
  }
  rep.phi = weighted - tree_objective(prev, seq);
  rep.lower = rep.phi - rep.psi;
  rep.upper = rep.phi + rep.psi;
  return rep;
}

double BoundedReward::operator()(const VectorXd& mean, const MatrixXd& cov) const {
  const double spread = softness * softness + w.dot(cov * w);
  return scale * std_normal_cdf((w.dot(mean) - offset) / std::sqrt(spread));
}

int LinearScenario::sequence_count() const {
  int n = 1;
  for (int i = 0; i < steps; ++i) n *= n_u();
  return n;
}

std::vector<int> LinearScenario::sequence(int index) const {
  if (index < 0 || index >= sequence_count()) throw Error(ErrorKind::UnknownSequence, std::to_string(index));
  std::vector<int> seq(steps);
  for (int i = steps - 1; i >= 0; --i) {
    seq[i] = index % n_u();
    index /= n_u();
  }
  return seq;
}

void LinearScenario::check() const {
  if (!models.motion.linear() || !models.meas.linear())
    throw Error(ErrorKind::UnsupportedModel, "bound scenario needs linear models");
  if (steps < 1 || actions.empty()) throw Error(ErrorKind::InvalidInput, "empty bound scenario");
  if (reward.w.size() != models.motion.state_dim()) throw Error(ErrorKind::InvalidInput, "reward weight dimension");
  if (!(reward.softness > 0.0)) throw Error(ErrorKind::InvalidInput, "reward softness must be positive");
}

LinearScenario LinearScenario::planar_default() {
  LinearScenario s;
  LinearMotion m;
  m.F = MatrixXd::Identity(2, 2);
  m.J = MatrixXd::Identity(2, 2);
  m.noise = 0.25 * MatrixXd::Identity(2, 2);
  LinearMeas h;
  h.H = MatrixXd::Identity(2, 2);
  h.noise = 0.5 * MatrixXd::Identity(2, 2);
  s.models = {MotionModel{m}, MeasModel{h}};
  const double u[3][2] = {{1.0, 0.0}, {0.0, 1.0}, {-1.0, 0.5}};
  for (int i = 0; i < 3; ++i) {
    ActionId a;
    a.primitive = Primitive::Control;
    a.u = Eigen::Vector2d(u[i][0], u[i][1]);
    a.index = i;
    s.actions.push_back(a);
  }
  s.steps = 2;
  s.reward.w = Eigen::Vector2d(1.0, 1.0);
  s.reward.offset = 1.0;
  s.reward.softness = 12.0;  // wide enough that forced shifts stay off the plateau
  s.reward.scale = 1.0;
  return s;
}

LinearRollout linear_rollout(const LinearScenario& s, const VectorXd& mean, const MatrixXd& cov,
                             const std::vector<int>& seq) {
  s.check();
  if (static_cast<int>(seq.size()) != s.steps) throw Error(ErrorKind::UnknownSequence, "sequence length differs from steps");
  const auto& mot = std::get<LinearMotion>(s.models.motion.model);
  const auto& meas = std::get<LinearMeas>(s.models.meas.model);
  const int d = static_cast<int>(mean.size());
  const int m = static_cast<int>(meas.H.rows());
  const int n = s.steps;
  if (mot.F.rows() != d) throw Error(ErrorKind::IncompatibleStates, "belief dimension differs from model");

  // Noise sources e = [x0 - mean, w_1..w_n, v_1..v_n].
  const int ne = d + n * d + n * m;
  MatrixXd P = MatrixXd::Zero(ne, ne);
  P.topLeftCorner(d, d) = cov;
  for (int i = 0; i < n; ++i) {
    P.block(d + i * d, d + i * d, d, d) = mot.noise;
    P.block(d + n * d + i * m, d + n * d + i * m, m, m) = meas.noise;
  }
  MatrixXd G = MatrixXd::Zero(d, ne);
  G.leftCols(d).setIdentity();
  VectorXd xm = mean;
  MatrixXd Z(n * m, ne);
  VectorXd zm(n * m);

  LinearRollout r;
  VectorXd a = mean;
  MatrixXd B = MatrixXd::Zero(d, n * m);
  MatrixXd S = cov;
  const MatrixXd I = MatrixXd::Identity(d, d);
  for (int i = 0; i < n; ++i) {
    const ActionId& act = s.actions.at(seq[i]);
    const VectorXd drive = mot.J * act.u;
    xm = mot.F * xm + drive;
    G = mot.F * G;
    G.block(0, d + i * d, d, d) += I;
    Z.middleRows(i * m, m) = meas.H * G;
    Z.block(i * m, d + n * d + i * m, m, m) += MatrixXd::Identity(m, m);
    zm.segment(i * m, m) = meas.H * xm;

    const MatrixXd Sp = mot.F * S * mot.F.transpose() + mot.noise;
    const MatrixXd Sz = meas.H * Sp * meas.H.transpose() + meas.noise;
    const MatrixXd K = Sp * meas.H.transpose() * spd_inverse(Sz);
    const MatrixXd IKH = I - K * meas.H;
    S = IKH * Sp * IKH.transpose() + K * meas.noise * K.transpose();
    S = 0.5 * (S + S.transpose());
    a = IKH * (mot.F * a + drive);
    B = IKH * mot.F * B;
    B.middleCols(i * m, m) += K;
    r.a.push_back(a);
    r.B.push_back(B);
    r.cov.push_back(S);
  }
  r.z_mean = zm;
  r.z_cov = Z * P * Z.transpose();
  return r;
}

double linear_objective(const LinearScenario& s, const VectorXd& mean, const MatrixXd& cov,
                        const std::vector<int>& seq) {
  const LinearRollout r = linear_rollout(s, mean, cov, seq);
  const BoundedReward& f = s.reward;
  double J = 0.0;
  for (int i = 0; i < s.steps; ++i) {
    const VectorXd g = r.B[i].transpose() * f.w;
    const double mu = f.w.dot(r.a[i] + r.B[i] * r.z_mean);
    const double spread = f.softness * f.softness + f.w.dot(r.cov[i] * f.w) + g.dot(r.z_cov * g);
    J += f.scale * std_normal_cdf((mu - f.offset) / std::sqrt(spread));
  }
  return J;
}

std::vector<double> expected_sq_distance(const BoundProblem& p) {
  const LinearRollout rn = linear_rollout(p.scenario, p.mean_now, p.cov_now, p.seq);
  const bool same = p.mean_now == p.mean_prev && p.cov_now == p.cov_prev;
  std::vector<double> out(p.scenario.steps, 0.0);
  if (same) return out;
  const LinearRollout rp = linear_rollout(p.scenario, p.mean_prev, p.cov_prev, p.seq);
  const int d = static_cast<int>(p.mean_now.size());
  for (int i = 0; i < p.scenario.steps; ++i) {
    const MatrixXd Ln = spd_inverse(rn.cov[i]);
    const MatrixXd Lp = spd_inverse(rp.cov[i]);
    const MatrixXd M = Ln + Lp;
    const VectorXd da = rn.a[i] - rp.a[i];
    const MatrixXd dB = rn.B[i] - rp.B[i];
    const MatrixXd C = 0.25 * dB.transpose() * M * dB;
    const VectorXd c = 0.5 * dB.transpose() * M * da;
    const double y = 0.25 * (da.dot(M * da) + (Lp * rn.cov[i]).trace() + (Ln * rp.cov[i]).trace() - 2.0 * d);
    out[i] = std::max(0.0, gaussian_quadratic_moments(C, c, y, rn.z_mean, rn.z_cov).mean);
  }
  return out;
}

BoundReport objective_bound_analytic(const BoundProblem& p, const HolderSpec& spec, double eps_wf, int phi_samples,
                                     std::uint64_t seed) {
  spec.check();
  if (eps_wf < 0.0) throw Error(ErrorKind::InvalidInput, "negative eps_wf");
  if (phi_samples < 1) throw Error(ErrorKind::InvalidInput, "phi needs at least one sample");
  const LinearScenario& s = p.scenario;
  const LinearRollout rp = linear_rollout(s, p.mean_prev, p.cov_prev, p.seq);
  const LinearRollout rn = linear_rollout(s, p.mean_now, p.cov_now, p.seq);

  BoundReport rep;
  rep.method = BoundMethod::Analytic;

  // Self-normalised importance sampling of E_now[r_prev] against draws from the previous predictive.
  const LogDensity log_prev(rp.z_mean, rp.z_cov);
  const LogDensity log_now(rn.z_mean, rn.z_cov);
  Rng rng(seed);
  std::normal_distribution<double> n01;
  const MatrixXd Lz = log_prev.llt.matrixL();
  const int nz = static_cast<int>(rp.z_mean.size());
  std::vector<VectorXd> zs(phi_samples);
  std::vector<double> lw(phi_samples);
  for (int g = 0; g < phi_samples; ++g) {
    VectorXd e(nz);
    for (int k = 0; k < nz; ++k) e[k] = n01(rng);
    zs[g] = rp.z_mean + Lz * e;
    lw[g] = log_now(zs[g]) - log_prev(zs[g]);
  }
  const double shift = *std::max_element(lw.begin(), lw.end());
  for (int i = 0; i < s.steps; ++i) {
    double sw = 0.0, swr = 0.0, sr = 0.0;
    for (int g = 0; g < phi_samples; ++g) {
      const double w = std::exp(lw[g] - shift);
      const double r = s.reward(rp.a[i] + rp.B[i] * zs[g], rp.cov[i]);
      sw += w;
      swr += w * r;
      sr += r;
    }
    if (!(sw > 0.0)) throw Error(ErrorKind::NumericalError, "importance weights vanished");
    rep.phi += swr / sw - sr / double(phi_samples);
  }

  const double d0 = d_sqrt_j(p.mean_now, p.cov_now, p.mean_prev, p.cov_prev);
  const std::vector<double> ed2 = expected_sq_distance(p);
  double prev_sq = d0 * d0;
  double acc = s.steps * std::pow(eps_wf, spec.alpha);
  for (int i = 0; i < s.steps; ++i) {
    rep.expected_delta.push_back(ed2[i] - prev_sq);
    prev_sq = ed2[i];
    // Accumulated increments can be negative when updates pull the beliefs together.
    acc += std::pow(std::max(0.0, ed2[i] - d0 * d0), 0.5 * spec.alpha);
  }
  rep.psi = holder_factor(spec) * acc;
  rep.lower = rep.phi - rep.psi;
  rep.upper = rep.phi + rep.psi;
  return rep;
}

bool verify_holder(const BoundedReward& r, const HolderSpec& spec, const VectorXd& center, int pairs,
                   std::uint64_t seed) {
  spec.check();
  Rng rng(seed);
  std::normal_distribution<double> n01;
  std::uniform_real_distribution<double> scale(-4.0, 1.0);
  const int d = static_cast<int>(center.size());
  for (int k = 0; k < pairs; ++k) {
    VectorXd m1(d), dm(d);
    for (int i = 0; i < d; ++i) m1[i] = center[i] + 3.0 * n01(rng);
    const MatrixXd S1 = random_spd(d, rng);
    // Perturbation sizes spread over several decades.
    const double h = std::pow(10.0, scale(rng));
    for (int i = 0; i < d; ++i) dm[i] = h * n01(rng);
    MatrixXd S2 = S1 + h * random_spd(d, rng);
    const VectorXd m2 = m1 + dm;
    const double gap = std::abs(r(m1, S1) - r(m2, S2));
    if (gap > reward_bound(d_sqrt_j(m1, S1, m2, S2), spec) + 1e-12) return false;
  }
  return true;
}

ForcedPair forced_pair(int dim, double dist, std::uint64_t seed) {
  if (dim < 1 || dist < 0.0) throw Error(ErrorKind::InvalidInput, "bad forced pair request");
  Rng rng(seed);
  std::normal_distribution<double> n01;
  ForcedPair fp;
  fp.mean_prev.resize(dim);
  for (int i = 0; i < dim; ++i) fp.mean_prev[i] = 2.0 * n01(rng);
  fp.cov = random_spd(dim, rng);
  VectorXd v(dim);
  for (int i = 0; i < dim; ++i) v[i] = n01(rng);
  v.normalize();
  // Equal covariances: D^2 = t^2 v' S^-1 v / 2.
  const double t = dist * std::sqrt(2.0 / v.dot(spd_inverse(fp.cov) * v));
  fp.mean_now = fp.mean_prev + t * v;
  return fp;
}

BoundCheck empirical_bound_check(const LinearScenario& s, const HolderSpec& spec, double eps_wf, int trials,
                                 std::uint64_t seed, bool parallel) {
  s.check();
  if (trials < 1) throw Error(ErrorKind::InvalidInput, "need at least one trial");
  const int dim = s.models.motion.state_dim();
  const int n_seq = s.sequence_count();
  BoundCheck out;
  out.eps_wf = eps_wf;
  out.holder_verified = verify_holder(s.reward, spec, VectorXd::Zero(dim), 500, splitmix64(seed ^ 0x5eedULL));
  out.samples.resize(static_cast<std::size_t>(trials) * n_seq);

  // Trials share seeds across eps_wf so a sweep compares the same base beliefs.
  detail::parallel_for(trials, parallel, [&](int t) {
    const ForcedPair fp = forced_pair(dim, eps_wf, splitmix64(seed + static_cast<std::uint64_t>(t)));
    for (int q = 0; q < n_seq; ++q) {
      BoundProblem p{s, fp.mean_now, fp.mean_prev, fp.cov, fp.cov, s.sequence(q)};
      BoundSample& smp = out.samples[static_cast<std::size_t>(t) * n_seq + q];
      smp.trial = t;
      smp.seq = q;
      smp.diff = linear_objective(s, p.mean_now, p.cov_now, p.seq) - linear_objective(s, p.mean_prev, p.cov_prev, p.seq);
      smp.report = objective_bound_analytic(p, spec, eps_wf, 4000, stream_seed(seed, {t, q}));
      smp.report.advisory = !out.holder_verified;
      const double tol = 1e-9;
      smp.within = smp.diff >= smp.report.lower - tol && smp.diff <= smp.report.upper + tol;
    }
  });

  double inside = 0.0, mean = 0.0;
  for (const auto& smp : out.samples) {
    inside += smp.within ? 1.0 : 0.0;
    mean += smp.diff;
  }
  const double n = double(out.samples.size());
  mean /= n;
  for (const auto& smp : out.samples) out.variance += (smp.diff - mean) * (smp.diff - mean);
  out.variance /= std::max(1.0, n - 1.0);
  out.fraction_within = inside / n;
  return out;
}

}  // namespace ixbsp
