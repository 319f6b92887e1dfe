#include "ixbsp/belief.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

namespace ixbsp {

namespace {

constexpr double kNewLandmarkVariance = 1e4;

bool same_vector(const VectorXd& a, const VectorXd& b) {
  return a.size() == b.size() && (a.size() == 0 || a == b);
}

bool same_z(const MeasurementSet& a, const MeasurementSet& b) {
  if (a.size() != b.size()) return false;
  for (auto ia = a.begin(), ib = b.begin(); ia != a.end(); ++ia, ++ib)
    if (ia->first != ib->first || !same_vector(ia->second, ib->second)) return false;
  return true;
}

void wrap_pose_angles(const std::vector<VariableId>& index, const std::vector<int>& offsets, VectorXd& x) {
  for (size_t i = 0; i < index.size(); ++i)
    if (index[i].kind == VarKind::Pose) x[offsets[i] + 2] = wrap_angle(x[offsets[i] + 2]);
}

std::vector<int> offsets_of(const std::vector<VariableId>& index) {
  std::vector<int> off(index.size());
  int o = 0;
  for (size_t i = 0; i < index.size(); ++i) {
    off[i] = o;
    o += index[i].dim;
  }
  return off;
}

// Robot variable template (kind/dim) of a belief, used to mint new poses.
VariableId robot_at(const GaussianBelief& b, int t) {
  VariableId v = b.robot_var();
  v.key = t;
  return v;
}

void check_measurements(const MeasurementSet& z, const DataAssociation& da, int t, const MeasModel& meas) {
  if (z.size() != da.entries.size()) throw Error(ErrorKind::DaMismatch, "measurement keys differ from data association");
  for (const auto& [time, id] : da.entries) {
    if (time != t) throw Error(ErrorKind::DaMismatch, "association refers to time " + std::to_string(time));
    auto it = z.find(id);
    if (it == z.end()) throw Error(ErrorKind::DaMismatch, "no measurement for landmark " + std::to_string(id));
    if (it->second.size() != meas.z_dim()) throw Error(ErrorKind::DaMismatch, "measurement dimension");
    if ((id == kDirect) != meas.linear()) throw Error(ErrorKind::DaMismatch, "association kind does not match model");
  }
}

// Information matrix of the marginal over `coords`, by Schur complement when the rest is small.
MatrixXd marginal_info(const GaussianBelief& b, const std::vector<int>& coords) {
  if (!b.info.size() || 2 * coords.size() < static_cast<size_t>(b.dim()))
    return spd_inverse(b.cov(coords, coords), ErrorKind::InvalidBelief);
  std::vector<bool> in(b.dim(), false);
  for (int c : coords) in[c] = true;
  std::vector<int> rest;
  for (int i = 0; i < b.dim(); ++i)
    if (!in[i]) rest.push_back(i);
  MatrixXd out = b.info(coords, coords);
  if (rest.empty()) return out;
  Eigen::LLT<MatrixXd> rr(b.info(rest, rest));
  if (rr.info() != Eigen::Success) return spd_inverse(b.cov(coords, coords), ErrorKind::InvalidBelief);
  out -= b.info(coords, rest) * rr.solve(b.info(rest, coords));
  return out;
}

// Starting point for re-solving `reused` under another prior: in information form, take out the
// prior it was conditioned on (`replaced`) and put in `anchor`. Exact for linear models.
std::optional<GaussianBelief> swapped_start(const GaussianBelief& reused, const GaussianBelief& replaced,
                                            const GaussianBelief& anchor) {
  const int now = anchor.robot_var().key;
  const std::vector<int> roff = offsets_of(reused.index);
  std::vector<int> keep, drop;
  std::vector<VariableId> kept;
  for (size_t i = 0; i < reused.index.size(); ++i) {
    const VariableId& v = reused.index[i];
    const bool gone = v.is_robot() && v.key <= now && !anchor.has(v);
    for (int k = 0; k < v.dim; ++k) (gone ? drop : keep).push_back(roff[i] + k);
    if (!gone) kept.push_back(v);
  }
  GaussianBelief tmp;
  const GaussianBelief& R = reused.info.size() ? reused : tmp;
  if (!reused.info.size()) {
    tmp.info = spd_inverse(reused.cov, ErrorKind::InvalidBelief);
    tmp.cov = reused.cov;
    tmp.mean = reused.mean;
  }
  MatrixXd L = R.info(keep, keep);
  if (!drop.empty()) {
    Eigen::LLT<MatrixXd> dd(R.info(drop, drop));
    if (dd.info() != Eigen::Success) return std::nullopt;
    L -= R.info(keep, drop) * dd.solve(R.info(drop, keep));
  }
  const VectorXd m = reused.mean(keep);

  std::vector<int> pk, pn, pb, angles;
  const std::vector<int> koff = offsets_of(kept);
  for (size_t i = 0; i < kept.size(); ++i) {
    const int on = anchor.offset(kept[i]), ob = replaced.offset(kept[i]);
    if (on < 0 || ob < 0) continue;
    if (kept[i].kind == VarKind::Pose) angles.push_back(static_cast<int>(pk.size()) + 2);
    for (int k = 0; k < kept[i].dim; ++k) {
      pk.push_back(koff[i] + k);
      pn.push_back(on + k);
      pb.push_back(ob + k);
    }
  }
  if (pk.empty()) return std::nullopt;
  const MatrixXd LN = marginal_info(anchor, pn);
  const MatrixXd LB = marginal_info(replaced, pb);
  VectorXd dn = anchor.mean(pn) - m(pk), db = replaced.mean(pb) - m(pk);
  for (int a : angles) {
    dn[a] = wrap_angle(dn[a]);
    db[a] = wrap_angle(db[a]);
  }
  L(pk, pk) += LN - LB;
  VectorXd rhs = VectorXd::Zero(m.size());
  rhs(pk) = LN * dn - LB * db;
  Eigen::LLT<MatrixXd> llt(L);
  if (llt.info() != Eigen::Success) return std::nullopt;
  GaussianBelief out;
  out.mean = m + llt.solve(rhs);
  if (!out.mean.allFinite()) return std::nullopt;
  wrap_pose_angles(kept, koff, out.mean);
  out.index = std::move(kept);
  return out;
}

}  // namespace

bool Step::operator==(const Step& o) const {
  if (time != o.time || measured != o.measured || action.has_value() != o.action.has_value()) return false;
  if (action && !(*action == *o.action)) return false;
  if (!(da == o.da) || !same_z(z, o.z) || new_landmarks.size() != o.new_landmarks.size()) return false;
  for (auto ia = new_landmarks.begin(), ib = o.new_landmarks.begin(); ia != new_landmarks.end(); ++ia, ++ib)
    if (ia->first != ib->first || ia->second != ib->second) return false;
  return true;
}

std::vector<ActionId> History::actions() const {
  std::vector<ActionId> out;
  for (const auto& s : steps)
    if (s.action) out.push_back(*s.action);
  return out;
}

std::vector<MeasurementSet> History::measurements() const {
  std::vector<MeasurementSet> out;
  for (const auto& s : steps) out.push_back(s.z);
  return out;
}

std::vector<DataAssociation> History::da() const {
  std::vector<DataAssociation> out;
  for (const auto& s : steps) out.push_back(s.da);
  return out;
}

int History::factor_count() const {
  int n = 0;
  for (const auto& s : steps) n += (s.action ? 1 : 0) + static_cast<int>(s.da.entries.size());
  return n;
}

MatrixXd spd_inverse(const MatrixXd& m, ErrorKind kind) {
  Eigen::LLT<MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) throw Error(kind, "matrix not positive definite");
  MatrixXd inv = llt.solve(MatrixXd::Identity(m.rows(), m.cols()));
  return 0.5 * (inv + inv.transpose());
}

GaussianBelief GaussianBelief::from_covariance(std::vector<VariableId> index, VectorXd mean, MatrixXd cov, Label label) {
  GaussianBelief b;
  b.index = std::move(index);
  b.mean = std::move(mean);
  b.cov = std::move(cov);
  b.label = label;
  validate(b);
  b.info = spd_inverse(b.cov, ErrorKind::InvalidBelief);
  return b;
}

GaussianBelief GaussianBelief::from_information(std::vector<VariableId> index, VectorXd mean, MatrixXd info,
                                                Label label) {
  GaussianBelief b;
  b.index = std::move(index);
  b.mean = std::move(mean);
  b.info = std::move(info);
  b.label = label;
  b.cov = spd_inverse(b.info, ErrorKind::InvalidBelief);
  validate(b);
  return b;
}

int GaussianBelief::offset(const VariableId& v) const {
  int o = 0;
  for (const auto& id : index) {
    if (id == v) return o;
    o += id.dim;
  }
  return -1;
}

VariableId GaussianBelief::robot_var() const {
  const VariableId* best = nullptr;
  for (const auto& id : index)
    if (id.is_robot() && (!best || id.key > best->key)) best = &id;
  if (!best) throw Error(ErrorKind::InvalidBelief, "belief has no robot variable");
  return *best;
}

VectorXd GaussianBelief::robot_mean() const {
  const VariableId v = robot_var();
  return mean.segment(offset(v), v.dim);
}

MatrixXd GaussianBelief::robot_cov() const {
  const VariableId v = robot_var();
  const int o = offset(v);
  return cov.block(o, o, v.dim, v.dim);
}

std::vector<int> GaussianBelief::landmark_ids() const {
  std::vector<int> ids;
  for (const auto& id : index)
    if (id.kind == VarKind::Landmark) ids.push_back(id.key);
  return ids;
}

void validate(const GaussianBelief& b) {
  int d = 0;
  for (const auto& v : b.index) d += v.dim;
  if (d != b.mean.size() || b.cov.rows() != d || b.cov.cols() != d)
    throw Error(ErrorKind::InvalidBelief, "dimension mismatch");
  if (!b.mean.allFinite() || !b.cov.allFinite()) throw Error(ErrorKind::InvalidBelief, "non-finite entries");
  const double scale = std::max(1.0, b.cov.cwiseAbs().maxCoeff());
  if ((b.cov - b.cov.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale)
    throw Error(ErrorKind::InvalidBelief, "covariance not symmetric");
  Eigen::LLT<MatrixXd> llt(b.cov);
  if (llt.info() != Eigen::Success) throw Error(ErrorKind::InvalidBelief, "covariance not positive definite");
}

GaussianBelief rebase(const BeliefPtr& b) {
  GaussianBelief out = *b;
  out.history = History{b, {}};
  return out;
}

PropagatedBelief propagate(const GaussianBelief& b, const ActionId& action, const MotionModel& motion) {
  if (b.cov.rows() != b.dim() || b.dim() == 0) throw Error(ErrorKind::InvalidBelief, "empty belief");
  Eigen::LLT<MatrixXd> check(b.cov);
  if (check.info() != Eigen::Success) throw Error(ErrorKind::InvalidBelief, "covariance not positive definite");

  const VariableId last = b.robot_var();
  const VariableId next = robot_at(b, last.key + 1);
  const int p = b.offset(last);
  const int d = b.dim();
  const int n = next.dim;
  const VectorXd xp = b.mean.segment(p, last.dim);
  const MatrixXd F = motion.jacobian(xp, action);
  const MatrixXd Q = motion.noise();

  PropagatedBelief out;
  out.index = b.index;
  out.index.push_back(next);
  out.mean.resize(d + n);
  out.mean.head(d) = b.mean;
  out.mean.tail(n) = motion.apply(xp, action);

  out.cov.resize(d + n, d + n);
  out.cov.topLeftCorner(d, d) = b.cov;
  const MatrixXd cross = b.cov.middleCols(p, last.dim) * F.transpose();
  out.cov.topRightCorner(d, n) = cross;
  out.cov.bottomLeftCorner(n, d) = cross.transpose();
  out.cov.bottomRightCorner(n, n) = F * b.cov.block(p, p, last.dim, last.dim) * F.transpose() + Q;

  Eigen::LLT<MatrixXd> qllt(Q);
  if (qllt.info() == Eigen::Success) {
    const MatrixXd Qi = qllt.solve(MatrixXd::Identity(n, n));
    const MatrixXd base = b.info.size() ? b.info : spd_inverse(b.cov, ErrorKind::InvalidBelief);
    out.info = MatrixXd::Zero(d + n, d + n);
    out.info.topLeftCorner(d, d) = base;
    out.info.block(p, p, last.dim, last.dim) += F.transpose() * Qi * F;
    const MatrixXd off = -Qi * F;
    out.info.block(d, p, n, last.dim) = off;
    out.info.block(p, d, last.dim, n) = off.transpose();
    out.info.bottomRightCorner(n, n) = Qi;
  }

  out.label = {b.label.t + 1, b.label.k};
  out.history = b.history;
  if (!out.history.anchor) out.history = History{std::make_shared<const GaussianBelief>(b), {}};
  Step s;
  s.time = next.key;
  s.action = action;
  out.history.steps.push_back(std::move(s));
  out.pending = action;
  return out;
}

namespace {

Step make_measured_step(Step s, const GaussianBelief& b, const MeasurementSet& z, const DataAssociation& da,
                        const Models& models, const std::set<int>& new_landmarks) {
  const VariableId rv = b.robot_var();
  check_measurements(z, da, rv.key, models.meas);
  const VectorXd pose = b.mean.segment(b.offset(rv), rv.dim);
  for (const auto& [t, id] : da.entries) {
    if (id == kDirect || b.has(VariableId::landmark(id))) continue;
    if (!new_landmarks.count(id))
      throw Error(ErrorKind::UnknownLandmark, "landmark " + std::to_string(id) + " is not in the state");
    s.new_landmarks[id] = models.meas.inverse(pose, z.at(id));
  }
  s.measured = true;
  s.z = z;
  s.da = da;
  return s;
}

}  // namespace

GaussianBelief update_with_measurements(const PropagatedBelief& prop, const MeasurementSet& z,
                                        const DataAssociation& da, const Models& models,
                                        const std::set<int>& new_landmarks) {
  if (prop.history.steps.empty() || !prop.history.anchor)
    throw Error(ErrorKind::InvalidBelief, "propagated belief carries no pending step");
  Step s = make_measured_step(prop.history.steps.back(), prop, z, da, models, new_landmarks);
  GaussianBelief base = static_cast<const GaussianBelief&>(prop);
  base.history.steps.back() = s;
  if (z.empty()) return base;
  GaussianBelief out = solve_history(base.history, models, &prop);
  out.label = prop.label;
  return out;
}

GaussianBelief sense(const GaussianBelief& b, const MeasurementSet& z, const DataAssociation& da,
                     const Models& models, const std::set<int>& new_landmarks) {
  Step s;
  s.time = b.robot_var().key;
  s = make_measured_step(std::move(s), b, z, da, models, new_landmarks);
  if (z.empty()) return b;
  History h = b.history;
  if (!h.anchor) h = History{std::make_shared<const GaussianBelief>(b), {}};
  h.steps.push_back(std::move(s));
  GaussianBelief out = solve_history(h, models, &b);
  out.label = b.label;
  return out;
}

DaDiff da_diff(const DataAssociation& source, const DataAssociation& target) {
  DaDiff d;
  std::set_intersection(source.entries.begin(), source.entries.end(), target.entries.begin(), target.entries.end(),
                        std::inserter(d.keep.entries, d.keep.entries.end()));
  std::set_difference(source.entries.begin(), source.entries.end(), target.entries.begin(), target.entries.end(),
                      std::inserter(d.remove.entries, d.remove.entries.end()));
  std::set_difference(target.entries.begin(), target.entries.end(), source.entries.begin(), source.entries.end(),
                      std::inserter(d.add.entries, d.add.entries.end()));
  return d;
}

std::vector<Step> collect_steps(const History& h, int min_time) {
  std::vector<Step> out;
  if (h.anchor) out = collect_steps(h.anchor->history, min_time);
  for (const auto& s : h.steps)
    if (s.time >= min_time) out.push_back(s);
  return out;
}

namespace {

bool descends_from(BeliefPtr node, const BeliefPtr& ancestor) {
  for (int guard = 0; node && guard < 100000; ++guard) {
    if (node == ancestor) return true;
    node = node->history.anchor;
  }
  return false;
}

FactorStats count_factors(const GaussianBelief& reused, const History& target) {
  FactorStats st;
  const int t0 = target.anchor->robot_var().key;
  const std::vector<Step> old = collect_steps(reused.history, t0 + 1);
  std::map<int, const Step*> by_time;
  for (const auto& s : old) {
    by_time[s.time] = &s;
    st.existing += (s.action ? 1 : 0) + static_cast<int>(s.da.entries.size());
  }
  std::set<int> matched;
  for (const auto& s : target.steps) {
    auto it = by_time.find(s.time);
    if (it == by_time.end()) {
      st.added += (s.action ? 1 : 0) + static_cast<int>(s.da.entries.size());
      continue;
    }
    matched.insert(s.time);
    const Step& o = *it->second;
    if (s.action && o.action) (*s.action == *o.action ? st.reused : st.revalued)++;
    else if (s.action) st.added++;
    else if (o.action) st.removed++;
    const DaDiff d = da_diff(o.da, s.da);
    for (const auto& [t, id] : d.keep.entries) (same_vector(o.z.at(id), s.z.at(id)) ? st.reused : st.revalued)++;
    st.removed += static_cast<int>(d.remove.entries.size());
    st.added += static_cast<int>(d.add.entries.size());
  }
  for (const auto& s : old)
    if (!matched.count(s.time)) st.removed += (s.action ? 1 : 0) + static_cast<int>(s.da.entries.size());
  return st;
}

}  // namespace

GaussianBelief incremental_update(const GaussianBelief& reused, const History& target, const Models& models,
                                  FactorStats* stats, const PriorSwap& swap) {
  if (!target.anchor || !reused.history.anchor)
    throw Error(ErrorKind::IncompatibleHistories, "history without anchor");
  if (target.anchor == reused.history.anchor && target.steps == reused.history.steps) {
    if (stats) {
      *stats = {};
      stats->existing = stats->reused = reused.history.factor_count();
    }
    return reused;
  }
  if (!descends_from(target.anchor, reused.history.anchor))
    throw Error(ErrorKind::IncompatibleHistories, "target history does not extend the reused one");
  if (stats) *stats = count_factors(reused, target);
  std::optional<GaussianBelief> start;
  if (swap.from && swap.to && swap.from != swap.to) start = swapped_start(reused, *swap.from, *swap.to);
  GaussianBelief out = solve_history(target, models, start ? &*start : &reused);
  out.label = {target.anchor->label.t + static_cast<int>(target.steps.size()), target.anchor->label.t};
  if (!target.steps.empty()) out.label.t = target.steps.back().time;
  return out;
}

GaussianBelief marginal(const GaussianBelief& b, const std::vector<VariableId>& vars) {
  if (vars == b.index) return b;
  std::vector<int> src;
  std::vector<VariableId> index;
  for (const auto& v : vars) {
    const int o = b.offset(v);
    if (o < 0) throw Error(ErrorKind::UnknownVariable, v.str());
    const VariableId& real = b.index[std::find(b.index.begin(), b.index.end(), v) - b.index.begin()];
    index.push_back(real);
    for (int k = 0; k < real.dim; ++k) src.push_back(o + k);
  }
  const int n = static_cast<int>(src.size());
  GaussianBelief out;
  out.index = std::move(index);
  out.mean.resize(n);
  out.cov.resize(n, n);
  for (int i = 0; i < n; ++i) {
    out.mean[i] = b.mean[src[i]];
    for (int j = 0; j < n; ++j) out.cov(i, j) = b.cov(src[i], src[j]);
  }
  out.info = spd_inverse(out.cov, ErrorKind::InvalidBelief);
  out.label = b.label;
  out.history = b.history;
  return out;
}

GaussianBelief solve_history(const History& h, const Models& models, const GaussianBelief* warm,
                             const SolveOptions& opt, int* iterations) {
  if (!h.anchor) throw Error(ErrorKind::IncompatibleHistories, "history without anchor");
  const GaussianBelief& A = *h.anchor;
  const bool lin_meas = models.meas.linear();

  std::vector<VariableId> index = A.index;
  std::map<VariableId, int> slot;
  for (size_t i = 0; i < index.size(); ++i) slot[index[i]] = static_cast<int>(i);
  VariableId robot = A.robot_var();
  for (const auto& s : h.steps) {
    if (s.action) {
      robot.key = s.time;
      if (slot.count(robot)) throw Error(ErrorKind::InvalidInput, "duplicate robot time " + std::to_string(s.time));
      slot[robot] = static_cast<int>(index.size());
      index.push_back(robot);
    }
    for (const auto& [id, m0] : s.new_landmarks) {
      const VariableId l = VariableId::landmark(id);
      if (slot.count(l)) continue;
      slot[l] = static_cast<int>(index.size());
      index.push_back(l);
    }
  }
  const std::vector<int> off = offsets_of(index);
  const int d = off.back() + index.back().dim;
  auto at = [&](const VariableId& v) {
    auto it = slot.find(v);
    if (it == slot.end()) throw Error(ErrorKind::UnknownVariable, v.str());
    return off[it->second];
  };

  // Initial guess.
  VectorXd x(d);
  const int dA = A.dim();
  x.head(dA) = A.mean;
  {
    VariableId r = A.robot_var();
    for (const auto& s : h.steps) {
      if (s.action) {
        VariableId prev = r;
        r.key = s.time;
        prev.key = s.time - 1;
        x.segment(at(r), r.dim) = models.motion.apply(x.segment(at(prev), prev.dim), *s.action);
      }
      for (const auto& [id, m0] : s.new_landmarks) {
        const int o = at(VariableId::landmark(id));
        if (o >= dA) x.segment(o, 2) = m0;
      }
    }
  }
  if (warm) {
    int wo = 0;
    for (const auto& v : warm->index) {
      auto it = slot.find(v);
      if (it != slot.end() && index[it->second].dim == v.dim) x.segment(off[it->second], v.dim) = warm->mean.segment(wo, v.dim);
      wo += v.dim;
    }
  }
  wrap_pose_angles(index, off, x);

  const MatrixXd LA = A.info.size() ? A.info : spd_inverse(A.cov, ErrorKind::InvalidBelief);
  const MatrixXd Qi = spd_inverse(models.motion.noise(), ErrorKind::DegenerateUpdate);
  const MatrixXd Ri = spd_inverse(models.meas.noise(), ErrorKind::DegenerateUpdate);
  const double lm_w = 1.0 / kNewLandmarkVariance;

  MatrixXd H(d, d);
  VectorXd g(d);
  int it = 0;
  for (; it < opt.max_iterations; ++it) {
    H.setZero();
    g.setZero();
    VectorXd rA = x.head(dA) - A.mean;
    wrap_pose_angles(A.index, offsets_of(A.index), rA);
    H.topLeftCorner(dA, dA) += LA;
    g.head(dA) += LA * rA;

    VariableId r = A.robot_var();
    for (const auto& s : h.steps) {
      if (s.action) {
        VariableId prev = r;
        r.key = s.time;
        prev.key = s.time - 1;
        const int pc = at(r), pp = at(prev), n = r.dim;
        const VectorXd xp = x.segment(pp, n);
        VectorXd res = x.segment(pc, n) - models.motion.apply(xp, *s.action);
        if (r.kind == VarKind::Pose) res[2] = wrap_angle(res[2]);
        const MatrixXd F = models.motion.jacobian(xp, *s.action);
        const MatrixXd QF = Qi * F;
        H.block(pc, pc, n, n) += Qi;
        H.block(pp, pp, n, n) += F.transpose() * QF;
        H.block(pc, pp, n, n) -= QF;
        H.block(pp, pc, n, n) -= QF.transpose();
        g.segment(pc, n) += Qi * res;
        g.segment(pp, n) -= QF.transpose() * res;
      }
      for (const auto& [id, m0] : s.new_landmarks) {
        const int o = at(VariableId::landmark(id));
        if (o < dA) continue;
        H.block(o, o, 2, 2).diagonal().array() += lm_w;
        g.segment(o, 2) += lm_w * (x.segment(o, 2) - m0);
      }
      if (!s.measured) continue;
      VariableId rt = r;
      rt.key = s.time;
      const int pr = at(rt);
      for (const auto& [t, id] : s.da.entries) {
        const VectorXd& z = s.z.at(id);
        if (lin_meas) {
          const MatrixXd& Hm = std::get<LinearMeas>(models.meas.model).H;
          const VectorXd res = z - Hm * x.segment(pr, rt.dim);
          H.block(pr, pr, rt.dim, rt.dim) += Hm.transpose() * Ri * Hm;
          g.segment(pr, rt.dim) -= Hm.transpose() * (Ri * res);
          continue;
        }
        const int pl = at(VariableId::landmark(id));
        const VectorXd pose = x.segment(pr, 3);
        const Eigen::Vector2d lm = x.segment(pl, 2);
        MatrixXd Hp, Hl;
        models.meas.jacobians(pose, lm, Hp, Hl);
        const VectorXd res = models.meas.residual(z, models.meas.predict(pose, lm));
        const VectorXd wr = Ri * res;
        H.block(pr, pr, 3, 3) += Hp.transpose() * Ri * Hp;
        H.block(pl, pl, 2, 2) += Hl.transpose() * Ri * Hl;
        const MatrixXd cross = Hp.transpose() * Ri * Hl;
        H.block(pr, pl, 3, 2) += cross;
        H.block(pl, pr, 2, 3) += cross.transpose();
        g.segment(pr, 3) -= Hp.transpose() * wr;
        g.segment(pl, 2) -= Hl.transpose() * wr;
      }
    }

    Eigen::LLT<MatrixXd> llt(H);
    if (llt.info() != Eigen::Success) throw Error(ErrorKind::DegenerateUpdate, "normal equations are singular");
    const VectorXd delta = -llt.solve(g);
    if (!delta.allFinite()) throw Error(ErrorKind::DegenerateUpdate, "non-finite step");
    x += delta;
    wrap_pose_angles(index, off, x);
    if (delta.cwiseAbs().maxCoeff() < opt.tol) {
      ++it;
      break;
    }
  }
  if (iterations) *iterations = it;

  GaussianBelief out;
  out.index = std::move(index);
  out.mean = std::move(x);
  out.info = 0.5 * (H + H.transpose());
  out.cov = spd_inverse(out.info, ErrorKind::DegenerateUpdate);
  out.label = {h.steps.empty() ? A.label.t : h.steps.back().time, A.label.t};
  out.history = h;
  return out;
}

}  // namespace ixbsp
