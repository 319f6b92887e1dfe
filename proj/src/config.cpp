#include "ixbsp/config.hpp"

#include <json.hpp>

#include <fstream>
#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

namespace ixbsp {

using nlohmann::json;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

struct Where {
  int line = 1;
  int col = 1;
};

Where locate(const std::string& text, std::size_t byte) {
  Where w;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++w.line;
      w.col = 1;
    } else {
      ++w.col;
    }
  }
  return w;
}

[[noreturn]] void fail_at(const std::string& text, std::size_t byte, const std::string& what) {
  const Where w = locate(text, byte);
  throw Error(ErrorKind::ConfigError,
              "line " + std::to_string(w.line) + ", column " + std::to_string(w.col) + ": " + what);
}

// Semantic errors point at the first occurrence of the offending key.
[[noreturn]] void fail_key(const std::string& text, const std::string& key, const std::string& what) {
  const std::size_t pos = text.find("\"" + key + "\"");
  fail_at(text, pos == std::string::npos ? 0 : pos, key + ": " + what);
}

class Reader {
 public:
  Reader(const std::string& text, const json& obj, std::string scope) : text_(text), obj_(obj), scope_(std::move(scope)) {
    if (!obj_.is_object()) fail_key(text_, scope_, "expected an object");
    for (auto it = obj_.begin(); it != obj_.end(); ++it) unseen_.insert(it.key());
  }

  template <class T>
  void get(const char* key, T& out) {
    auto it = obj_.find(key);
    if (it == obj_.end()) return;
    unseen_.erase(key);
    try {
      out = it->template get<T>();
    } catch (const json::exception&) {
      fail_key(text_, key, "wrong type");
    }
  }

  template <class E>
  void get_enum(const char* key, E& out, const std::vector<std::pair<const char*, E>>& names) {
    std::string s;
    if (!obj_.contains(key)) return;
    get(key, s);
    for (const auto& [n, v] : names)
      if (s == n) {
        out = v;
        return;
      }
    fail_key(text_, key, "unknown value '" + s + "'");
  }

  bool has(const char* key) const { return obj_.contains(key); }

  Reader sub(const char* key) {
    unseen_.erase(key);
    return Reader(text_, obj_.at(key), key);
  }

  void finish() const {
    if (!unseen_.empty()) fail_key(text_, *unseen_.begin(), "unknown key");
  }

 private:
  const std::string& text_;
  const json& obj_;
  std::string scope_;
  std::set<std::string> unseen_;
};

const std::vector<std::pair<const char*, DistanceKind>> kDistances{{"sqrtj", DistanceKind::SqrtJ},
                                                                   {"da", DistanceKind::DaKey}};
const std::vector<std::pair<const char*, RepTest>> kRepTests{{"per-coordinate", RepTest::PerCoordinate},
                                                             {"mahalanobis", RepTest::Mahalanobis}};
const std::vector<std::pair<const char*, RewardKind>> kRewards{{"info-distance", RewardKind::InfoDistance},
                                                               {"cov-penalty", RewardKind::DistanceWithCovPenalty}};
const std::vector<std::pair<const char*, FocusedVars>> kFocus{{"pose", FocusedVars::Pose},
                                                              {"position", FocusedVars::Position}};
const std::vector<std::pair<const char*, TimingMode>> kTiming{
    {"full", TimingMode::Full}, {"overlap-only", TimingMode::OverlapOnly}, {"none", TimingMode::None}};

template <class E>
std::string name_of(E v, const std::vector<std::pair<const char*, E>>& names) {
  for (const auto& [n, e] : names)
    if (e == v) return n;
  return "?";
}

}  // namespace

Models ScenarioConfig::default_models() {
  PlanarMotion motion;
  motion.noise = Eigen::Vector3d(0.5, 0.5, 0.5 * kDeg).cwiseAbs2().asDiagonal();
  RangeBearing cam;
  cam.fov = 90.0 * kDeg;
  cam.min_range = 2.0;
  cam.max_range = 40.0;
  cam.noise = Eigen::Vector2d(0.2, 2.0 * kDeg).cwiseAbs2().asDiagonal();
  return {MotionModel{motion}, MeasModel{cam}};
}

void ScenarioConfig::check() const {
  auto bad = [](const std::string& m) { throw Error(ErrorKind::ConfigError, m); };
  if (!(eps_c >= 0.0)) bad("eps_c must be non-negative");
  if (!(eps_wf >= 0.0 && eps_wf <= eps_c)) bad("eps_wf must lie in [0, eps_c]");
  if (!(beta_sigma > 0.0)) bad("beta_sigma must be positive");
  if (n_x < 1 || n_z < 1 || L < 1) bad("n_x, n_z and L must be at least 1");
  if (actions.empty()) bad("no actions configured");
  if (reward.alpha < 0.0 || reward.alpha > 1.0) bad("reward alpha must lie in [0, 1]");
}

SimConfig parse_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    fail_at(text, e.byte > 0 ? e.byte - 1 : 0, "malformed JSON");
  }
  SimConfig cfg;
  ScenarioConfig& s = cfg.scenario;
  Reader r(text, root, "config");
  r.get("eps_c", s.eps_c);
  r.get("eps_wf", s.eps_wf);
  r.get("use_wf", s.use_wf);
  r.get("beta_sigma", s.beta_sigma);
  r.get("n_x", s.n_x);
  r.get("n_z", s.n_z);
  r.get("L", s.L);
  r.get_enum("distance", s.distance, kDistances);
  r.get("sample_landmarks", s.sample_landmarks);
  r.get_enum("rep_test", s.rep_test, kRepTests);
  r.get("seed", s.seed);
  r.get("step_cap", cfg.step_cap);
  r.get_enum("timing", cfg.timing, kTiming);

  if (r.has("prior_sigma")) {
    std::vector<double> v;
    r.get("prior_sigma", v);
    if (v.size() != 3) fail_key(text, "prior_sigma", "expected [x, y, theta_deg]");
    cfg.prior_sigma = Eigen::Vector3d(v[0], v[1], v[2] * kDeg);
  }
  if (r.has("motion")) {
    Reader m = r.sub("motion");
    std::vector<double> v{0.5, 0.5, 0.5};
    m.get("sigma", v);
    if (v.size() != 3) fail_key(text, "sigma", "expected [x, y, theta_deg]");
    PlanarMotion pm;
    pm.noise = Eigen::Vector3d(v[0], v[1], v[2] * kDeg).cwiseAbs2().asDiagonal();
    s.models.motion = MotionModel{pm};
    m.finish();
  }
  if (r.has("camera")) {
    Reader c = r.sub("camera");
    RangeBearing cam = std::get<RangeBearing>(ScenarioConfig::default_models().meas.model);
    double fov_deg = cam.fov / kDeg;
    std::vector<double> v{0.2, 2.0};
    c.get("fov_deg", fov_deg);
    c.get("min_range", cam.min_range);
    c.get("max_range", cam.max_range);
    c.get("sigma", v);
    if (v.size() != 2) fail_key(text, "sigma", "expected [range, bearing_deg]");
    if (!(fov_deg > 0.0 && fov_deg <= 360.0)) fail_key(text, "fov_deg", "must lie in (0, 360]");
    if (!(cam.min_range > 0.0 && cam.min_range < cam.max_range)) fail_key(text, "min_range", "need 0 < min < max");
    cam.fov = fov_deg * kDeg;
    cam.noise = Eigen::Vector2d(v[0], v[1] * kDeg).cwiseAbs2().asDiagonal();
    s.models.meas = MeasModel{cam};
    c.finish();
  }
  if (r.has("reward")) {
    Reader w = r.sub("reward");
    w.get_enum("kind", s.reward.kind, kRewards);
    w.get("alpha", s.reward.alpha);
    w.get_enum("focused", s.reward.focused, kFocus);
    w.get("cov_threshold", s.reward.cov_threshold);
    w.get("cov_weight", s.reward.cov_weight);
    w.finish();
  }
  if (r.has("world")) {
    Reader w = r.sub("world");
    w.get("min_landmarks", cfg.world.min_landmarks);
    w.get("max_landmarks", cfg.world.max_landmarks);
    w.get("goals", cfg.world.goals);
    w.get("width", cfg.world.width);
    w.get("height", cfg.world.height);
    w.get("goal_radius", cfg.world.goal_radius);
    w.finish();
    if (cfg.world.min_landmarks < 0 || cfg.world.min_landmarks > cfg.world.max_landmarks)
      fail_key(text, "min_landmarks", "need 0 <= min <= max");
    if (cfg.world.goals < 1) fail_key(text, "goals", "need at least one goal");
  }
  r.finish();
  if (cfg.step_cap < 1) fail_key(text, "step_cap", "must be at least 1");
  try {
    s.check();
  } catch (const Error& e) {
    fail_at(text, 0, e.what());
  }
  return cfg;
}

SimConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::ConfigError, "cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string to_json(const SimConfig& cfg) {
  const ScenarioConfig& s = cfg.scenario;
  json j;
  j["eps_c"] = s.eps_c;
  j["eps_wf"] = s.eps_wf;
  j["use_wf"] = s.use_wf;
  j["beta_sigma"] = s.beta_sigma;
  j["n_x"] = s.n_x;
  j["n_z"] = s.n_z;
  j["L"] = s.L;
  j["distance"] = name_of(s.distance, kDistances);
  j["sample_landmarks"] = s.sample_landmarks;
  j["rep_test"] = name_of(s.rep_test, kRepTests);
  j["seed"] = s.seed;
  j["step_cap"] = cfg.step_cap;
  j["timing"] = name_of(cfg.timing, kTiming);
  j["prior_sigma"] = {cfg.prior_sigma[0], cfg.prior_sigma[1], cfg.prior_sigma[2] / kDeg};
  if (!s.models.motion.linear()) {
    const MatrixXd Q = s.models.motion.noise();
    j["motion"]["sigma"] = {std::sqrt(Q(0, 0)), std::sqrt(Q(1, 1)), std::sqrt(Q(2, 2)) / kDeg};
  }
  if (!s.models.meas.linear()) {
    const auto& cam = std::get<RangeBearing>(s.models.meas.model);
    j["camera"] = {{"fov_deg", cam.fov / kDeg},
                   {"min_range", cam.min_range},
                   {"max_range", cam.max_range},
                   {"sigma", {std::sqrt(cam.noise(0, 0)), std::sqrt(cam.noise(1, 1)) / kDeg}}};
  }
  j["reward"] = {{"kind", name_of(s.reward.kind, kRewards)},
                 {"alpha", s.reward.alpha},
                 {"focused", name_of(s.reward.focused, kFocus)},
                 {"cov_threshold", s.reward.cov_threshold},
                 {"cov_weight", s.reward.cov_weight}};
  j["world"] = {{"min_landmarks", cfg.world.min_landmarks}, {"max_landmarks", cfg.world.max_landmarks},
                {"goals", cfg.world.goals},                 {"width", cfg.world.width},
                {"height", cfg.world.height},               {"goal_radius", cfg.world.goal_radius}};
  return j.dump(2);
}

}  // namespace ixbsp
