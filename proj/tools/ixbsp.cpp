// ixbsp: rollout batches, planner comparisons and bound sweeps.
#include "ixbsp/bounds.hpp"
#include "ixbsp/errors.hpp"
#include "ixbsp/sim.hpp"

#include <CLI11.hpp>
#include <omp.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

namespace fs = std::filesystem;
using namespace ixbsp;

namespace {

struct Manifest {
  std::string config;
  std::string out;
  std::vector<std::string> planners;
  std::vector<std::uint64_t> seeds{1};
  std::vector<std::uint64_t> worlds{1};
  std::string timing;
  bool paired = false;
  std::vector<double> eps{0.0, 0.5, 1.0, 2.0, 5.0, 10.0};
  int trials = 200;
};

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

SimConfig load(const Manifest& m) {
  SimConfig cfg = m.config.empty() ? SimConfig{} : load_config(m.config);
  if (m.timing == "full") cfg.timing = TimingMode::Full;
  else if (m.timing == "overlap-only") cfg.timing = TimingMode::OverlapOnly;
  else if (m.timing == "none") cfg.timing = TimingMode::None;
  return cfg;
}

std::vector<PlannerSpec> planners(const Manifest& m, std::size_t at_least) {
  if (m.planners.size() < at_least)
    throw UsageError("need at least " + std::to_string(at_least) + " planner(s)");
  std::vector<PlannerSpec> out;
  for (const auto& p : m.planners) out.push_back(parse_planner(p));
  return out;
}

int threads() {
  if (const char* s = std::getenv("IXBSP_THREADS")) {
    const int n = std::atoi(s);
    if (n > 0) return n;
  }
  return 1;
}

std::string stem(const std::string& planner, std::uint64_t world, std::uint64_t seed) {
  return planner + "_w" + std::to_string(world) + "_s" + std::to_string(seed);
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream f(p);
  if (!f) throw Error(ErrorKind::InvalidInput, "cannot write " + p.string());
  f << text;
}

struct Job {
  std::size_t planner;
  std::uint64_t world;
  std::uint64_t seed;
};

// Independent rollouts across a pool of IXBSP_THREADS workers; results land in job order.
std::vector<std::vector<RolloutMetrics>> run_jobs(const std::vector<Job>& jobs, const std::vector<PlannerSpec>& specs,
                                                  const SimConfig& cfg, const std::vector<PlannerSpec>& shadows) {
  std::map<std::uint64_t, WorldModel> worlds;
  for (const auto& j : jobs) worlds.emplace(j.world, generate_world(j.world, cfg.world));
  std::vector<std::vector<RolloutMetrics>> out(jobs.size());
  const int pool = std::min<int>(threads(), static_cast<int>(jobs.size()));
  RolloutOptions opt;
  opt.shadows = shadows;
  // A busy pool leaves the planners serial; a single worker lets them fan out.
  opt.build.parallel = pool <= 1;
  omp_set_num_threads(std::max(1, pool));
  detail::parallel_for(static_cast<int>(jobs.size()), pool > 1, [&](int i) {
    const Job& j = jobs[i];
    out[i] = run_rollout(worlds.at(j.world), specs[j.planner], cfg, j.world, j.seed, opt);
  });
  omp_set_num_threads(omp_get_num_procs());
  return out;
}

void emit(const fs::path& dir, const RolloutMetrics& m) {
  const std::string s = stem(m.planner, m.world_seed, m.seed);
  std::ostringstream csv;
  write_sessions_csv(csv, m);
  write_file(dir / (s + ".csv"), csv.str());
  write_file(dir / (s + ".json"), summary_json(m) + "\n");
  if (m.last_tree) write_file(dir / "archive" / (s + ".json"), tree_snapshot_json(*m.last_tree) + "\n");
}

int cmd_run(const Manifest& m) {
  const SimConfig cfg = load(m);
  const auto specs = planners(m, 1);
  const fs::path dir(m.out);
  fs::create_directories(dir / "archive");
  std::vector<Job> jobs;
  for (std::size_t p = 0; p < specs.size(); ++p)
    for (auto w : m.worlds)
      for (auto s : m.seeds) jobs.push_back({p, w, s});
  const auto results = run_jobs(jobs, specs, cfg, {});
  for (const auto& r : results) emit(dir, r.front());
  std::cout << "wrote " << results.size() << " rollouts to " << dir.string() << "\n";
  return 0;
}

double wildfire_fraction(const RolloutMetrics& r) {
  double wf = 0.0, all = 0.0;
  for (const auto& s : r.sessions) {
    wf += s.wildfire;
    all += s.nodes;
  }
  return all > 0.0 ? wf / all : 0.0;
}

int cmd_compare(const Manifest& m) {
  const SimConfig cfg = load(m);
  const auto specs = planners(m, 2);
  const fs::path dir(m.out);
  fs::create_directories(dir / "archive");

  // rows[planner][grid cell]
  std::vector<std::vector<RolloutMetrics>> rows(specs.size());
  if (m.paired) {
    std::vector<Job> jobs;
    for (auto w : m.worlds)
      for (auto s : m.seeds) jobs.push_back({0, w, s});
    const std::vector<PlannerSpec> shadows(specs.begin() + 1, specs.end());
    for (auto& lanes : run_jobs(jobs, specs, cfg, shadows))
      for (std::size_t p = 0; p < specs.size(); ++p) rows[p].push_back(std::move(lanes[p]));
  } else {
    std::vector<Job> jobs;
    for (std::size_t p = 0; p < specs.size(); ++p)
      for (auto w : m.worlds)
        for (auto s : m.seeds) jobs.push_back({p, w, s});
    const auto results = run_jobs(jobs, specs, cfg, {});
    const std::size_t cells = m.worlds.size() * m.seeds.size();
    for (std::size_t i = 0; i < results.size(); ++i) rows[i / cells].push_back(results[i].front());
  }
  for (const auto& per : rows)
    for (const auto& r : per) emit(dir, r);

  std::ofstream table(dir / "compare.csv");
  table << "planner,rollouts,mean_session_ms,median_session_ms,mean_cumulative_ms,win_fraction_vs_first,"
           "mw_p_cov_vs_first,mean_error,mean_cov_norm,wildfire_fraction,action_agreement_vs_first\n";
  table << std::setprecision(10);
  std::ofstream ratio(dir / "session_ratio.csv");
  ratio << "planner,world,seed,session,wall_ms,first_wall_ms,ratio\n" << std::setprecision(10);

  const auto& base = rows.front();
  std::vector<double> base_err, base_cov;
  for (const auto& r : base) {
    base_err.push_back(r.estimation_error);
    base_cov.push_back(r.cov_norm);
  }
  std::cout << std::left << std::setw(12) << "planner" << std::setw(14) << "median_ms" << std::setw(14) << "cum_ms"
            << std::setw(10) << "win" << std::setw(10) << "mw_p" << std::setw(10) << "wf_frac" << "\n";
  for (std::size_t p = 0; p < specs.size(); ++p) {
    std::vector<double> sess, cum, err, cov, wf;
    double agree = 0.0, total = 0.0;
    for (std::size_t c = 0; c < rows[p].size(); ++c) {
      const auto& r = rows[p][c];
      const auto& b = base[c];
      for (std::size_t k = 0; k < r.sessions.size(); ++k) {
        sess.push_back(r.sessions[k].wall_ms);
        if (k < b.sessions.size()) {
          const double bw = b.sessions[k].wall_ms;
          ratio << specs[p].name << ',' << r.world_seed << ',' << r.seed << ',' << k + 1 << ','
                << r.sessions[k].wall_ms << ',' << bw << ',' << (bw > 0.0 ? r.sessions[k].wall_ms / bw : 0.0) << '\n';
          agree += r.sessions[k].seq == b.sessions[k].seq ? 1.0 : 0.0;
          total += 1.0;
        }
      }
      cum.push_back(r.cumulative_ms);
      err.push_back(r.estimation_error);
      cov.push_back(r.cov_norm);
      wf.push_back(wildfire_fraction(r));
    }
    const double med = sess.empty() ? 0.0 : median(sess);
    const double win = win_fraction(err, base_err);
    const double mw = mann_whitney_p(cov, base_cov);
    table << specs[p].name << ',' << rows[p].size() << ',' << (sess.empty() ? 0.0 : mean(sess)) << ',' << med << ','
          << mean(cum) << ',' << win << ',' << mw << ',' << mean(err) << ',' << mean(cov) << ',' << mean(wf) << ','
          << (total > 0.0 ? agree / total : 1.0) << '\n';
    std::cout << std::setw(12) << specs[p].name << std::setw(14) << med << std::setw(14) << mean(cum) << std::setw(10)
              << win << std::setw(10) << mw << std::setw(10) << mean(wf) << "\n";
  }
  return 0;
}

int cmd_bounds(const Manifest& m) {
  if (m.eps.empty()) throw UsageError("empty eps_wf sweep");
  if (m.trials < 1) throw UsageError("trials must be positive");
  const std::uint64_t seed = m.seeds.empty() ? 1 : m.seeds.front();
  const fs::path dir(m.out);
  fs::create_directories(dir);
  const LinearScenario s = LinearScenario::planar_default();
  const HolderSpec spec = s.reward.holder();

  std::ofstream samples(dir / "bounds_samples.csv");
  samples << "eps_wf,trial,seq,diff,phi,psi,lower,upper,within\n" << std::setprecision(12);
  std::ofstream summary(dir / "bounds_summary.csv");
  summary << "eps_wf,samples,fraction_within,variance,mean_psi,holder_verified\n" << std::setprecision(12);
  for (double eps : m.eps) {
    const BoundCheck c = empirical_bound_check(s, spec, eps, m.trials, seed, true);
    double psi = 0.0;
    for (const auto& x : c.samples) {
      samples << eps << ',' << x.trial << ',' << x.seq << ',' << x.diff << ',' << x.report.phi << ',' << x.report.psi
              << ',' << x.report.lower << ',' << x.report.upper << ',' << (x.within ? 1 : 0) << '\n';
      psi += x.report.psi;
    }
    psi /= double(c.samples.size());
    summary << eps << ',' << c.samples.size() << ',' << c.fraction_within << ',' << c.variance << ',' << psi << ','
            << (c.holder_verified ? 1 : 0) << '\n';
    std::cout << "eps_wf=" << eps << " within=" << c.fraction_within << " var=" << c.variance
              << (c.holder_verified ? "" : " (advisory: Hölder constant not verified)") << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Incremental belief space planning experiments"};
  app.require_subcommand(1);
  Manifest m;
  auto common = [&](CLI::App* c) {
    c->add_option("--config", m.config, "JSON scenario config")->check(CLI::ExistingFile);
    c->add_option("--out", m.out, "output directory")->required();
    c->add_option("--seeds", m.seeds, "rollout seeds")->delimiter(',');
    c->add_option("--timing-mode", m.timing, "planning time accounting")
        ->check(CLI::IsMember({"full", "overlap-only", "none"}));
  };
  auto* run = app.add_subcommand("run", "execute rollouts");
  auto* compare = app.add_subcommand("compare", "compare planners on identical grids");
  auto* bounds = app.add_subcommand("bounds", "wildfire threshold sensitivity sweep");
  for (auto* c : {run, compare}) {
    common(c);
    c->add_option("--planners", m.planners, "xbsp, ml, ixbsp, iml, ixbsp-nowf, iml-nowf")->delimiter(',');
    c->add_option("--worlds", m.worlds, "world seeds")->delimiter(',');
  }
  compare->add_flag("--paired", m.paired, "shadow planners on the first planner's posteriors");
  common(bounds);
  bounds->add_option("--eps", m.eps, "eps_wf values")->delimiter(',');
  bounds->add_option("--trials", m.trials, "forced-distance trials per value");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }
  try {
    if (*run) return cmd_run(m);
    if (*compare) return cmd_compare(m);
    return cmd_bounds(m);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.kind() == ErrorKind::ConfigError ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
