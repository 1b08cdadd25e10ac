#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "seqmis/seqmis.hpp"

using namespace seqmis;
using io::json;
using io::num;

namespace {

struct Globals {
  std::uint64_t seed = 1;
  std::string seeds;
  std::size_t n = 1000;
  std::string dist;
  std::string graph;
  std::string positions;
  std::string out;
  std::string format = "csv";
  std::optional<std::uint32_t> kmax;
  double L = 15.0;
  unsigned workers = 1;
  // Graph sources beyond the global flags.
  std::optional<double> er;
  double theta = 0.0;
  double pathloss = 2.0;
  double target_degree = 2.0;
};

std::vector<std::uint64_t> resolve_seeds(const Globals& g) {
  if (g.seeds.empty()) return {g.seed};
  const auto dots = g.seeds.find("..");
  if (dots == std::string::npos) throw InputError("--seeds expects a..b");
  std::uint64_t a = 0, b = 0;
  try {
    a = std::stoull(g.seeds.substr(0, dots));
    b = std::stoull(g.seeds.substr(dots + 2));
  } catch (const std::exception&) {
    throw InputError("--seeds expects a..b with integers");
  }
  if (b < a) throw InputError("--seeds range is empty");
  if (b - a > 1'000'000) throw InputError("--seeds range too long");
  std::vector<std::uint64_t> s;
  for (std::uint64_t x = a; x <= b; ++x) s.push_back(x);
  return s;
}

/// Runs job(i) for i in [0, count) on up to `workers` threads; results stay
/// indexed so output order never depends on completion order.
void parallel_for(std::size_t count, unsigned workers, const std::function<void(std::size_t)>& job) {
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex lock;
  auto work = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        job(i);
      } catch (...) {
        std::lock_guard<std::mutex> g(lock);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

struct Quartiles {
  double q1 = 0, median = 0, q3 = 0, mean = 0;
};

Quartiles quartiles(std::vector<double> x) {
  Quartiles q;
  if (x.empty()) return q;
  std::sort(x.begin(), x.end());
  auto at = [&](double p) {
    const double pos = p * static_cast<double>(x.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, x.size() - 1);
    return x[lo] + (pos - static_cast<double>(lo)) * (x[hi] - x[lo]);
  };
  q.q1 = at(0.25);
  q.median = at(0.5);
  q.q3 = at(0.75);
  for (double v : x) q.mean += v;
  q.mean /= static_cast<double>(x.size());
  return q;
}

/// Output sink: --out path or standard output.
class Sink {
 public:
  explicit Sink(const std::string& path) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_) throw InputError("cannot open output file: " + path);
    }
  }
  std::ostream& os() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }

 private:
  std::ofstream file_;
};

/// Where the graphs of a run come from.
class GraphSource {
 public:
  explicit GraphSource(const Globals& g) : g_(g) {
    int chosen = !g.graph.empty() + g.er.has_value() + !g.positions.empty() + !g.dist.empty();
    if (chosen == 0) throw InputError("need one of --graph, --er, --dist or --positions");
    if (!g.graph.empty()) {
      fixed_ = load_edge_list(g.graph);
    } else if (!g.positions.empty()) {
      sites_ = load_positions(g.positions);
      model_.pathloss_exponent = g.pathloss;
      model_.fading_variance = g.theta;
      const auto pts = points_of(sites_);
      calibration_ = calibrate_threshold(g.pathloss, pts, g.target_degree);
      model_.threshold = calibration_->threshold;
      model_.validate();
    } else if (!g.er) {
      dist_ = parse_distribution(g.dist, g.kmax);
    }
    if ((g.er || !g.dist.empty()) && g.n == 0) throw InputError("--n must be >= 1");
  }

  bool lazy_cm() const { return dist_.has_value() && !g_.er && g_.graph.empty() && g_.positions.empty(); }
  const std::optional<Calibration>& calibration() const { return calibration_; }

  std::string describe() const {
    if (!g_.graph.empty()) return "graph:" + g_.graph;
    if (g_.er) return "er:" + num(*g_.er);
    if (!g_.positions.empty()) return "positions:" + g_.positions;
    return g_.dist;
  }

  MultiGraph graph(std::uint64_t seed) const {
    if (fixed_) return *fixed_;
    if (g_.er) return gen_erdos_renyi(g_.n, *g_.er, seed);
    if (!sites_.empty()) return gen_geometric(model_, points_of(sites_), seed);
    return gen_configuration_model(sequence(seed), seed ^ 0x9e3779b97f4a7c15ULL);
  }

  DegreeSequence sequence(std::uint64_t seed) const { return sample_degree_sequence(*dist_, g_.n, seed); }

  /// Initial degree measure for the hydrodynamic solvers.
  DegreeDistribution measure(std::uint64_t seed) const {
    if (dist_) return *dist_;
    auto m = empirical_degree_measure(graph(seed), true);
    if (g_.kmax) m = DegreeDistribution(m.padded(std::max(*g_.kmax, m.k_max())), true);
    return m;
  }

 private:
  const Globals& g_;
  std::optional<MultiGraph> fixed_;
  std::optional<DegreeDistribution> dist_;
  std::vector<Site> sites_;
  GeometricModel model_;
  std::optional<Calibration> calibration_;
};

std::uint64_t graph_seed(std::uint64_t s) { return Rng(s).split(0).seed(); }
std::uint64_t run_seed(std::uint64_t s) { return Rng(s).split(1).seed(); }

json runspec(const std::string& command, const Globals& g, const json& extra) {
  json j;
  j["command"] = command;
  j["n"] = g.n;
  j["seeds"] = resolve_seeds(g);
  if (!g.dist.empty()) j["dist"] = g.dist;
  if (!g.graph.empty()) j["graph"] = g.graph;
  if (!g.positions.empty()) {
    j["positions"] = g.positions;
    j["theta"] = g.theta;
    j["pathloss"] = g.pathloss;
    j["target_degree"] = g.target_degree;
  }
  if (g.er) j["er"] = *g.er;
  if (g.kmax) j["kmax"] = *g.kmax;
  j["L"] = g.L;
  j["format"] = g.format;
  for (const auto& [k, v] : extra.items()) j[k] = v;
  return j;
}

void echo_header(std::ostream& os, const json& spec) { os << "# runspec " << spec.dump() << '\n'; }

// ---------------------------------------------------------------- gen

int cmd_gen(const Globals& g) {
  const GraphSource src(g);
  const auto graph = src.graph(graph_seed(g.seed));
  std::ostringstream summary;
  summary << "n=" << graph.size() << " edges=" << graph.edge_count() << " mean_degree=" << num(graph.mean_degree());
  if (const auto& c = src.calibration())
    summary << " threshold=" << num(c->threshold) << " calibrated_mean_degree=" << num(c->mean_degree)
            << " range=" << num(c->range);
  if (g.out.empty()) {
    write_edge_list(graph, std::cout);
    std::cerr << summary.str() << '\n';
  } else {
    Sink sink(g.out);
    write_edge_list(graph, sink.os());
    std::cout << summary.str() << '\n';
  }
  return 0;
}

// ---------------------------------------------------------------- explore

int cmd_explore(const Globals& g, const std::string& policy_text, bool with_log) {
  const GraphSource src(g);
  const Policy policy = parse_policy(policy_text);
  const auto seeds = resolve_seeds(g);
  struct Row {
    ExplorationResult r;
    double ms = 0;
  };
  std::vector<Row> rows(seeds.size());
  parallel_for(seeds.size(), g.workers, [&](std::size_t i) {
    const auto t0 = std::chrono::steady_clock::now();
    ExploreOptions opts;
    opts.record_log = with_log;
    rows[i].r = src.lazy_cm() ? run_lazy_cm_exploration(src.sequence(graph_seed(seeds[i])), policy, run_seed(seeds[i]), opts)
                              : run_exploration(src.graph(graph_seed(seeds[i])), policy, run_seed(seeds[i]), opts);
    rows[i].ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  });
  std::vector<double> jam;
  for (const auto& r : rows) jam.push_back(r.r.jamming);
  const auto q = quartiles(jam);
  const auto spec = runspec("explore", g, {{"policy", policy.name()}, {"source", src.describe()}});
  Sink sink(g.out);
  auto& os = sink.os();
  if (g.format == "json") {
    json res = json::array();
    for (std::size_t i = 0; i < rows.size(); ++i)
      res.push_back(io::exploration_json(rows[i].r, policy, seeds[i], rows[i].ms, with_log));
    json out = {{"runspec", spec},
                {"results", res},
                {"summary", {{"q1", q.q1}, {"median", q.median}, {"q3", q.q3}, {"mean", q.mean}}}};
    os << out.dump(2) << '\n';
  } else {
    echo_header(os, spec);
    os << "seed,n,policy,is_size,jamming\n";
    for (std::size_t i = 0; i < rows.size(); ++i)
      os << seeds[i] << ',' << rows[i].r.n << ',' << policy.name() << ',' << rows[i].r.active.size() << ','
         << num(rows[i].r.jamming) << '\n';
    os << "# summary q1=" << num(q.q1) << " median=" << num(q.median) << " q3=" << num(q.q3)
       << " mean=" << num(q.mean) << '\n';
  }
  return 0;
}

// ---------------------------------------------------------------- hydro

HydroConfig hydro_config(const Globals& g) {
  HydroConfig c;
  c.k_max = g.kmax;
  c.L = g.L;
  return c;
}

/// Parses "dynamic", "dynamic:15", "static:-3" style method strings.
std::pair<std::string, std::optional<double>> split_method(const std::string& m) {
  const auto colon = m.find(':');
  if (colon == std::string::npos) return {m, std::nullopt};
  try {
    std::size_t used = 0;
    const double v = std::stod(m.substr(colon + 1), &used);
    if (used != m.size() - colon - 1) throw InputError("x");
    return {m.substr(0, colon), v};
  } catch (const std::exception&) {
    throw InputError("bad method parameter: " + m);
  }
}

int cmd_hydro(const Globals& g, const std::string& method, const std::string& trajectory_path) {
  const GraphSource src(g);
  auto mu0 = src.measure(graph_seed(g.seed));
  if (!mu0.normalized()) mu0 = mu0.normalized_copy();
  auto cfg = hydro_config(g);
  if (cfg.k_max && *cfg.k_max < mu0.k_max()) throw InputError("--kmax is below the support of the distribution");
  const auto [kind, param] = split_method(method);
  const double L = param.value_or(g.L);
  json result;
  std::optional<MeasureTrajectory> traj;
  if (kind == "greedy") {
    traj = solve_greedy_system(mu0, cfg);
    result = io::hydro_json(*traj);
  } else if (kind == "dynamic") {
    // Degree-greedy approximation: lambda(i) = (i+1)^{-L}.
    traj = solve_dynamic_system(mu0, RateFunction::power(-L), cfg);
    result = io::hydro_json(*traj);
  } else if (kind == "static") {
    const auto s = solve_static(mu0, RateFunction::power(-L), cfg);
    result = io::hydro_json(s);
  } else if (kind == "janson") {
    const auto j = janson_jamming(mu0);
    result = {{"sigma", j.sigma}, {"tau_inf", std::isfinite(j.tau_inf) ? json(j.tau_inf) : json("inf")},
              {"tail_mass", mu0.tail_mass()}};
  } else if (kind == "bounds") {
    const double m = mu0.mean();
    result["mean_degree"] = m;
    result["greedy_sigma"] = janson_jamming(mu0).sigma;
    const auto& p = mu0.masses();
    const auto nz = std::count_if(p.begin(), p.end(), [](double x) { return x > 0.0; });
    if (nz == 1 && mu0.k_max() >= 2) {
      const int d = static_cast<int>(mu0.k_max());
      result["regular_lower_bound_printed"] = wormald_regular_bound(d);
      result["regular_greedy_exact"] = regular_greedy_jamming(d);
    }
    if (m > 0.0) {
      const double n = static_cast<double>(std::max<std::size_t>(g.n, static_cast<std::size_t>(std::ceil(m)) + 1));
      const auto ub = er_alpha_upper_bound(n, m);
      result["er_alpha_upper_bound"] = ub.fraction;
      result["er_alpha_upper_bound_advisory"] = ub.advisory;
      result["er_greedy_closed_form"] = er_greedy_jamming(m);
    }
  } else if (kind == "optimality") {
    OptimalityConfig oc;
    oc.hydro = cfg;
    oc.hydro.L = L;
    oc.mc_n = g.n;
    oc.mc_seed = run_seed(g.seed);
    result = io::optimality_json(check_degree_greedy_optimality(mu0, oc));
  } else {
    throw InputError("unknown --method: " + method);
  }
  const auto spec = runspec("hydro", g, {{"method", method}, {"source", src.describe()}});
  if (traj && !trajectory_path.empty()) {
    Sink t(trajectory_path);
    io::write_measure_csv(t.os(), *traj);
  }
  Sink sink(g.out);
  auto& os = sink.os();
  if (g.format == "json") {
    os << json{{"runspec", spec}, {"result", result}}.dump(2) << '\n';
  } else {
    echo_header(os, spec);
    os << "key,value\n";
    for (const auto& [k, v] : result.items())
      if (!v.is_structured()) os << k << ',' << (v.is_number() ? num(v.get<double>()) : v.dump()) << '\n';
  }
  return 0;
}

// ---------------------------------------------------------------- glauber

struct GlauberOptions {
  std::string initial = "empty";
  std::string mode = "csma";
  GlauberConfig cfg;
};

int cmd_glauber(const Globals& g, const GlauberOptions& o) {
  o.cfg.validate();
  const GraphSource src(g);
  const auto seeds = resolve_seeds(g);
  const Dynamics dyn = o.mode == "glauber" ? Dynamics::glauber : o.mode == "csma" ? Dynamics::csma
                                                                                   : throw InputError("--mode must be csma or glauber");
  std::optional<Policy> seed_policy;
  if (o.initial != "empty") seed_policy = parse_policy(o.initial);
  std::vector<ActivityTrajectory> trajs(seeds.size());
  parallel_for(seeds.size(), g.workers, [&](std::size_t i) {
    const auto graph = src.graph(graph_seed(seeds[i]));
    if (seed_policy) {
      trajs[i] = run_combined(graph, *seed_policy, o.cfg, run_seed(seeds[i]), dyn);
    } else {
      trajs[i] = dyn == Dynamics::csma ? run_csma(graph, o.cfg, {}, run_seed(seeds[i]))
                                       : run_glauber(graph, o.cfg, {}, run_seed(seeds[i]));
    }
  });
  const auto spec = runspec("glauber", g,
                            {{"initial", o.initial},
                             {"mode", o.mode},
                             {"beta", o.cfg.beta},
                             {"steps", o.cfg.steps},
                             {"backoff_mean", o.cfg.backoff_mean},
                             {"tx_mean", o.cfg.tx_mean},
                             {"max_transitions", o.cfg.max_transitions},
                             {"source", src.describe()}});
  Sink sink(g.out);
  auto& os = sink.os();
  if (g.format == "json") {
    json res = json::array();
    for (std::size_t i = 0; i < trajs.size(); ++i) {
      json samples = json::array();
      for (const auto& s : trajs[i].samples) samples.push_back({phase_name(s.phase), s.index, s.time, s.active});
      json r = {{"seed", seeds[i]}, {"final_active", trajs[i].final_set.size()}, {"samples", samples}};
      if (trajs[i].first_maximal) r["first_maximal"] = trajs[i].first_maximal->active;
      res.push_back(std::move(r));
    }
    os << json{{"runspec", spec}, {"results", res}}.dump(2) << '\n';
  } else {
    echo_header(os, spec);
    os << "seed,phase,transition_index,time,active_count\n";
    for (std::size_t i = 0; i < trajs.size(); ++i)
      for (const auto& s : trajs[i].samples)
        os << seeds[i] << ',' << phase_name(s.phase) << ',' << s.index << ',' << num(s.time) << ',' << s.active
           << '\n';
  }
  return 0;
}

// ---------------------------------------------------------------- fairness

std::vector<double> parse_grid(const std::string& text) {
  double lo = -2, hi = 5, step = 0.1;
  if (!text.empty()) {
    char c1 = 0, c2 = 0;
    std::istringstream in(text);
    if (!(in >> lo >> c1 >> hi >> c2 >> step) || c1 != ':' || c2 != ':') throw InputError("--grid expects lo:hi:step");
  }
  return l_grid(lo, hi, step);
}

int cmd_fairness(const Globals& g, const std::string& grid_text) {
  const GraphSource src(g);
  auto mu0 = src.measure(graph_seed(g.seed));
  if (!mu0.normalized()) mu0 = mu0.normalized_copy();
  const auto sweep = sweep_fairness(mu0, parse_grid(grid_text), hydro_config(g), g.workers);
  const auto spec = runspec("fairness", g, {{"grid", grid_text.empty() ? "-2:5:0.1" : grid_text}, {"source", src.describe()}});
  Sink sink(g.out);
  auto& os = sink.os();
  if (g.format == "json") {
    json pts = json::array();
    for (const auto& p : sweep.points)
      pts.push_back({{"L", p.L}, {"sigma", p.sigma}, {"unfairness", p.unfairness}, {"mean_active_degree", p.mean_active_degree}});
    os << json{{"runspec", spec}, {"points", pts}, {"argmin", io::argmin_json(sweep.argmin)}}.dump(2) << '\n';
  } else {
    echo_header(os, spec);
    io::write_sweep_csv(os, sweep.points);
    os << "# argmin " << io::argmin_json(sweep.argmin).dump() << '\n';
  }
  return 0;
}

// ---------------------------------------------------------------- compare

std::vector<double> parse_values(const std::string& text, std::vector<double> fallback) {
  if (text.empty()) return fallback;
  std::vector<double> v;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      v.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw InputError("bad value list: " + text);
    }
  }
  if (v.empty()) throw InputError("empty value list");
  return v;
}

struct CompareOptions {
  std::string sweep = "regular";
  std::string values;
  std::uint64_t csma_transitions = 0;
};

int cmd_compare(const Globals& g, const CompareOptions& o) {
  const auto seeds = resolve_seeds(g);
  std::vector<double> values;
  if (o.sweep == "regular") values = parse_values(o.values, {3, 4, 5, 6, 7, 8, 9, 10});
  else if (o.sweep == "er") values = parse_values(o.values, {1, 2, 3, 4, 5});
  else if (o.sweep == "geometric") values = parse_values(o.values, {0, 1, 2, 3, 4});
  else throw InputError("--sweep must be regular, er or geometric");

  std::vector<Point> pts;
  double threshold = 0;
  if (o.sweep == "geometric") {
    pts = g.positions.empty() ? poisson_disc(static_cast<double>(g.n), 1.0, graph_seed(g.seed))
                              : points_of(load_positions(g.positions));
    threshold = calibrate_threshold(g.pathloss, pts, g.target_degree).threshold;
  }
  const HydroConfig hcfg = hydro_config(g);

  struct Cell {
    double greedy = 0, degree_greedy = 0, csma = 0;
    DegreeDistribution measure;
  };
  const auto spec = runspec("compare", g, {{"sweep", o.sweep}, {"values", values}, {"csma_transitions", o.csma_transitions}});
  Sink sink(g.out);
  auto& os = sink.os();
  echo_header(os, spec);
  os << "value,mc_greedy_q1,mc_greedy_median,mc_greedy_q3,mc_degree_greedy_q1,mc_degree_greedy_median,"
        "mc_degree_greedy_q3,hydro_dynamic,hydro_static,hydro_greedy,reference,csma_final,residual_bound,tail_mass\n";
  for (double value : values) {
    std::vector<Cell> cells(seeds.size());
    parallel_for(seeds.size(), g.workers, [&](std::size_t i) {
      const auto gs = graph_seed(seeds[i]);
      MultiGraph graph;
      if (o.sweep == "regular") {
        DegreeSequence seq;
        seq.degrees.assign(g.n, static_cast<std::uint32_t>(value));
        if (!seq.even()) throw InputError("n * d must be even");
        graph = gen_configuration_model(seq, gs);
      } else if (o.sweep == "er") {
        graph = gen_erdos_renyi(g.n, value, gs);
      } else {
        GeometricModel m;
        m.pathloss_exponent = g.pathloss;
        m.threshold = threshold;
        m.fading_variance = value;
        graph = gen_geometric(m, pts, gs);
      }
      ExploreOptions opts;
      opts.record_log = false;
      cells[i].greedy = run_exploration(graph, Policy::uniform(), run_seed(seeds[i]), opts).jamming;
      const auto dg = run_exploration(graph, Policy::min_degree(), run_seed(seeds[i]) + 1, opts);
      cells[i].degree_greedy = dg.jamming;
      cells[i].measure = empirical_degree_measure(graph, true);
      if (o.csma_transitions > 0) {
        GlauberConfig gc;
        gc.max_transitions = o.csma_transitions;
        cells[i].csma = static_cast<double>(
                            run_combined(graph, Policy::dynamic_rate(RateFunction::power(-g.L)), gc, run_seed(seeds[i]) + 2,
                                         Dynamics::csma)
                                .final_set.size()) /
                        static_cast<double>(graph.size());
      }
    });
    std::vector<double> gr, dg;
    double csma = 0;
    for (const auto& c : cells) {
      gr.push_back(c.greedy);
      dg.push_back(c.degree_greedy);
      csma += c.csma;
    }
    // Hydrodynamic predictions from each graph's empirical measure, averaged over seeds.
    double dyn = 0, sta = 0, gre = 0, resid = 0, tail = 0;
    for (const auto& c : cells) {
      const auto d = solve_dynamic_system(c.measure, RateFunction::power(-g.L), hcfg);
      const auto s = solve_static(c.measure, RateFunction::power(-g.L), hcfg);
      const auto gg = solve_greedy_system(c.measure, hcfg);
      dyn += d.sigma;
      sta += s.sigma;
      gre += gg.sigma;
      resid = std::max({resid, d.residual_bound, s.residual_bound, gg.residual_bound});
      tail = std::max(tail, c.measure.tail_mass());
    }
    const double k = static_cast<double>(cells.size());
    double reference = std::nan("");
    if (o.sweep == "regular") reference = wormald_regular_bound(static_cast<int>(value));
    if (o.sweep == "er") reference = er_greedy_jamming(value);
    const auto qg = quartiles(gr), qd = quartiles(dg);
    os << num(value) << ',' << num(qg.q1) << ',' << num(qg.median) << ',' << num(qg.q3) << ',' << num(qd.q1) << ','
       << num(qd.median) << ',' << num(qd.q3) << ',' << num(dyn / k) << ',' << num(sta / k) << ',' << num(gre / k)
       << ',' << num(reference) << ',' << (o.csma_transitions > 0 ? num(csma / k) : std::string("nan")) << ','
       << num(resid) << ',' << num(tail) << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Maximal independent sets on sparse random graphs: simulation and hydrodynamic limits"};
  app.set_config("--config", "", "Configuration file (TOML or INI); command-line flags take precedence");
  app.require_subcommand(1);
  Globals g;
  std::optional<std::uint32_t> kmax;
  app.add_option("--seed", g.seed, "Seed for single runs")->capture_default_str();
  app.add_option("--seeds", g.seeds, "Seed range a..b");
  app.add_option("--n", g.n, "Number of vertices")->capture_default_str();
  app.add_option("--dist", g.dist, "Degree distribution: poisson:<m>, regular:<d>, powerlaw:<a>[:kmin], file:<path>");
  app.add_option("--graph", g.graph, "Edge-list file");
  app.add_option("--positions", g.positions, "Positions CSV (id,x,y)");
  app.add_option("--er", g.er, "Erdos-Renyi graph with this mean degree");
  app.add_option("--theta", g.theta, "Log-normal fading variance for geometric graphs")->capture_default_str();
  app.add_option("--pathloss", g.pathloss, "Path-loss exponent")->capture_default_str();
  app.add_option("--target-degree", g.target_degree, "Calibration target mean degree")->capture_default_str();
  app.add_option("--out", g.out, "Output path (default: standard output)");
  app.add_option("--format", g.format, "csv or json")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
  app.add_option("--kmax", kmax, "Degree truncation");
  app.add_option("--L", g.L, "Degree-greedy approximation exponent")->capture_default_str();
  app.add_option("--workers", g.workers, "Worker threads")->capture_default_str();

  auto* gen = app.add_subcommand("gen", "Generate a graph and write its edge list");
  gen->fallthrough();

  auto* explore = app.add_subcommand("explore", "Run a sequential exploration over seeds");
  explore->fallthrough();
  std::string policy = "greedy";
  bool with_log = false;
  explore->add_option("--policy", policy, "greedy | min_degree | static:<L> | dynamic:<L>")->capture_default_str();
  explore->add_flag("--log", with_log, "Include activation logs (json)");

  auto* hydro = app.add_subcommand("hydro", "Solve a hydrodynamic limit");
  hydro->fallthrough();
  std::string method = "greedy", trajectory;
  hydro->add_option("--method", method, "greedy | dynamic[:L] | static[:L] | janson | bounds | optimality")
      ->capture_default_str();
  hydro->add_option("--trajectory", trajectory, "Write the measure trajectory CSV here");

  auto* glauber = app.add_subcommand("glauber", "Run Glauber or CSMA dynamics");
  glauber->fallthrough();
  GlauberOptions go;
  glauber->add_option("--initial", go.initial, "empty | greedy | min_degree | static:<L> | dynamic:<L>")
      ->capture_default_str();
  glauber->add_option("--mode", go.mode, "csma | glauber")->capture_default_str();
  glauber->add_option("--beta", go.cfg.beta, "Activation odds (discrete chain)")->capture_default_str();
  glauber->add_option("--steps", go.cfg.steps, "Steps (discrete chain)")->capture_default_str();
  glauber->add_option("--backoff", go.cfg.backoff_mean, "Mean backoff time")->capture_default_str();
  glauber->add_option("--tx", go.cfg.tx_mean, "Mean transmission time")->capture_default_str();
  glauber->add_option("--transitions", go.cfg.max_transitions, "Successful transitions to simulate")
      ->capture_default_str();
  glauber->add_option("--horizon", go.cfg.horizon, "Time horizon");
  glauber->add_option("--per-decade", go.cfg.points_per_decade, "Log-grid density")->capture_default_str();

  auto* fairness = app.add_subcommand("fairness", "Unfairness sweep over clock exponents");
  fairness->fallthrough();
  std::string grid;
  fairness->add_option("--grid", grid, "lo:hi:step (default -2:5:0.1)");

  auto* compare = app.add_subcommand("compare", "Estimator comparison over a parameter sweep");
  compare->fallthrough();
  CompareOptions co;
  compare->add_option("--sweep", co.sweep, "regular | er | geometric")->capture_default_str();
  compare->add_option("--values", co.values, "Comma-separated sweep values");
  compare->add_option("--csma-transitions", co.csma_transitions, "Also run CSMA seeded by the dynamic exploration");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  g.kmax = kmax;
  try {
    if (*gen) return cmd_gen(g);
    if (*explore) return cmd_explore(g, policy, with_log);
    if (*hydro) return cmd_hydro(g, method, trajectory);
    if (*glauber) return cmd_glauber(g, go);
    if (*fairness) return cmd_fairness(g, grid);
    if (*compare) return cmd_compare(g, co);
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}
