#include "beliefplay/cli.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <random>
#include <set>
#include <sstream>

#include "beliefplay/errors.h"

namespace beliefplay {

namespace fs = std::filesystem;

ConfigError::ConfigError(std::vector<std::string> errors)
    : std::runtime_error(errors.empty() ? "invalid config" : errors.front()),
      errors_(std::move(errors)) {}

namespace {

class RunError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Collects errors while reading typed values out of a JSON tree.
class Reader {
 public:
  std::vector<std::string> errors;

  void fail(const std::string& path, const std::string& msg) {
    errors.push_back(path + ": " + msg);
  }

  void check_keys(const Json& obj, const std::string& path,
                  const std::set<std::string>& allowed) {
    for (const auto& [key, value] : obj.items()) {
      (void)value;
      if (!allowed.count(key))
        errors.push_back("unknown key '" + (path.empty() ? key : path + "." + key) + "'");
    }
  }

  bool object(const Json& v, const std::string& path) {
    if (v.is_object()) return true;
    fail(path, "expected an object");
    return false;
  }

  template <typename T>
  void number(const Json& obj, const char* key, const std::string& path, T& out,
              double min = -1e308, double max = 1e308) {
    if (!obj.contains(key)) return;
    const Json& v = obj.at(key);
    const std::string p = path + "." + key;
    if (!v.is_number()) {
      fail(p, "expected a number");
      return;
    }
    const double d = v.get<double>();
    if (d < min || d > max) {
      fail(p, "out of range");
      return;
    }
    if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) {
        fail(p, "expected an integer");
        return;
      }
      if constexpr (std::is_unsigned_v<T>) {
        if (v.is_number_unsigned()) {
          out = static_cast<T>(v.get<std::uint64_t>());
        } else {
          out = static_cast<T>(v.get<std::int64_t>());
        }
      } else {
        out = static_cast<T>(v.get<std::int64_t>());
      }
    } else {
      out = static_cast<T>(d);
    }
  }

  std::vector<double> vec(const Json& v, const std::string& path) {
    std::vector<double> out;
    if (!v.is_array()) {
      fail(path, "expected an array of numbers");
      return out;
    }
    for (const auto& x : v) {
      if (!x.is_number()) {
        fail(path, "expected an array of numbers");
        return {};
      }
      out.push_back(x.get<double>());
    }
    return out;
  }

  std::vector<std::vector<double>> mat(const Json& v, const std::string& path) {
    std::vector<std::vector<double>> out;
    if (!v.is_array()) {
      fail(path, "expected an array of arrays");
      return out;
    }
    for (std::size_t k = 0; k < v.size(); ++k)
      out.push_back(vec(v[k], path + "[" + std::to_string(k) + "]"));
    return out;
  }
};

const std::set<std::string> kGameIds = {"cournot", "zerosum", "investment",
                                        "coordination_penalty",
                                        "two_route_congestion", "affine_game"};

void parse_game(Reader& r, const Json& v, GameConfig& g) {
  if (v.is_string()) {
    g.id = v.get<std::string>();
  } else if (v.is_object()) {
    r.check_keys(v, "game", {"id", "sigma", "bounds", "n_players", "observation",
                             "alpha", "beta", "true_index"});
    if (!v.contains("id") || !v.at("id").is_string()) {
      r.fail("game.id", "required string");
      return;
    }
    g.id = v.at("id").get<std::string>();
    if (v.contains("sigma")) {
      if (v.at("sigma").is_number())
        g.options.sigma = {v.at("sigma").get<double>()};
      else
        g.options.sigma = r.vec(v.at("sigma"), "game.sigma");
    }
    if (v.contains("bounds")) {
      for (const auto& row : r.mat(v.at("bounds"), "game.bounds")) {
        if (row.size() != 2 || !(row[0] <= row[1])) {
          r.fail("game.bounds", "each entry must be [lower, upper] with lower <= upper");
          break;
        }
        g.options.bounds.push_back(Box{{row[0]}, {row[1]}});
      }
    }
    r.number(v, "n_players", "game", g.options.n_players, 1, 64);
    if (v.contains("observation")) {
      const auto& o = v.at("observation");
      if (o == "sufficient_statistic")
        g.options.observation = ObservationMap::kSufficientStatistic;
      else if (o == "full_payoffs")
        g.options.observation = ObservationMap::kFullPayoffs;
      else
        r.fail("game.observation", "expected 'sufficient_statistic' or 'full_payoffs'");
    }
    if (v.contains("alpha")) {
      const auto& a = v.at("alpha");
      if (!a.is_array()) {
        r.fail("game.alpha", "expected [parameter][player][coordinate] numbers");
      } else {
        for (std::size_t s = 0; s < a.size(); ++s)
          g.alpha.push_back(r.mat(a[s], "game.alpha[" + std::to_string(s) + "]"));
      }
    }
    if (v.contains("beta")) g.beta = r.mat(v.at("beta"), "game.beta");
    r.number(v, "true_index", "game", g.true_index, 0, 1e6);
  } else {
    r.fail("game", "expected a game id or an object");
    return;
  }
  if (!kGameIds.count(g.id)) {
    r.fail("game.id", "unknown game '" + g.id + "'");
    return;
  }
  if (g.id == "affine_game") {
    if (g.alpha.empty() || g.beta.empty())
      r.fail("game", "affine_game needs alpha and beta");
    g.affine_sigma = g.options.sigma;
    if (g.affine_sigma.empty()) g.affine_sigma.assign(g.alpha.size(), 1.0);
    if (g.affine_sigma.size() == 1 && g.alpha.size() > 1)
      g.affine_sigma.assign(g.alpha.size(), g.affine_sigma.front());
  } else if (!g.alpha.empty() || !g.beta.empty()) {
    r.fail("game", "alpha and beta apply only to affine_game");
  }
}

void parse_rule(Reader& r, const Json& v, UpdateRule& rule) {
  std::string kind;
  std::optional<double> alpha;
  if (v.is_string()) {
    kind = v.get<std::string>();
  } else if (v.is_object()) {
    r.check_keys(v, "rule", {"kind", "alpha"});
    if (!v.contains("kind") || !v.at("kind").is_string()) {
      r.fail("rule.kind", "required string");
      return;
    }
    kind = v.at("kind").get<std::string>();
    if (v.contains("alpha")) {
      double a = 0.0;
      r.number(v, "alpha", "rule", a, 0.0, 1.0);
      alpha = a;
    }
  } else {
    r.fail("rule", "expected a rule name or an object");
    return;
  }
  if (kind == "simultaneous") {
    rule = UpdateRule::simultaneous();
  } else if (kind == "sequential") {
    rule = UpdateRule::sequential();
  } else if (kind == "linear") {
    rule = UpdateRule::linear(alpha);
  } else if (kind == "fictitious_play") {
    rule = UpdateRule::fictitious_play();
  } else {
    r.fail("rule.kind", "unknown rule '" + kind + "'");
    return;
  }
  if (alpha && kind != "linear") r.fail("rule.alpha", "applies only to the linear rule");
}

void parse_schedule(Reader& r, const Json& v, UpdateSchedule& schedule) {
  std::string kind;
  if (v.is_string()) {
    kind = v.get<std::string>();
  } else if (v.is_object()) {
    r.check_keys(v, "schedule", {"kind", "batch", "p", "gap"});
    if (!v.contains("kind") || !v.at("kind").is_string()) {
      r.fail("schedule.kind", "required string");
      return;
    }
    kind = v.at("kind").get<std::string>();
  } else {
    r.fail("schedule", "expected a schedule name or an object");
    return;
  }
  try {
    if (kind == "every_stage") {
      schedule = UpdateSchedule::every_stage();
    } else if (kind == "fixed_batch") {
      long batch = 1;
      if (v.is_object()) r.number(v, "batch", "schedule", batch, 1, 1e12);
      schedule = UpdateSchedule::fixed_batch(batch);
    } else if (kind == "geometric") {
      double p = 1.0;
      if (v.is_object()) r.number(v, "p", "schedule", p, 0.0, 1.0);
      schedule = UpdateSchedule::geometric(p);
    } else if (kind == "two_timescale") {
      GapFunction gap;
      if (v.is_object() && v.contains("gap")) {
        const Json& gj = v.at("gap");
        if (r.object(gj, "schedule.gap")) {
          r.check_keys(gj, "schedule.gap", {"scale", "exponent", "offset"});
          r.number(gj, "scale", "schedule.gap", gap.scale);
          r.number(gj, "exponent", "schedule.gap", gap.exponent);
          r.number(gj, "offset", "schedule.gap", gap.offset);
        }
      }
      if (!gap.nondecreasing()) r.fail("schedule.gap", "gap function must be nondecreasing");
      schedule = UpdateSchedule::two_timescale(gap);
    } else {
      r.fail("schedule.kind", "unknown schedule '" + kind + "'");
    }
  } catch (const ContractError& e) {
    r.fail("schedule", e.what());
  }
}

void parse_init(Reader& r, const Json& v, InitConfig& init) {
  if (!r.object(v, "init")) return;
  r.check_keys(v, "init", {"theta", "q", "seed"});
  if (v.contains("theta")) {
    const Json& t = v.at("theta");
    if (t == "uniform") {
      init.theta_kind = InitConfig::Kind::kDefault;
    } else if (t == "random") {
      init.theta_kind = InitConfig::Kind::kRandom;
    } else {
      init.theta_kind = InitConfig::Kind::kExplicit;
      init.theta = r.vec(t, "init.theta");
      double sum = 0.0;
      bool positive = true;
      for (double p : init.theta) {
        sum += p;
        if (!(p > 0.0)) positive = false;
      }
      if (!positive)
        r.fail("init.theta", "initial belief must have full support (every entry > 0)");
      if (!init.theta.empty() && std::abs(sum - 1.0) > 1e-9)
        r.fail("init.theta", "initial belief must sum to 1");
    }
  }
  if (v.contains("q")) {
    const Json& q = v.at("q");
    if (q == "center") {
      init.q_kind = InitConfig::Kind::kDefault;
    } else if (q == "random") {
      init.q_kind = InitConfig::Kind::kRandom;
    } else {
      init.q_kind = InitConfig::Kind::kExplicit;
      init.q = r.mat(q, "init.q");
    }
  }
  if (v.contains("seed")) {
    std::uint64_t s = 0;
    r.number(v, "seed", "init", s, 0);
    init.seed = s;
  }
}

void parse_analysis(Reader& r, const Json& v, ExperimentConfig& c) {
  if (!r.object(v, "analysis")) return;
  r.check_keys(v, "analysis", {"rate", "fixed_points", "stability"});
  if (v.contains("rate") && r.object(v.at("rate"), "analysis.rate")) {
    const Json& a = v.at("rate");
    r.check_keys(a, "analysis.rate", {"parameter", "burn_in"});
    r.number(a, "parameter", "analysis.rate", c.rate.parameter, 0, 1e6);
    r.number(a, "burn_in", "analysis.rate", c.rate.burn_in, 0, 1e12);
  }
  if (v.contains("fixed_points") && r.object(v.at("fixed_points"), "analysis.fixed_points")) {
    const Json& a = v.at("fixed_points");
    const std::string p = "analysis.fixed_points";
    r.check_keys(a, p, {"belief_grid", "strategy_grid", "tol_kl", "tol_eq",
                        "global_runs", "global_horizon", "xi", "n_probe"});
    auto& f = c.fixed_points;
    r.number(a, "belief_grid", p, f.enumeration.belief_grid, 2, 1e4);
    r.number(a, "strategy_grid", p, f.enumeration.strategy_grid, 2, 1e4);
    r.number(a, "tol_kl", p, f.enumeration.tol_kl, 0.0);
    r.number(a, "tol_eq", p, f.enumeration.tol_eq, 0.0);
    r.number(a, "global_runs", p, f.global_runs, 0, 1e7);
    r.number(a, "global_horizon", p, f.global_horizon, 1, 1e12);
    r.number(a, "xi", p, f.xi, 0.0);
    r.number(a, "n_probe", p, f.n_probe, 0, 1e9);
  }
  if (v.contains("stability") && r.object(v.at("stability"), "analysis.stability")) {
    const Json& a = v.at("stability");
    const std::string p = "analysis.stability";
    r.check_keys(a, p, {"cluster", "eps", "delta", "n_probe", "eps_hat", "gamma",
                        "eps1", "delta1", "eps_bar", "eps_x", "n_runs", "horizon"});
    auto& s = c.stability;
    if (a.contains("cluster")) {
      if (a.at("cluster").is_string())
        s.cluster = a.at("cluster").get<std::string>();
      else
        r.fail(p + ".cluster", "expected a cluster id string");
    }
    r.number(a, "eps", p, s.eps, 0.0);
    r.number(a, "delta", p, s.delta, 0.0);
    r.number(a, "n_probe", p, s.n_probe, 0, 1e9);
    r.number(a, "eps_hat", p, s.eps_hat, 0.0);
    r.number(a, "gamma", p, s.gamma, 0.0, 1.0);
    if (a.contains("gamma") && !(s.gamma > 0.0 && s.gamma < 1.0))
      r.fail(p + ".gamma", "must lie strictly between 0 and 1");
    r.number(a, "eps1", p, s.local.eps1, 0.0);
    r.number(a, "delta1", p, s.local.delta1, 0.0);
    r.number(a, "eps_bar", p, s.local.eps_bar, 0.0);
    r.number(a, "eps_x", p, s.local.eps_x, 0.0);
    r.number(a, "n_runs", p, s.local.n_runs, 0, 1e9);
    r.number(a, "horizon", p, s.local.horizon, 1, 1e12);
  }
}

nlohmann::json canonical(const Json& doc) {
  nlohmann::json out = nlohmann::json::parse(doc.dump());
  out.erase("output_dir");
  out.erase("threads");
  return out;
}

Json profile_json(const StrategyProfile& q) {
  Json a = Json::array();
  for (std::size_t i = 0; i < q.n_players(); ++i) a.push_back(q[i]);
  return a;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << text;
  out.close();
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

void write_json(const fs::path& path, const Json& j) { write_text(path, j.dump(2) + "\n"); }

// Creates the output directory and checks or records the config hash.
fs::path prepare_output(const ExperimentConfig& config) {
  fs::path dir(config.output_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir))
    throw IoError("cannot create output directory '" + dir.string() + "'");
  const std::string hash = config_hash(config);
  const fs::path manifest = dir / "manifest.json";
  if (fs::exists(manifest)) {
    std::ifstream in(manifest);
    Json old = Json::parse(in, nullptr, false);
    if (old.is_discarded() || !old.contains("config_hash"))
      throw RunError("unreadable manifest in '" + dir.string() + "'");
    if (old.at("config_hash") != hash)
      throw RunError("config hash mismatch: '" + dir.string() + "' holds results for " +
                     old.at("config_hash").get<std::string>() + ", config is " + hash);
  }
  Json m;
  m["schema"] = "beliefplay/manifest-v1";
  m["config_hash"] = hash;
  m["master_seed"] = config.seeds.front();
  m["config"] = config.document;
  write_json(manifest, m);
  return dir;
}

Json header(const ExperimentConfig& config, const std::string& kind) {
  Json j;
  j["schema"] = "beliefplay/report-v1";
  j["kind"] = kind;
  j["config_hash"] = config_hash(config);
  j["master_seed"] = config.seeds.front();
  j["game"] = config.game.id;
  return j;
}

std::vector<double> dirichlet_draw(std::size_t n, Rng& rng) {
  std::gamma_distribution<double> g(1.0, 1.0);
  std::vector<double> x(n);
  double sum = 0.0;
  for (double& v : x) {
    do v = g(rng);
    while (v <= 0.0);
    sum += v;
  }
  for (double& v : x) v /= sum;
  return x;
}

template <typename Fn>
int guarded(std::ostream& err, Fn&& fn) {
  try {
    fn();
    return kExitOk;
  } catch (const ConfigError& e) {
    for (const auto& msg : e.errors()) err << "error: " << msg << '\n';
    return kExitUsage;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRunError;
  }
}

}  // namespace

ExperimentConfig parse_config(const Json& doc) {
  Reader r;
  ExperimentConfig c;
  if (!doc.is_object()) throw ConfigError({"config must be a JSON object"});
  r.check_keys(doc, "", {"game", "rule", "schedule", "estimator", "init", "horizon",
                         "seed", "seeds", "analysis", "convergence", "threads",
                         "output_dir"});
  if (!doc.contains("game"))
    r.errors.push_back("game: required");
  else
    parse_game(r, doc.at("game"), c.game);
  if (doc.contains("rule")) parse_rule(r, doc.at("rule"), c.rule);
  if (doc.contains("schedule")) parse_schedule(r, doc.at("schedule"), c.schedule);
  if (doc.contains("estimator")) {
    const Json& e = doc.at("estimator");
    if (e == "bayes")
      c.estimator = Estimator::kBayes;
    else if (e == "map")
      c.estimator = Estimator::kMap;
    else if (e == "ols")
      c.estimator = Estimator::kOls;
    else
      r.fail("estimator", "expected 'bayes', 'map' or 'ols'");
  }
  if (c.estimator == Estimator::kOls && !c.game.id.empty() && c.game.id != "affine_game")
    r.fail("estimator", "ols needs the affine observation form (game 'affine_game'), got '" +
                            c.game.id + "'");
  if (doc.contains("init")) parse_init(r, doc.at("init"), c.init);
  r.number(doc, "horizon", "", c.horizon, 1, 1e12);
  if (doc.contains("seed") && doc.contains("seeds"))
    r.fail("seeds", "give either seed or seeds, not both");
  if (doc.contains("seed")) {
    std::uint64_t s = 0;
    r.number(doc, "seed", "", s, 0);
    c.seeds = {s};
  }
  if (doc.contains("seeds")) {
    const Json& s = doc.at("seeds");
    c.seeds.clear();
    if (s.is_array()) {
      for (const auto& x : s) {
        if (!x.is_number_unsigned() && !(x.is_number_integer() && x.get<std::int64_t>() >= 0)) {
          r.fail("seeds", "expected non-negative integers");
          break;
        }
        c.seeds.push_back(x.get<std::uint64_t>());
      }
    } else if (s.is_object()) {
      r.check_keys(s, "seeds", {"start", "count"});
      std::uint64_t start = 0, count = 1;
      r.number(s, "start", "seeds", start, 0);
      r.number(s, "count", "seeds", count, 1, 1e7);
      for (std::uint64_t k = 0; k < count; ++k) c.seeds.push_back(start + k);
    } else {
      r.fail("seeds", "expected an array or {start, count}");
    }
    if (c.seeds.empty()) {
      r.fail("seeds", "at least one seed is required");
      c.seeds = {0};
    }
  }
  if (doc.contains("analysis")) parse_analysis(r, doc.at("analysis"), c);
  if (doc.contains("convergence") && r.object(doc.at("convergence"), "convergence")) {
    const Json& v = doc.at("convergence");
    r.check_keys(v, "convergence", {"window", "tol_q", "tol_theta"});
    r.number(v, "window", "convergence", c.run.window, 1, 1e9);
    r.number(v, "tol_q", "convergence", c.run.tol_q, 0.0);
    r.number(v, "tol_theta", "convergence", c.run.tol_theta, 0.0);
  }
  r.number(doc, "threads", "", c.threads, 0, 4096);
  if (doc.contains("output_dir")) {
    if (doc.at("output_dir").is_string())
      c.output_dir = doc.at("output_dir").get<std::string>();
    else
      r.fail("output_dir", "expected a string");
  }
  c.run.estimator = c.estimator;
  c.document = doc;

  // checks that need the constructed game
  if (r.errors.empty()) {
    try {
      GamePtr game = build_game(c);
      if (c.rule.kind == UpdateRule::Kind::kFictitiousPlay && !game->is_finite())
        r.fail("rule", "fictitious_play needs a finite game");
      if (c.init.theta_kind == InitConfig::Kind::kExplicit &&
          c.init.theta.size() != game->space().size())
        r.fail("init.theta", "expected " + std::to_string(game->space().size()) + " entries");
      if (c.init.q_kind == InitConfig::Kind::kExplicit) {
        StrategyProfile q(c.init.q);
        if (!game->feasible(q, 1e-9))
          r.fail("init.q", "initial strategy profile is outside the strategy sets");
      }
      if (c.rate.parameter >= game->space().size())
        r.fail("analysis.rate.parameter", "parameter index out of range");
    } catch (const std::exception& e) {
      r.fail("game", e.what());
    }
  }
  if (!r.errors.empty()) throw ConfigError(r.errors);
  return c;
}

ExperimentConfig parse_config_text(const std::string& text) {
  Json doc = Json::parse(text, nullptr, false);
  if (doc.is_discarded()) throw ConfigError({"config is not valid JSON"});
  return parse_config(doc);
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

void override_seed(ExperimentConfig& config, std::uint64_t seed) {
  config.seeds = {seed};
  config.document.erase("seeds");
  config.document["seed"] = seed;
}

std::string config_hash(const ExperimentConfig& config) {
  const std::string text = canonical(config.document).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

GamePtr build_game(const ExperimentConfig& config) {
  const auto& g = config.game;
  if (g.id == "cournot") return make_cournot(g.options);
  if (g.id == "zerosum") return make_zerosum_example(g.options);
  if (g.id == "investment") return make_investment(g.options);
  if (g.id == "coordination_penalty") return make_coordination_penalty(g.options);
  if (g.id == "two_route_congestion") return make_two_route_congestion(2, g.options);
  if (g.id == "affine_game") {
    GameOptions opts = g.options;
    opts.sigma.clear();
    return make_affine_game(g.alpha, g.beta, g.affine_sigma, g.true_index, opts);
  }
  throw ContractError("unknown game '" + g.id + "'");
}

InitialState build_init(const ExperimentConfig& config, const GameModel& game,
                        std::uint64_t run_seed) {
  Rng rng = make_rng(config.init.seed.value_or(run_seed), 0x1417);
  const std::size_t ns = game.space().size();
  InitialState init;
  switch (config.init.theta_kind) {
    case InitConfig::Kind::kDefault: init.belief = Belief::uniform(ns); break;
    case InitConfig::Kind::kExplicit: init.belief = Belief::from_probs(config.init.theta); break;
    case InitConfig::Kind::kRandom: init.belief = Belief::from_probs(dirichlet_draw(ns, rng)); break;
  }
  switch (config.init.q_kind) {
    case InitConfig::Kind::kDefault: init.strategy = game.center(); break;
    case InitConfig::Kind::kExplicit: init.strategy = StrategyProfile(config.init.q); break;
    case InitConfig::Kind::kRandom: init.strategy = game.random_profile(rng); break;
  }
  return init;
}

Trajectory run_experiment(const ExperimentConfig& config, const GameModel& game,
                          std::uint64_t run_seed) {
  InitialState init = build_init(config, game, run_seed);
  if (config.schedule.kind() == UpdateSchedule::Kind::kTwoTimescale)
    return run_two_timescale(game, config.rule, config.schedule.gap(), init,
                             config.horizon, run_seed, config.run);
  return run(game, config.rule, config.schedule, init, config.horizon, run_seed,
             config.run);
}

Json certificate_json(const FixedPointCertificate& c) {
  Json j;
  j["belief"] = c.belief.probs();
  j["strategy"] = profile_json(c.strategy);
  j["equivalence_set"] = c.equivalence_set;
  j["support_in_equivalence"] = c.support_in_equivalence;
  j["eq_residual"] = c.eq_residual;
  j["is_complete_info"] = c.is_complete_info;
  j["valid"] = c.valid;
  return j;
}

Json cluster_json(const FixedPointCluster& c) {
  Json j;
  j["id"] = c.id;
  j["complete_info"] = c.complete_info;
  j["size"] = c.members.size();
  j["representative"] = certificate_json(c.rep());
  j["belief_min"] = c.belief_min;
  j["belief_max"] = c.belief_max;
  j["q_min"] = c.q_min;
  j["q_max"] = c.q_max;
  return j;
}

Json thresholds_json(const StabilityThresholds& th) {
  Json j;
  j["rho1"] = th.rho1;
  j["rho2"] = th.rho2;
  j["rho3"] = th.rho3;
  j["theta_bar"] = th.theta_bar;
  j["eps_hat"] = th.eps_hat;
  j["gamma"] = th.gamma;
  j["n_params"] = th.n_params;
  j["n_excluded"] = th.n_excluded;
  j["degenerate"] = th.degenerate;
  return j;
}

Json condition_json(const ConditionEvidence& ev) {
  Json j;
  j["passed"] = ev.passed;
  j["probes"] = ev.probes;
  j["violations"] = ev.violations;
  j["detail"] = ev.detail;
  j["counter_belief"] = ev.counter_belief ? Json(ev.counter_belief->probs()) : Json();
  j["counter_strategy"] =
      ev.counter_strategy ? profile_json(*ev.counter_strategy) : Json();
  if (ev.name == "A2a") j["largest_passing_radius"] = ev.largest_passing_radius;
  return j;
}

Json stability_json(const StabilityReport& rep) {
  Json j;
  j["n_runs"] = rep.n_runs;
  j["stayed"] = rep.stayed;
  j["stay_probability"] = rep.stay_probability;
  j["stay_ci"] = {rep.stay_ci.lo, rep.stay_ci.hi};
  j["escape_probability"] = rep.escape_probability;
  j["escape_ci"] = {rep.escape_ci.lo, rep.escape_ci.hi};
  j["verdict"] = rep.verdict;
  j["radius_shrunk"] = rep.radius_shrunk;
  return j;
}

Json summary_json(const Trajectory& traj, const ExperimentConfig& config,
                  std::uint64_t run_seed, const FixedPointEnumeration* fps) {
  const auto& s = traj.summary;
  Json j;
  j["schema"] = "beliefplay/summary-v1";
  j["config_hash"] = config_hash(config);
  j["master_seed"] = config.seeds.front();
  j["seed"] = run_seed;
  j["game"] = config.game.id;
  j["rule"] = config.rule.name();
  j["estimator"] = estimator_name(config.estimator);
  j["converged"] = s.converged;
  j["t_converged"] = s.t_converged;
  j["T_stop"] = s.t_stop;
  j["final_theta"] = s.final_theta;
  j["final_q"] = profile_json(s.final_q);
  j["eq_distance"] = s.eq_distance;
  j["cycle_detected"] = s.cycle_period > 0;
  j["cycle_period"] = s.cycle_period;
  if (fps && !fps->clusters.empty()) {
    double d = 0.0;
    const FixedPointCluster* c = fps->nearest(s.final_theta, &d);
    Json n;
    n["id"] = c->id;
    n["belief_distance"] = d;
    n["eq_distance"] = s.eq_distance;
    j["nearest_fixed_point"] = n;
  } else {
    j["nearest_fixed_point"] = nullptr;
  }
  if (!s.update_stages.empty()) {
    j["update_stages"] = s.update_stages;
    j["update_eq_distance"] = s.update_eq_distance;
  }
  return j;
}

Json fixed_points_report(const ExperimentConfig& config, const GameModel& game) {
  const auto& f = config.fixed_points;
  FixedPointEnumeration fps = enumerate_fixed_points(game, f.enumeration);
  Json j = header(config, "fixed_points");
  j["enumeration"] = {{"belief_grid", f.enumeration.belief_grid},
                      {"strategy_grid", f.enumeration.strategy_grid},
                      {"tol_kl", f.enumeration.tol_kl},
                      {"tol_eq", f.enumeration.tol_eq},
                      {"beliefs_scanned", fps.beliefs_scanned},
                      {"candidates", fps.candidates}};
  j["family"] = fps.family.empty() ? Json() : Json(fps.family);
  Json clusters = Json::array();
  for (const auto& c : fps.clusters) {
    Json cj = cluster_json(c);
    auto cond = check_complete_info_equilibrium_conditions(game, c.rep(), f.xi, f.n_probe,
                                                           config.seeds.front());
    cj["complete_info_equilibrium"] = {
        {"local_equivalence", cond.local_equivalence},
        {"concavity", cond.concavity},
        {"eq_matches_complete", cond.eq_matches_complete},
        {"holds", cond.local_equivalence && cond.concavity && cond.eq_matches_complete}};
    clusters.push_back(cj);
  }
  j["clusters"] = clusters;
  if (game.analytic_equilibrium(mixture_of(game.space(), Belief::uniform(game.space().size())))) {
    auto cc = check_all_fixed_points_complete(game, f.enumeration.belief_grid, 1000,
                                              config.seeds.front());
    j["all_fixed_points_complete"] = {
        {"value", cc.all_complete},
        {"beliefs_tested", cc.beliefs_tested},
        {"counterexample", cc.counterexample ? certificate_json(*cc.counterexample) : Json()}};
  } else {
    j["all_fixed_points_complete"] = nullptr;
  }
  GlobalStabilityOptions go;
  go.n_runs = f.global_runs;
  go.horizon = f.global_horizon;
  go.seed = config.seeds.front();
  go.rule = config.rule;
  go.threads = config.threads;
  go.enumeration = f.enumeration;
  auto gv = check_global_stability(game, fps, go);
  j["global_stability"] = {
      {"verdict", gv.verdict},
      {"globally_stable", gv.globally_stable},
      {"n_runs", gv.n_runs},
      {"converged", gv.converged},
      {"witness_cluster", gv.witness_cluster.empty() ? Json() : Json(gv.witness_cluster)},
      {"witness", gv.witness ? certificate_json(*gv.witness) : Json()}};
  return j;
}

Json stability_report(const ExperimentConfig& config, const GameModel& game) {
  const auto& st = config.stability;
  FixedPointEnumeration fps = enumerate_fixed_points(game, config.fixed_points.enumeration);
  const FixedPointCluster* cluster = fps.find(st.cluster);
  if (!cluster) {
    std::string known;
    for (const auto& c : fps.clusters) known += (known.empty() ? "" : ", ") + c.id;
    throw RunError("unknown cluster id '" + st.cluster + "' (known: " + known + ")");
  }
  const auto& cert = cluster->rep();
  Json j = header(config, "stability");
  j["cluster"] = cluster->id;
  j["certificate"] = certificate_json(cert);
  auto ev = check_assumption2(game, cert, st.eps, st.delta, st.n_probe, config.seeds.front());
  j["assumption2"] = {{"eps", st.eps},
                      {"delta", st.delta},
                      {"A2a", condition_json(ev.a2a)},
                      {"A2b", condition_json(ev.a2b)},
                      {"A2c", condition_json(ev.a2c)},
                      {"all_passed", ev.all_passed()}};
  j["thresholds"] =
      thresholds_json(stability_thresholds(cert.belief, st.eps_hat, st.gamma,
                                           game.space().size()));
  LocalStabilityOptions lo = st.local;
  lo.seed = config.seeds.front();
  lo.rule = config.rule;
  lo.threads = config.threads;
  Json mc = stability_json(monte_carlo_local_stability(game, cert, lo));
  mc["eps1"] = lo.eps1;
  mc["delta1"] = lo.delta1;
  mc["eps_bar"] = lo.eps_bar;
  mc["eps_x"] = lo.eps_x;
  mc["horizon"] = lo.horizon;
  mc["rule"] = lo.rule.name();
  j["monte_carlo"] = mc;
  return j;
}

Json rate_report(const ExperimentConfig& config, const GameModel& game) {
  const std::size_t s = config.rate.parameter;
  const std::size_t n = config.seeds.size();
  std::vector<Trajectory> trajs(n);
  parallel_for(n, config.threads, [&](std::size_t k) {
    trajs[k] = run_experiment(config, game, config.seeds[k]);
  });
  Json j = header(config, "rate");
  j["parameter"] = s;
  j["burn_in"] = config.rate.burn_in;
  Json per_seed = Json::array();
  double num = 0.0, den = 0.0;
  std::vector<double> q_lim;
  for (std::size_t k = 0; k < n; ++k) {
    RateEstimate r = estimate_convergence_rate(trajs[k], s, config.rate.burn_in);
    // weight by the spread of the fitted stages
    double mt = 0.0, sxx = 0.0;
    const std::size_t fitted = r.points < 2 ? 0 : r.points;
    std::size_t first = static_cast<std::size_t>(std::max<long>(config.rate.burn_in, 0));
    for (std::size_t m = 0; m < fitted; ++m) mt += static_cast<double>(first + 1 + m);
    if (fitted) mt /= static_cast<double>(fitted);
    for (std::size_t m = 0; m < fitted; ++m) {
      const double d = static_cast<double>(first + 1 + m) - mt;
      sxx += d * d;
    }
    if (fitted) {
      num += r.slope * sxx;
      den += sxx;
    }
    auto qf = trajs[k].summary.final_q.flat();
    if (q_lim.empty()) q_lim.assign(qf.size(), 0.0);
    for (std::size_t m = 0; m < qf.size(); ++m) q_lim[m] += qf[m] / static_cast<double>(n);
    per_seed.push_back({{"seed", config.seeds[k]},
                        {"slope", r.slope},
                        {"intercept", r.intercept},
                        {"r2", r.r2},
                        {"points", r.points},
                        {"truncated", r.truncated}});
  }
  if (!(den > 0.0))
    throw RunError("fewer than two stages to fit after burn_in " +
                   std::to_string(config.rate.burn_in));
  const double pooled = num / den;
  StrategyProfile q = StrategyProfile::from_flat(q_lim, game.dims());
  const double kl = kl_divergence(game, game.space().true_index(), s, q);
  j["per_seed"] = per_seed;
  j["pooled_slope"] = pooled;
  j["limit_strategy"] = profile_json(q);
  j["kl_at_limit"] = kl;
  j["predicted_slope"] = -kl;
  if (kl <= config.fixed_points.enumeration.tol_kl) {
    j["relative_error"] = nullptr;
    j["note"] = "equivalent-at-limit";
  } else {
    j["relative_error"] = std::abs(pooled + kl) / kl;
    j["note"] = nullptr;
  }
  return j;
}

int cmd_run(const ExperimentConfig& config, std::ostream& err) {
  return guarded(err, [&] {
    GamePtr game = build_game(config);
    fs::path dir = prepare_output(config);
    std::optional<FixedPointEnumeration> fps;
    try {
      fps = enumerate_fixed_points(*game, config.fixed_points.enumeration);
    } catch (const std::exception&) {
      fps.reset();
    }
    const std::size_t n = config.seeds.size();
    std::vector<Trajectory> trajs(n);
    parallel_for(n, config.threads, [&](std::size_t k) {
      trajs[k] = run_experiment(config, *game, config.seeds[k]);
    });
    const std::string hash = config_hash(config);
    for (std::size_t k = 0; k < n; ++k) {
      const std::uint64_t seed = config.seeds[k];
      fs::path sub = dir / ("seed_" + std::to_string(seed));
      std::error_code ec;
      fs::create_directories(sub, ec);
      if (ec) throw IoError("cannot create '" + sub.string() + "'");
      std::ostringstream csv;
      write_trajectory_csv(trajs[k], csv,
                           {"config_hash=" + hash,
                            "master_seed=" + std::to_string(config.seeds.front()),
                            "seed=" + std::to_string(seed)});
      write_text(sub / "trajectory.csv", csv.str());
      write_json(sub / "summary.json",
                 summary_json(trajs[k], config, seed, fps ? &*fps : nullptr));
    }
  });
}

int cmd_fixed_points(const ExperimentConfig& config, std::ostream& err) {
  return guarded(err, [&] {
    GamePtr game = build_game(config);
    fs::path dir = prepare_output(config);
    write_json(dir / "fixed_points.json", fixed_points_report(config, *game));
  });
}

int cmd_stability(const ExperimentConfig& config, std::ostream& err) {
  return guarded(err, [&] {
    GamePtr game = build_game(config);
    fs::path dir = prepare_output(config);
    write_json(dir / "stability_report.json", stability_report(config, *game));
  });
}

int cmd_rate(const ExperimentConfig& config, std::ostream& err) {
  return guarded(err, [&] {
    GamePtr game = build_game(config);
    fs::path dir = prepare_output(config);
    write_json(dir / "rate.json", rate_report(config, *game));
  });
}

int run_command(const std::string& command, const std::string& config_path,
                const CliOverrides& overrides, std::ostream& err) {
  ExperimentConfig config;
  const int load = guarded(err, [&] { config = load_config(config_path); });
  if (load != kExitOk) return load;
  if (overrides.out_dir) config.output_dir = *overrides.out_dir;
  if (overrides.threads) config.threads = *overrides.threads;
  if (overrides.seed) override_seed(config, *overrides.seed);
  if (command == "run") return cmd_run(config, err);
  if (command == "fixed-points") return cmd_fixed_points(config, err);
  if (command == "stability") return cmd_stability(config, err);
  if (command == "rate") return cmd_rate(config, err);
  err << "error: unknown command '" << command << "'\n";
  return kExitUsage;
}

}  // namespace beliefplay
