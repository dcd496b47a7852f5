#include "photon_limits/config.hpp"

#include "photon_limits/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <sstream>

namespace photon_limits {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

double parse_plain(const std::string& key, const std::string& text) {
  double v = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  const auto [p, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || p != last) throw ConfigError(key + ": expected a number, got '" + text + "'");
  return v;
}

double parse_number(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  if (const auto slash = t.find('/'); slash != std::string::npos) {
    const double den = parse_plain(key, trim(t.substr(slash + 1)));
    if (den == 0.0) throw ConfigError(key + ": division by zero");
    return parse_plain(key, trim(t.substr(0, slash))) / den;
  }
  return parse_plain(key, t);
}

std::size_t parse_count(const std::string& key, const std::string& text) {
  const double v = parse_number(key, text);
  if (!(v >= 0.0) || v != std::floor(v) || v > 1e15) throw ConfigError(key + ": expected a nonnegative integer");
  return static_cast<std::size_t>(v);
}

std::vector<std::string> split(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

using Setter = std::function<void(ExperimentConfig&, const std::string&, const std::string&)>;

Setter number(double ExperimentConfig::*field) {
  return [field](ExperimentConfig& c, const std::string& k, const std::string& v) { c.*field = parse_number(k, v); };
}

Setter count(std::size_t ExperimentConfig::*field) {
  return [field](ExperimentConfig& c, const std::string& k, const std::string& v) { c.*field = parse_count(k, v); };
}

Setter text(std::string ExperimentConfig::*field) {
  return [field](ExperimentConfig& c, const std::string&, const std::string& v) { c.*field = trim(v); };
}

Setter count_list(std::vector<std::size_t> ExperimentConfig::*field) {
  return [field](ExperimentConfig& c, const std::string& k, const std::string& v) {
    std::vector<std::size_t> out;
    for (const auto& item : split(v)) out.push_back(parse_count(k, item));
    c.*field = std::move(out);
  };
}

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"dx", number(&ExperimentConfig::dx)},
      {"dt", number(&ExperimentConfig::dt)},
      {"t_min", number(&ExperimentConfig::t_min)},
      {"t_max", number(&ExperimentConfig::t_max)},
      {"sigma_t", number(&ExperimentConfig::sigma_t)},
      {"alpha0", number(&ExperimentConfig::alpha0)},
      {"lambda_b", number(&ExperimentConfig::lambda_b)},
      {"n_list", count_list(&ExperimentConfig::n_list)},
      {"trials", count(&ExperimentConfig::trials)},
      {"seed",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         const std::string t = trim(v);
         std::uint64_t s = 0;
         const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), s);
         if (ec != std::errc() || p != t.data() + t.size()) throw ConfigError(k + ": expected an unsigned integer");
         c.seed = s;
       }},
      {"solver", [](ExperimentConfig& c, const std::string&, const std::string& v) { c.solver = parse_solver(trim(v)); }},
      {"scene", text(&ExperimentConfig::scene)},
      {"pulse", text(&ExperimentConfig::pulse)},
      {"beta", number(&ExperimentConfig::beta)},
      {"gamma", number(&ExperimentConfig::gamma)},
      {"lambda_dark", number(&ExperimentConfig::lambda_dark)},
      {"floor_sweep",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.floor_sweep.clear();
         for (const auto& item : split(v)) c.floor_sweep.push_back(parse_number(k, item));
       }},
      {"likelihood",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         const std::string t = trim(v);
         if (t == "gaussian") c.likelihood = LikelihoodKind::gaussian;
         else if (t == "exact") c.likelihood = LikelihoodKind::exact;
         else throw ConfigError(k + ": expected gaussian or exact");
       }},
      {"init",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         const std::string t = trim(v);
         if (t == "mean") c.init = InitKind::mean;
         else if (t == "oracle") c.init = InitKind::oracle;
         else throw ConfigError(k + ": expected mean or oracle");
       }},
      {"depth_map", text(&ExperimentConfig::depth_map)},
      {"blur_sigma", number(&ExperimentConfig::blur_sigma)},
      {"grid2d", count(&ExperimentConfig::grid2d)},
      {"bins", count_list(&ExperimentConfig::bins)},
      {"draws", count(&ExperimentConfig::draws)},
      {"resamples", count(&ExperimentConfig::resamples)},
      {"coarse_window", number(&ExperimentConfig::coarse_window)},
  };
  return table;
}

template <class T>
std::string join(const std::vector<T>& v) {
  std::ostringstream os;
  os.precision(17);
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
  return os.str();
}

}  // namespace

std::vector<std::string> ExperimentConfig::validate() const {
  std::vector<std::string> warnings;
  if (!(dx > 0.0 && dx <= 0.5)) throw ConfigError("dx must lie in (0, 0.5]");
  if (!(dt > 0.0)) throw ConfigError("dt must be > 0");
  if (!(t_max > t_min)) throw ConfigError("t_max must exceed t_min");
  if (!(sigma_t > 0.0)) throw ConfigError("sigma_t must be > 0");
  if (!(alpha0 > 0.0)) throw ConfigError("alpha0 must be > 0");
  if (!(lambda_b >= 0.0)) throw ConfigError("lambda_b must be >= 0");
  if (!(beta >= 0.0)) throw ConfigError("beta must be >= 0");
  if (beta > 0.0 && !(gamma > 0.0)) throw ConfigError("gamma must be > 0 when beta > 0");
  if (!(lambda_dark >= 0.0)) throw ConfigError("lambda_dark must be >= 0");
  if (n_list.empty()) throw ConfigError("n_list must not be empty");
  for (std::size_t i = 0; i < n_list.size(); ++i) {
    if (n_list[i] == 0) throw ConfigError("n_list entries must be >= 1");
    if (i > 0 && n_list[i] <= n_list[i - 1]) throw ConfigError("n_list must be strictly ascending");
  }
  if (trials == 0) throw ConfigError("trials must be >= 1");
  for (double f : floor_sweep)
    if (!(f >= 0.0)) throw ConfigError("floor_sweep values must be >= 0");
  static const char* scenes[] = {"sigmoid", "ramp", "flat", "smooth2d", "file"};
  if (std::find(std::begin(scenes), std::end(scenes), scene) == std::end(scenes))
    throw ConfigError("scene must be one of sigmoid, ramp, flat, smooth2d, file");
  if (scene == "file" && depth_map.empty()) throw ConfigError("scene = file needs depth_map");
  if (!(blur_sigma >= 0.0)) throw ConfigError("blur_sigma must be >= 0");
  if (grid2d < 2) throw ConfigError("grid2d must be >= 2");
  if (draws == 0) throw ConfigError("draws must be >= 1");
  if (resamples < 2) throw ConfigError("resamples must be >= 2");
  if (!(coarse_window > 0.0)) throw ConfigError("coarse_window must be > 0");
  if (pulse == "gaussian" && window().too_narrow_for(sigma_t))
    warnings.push_back("6 sigma_t exceeds the observation window");
  return warnings;
}

FluxModel ExperimentConfig::flux_model() const {
  FluxModel m;
  m.alpha = alpha0;
  m.lambda_b = lambda_b;
  if (pulse == "gaussian") {
    m.pulse = GaussianPulse{sigma_t};
  } else {
    m.pulse = load_tabulated_pulse(pulse);
  }
  if (beta > 0.0) m.pileup = PileUp{beta, gamma};
  if (lambda_dark > 0.0) m.dark = DarkCount{lambda_dark, 1};
  m.validate();
  return m;
}

ToaProfile ExperimentConfig::profile() const {
  if (scene == "sigmoid") return make_sigmoid_profile(dx);
  if (scene == "ramp") return make_ramp_profile(dx, 1.0, 5.0);
  if (scene == "flat") return make_flat_profile(dx, 5.0);
  if (scene == "smooth2d") return gaussian_blur(make_smooth_depth_map(grid2d), blur_sigma);
  if (scene == "file") return gaussian_blur(load_profile(depth_map), blur_sigma);
  throw ConfigError("unknown scene '" + scene + "'");
}

void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  const auto it = setters().find(key);
  if (it == setters().end()) throw ConfigError("unknown config key '" + key + "'");
  it->second(cfg, key, value);
}

ExperimentConfig read_config(std::istream& in) {
  ExperimentConfig cfg;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(line_no) + ": expected `key = value`");
    set_config_value(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config: " + path);
  return read_config(in);
}

void write_config(std::ostream& out, const ExperimentConfig& c) {
  const auto old = out.precision(17);
  out << "dx = " << c.dx << "\ndt = " << c.dt << "\nt_min = " << c.t_min << "\nt_max = " << c.t_max
      << "\nsigma_t = " << c.sigma_t << "\nalpha0 = " << c.alpha0 << "\nlambda_b = " << c.lambda_b
      << "\nn_list = " << join(c.n_list) << "\ntrials = " << c.trials << "\nseed = " << c.seed
      << "\nsolver = " << solver_name(c.solver) << "\nscene = " << c.scene << "\npulse = " << c.pulse
      << "\nbeta = " << c.beta << "\ngamma = " << c.gamma << "\nlambda_dark = " << c.lambda_dark
      << "\nfloor_sweep = " << join(c.floor_sweep)
      << "\nlikelihood = " << (c.likelihood == LikelihoodKind::exact ? "exact" : "gaussian")
      << "\ninit = " << (c.init == InitKind::oracle ? "oracle" : "mean") << '\n';
  if (!c.depth_map.empty()) out << "depth_map = " << c.depth_map << '\n';
  out << "blur_sigma = " << c.blur_sigma << "\ngrid2d = " << c.grid2d << "\nbins = " << join(c.bins)
      << "\ndraws = " << c.draws << "\nresamples = " << c.resamples << "\ncoarse_window = " << c.coarse_window
      << '\n';
  out.precision(old);
}

}  // namespace photon_limits
