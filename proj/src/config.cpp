#include "handtrack/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <sstream>

#include "handtrack/errors.hpp"

namespace handtrack {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  std::istringstream in(v);
  in.imbue(std::locale::classic());
  double out;
  if (!(in >> out) || !(in >> std::ws).eof()) throw DataError("config: bad number for " + key);
  return out;
}

long to_long(const std::string& key, const std::string& v) {
  long out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) throw DataError("config: bad integer for " + key);
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw DataError("config: bad boolean for " + key);
}

std::string num(double v) {
  std::ostringstream out;
  out.imbue(std::locale::classic());
  out.precision(std::numeric_limits<double>::max_digits10);
  out << v;
  return out.str();
}

using Setter = std::function<void(TrackerConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"near", [](auto& c, auto& k, auto& v) { c.near = to_double(k, v); }},
      {"far", [](auto& c, auto& k, auto& v) { c.far = to_double(k, v); }},
      {"median_radius", [](auto& c, auto& k, auto& v) { c.median_radius = static_cast<int>(to_long(k, v)); }},
      {"eps_c", [](auto& c, auto& k, auto& v) { c.eps_c = to_double(k, v); }},
      {"min_valid_fraction", [](auto& c, auto& k, auto& v) { c.min_valid_fraction = to_double(k, v); }},
      {"w_collision", [](auto& c, auto& k, auto& v) { c.weights.collision = to_double(k, v); }},
      {"w_limits", [](auto& c, auto& k, auto& v) { c.weights.limits = to_double(k, v); }},
      {"w_smoothness", [](auto& c, auto& k, auto& v) { c.weights.smoothness = to_double(k, v); }},
      {"influence_radius", [](auto& c, auto& k, auto& v) { c.influence_radius = to_double(k, v); }},
      {"prune", [](auto& c, auto& k, auto& v) { c.prune = to_bool(k, v); }},
      {"particles", [](auto& c, auto& k, auto& v) { c.optimizer.particles = static_cast<int>(to_long(k, v)); }},
      {"iterations", [](auto& c, auto& k, auto& v) { c.optimizer.iterations = static_cast<int>(to_long(k, v)); }},
      {"step", [](auto& c, auto& k, auto& v) { c.optimizer.step = to_double(k, v); }},
      {"step_up", [](auto& c, auto& k, auto& v) { c.optimizer.step_up = to_double(k, v); }},
      {"step_down", [](auto& c, auto& k, auto& v) { c.optimizer.step_down = to_double(k, v); }},
      {"alpha_sigma", [](auto& c, auto& k, auto& v) { c.optimizer.alpha_sigma = to_double(k, v); }},
      {"rotation_scale", [](auto& c, auto& k, auto& v) { c.optimizer.rotation_scale = to_double(k, v); }},
      {"conditioning",
       [](auto& c, auto& k, auto& v) {
         if (v == "lever") c.optimizer.conditioning = Conditioning::LeverArm;
         else if (v == "uniform") c.optimizer.conditioning = Conditioning::Uniform;
         else throw DataError("config: bad value for " + k);
       }},
      {"normalized_step", [](auto& c, auto& k, auto& v) { c.optimizer.normalized_step = to_bool(k, v); }},
      {"particle_formula",
       [](auto& c, auto& k, auto& v) {
         if (v == "extrapolate") c.optimizer.formula = ParticleFormula::Extrapolate;
         else if (v == "literal") c.optimizer.formula = ParticleFormula::Literal;
         else throw DataError("config: bad value for " + k);
       }},
      {"threads", [](auto& c, auto& k, auto& v) { c.optimizer.threads = static_cast<int>(to_long(k, v)); }},
      {"seed",
       [](auto& c, auto& k, auto& v) {
         const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), c.seed);
         if (ec != std::errc() || p != v.data() + v.size()) throw DataError("config: bad integer for " + k);
       }},
      {"initial_pose",
       [](auto& c, auto& k, auto& v) {
         std::istringstream in(v);
         in.imbue(std::locale::classic());
         for (int j = 0; j < kNumDofs; ++j) {
           if (!(in >> c.initial_pose[j])) throw DataError("config: " + k + " needs 26 values");
         }
         if (!(in >> std::ws).eof()) throw DataError("config: " + k + " needs 26 values");
       }},
  };
  return table;
}

std::string canonical(const TrackerConfig& cfg, bool with_threads) {
  std::ostringstream out;
  out << "near = " << num(cfg.near) << '\n'
      << "far = " << num(cfg.far) << '\n'
      << "median_radius = " << cfg.median_radius << '\n'
      << "eps_c = " << num(cfg.eps_c) << '\n'
      << "min_valid_fraction = " << num(cfg.min_valid_fraction) << '\n'
      << "w_collision = " << num(cfg.weights.collision) << '\n'
      << "w_limits = " << num(cfg.weights.limits) << '\n'
      << "w_smoothness = " << num(cfg.weights.smoothness) << '\n'
      << "influence_radius = " << num(cfg.influence_radius) << '\n'
      << "prune = " << (cfg.prune ? "true" : "false") << '\n'
      << "particles = " << cfg.optimizer.particles << '\n'
      << "iterations = " << cfg.optimizer.iterations << '\n'
      << "step = " << num(cfg.optimizer.step) << '\n'
      << "step_up = " << num(cfg.optimizer.step_up) << '\n'
      << "step_down = " << num(cfg.optimizer.step_down) << '\n'
      << "alpha_sigma = " << num(cfg.optimizer.alpha_sigma) << '\n'
      << "rotation_scale = " << num(cfg.optimizer.rotation_scale) << '\n'
      << "conditioning = "
      << (cfg.optimizer.conditioning == Conditioning::LeverArm ? "lever" : "uniform") << '\n'
      << "normalized_step = " << (cfg.optimizer.normalized_step ? "true" : "false") << '\n'
      << "particle_formula = "
      << (cfg.optimizer.formula == ParticleFormula::Extrapolate ? "extrapolate" : "literal") << '\n';
  if (with_threads) out << "threads = " << cfg.optimizer.threads << '\n';
  out << "seed = " << cfg.seed << '\n' << "initial_pose =";
  for (int j = 0; j < kNumDofs; ++j) out << ' ' << num(cfg.initial_pose[j]);
  out << '\n';
  return out.str();
}

}  // namespace

TrackerConfig parse_tracker_config(std::istream& in) {
  TrackerConfig cfg;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw DataError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = setters().find(key);
    if (it == setters().end()) throw DataError("config: unknown key '" + key + "'");
    it->second(cfg, key, value);
  }
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("config: ") + e.what());
  }
  return cfg;
}

TrackerConfig load_tracker_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config: " + path.string());
  return parse_tracker_config(in);
}

std::string format_tracker_config(const TrackerConfig& cfg) { return canonical(cfg, true); }

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string config_hash(const TrackerConfig& cfg) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a(canonical(cfg, false))));
  return buf;
}

}  // namespace handtrack
