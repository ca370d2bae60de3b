// JSON run-config: one document mirroring the configuration structs.
//
// Unknown keys are rejected and every error names the offending field path,
// e.g. "drl.noise.kind: expected one of ou, gaussian".

#ifndef SEGFIT_CONFIG_HPP
#define SEGFIT_CONFIG_HPP

#include "segfit/bench.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <stdexcept>
#include <string>

namespace segfit {

class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& path, const std::string& what)
      : std::runtime_error((path.empty() ? std::string("<root>") : path) + ": " + what), path_(path) {}
  [[nodiscard]] const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

namespace detail {

using nlohmann::json;

inline std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

/// Reads one JSON object, tracking which keys were consumed.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_, "expected an object");
  }

  [[nodiscard]] const std::string& path() const noexcept { return path_; }

  template <typename T>
  void get(const std::string& key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    read(j_.at(key), join(path_, key), out);
  }

  template <typename F>
  void object(const std::string& key, F&& f) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    ObjectReader sub(j_.at(key), join(path_, key));
    f(sub);
    sub.finish();
  }

  [[nodiscard]] bool has(const std::string& key) const { return j_.contains(key); }

  [[nodiscard]] const json& raw(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }

  void finish() const {
    for (const auto& [k, v] : j_.items())
      if (!seen_.count(k)) throw ConfigError(join(path_, k), "unknown key");
  }

  static void read(const json& v, const std::string& p, double& out) {
    if (!v.is_number()) throw ConfigError(p, "expected a number");
    out = v.get<double>();
  }
  static void read(const json& v, const std::string& p, bool& out) {
    if (!v.is_boolean()) throw ConfigError(p, "expected a boolean");
    out = v.get<bool>();
  }
  static void read(const json& v, const std::string& p, std::string& out) {
    if (!v.is_string()) throw ConfigError(p, "expected a string");
    out = v.get<std::string>();
  }
  template <typename I>
    requires std::is_integral_v<I>
  static void read(const json& v, const std::string& p, I& out) {
    if (!v.is_number_integer()) throw ConfigError(p, "expected an integer");
    if constexpr (std::is_unsigned_v<I>) {
      if (v.get<std::int64_t>() < 0 && !v.is_number_unsigned())
        throw ConfigError(p, "expected a nonnegative integer");
    }
    out = v.get<I>();
  }
  template <typename T>
  static void read(const json& v, const std::string& p, std::optional<T>& out) {
    if (v.is_null()) {
      out.reset();
      return;
    }
    T tmp{};
    read(v, p, tmp);
    out = tmp;
  }
  template <typename T>
  static void read(const json& v, const std::string& p, std::vector<T>& out) {
    if (!v.is_array()) throw ConfigError(p, "expected an array");
    out.clear();
    for (std::size_t i = 0; i < v.size(); ++i) {
      T tmp{};
      read(v[i], p + "[" + std::to_string(i) + "]", tmp);
      out.push_back(tmp);
    }
  }
  static void read(const json& v, const std::string& p, Interval& out) {
    std::vector<double> pair;
    read(v, p, pair);
    if (pair.size() != 2) throw ConfigError(p, "expected [lo, hi]");
    out = {pair[0], pair[1]};
  }
  static void read(const json& v, const std::string& p, Point& out) {
    std::vector<double> xyz;
    read(v, p, xyz);
    if (xyz.size() != 3) throw ConfigError(p, "expected [x, y, z]");
    out = Point(xyz[0], xyz[1], xyz[2]);
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

inline void read_scene(ObjectReader& r, SceneConfig& s) {
  r.get("n_segments", s.n_segments);
  r.get("ground_truth_x", s.ground_truth_x);
  Interval y{s.y_min, s.y_max};
  r.get("y_extent", y);
  s.y_min = y.lo;
  s.y_max = y.hi;
  r.get("z_plane", s.z_plane);
  r.get("points_per_segment", s.points_per_segment);
  r.get("jitter_sigma", s.jitter_sigma);
  r.get("outlier_count", s.outlier_count);
  r.object("outlier_box", [&](ObjectReader& b) {
    b.get("min", s.outlier_box.min);
    b.get("max", s.outlier_box.max);
  });
  r.get("seed", s.seed);
}

inline void read_rule(ObjectReader& r, RuleConfig& rule) {
  std::string kind = to_string(rule.kind);
  r.get("kind", kind);
  try {
    rule.kind = rule_kind_from_string(kind);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(join(r.path(), "kind"), e.what());
  }
  r.get("bounds", rule.bounds);
  r.get("sample_step", rule.sample_step);
  r.get("y_min", rule.y_min);
  r.get("y_max", rule.y_max);
  r.get("z_plane", rule.z_plane);
}

inline void read_drl(ObjectReader& r, DrlConfig& d) {
  r.get("j_max", d.j_max);
  r.get("actor_hidden", d.actor_hidden);
  r.get("critic_hidden", d.critic_hidden);
  r.get("actor_step", d.actor_step);
  r.get("critic_step", d.critic_step);
  r.get("gamma", d.gamma);
  r.get("tau", d.tau);
  r.get("replay_capacity", d.replay_capacity);
  r.get("minibatch", d.minibatch);
  r.get("warmup", d.warmup);
  r.get("updates_per_step", d.updates_per_step);
  r.object("noise", [&](ObjectReader& n) {
    std::string kind = d.noise.kind == NoiseKind::Gaussian ? "gaussian" : "ou";
    n.get("kind", kind);
    if (kind == "ou")
      d.noise.kind = NoiseKind::OrnsteinUhlenbeck;
    else if (kind == "gaussian")
      d.noise.kind = NoiseKind::Gaussian;
    else
      throw ConfigError(join(n.path(), "kind"), "expected one of ou, gaussian");
    n.get("ou_theta", d.noise.ou_theta);
    n.get("ou_sigma", d.noise.ou_sigma);
    n.get("gauss_sigma", d.noise.gauss_sigma);
    n.get("decay", d.noise.decay);
  });
  r.get("seed", d.seed);
}

inline void read_cs(ObjectReader& r, CsConfig& c) {
  r.get("population", c.population);
  r.get("pa", c.pa);
  r.get("levy_beta", c.levy_beta);
  r.get("step_scale", c.step_scale);
  r.get("j_max", c.j_max);
  r.get("seed", c.seed);
}

/// Rewraps struct validation failures with the top-level section as path.
template <typename F>
void validate_as(const std::string& path, F&& f) {
  try {
    f();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(path, e.what());
  }
}

}  // namespace detail

/// Parses a run-config document; absent keys keep their defaults.
inline ExperimentConfig parse_config(const nlohmann::json& j) {
  using detail::ObjectReader;
  ExperimentConfig cfg;
  ObjectReader root(j, "");
  root.object("scene", [&](ObjectReader& r) { detail::read_scene(r, cfg.scene); });
  root.object("rule", [&](ObjectReader& r) { detail::read_rule(r, cfg.rule); });
  root.object("similarity", [&](ObjectReader& r) { r.get("sigma", cfg.sigma); });
  root.get("n_models", cfg.n_models);
  root.object("drl", [&](ObjectReader& r) { detail::read_drl(r, cfg.drl); });
  root.object("cs", [&](ObjectReader& r) { detail::read_cs(r, cfg.cs); });
  root.get("runs", cfg.runs);
  root.get("seed", cfg.seed);
  root.get("output_dir", cfg.output_dir);
  root.get("timing", cfg.timing);
  root.finish();

  detail::validate_as("scene", [&] { cfg.scene.validate(); });
  detail::validate_as("drl", [&] { cfg.drl.validate(); });
  detail::validate_as("cs", [&] { cfg.cs.validate(); });
  detail::validate_as("rule", [&] {
    if (cfg.rule.bounds) {
      // Constructing the spec checks lo < hi, step and y-extent.
      RuleSpec(cfg.rule.kind, *cfg.rule.bounds, cfg.rule.sample_step, cfg.rule.y_min, cfg.rule.y_max,
               cfg.rule.z_plane);
    } else if (!(cfg.rule.sample_step > 0.0) || !(cfg.rule.y_min < cfg.rule.y_max)) {
      throw std::invalid_argument("invalid sample_step or y extent");
    }
  });
  detail::validate_as("", [&] { cfg.validate(); });
  return cfg;
}

inline ExperimentConfig parse_config(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("", std::string("malformed JSON: ") + e.what());
  }
  return parse_config(j);
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_config(text);
}

inline nlohmann::json to_json(const ExperimentConfig& c) {
  using nlohmann::json;
  json j;
  const auto& s = c.scene;
  j["scene"] = {{"n_segments", s.n_segments},
                {"ground_truth_x", s.ground_truth_x},
                {"y_extent", {s.y_min, s.y_max}},
                {"z_plane", s.z_plane},
                {"points_per_segment", s.points_per_segment},
                {"jitter_sigma", s.jitter_sigma},
                {"outlier_count", s.outlier_count},
                {"outlier_box",
                 {{"min", {s.outlier_box.min.x(), s.outlier_box.min.y(), s.outlier_box.min.z()}},
                  {"max", {s.outlier_box.max.x(), s.outlier_box.max.y(), s.outlier_box.max.z()}}}},
                {"seed", s.seed}};
  json rule = {{"kind", to_string(c.rule.kind)},
               {"sample_step", c.rule.sample_step},
               {"y_min", c.rule.y_min},
               {"y_max", c.rule.y_max},
               {"z_plane", c.rule.z_plane}};
  if (c.rule.bounds) {
    json b = json::array();
    for (const auto& iv : *c.rule.bounds) b.push_back({iv.lo, iv.hi});
    rule["bounds"] = b;
  }
  j["rule"] = rule;
  j["similarity"] = json::object();
  if (c.sigma) j["similarity"]["sigma"] = *c.sigma;
  if (c.n_models) j["n_models"] = *c.n_models;
  const auto& d = c.drl;
  j["drl"] = {{"j_max", d.j_max},
              {"actor_hidden", d.actor_hidden},
              {"critic_hidden", d.critic_hidden},
              {"actor_step", d.actor_step},
              {"critic_step", d.critic_step},
              {"gamma", d.gamma},
              {"tau", d.tau},
              {"replay_capacity", d.replay_capacity},
              {"minibatch", d.minibatch},
              {"warmup", d.warmup},
              {"updates_per_step", d.updates_per_step},
              {"noise",
               {{"kind", d.noise.kind == NoiseKind::Gaussian ? "gaussian" : "ou"},
                {"ou_theta", d.noise.ou_theta},
                {"ou_sigma", d.noise.ou_sigma},
                {"gauss_sigma", d.noise.gauss_sigma},
                {"decay", d.noise.decay}}},
              {"seed", d.seed}};
  j["cs"] = {{"population", c.cs.population}, {"pa", c.cs.pa},
             {"levy_beta", c.cs.levy_beta},   {"step_scale", c.cs.step_scale},
             {"j_max", c.cs.j_max},           {"seed", c.cs.seed}};
  j["runs"] = c.runs;
  j["seed"] = c.seed;
  j["output_dir"] = c.output_dir;
  j["timing"] = c.timing;
  return j;
}

/// {"thetas": [[...], ...], "score": real}
inline nlohmann::json solution_json(const Solution& s, double score) {
  return {{"thetas", s.thetas}, {"score", score}};
}

inline std::pair<Solution, double> solution_from_json(const nlohmann::json& j) {
  detail::ObjectReader r(j, "");
  Solution s;
  double score = 0.0;
  r.get("thetas", s.thetas);
  r.get("score", score);
  r.finish();
  return {s, score};
}

}  // namespace segfit

#endif  // SEGFIT_CONFIG_HPP
