#include "harness/config.hpp"

#include "torsionlab/errors.hpp"
#include "torsionlab/stability.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace torsionlab::harness {

using nlohmann::json;

namespace {

// Reads one JSON object, remembering which keys were consumed so that unknown
// (typically misspelled) keys are rejected with their path.
class Node {
 public:
  Node(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
  }

  std::string path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  bool has(const std::string& key) const { return j_.contains(key) && !j_.at(key).is_null(); }

  const json& raw(const std::string& key) {
    used_.insert(key);
    return j_.at(key);
  }

  double number(const std::string& key, double fallback) {
    used_.insert(key);
    if (!has(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_number()) throw ConfigError(path(key), "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ConfigError(path(key), "must be finite");
    return d;
  }

  double positive(const std::string& key, double fallback) {
    const double d = number(key, fallback);
    if (!(d > 0.0)) throw ConfigError(path(key), "must be positive");
    return d;
  }

  int integer(const std::string& key, int fallback, int min_value) {
    used_.insert(key);
    if (!has(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_number_integer()) throw ConfigError(path(key), "expected an integer");
    const auto i = v.get<long long>();
    if (i < min_value || i > 1'000'000'000)
      throw ConfigError(path(key), "must be in [" + std::to_string(min_value) + ", 1e9]");
    return static_cast<int>(i);
  }

  std::string string(const std::string& key, const std::string& fallback) {
    used_.insert(key);
    if (!has(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_string()) throw ConfigError(path(key), "expected a string");
    return v.get<std::string>();
  }

  std::optional<Node> child(const std::string& key) {
    used_.insert(key);
    if (!has(key)) return std::nullopt;
    return Node(j_.at(key), path(key));
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!used_.count(it.key())) throw ConfigError(path(it.key()), "unknown key");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

template <class T>
T pick(const std::string& path, const std::string& value,
       const std::vector<std::pair<std::string, T>>& options) {
  for (const auto& [name, v] : options)
    if (name == value) return v;
  std::string list;
  for (const auto& o : options) list += (list.empty() ? "" : ", ") + o.first;
  throw ConfigError(path, "'" + value + "' is not one of {" + list + "}");
}

const std::vector<std::pair<std::string, Experiment>> kExperiments = {
    {"identities", Experiment::kIdentities},
    {"stability", Experiment::kStability},
    {"cauchy-stability", Experiment::kCauchyStability},
    {"shapeflow", Experiment::kShapeflow},
    {"poincare", Experiment::kPoincare}};

const std::vector<std::pair<std::string, SweepAxis>> kAxes = {
    {"hole_radius", SweepAxis::kHoleRadius},
    {"epsilon", SweepAxis::kEpsilon},
    {"outer_radius", SweepAxis::kOuterRadius},
    {"resolution_scale", SweepAxis::kResolutionScale},
    {"cauchy_c", SweepAxis::kCauchyC}};

geometry::DomainSpec parse_domain(Node& root) {
  geometry::DomainSpec spec;
  if (auto d = root.child("domain")) {
    spec.outer_radius = d->positive("outer_radius", 1.0);
    if (d->has("fourier_modes")) {
      const json& modes = d->raw("fourier_modes");
      if (!modes.is_array()) throw ConfigError(d->path("fourier_modes"), "expected an array");
      for (std::size_t i = 0; i < modes.size(); ++i) {
        Node m(modes[i], d->path("fourier_modes") + "[" + std::to_string(i) + "]");
        spec.modes.push_back(geometry::FourierMode{m.integer("k", 1, 1), m.number("cos", 0.0),
                                                   m.number("sin", 0.0)});
        m.finish();
      }
    }
    d->finish();
  }
  if (root.has("holes")) {
    const json& holes = root.raw("holes");
    if (!holes.is_array()) throw ConfigError("holes", "expected an array");
    for (std::size_t i = 0; i < holes.size(); ++i) {
      const std::string p = "holes[" + std::to_string(i) + "]";
      Node h(holes[i], p);
      geometry::Hole hole;
      if (!h.has("center")) throw ConfigError(h.path("center"), "required");
      const json& c = h.raw("center");
      if (!c.is_array() || c.size() != 2 || !c[0].is_number() || !c[1].is_number())
        throw ConfigError(h.path("center"), "expected [x, y]");
      hole.center = Vec2(c[0].get<double>(), c[1].get<double>());
      if (!h.has("radius")) throw ConfigError(h.path("radius"), "required");
      hole.radius = h.positive("radius", 0.0);
      if (h.has("g")) hole.g = h.number("g", 0.0);
      h.finish();
      spec.holes.push_back(hole);
    }
  }
  return spec;
}

void check_geometry(const ScenarioConfig& cfg) {
  geometry::DomainSpec spec = cfg.domain;
  if (cfg.experiment == Experiment::kCauchyStability) {
    // Carved holes carry no data; Dirichlet experiments need it on every hole.
    for (auto& h : spec.holes) h.g.reset();
  } else {
    for (std::size_t i = 0; i < spec.holes.size(); ++i)
      if (!spec.holes[i].g) throw ConfigError("holes[" + std::to_string(i) + "].g", "required for this experiment");
  }
  try {
    geometry::validate(spec);
  } catch (const InvalidInput& e) {
    const std::string what = e.what();
    throw ConfigError(what.rfind("holes", 0) == 0 ? what.substr(0, what.find_first_of(" .")) : "domain", what);
  }
  if (cfg.field == FieldSource::kRadial) {
    if (!spec.modes.empty()) throw ConfigError("field", "radial field requires domain.fourier_modes to be empty");
    for (std::size_t i = 0; i < spec.holes.size(); ++i)
      if (spec.holes[i].center.norm() != 0.0)
        throw ConfigError("holes[" + std::to_string(i) + "].center", "radial field requires centred holes");
  }
  if (cfg.experiment == Experiment::kShapeflow) {
    for (std::size_t i = 0; i < spec.holes.size(); ++i)
      if (*spec.holes[i].g != 0.0) throw ConfigError("holes[" + std::to_string(i) + "].g", "shapeflow requires g = 0");
  }
}

}  // namespace

std::string to_string(Experiment e) {
  for (const auto& [n, v] : kExperiments)
    if (v == e) return n;
  return "?";
}

std::string to_string(SweepAxis a) {
  for (const auto& [n, v] : kAxes)
    if (v == a) return n;
  return "?";
}

ScenarioConfig parse_config(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError("<document>", std::string("not valid JSON: ") + e.what());
  }
  Node root(doc, "");
  ScenarioConfig cfg;
  root.integer("schema_version", 1, 1);
  if (!root.has("experiment")) throw ConfigError("experiment", "required");
  cfg.experiment = pick("experiment", root.string("experiment", ""), kExperiments);
  cfg.field = pick<FieldSource>("field", root.string("field", "dirichlet"),
                                {{"dirichlet", FieldSource::kDirichlet}, {"radial", FieldSource::kRadial}});
  cfg.domain = parse_domain(root);
  if (cfg.field == FieldSource::kRadial) {
    // The closed-form field fixes the hole data; fill it in or check it.
    const double R = cfg.domain.outer_radius;
    for (std::size_t i = 0; i < cfg.domain.holes.size(); ++i) {
      auto& h = cfg.domain.holes[i];
      const double g = (h.radius * h.radius - R * R) / 4.0;
      if (h.g && std::abs(*h.g - g) > 1e-12 * R * R)
        throw ConfigError("holes[" + std::to_string(i) + "].g",
                          "radial field requires g = (radius^2 - R^2)/4 (or omit g)");
      h.g = g;
    }
  }

  if (auto s = root.child("solver")) {
    cfg.n_src = s->integer("n_src", cfg.n_src, 16);
    cfg.offset_ratio = s->number("offset_ratio", cfg.offset_ratio);
    if (!(cfg.offset_ratio > 1.0)) throw ConfigError("solver.offset_ratio", "must be > 1");
    cfg.tikhonov = s->number("tikhonov", cfg.tikhonov);
    if (!(cfg.tikhonov >= 0.0)) throw ConfigError("solver.tikhonov", "must be >= 0");
    s->finish();
  }
  if (auto q = root.child("quadrature")) {
    cfg.n_theta = q->integer("n_theta", cfg.n_theta, 64);
    if (cfg.n_theta % 2) throw ConfigError("quadrature.n_theta", "must be even");
    cfg.n_r = q->integer("n_r", cfg.n_r, 4);
    q->finish();
  }
  if (auto c = root.child("cauchy")) {
    cfg.cauchy_c = c->positive("c", cfg.cauchy_c);
    c->finish();
  }
  if (auto s = root.child("stability")) {
    cfg.n_samples = s->integer("n_samples", cfg.n_samples, 1);
    cfg.regime = s->string("regime", cfg.regime);
    pick<int>("stability.regime", cfg.regime, {{"sphere", 0}, {"john", 1}});
    if (s->has("theta")) {
      cfg.theta = s->number("theta", 0.5);
      if (!(*cfg.theta > 0.0 && *cfg.theta < 1.0)) throw ConfigError("stability.theta", "must lie in (0, 1)");
    }
    s->finish();
  }
  if (auto f = root.child("shapeflow")) {
    cfg.max_iters = f->integer("max_iters", cfg.max_iters, 0);
    cfg.n_modes = f->integer("n_modes", cfg.n_modes, 1);
    f->finish();
  }
  if (auto p = root.child("poincare")) {
    cfg.poincare_r = p->positive("r", cfg.poincare_r);
    cfg.poincare_p = p->positive("p", cfg.poincare_p);
    cfg.poincare_alpha = p->number("alpha", cfg.poincare_alpha);
    cfg.poincare_fields = p->integer("n_fields", cfg.poincare_fields, 1);
    p->finish();
    if (cfg.experiment == Experiment::kPoincare) {
      try {
        stability::validate_exponents(kDim, cfg.poincare_r, cfg.poincare_p, cfg.poincare_alpha);
      } catch (const InvalidInput& e) {
        throw ConfigError("poincare", e.what());
      }
    }
  }
  if (auto s = root.child("sweep")) {
    SweepConfig sw;
    if (!s->has("axis")) throw ConfigError("sweep.axis", "required");
    sw.axis = pick("sweep.axis", s->string("axis", ""), kAxes);
    if (!s->has("values")) throw ConfigError("sweep.values", "required");
    const json& vals = s->raw("values");
    if (!vals.is_array()) throw ConfigError("sweep.values", "expected an array");
    for (std::size_t i = 0; i < vals.size(); ++i) {
      const std::string p = "sweep.values[" + std::to_string(i) + "]";
      if (!vals[i].is_number()) throw ConfigError(p, "expected a number");
      const double v = vals[i].get<double>();
      if (!std::isfinite(v)) throw ConfigError(p, "must be finite");
      if (i > 0 && !(v > sw.values.back())) throw ConfigError(p, "values must be strictly increasing");
      sw.values.push_back(v);
    }
    if (sw.values.empty()) throw ConfigError("sweep.values", "must not be empty");
    s->finish();
    cfg.sweep = sw;
  }
  if (root.has("seed")) {
    const json& v = root.raw("seed");
    if (!v.is_number_unsigned()) throw ConfigError("seed", "expected a non-negative integer");
    cfg.seed = v.get<std::uint64_t>();
  }
  cfg.output_dir = root.string("output_dir", cfg.output_dir.string());
  if (auto t = root.child("tolerances")) {
    auto& tol = cfg.tolerances;
    tol.identity_rel_residual = t->positive("identity_rel_residual", tol.identity_rel_residual);
    tol.overdetermination = t->positive("overdetermination", tol.overdetermination);
    tol.shape_std_ratio = t->positive("shape_std_ratio", tol.shape_std_ratio);
    tol.volume_drift = t->positive("volume_drift", tol.volume_drift);
    tol.energy_monotonicity = t->positive("energy_monotonicity", tol.energy_monotonicity);
    t->finish();
  }
  root.finish();

  check_geometry(cfg);
  if (cfg.sweep) {
    for (std::size_t i = 0; i < cfg.sweep->values.size(); ++i) {
      try {
        check_geometry(instance_config(cfg, cfg.sweep->values[i]));
      } catch (const ConfigError& e) {
        throw ConfigError("sweep.values[" + std::to_string(i) + "]", e.what());
      }
    }
  }
  cfg.canonical = doc.dump();
  return cfg;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<file>", "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

ScenarioConfig instance_config(const ScenarioConfig& base, double v) {
  ScenarioConfig cfg = base;
  if (!base.sweep) return cfg;
  switch (base.sweep->axis) {
    case SweepAxis::kHoleRadius:
      if (cfg.domain.holes.empty()) throw ConfigError("sweep.axis", "hole_radius needs at least one hole");
      for (auto& h : cfg.domain.holes) {
        h.radius = v;
        // On the radial family the hole datum follows the closed form.
        if (cfg.field == FieldSource::kRadial && h.g) {
          const double R = cfg.domain.outer_radius;
          h.g = (v * v - R * R) / 4.0;
        }
      }
      break;
    case SweepAxis::kEpsilon:
      if (cfg.domain.modes.empty()) throw ConfigError("sweep.axis", "epsilon needs domain.fourier_modes[0]");
      cfg.domain.modes[0].cos_amp = v;
      break;
    case SweepAxis::kOuterRadius:
      cfg.domain.outer_radius = v;
      break;
    case SweepAxis::kResolutionScale:
      if (!(v > 0.0)) throw ConfigError("sweep.values", "resolution_scale must be positive");
      cfg.n_theta = 2 * static_cast<int>(std::lround(cfg.n_theta * v / 2.0));
      cfg.n_r = static_cast<int>(std::lround(cfg.n_r * v));
      break;
    case SweepAxis::kCauchyC:
      if (!(v > 0.0)) throw ConfigError("sweep.values", "cauchy_c must be positive");
      cfg.cauchy_c = v;
      break;
  }
  return cfg;
}

}  // namespace torsionlab::harness
