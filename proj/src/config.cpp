#include "toda/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

#include "toda/curve.hpp"
#include "toda/error.hpp"

namespace toda {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& text) {
  const std::string t = trim(text);
  double v = 0.0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (res.ec != std::errc{} || res.ptr != t.data() + t.size()) throw ConfigError("not a number: '" + text + "'");
  return v;
}

template <typename Int>
Int to_integer(const std::string& text) {
  const std::string t = trim(text);
  Int v = 0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (res.ec != std::errc{} || res.ptr != t.data() + t.size()) throw ConfigError("not an integer: '" + text + "'");
  return v;
}

bool to_bool(const std::string& text) {
  const std::string t = trim(text);
  if (t == "true" || t == "1" || t == "yes") return true;
  if (t == "false" || t == "0" || t == "no") return false;
  throw ConfigError("not a boolean: '" + text + "'");
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<double> to_double_list(const std::string& text) {
  std::vector<double> out;
  for (const std::string& item : split_list(text)) out.push_back(to_double(item));
  return out;
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) out += (i ? "," : "") + items[i];
  return out;
}

std::string join(const std::vector<double>& items) {
  std::vector<std::string> text;
  for (const double v : items) text.push_back(format_double(v));
  return join(text);
}

std::string optional_int(const std::optional<int>& v) { return v ? std::to_string(*v) : "auto"; }

std::optional<int> to_optional_int(const std::string& text) {
  if (trim(text) == "auto" || trim(text).empty()) return std::nullopt;
  return to_integer<int>(text);
}

std::string width_name(PacketWidth w) { return w == PacketWidth::unit ? "unit" : "mass_matched"; }

PacketWidth to_width(const std::string& text) {
  const std::string t = trim(text);
  if (t == "unit") return PacketWidth::unit;
  if (t == "mass_matched") return PacketWidth::mass_matched;
  throw ConfigError("unknown packet width '" + text + "' (expected unit or mass_matched)");
}

struct Field {
  const char* section;
  const char* key;
  std::function<std::string(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, const std::string&)> set;
};

#define TODA_DOUBLE(SEC, KEY, MEMBER)                                                 \
  Field {                                                                             \
    SEC, KEY, [](const ExperimentConfig& c) { return format_double(c.MEMBER); },      \
        [](ExperimentConfig& c, const std::string& v) { c.MEMBER = to_double(v); }    \
  }
#define TODA_SIZE(SEC, KEY, MEMBER)                                                          \
  Field {                                                                                    \
    SEC, KEY, [](const ExperimentConfig& c) { return std::to_string(c.MEMBER); },            \
        [](ExperimentConfig& c, const std::string& v) { c.MEMBER = to_integer<std::size_t>(v); } \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      {"experiment", "presets", [](const ExperimentConfig& c) { return join(c.presets); },
       [](ExperimentConfig& c, const std::string& v) { c.presets = split_list(v); }},
      TODA_DOUBLE("experiment", "energy", energy),
      TODA_DOUBLE("experiment", "chaotic_m2", chaotic_m2),
      TODA_DOUBLE("experiment", "custom_m1", custom_params.m1),
      TODA_DOUBLE("experiment", "custom_m2", custom_params.m2),
      TODA_DOUBLE("experiment", "custom_energy", custom_params.energy),
      TODA_DOUBLE("experiment", "custom_q1", custom_center.q1),
      TODA_DOUBLE("experiment", "custom_q2", custom_center.q2),
      TODA_DOUBLE("experiment", "custom_p1", custom_center.p1),
      TODA_DOUBLE("experiment", "custom_p2", custom_center.p2),
      {"experiment", "custom_growth", [](const ExperimentConfig& c) { return to_string(c.custom_growth); },
       [](ExperimentConfig& c, const std::string& v) { c.custom_growth = parse_growth_model(trim(v)); }},

      {"quantum", "hbar", [](const ExperimentConfig& c) { return join(c.hbar_schedule); },
       [](ExperimentConfig& c, const std::string& v) { c.hbar_schedule = to_double_list(v); }},
      TODA_DOUBLE("quantum", "omega", omega),
      TODA_DOUBLE("quantum", "cutoff_action", cutoff_action),
      {"quantum", "n_max", [](const ExperimentConfig& c) { return optional_int(c.n_max); },
       [](ExperimentConfig& c, const std::string& v) { c.n_max = to_optional_int(v); }},
      {"quantum", "n_sum_max", [](const ExperimentConfig& c) { return optional_int(c.n_sum_max); },
       [](ExperimentConfig& c, const std::string& v) { c.n_sum_max = to_optional_int(v); }},
      {"quantum", "packet_width", [](const ExperimentConfig& c) { return width_name(c.packet_width); },
       [](ExperimentConfig& c, const std::string& v) { c.packet_width = to_width(v); }},
      TODA_DOUBLE("quantum", "truncation_tolerance", truncation_tolerance),
      Field{"quantum", "stability_step", [](const ExperimentConfig& c) { return std::to_string(c.stability_step); },
            [](ExperimentConfig& c, const std::string& v) { c.stability_step = to_integer<int>(v); }},
      TODA_DOUBLE("quantum", "stability_tolerance", stability_tolerance),
      Field{"quantum", "max_refinements", [](const ExperimentConfig& c) { return std::to_string(c.max_refinements); },
            [](ExperimentConfig& c, const std::string& v) { c.max_refinements = to_integer<int>(v); }},

      {"classical", "delta", [](const ExperimentConfig& c) { return join(c.delta_schedule); },
       [](ExperimentConfig& c, const std::string& v) { c.delta_schedule = to_double_list(v); }},
      TODA_SIZE("classical", "M", ensemble_size),
      {"classical", "seed", [](const ExperimentConfig& c) { return std::to_string(c.seed); },
       [](ExperimentConfig& c, const std::string& v) { c.seed = to_integer<std::uint64_t>(v); }},
      TODA_DOUBLE("classical", "dt", dt),
      TODA_DOUBLE("classical", "drift_tolerance", drift_tolerance),
      TODA_SIZE("classical", "threads", threads),
      {"classical", "compare_hbar", [](const ExperimentConfig& c) { return std::string(c.compare_hbar ? "true" : "false"); },
       [](ExperimentConfig& c, const std::string& v) { c.compare_hbar = to_bool(v); }},

      TODA_DOUBLE("time", "t_max", t_max),
      TODA_SIZE("time", "samples", samples),

      TODA_DOUBLE("analysis", "log_t_min", windows.log_t_min),
      TODA_DOUBLE("analysis", "log_fraction", windows.log_fraction),
      TODA_DOUBLE("analysis", "linear_t_min", windows.linear_t_min),
      TODA_DOUBLE("analysis", "linear_fraction", windows.linear_fraction),
      TODA_DOUBLE("analysis", "tail_fraction", windows.tail_fraction),
      TODA_SIZE("analysis", "smoothing", windows.smoothing),

      {"poincare", "pinned", [](const ExperimentConfig& c) { return to_string(c.section.pinned); },
       [](ExperimentConfig& c, const std::string& v) { c.section.pinned = parse_coord(trim(v)); }},
      TODA_DOUBLE("poincare", "value", section.value),
      {"poincare", "direction", [](const ExperimentConfig& c) { return std::to_string(c.section.direction); },
       [](ExperimentConfig& c, const std::string& v) { c.section.direction = to_integer<int>(v); }},
      {"poincare", "x", [](const ExperimentConfig& c) { return to_string(c.section.x_axis); },
       [](ExperimentConfig& c, const std::string& v) { c.section.x_axis = parse_coord(trim(v)); }},
      {"poincare", "y", [](const ExperimentConfig& c) { return to_string(c.section.y_axis); },
       [](ExperimentConfig& c, const std::string& v) { c.section.y_axis = parse_coord(trim(v)); }},
      TODA_SIZE("poincare", "orbits", section_orbits),
      TODA_SIZE("poincare", "crossings", section_crossings),
      TODA_DOUBLE("poincare", "dt", section_dt),

      {"output", "dir", [](const ExperimentConfig& c) { return c.output_dir; },
       [](ExperimentConfig& c, const std::string& v) { c.output_dir = trim(v); }},
      {"output", "cache_dir", [](const ExperimentConfig& c) { return c.cache_dir; },
       [](ExperimentConfig& c, const std::string& v) { c.cache_dir = trim(v); }},
      TODA_SIZE("output", "workers", workers),
  };
  return table;
}

#undef TODA_DOUBLE
#undef TODA_SIZE

}  // namespace

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const Field& f : fields()) keys.push_back(std::string(f.section) + "." + f.key);
  return keys;
}

void ExperimentConfig::set(const std::string& dotted_key, const std::string& value) {
  for (const Field& f : fields()) {
    if (dotted_key == std::string(f.section) + "." + f.key) {
      try {
        f.set(*this, value);
      } catch (const ConfigError& e) {
        throw ConfigError(dotted_key + ": " + e.what());
      }
      return;
    }
  }
  throw ConfigError("unknown configuration key '" + dotted_key + "'");
}

std::string ExperimentConfig::serialize() const {
  std::ostringstream os;
  std::string section;
  for (const Field& f : fields()) {
    if (section != f.section) {
      if (!section.empty()) os << '\n';
      section = f.section;
      os << '[' << section << "]\n";
    }
    os << f.key << " = " << f.get(*this) << '\n';
  }
  return os.str();
}

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig config;
  std::istringstream is(text);
  std::string line, section;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("line " + std::to_string(line_no) + ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string dotted = key.find('.') == std::string::npos ? section + "." + key : key;
    config.set(dotted, line.substr(eq + 1));
  }
  return config;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open configuration file '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

void ExperimentConfig::validate() const {
  auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
  if (presets.empty()) throw ConfigError("experiment.presets must name at least one preset");
  for (const std::string& name : presets) preset(name).params.validate();
  for (const double h : hbar_schedule) {
    if (!positive(h)) throw ConfigError("quantum.hbar values must be positive");
  }
  for (const double d : delta_schedule) {
    if (!positive(d)) throw ConfigError("classical.delta values must be positive");
  }
  if (hbar_schedule.empty() && delta_schedule.empty()) {
    throw ConfigError("at least one of quantum.hbar and classical.delta must be non-empty");
  }
  if (!positive(omega)) throw ConfigError("quantum.omega must be positive");
  if (!positive(cutoff_action)) throw ConfigError("quantum.cutoff_action must be positive");
  if ((n_max && *n_max < 0) || (n_sum_max && *n_sum_max < 0)) throw ConfigError("quantum cutoffs must be non-negative");
  if (!positive(truncation_tolerance)) throw ConfigError("quantum.truncation_tolerance must be positive");
  if (stability_step < 0) throw ConfigError("quantum.stability_step must be non-negative");
  if (!positive(stability_tolerance)) throw ConfigError("quantum.stability_tolerance must be positive");
  if (max_refinements < 0) throw ConfigError("quantum.max_refinements must be non-negative");
  if (ensemble_size < 1) throw ConfigError("classical.M must be at least 1");
  if (!positive(dt)) throw ConfigError("classical.dt must be positive");
  if (!positive(drift_tolerance)) throw ConfigError("classical.drift_tolerance must be positive");
  if (threads < 1) throw ConfigError("classical.threads must be at least 1");
  if (!positive(t_max)) throw ConfigError("time.t_max must be positive");
  if (samples < 2) throw ConfigError("time.samples must be at least 2");
  if (!(windows.tail_fraction > 0.0 && windows.tail_fraction <= 0.5)) {
    throw ConfigError("analysis.tail_fraction must be in (0, 0.5]");
  }
  if (!positive(windows.log_t_min) || !positive(windows.log_fraction) || !(windows.linear_t_min >= 0.0) ||
      !positive(windows.linear_fraction)) {
    throw ConfigError("analysis windows must be positive");
  }
  section.validate();
  if (!positive(section_dt)) throw ConfigError("poincare.dt must be positive");
  if (workers < 1) throw ConfigError("output.workers must be at least 1");
  if (output_dir.empty()) throw ConfigError("output.dir must not be empty");
}

PresetSpec ExperimentConfig::preset(const std::string& name) const {
  if (name == "regular") {
    const ModelParams p = regular_params(energy);
    return {name, p, regular_center(p), GrowthModel::logarithmic, ScalingLaw::inverse_sqrt};
  }
  if (name == "chaotic") {
    const ModelParams p = chaotic_params(energy, chaotic_m2);
    return {name, p, chaotic_center(p), GrowthModel::linear, ScalingLaw::log_inverse};
  }
  if (name == "custom") {
    return {name, custom_params, custom_center, custom_growth,
            custom_growth == GrowthModel::logarithmic ? ScalingLaw::inverse_sqrt : ScalingLaw::log_inverse};
  }
  throw ConfigError("unknown preset '" + name + "' (expected regular, chaotic or custom)");
}

BasisSpec ExperimentConfig::basis_for(double hbar) const {
  const double stretch = std::max(omega, 1.0 / omega);
  const int sum_cutoff = n_sum_max.value_or(static_cast<int>(std::ceil(cutoff_action * stretch / hbar)));
  const int mode_cutoff = n_max.value_or(sum_cutoff);
  return BasisSpec(hbar, omega, mode_cutoff, sum_cutoff);
}

BasisSpec ExperimentConfig::basis_for(double hbar, const PresetSpec& preset) const {
  if (n_sum_max || n_max) return basis_for(hbar);
  const BasisSpec by_action = basis_for(hbar);
  const int needed = required_cutoff(preset.center, hbar, omega, packet_variances(hbar, preset.params, packet_width),
                                     true, truncation_tolerance);
  const int cutoff = std::max(*by_action.n_sum_max(), needed);
  return BasisSpec(hbar, omega, cutoff, cutoff);
}

std::vector<double> ExperimentConfig::time_grid() const { return uniform_grid(t_max, samples); }

std::string ExperimentConfig::resolved_cache_dir() const {
  if (!cache_dir.empty()) return cache_dir;
  if (const char* env = std::getenv(kCacheDirEnv); env != nullptr && *env != '\0') return env;
  return output_dir + "/cache";
}

}  // namespace toda
