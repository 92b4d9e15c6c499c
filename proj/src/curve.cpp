#include "toda/curve.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <string_view>

#include "toda/error.hpp"

namespace toda {

void EntropyCurve::validate() const {
  if (times.size() != values.size()) throw DataError("entropy curve: times and values differ in length");
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!std::isfinite(times[i]) || !std::isfinite(values[i])) throw DataError("entropy curve: non-finite entry");
    if (values[i] < 0.0) throw DataError("entropy curve: negative entropy");
    if (i > 0 && !(times[i] > times[i - 1])) throw DataError("entropy curve: times not ascending");
  }
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::vector<double> uniform_grid(double t_max, std::size_t count) {
  if (count < 2 || !(t_max > 0.0)) throw ConfigError("time grid needs t_max > 0 and at least 2 samples");
  std::vector<double> grid(count);
  for (std::size_t i = 0; i < count; ++i) {
    grid[i] = t_max * static_cast<double>(i) / static_cast<double>(count - 1);
  }
  return grid;
}

void write_curve_table(std::ostream& os, const EntropyCurve& particle1, const EntropyCurve& particle2,
                       const TableHeader& header) {
  if (particle1.times != particle2.times) throw DataError("curve table: particle curves use different grids");
  for (const auto& [key, value] : header) os << "# " << key << " = " << value << '\n';
  os << "# t S_particle1 S_particle2\n";
  for (std::size_t i = 0; i < particle1.size(); ++i) {
    os << format_double(particle1.times[i]) << ' ' << format_double(particle1.values[i]) << ' '
       << format_double(particle2.values[i]) << '\n';
  }
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

double parse_number(const std::string& text) {
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
    throw ConfigError("curve table: cannot parse number '" + text + "'");
  }
  return v;
}

}  // namespace

CurvePair read_curve_table(std::istream& is) {
  CurvePair out;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto eq = line.find('=');
      if (eq != std::string::npos) out.header[trim(std::string_view(line).substr(1, eq - 1))] = trim(line.substr(eq + 1));
      continue;
    }
    std::istringstream row(line);
    std::string t, s1, s2;
    if (!(row >> t >> s1 >> s2)) throw ConfigError("curve table: expected three columns in '" + line + "'");
    out.particle1.times.push_back(parse_number(t));
    out.particle1.values.push_back(parse_number(s1));
    out.particle2.values.push_back(parse_number(s2));
  }
  out.particle2.times = out.particle1.times;
  out.particle1.particle = 1;
  out.particle2.particle = 2;

  CurveTag tag;
  auto get = [&](const char* key) -> const std::string* {
    const auto it = out.header.find(key);
    return it == out.header.end() ? nullptr : &it->second;
  };
  if (const auto* src = get("source")) tag.source = *src == "quantum" ? CurveSource::quantum : CurveSource::classical;
  if (const auto* v = get("hbar")) tag.hbar = parse_number(*v);
  if (const auto* v = get("delta")) tag.delta = parse_number(*v);
  if (const auto* v = get("M")) tag.ensemble_size = static_cast<std::size_t>(std::stoull(*v));
  if (const auto* v = get("seed")) tag.seed = std::stoull(*v);
  if (const auto* v = get("preset")) tag.preset = *v;
  out.particle1.tag = tag;
  out.particle2.tag = tag;
  out.particle1.validate();
  out.particle2.validate();
  return out;
}

}  // namespace toda
