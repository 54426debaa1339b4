#include "abjm/config.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

#include "abjm/errors.hpp"

namespace abjm {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("trailing");
    if (!std::isfinite(v)) throw std::invalid_argument("nonfinite");
    return v;
  } catch (const std::exception&) {
    throw ConfigError(key + ": not a finite number: '" + value + "'");
  }
}

int parse_int(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const int v = std::stoi(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ConfigError(key + ": not an integer: '" + value + "'");
  }
}

std::vector<Point> parse_points(const std::string& key, const std::string& value) {
  std::vector<Point> pts;
  std::stringstream ss(value);
  std::string chunk;
  while (std::getline(ss, chunk, ';')) {
    chunk = trim(chunk);
    if (chunk.empty()) continue;
    const std::size_t comma = chunk.find(',');
    if (comma == std::string::npos)
      throw ConfigError(key + ": point must be 'x,y', got '" + chunk + "'");
    Point p;
    p.x = parse_double(key, trim(chunk.substr(0, comma)));
    p.y = parse_double(key, trim(chunk.substr(comma + 1)));
    pts.push_back(p);
  }
  return pts;
}

}  // namespace

RunConfig parse_config_text(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::map<int, std::vector<Point>> vortex_lines;

  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.rfind("vortex.", 0) == 0) {
      const int idx = parse_int(key, key.substr(7));
      if (idx < 1) throw ConfigError(key + ": species index must be >= 1");
      if (vortex_lines.count(idx)) throw ConfigError(key + ": duplicate species list");
      vortex_lines[idx] = parse_points(key, value);
      continue;
    }
    if (kv.count(key)) throw ConfigError(key + ": duplicate key");
    kv[key] = value;
  }

  auto take = [&](const std::string& key) -> std::string {
    auto it = kv.find(key);
    if (it == kv.end()) return {};
    std::string v = it->second;
    kv.erase(it);
    return v;
  };
  auto has = [&](const std::string& key) { return kv.count(key) != 0; };

  RunConfig cfg;

  if (const std::string schema = take("schema"); !schema.empty()) {
    if (schema != "vortexsuite-config/1")
      throw ConfigError("schema: unsupported config schema '" + schema + "'");
  }

  // model.m xor model.N
  const bool has_m = has("model.m"), has_N = has("model.N");
  if (has_m == has_N) throw ConfigError("model: exactly one of model.m and model.N required");
  cfg.model.m = has_m ? parse_int("model.m", take("model.m"))
                      : parse_int("model.N", take("model.N")) - 1;

  // model.lambda xor model.mu
  const bool has_lam = has("model.lambda"), has_mu = has("model.mu");
  if (has_lam == has_mu)
    throw ConfigError("model: exactly one of model.lambda and model.mu required");
  if (has_lam) {
    cfg.model.lambda = parse_double("model.lambda", take("model.lambda"));
  } else {
    const double mu = parse_double("model.mu", take("model.mu"));
    if (!(mu > 0.0)) throw ConfigError("model.mu: must be > 0");
    cfg.model.lambda = 4.0 * mu * mu;
  }

  if (has("model.a")) cfg.model.a = parse_double("model.a", take("model.a"));
  if (has("model.k")) cfg.model.k = parse_double("model.k", take("model.k"));
  if (has("model.s")) cfg.model.s = parse_int("model.s", take("model.s"));

  const std::string kind = take("domain.kind");
  if (kind == "torus") {
    cfg.kind = RunConfig::Kind::Torus;
  } else if (kind == "disk") {
    cfg.kind = RunConfig::Kind::Disk;
  } else {
    throw ConfigError("domain.kind: must be 'disk' or 'torus', got '" + kind + "'");
  }

  if (cfg.kind == RunConfig::Kind::Torus) {
    if (has("domain.L1")) cfg.L1 = parse_double("domain.L1", take("domain.L1"));
    if (has("domain.L2")) cfg.L2 = parse_double("domain.L2", take("domain.L2"));
    if (has("domain.nx")) cfg.nx = parse_int("domain.nx", take("domain.nx"));
    if (has("domain.ny")) cfg.ny = parse_int("domain.ny", take("domain.ny"));
  } else {
    if (const std::string r = take("domain.radius"); !r.empty() && r != "auto") {
      cfg.radius = parse_double("domain.radius", r);
      cfg.radius_auto = false;
    }
    if (const std::string n = take("domain.n"); !n.empty() && n != "auto") {
      cfg.disk_n = parse_int("domain.n", n);
      cfg.disk_n_auto = false;
    }
    if (const std::string b = take("solver.boundary"); !b.empty()) {
      if (b == "lnr")
        cfg.boundary = PlanarBoundary::AsymptoticLnR;
      else if (b == "zero")
        cfg.boundary = PlanarBoundary::Zero;
      else
        throw ConfigError("solver.boundary: must be 'lnr' or 'zero', got '" + b + "'");
    }
  }

  if (has("solver.tol")) {
    cfg.tol = parse_double("solver.tol", take("solver.tol"));
    if (!(cfg.tol > 0.0)) throw ConfigError("solver.tol: must be > 0");
  }
  if (has("solver.max_iter")) {
    cfg.max_iter = parse_int("solver.max_iter", take("solver.max_iter"));
    if (cfg.max_iter < 1) throw ConfigError("solver.max_iter: must be >= 1");
  }
  if (const std::string nu = take("solver.nu"); !nu.empty()) {
    if (nu == "auto") {
      cfg.nu_auto = true;
    } else {
      cfg.model.nu = parse_double("solver.nu", nu);
      cfg.nu_auto = false;
    }
  }

  cfg.out_dir = take("output.dir");

  if (!kv.empty()) throw ConfigError(kv.begin()->first + ": unknown key");

  cfg.model.validate();

  cfg.vortices.points.assign(cfg.model.m, {});
  for (const auto& [idx, pts] : vortex_lines) {
    if (idx > cfg.model.m)
      throw ConfigError("vortex." + std::to_string(idx) + ": species index exceeds model.m = " +
                        std::to_string(cfg.model.m));
    cfg.vortices.points[idx - 1] = pts;
  }

  if (cfg.kind == RunConfig::Kind::Torus) {
    TorusGrid::make(cfg.L1, cfg.L2, cfg.nx, cfg.ny);  // validates
  } else {
    if (!cfg.radius_auto && !(cfg.radius > 0.0))
      throw ConfigError("domain.radius: must be > 0");
    if (!cfg.disk_n_auto && (cfg.disk_n < 9 || cfg.disk_n % 2 == 0))
      throw ConfigError("domain.n: must be an odd integer >= 9");
    if (!cfg.radius_auto && cfg.vortices.max_radius() >= cfg.radius)
      throw ConfigError("domain.radius: must strictly exceed the largest vortex |p|");
  }
  return cfg;
}

RunConfig parse_config_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("config: cannot open '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_config_text(ss.str());
}

}  // namespace abjm
