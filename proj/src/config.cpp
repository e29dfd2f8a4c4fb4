#include "wgcorr/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <istream>
#include <ostream>
#include <sstream>

namespace wgcorr {

namespace fs = std::filesystem;

ConfigError::ConfigError(const std::string &source, int line, const std::string &message)
    : std::runtime_error(source + ":" + std::to_string(line) + ": " + message), line_(line) {}

namespace {

std::string trim(const std::string &s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos)
    return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

double to_double(const std::string &s) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception &) {
    throw std::invalid_argument("not a number: '" + s + "'");
  }
  if (used != s.size())
    throw std::invalid_argument("not a number: '" + s + "'");
  if (!std::isfinite(v))
    throw std::invalid_argument("non-finite value: '" + s + "'");
  return v;
}

int to_int(const std::string &s) {
  const double v = to_double(s);
  if (v != std::floor(v) || std::abs(v) > 1e9)
    throw std::invalid_argument("not an integer: '" + s + "'");
  return int(v);
}

bool to_bool(const std::string &s) {
  if (s == "true" || s == "yes" || s == "1")
    return true;
  if (s == "false" || s == "no" || s == "0")
    return false;
  throw std::invalid_argument("not a boolean: '" + s + "'");
}

std::string join(const std::vector<double> &v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i)
    out += (i ? ", " : "") + fmt(v[i]);
  return out;
}

} // namespace

IniDocument parse_ini(std::istream &in, const std::string &source) {
  IniDocument doc;
  doc.source = source;
  std::string line, section;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    const auto hash = line.find_first_of("#;");
    const std::string body = trim(hash == std::string::npos ? line : line.substr(0, hash));
    if (body.empty())
      continue;
    if (body.front() == '[') {
      if (body.back() != ']' || body.size() < 3)
        throw ConfigError(source, n, "malformed section header");
      section = trim(body.substr(1, body.size() - 2));
      if (doc.sections.count(section))
        throw ConfigError(source, n, "duplicate section [" + section + "]");
      doc.sections[section];
      doc.section_lines[section] = n;
      continue;
    }
    const auto eq = body.find('=');
    if (eq == std::string::npos)
      throw ConfigError(source, n, "expected 'key = value'");
    if (section.empty())
      throw ConfigError(source, n, "key outside of any section");
    IniEntry e{trim(body.substr(0, eq)), trim(body.substr(eq + 1)), n};
    if (e.key.empty())
      throw ConfigError(source, n, "empty key");
    for (const auto &prev : doc.sections[section])
      if (prev.key == e.key)
        throw ConfigError(source, n, "duplicate key '" + e.key + "'");
    doc.sections[section].push_back(e);
  }
  return doc;
}

std::vector<double> parse_grid(const std::string &text) {
  const std::string s = trim(text);
  if (s.empty())
    throw std::invalid_argument("empty grid");
  if (s.rfind("lin:", 0) == 0 || s.rfind("log:", 0) == 0) {
    std::vector<std::string> parts;
    std::stringstream ss(s);
    std::string p;
    while (std::getline(ss, p, ':'))
      parts.push_back(trim(p));
    if (parts.size() != 4)
      throw std::invalid_argument("range must read lin:lo:hi:n or log:lo:hi:n");
    const double lo = to_double(parts[1]), hi = to_double(parts[2]);
    const int n = to_int(parts[3]);
    if (n < 1)
      throw std::invalid_argument("range needs at least one point");
    const bool log = parts[0] == "log";
    if (log && !(lo > 0.0 && hi > 0.0))
      throw std::invalid_argument("log range needs positive bounds");
    std::vector<double> out(n);
    for (int i = 0; i < n; ++i) {
      const double s01 = n == 1 ? 0.0 : double(i) / double(n - 1);
      out[i] = log ? std::exp(std::log(lo) + s01 * (std::log(hi) - std::log(lo)))
                   : lo + s01 * (hi - lo);
    }
    if (n > 1)
      out.back() = hi;
    return out;
  }
  std::vector<double> out;
  std::stringstream ss(s);
  std::string p;
  while (std::getline(ss, p, ','))
    out.push_back(to_double(trim(p)));
  return out;
}

namespace {

using Setter = std::function<void(const std::string &)>;

void apply_section(const IniDocument &doc, const std::string &name,
                   const std::map<std::string, Setter> &keys) {
  const auto it = doc.sections.find(name);
  if (it == doc.sections.end())
    return;
  for (const auto &e : it->second) {
    const auto k = keys.find(e.key);
    if (k == keys.end())
      throw ConfigError(doc.source, e.line, "unknown key '" + e.key + "' in [" + name + "]");
    try {
      k->second(e.value);
    } catch (const ConfigError &) {
      throw;
    } catch (const std::exception &ex) {
      throw ConfigError(doc.source, e.line, e.key + ": " + ex.what());
    }
  }
}

int line_of(const IniDocument &doc, const std::string &section, const std::string &key) {
  const auto it = doc.sections.find(section);
  if (it == doc.sections.end())
    return 0;
  for (const auto &e : it->second)
    if (e.key == key)
      return e.line;
  return doc.section_lines.at(section);
}

std::string resolve(const std::string &path, const std::string &base) {
  fs::path p(path);
  if (p.is_relative())
    p = fs::path(base) / p;
  return fs::absolute(p).lexically_normal().string();
}

} // namespace

ExperimentConfig parse_config(std::istream &in, const std::string &source,
                              const std::string &base_dir) {
  const IniDocument doc = parse_ini(in, source);
  static const std::vector<std::string> known = {"mass",   "packet",     "biphoton", "scan",
                                                 "tolerances", "bounds", "output"};
  for (const auto &[name, entries] : doc.sections)
    if (std::find(known.begin(), known.end(), name) == known.end())
      throw ConfigError(source, doc.section_lines.at(name), "unknown section [" + name + "]");

  ExperimentConfig cfg;
  cfg.source = source;
  auto positive = [](double x, const char *what) {
    if (!(x > 0.0))
      throw std::invalid_argument(std::string(what) + " must be positive");
    return x;
  };

  int mass_sources = 0;
  MassConfig &m = cfg.mass;
  apply_section(doc, "mass",
                {{"mass", [&](auto s) { m.source = MassSource::direct; m.mass = positive(to_double(s), "mass"); ++mass_sources; }},
                 {"shape", [&](auto s) {
                    if (s != "rectangle" && s != "disk")
                      throw std::invalid_argument("shape must be rectangle or disk");
                    m.source = MassSource::shape;
                    m.shape = s;
                    ++mass_sources;
                  }},
                 {"raster", [&](auto s) { m.source = MassSource::raster; m.raster_path = resolve(s, base_dir); ++mass_sources; }},
                 {"a", [&](auto s) { m.a = positive(to_double(s), "a"); }},
                 {"b", [&](auto s) { m.b = positive(to_double(s), "b"); }},
                 {"radius", [&](auto s) { m.radius = positive(to_double(s), "radius"); }},
                 {"solver", [&](auto s) {
                    if (s != "analytic" && s != "fd")
                      throw std::invalid_argument("solver must be analytic or fd");
                    m.solver = s;
                  }},
                 {"spacing", [&](auto s) { m.spacing = positive(to_double(s), "spacing"); }},
                 {"mode_index", [&](auto s) { m.mode_index = to_int(s); if (m.mode_index < 1) throw std::invalid_argument("mode_index starts at 1"); }},
                 {"mode_count", [&](auto s) { m.mode_count = to_int(s); if (m.mode_count < 1) throw std::invalid_argument("mode_count must be positive"); }}});
  if (mass_sources != 1) {
    const int line = doc.sections.count("mass") ? doc.section_lines.at("mass") : 1;
    throw ConfigError(source, line,
                      "exactly one of 'mass', 'shape', 'raster' must be given in [mass]");
  }
  if (m.source == MassSource::shape) {
    if (m.shape == "rectangle" && (m.a <= 0.0 || m.b <= 0.0))
      throw ConfigError(source, line_of(doc, "mass", "shape"), "rectangle needs a and b");
    if (m.shape == "disk" && m.radius <= 0.0)
      throw ConfigError(source, line_of(doc, "mass", "shape"), "disk needs radius");
  }
  if (m.source == MassSource::raster)
    m.solver = "fd";
  if (m.mode_count < m.mode_index)
    m.mode_count = m.mode_index;

  PacketConfig &p = cfg.packet;
  p.present = doc.sections.count("packet") > 0;
  double amp_re = 1.0, amp_im = 0.0;
  apply_section(doc, "packet",
                {{"family", [&](auto s) {
                    if (s != "gaussian" && s != "table")
                      throw std::invalid_argument("family must be gaussian or table");
                    p.family = s;
                  }},
                 {"center", [&](auto s) { p.center = to_double(s); }},
                 {"width", [&](auto s) { p.width = positive(to_double(s), "width"); }},
                 {"amplitude", [&](auto s) { amp_re = to_double(s); }},
                 {"amplitude_im", [&](auto s) { amp_im = to_double(s); }},
                 {"table", [&](auto s) { p.table_path = resolve(s, base_dir); }},
                 {"normalize", [&](auto s) { p.normalize = to_bool(s); }}});
  p.amplitude = {amp_re, amp_im};
  if (p.present && p.family == "table" && p.table_path.empty())
    throw ConfigError(source, doc.section_lines.at("packet"), "table family needs 'table'");

  BiphotonConfig &b = cfg.biphoton;
  b.present = doc.sections.count("biphoton") > 0;
  apply_section(doc, "biphoton",
                {{"family", [&](auto s) {
                    if (s != "yls" && s != "correlated" && s != "separable")
                      throw std::invalid_argument("family must be yls, correlated or separable");
                    b.family = s;
                  }},
                 {"pump_center", [&](auto s) { b.pump_center = to_double(s); }},
                 {"pump_width", [&](auto s) { b.pump_width = positive(to_double(s), "pump_width"); }},
                 {"relative_width", [&](auto s) { b.relative_width = positive(to_double(s), "relative_width"); }},
                 {"pump_scale", [&](auto s) { b.pump_scale = positive(to_double(s), "pump_scale"); }},
                 {"amplitude", [&](auto s) { b.amplitude = to_double(s); }},
                 {"normalize", [&](auto s) { b.normalize = to_bool(s); }}});
  if (b.present && b.family == "separable" && !p.present)
    throw ConfigError(source, doc.section_lines.at("biphoton"),
                      "separable family takes its factors from [packet]");

  ScanConfig &sc = cfg.scan;
  apply_section(doc, "scan",
                {{"z", [&](auto s) { sc.z = parse_grid(s); }},
                 {"t", [&](auto s) { sc.t = parse_grid(s); }},
                 {"v", [&](auto s) { sc.v = parse_grid(s); }},
                 {"t1", [&](auto s) { sc.t1 = parse_grid(s); }},
                 {"t2", [&](auto s) { sc.t2 = parse_grid(s); }},
                 {"v1", [&](auto s) { sc.v1 = parse_grid(s); }},
                 {"v2", [&](auto s) { sc.v2 = parse_grid(s); }}});
  if (!sc.t1.empty() && sc.t2.empty())
    sc.t2 = sc.t1;
  if (!sc.v1.empty() && sc.v2.empty())
    sc.v2 = sc.v1;

  ToleranceConfig &tol = cfg.tolerances;
  apply_section(doc, "tolerances",
                {{"rel_tol", [&](auto s) { tol.rel_tol = positive(to_double(s), "rel_tol"); }},
                 {"bound_rel_tol", [&](auto s) { tol.bound_rel_tol = positive(to_double(s), "bound_rel_tol"); }},
                 {"order", [&](auto s) { tol.order = to_int(s); if (tol.order < 2 || tol.order > 64) throw std::invalid_argument("order must be in [2, 64]"); }}});

  BoundsConfig &bd = cfg.bounds;
  apply_section(doc, "bounds",
                {{"t", [&](auto s) { bd.t = parse_grid(s); }},
                 {"v1", [&](auto s) { bd.v1 = parse_grid(s); }},
                 {"v2", [&](auto s) { bd.v2 = parse_grid(s); }},
                 {"refine", [&](auto s) { bd.refine = to_bool(s); }},
                 {"t0_min", [&](auto s) { bd.t0_min = positive(to_double(s), "t0_min"); }},
                 {"t0_max", [&](auto s) { bd.t0_max = positive(to_double(s), "t0_max"); }},
                 {"t0_points", [&](auto s) { bd.t0_points = to_int(s); if (bd.t0_points < 2) throw std::invalid_argument("t0_points must be at least 2"); }},
                 {"quadrature_t_max", [&](auto s) { bd.quadrature_t_max = positive(to_double(s), "quadrature_t_max"); }},
                 {"max_order", [&](auto s) { bd.max_order = to_int(s); if (bd.max_order < 0) throw std::invalid_argument("max_order must be nonnegative"); }},
                 {"ray_t", [&](auto s) { bd.ray_t = parse_grid(s); }},
                 {"ray_z", [&](auto s) { bd.ray_z = parse_grid(s); }}});
  if (!bd.v1.empty() && bd.v2.empty())
    bd.v2 = bd.v1;
  if (bd.t0_max <= bd.t0_min)
    throw ConfigError(source, line_of(doc, "bounds", "t0_max"), "t0_max must exceed t0_min");

  apply_section(doc, "output", {{"dir", [&](auto s) {
                                  if (s.empty())
                                    throw std::invalid_argument("empty output directory");
                                  cfg.output_dir = resolve(s, base_dir);
                                }}});
  if (!doc.sections.count("output"))
    cfg.output_dir = resolve(cfg.output_dir, base_dir);
  return cfg;
}

ExperimentConfig load_config(const std::string &path) {
  std::ifstream in(path);
  if (!in)
    throw ConfigError(path, 0, "cannot open config file");
  const fs::path dir = fs::absolute(fs::path(path)).parent_path();
  return parse_config(in, path, dir.string());
}

void write_config(std::ostream &out, const ExperimentConfig &cfg) {
  const MassConfig &m = cfg.mass;
  out << "[mass]\n";
  switch (m.source) {
  case MassSource::direct:
    out << "mass = " << fmt(m.mass) << "\n";
    break;
  case MassSource::shape:
    out << "shape = " << m.shape << "\n";
    if (m.shape == "rectangle")
      out << "a = " << fmt(m.a) << "\nb = " << fmt(m.b) << "\n";
    else
      out << "radius = " << fmt(m.radius) << "\n";
    break;
  case MassSource::raster:
    out << "raster = " << m.raster_path << "\n";
    break;
  }
  out << "solver = " << m.solver << "\n";
  if (m.spacing > 0.0)
    out << "spacing = " << fmt(m.spacing) << "\n";
  out << "mode_index = " << m.mode_index << "\nmode_count = " << m.mode_count << "\n";

  if (cfg.packet.present) {
    const PacketConfig &p = cfg.packet;
    out << "\n[packet]\nfamily = " << p.family << "\ncenter = " << fmt(p.center)
        << "\nwidth = " << fmt(p.width) << "\namplitude = " << fmt(p.amplitude.real())
        << "\namplitude_im = " << fmt(p.amplitude.imag()) << "\n";
    if (!p.table_path.empty())
      out << "table = " << p.table_path << "\n";
    out << "normalize = " << (p.normalize ? "true" : "false") << "\n";
  }
  if (cfg.biphoton.present) {
    const BiphotonConfig &b = cfg.biphoton;
    out << "\n[biphoton]\nfamily = " << b.family << "\npump_center = " << fmt(b.pump_center)
        << "\npump_width = " << fmt(b.pump_width) << "\nrelative_width = "
        << fmt(b.relative_width) << "\npump_scale = " << fmt(b.pump_scale)
        << "\namplitude = " << fmt(b.amplitude)
        << "\nnormalize = " << (b.normalize ? "true" : "false") << "\n";
  }
  out << "\n[scan]\n";
  const ScanConfig &s = cfg.scan;
  for (const auto &[k, v] : {std::pair<const char *, const std::vector<double> *>{"z", &s.z},
                             {"t", &s.t}, {"v", &s.v}, {"t1", &s.t1}, {"t2", &s.t2},
                             {"v1", &s.v1}, {"v2", &s.v2}})
    if (!v->empty())
      out << k << " = " << join(*v) << "\n";
  const ToleranceConfig &tol = cfg.tolerances;
  out << "\n[tolerances]\nrel_tol = " << fmt(tol.rel_tol)
      << "\nbound_rel_tol = " << fmt(tol.bound_rel_tol) << "\norder = " << tol.order << "\n";
  const BoundsConfig &bd = cfg.bounds;
  out << "\n[bounds]\n";
  for (const auto &[k, v] : {std::pair<const char *, const std::vector<double> *>{"t", &bd.t},
                             {"v1", &bd.v1}, {"v2", &bd.v2}, {"ray_t", &bd.ray_t},
                             {"ray_z", &bd.ray_z}})
    if (!v->empty())
      out << k << " = " << join(*v) << "\n";
  out << "refine = " << (bd.refine ? "true" : "false") << "\nt0_min = " << fmt(bd.t0_min)
      << "\nt0_max = " << fmt(bd.t0_max) << "\nt0_points = " << bd.t0_points
      << "\nquadrature_t_max = " << fmt(bd.quadrature_t_max)
      << "\nmax_order = " << bd.max_order << "\n";
  out << "\n[output]\ndir = " << cfg.output_dir << "\n";
}

CrossSection make_cross_section(const MassConfig &m) {
  if (m.source == MassSource::raster)
    return CrossSection::raster(load_raster_file(m.raster_path));
  if (m.shape == "rectangle")
    return CrossSection::rectangle(m.a, m.b);
  return CrossSection::disk(m.radius);
}

ModeSpectrum make_spectrum(const MassConfig &m) {
  if (m.source == MassSource::direct)
    return {};
  const CrossSection cs = make_cross_section(m);
  if (m.solver == "analytic" && m.source == MassSource::shape)
    return analytic_spectrum(cs, m.mode_count);
  double h = m.spacing;
  if (!(h > 0.0)) {
    if (m.source == MassSource::raster)
      h = load_raster_file(m.raster_path).spacing;
    else if (m.shape == "rectangle")
      h = std::min(m.a, m.b) / 64.0;
    else
      h = 2.0 * m.radius / 64.0;
  }
  return fd_spectrum(cs, m.mode_count, h);
}

DispersionRelation make_dispersion(const MassConfig &m) {
  if (m.source == MassSource::direct)
    return DispersionRelation(m.mass);
  const ModeSpectrum s = make_spectrum(m);
  return DispersionRelation(s.entries.at(m.mode_index - 1).cutoff_mass);
}

WavePacketSpec make_packet(const PacketConfig &p) {
  WavePacketSpec g = p.family == "table" ? load_packet_table_csv(p.table_path)
                                         : WavePacketSpec::gaussian(p.center, p.width, p.amplitude);
  if (p.family == "table" && p.amplitude != std::complex<double>(1.0, 0.0))
    g = g.scaled(p.amplitude);
  return p.normalize ? normalize(g) : g;
}

BiphotonSpec make_biphoton(const BiphotonConfig &b, const PacketConfig &p) {
  BiphotonSpec f = [&] {
    if (b.family == "yls")
      return BiphotonSpec::yls(GaussianPacket{b.pump_center, b.pump_width, 1.0}, b.pump_scale);
    if (b.family == "correlated")
      return BiphotonSpec::gaussian_correlated(b.pump_center, b.pump_width, b.relative_width);
    const WavePacketSpec g = make_packet(p);
    return BiphotonSpec::separable_symmetrized(g, g);
  }();
  if (b.amplitude != 1.0)
    f = f.scaled(b.amplitude);
  return b.normalize ? normalize(f) : f;
}

} // namespace wgcorr
