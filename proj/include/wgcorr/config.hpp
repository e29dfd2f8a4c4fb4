#pragma once

#include <complex>
#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "wgcorr/bounds.hpp"
#include "wgcorr/correlators.hpp"
#include "wgcorr/dispersion.hpp"
#include "wgcorr/modes.hpp"
#include "wgcorr/wavepackets.hpp"

namespace wgcorr {

/// Parse or validation failure; what() reads "<source>:<line>: <message>".
class ConfigError : public std::runtime_error {
public:
  ConfigError(const std::string &source, int line, const std::string &message);
  int line() const { return line_; }

private:
  int line_;
};

struct IniEntry {
  std::string key;
  std::string value;
  int line = 0;
};

/// `[section]` headers, `key = value` lines, `#` or `;` comments.
struct IniDocument {
  std::string source;
  std::map<std::string, std::vector<IniEntry>> sections;
  std::map<std::string, int> section_lines;
};

IniDocument parse_ini(std::istream &in, const std::string &source);

/// Grid value syntax: `a, b, c` (list), `lin:lo:hi:n` or `log:lo:hi:n`.
std::vector<double> parse_grid(const std::string &text);

enum class MassSource { direct, shape, raster };

struct MassConfig {
  MassSource source = MassSource::direct;
  double mass = 1.0;
  std::string shape;          // rectangle | disk
  double a = 0.0;
  double b = 0.0;
  double radius = 0.0;
  std::string raster_path;    // absolute after loading
  std::string solver = "analytic"; // analytic | fd
  double spacing = 0.0;       // fd spacing; 0 picks min side / 64
  int mode_index = 1;
  int mode_count = 6;
};

struct PacketConfig {
  bool present = false;
  std::string family = "gaussian"; // gaussian | table
  double center = 0.75;
  double width = 0.1;
  std::complex<double> amplitude{1.0, 0.0};
  std::string table_path;
  bool normalize = true;
};

struct BiphotonConfig {
  bool present = false;
  std::string family = "yls"; // yls | correlated | separable
  double pump_center = 2.0;
  double pump_width = 0.1;
  double relative_width = 0.5;
  double pump_scale = 2.0;
  double amplitude = 1.0;
  bool normalize = true;
};

struct ScanConfig {
  std::vector<double> z;
  std::vector<double> t;
  std::vector<double> v;
  std::vector<double> t1;
  std::vector<double> t2;
  std::vector<double> v1;
  std::vector<double> v2;
};

struct ToleranceConfig {
  double rel_tol = 1e-10;
  double bound_rel_tol = 1e-6;
  int order = 6;
};

struct BoundsConfig {
  std::vector<double> t;  // universal-bound grid
  std::vector<double> v1;
  std::vector<double> v2;
  bool refine = true;
  double t0_min = 1e-2;
  double t0_max = 1e2;
  int t0_points = 50;
  double quadrature_t_max = 1000.0;
  int max_order = 6;
  std::vector<double> ray_t;
  std::vector<double> ray_z;
};

struct ExperimentConfig {
  std::string source;
  MassConfig mass;
  PacketConfig packet;
  BiphotonConfig biphoton;
  ScanConfig scan;
  ToleranceConfig tolerances;
  BoundsConfig bounds;
  std::string output_dir = "out";
};

/// Relative paths inside the file resolve against the file's directory.
ExperimentConfig parse_config(std::istream &in, const std::string &source,
                              const std::string &base_dir = ".");
ExperimentConfig load_config(const std::string &path);

/// Defaults-resolved config in the same syntax; grids are written as
/// explicit lists so parsing the echo reproduces them bit for bit.
void write_config(std::ostream &out, const ExperimentConfig &cfg);

CrossSection make_cross_section(const MassConfig &m);
/// Mode spectrum of the configured cross-section (empty for a direct mass).
ModeSpectrum make_spectrum(const MassConfig &m);
DispersionRelation make_dispersion(const MassConfig &m);
WavePacketSpec make_packet(const PacketConfig &p);
BiphotonSpec make_biphoton(const BiphotonConfig &b, const PacketConfig &p);

} // namespace wgcorr
