#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace wgcorr {

struct Rectangle {
  double a;
  double b;
};

struct Disk {
  double radius;
};

/// Node mask on a uniform grid: cell (ix, iy) set means the node at
/// (origin_x + ix*spacing, origin_y + iy*spacing) lies inside the cross-section.
/// Unset nodes and everything outside the mask carry the Dirichlet value 0.
struct RasterMask {
  int nx = 0;
  int ny = 0;
  double spacing = 0.0;
  double origin_x = 0.0;
  double origin_y = 0.0;
  std::vector<std::uint8_t> cells; // row-major, iy * nx + ix

  bool inside(int ix, int iy) const {
    return ix >= 0 && iy >= 0 && ix < nx && iy < ny && cells[iy * nx + ix] != 0;
  }
  int interior_count() const;
  /// Number of 4-connected components of interior nodes.
  int component_count() const;
};

/// Waveguide cross-section. Factories validate the geometric invariants.
class CrossSection {
public:
  using Shape = std::variant<Rectangle, Disk, RasterMask>;

  static CrossSection rectangle(double a, double b);
  static CrossSection disk(double radius);
  /// Throws std::invalid_argument unless the mask is non-empty and connected.
  static CrossSection raster(RasterMask mask);

  const Shape &shape() const { return shape_; }
  std::string describe() const;

private:
  explicit CrossSection(Shape s) : shape_(std::move(s)) {}
  Shape shape_;
};

/// Samples of a function on a uniform node grid, boundary nodes included.
struct GridFunction {
  int nx = 0;
  int ny = 0;
  double hx = 0.0;
  double hy = 0.0;
  double origin_x = 0.0;
  double origin_y = 0.0;
  std::vector<double> values; // row-major, iy * nx + ix

  double at(int ix, int iy) const { return values[iy * nx + ix]; }
  double x(int ix) const { return origin_x + ix * hx; }
  double y(int iy) const { return origin_y + iy * hy; }
  bool same_grid(const GridFunction &o) const;
};

enum class ModeClass { TM };

struct ModeEntry {
  int index = 0;                  // 1-based position in the ordered spectrum
  ModeClass mode_class = ModeClass::TM;
  double eigenvalue = 0.0;        // m_n^2
  double cutoff_mass = 0.0;       // m_n
  std::string label;              // e.g. "TM(1,2)", "TM(l=1,s=1,sin)", "TM#3"
  int cluster = 0;                // equal ids flag a degenerate cluster
  double residual = 0.0;          // relative eigen-residual (0 for closed forms)
  GridFunction eigenfunction;     // unit discrete L2 norm
};

struct ModeSpectrum {
  std::vector<ModeEntry> entries;
  double resolution = 0.0;        // grid spacing of the sampled eigenfunctions
};

/// Discrete L2 inner product (weight hx*hy) of two functions on the same grid.
double inner_product(const GridFunction &u, const GridFunction &v);

/// First `count` positive zeros of the Bessel function J_order.
std::vector<double> bessel_j_zeros(int order, int count);

/// Closed-form Dirichlet spectrum for rectangle and disk cross-sections.
/// `spacing` sets the sampling grid of the eigenfunctions; by default the
/// shorter side (or diameter) is resolved with at least 64 intervals.
/// Throws std::invalid_argument for raster cross-sections.
ModeSpectrum analytic_spectrum(const CrossSection &cs, int count,
                               std::optional<double> spacing = std::nullopt);

struct EigenSolverOptions {
  double relative_residual = 1e-8;
  int max_iterations = 10000;
  unsigned seed = 20240613u;
};

/// Five-point finite-difference Dirichlet spectrum. Eigenpairs come from a
/// block inverse subspace iteration with Rayleigh-Ritz projection.
/// Throws SolverError (with the worst residual) on non-convergence.
ModeSpectrum fd_spectrum(const CrossSection &cs, int count, double spacing,
                         const EigenSolverOptions &opts = {});

/// Nodes of `cs` sampled at `spacing`; rectangles are snapped so both sides
/// are integer multiples of the spacing.
RasterMask rasterize(const CrossSection &cs, double spacing);

/// L2 norm of `test` minus its projection onto the spectrum's eigenfunctions.
double check_completeness(const ModeSpectrum &ms, const GridFunction &test);

/// Plain-text raster: a header line `spacing <h>` followed by rows of 0/1
/// characters. Row r holds the nodes with iy = r.
RasterMask read_raster(std::istream &in);
RasterMask load_raster_file(const std::string &path);

} // namespace wgcorr
