#include "wgcorr/modes.hpp"

#include <algorithm>
#include <tuple>
#include <cmath>
#include <fstream>
#include <istream>
#include <numbers>
#include <queue>
#include <random>
#include <sstream>
#include <stdexcept>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "wgcorr/errors.hpp"

namespace wgcorr {

namespace {

constexpr double kDegeneracyTol = 1e-8;

bool positive_finite(double x) { return x > 0.0 && std::isfinite(x); }

// Groups an ascending eigenvalue list into clusters of relative width kDegeneracyTol.
void assign_clusters(std::vector<ModeEntry> &entries) {
  int cluster = 0;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (i > 0) {
      const double prev = entries[i - 1].eigenvalue;
      const double cur = entries[i].eigenvalue;
      if (std::abs(cur - prev) > kDegeneracyTol * std::max(std::abs(cur), std::abs(prev)))
        ++cluster;
    }
    entries[i].cluster = cluster;
    entries[i].index = static_cast<int>(i) + 1;
  }
}

// First nonzero interior sample positive.
void fix_sign(GridFunction &g) {
  double peak = 0.0;
  for (double v : g.values)
    peak = std::max(peak, std::abs(v));
  for (double v : g.values) {
    if (std::abs(v) > 1e-10 * peak) {
      if (v < 0.0)
        for (double &w : g.values)
          w = -w;
      return;
    }
  }
}

void normalize(GridFunction &g) {
  const double n = std::sqrt(inner_product(g, g));
  if (n > 0.0)
    for (double &v : g.values)
      v /= n;
}

// Bessel J_n and its derivative.
double bessel_j(int n, double x) { return std::cyl_bessel_j(static_cast<double>(n), x); }

double bessel_jp(int n, double x) {
  if (n == 0)
    return -bessel_j(1, x);
  return 0.5 * (bessel_j(n - 1, x) - bessel_j(n + 1, x));
}

double refine_zero(int n, double lo, double hi) {
  double flo = bessel_j(n, lo);
  double x = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    const double fx = bessel_j(n, x);
    if (fx == 0.0)
      return x;
    if ((fx < 0.0) == (flo < 0.0)) {
      lo = x;
      flo = fx;
    } else {
      hi = x;
    }
    // Newton step, falling back to bisection when it leaves the bracket.
    double next = x - fx / bessel_jp(n, x);
    if (!(next > lo && next < hi))
      next = 0.5 * (lo + hi);
    if (std::abs(next - x) <= 4e-16 * x || hi - lo <= 4e-16 * x)
      return next;
    x = next;
  }
  return x;
}

// Positive zeros of J_n below xmax.
std::vector<double> bessel_zeros_below(int n, double xmax) {
  std::vector<double> zeros;
  constexpr double step = 0.2; // consecutive zeros are more than pi apart
  double a = std::max(0.5, static_cast<double>(n));
  double fa = bessel_j(n, a);
  while (a < xmax) {
    const double b = a + step;
    const double fb = bessel_j(n, b);
    if (fa == 0.0) {
      zeros.push_back(a);
    } else if ((fa < 0.0) != (fb < 0.0)) {
      const double z = refine_zero(n, a, b);
      if (z < xmax)
        zeros.push_back(z);
    }
    a = b;
    fa = fb;
  }
  return zeros;
}

struct FdGrid {
  GridFunction layout;      // node grid with a zero ring around the domain
  std::vector<int> unknown; // node -> unknown id, -1 for Dirichlet nodes
  int count = 0;
};

FdGrid grid_from_mask(const RasterMask &mask) {
  FdGrid g;
  g.layout.nx = mask.nx + 2;
  g.layout.ny = mask.ny + 2;
  g.layout.hx = g.layout.hy = mask.spacing;
  g.layout.origin_x = mask.origin_x - mask.spacing;
  g.layout.origin_y = mask.origin_y - mask.spacing;
  g.layout.values.assign(static_cast<std::size_t>(g.layout.nx) * g.layout.ny, 0.0);
  g.unknown.assign(g.layout.values.size(), -1);
  for (int iy = 0; iy < mask.ny; ++iy)
    for (int ix = 0; ix < mask.nx; ++ix)
      if (mask.inside(ix, iy))
        g.unknown[(iy + 1) * g.layout.nx + (ix + 1)] = g.count++;
  return g;
}

FdGrid rectangle_grid(const Rectangle &r, double spacing) {
  const int nxi = std::max(2, static_cast<int>(std::lround(r.a / spacing)));
  const int nyi = std::max(2, static_cast<int>(std::lround(r.b / spacing)));
  FdGrid g;
  g.layout.nx = nxi + 1;
  g.layout.ny = nyi + 1;
  g.layout.hx = r.a / nxi;
  g.layout.hy = r.b / nyi;
  g.layout.values.assign(static_cast<std::size_t>(g.layout.nx) * g.layout.ny, 0.0);
  g.unknown.assign(g.layout.values.size(), -1);
  for (int iy = 1; iy < nyi; ++iy)
    for (int ix = 1; ix < nxi; ++ix)
      g.unknown[iy * g.layout.nx + ix] = g.count++;
  return g;
}

void require_resolution(const FdGrid &g) {
  int min_x = g.layout.nx, max_x = -1, min_y = g.layout.ny, max_y = -1;
  for (int iy = 0; iy < g.layout.ny; ++iy)
    for (int ix = 0; ix < g.layout.nx; ++ix)
      if (g.unknown[iy * g.layout.nx + ix] >= 0) {
        min_x = std::min(min_x, ix);
        max_x = std::max(max_x, ix);
        min_y = std::min(min_y, iy);
        max_y = std::max(max_y, iy);
      }
  if (max_x - min_x + 1 < 16 || max_y - min_y + 1 < 16)
    throw std::invalid_argument(
        "fd_spectrum: spacing too coarse, need at least 16 interior nodes per side");
}

std::string join_label(const char *prefix, int n) { return std::string(prefix) + std::to_string(n); }

} // namespace

int RasterMask::interior_count() const {
  return static_cast<int>(std::count_if(cells.begin(), cells.end(), [](auto c) { return c != 0; }));
}

int RasterMask::component_count() const {
  std::vector<int> label(cells.size(), -1);
  int components = 0;
  for (int start = 0; start < static_cast<int>(cells.size()); ++start) {
    if (!cells[start] || label[start] >= 0)
      continue;
    std::queue<int> todo;
    todo.push(start);
    label[start] = components;
    while (!todo.empty()) {
      const int cur = todo.front();
      todo.pop();
      const int ix = cur % nx, iy = cur / nx;
      const int nbr[4][2] = {{ix - 1, iy}, {ix + 1, iy}, {ix, iy - 1}, {ix, iy + 1}};
      for (const auto &p : nbr) {
        if (!inside(p[0], p[1]))
          continue;
        const int id = p[1] * nx + p[0];
        if (label[id] < 0) {
          label[id] = components;
          todo.push(id);
        }
      }
    }
    ++components;
  }
  return components;
}

CrossSection CrossSection::rectangle(double a, double b) {
  if (!positive_finite(a) || !positive_finite(b))
    throw std::invalid_argument("rectangle: side lengths must be positive");
  return CrossSection(Rectangle{a, b});
}

CrossSection CrossSection::disk(double radius) {
  if (!positive_finite(radius))
    throw std::invalid_argument("disk: radius must be positive");
  return CrossSection(Disk{radius});
}

CrossSection CrossSection::raster(RasterMask mask) {
  if (!positive_finite(mask.spacing))
    throw std::invalid_argument("raster: spacing must be positive");
  if (mask.nx <= 0 || mask.ny <= 0 ||
      mask.cells.size() != static_cast<std::size_t>(mask.nx) * mask.ny)
    throw std::invalid_argument("raster: mask dimensions do not match its cell count");
  const int comps = mask.component_count();
  if (comps == 0)
    throw std::invalid_argument("raster: mask has no interior nodes");
  if (comps > 1)
    throw std::invalid_argument("raster: disconnected mask (" + std::to_string(comps) +
                                " components)");
  return CrossSection(std::move(mask));
}

std::string CrossSection::describe() const {
  std::ostringstream os;
  os.precision(17);
  std::visit(
      [&](const auto &s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Rectangle>)
          os << "rectangle a=" << s.a << " b=" << s.b;
        else if constexpr (std::is_same_v<T, Disk>)
          os << "disk radius=" << s.radius;
        else
          os << "raster " << s.nx << "x" << s.ny << " spacing=" << s.spacing;
      },
      shape_);
  return os.str();
}

bool GridFunction::same_grid(const GridFunction &o) const {
  return nx == o.nx && ny == o.ny && hx == o.hx && hy == o.hy && origin_x == o.origin_x &&
         origin_y == o.origin_y;
}

double inner_product(const GridFunction &u, const GridFunction &v) {
  if (!u.same_grid(v))
    throw std::invalid_argument("inner_product: grid functions live on different grids");
  double s = 0.0;
  for (std::size_t i = 0; i < u.values.size(); ++i)
    s += u.values[i] * v.values[i];
  return s * u.hx * u.hy;
}

std::vector<double> bessel_j_zeros(int order, int count) {
  if (order < 0 || count < 1)
    throw std::invalid_argument("bessel_j_zeros: need order >= 0 and count >= 1");
  // McMahon: j_{n,s} ~ (s + n/2 - 1/4) pi, plus slack for small s.
  double xmax = (count + 0.5 * order + 1.0) * std::numbers::pi + 2.0;
  auto zeros = bessel_zeros_below(order, xmax);
  while (static_cast<int>(zeros.size()) < count) {
    xmax *= 1.5;
    zeros = bessel_zeros_below(order, xmax);
  }
  zeros.resize(count);
  return zeros;
}

RasterMask rasterize(const CrossSection &cs, double spacing) {
  if (!positive_finite(spacing))
    throw std::invalid_argument("rasterize: spacing must be positive");
  return std::visit(
      [&](const auto &s) -> RasterMask {
        using T = std::decay_t<decltype(s)>;
        RasterMask m;
        m.spacing = spacing;
        if constexpr (std::is_same_v<T, Rectangle>) {
          const int nxi = std::max(2, static_cast<int>(std::lround(s.a / spacing)));
          const int nyi = std::max(2, static_cast<int>(std::lround(s.b / spacing)));
          m.nx = nxi - 1;
          m.ny = nyi - 1;
          m.origin_x = m.origin_y = spacing;
          m.cells.assign(static_cast<std::size_t>(m.nx) * m.ny, 1);
        } else if constexpr (std::is_same_v<T, Disk>) {
          const int half = static_cast<int>(std::ceil(s.radius / spacing));
          m.nx = m.ny = 2 * half + 1;
          m.origin_x = m.origin_y = -half * spacing;
          m.cells.assign(static_cast<std::size_t>(m.nx) * m.ny, 0);
          const double r2 = s.radius * s.radius * (1.0 - 1e-12);
          for (int iy = 0; iy < m.ny; ++iy)
            for (int ix = 0; ix < m.nx; ++ix) {
              const double x = m.origin_x + ix * spacing, y = m.origin_y + iy * spacing;
              m.cells[iy * m.nx + ix] = (x * x + y * y < r2) ? 1 : 0;
            }
        } else {
          m = s;
        }
        return m;
      },
      cs.shape());
}

ModeSpectrum analytic_spectrum(const CrossSection &cs, int count, std::optional<double> spacing) {
  if (count < 1)
    throw std::invalid_argument("analytic_spectrum: count must be >= 1");
  if (spacing && !positive_finite(*spacing))
    throw std::invalid_argument("analytic_spectrum: spacing must be positive");
  const double pi = std::numbers::pi;

  if (const auto *r = std::get_if<Rectangle>(&cs.shape())) {
    struct Candidate {
      double lambda;
      int p, q;
    };
    std::vector<Candidate> cand;
    for (int p = 1; p <= count; ++p)
      for (int q = 1; q <= count; ++q)
        cand.push_back({pi * pi * (double(p) * p / (r->a * r->a) + double(q) * q / (r->b * r->b)), p, q});
    std::sort(cand.begin(), cand.end(), [](const auto &x, const auto &y) {
      return x.lambda != y.lambda ? x.lambda < y.lambda : std::pair(x.p, x.q) < std::pair(y.p, y.q);
    });
    // Lexicographic order inside clusters that differ only by round-off.
    for (std::size_t i = 0; i < cand.size();) {
      std::size_t j = i + 1;
      while (j < cand.size() &&
             std::abs(cand[j].lambda - cand[i].lambda) <= kDegeneracyTol * cand[i].lambda)
        ++j;
      std::sort(cand.begin() + i, cand.begin() + j,
                [](const auto &x, const auto &y) { return std::pair(x.p, x.q) < std::pair(y.p, y.q); });
      i = j;
    }
    cand.resize(count);

    int pmax = 1, qmax = 1;
    for (const auto &c : cand) {
      pmax = std::max(pmax, c.p);
      qmax = std::max(qmax, c.q);
    }
    const double h = spacing.value_or(std::min(r->a, r->b) / std::max(64, 4 * std::max(pmax, qmax)));
    const int nxi = std::max(2, static_cast<int>(std::lround(r->a / h)));
    const int nyi = std::max(2, static_cast<int>(std::lround(r->b / h)));
    if (pmax >= nxi || qmax >= nyi)
      throw std::invalid_argument("analytic_spectrum: spacing cannot resolve the requested modes");

    ModeSpectrum ms;
    ms.resolution = h;
    for (const auto &c : cand) {
      ModeEntry e;
      e.eigenvalue = c.lambda;
      e.cutoff_mass = std::sqrt(c.lambda);
      e.label = "TM(" + std::to_string(c.p) + "," + std::to_string(c.q) + ")";
      GridFunction &g = e.eigenfunction;
      g.nx = nxi + 1;
      g.ny = nyi + 1;
      g.hx = r->a / nxi;
      g.hy = r->b / nyi;
      g.values.assign(static_cast<std::size_t>(g.nx) * g.ny, 0.0);
      const double amp = 2.0 / std::sqrt(r->a * r->b);
      for (int iy = 1; iy < nyi; ++iy)
        for (int ix = 1; ix < nxi; ++ix)
          g.values[iy * g.nx + ix] = amp * std::sin(c.p * pi * ix / nxi) * std::sin(c.q * pi * iy / nyi);
      fix_sign(g);
      ms.entries.push_back(std::move(e));
    }
    assign_clusters(ms.entries);
    return ms;
  }

  if (const auto *d = std::get_if<Disk>(&cs.shape())) {
    struct Candidate {
      double zero;
      int l, s;
      bool sine;
    };
    // Weyl's law bounds how far up the zeros must be enumerated.
    double xmax = 2.0 * std::sqrt(double(count)) + 8.0;
    std::vector<Candidate> cand;
    for (;;) {
      cand.clear();
      for (int l = 0;; ++l) {
        const auto zs = bessel_zeros_below(l, xmax);
        if (zs.empty())
          break;
        for (std::size_t s = 0; s < zs.size(); ++s) {
          cand.push_back({zs[s], l, int(s) + 1, false});
          if (l > 0)
            cand.push_back({zs[s], l, int(s) + 1, true});
        }
      }
      if (static_cast<int>(cand.size()) >= count)
        break;
      xmax *= 1.5;
    }
    std::sort(cand.begin(), cand.end(), [](const auto &x, const auto &y) {
      return x.zero != y.zero ? x.zero < y.zero : std::tuple(x.l, x.s, x.sine) < std::tuple(y.l, y.s, y.sine);
    });
    cand.resize(count);

    const double R = d->radius;
    const double h = spacing.value_or(R / 64.0);
    const int half = static_cast<int>(std::ceil(R / h));
    ModeSpectrum ms;
    ms.resolution = h;
    for (const auto &c : cand) {
      ModeEntry e;
      e.cutoff_mass = c.zero / R;
      e.eigenvalue = e.cutoff_mass * e.cutoff_mass;
      e.label = "TM(l=" + std::to_string(c.l) + ",s=" + std::to_string(c.s) +
                (c.l == 0 ? ")" : (c.sine ? ",sin)" : ",cos)"));
      const double jn1 = bessel_j(c.l + 1, c.zero);
      const double angular = c.l == 0 ? 2.0 * pi : pi;
      const double amp = 1.0 / std::sqrt(0.5 * R * R * jn1 * jn1 * angular);
      GridFunction &g = e.eigenfunction;
      g.nx = g.ny = 2 * half + 1;
      g.hx = g.hy = h;
      g.origin_x = g.origin_y = -half * h;
      g.values.assign(static_cast<std::size_t>(g.nx) * g.ny, 0.0);
      for (int iy = 0; iy < g.ny; ++iy)
        for (int ix = 0; ix < g.nx; ++ix) {
          const double x = g.x(ix), y = g.y(iy);
          const double rho = std::hypot(x, y);
          if (rho >= R)
            continue;
          const double theta = std::atan2(y, x);
          const double ang = c.sine ? std::sin(c.l * theta) : std::cos(c.l * theta);
          g.values[iy * g.nx + ix] = amp * bessel_j(c.l, c.zero * rho / R) * ang;
        }
      fix_sign(g);
      ms.entries.push_back(std::move(e));
    }
    assign_clusters(ms.entries);
    return ms;
  }

  throw std::invalid_argument("analytic_spectrum: unsupported shape (raster); use fd_spectrum");
}

ModeSpectrum fd_spectrum(const CrossSection &cs, int count, double spacing,
                         const EigenSolverOptions &opts) {
  if (count < 1)
    throw std::invalid_argument("fd_spectrum: count must be >= 1");
  if (!positive_finite(spacing))
    throw std::invalid_argument("fd_spectrum: spacing must be positive");

  FdGrid grid = std::holds_alternative<Rectangle>(cs.shape())
                    ? rectangle_grid(std::get<Rectangle>(cs.shape()), spacing)
                    : grid_from_mask(rasterize(cs, spacing));
  require_resolution(grid);
  const int n = grid.count;
  if (count > n)
    throw std::invalid_argument("fd_spectrum: more modes requested than grid unknowns");

  const double cx = 1.0 / (grid.layout.hx * grid.layout.hx);
  const double cy = 1.0 / (grid.layout.hy * grid.layout.hy);
  const int nx = grid.layout.nx;
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(n) * 5);
  for (int iy = 0; iy < grid.layout.ny; ++iy)
    for (int ix = 0; ix < nx; ++ix) {
      const int row = grid.unknown[iy * nx + ix];
      if (row < 0)
        continue;
      trips.emplace_back(row, row, 2.0 * cx + 2.0 * cy);
      const int nbr[4] = {grid.unknown[iy * nx + ix - 1], grid.unknown[iy * nx + ix + 1],
                          grid.unknown[(iy - 1) * nx + ix], grid.unknown[(iy + 1) * nx + ix]};
      const double coef[4] = {cx, cx, cy, cy};
      for (int k = 0; k < 4; ++k)
        if (nbr[k] >= 0)
          trips.emplace_back(row, nbr[k], -coef[k]);
    }
  Eigen::SparseMatrix<double> A(n, n);
  A.setFromTriplets(trips.begin(), trips.end());

  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(A);
  if (solver.info() != Eigen::Success)
    throw SolverError("fd_spectrum: factorization of the Laplacian failed", 0.0);

  const int block = std::min(n, std::max(2 * count, count + 8));
  std::mt19937_64 rng(opts.seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  Eigen::MatrixXd X(n, block);
  for (int j = 0; j < block; ++j)
    for (int i = 0; i < n; ++i)
      X(i, j) = uni(rng);

  Eigen::VectorXd theta;
  std::vector<double> resid(count, 0.0);
  double worst = 0.0;
  bool converged = false;
  for (int iter = 0; iter < opts.max_iterations; ++iter) {
    Eigen::MatrixXd Y = solver.solve(X);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(Y);
    Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(n, block);
    Eigen::MatrixXd AQ = A * Q;
    Eigen::MatrixXd H = Q.transpose() * AQ;
    H = 0.5 * (H + H.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ritz(H);
    theta = ritz.eigenvalues();
    X = Q * ritz.eigenvectors();
    Eigen::MatrixXd AX = AQ * ritz.eigenvectors();
    worst = 0.0;
    for (int i = 0; i < count; ++i) {
      resid[i] = (AX.col(i) - theta(i) * X.col(i)).norm() / (theta(i) * X.col(i).norm());
      worst = std::max(worst, resid[i]);
    }
    if (worst < opts.relative_residual) {
      converged = true;
      break;
    }
  }
  if (!converged)
    throw SolverError("fd_spectrum: subspace iteration did not converge, worst relative residual " +
                          std::to_string(worst),
                      worst);

  ModeSpectrum ms;
  ms.resolution = std::max(grid.layout.hx, grid.layout.hy);
  for (int i = 0; i < count; ++i) {
    ModeEntry e;
    e.eigenvalue = theta(i);
    e.cutoff_mass = std::sqrt(theta(i));
    e.label = join_label("TM#", i + 1);
    e.residual = resid[i];
    e.eigenfunction = grid.layout;
    for (std::size_t node = 0; node < grid.unknown.size(); ++node)
      if (grid.unknown[node] >= 0)
        e.eigenfunction.values[node] = X(grid.unknown[node], i);
    normalize(e.eigenfunction);
    fix_sign(e.eigenfunction);
    ms.entries.push_back(std::move(e));
  }
  assign_clusters(ms.entries);
  return ms;
}

double check_completeness(const ModeSpectrum &ms, const GridFunction &test) {
  GridFunction r = test;
  for (const auto &e : ms.entries) {
    const double c = inner_product(e.eigenfunction, test);
    for (std::size_t i = 0; i < r.values.size(); ++i)
      r.values[i] -= c * e.eigenfunction.values[i];
  }
  return std::sqrt(inner_product(r, r));
}

RasterMask read_raster(std::istream &in) {
  RasterMask m;
  std::string line;
  int lineno = 0;
  bool have_header = false;
  std::vector<std::string> rows;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r')
      line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#')
      continue;
    if (!have_header) {
      std::istringstream hs(line);
      std::string key;
      hs >> key >> m.spacing;
      if (key != "spacing" || !hs || !positive_finite(m.spacing))
        throw std::invalid_argument("raster line " + std::to_string(lineno) +
                                    ": expected header 'spacing <positive value>'");
      have_header = true;
      continue;
    }
    std::string row;
    for (char c : line) {
      if (c == '0' || c == '1')
        row.push_back(c);
      else if (c != ' ' && c != '\t')
        throw std::invalid_argument("raster line " + std::to_string(lineno) +
                                    ": unexpected character '" + std::string(1, c) + "'");
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw std::invalid_argument("raster line " + std::to_string(lineno) + ": ragged row");
    rows.push_back(row);
  }
  if (!have_header || rows.empty())
    throw std::invalid_argument("raster: missing header or rows");
  m.ny = static_cast<int>(rows.size());
  m.nx = static_cast<int>(rows.front().size());
  for (const auto &r : rows)
    for (char c : r)
      m.cells.push_back(c == '1' ? 1 : 0);
  return m;
}

RasterMask load_raster_file(const std::string &path) {
  std::ifstream in(path);
  if (!in)
    throw std::invalid_argument("raster: cannot open " + path);
  return read_raster(in);
}

} // namespace wgcorr
