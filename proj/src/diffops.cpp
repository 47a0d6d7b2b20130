#include "em/diffops.hpp"

#include <cmath>

namespace em::diffops {

namespace {

void require_stencil_fits(const GridGeom& geom) {
  if (geom.nx < 3 || geom.ny < 3 || geom.nz < 3)
    throw ValidationError("stencil needs at least 3 voxels per axis, got " +
                          std::to_string(geom.nx) + "x" + std::to_string(geom.ny) + "x" +
                          std::to_string(geom.nz));
}

// Central difference along `axis` of one real channel, written into dst over
// the interior. dst is NOT cleared here.
void add_axis_derivative(const GridGeom& g, const double* src, double* dst, int axis,
                         double sign) {
  const std::ptrdiff_t stride[3] = {std::ptrdiff_t(g.ny) * g.nz, g.nz, 1};
  const double inv2h[3] = {sign / (2 * g.hx), sign / (2 * g.hy), sign / (2 * g.hz)};
  const std::ptrdiff_t s = stride[axis];
  const double w = inv2h[axis];
  for (int i = 1; i < g.nx - 1; ++i)
    for (int j = 1; j < g.ny - 1; ++j) {
      const std::size_t row = g.idx(i, j, 0);
      const double* p = src + row;
      double* q = dst + row;
      for (int k = 1; k < g.nz - 1; ++k) q[k] += w * (p[k + s] - p[k - s]);
    }
}

// Adjoint of add_axis_derivative, scatter form: each interior voxel v sends
// +w*gsrc(v) to v+axis and -w*gsrc(v) to v-axis. gsrc is zero outside the
// interior; dst covers the full grid.
void add_axis_derivative_adjoint(const GridGeom& g, const double* gsrc, double* dst,
                                 int axis, double sign) {
  const std::ptrdiff_t stride[3] = {std::ptrdiff_t(g.ny) * g.nz, g.nz, 1};
  const double inv2h[3] = {sign / (2 * g.hx), sign / (2 * g.hy), sign / (2 * g.hz)};
  const std::ptrdiff_t s = stride[axis];
  const double w = inv2h[axis];
  for (int i = 1; i < g.nx - 1; ++i)
    for (int j = 1; j < g.ny - 1; ++j) {
      const std::size_t row = g.idx(i, j, 0);
      const double* p = gsrc + row;
      double* q = dst + row;
      for (int k = 1; k < g.nz - 1; ++k) {
        const double v = w * p[k];
        q[k + s] += v;
        q[k - s] -= v;
      }
    }
}

}  // namespace

ResidualField make_residual(const GridGeom& geom, int ncomp, ResidualKind kind) {
  require_stencil_fits(geom);
  ResidualField r;
  r.geom = geom;
  r.kind = kind;
  r.ncomp = ncomp;
  r.re.assign(std::size_t(ncomp) * geom.cells(), 0.0);
  r.im.assign(std::size_t(ncomp) * geom.cells(), 0.0);
  return r;
}

std::size_t interior_count(const GridGeom& geom) {
  return std::size_t(geom.nx - 2) * (geom.ny - 2) * (geom.nz - 2);
}

ResidualField divergence(const VectorPhasorField& f, const StencilSpec&) {
  ResidualField r = make_residual(f.geom, 1);
  for (int axis = 0; axis < 3; ++axis) {
    add_axis_derivative(f.geom, f.re(axis).data(), r.re.data(), axis, +1.0);
    add_axis_derivative(f.geom, f.im(axis).data(), r.im.data(), axis, +1.0);
  }
  return r;
}

ResidualField curl(const VectorPhasorField& f, const StencilSpec&) {
  ResidualField r = make_residual(f.geom, 3);
  const GridGeom& g = f.geom;
  const std::size_t n = g.cells();
  // (curl F)_x = dFz/dy - dFy/dz, and cyclic.
  struct Term {
    int out, src, axis;
    double sign;
  };
  const Term terms[6] = {{0, 2, 1, +1}, {0, 1, 2, -1}, {1, 0, 2, +1},
                         {1, 2, 0, -1}, {2, 1, 0, +1}, {2, 0, 1, -1}};
  for (const Term& t : terms) {
    add_axis_derivative(g, f.re(t.src).data(), r.re.data() + t.out * n, t.axis, t.sign);
    add_axis_derivative(g, f.im(t.src).data(), r.im.data() + t.out * n, t.axis, t.sign);
  }
  return r;
}

VectorPhasorField divergence_adjoint(const ResidualField& g, const StencilSpec&) {
  if (g.ncomp != 1)
    throw ValidationError("divergence_adjoint: expected a scalar residual");
  VectorPhasorField f = make_phasor_field(g.geom);
  for (int axis = 0; axis < 3; ++axis) {
    add_axis_derivative_adjoint(g.geom, g.re.data(), f.re(axis).data(), axis, +1.0);
    add_axis_derivative_adjoint(g.geom, g.im.data(), f.im(axis).data(), axis, +1.0);
  }
  return f;
}

VectorPhasorField curl_adjoint(const ResidualField& g, const StencilSpec&) {
  if (g.ncomp != 3) throw ValidationError("curl_adjoint: expected a 3-vector residual");
  VectorPhasorField f = make_phasor_field(g.geom);
  const std::size_t n = g.geom.cells();
  struct Term {
    int out, src, axis;
    double sign;
  };
  // Transpose of the curl term table: output component `src` receives the
  // adjoint derivative of residual component `out`.
  const Term terms[6] = {{0, 2, 1, +1}, {0, 1, 2, -1}, {1, 0, 2, +1},
                         {1, 2, 0, -1}, {2, 1, 0, +1}, {2, 0, 1, -1}};
  for (const Term& t : terms) {
    add_axis_derivative_adjoint(g.geom, g.re.data() + t.out * n, f.re(t.src).data(),
                                t.axis, t.sign);
    add_axis_derivative_adjoint(g.geom, g.im.data() + t.out * n, f.im(t.src).data(),
                                t.axis, t.sign);
  }
  return f;
}

ResidualField gauss_residual_b(const VectorPhasorField& b, const StencilSpec& spec) {
  ResidualField r = divergence(b, spec);
  r.kind = ResidualKind::gauss_b;
  return r;
}

ResidualField faraday_residual(const VectorPhasorField& e, const VectorPhasorField& b,
                               double omega, const StencilSpec& spec) {
  if (e.geom != b.geom) throw GeometryError("B", "geometry differs from E");
  ResidualField r = curl(e, spec);
  r.kind = ResidualKind::faraday;
  const GridGeom& g = e.geom;
  const std::size_t n = g.cells();
  const double w = omega * consts::microtesla_to_tesla;
  // + i w B on the interior: re -= w*B_im, im += w*B_re.
  for (int c = 0; c < 3; ++c) {
    double* rre = r.re.data() + c * n;
    double* rim = r.im.data() + c * n;
    const double* bre = b.re(c).data();
    const double* bim = b.im(c).data();
    for (int i = 1; i < g.nx - 1; ++i)
      for (int j = 1; j < g.ny - 1; ++j) {
        const std::size_t row = g.idx(i, j, 0);
        for (int k = 1; k < g.nz - 1; ++k) {
          rre[row + k] -= w * bim[row + k];
          rim[row + k] += w * bre[row + k];
        }
      }
  }
  return r;
}

ResidualField ampere_residual(const VectorPhasorField& e, const VectorPhasorField& b,
                              const MaterialVolume& materials, double omega,
                              const StencilSpec& spec) {
  if (e.geom != b.geom) throw GeometryError("B", "geometry differs from E");
  if (materials.geom != e.geom)
    throw GeometryError("materials", "geometry differs from the fields");
  ResidualField r = curl(b, spec);
  r.kind = ResidualKind::ampere;
  const GridGeom& g = e.geom;
  const std::size_t n = g.cells();
  const double b_scale = consts::microtesla_to_tesla / consts::mu0;
  const double* sigma = materials.conductivity.values.data();
  const double* eps = materials.permittivity.values.data();
  // residual = curl(B_tesla)/mu0 - (sigma + i w eps) E on the interior.
  for (int c = 0; c < 3; ++c) {
    double* rre = r.re.data() + c * n;
    double* rim = r.im.data() + c * n;
    const double* ere = e.re(c).data();
    const double* eim = e.im(c).data();
    for (int i = 1; i < g.nx - 1; ++i)
      for (int j = 1; j < g.ny - 1; ++j) {
        const std::size_t row = g.idx(i, j, 0);
        for (int k = 1; k < g.nz - 1; ++k) {
          const std::size_t v = row + k;
          const double weps = omega * eps[v];
          rre[v] = rre[v] * b_scale - sigma[v] * ere[v] + weps * eim[v];
          rim[v] = rim[v] * b_scale - sigma[v] * eim[v] - weps * ere[v];
        }
      }
  }
  return r;
}

double physics_loss(const ResidualField& r) {
  const GridGeom& g = r.geom;
  const std::size_t n = g.cells();
  double sum = 0;
  for (int c = 0; c < r.ncomp; ++c) {
    const double* re = r.re.data() + c * n;
    const double* im = r.im.data() + c * n;
    for (int i = 1; i < g.nx - 1; ++i)
      for (int j = 1; j < g.ny - 1; ++j) {
        const std::size_t row = g.idx(i, j, 0);
        for (int k = 1; k < g.nz - 1; ++k)
          sum += re[row + k] * re[row + k] + im[row + k] * im[row + k];
      }
  }
  return sum / double(interior_count(g));
}

ResidualField physics_loss_grad(const ResidualField& r) {
  ResidualField g = make_residual(r.geom, r.ncomp, r.kind);
  const double scale = 2.0 / double(interior_count(r.geom));
  const GridGeom& gm = r.geom;
  const std::size_t n = gm.cells();
  for (int c = 0; c < r.ncomp; ++c)
    for (int i = 1; i < gm.nx - 1; ++i)
      for (int j = 1; j < gm.ny - 1; ++j) {
        const std::size_t row = gm.idx(i, j, 0) + c * n;
        for (int k = 1; k < gm.nz - 1; ++k) {
          g.re[row + k] = scale * r.re[row + k];
          g.im[row + k] = scale * r.im[row + k];
        }
      }
  return g;
}

}  // namespace em::diffops
