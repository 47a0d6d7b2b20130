#ifndef EM_DIFFOPS_HPP
#define EM_DIFFOPS_HPP

#include "em/grid.hpp"

namespace em::diffops {

/// Second-order central differences on the collocated grid, evaluated only on
/// interior voxels (one layer in from every face). No staggering, no one-sided
/// boundary stencils.
struct StencilSpec {
  enum class Scheme { central2 };
  enum class Boundary { interior_only };
  Scheme scheme = Scheme::central2;
  Boundary boundary = Boundary::interior_only;
};

enum class ResidualKind { gauss_b, faraday, ampere, generic };

/// A complex scalar (ncomp = 1) or complex 3-vector (ncomp = 3) grid whose
/// values are zero outside the interior region by construction.
struct ResidualField {
  GridGeom geom;
  ResidualKind kind = ResidualKind::generic;
  int ncomp = 1;
  std::vector<double> re, im;  // ncomp * cells each, z-fastest

  std::size_t comp_offset(int c) const { return std::size_t(c) * geom.cells(); }
};

ResidualField make_residual(const GridGeom& geom, int ncomp,
                            ResidualKind kind = ResidualKind::generic);

/// Number of interior voxels: (nx-2)(ny-2)(nz-2).
std::size_t interior_count(const GridGeom& geom);

/// div F on the interior, Re and Im parts independently.
ResidualField divergence(const VectorPhasorField& f, const StencilSpec& spec = {});

/// curl F on the interior (complex 3-vector).
ResidualField curl(const VectorPhasorField& f, const StencilSpec& spec = {});

/// Exact transposes of divergence/curl as linear maps, used by the
/// reverse-mode gradient of the physics loss:
///   <divergence(F), G> = <F, divergence_adjoint(G)> for all F, G,
/// with the real inner product over concatenated Re/Im channels.
/// G must be zero outside the interior.
VectorPhasorField divergence_adjoint(const ResidualField& g, const StencilSpec& spec = {});
VectorPhasorField curl_adjoint(const ResidualField& g, const StencilSpec& spec = {});

/// Gauss's law of magnetism: residual = div B. Unit-agnostic (B may be stored
/// in any linear unit; the residual scales accordingly).
ResidualField gauss_residual_b(const VectorPhasorField& b, const StencilSpec& spec = {});

/// Faraday's law, e^{+iwt} convention: residual = curl E + i w B.
/// E in V/m and B in microtesla; B is converted to tesla internally.
ResidualField faraday_residual(const VectorPhasorField& e, const VectorPhasorField& b,
                               double omega, const StencilSpec& spec = {});

/// Ampere-Maxwell in nonmagnetic media: residual = curl B / mu0 - (sigma + i w eps) E.
/// B converted from microtesla internally; sigma/eps taken per voxel.
ResidualField ampere_residual(const VectorPhasorField& e, const VectorPhasorField& b,
                              const MaterialVolume& materials, double omega,
                              const StencilSpec& spec = {});

/// Mean over interior voxels of |residual|^2 (Re^2 + Im^2, summed over
/// components). Nonnegative; zero iff the residual vanishes on the interior.
double physics_loss(const ResidualField& r);

/// d physics_loss / d residual: (2 / interior_count) * residual, interior-only.
ResidualField physics_loss_grad(const ResidualField& r);

}  // namespace em::diffops

#endif
