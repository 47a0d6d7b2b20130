#ifndef EM_GRID_HPP
#define EM_GRID_HPP

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "em/errors.hpp"

namespace em {

/// Physical constants and the phasor convention.
///
/// Time convention is e^{+i w t}: a harmonic field is F(r,t) = Re{F(r) e^{+iwt}}.
/// All Maxwell-residual signs in diffops assume it. Angular frequency is always
/// derived as w = 2*pi*frequency_hz, never stored separately.
namespace consts {
inline constexpr double pi = 3.14159265358979323846;
inline constexpr double mu0 = 4.0 * pi * 1e-7;           // H/m
inline constexpr double eps0 = 8.8541878128e-12;         // F/m
inline const double c0 = 299792458.0;                    // m/s (= 1/sqrt(mu0*eps0))
inline constexpr double default_frequency_hz = 297.2e6;  // 7T proton Larmor band
/// B fields are stored in microtesla; multiply by this to get tesla.
inline constexpr double microtesla_to_tesla = 1e-6;
}  // namespace consts

/// Regular voxel grid: counts per axis, spacing in meters, origin of voxel (0,0,0).
/// Storage order everywhere is x-major, y-middle, z-fastest.
struct GridGeom {
  int nx = 0, ny = 0, nz = 0;
  double hx = 0, hy = 0, hz = 0;
  std::array<double, 3> origin{0.0, 0.0, 0.0};

  std::size_t cells() const { return std::size_t(nx) * ny * nz; }
  std::size_t idx(int i, int j, int k) const {
    return (std::size_t(i) * ny + j) * nz + k;
  }
  /// Position of voxel center (i,j,k).
  std::array<double, 3> pos(int i, int j, int k) const {
    return {origin[0] + i * hx, origin[1] + j * hy, origin[2] + k * hz};
  }
  bool operator==(const GridGeom&) const = default;

  /// Throws ValidationError unless nx,ny,nz >= 3 and spacings are positive and finite.
  void validate(const std::string& who = "geom") const;
};

GridGeom make_geom(int nx, int ny, int nz, double hx, double hy, double hz,
                   std::array<double, 3> origin = {0.0, 0.0, 0.0});

/// One real-valued quantity on a grid.
struct ScalarGrid {
  GridGeom geom;
  std::vector<double> values;  // length nx*ny*nz, z-fastest

  double& at(int i, int j, int k) { return values[geom.idx(i, j, k)]; }
  double at(int i, int j, int k) const { return values[geom.idx(i, j, k)]; }
};

/// Constructs a ScalarGrid filled with `fill`; validates the geometry.
ScalarGrid make_scalar_grid(const GridGeom& geom, double fill = 0.0);
/// Throws ValidationError if sizes disagree or any entry is non-finite.
void validate_scalar_grid(const ScalarGrid& g, const std::string& who);

/// A 3-component complex vector field stored as six real channels:
/// (Re Fx, Im Fx, Re Fy, Im Fy, Re Fz, Im Fz), each on the shared grid.
/// Units: V/m for E fields, microtesla for B fields.
struct VectorPhasorField {
  GridGeom geom;
  std::array<std::vector<double>, 6> ch;

  std::vector<double>& re(int axis) { return ch[2 * axis]; }
  std::vector<double>& im(int axis) { return ch[2 * axis + 1]; }
  const std::vector<double>& re(int axis) const { return ch[2 * axis]; }
  const std::vector<double>& im(int axis) const { return ch[2 * axis + 1]; }
};

VectorPhasorField make_phasor_field(const GridGeom& geom);

/// Material grids in SI units: density kg/m^3, absolute permittivity F/m,
/// conductivity S/m. Nonmagnetic media only (mu = mu0 everywhere).
struct MaterialVolume {
  GridGeom geom;
  ScalarGrid density;
  ScalarGrid permittivity;
  ScalarGrid conductivity;

  /// density >= 0, conductivity >= 0, permittivity >= eps0*0.999.
  void validate() const;
};

/// One drive channel of the RF source: scalar amplitude/phase plus an
/// occupancy grid in [0,1] marking where the element sits.
struct CoilChannel {
  double amplitude = 0.0;  // dimensionless drive scale, >= 0
  double phase = 0.0;      // radians in [0, 2pi)
  ScalarGrid occupancy;
};

struct CoilExcitation {
  std::vector<CoilChannel> channels;
  int channel_count() const { return int(channels.size()); }
  void validate(const GridGeom& geom) const;
};

/// Phantom membership. True voxels form the "Subject" metric region.
struct SubjectMask {
  GridGeom geom;
  std::vector<std::uint8_t> inside;

  std::size_t count_inside() const;
  /// At least one inside and one outside voxel.
  void validate() const;
};

/// One training example.
struct SampleRecord {
  GridGeom geom;
  MaterialVolume materials;
  CoilExcitation excitation;
  VectorPhasorField target_e;  // V/m
  VectorPhasorField target_b;  // microtesla
  SubjectMask mask;
  double frequency_hz = consts::default_frequency_hz;

  double omega() const { return 2.0 * consts::pi * frequency_hz; }
  /// All members share geom; frequency positive.
  void validate() const;
};

/// A dense stack of real channels on one grid, channel-contiguous, z-fastest.
/// This is the tensor type the network consumes and produces.
struct ChannelStack {
  GridGeom geom;
  int channels = 0;
  std::vector<double> data;  // channels * cells

  double* channel(int c) { return data.data() + std::size_t(c) * geom.cells(); }
  const double* channel(int c) const { return data.data() + std::size_t(c) * geom.cells(); }
};

ChannelStack make_stack(const GridGeom& geom, int channels, double fill = 0.0);

// ---------------------------------------------------------------------------
// Channel ordering tables. Single-sourced: the container format, pack/unpack,
// the loss, and the evaluator all index targets through these.

/// The 12 network-output / target channels, in order.
const std::vector<std::string>& target_channel_names();
inline constexpr int kTargetChannels = 12;
inline constexpr int kEChannelOffset = 0;  // channels 0..5: E (re/im x,y,z)
inline constexpr int kBChannelOffset = 6;  // channels 6..11: B (re/im x,y,z)

/// Input channel names for a given coil count:
/// [density, permittivity, conductivity, coil0_cos, coil0_sin, ...].
std::vector<std::string> input_channel_names(int channel_count);

/// Normalization applied by build_input_stack:
/// density / 1000, permittivity / (100*eps0), conductivity / 1.
inline constexpr double kDensityScale = 1.0 / 1000.0;
inline const double kPermittivityScale = 1.0 / (100.0 * consts::eps0);
inline constexpr double kConductivityScale = 1.0;

// ---------------------------------------------------------------------------
// Operations

/// Assembles the network input: 3 normalized material channels followed by
/// per-coil (occupancy*amplitude*cos(phase), occupancy*amplitude*sin(phase)).
/// C = 3 + 2*channel_count. Throws GeometryError on grid mismatch and
/// ValidationError on NaN input.
ChannelStack build_input_stack(const MaterialVolume& materials,
                               const CoilExcitation& excitation);

/// Packs (E, B) into the 12-channel target stack; unpack is the exact inverse.
ChannelStack pack_targets(const VectorPhasorField& e, const VectorPhasorField& b);
std::pair<VectorPhasorField, VectorPhasorField> unpack_targets(const ChannelStack& stack);

/// Threshold rule: inside(v) = conductivity(v) > sigma_min. Throws
/// ValidationError when the result would be all-true or all-false.
SubjectMask subject_mask_from_materials(const MaterialVolume& materials, double sigma_min);

}  // namespace em

#endif
