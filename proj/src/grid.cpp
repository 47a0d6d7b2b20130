#include "em/grid.hpp"

#include <cmath>

namespace em {

void GridGeom::validate(const std::string& who) const {
  if (nx < 3 || ny < 3 || nz < 3)
    throw ValidationError(who + ": voxel counts must be >= 3, got " + std::to_string(nx) +
                          "x" + std::to_string(ny) + "x" + std::to_string(nz));
  if (!(hx > 0) || !(hy > 0) || !(hz > 0) || !std::isfinite(hx) || !std::isfinite(hy) ||
      !std::isfinite(hz))
    throw ValidationError(who + ": spacings must be positive and finite");
  for (double o : origin)
    if (!std::isfinite(o)) throw ValidationError(who + ": origin must be finite");
}

GridGeom make_geom(int nx, int ny, int nz, double hx, double hy, double hz,
                   std::array<double, 3> origin) {
  GridGeom g{nx, ny, nz, hx, hy, hz, origin};
  g.validate();
  return g;
}

ScalarGrid make_scalar_grid(const GridGeom& geom, double fill) {
  geom.validate();
  return ScalarGrid{geom, std::vector<double>(geom.cells(), fill)};
}

void validate_scalar_grid(const ScalarGrid& g, const std::string& who) {
  g.geom.validate(who);
  if (g.values.size() != g.geom.cells())
    throw ValidationError(who + ": values length " + std::to_string(g.values.size()) +
                          " != cell count " + std::to_string(g.geom.cells()));
  for (double v : g.values)
    if (!std::isfinite(v)) throw ValidationError(who + ": non-finite entry");
}

VectorPhasorField make_phasor_field(const GridGeom& geom) {
  geom.validate();
  VectorPhasorField f;
  f.geom = geom;
  for (auto& c : f.ch) c.assign(geom.cells(), 0.0);
  return f;
}

void MaterialVolume::validate() const {
  geom.validate("materials.geom");
  validate_scalar_grid(density, "materials.density");
  validate_scalar_grid(permittivity, "materials.permittivity");
  validate_scalar_grid(conductivity, "materials.conductivity");
  for (const auto* g : {&density, &permittivity, &conductivity})
    if (g->geom != geom)
      throw GeometryError("materials", "member grid geometry differs from materials.geom");
  const double eps_floor = consts::eps0 * 0.999;
  for (std::size_t i = 0; i < geom.cells(); ++i) {
    if (density.values[i] < 0) throw ValidationError("materials.density: negative entry");
    if (conductivity.values[i] < 0)
      throw ValidationError("materials.conductivity: negative entry");
    if (permittivity.values[i] < eps_floor)
      throw ValidationError("materials.permittivity: below vacuum floor");
  }
}

void CoilExcitation::validate(const GridGeom& geom) const {
  for (std::size_t c = 0; c < channels.size(); ++c) {
    const auto& ch = channels[c];
    const std::string who = "excitation.channels[" + std::to_string(c) + "]";
    if (!(ch.amplitude >= 0) || !std::isfinite(ch.amplitude))
      throw ValidationError(who + ".amplitude: must be finite and >= 0");
    if (!(ch.phase >= 0 && ch.phase < 2 * consts::pi))
      throw ValidationError(who + ".phase: must lie in [0, 2*pi)");
    validate_scalar_grid(ch.occupancy, who + ".occupancy");
    if (ch.occupancy.geom != geom)
      throw GeometryError(who + ".occupancy", "geometry differs from the sample grid");
    bool any = false;
    for (double v : ch.occupancy.values) {
      if (v < 0 || v > 1) throw ValidationError(who + ".occupancy: entry outside [0,1]");
      any = any || v > 0;
    }
    if (!any) throw ValidationError(who + ".occupancy: no positive voxel");
  }
}

std::size_t SubjectMask::count_inside() const {
  std::size_t n = 0;
  for (auto b : inside) n += b ? 1 : 0;
  return n;
}

void SubjectMask::validate() const {
  geom.validate("mask.geom");
  if (inside.size() != geom.cells())
    throw ValidationError("mask: length != cell count");
  const std::size_t n = count_inside();
  if (n == 0) throw ValidationError("mask: no inside voxel");
  if (n == inside.size()) throw ValidationError("mask: no outside voxel");
}

void SampleRecord::validate() const {
  geom.validate("record.geom");
  materials.validate();
  if (materials.geom != geom)
    throw GeometryError("materials", "geometry differs from record.geom");
  excitation.validate(geom);
  if (target_e.geom != geom)
    throw GeometryError("target_E", "geometry differs from record.geom");
  if (target_b.geom != geom)
    throw GeometryError("target_B", "geometry differs from record.geom");
  if (mask.geom != geom) throw GeometryError("mask", "geometry differs from record.geom");
  mask.validate();
  for (int a = 0; a < 3; ++a) {
    if (target_e.re(a).size() != geom.cells() || target_e.im(a).size() != geom.cells())
      throw ValidationError("target_E: channel length != cell count");
    if (target_b.re(a).size() != geom.cells() || target_b.im(a).size() != geom.cells())
      throw ValidationError("target_B: channel length != cell count");
  }
  for (int k = 0; k < 6; ++k) {
    for (double v : target_e.ch[k])
      if (!std::isfinite(v)) throw ValidationError("target_E: non-finite entry");
    for (double v : target_b.ch[k])
      if (!std::isfinite(v)) throw ValidationError("target_B: non-finite entry");
  }
  if (!(frequency_hz > 0) || !std::isfinite(frequency_hz))
    throw ValidationError("record.frequency_hz: must be positive and finite");
}

ChannelStack make_stack(const GridGeom& geom, int channels, double fill) {
  geom.validate();
  if (channels < 1) throw ValidationError("stack: channel count must be >= 1");
  return ChannelStack{geom, channels,
                      std::vector<double>(std::size_t(channels) * geom.cells(), fill)};
}

const std::vector<std::string>& target_channel_names() {
  static const std::vector<std::string> names = {
      "E_re_x", "E_im_x", "E_re_y", "E_im_y", "E_re_z", "E_im_z",
      "B_re_x", "B_im_x", "B_re_y", "B_im_y", "B_re_z", "B_im_z"};
  return names;
}

std::vector<std::string> input_channel_names(int channel_count) {
  std::vector<std::string> names = {"density", "permittivity", "conductivity"};
  for (int c = 0; c < channel_count; ++c) {
    names.push_back("coil" + std::to_string(c) + "_cos");
    names.push_back("coil" + std::to_string(c) + "_sin");
  }
  return names;
}

ChannelStack build_input_stack(const MaterialVolume& materials,
                               const CoilExcitation& excitation) {
  materials.validate();
  if (excitation.channel_count() < 1)
    throw ValidationError("excitation: channel_count must be >= 1");
  excitation.validate(materials.geom);

  const GridGeom& geom = materials.geom;
  const std::size_t n = geom.cells();
  ChannelStack stack = make_stack(geom, 3 + 2 * excitation.channel_count());

  double* d = stack.channel(0);
  double* p = stack.channel(1);
  double* s = stack.channel(2);
  for (std::size_t i = 0; i < n; ++i) {
    d[i] = materials.density.values[i] * kDensityScale;
    p[i] = materials.permittivity.values[i] * kPermittivityScale;
    s[i] = materials.conductivity.values[i] * kConductivityScale;
  }
  for (int c = 0; c < excitation.channel_count(); ++c) {
    const CoilChannel& ch = excitation.channels[c];
    const double wc = ch.amplitude * std::cos(ch.phase);
    const double ws = ch.amplitude * std::sin(ch.phase);
    double* cc = stack.channel(3 + 2 * c);
    double* cs = stack.channel(3 + 2 * c + 1);
    const double* occ = ch.occupancy.values.data();
    for (std::size_t i = 0; i < n; ++i) {
      cc[i] = occ[i] * wc;
      cs[i] = occ[i] * ws;
    }
  }
  return stack;
}

ChannelStack pack_targets(const VectorPhasorField& e, const VectorPhasorField& b) {
  if (e.geom != b.geom) throw GeometryError("target_B", "geometry differs from target_E");
  ChannelStack stack = make_stack(e.geom, kTargetChannels);
  const std::size_t n = e.geom.cells();
  for (int k = 0; k < 6; ++k) {
    std::copy_n(e.ch[k].data(), n, stack.channel(kEChannelOffset + k));
    std::copy_n(b.ch[k].data(), n, stack.channel(kBChannelOffset + k));
  }
  return stack;
}

std::pair<VectorPhasorField, VectorPhasorField> unpack_targets(const ChannelStack& stack) {
  if (stack.channels != kTargetChannels)
    throw ValidationError("unpack_targets: expected " + std::to_string(kTargetChannels) +
                          " channels, got " + std::to_string(stack.channels));
  VectorPhasorField e = make_phasor_field(stack.geom);
  VectorPhasorField b = make_phasor_field(stack.geom);
  const std::size_t n = stack.geom.cells();
  for (int k = 0; k < 6; ++k) {
    std::copy_n(stack.channel(kEChannelOffset + k), n, e.ch[k].data());
    std::copy_n(stack.channel(kBChannelOffset + k), n, b.ch[k].data());
  }
  return {std::move(e), std::move(b)};
}

SubjectMask subject_mask_from_materials(const MaterialVolume& materials, double sigma_min) {
  if (!(sigma_min >= 0)) throw ValidationError("sigma_min must be >= 0");
  materials.validate();
  SubjectMask mask;
  mask.geom = materials.geom;
  mask.inside.resize(materials.geom.cells());
  std::size_t n_in = 0;
  for (std::size_t i = 0; i < mask.inside.size(); ++i) {
    mask.inside[i] = materials.conductivity.values[i] > sigma_min ? 1 : 0;
    n_in += mask.inside[i];
  }
  if (n_in == 0)
    throw ValidationError(
        "degenerate mask: no voxel exceeds sigma_min; lower the threshold");
  if (n_in == mask.inside.size())
    throw ValidationError(
        "degenerate mask: every voxel exceeds sigma_min; raise the threshold");
  return mask;
}

}  // namespace em
