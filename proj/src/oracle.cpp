#include "em/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include <json.hpp>

#include "em/container.hpp"
#include "em/errors.hpp"
#include "em/rng.hpp"

namespace em::oracle {

namespace {

using vec3 = std::array<double, 3>;

double dot(const vec3& a, const vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

vec3 cross(const vec3& a, const vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

double norm(const vec3& a) { return std::sqrt(dot(a, a)); }

std::array<cd, 3> cross(const vec3& a, const std::array<cd, 3>& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

void check_medium(const Medium& m) {
  if (!(m.eps_r >= 1.0) || !std::isfinite(m.eps_r))
    throw ValidationError("medium: eps_r must be finite and >= 1");
  if (!(m.sigma >= 0.0) || !std::isfinite(m.sigma))
    throw ValidationError("medium: sigma must be finite and >= 0");
}

}  // namespace

cd complex_wavenumber(double omega, const Medium& medium) {
  if (!(omega > 0) || !std::isfinite(omega))
    throw ValidationError("complex_wavenumber: omega must be positive and finite");
  check_medium(medium);
  const cd eps_eff(consts::eps0 * medium.eps_r, -medium.sigma / omega);
  // Principal sqrt of a value in the fourth quadrant (or positive real axis)
  // lands at Re > 0, Im <= 0.
  return omega * std::sqrt(consts::mu0 * eps_eff);
}

void PlaneWaveSpec::validate() const {
  check_medium(medium);
  const double dn = norm(direction);
  if (std::abs(dn - 1.0) > 1e-9)
    throw ValidationError("plane wave: direction must be a unit vector");
  cd proj = polarization[0] * direction[0] + polarization[1] * direction[1] +
            polarization[2] * direction[2];
  if (std::abs(proj) > 1e-9)
    throw ValidationError("plane wave: polarization must be perpendicular to direction");
  double pn = 0;
  for (const cd& p : polarization) pn += std::norm(p);
  if (!(pn > 0) || !std::isfinite(pn))
    throw ValidationError("plane wave: polarization must be nonzero and finite");
  if (!std::isfinite(amplitude.real()) || !std::isfinite(amplitude.imag()))
    throw ValidationError("plane wave: amplitude must be finite");
}

void eval_plane_wave(const PlaneWaveSpec& spec, const GridGeom& geom, double omega,
                     VectorPhasorField& e, VectorPhasorField& b) {
  std::vector<PlaneWaveSpec> one{spec};
  eval_plane_waves(one, geom, omega, e, b);
}

void eval_plane_waves(const std::vector<PlaneWaveSpec>& specs, const GridGeom& geom,
                      double omega, VectorPhasorField& e, VectorPhasorField& b) {
  geom.validate();
  if (specs.empty()) throw ValidationError("plane waves: need at least one wave");
  for (std::size_t w = 1; w < specs.size(); ++w) {
    if (specs[w].medium.eps_r != specs[0].medium.eps_r ||
        specs[w].medium.sigma != specs[0].medium.sigma)
      throw ValidationError("plane waves: all waves must share one medium");
  }
  e = make_phasor_field(geom);
  b = make_phasor_field(geom);

  struct Wave {
    cd k;
    vec3 d;
    std::array<cd, 3> ef;  // complex E amplitude per axis
    std::array<cd, 3> bf;  // complex B amplitude per axis, microtesla
  };
  std::vector<Wave> waves;
  waves.reserve(specs.size());
  for (const PlaneWaveSpec& s : specs) {
    s.validate();
    Wave w;
    w.k = complex_wavenumber(omega, s.medium);
    w.d = s.direction;
    const std::array<cd, 3> dxp = cross(s.direction, s.polarization);
    for (int a = 0; a < 3; ++a) {
      w.ef[a] = s.polarization[a] * s.amplitude;
      w.bf[a] = dxp[a] * s.amplitude * (w.k / omega) * 1e6;
    }
    waves.push_back(w);
  }

  for (int i = 0; i < geom.nx; ++i)
    for (int j = 0; j < geom.ny; ++j)
      for (int k = 0; k < geom.nz; ++k) {
        const std::size_t v = geom.idx(i, j, k);
        const vec3 r = geom.pos(i, j, k);
        for (const Wave& w : waves) {
          const cd ph = std::exp(cd(0, -1) * w.k * dot(w.d, r));
          for (int a = 0; a < 3; ++a) {
            const cd ev = w.ef[a] * ph;
            const cd bv = w.bf[a] * ph;
            e.re(a)[v] += ev.real();
            e.im(a)[v] += ev.imag();
            b.re(a)[v] += bv.real();
            b.im(a)[v] += bv.imag();
          }
        }
      }
}

void DipoleArraySpec::validate(const GridGeom& geom) const {
  geom.validate();
  check_medium(medium);
  if (medium.sigma != 0.0)
    throw ValidationError("dipole array: medium must be lossless (sigma = 0)");
  if (elements.empty()) throw ValidationError("dipole array: need at least one element");
  if (!(r_min >= 0) || !std::isfinite(r_min))
    throw ValidationError("dipole array: r_min must be finite and >= 0");
  const std::array<double, 3> ext{(geom.nx - 1) * geom.hx, (geom.ny - 1) * geom.hy,
                                  (geom.nz - 1) * geom.hz};
  for (const DipoleElement& el : elements) {
    if (std::abs(norm(el.direction) - 1.0) > 1e-9)
      throw ValidationError("dipole array: element direction must be a unit vector");
    if (!std::isfinite(el.moment.real()) || !std::isfinite(el.moment.imag()) ||
        !std::isfinite(el.amplitude) || !std::isfinite(el.phase))
      throw ValidationError("dipole array: element drive must be finite");
    for (int a = 0; a < 3; ++a) {
      if (!std::isfinite(el.center[a]))
        throw ValidationError("dipole array: element center must be finite");
      // Centers must sit inside the grid bounding box inflated by 10%.
      if (el.center[a] < geom.origin[a] - 0.1 * ext[a] ||
          el.center[a] > geom.origin[a] + 1.1 * ext[a])
        throw ValidationError("dipole array: element center outside the inflated grid box");
    }
  }
}

std::size_t eval_dipole_array(const DipoleArraySpec& spec, const GridGeom& geom,
                              double omega, VectorPhasorField& e, VectorPhasorField& b) {
  spec.validate(geom);
  e = make_phasor_field(geom);
  b = make_phasor_field(geom);

  const double k = complex_wavenumber(omega, spec.medium).real();
  const double eps = consts::eps0 * spec.medium.eps_r;
  const double zimp = std::sqrt(consts::mu0 / eps);
  const double inv4pi = 1.0 / (4.0 * consts::pi);

  struct Drive {
    vec3 center;
    std::array<cd, 3> m;  // complex moment vector
  };
  std::vector<Drive> drives;
  drives.reserve(spec.elements.size());
  for (const DipoleElement& el : spec.elements) {
    const cd scale = el.moment * el.amplitude * std::exp(cd(0, el.phase));
    drives.push_back({el.center,
                      {scale * el.direction[0], scale * el.direction[1],
                       scale * el.direction[2]}});
  }

  std::size_t masked = 0;
  for (int i = 0; i < geom.nx; ++i)
    for (int j = 0; j < geom.ny; ++j)
      for (int kk = 0; kk < geom.nz; ++kk) {
        const std::size_t v = geom.idx(i, j, kk);
        const vec3 p = geom.pos(i, j, kk);

        bool guard = false;
        for (const Drive& d : drives) {
          const vec3 rv{p[0] - d.center[0], p[1] - d.center[1], p[2] - d.center[2]};
          if (norm(rv) < spec.r_min) {
            guard = true;
            break;
          }
        }
        if (guard) {
          ++masked;
          continue;  // fields stay zero at guarded voxels
        }

        for (const Drive& d : drives) {
          const vec3 rv{p[0] - d.center[0], p[1] - d.center[1], p[2] - d.center[2]};
          const double r = norm(rv);
          const vec3 rh{rv[0] / r, rv[1] / r, rv[2] / r};
          const cd expf = std::exp(cd(0, -k * r));

          const cd rdotm = rh[0] * d.m[0] + rh[1] * d.m[1] + rh[2] * d.m[2];
          const std::array<cd, 3> rxm = cross(rh, d.m);
          // (rh x m) x rh = m - rh (rh . m)
          const std::array<cd, 3> trans{d.m[0] - rh[0] * rdotm, d.m[1] - rh[1] * rdotm,
                                        d.m[2] - rh[2] * rdotm};

          const cd rad = k * k * expf / r;  // radiation term
          const cd near = (1.0 / (r * r * r) + cd(0, k / (r * r))) * expf;
          const cd efac = -zimp * inv4pi * rad * (1.0 + 1.0 / cd(0, k * r));

          for (int a = 0; a < 3; ++a) {
            const cd hv = inv4pi * (rad * trans[a] + near * (3.0 * rh[a] * rdotm - d.m[a]));
            const cd bv = consts::mu0 * hv * 1e6;  // tesla -> microtesla
            const cd ev = efac * rxm[a];
            e.re(a)[v] += ev.real();
            e.im(a)[v] += ev.imag();
            b.re(a)[v] += bv.real();
            b.im(a)[v] += bv.imag();
          }
        }
      }
  return masked;
}

void DatasetSpec::validate() const {
  geom.validate();
  if (sample_count < 2) throw ValidationError("dataset: sample_count must be >= 2");
  if (!(frequency_hz > 0) || !std::isfinite(frequency_hz))
    throw ValidationError("dataset: frequency_hz must be positive and finite");
  if (!(train_fraction > 0) || !(test_fraction > 0) ||
      std::abs(train_fraction + test_fraction - 1.0) > 1e-9)
    throw ValidationError("dataset: split fractions must be positive and sum to 1");
  if (!(eps_r_min >= 1) || !(eps_r_max >= eps_r_min))
    throw ValidationError("dataset: eps_r range invalid");
  if (!(sigma_min >= 0) || !(sigma_max >= sigma_min))
    throw ValidationError("dataset: sigma range invalid");
  if (max_waves < 1 || max_waves > 8) throw ValidationError("dataset: max_waves must be 1..8");
  if (dipole_elements < 1 || dipole_elements > 16)
    throw ValidationError("dataset: dipole_elements must be 1..16");
  if (!(dipole_eps_r_min >= 1) || !(dipole_eps_r_max >= dipole_eps_r_min))
    throw ValidationError("dataset: dipole eps_r range invalid");
  if (!(dipole_moment > 0)) throw ValidationError("dataset: dipole_moment must be positive");
}

DatasetSpec default_dataset_spec(DatasetFamily family) {
  DatasetSpec spec;
  spec.family = family;
  const double lambda0 = consts::c0 / consts::default_frequency_hz;
  const double h = lambda0 / 40.0;
  spec.geom.nx = spec.geom.ny = spec.geom.nz = 32;
  spec.geom.hx = spec.geom.hy = spec.geom.hz = h;
  for (int a = 0; a < 3; ++a) spec.geom.origin[a] = -0.5 * 31.0 * h;
  return spec;
}

std::pair<int, int> split_counts(const DatasetSpec& spec) {
  const int n = spec.sample_count;
  int n_test = static_cast<int>(std::floor(n * spec.test_fraction));
  n_test = std::clamp(n_test, 1, n - 1);
  return {n - n_test, n_test};
}

namespace {

vec3 domain_center(const GridGeom& g) {
  return {g.origin[0] + 0.5 * (g.nx - 1) * g.hx, g.origin[1] + 0.5 * (g.ny - 1) * g.hy,
          g.origin[2] + 0.5 * (g.nz - 1) * g.hz};
}

vec3 domain_extent(const GridGeom& g) {
  return {(g.nx - 1) * g.hx, (g.ny - 1) * g.hy, (g.nz - 1) * g.hz};
}

/// Ellipsoid region used as the evaluation mask; also painted into the
/// material volume for the dipole family.
struct Ellipsoid {
  vec3 center;
  vec3 semi;

  bool contains(const vec3& p) const {
    double q = 0;
    for (int a = 0; a < 3; ++a) {
      const double t = (p[a] - center[a]) / semi[a];
      q += t * t;
    }
    return q <= 1.0;
  }
};

Ellipsoid random_ellipsoid(const GridGeom& g, Rng& rng) {
  const vec3 c = domain_center(g);
  const vec3 ext = domain_extent(g);
  Ellipsoid e;
  for (int a = 0; a < 3; ++a) {
    e.center[a] = c[a] + rng.uniform(-0.1, 0.1) * ext[a];
    e.semi[a] = rng.uniform(0.15, 0.30) * ext[a];
  }
  return e;
}

SubjectMask mask_from_ellipsoid(const GridGeom& g, const Ellipsoid& e) {
  SubjectMask m;
  m.geom = g;
  m.inside.assign(g.cells(), 0);
  for (int i = 0; i < g.nx; ++i)
    for (int j = 0; j < g.ny; ++j)
      for (int k = 0; k < g.nz; ++k)
        m.inside[g.idx(i, j, k)] = e.contains(g.pos(i, j, k)) ? 1 : 0;
  return m;
}

SampleRecord generate_plane_wave_sample(const DatasetSpec& spec, Rng& rng) {
  const GridGeom& g = spec.geom;
  const double omega = 2.0 * consts::pi * spec.frequency_hz;

  Medium medium;
  medium.eps_r = rng.uniform(spec.eps_r_min, spec.eps_r_max);
  medium.sigma = rng.uniform(spec.sigma_min, spec.sigma_max);
  const double k_re = complex_wavenumber(omega, medium).real();

  const int n_waves = 1 + rng.uniform_int(spec.max_waves);
  std::vector<PlaneWaveSpec> waves(n_waves);
  std::vector<vec3> dirs(spec.max_waves, vec3{1, 0, 0});
  std::vector<double> amps(spec.max_waves, 0.0);
  std::vector<double> phases(spec.max_waves, 0.0);
  for (int w = 0; w < n_waves; ++w) {
    const double z = rng.uniform(-1.0, 1.0);
    const double az = rng.uniform(0.0, 2.0 * consts::pi);
    const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
    const vec3 d{rho * std::cos(az), rho * std::sin(az), z};
    vec3 p = cross(vec3{0, 0, 1}, d);
    const double pn = norm(p);
    if (pn < 1e-6) {
      p = {1, 0, 0};  // propagation along z: any transverse direction works
    } else {
      for (double& c : p) c /= pn;
    }
    const double amp = rng.uniform(0.5, 1.5);
    const double phase = rng.uniform(0.0, 2.0 * consts::pi);

    waves[w].direction = d;
    waves[w].polarization = {cd(p[0], 0), cd(p[1], 0), cd(p[2], 0)};
    waves[w].amplitude = amp * std::exp(cd(0, phase));
    waves[w].medium = medium;
    dirs[w] = d;
    amps[w] = amp;
    phases[w] = phase;
  }

  SampleRecord rec;
  rec.geom = g;
  rec.frequency_hz = spec.frequency_hz;

  rec.materials.geom = g;
  rec.materials.density = make_scalar_grid(g, 1000.0);
  rec.materials.permittivity = make_scalar_grid(g, consts::eps0 * medium.eps_r);
  rec.materials.conductivity = make_scalar_grid(g, medium.sigma);

  // Occupancy channels carry standing fringes of each wave so the drive is
  // recoverable from the input stack alone.
  rec.excitation.channels.resize(spec.max_waves);
  for (int c = 0; c < spec.max_waves; ++c) {
    CoilChannel& ch = rec.excitation.channels[c];
    ch.amplitude = c < n_waves ? amps[c] : 0.0;
    ch.phase = c < n_waves ? phases[c] : 0.0;
    ch.occupancy = make_scalar_grid(g);
    const vec3& d = dirs[c];
    for (int i = 0; i < g.nx; ++i)
      for (int j = 0; j < g.ny; ++j)
        for (int kk = 0; kk < g.nz; ++kk) {
          const vec3 r = g.pos(i, j, kk);
          ch.occupancy.values[g.idx(i, j, kk)] = 0.5 * (1.0 + std::cos(k_re * dot(d, r)));
        }
  }

  eval_plane_waves(waves, g, omega, rec.target_e, rec.target_b);
  rec.mask = mask_from_ellipsoid(g, random_ellipsoid(g, rng));
  rec.validate();
  return rec;
}

SampleRecord generate_dipole_sample(const DatasetSpec& spec, Rng& rng,
                                    std::size_t* masked_voxels) {
  const GridGeom& g = spec.geom;
  const double omega = 2.0 * consts::pi * spec.frequency_hz;
  const vec3 c = domain_center(g);
  const vec3 ext = domain_extent(g);
  const double min_ext = std::min({ext[0], ext[1], ext[2]});
  const double max_h = std::max({g.hx, g.hy, g.hz});

  DipoleArraySpec array;
  array.medium.eps_r = rng.uniform(spec.dipole_eps_r_min, spec.dipole_eps_r_max);
  array.medium.sigma = 0.0;
  array.r_min = 2.0 * max_h;

  const int n_el = spec.dipole_elements;
  const double ring_r = 0.35 * min_ext;
  const double angle0 = rng.uniform(0.0, 2.0 * consts::pi / n_el);
  array.elements.resize(n_el);
  for (int el = 0; el < n_el; ++el) {
    DipoleElement& d = array.elements[el];
    const double ang = angle0 + 2.0 * consts::pi * el / n_el;
    d.center = {c[0] + ring_r * std::cos(ang), c[1] + ring_r * std::sin(ang), c[2]};
    d.direction = {0, 0, 1};
    d.moment = cd(spec.dipole_moment, 0);
    d.amplitude = rng.uniform(0.5, 1.5);
    d.phase = rng.uniform(0.0, 2.0 * consts::pi);
  }

  SampleRecord rec;
  rec.geom = g;
  rec.frequency_hz = spec.frequency_hz;

  const Ellipsoid subject = random_ellipsoid(g, rng);
  const double subject_density = rng.uniform(900.0, 1100.0);
  const double subject_sigma = rng.uniform(0.3, 1.0);
  rec.materials.geom = g;
  rec.materials.density = make_scalar_grid(g);
  rec.materials.permittivity = make_scalar_grid(g, consts::eps0 * array.medium.eps_r);
  rec.materials.conductivity = make_scalar_grid(g);
  for (int i = 0; i < g.nx; ++i)
    for (int j = 0; j < g.ny; ++j)
      for (int k = 0; k < g.nz; ++k) {
        const std::size_t v = g.idx(i, j, k);
        const bool in = subject.contains(g.pos(i, j, k));
        rec.materials.density.values[v] = in ? subject_density : 1.2;
        rec.materials.conductivity.values[v] = in ? subject_sigma : 0.0;
      }

  rec.excitation.channels.resize(n_el);
  const double ball_r = 2.0 * max_h;
  for (int el = 0; el < n_el; ++el) {
    CoilChannel& ch = rec.excitation.channels[el];
    ch.amplitude = array.elements[el].amplitude;
    ch.phase = array.elements[el].phase;
    ch.occupancy = make_scalar_grid(g);
    const vec3& dc = array.elements[el].center;
    for (int i = 0; i < g.nx; ++i)
      for (int j = 0; j < g.ny; ++j)
        for (int k = 0; k < g.nz; ++k) {
          const vec3 p = g.pos(i, j, k);
          const vec3 rv{p[0] - dc[0], p[1] - dc[1], p[2] - dc[2]};
          ch.occupancy.values[g.idx(i, j, k)] = norm(rv) <= ball_r ? 1.0 : 0.0;
        }
  }

  const std::size_t masked = eval_dipole_array(array, g, omega, rec.target_e, rec.target_b);
  if (masked_voxels) *masked_voxels = masked;

  rec.mask = subject_mask_from_materials(rec.materials, 0.05);
  rec.validate();
  return rec;
}

}  // namespace

SampleRecord generate_sample(const DatasetSpec& spec, int index, std::size_t* masked_voxels) {
  spec.validate();
  if (index < 0 || index >= spec.sample_count)
    throw ValidationError("generate_sample: index out of range");
  Rng rng(mix_seed(spec.seed, static_cast<std::uint64_t>(index) + 1));
  if (masked_voxels) *masked_voxels = 0;
  if (spec.family == DatasetFamily::plane_waves) return generate_plane_wave_sample(spec, rng);
  return generate_dipole_sample(spec, rng, masked_voxels);
}

void generate_dataset(const DatasetSpec& spec, const std::string& train_path,
                      const std::string& test_path) {
  spec.validate();
  const auto [n_train, n_test] = split_counts(spec);
  (void)n_test;

  std::vector<SampleRecord> train, test;
  std::vector<std::size_t> train_masked, test_masked;
  for (int s = 0; s < spec.sample_count; ++s) {
    std::size_t masked = 0;
    SampleRecord rec = generate_sample(spec, s, &masked);
    if (s < n_train) {
      train.push_back(std::move(rec));
      train_masked.push_back(masked);
    } else {
      test.push_back(std::move(rec));
      test_masked.push_back(masked);
    }
  }
  write_container(train_path, train, train_masked);
  write_container(test_path, test, test_masked);
}

namespace {

constexpr const char* family_name(DatasetFamily f) {
  return f == DatasetFamily::plane_waves ? "plane_waves" : "dipole_array";
}

DatasetFamily family_from_name(const std::string& name) {
  if (name == "plane_waves") return DatasetFamily::plane_waves;
  if (name == "dipole_array") return DatasetFamily::dipole_array;
  throw ValidationError("dataset: unknown family '" + name + "'");
}

}  // namespace

DatasetSpec dataset_spec_from_json_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("dataset recipe: invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ValidationError("dataset recipe: expected a JSON object");

  DatasetSpec spec = default_dataset_spec();
  try {
    if (j.contains("family")) spec.family = family_from_name(j.at("family").get<std::string>());
    if (j.contains("sample_count")) spec.sample_count = j.at("sample_count").get<int>();
    if (j.contains("seed")) spec.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("frequency_hz")) spec.frequency_hz = j.at("frequency_hz").get<double>();
    if (j.contains("train_fraction")) spec.train_fraction = j.at("train_fraction").get<double>();
    if (j.contains("test_fraction")) spec.test_fraction = j.at("test_fraction").get<double>();
    if (j.contains("grid")) {
      const nlohmann::json& g = j.at("grid");
      spec.geom.nx = g.at("nx").get<int>();
      spec.geom.ny = g.at("ny").get<int>();
      spec.geom.nz = g.at("nz").get<int>();
      spec.geom.hx = g.at("hx").get<double>();
      spec.geom.hy = g.at("hy").get<double>();
      spec.geom.hz = g.at("hz").get<double>();
      if (g.contains("origin")) {
        const auto o = g.at("origin").get<std::vector<double>>();
        if (o.size() != 3) throw ValidationError("dataset recipe: grid.origin needs 3 entries");
        spec.geom.origin = {o[0], o[1], o[2]};
      } else {
        spec.geom.origin[0] = -0.5 * (spec.geom.nx - 1) * spec.geom.hx;
        spec.geom.origin[1] = -0.5 * (spec.geom.ny - 1) * spec.geom.hy;
        spec.geom.origin[2] = -0.5 * (spec.geom.nz - 1) * spec.geom.hz;
      }
    }
    if (j.contains("eps_r_min")) spec.eps_r_min = j.at("eps_r_min").get<double>();
    if (j.contains("eps_r_max")) spec.eps_r_max = j.at("eps_r_max").get<double>();
    if (j.contains("sigma_min")) spec.sigma_min = j.at("sigma_min").get<double>();
    if (j.contains("sigma_max")) spec.sigma_max = j.at("sigma_max").get<double>();
    if (j.contains("max_waves")) spec.max_waves = j.at("max_waves").get<int>();
    if (j.contains("dipole_elements")) spec.dipole_elements = j.at("dipole_elements").get<int>();
    if (j.contains("dipole_eps_r_min"))
      spec.dipole_eps_r_min = j.at("dipole_eps_r_min").get<double>();
    if (j.contains("dipole_eps_r_max"))
      spec.dipole_eps_r_max = j.at("dipole_eps_r_max").get<double>();
    if (j.contains("dipole_moment")) spec.dipole_moment = j.at("dipole_moment").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("dataset recipe: ") + e.what());
  }
  spec.validate();
  return spec;
}

std::string dataset_spec_to_json_text(const DatasetSpec& spec) {
  nlohmann::json j;
  j["family"] = family_name(spec.family);
  j["sample_count"] = spec.sample_count;
  j["seed"] = spec.seed;
  j["frequency_hz"] = spec.frequency_hz;
  j["train_fraction"] = spec.train_fraction;
  j["test_fraction"] = spec.test_fraction;
  j["grid"] = {{"nx", spec.geom.nx},         {"ny", spec.geom.ny}, {"nz", spec.geom.nz},
               {"hx", spec.geom.hx},         {"hy", spec.geom.hy}, {"hz", spec.geom.hz},
               {"origin", spec.geom.origin}};
  j["eps_r_min"] = spec.eps_r_min;
  j["eps_r_max"] = spec.eps_r_max;
  j["sigma_min"] = spec.sigma_min;
  j["sigma_max"] = spec.sigma_max;
  j["max_waves"] = spec.max_waves;
  j["dipole_elements"] = spec.dipole_elements;
  j["dipole_eps_r_min"] = spec.dipole_eps_r_min;
  j["dipole_eps_r_max"] = spec.dipole_eps_r_max;
  j["dipole_moment"] = spec.dipole_moment;
  return j.dump(2) + "\n";
}

}  // namespace em::oracle
