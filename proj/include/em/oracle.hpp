#ifndef EM_ORACLE_HPP
#define EM_ORACLE_HPP

#include <array>
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "em/grid.hpp"

namespace em::oracle {

using cd = std::complex<double>;

/// Homogeneous, nonmagnetic medium.
struct Medium {
  double eps_r = 1.0;  // relative permittivity, >= 1
  double sigma = 0.0;  // conductivity S/m, >= 0
};

/// Dispersion relation k = w * sqrt(mu0 * (eps0*eps_r - i*sigma/w)), branch
/// with Re(k) > 0 and Im(k) <= 0 so e^{-ik(d.r)} decays along propagation
/// under the e^{+iwt} convention.
cd complex_wavenumber(double omega, const Medium& medium);

/// Uniform plane wave: E(r) = p * a * e^{-ik(d.r)},
/// B(r) = (k/w) (d x p) * a * e^{-ik(d.r)} (stored in microtesla).
struct PlaneWaveSpec {
  std::array<double, 3> direction{0, 0, 1};  // unit
  std::array<cd, 3> polarization{cd(1, 0), cd(0, 0), cd(0, 0)};  // perpendicular to direction
  cd amplitude{1, 0};                        // V/m
  Medium medium;

  void validate() const;
};

void eval_plane_wave(const PlaneWaveSpec& spec, const GridGeom& geom, double omega,
                     VectorPhasorField& e, VectorPhasorField& b);

/// Sum of plane waves sharing one medium. Fields superpose linearly.
void eval_plane_waves(const std::vector<PlaneWaveSpec>& specs, const GridGeom& geom,
                      double omega, VectorPhasorField& e, VectorPhasorField& b);

/// One element of a magnetic-dipole array.
struct DipoleElement {
  std::array<double, 3> center{0, 0, 0};     // m
  std::array<double, 3> direction{0, 0, 1};  // unit moment direction
  cd moment{1, 0};                           // A*m^2
  double amplitude = 1.0;                    // drive scale
  double phase = 0.0;                        // radians
};

struct DipoleArraySpec {
  std::vector<DipoleElement> elements;
  Medium medium;        // lossless: sigma must be 0
  double r_min = 0.0;   // singularity guard radius; voxels closer than this
                        // to any center are zeroed and counted

  void validate(const GridGeom& geom) const;
};

/// Exact time-harmonic magnetic-dipole fields in a homogeneous lossless
/// medium, summed over elements with complex drives a*e^{i phi}. Returns the
/// number of voxels zeroed by the singularity guard.
std::size_t eval_dipole_array(const DipoleArraySpec& spec, const GridGeom& geom,
                              double omega, VectorPhasorField& e, VectorPhasorField& b);

enum class DatasetFamily { plane_waves, dipole_array };

/// Synthetic dataset recipe. Deterministic per (spec, seed).
struct DatasetSpec {
  DatasetFamily family = DatasetFamily::dipole_array;
  int sample_count = 24;
  GridGeom geom;                      // default set by default_dataset_spec()
  double frequency_hz = consts::default_frequency_hz;
  std::uint64_t seed = 0;
  double train_fraction = 19.0 / 24.0;
  double test_fraction = 5.0 / 24.0;
  // plane-wave family ranges
  double eps_r_min = 1.0, eps_r_max = 80.0;
  double sigma_min = 0.0, sigma_max = 2.0;
  int max_waves = 4;
  // dipole family
  int dipole_elements = 8;
  double dipole_eps_r_min = 1.0, dipole_eps_r_max = 2.0;
  double dipole_moment = 0.02;  // A*m^2

  void validate() const;
};

/// 32^3 grid at h = lambda0/40 for the default frequency.
DatasetSpec default_dataset_spec(DatasetFamily family = DatasetFamily::dipole_array);

/// Parses/serializes the JSON recipe used by the `gen` CLI subcommand.
DatasetSpec dataset_spec_from_json_text(const std::string& text);
std::string dataset_spec_to_json_text(const DatasetSpec& spec);

/// n_test = clamp(floor(n * test_fraction), 1, n-1); train takes the rest.
std::pair<int, int> split_counts(const DatasetSpec& spec);

/// Builds one sample (the `index`-th of the spec) deterministically.
SampleRecord generate_sample(const DatasetSpec& spec, int index,
                             std::size_t* masked_voxels = nullptr);

/// Writes train/test containers. Deterministic bytes per (spec, seed).
void generate_dataset(const DatasetSpec& spec, const std::string& train_path,
                      const std::string& test_path);

}  // namespace em::oracle

#endif
