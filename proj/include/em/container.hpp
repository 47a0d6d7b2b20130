#ifndef EM_CONTAINER_HPP
#define EM_CONTAINER_HPP

#include <string>
#include <vector>

#include "em/grid.hpp"

namespace em {

/// Dataset container, format "EMG1" version 1:
///   magic "EMG1" | u32 LE header length | UTF-8 JSON header | per-sample
///   raw little-endian f32 channel payloads in declared order, z-fastest.
/// The header carries version, sample_count, geom, frequency_hz,
/// channel_names, dtype ("f32"), per-sample coil drives (amplitude/phase
/// pairs under "excitations"), and per-sample "source_masked_voxels" counts.
/// No compression. All samples in one file share geometry and frequency.

inline constexpr char kContainerMagic[4] = {'E', 'M', 'G', '1'};
inline constexpr int kContainerVersion = 1;

/// Channel order inside a container holding `coil_count` drive channels:
/// density, permittivity, conductivity, coil{c}_occupancy..., the 12 target
/// channels, subject_mask.
std::vector<std::string> container_channel_names(int coil_count);

struct ContainerInfo {
  int version = 0;
  std::size_t sample_count = 0;
  GridGeom geom;
  double frequency_hz = 0;
  std::vector<std::string> channel_names;
  std::string dtype;
  std::vector<std::size_t> source_masked_voxels;  // per sample, may be empty
};

void write_container(const std::string& path, const std::vector<SampleRecord>& records,
                     const std::vector<std::size_t>& source_masked_voxels = {});

std::vector<SampleRecord> read_container(const std::string& path);

/// Parses only the header.
ContainerInfo read_container_info(const std::string& path);

}  // namespace em

#endif
