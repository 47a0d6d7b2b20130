#include "em/container.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <json.hpp>

namespace em {

static_assert(std::endian::native == std::endian::little,
              "container I/O assumes a little-endian host");

using nlohmann::json;

std::vector<std::string> container_channel_names(int coil_count) {
  std::vector<std::string> names = {"density", "permittivity", "conductivity"};
  for (int c = 0; c < coil_count; ++c)
    names.push_back("coil" + std::to_string(c) + "_occupancy");
  for (const auto& n : target_channel_names()) names.push_back(n);
  names.push_back("subject_mask");
  return names;
}

namespace {

void append_f32(std::vector<float>& out, const std::vector<double>& values) {
  for (double v : values) out.push_back(static_cast<float>(v));
}

json geom_to_json(const GridGeom& g) {
  return json{{"nx", g.nx}, {"ny", g.ny}, {"nz", g.nz},
              {"hx", g.hx}, {"hy", g.hy}, {"hz", g.hz},
              {"origin", {g.origin[0], g.origin[1], g.origin[2]}}};
}

GridGeom geom_from_json(const json& j) {
  GridGeom g;
  g.nx = j.at("nx").get<int>();
  g.ny = j.at("ny").get<int>();
  g.nz = j.at("nz").get<int>();
  g.hx = j.at("hx").get<double>();
  g.hy = j.at("hy").get<double>();
  g.hz = j.at("hz").get<double>();
  const auto& o = j.at("origin");
  g.origin = {o.at(0).get<double>(), o.at(1).get<double>(), o.at(2).get<double>()};
  return g;
}

}  // namespace

void write_container(const std::string& path, const std::vector<SampleRecord>& records,
                     const std::vector<std::size_t>& source_masked_voxels) {
  if (records.empty()) throw ValidationError("write_container: no records");
  const SampleRecord& first = records.front();
  const int coils = first.excitation.channel_count();
  for (std::size_t i = 0; i < records.size(); ++i) {
    const SampleRecord& r = records[i];
    r.validate();
    if (r.geom != first.geom)
      throw GeometryError("records[" + std::to_string(i) + "]",
                          "all records in one container must share geometry");
    if (r.frequency_hz != first.frequency_hz)
      throw ValidationError("write_container: records disagree on frequency_hz");
    if (r.excitation.channel_count() != coils)
      throw ValidationError("write_container: records disagree on coil count");
  }
  if (!source_masked_voxels.empty() && source_masked_voxels.size() != records.size())
    throw ValidationError("write_container: source_masked_voxels length mismatch");

  json exc = json::array();
  for (const auto& r : records) {
    json per = json::array();
    for (const auto& ch : r.excitation.channels)
      per.push_back(json::array({ch.amplitude, ch.phase}));
    exc.push_back(per);
  }
  json header{{"version", kContainerVersion},
              {"sample_count", records.size()},
              {"geom", geom_to_json(first.geom)},
              {"frequency_hz", first.frequency_hz},
              {"channel_names", container_channel_names(coils)},
              {"dtype", "f32"},
              {"excitations", exc}};
  if (!source_masked_voxels.empty()) header["source_masked_voxels"] = source_masked_voxels;
  const std::string header_bytes = header.dump();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("write_container: cannot open " + path);
  out.write(kContainerMagic, 4);
  const std::uint32_t hlen = std::uint32_t(header_bytes.size());
  out.write(reinterpret_cast<const char*>(&hlen), 4);
  out.write(header_bytes.data(), std::streamsize(header_bytes.size()));

  std::vector<float> payload;
  for (const auto& r : records) {
    payload.clear();
    payload.reserve(std::size_t(3 + coils + kTargetChannels + 1) * r.geom.cells());
    append_f32(payload, r.materials.density.values);
    append_f32(payload, r.materials.permittivity.values);
    append_f32(payload, r.materials.conductivity.values);
    for (const auto& ch : r.excitation.channels) append_f32(payload, ch.occupancy.values);
    for (int k = 0; k < 6; ++k) append_f32(payload, r.target_e.ch[k]);
    for (int k = 0; k < 6; ++k) append_f32(payload, r.target_b.ch[k]);
    for (auto b : r.mask.inside) payload.push_back(b ? 1.0f : 0.0f);
    out.write(reinterpret_cast<const char*>(payload.data()),
              std::streamsize(payload.size() * sizeof(float)));
  }
  if (!out) throw Error("write_container: write failed for " + path);
}

namespace {

std::vector<double> take_channel(const std::vector<float>& payload, std::size_t& pos,
                                 std::size_t cells) {
  std::vector<double> v(cells);
  for (std::size_t i = 0; i < cells; ++i) v[i] = double(payload[pos + i]);
  pos += cells;
  return v;
}

}  // namespace

std::vector<SampleRecord> read_container(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("read_container: cannot open " + path);
  in.seekg(0, std::ios::end);
  const std::size_t file_size = std::size_t(in.tellg());
  in.seekg(0);

  char magic[4];
  if (file_size < 8 || !in.read(magic, 4))
    throw FormatError(FormatError::Kind::bad_magic, path + ": file too short for magic");
  if (std::memcmp(magic, kContainerMagic, 4) != 0)
    throw FormatError(FormatError::Kind::bad_magic,
                      path + ": bad magic, not an EMG1 container");
  std::uint32_t hlen = 0;
  in.read(reinterpret_cast<char*>(&hlen), 4);
  if (8 + std::size_t(hlen) > file_size)
    throw FormatError(FormatError::Kind::length_mismatch,
                      path + ": declared header length runs past end of file");
  std::string header_bytes(hlen, '\0');
  in.read(header_bytes.data(), hlen);

  json header;
  try {
    header = json::parse(header_bytes);
  } catch (const json::exception& e) {
    throw FormatError(FormatError::Kind::bad_header,
                      path + ": header is not valid JSON: " + e.what());
  }

  GridGeom geom;
  std::size_t sample_count = 0;
  double frequency = 0;
  std::vector<std::string> channel_names;
  json exc;
  try {
    const int version = header.at("version").get<int>();
    if (version != kContainerVersion)
      throw FormatError(FormatError::Kind::unsupported_version,
                        path + ": unsupported container version " + std::to_string(version));
    if (header.at("dtype").get<std::string>() != "f32")
      throw FormatError(FormatError::Kind::bad_header, path + ": unsupported dtype");
    sample_count = header.at("sample_count").get<std::size_t>();
    geom = geom_from_json(header.at("geom"));
    frequency = header.at("frequency_hz").get<double>();
    channel_names = header.at("channel_names").get<std::vector<std::string>>();
    exc = header.at("excitations");
  } catch (const json::exception& e) {
    throw FormatError(FormatError::Kind::bad_header,
                      path + ": header missing or mistyped field: " + e.what());
  }
  if (sample_count == 0)
    throw FormatError(FormatError::Kind::bad_header, path + ": container has no samples");

  const int coils = int(channel_names.size()) - 3 - kTargetChannels - 1;
  if (coils < 1 || channel_names != container_channel_names(coils))
    throw FormatError(FormatError::Kind::bad_header,
                      path + ": channel_names do not match the v1 layout");
  if (exc.size() != sample_count)
    throw FormatError(FormatError::Kind::bad_header,
                      path + ": excitations length != sample_count");

  const std::size_t cells = geom.cells();
  const std::size_t floats_per_sample = channel_names.size() * cells;
  const std::size_t expected = 8 + hlen + sample_count * floats_per_sample * sizeof(float);
  if (file_size < expected)
    throw FormatError(FormatError::Kind::truncated,
                      path + ": payload truncated, expected " + std::to_string(expected) +
                          " bytes, file has " + std::to_string(file_size));
  if (file_size > expected)
    throw FormatError(FormatError::Kind::length_mismatch,
                      path + ": trailing bytes after declared payload");

  std::vector<SampleRecord> records;
  records.reserve(sample_count);
  std::vector<float> payload(floats_per_sample);
  for (std::size_t s = 0; s < sample_count; ++s) {
    if (!in.read(reinterpret_cast<char*>(payload.data()),
                 std::streamsize(payload.size() * sizeof(float))))
      throw FormatError(FormatError::Kind::truncated, path + ": payload read failed");
    std::size_t pos = 0;
    SampleRecord r;
    r.geom = geom;
    r.frequency_hz = frequency;
    r.materials.geom = geom;
    r.materials.density = ScalarGrid{geom, take_channel(payload, pos, cells)};
    r.materials.permittivity = ScalarGrid{geom, take_channel(payload, pos, cells)};
    r.materials.conductivity = ScalarGrid{geom, take_channel(payload, pos, cells)};
    for (int c = 0; c < coils; ++c) {
      CoilChannel ch;
      const auto& pair = exc.at(s).at(std::size_t(c));
      ch.amplitude = pair.at(0).get<double>();
      ch.phase = pair.at(1).get<double>();
      ch.occupancy = ScalarGrid{geom, take_channel(payload, pos, cells)};
      r.excitation.channels.push_back(std::move(ch));
    }
    r.target_e = make_phasor_field(geom);
    r.target_b = make_phasor_field(geom);
    for (int k = 0; k < 6; ++k) r.target_e.ch[k] = take_channel(payload, pos, cells);
    for (int k = 0; k < 6; ++k) r.target_b.ch[k] = take_channel(payload, pos, cells);
    r.mask.geom = geom;
    r.mask.inside.resize(cells);
    for (std::size_t i = 0; i < cells; ++i) r.mask.inside[i] = payload[pos + i] > 0.5f;
    r.validate();
    records.push_back(std::move(r));
  }
  return records;
}

ContainerInfo read_container_info(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("read_container_info: cannot open " + path);
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kContainerMagic, 4) != 0)
    throw FormatError(FormatError::Kind::bad_magic,
                      path + ": bad magic, not an EMG1 container");
  std::uint32_t hlen = 0;
  if (!in.read(reinterpret_cast<char*>(&hlen), 4))
    throw FormatError(FormatError::Kind::length_mismatch, path + ": missing header length");
  std::string header_bytes(hlen, '\0');
  if (!in.read(header_bytes.data(), hlen))
    throw FormatError(FormatError::Kind::length_mismatch,
                      path + ": declared header length runs past end of file");
  json header;
  try {
    header = json::parse(header_bytes);
  } catch (const json::exception& e) {
    throw FormatError(FormatError::Kind::bad_header,
                      path + ": header is not valid JSON: " + e.what());
  }
  ContainerInfo info;
  try {
    info.version = header.at("version").get<int>();
    info.sample_count = header.at("sample_count").get<std::size_t>();
    info.geom = geom_from_json(header.at("geom"));
    info.frequency_hz = header.at("frequency_hz").get<double>();
    info.channel_names = header.at("channel_names").get<std::vector<std::string>>();
    info.dtype = header.at("dtype").get<std::string>();
    if (header.contains("source_masked_voxels"))
      info.source_masked_voxels =
          header.at("source_masked_voxels").get<std::vector<std::size_t>>();
  } catch (const json::exception& e) {
    throw FormatError(FormatError::Kind::bad_header,
                      path + ": header missing or mistyped field: " + e.what());
  }
  return info;
}

}  // namespace em
