#include "em/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "em/diffops.hpp"
#include "em/errors.hpp"

namespace em::metrics {

namespace {

using nlohmann::json;

/// True when the voxel belongs to the region. `inside` may be null only for
/// Region::Total.
bool in_region(Region region, const std::uint8_t* inside, std::size_t v) {
  switch (region) {
    case Region::Total:
      return true;
    case Region::Subject:
      return inside[v] != 0;
    case Region::Complement:
      return inside[v] == 0;
  }
  return false;
}

const std::uint8_t* region_mask(const MetricSample& s, Region region, std::size_t index) {
  if (region == Region::Total) return nullptr;
  if (s.mask == nullptr) {
    throw ValidationError("metrics: sample " + std::to_string(index) +
                          " needs a mask for a Subject/Complement region");
  }
  return s.mask->inside.data();
}

void check_sample(const MetricSample& s, std::size_t index) {
  if (s.pred == nullptr || s.target == nullptr) {
    throw ValidationError("metrics: sample " + std::to_string(index) +
                          " has a null prediction or target");
  }
  if (s.pred->channels != kTargetChannels || s.target->channels != kTargetChannels) {
    throw ValidationError("metrics: sample " + std::to_string(index) +
                          " stacks must hold the 12 target channels");
  }
  if (!(s.pred->geom == s.target->geom)) {
    throw GeometryError("metrics.sample" + std::to_string(index),
                        "prediction and target grids differ");
  }
  if (s.mask != nullptr && !(s.mask->geom == s.pred->geom)) {
    throw GeometryError("metrics.sample" + std::to_string(index) + ".mask",
                        "mask grid differs from the stacks");
  }
}

void check_samples(const std::vector<MetricSample>& samples) {
  if (samples.empty()) throw ValidationError("metrics: no samples to evaluate");
  for (std::size_t i = 0; i < samples.size(); ++i) check_sample(samples[i], i);
}

}  // namespace

int first_channel(Field field) { return field == Field::E ? 0 : 6; }

const char* field_name(Field field) { return field == Field::E ? "E" : "B"; }

const char* region_name(Region region) {
  switch (region) {
    case Region::Subject:
      return "subject";
    case Region::Total:
      return "total";
    case Region::Complement:
      return "complement";
  }
  return "?";
}

double masked_mse(const std::vector<MetricSample>& samples, Field field, Region region) {
  check_samples(samples);
  const int c0 = first_channel(field);
  double mean_of_means = 0.0;
  for (std::size_t s = 0; s < samples.size(); ++s) {
    const MetricSample& ms = samples[s];
    const std::uint8_t* inside = region_mask(ms, region, s);
    const std::size_t cells = ms.pred->geom.cells();
    double sq = 0.0;
    std::size_t n = 0;
    for (std::size_t v = 0; v < cells; ++v) {
      if (!in_region(region, inside, v)) continue;
      for (int c = 0; c < 6; ++c) {
        const double d = ms.pred->channel(c0 + c)[v] - ms.target->channel(c0 + c)[v];
        sq += d * d;
      }
      n += 6;
    }
    if (n == 0) {
      throw ValidationError("metrics: empty " + std::string(region_name(region)) +
                            " region in sample " + std::to_string(s));
    }
    mean_of_means += sq / double(n);
  }
  return mean_of_means / double(samples.size());
}

double region_mean(const std::vector<MetricSample>& samples, Field field, Region region) {
  check_samples(samples);
  const int c0 = first_channel(field);
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t s = 0; s < samples.size(); ++s) {
    const MetricSample& ms = samples[s];
    const std::uint8_t* inside = region_mask(ms, region, s);
    const std::size_t cells = ms.target->geom.cells();
    for (std::size_t v = 0; v < cells; ++v) {
      if (!in_region(region, inside, v)) continue;
      for (int c = 0; c < 6; ++c) sum += ms.target->channel(c0 + c)[v];
      n += 6;
    }
  }
  if (n == 0) {
    throw ValidationError("metrics: empty " + std::string(region_name(region)) + " region");
  }
  return sum / double(n);
}

R2Result masked_r2(const std::vector<MetricSample>& samples, Field field, Region region) {
  const double ybar = region_mean(samples, field, region);  // validates too
  const int c0 = first_channel(field);
  double sse = 0.0, sst = 0.0;
  for (std::size_t s = 0; s < samples.size(); ++s) {
    const MetricSample& ms = samples[s];
    const std::uint8_t* inside = region_mask(ms, region, s);
    const std::size_t cells = ms.target->geom.cells();
    for (std::size_t v = 0; v < cells; ++v) {
      if (!in_region(region, inside, v)) continue;
      for (int c = 0; c < 6; ++c) {
        const double y = ms.target->channel(c0 + c)[v];
        const double e = y - ms.pred->channel(c0 + c)[v];
        const double t = y - ybar;
        sse += e * e;
        sst += t * t;
      }
    }
  }
  if (sst == 0.0) return {0.0, false};
  return {1.0 - sse / sst, true};
}

RegionMetric region_metric(const std::vector<MetricSample>& samples, Field field,
                           Region region) {
  RegionMetric m;
  m.mse = masked_mse(samples, field, region);
  const R2Result r2 = masked_r2(samples, field, region);
  m.r2 = r2.value;
  m.r2_defined = r2.defined;
  return m;
}

namespace {

/// Sum of |residual|^2 over interior voxels of the region. The residual is
/// zero outside the interior by construction, so the interior loop is also
/// the full support.
double residual_region_sum(const diffops::ResidualField& r, const std::uint8_t* inside,
                           bool want_inside, bool total, std::size_t* count) {
  const GridGeom& g = r.geom;
  double sum = 0.0;
  std::size_t n = 0;
  for (int i = 1; i + 1 < g.nx; ++i) {
    for (int j = 1; j + 1 < g.ny; ++j) {
      for (int k = 1; k + 1 < g.nz; ++k) {
        const std::size_t v = g.idx(i, j, k);
        if (!total && (inside[v] != 0) != want_inside) continue;
        for (int c = 0; c < r.ncomp; ++c) {
          const std::size_t o = r.comp_offset(c) + v;
          sum += r.re[o] * r.re[o] + r.im[o] * r.im[o];
        }
        ++n;
      }
    }
  }
  if (count != nullptr) *count = n;
  return sum;
}

/// RMS over interior voxels of the six channels of a phasor field.
double interior_rms(const VectorPhasorField& f) {
  const GridGeom& g = f.geom;
  double sum = 0.0;
  std::size_t n = 0;
  for (int i = 1; i + 1 < g.nx; ++i) {
    for (int j = 1; j + 1 < g.ny; ++j) {
      for (int k = 1; k + 1 < g.nz; ++k) {
        const std::size_t v = g.idx(i, j, k);
        for (int c = 0; c < 6; ++c) sum += f.ch[c][v] * f.ch[c][v];
        ++n;
      }
    }
  }
  return n == 0 ? 0.0 : std::sqrt(sum / double(n));
}

double grid_mean(const ScalarGrid& g) {
  if (g.values.empty()) return 0.0;
  const double sum = std::accumulate(g.values.begin(), g.values.end(), 0.0);
  return sum / double(g.values.size());
}

}  // namespace

void ResidualAccumulator::add(const VectorPhasorField& e, const VectorPhasorField& b,
                              const MaterialVolume& materials, const SubjectMask& mask,
                              double omega) {
  if (!(e.geom == b.geom) || !(mask.geom == b.geom) || !(materials.geom == b.geom)) {
    throw GeometryError("metrics.residuals", "fields, materials and mask grids differ");
  }
  const diffops::ResidualField gauss = diffops::gauss_residual_b(b);
  const diffops::ResidualField faraday = diffops::faraday_residual(e, b, omega);
  const diffops::ResidualField ampere = diffops::ampere_residual(e, b, materials, omega);

  const std::uint8_t* inside = mask.inside.data();
  std::size_t subj = 0, tot = 0;
  sums_.gauss_subject += residual_region_sum(gauss, inside, true, false, &subj);
  sums_.gauss_total += residual_region_sum(gauss, inside, true, true, &tot);
  sums_.faraday_subject += residual_region_sum(faraday, inside, true, false, nullptr);
  sums_.faraday_total += residual_region_sum(faraday, inside, true, true, nullptr);
  sums_.ampere_subject += residual_region_sum(ampere, inside, true, false, nullptr);
  sums_.ampere_total += residual_region_sum(ampere, inside, true, true, nullptr);
  subject_count_ += subj;
  total_count_ += tot;

  // per-sample normalized RMS ratios; summary() pools their squares
  const double rms_b = interior_rms(b);
  const double rms_e = interior_rms(e);
  const double eps_m = grid_mean(materials.permittivity);
  const double sigma_m = grid_mean(materials.conductivity);
  const double n = double(diffops::interior_count(b.geom));
  if (n > 0 && rms_b > 0.0) {
    const double k_char = omega * std::sqrt(consts::mu0 * std::hypot(eps_m, sigma_m / omega));
    const double rms_gauss = std::sqrt(residual_region_sum(gauss, inside, true, true, nullptr) / n);
    if (k_char > 0.0) {
      const double g = rms_gauss / (k_char * rms_b);
      sums_.gauss_normalized += g * g;
    }
    const double w_ut = omega * consts::microtesla_to_tesla;
    const double rms_far = std::sqrt(residual_region_sum(faraday, inside, true, true, nullptr) / n);
    const double f = rms_far / (w_ut * rms_b);
    sums_.faraday_normalized += f * f;
  }
  if (n > 0 && rms_e > 0.0) {
    const double amp_char = std::hypot(sigma_m, omega * eps_m);
    const double rms_amp = std::sqrt(residual_region_sum(ampere, inside, true, true, nullptr) / n);
    if (amp_char > 0.0) {
      const double a = rms_amp / (amp_char * rms_e);
      sums_.ampere_normalized += a * a;
    }
  }
  ++samples_;
}

ResidualSummary ResidualAccumulator::summary() const {
  if (samples_ == 0) throw ValidationError("metrics: no samples in the residual audit");
  if (subject_count_ == 0) {
    throw ValidationError("metrics: subject region has no interior voxels");
  }
  ResidualSummary out = sums_;
  out.gauss_subject /= double(subject_count_);
  out.faraday_subject /= double(subject_count_);
  out.ampere_subject /= double(subject_count_);
  out.gauss_total /= double(total_count_);
  out.faraday_total /= double(total_count_);
  out.ampere_total /= double(total_count_);
  out.gauss_normalized = std::sqrt(out.gauss_normalized / double(samples_));
  out.faraday_normalized = std::sqrt(out.faraday_normalized / double(samples_));
  out.ampere_normalized = std::sqrt(out.ampere_normalized / double(samples_));
  return out;
}

namespace {

json metric_json(const RegionMetric& m) {
  json j;
  j["mse"] = m.mse;
  j["r2"] = m.r2_defined ? json(m.r2) : json(nullptr);
  return j;
}

RegionMetric metric_from_json(const json& j) {
  RegionMetric m;
  m.mse = j.at("mse").get<double>();
  if (j.at("r2").is_null()) {
    m.r2 = 0.0;
    m.r2_defined = false;
  } else {
    m.r2 = j.at("r2").get<double>();
    m.r2_defined = true;
  }
  return m;
}

json residuals_json(const ResidualSummary& r) {
  json j;
  j["mse"]["gauss"] = {{"subject", r.gauss_subject}, {"total", r.gauss_total}};
  j["mse"]["faraday"] = {{"subject", r.faraday_subject}, {"total", r.faraday_total}};
  j["mse"]["ampere"] = {{"subject", r.ampere_subject}, {"total", r.ampere_total}};
  j["normalized_rms_worst"] = {{"gauss", r.gauss_normalized},
                               {"faraday", r.faraday_normalized},
                               {"ampere", r.ampere_normalized}};
  return j;
}

ResidualSummary residuals_from_json(const json& j) {
  ResidualSummary r;
  r.gauss_subject = j.at("mse").at("gauss").at("subject").get<double>();
  r.gauss_total = j.at("mse").at("gauss").at("total").get<double>();
  r.faraday_subject = j.at("mse").at("faraday").at("subject").get<double>();
  r.faraday_total = j.at("mse").at("faraday").at("total").get<double>();
  r.ampere_subject = j.at("mse").at("ampere").at("subject").get<double>();
  r.ampere_total = j.at("mse").at("ampere").at("total").get<double>();
  r.gauss_normalized = j.at("normalized_rms_worst").at("gauss").get<double>();
  r.faraday_normalized = j.at("normalized_rms_worst").at("faraday").get<double>();
  r.ampere_normalized = j.at("normalized_rms_worst").at("ampere").get<double>();
  return r;
}

std::string format_cell(const RegionMetric& m) {
  char buf[48];
  if (m.r2_defined) {
    std::snprintf(buf, sizeof buf, "%10.4e %9.4f", m.mse, m.r2);
  } else {
    std::snprintf(buf, sizeof buf, "%10.4e %9s", m.mse, "undef");
  }
  return buf;
}

}  // namespace

std::string EvalReport::to_json() const {
  json j;
  j["schema"] = "emeval/1";
  j["model"] = model_id;
  j["dataset"] = dataset_id;
  j["sample_count"] = sample_count;
  j["rows"]["model"]["E"]["subject"] = metric_json(model_e_subject);
  j["rows"]["model"]["E"]["total"] = metric_json(model_e_total);
  j["rows"]["model"]["B"]["subject"] = metric_json(model_b_subject);
  j["rows"]["model"]["B"]["total"] = metric_json(model_b_total);
  j["rows"]["baseline"]["E"]["subject"] = metric_json(baseline_e_subject);
  j["rows"]["baseline"]["E"]["total"] = metric_json(baseline_e_total);
  j["rows"]["baseline"]["B"]["subject"] = metric_json(baseline_b_subject);
  j["rows"]["baseline"]["B"]["total"] = metric_json(baseline_b_total);
  j["physics"] = residuals_json(model_residuals);
  return j.dump(2) + "\n";
}

EvalReport EvalReport::from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(FormatError::Kind::bad_header,
                      std::string("eval report is not valid JSON: ") + e.what());
  }
  try {
    if (j.at("schema").get<std::string>() != "emeval/1") {
      throw FormatError(FormatError::Kind::unsupported_version,
                        "eval report schema is not emeval/1");
    }
    EvalReport r;
    r.model_id = j.at("model").get<std::string>();
    r.dataset_id = j.at("dataset").get<std::string>();
    r.sample_count = j.at("sample_count").get<int>();
    const json& rows = j.at("rows");
    r.model_e_subject = metric_from_json(rows.at("model").at("E").at("subject"));
    r.model_e_total = metric_from_json(rows.at("model").at("E").at("total"));
    r.model_b_subject = metric_from_json(rows.at("model").at("B").at("subject"));
    r.model_b_total = metric_from_json(rows.at("model").at("B").at("total"));
    r.baseline_e_subject = metric_from_json(rows.at("baseline").at("E").at("subject"));
    r.baseline_e_total = metric_from_json(rows.at("baseline").at("E").at("total"));
    r.baseline_b_subject = metric_from_json(rows.at("baseline").at("B").at("subject"));
    r.baseline_b_total = metric_from_json(rows.at("baseline").at("B").at("total"));
    r.model_residuals = residuals_from_json(j.at("physics"));
    return r;
  } catch (const json::exception& e) {
    throw FormatError(FormatError::Kind::bad_header,
                      std::string("eval report missing or mistyped field: ") + e.what());
  }
}

std::string EvalReport::to_table() const {
  std::string out;
  out += "model:    " + model_id + "\n";
  out += "dataset:  " + dataset_id + " (" + std::to_string(sample_count) + " samples)\n\n";
  char line[256];
  std::snprintf(line, sizeof line, "%-10s | %20s | %20s | %20s | %20s\n", "", "E Subject",
                "E Total", "B Subject", "B Total");
  out += line;
  std::snprintf(line, sizeof line, "%-10s | %10s %9s | %10s %9s | %10s %9s | %10s %9s\n", "",
                "MSE", "R2", "MSE", "R2", "MSE", "R2", "MSE", "R2");
  out += line;
  const auto row = [&](const char* name, const RegionMetric& es, const RegionMetric& et,
                       const RegionMetric& bs, const RegionMetric& bt) {
    std::snprintf(line, sizeof line, "%-10s | %s | %s | %s | %s\n", name,
                  format_cell(es).c_str(), format_cell(et).c_str(), format_cell(bs).c_str(),
                  format_cell(bt).c_str());
    out += line;
  };
  row("model", model_e_subject, model_e_total, model_b_subject, model_b_total);
  row("baseline", baseline_e_subject, baseline_e_total, baseline_b_subject, baseline_b_total);
  std::snprintf(line, sizeof line,
                "\nphysics residual MSE (interior): gauss %10.4e | faraday %10.4e | ampere "
                "%10.4e\n",
                model_residuals.gauss_total, model_residuals.faraday_total,
                model_residuals.ampere_total);
  out += line;
  return out;
}

EvalReport assemble_report(const std::vector<ChannelStack>& predictions,
                           const std::vector<SampleRecord>& samples,
                           const std::string& model_id, const std::string& dataset_id) {
  if (samples.empty()) throw ValidationError("evaluate: no samples");
  if (predictions.size() != samples.size()) {
    throw ValidationError("evaluate: prediction count differs from sample count");
  }
  std::vector<ChannelStack> targets, zeros;
  targets.reserve(samples.size());
  zeros.reserve(samples.size());
  for (const SampleRecord& r : samples) {
    targets.push_back(pack_targets(r.target_e, r.target_b));
    zeros.push_back(make_stack(r.geom, kTargetChannels));
  }
  std::vector<MetricSample> model_rows(samples.size()), base_rows(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    model_rows[i] = {&predictions[i], &targets[i], &samples[i].mask};
    base_rows[i] = {&zeros[i], &targets[i], &samples[i].mask};
  }

  EvalReport rep;
  rep.model_id = model_id;
  rep.dataset_id = dataset_id;
  rep.sample_count = int(samples.size());
  rep.model_e_subject = region_metric(model_rows, Field::E, Region::Subject);
  rep.model_e_total = region_metric(model_rows, Field::E, Region::Total);
  rep.model_b_subject = region_metric(model_rows, Field::B, Region::Subject);
  rep.model_b_total = region_metric(model_rows, Field::B, Region::Total);
  rep.baseline_e_subject = region_metric(base_rows, Field::E, Region::Subject);
  rep.baseline_e_total = region_metric(base_rows, Field::E, Region::Total);
  rep.baseline_b_subject = region_metric(base_rows, Field::B, Region::Subject);
  rep.baseline_b_total = region_metric(base_rows, Field::B, Region::Total);

  ResidualAccumulator acc;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto [pe, pb] = unpack_targets(predictions[i]);
    acc.add(pe, pb, samples[i].materials, samples[i].mask, samples[i].omega());
  }
  rep.model_residuals = acc.summary();
  return rep;
}

EvalReport evaluate(const net::Checkpoint& ckpt, const std::vector<SampleRecord>& samples,
                    const std::string& model_id, const std::string& dataset_id) {
  ckpt.arch.validate();
  if (ckpt.params.size() != net::param_count(ckpt.arch)) {
    throw ValidationError("evaluate: checkpoint parameter vector does not match its arch");
  }
  if (samples.empty()) throw ValidationError("evaluate: no samples");

  net::UNetParams params;
  params.arch = ckpt.arch;
  params.seed = ckpt.seed;
  params.values = ckpt.params;

  std::vector<ChannelStack> preds;
  preds.reserve(samples.size());
  for (const SampleRecord& r : samples) {
    const ChannelStack input = build_input_stack(r.materials, r.excitation);
    if (input.channels != ckpt.arch.in_channels) {
      throw ValidationError("evaluate: checkpoint expects " +
                            std::to_string(ckpt.arch.in_channels) +
                            " input channels, dataset provides " +
                            std::to_string(input.channels));
    }
    net::Tensor in = net::make_tensor(input.channels, r.geom.nx, r.geom.ny, r.geom.nz);
    std::memcpy(in.v.data(), input.data.data(), input.data.size() * sizeof(double));
    net::Tape tape;
    const net::Tensor& out = net::forward(params, in, tape);
    ChannelStack pred = make_stack(r.geom, kTargetChannels);
    std::memcpy(pred.data.data(), out.v.data(), out.v.size() * sizeof(double));
    preds.push_back(std::move(pred));
  }
  return assemble_report(preds, samples, model_id, dataset_id);
}

namespace {

struct PooledResiduals {
  ResidualSummary summary;
  double gauss_total_sum = 0.0, faraday_total_sum = 0.0, ampere_total_sum = 0.0;
  std::size_t total_count = 0;
};

PooledResiduals pool_target_residuals(const std::vector<SampleRecord>& samples) {
  ResidualAccumulator acc;
  PooledResiduals out;
  for (const SampleRecord& r : samples) {
    acc.add(r.target_e, r.target_b, r.materials, r.mask, r.omega());
    const diffops::ResidualField gauss = diffops::gauss_residual_b(r.target_b);
    const diffops::ResidualField faraday =
        diffops::faraday_residual(r.target_e, r.target_b, r.omega());
    const diffops::ResidualField ampere =
        diffops::ampere_residual(r.target_e, r.target_b, r.materials, r.omega());
    const std::uint8_t* inside = r.mask.inside.data();
    std::size_t n = 0;
    out.gauss_total_sum += residual_region_sum(gauss, inside, true, true, &n);
    out.faraday_total_sum += residual_region_sum(faraday, inside, true, true, nullptr);
    out.ampere_total_sum += residual_region_sum(ampere, inside, true, true, nullptr);
    out.total_count += n;
  }
  out.summary = acc.summary();
  return out;
}

double rms_ratio(double coarse_sum, std::size_t coarse_n, double fine_sum, std::size_t fine_n) {
  const double coarse = std::sqrt(coarse_sum / double(coarse_n));
  const double fine = std::sqrt(fine_sum / double(fine_n));
  if (fine == 0.0) return coarse == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
  return coarse / fine;
}

json physcheck_json(const PhysCheckReport& r) {
  json j;
  j["schema"] = "emphys/1";
  j["dataset"] = r.dataset_id;
  j["sample_count"] = r.sample_count;
  j["residuals"] = residuals_json(r.residuals);
  if (r.has_convergence) {
    j["convergence"] = {{"ratio_gauss", r.ratio_gauss},
                        {"ratio_faraday", r.ratio_faraday},
                        {"ratio_ampere", r.ratio_ampere},
                        {"window", {kConvergenceLo, kConvergenceHi}},
                        {"converged", r.converged}};
  } else {
    j["convergence"] = nullptr;
  }
  return j;
}

}  // namespace

std::string PhysCheckReport::to_json() const { return physcheck_json(*this).dump(2) + "\n"; }

std::string PhysCheckReport::to_text() const {
  std::string out;
  out += "dataset:  " + dataset_id + " (" + std::to_string(sample_count) + " samples)\n";
  char line[256];
  const auto row = [&](const char* name, double subj, double total, double norm) {
    std::snprintf(line, sizeof line, "%-8s MSE subject %10.4e | total %10.4e | normalized RMS %10.4e\n",
                  name, subj, total, norm);
    out += line;
  };
  row("gauss", residuals.gauss_subject, residuals.gauss_total, residuals.gauss_normalized);
  row("faraday", residuals.faraday_subject, residuals.faraday_total,
      residuals.faraday_normalized);
  row("ampere", residuals.ampere_subject, residuals.ampere_total, residuals.ampere_normalized);
  if (has_convergence) {
    std::snprintf(line, sizeof line,
                  "RMS ratio coarse/fine: gauss %.3f | faraday %.3f | ampere %.3f | window "
                  "[%.1f, %.1f] -> %s\n",
                  ratio_gauss, ratio_faraday, ratio_ampere, kConvergenceLo, kConvergenceHi,
                  converged ? "converged" : "NOT converged");
    out += line;
  }
  return out;
}

PhysCheckReport physcheck(const std::vector<SampleRecord>& samples,
                          const std::string& dataset_id) {
  if (samples.empty()) throw ValidationError("physcheck: empty container");
  PhysCheckReport rep;
  rep.dataset_id = dataset_id;
  rep.sample_count = int(samples.size());
  rep.residuals = pool_target_residuals(samples).summary;
  return rep;
}

PhysCheckReport physcheck_pair(const std::vector<SampleRecord>& coarse,
                               const std::vector<SampleRecord>& fine,
                               const std::string& dataset_id) {
  if (coarse.empty() || fine.empty()) throw ValidationError("physcheck: empty container");
  if (coarse.size() != fine.size()) {
    throw ValidationError("physcheck: resolution pair must hold the same sample count");
  }
  const GridGeom& cg = coarse.front().geom;
  const GridGeom& fg = fine.front().geom;
  const auto halves = [](double h_coarse, double h_fine) {
    return std::abs(h_fine - 0.5 * h_coarse) <= 1e-9 * h_coarse;
  };
  if (!halves(cg.hx, fg.hx) || !halves(cg.hy, fg.hy) || !halves(cg.hz, fg.hz)) {
    throw ValidationError("physcheck: second dataset must halve the grid spacing");
  }
  if (std::abs(coarse.front().frequency_hz - fine.front().frequency_hz) >
      1e-9 * coarse.front().frequency_hz) {
    throw ValidationError("physcheck: resolution pair must share the frequency");
  }

  const PooledResiduals pc = pool_target_residuals(coarse);
  const PooledResiduals pf = pool_target_residuals(fine);

  PhysCheckReport rep;
  rep.dataset_id = dataset_id;
  rep.sample_count = int(coarse.size());
  rep.residuals = pc.summary;
  rep.has_convergence = true;
  rep.ratio_gauss = rms_ratio(pc.gauss_total_sum, pc.total_count, pf.gauss_total_sum,
                              pf.total_count);
  rep.ratio_faraday = rms_ratio(pc.faraday_total_sum, pc.total_count, pf.faraday_total_sum,
                                pf.total_count);
  rep.ratio_ampere = rms_ratio(pc.ampere_total_sum, pc.total_count, pf.ampere_total_sum,
                               pf.total_count);
  const auto in_window = [](double r) {
    return std::isfinite(r) && r >= kConvergenceLo && r <= kConvergenceHi;
  };
  rep.converged =
      in_window(rep.ratio_gauss) && in_window(rep.ratio_faraday) && in_window(rep.ratio_ampere);
  return rep;
}

}  // namespace em::metrics
