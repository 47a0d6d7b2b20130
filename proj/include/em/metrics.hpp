#ifndef EM_METRICS_HPP
#define EM_METRICS_HPP

#include <string>
#include <vector>

#include "em/grid.hpp"
#include "em/net.hpp"

namespace em::metrics {

/// Which half of the 12-channel target stack a metric reads: E occupies
/// channels 0..5, B channels 6..11 (Re/Im x three components each).
enum class Field { E, B };

/// Voxel selection. Subject = mask interior, Complement = everything else,
/// Total = the full grid. Subject and Complement require a mask.
enum class Region { Subject, Total, Complement };

int first_channel(Field field);
const char* field_name(Field field);
const char* region_name(Region region);

/// One evaluated sample. Pointers are non-owning; pred/target must be
/// 12-channel stacks on the same grid, mask may be null for Region::Total.
struct MetricSample {
  const ChannelStack* pred = nullptr;
  const ChannelStack* target = nullptr;
  const SubjectMask* mask = nullptr;
};

/// Mean squared difference pooled over the region's voxels and the field's
/// six channels, per sample, then averaged over samples with equal weight.
double masked_mse(const std::vector<MetricSample>& samples, Field field, Region region);

/// Target mean pooled over all samples' region channel-voxels jointly.
double region_mean(const std::vector<MetricSample>& samples, Field field, Region region);

/// R^2 = 1 - SSE/SST with SST measured around the jointly pooled target
/// mean. Constant targets make SST zero; that is reported through `defined`,
/// never as NaN. Predicting the pooled mean everywhere scores exactly 0.
struct R2Result {
  double value = 0.0;
  bool defined = true;
};
R2Result masked_r2(const std::vector<MetricSample>& samples, Field field, Region region);

/// One table cell: MSE plus R^2 with its defined marker.
struct RegionMetric {
  double mse = 0.0;
  double r2 = 0.0;
  bool r2_defined = true;
};
RegionMetric region_metric(const std::vector<MetricSample>& samples, Field field, Region region);

/// Physics-residual audit pooled across samples. MSE entries are
/// mean |residual|^2 over interior voxels of the region (the stencils do not
/// reach the outermost layer, so boundary voxels never enter the pool).
/// Normalized entries are per-sample RMS ratios against a characteristic
/// scale, pooled across samples as sqrt(mean of squares):
///   gauss:   rms(div B) / (k_char * rms(B)),  k_char = w sqrt(mu0 |eps_m - i sigma_m/w|)
///   faraday: rms(curl E + iwB) / (w_uT * rms(B))
///   ampere:  rms(curl B/mu0 - (sigma+iweps)E) / (|sigma_m + iw eps_m| * rms(E))
/// with eps_m/sigma_m the sample's mean material values and rms over the
/// interior. Samples with zero fields contribute 0.
struct ResidualSummary {
  double gauss_subject = 0.0, gauss_total = 0.0;
  double faraday_subject = 0.0, faraday_total = 0.0;
  double ampere_subject = 0.0, ampere_total = 0.0;
  double gauss_normalized = 0.0, faraday_normalized = 0.0, ampere_normalized = 0.0;
};

class ResidualAccumulator {
 public:
  void add(const VectorPhasorField& e, const VectorPhasorField& b,
           const MaterialVolume& materials, const SubjectMask& mask, double omega);
  /// Throws ValidationError when nothing was added.
  ResidualSummary summary() const;

 private:
  ResidualSummary sums_;  // holds running squared sums until summary()
  std::size_t subject_count_ = 0, total_count_ = 0;
  int samples_ = 0;
};

/// Table-1-style evaluation: rows model and zero baseline, cells E/B x
/// Subject/Total x MSE/R^2, plus the physics-residual audit of the model's
/// predictions. JSON schema "emeval/1"; undefined R^2 serializes as null.
struct EvalReport {
  std::string model_id;
  std::string dataset_id;
  int sample_count = 0;
  RegionMetric model_e_subject, model_e_total, model_b_subject, model_b_total;
  RegionMetric baseline_e_subject, baseline_e_total, baseline_b_subject, baseline_b_total;
  ResidualSummary model_residuals;

  std::string to_json() const;
  static EvalReport from_json(const std::string& text);
  /// Aligned text table, columns E before B, Subject before Total, MSE
  /// before R^2; rows model then baseline.
  std::string to_table() const;
};

/// Scores precomputed predictions against the samples' targets.
EvalReport assemble_report(const std::vector<ChannelStack>& predictions,
                           const std::vector<SampleRecord>& samples,
                           const std::string& model_id, const std::string& dataset_id);

/// Runs the checkpointed network over every sample and scores it. Throws
/// ValidationError when the checkpoint's input width does not match the
/// dataset's input stack.
EvalReport evaluate(const net::Checkpoint& ckpt, const std::vector<SampleRecord>& samples,
                    const std::string& model_id, const std::string& dataset_id);

/// Expected interior-RMS decay window when the spacing halves (second-order
/// stencils give ~4).
inline constexpr double kConvergenceLo = 3.5;
inline constexpr double kConvergenceHi = 4.5;

/// Physics audit of a dataset's stored fields. With a half-spacing companion
/// dataset of the same scenes, also reports per-law coarse/fine RMS ratios
/// and whether all of them sit inside the convergence window.
struct PhysCheckReport {
  std::string dataset_id;
  int sample_count = 0;
  ResidualSummary residuals;
  bool has_convergence = false;
  double ratio_gauss = 0.0, ratio_faraday = 0.0, ratio_ampere = 0.0;
  bool converged = false;

  std::string to_json() const;
  std::string to_text() const;
};

PhysCheckReport physcheck(const std::vector<SampleRecord>& samples,
                          const std::string& dataset_id);
/// `fine` must hold the same number of samples at half the grid spacing.
PhysCheckReport physcheck_pair(const std::vector<SampleRecord>& coarse,
                               const std::vector<SampleRecord>& fine,
                               const std::string& dataset_id);

}  // namespace em::metrics

#endif
