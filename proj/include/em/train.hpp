#ifndef EM_TRAIN_HPP
#define EM_TRAIN_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "em/grid.hpp"
#include "em/net.hpp"

namespace em::train {

/// Weights of the physics terms added to the data MSE. The data term always
/// covers all 12 channels over the full domain; the physics residuals are
/// evaluated on the predicted fields only, interior voxels only.
struct LossSpec {
  double lambda_gauss = 1.0;
  double lambda_faraday = 0.0;
  double lambda_ampere = 0.0;

  /// All weights finite and >= 0.
  void validate() const;
};

/// Per-term values for one loss evaluation. The physics entries are the raw
/// (unweighted) residual means; total = mse + sum of lambda-weighted terms.
/// Terms whose lambda is zero are skipped entirely and reported as 0, so a
/// zero-weight configuration reduces to plain MSE to the bit.
struct LossBreakdown {
  double mse = 0.0;
  double gauss = 0.0;
  double faraday = 0.0;
  double ampere = 0.0;
  double total = 0.0;
};

/// Adaptive-moment optimizer settings plus the loop bookkeeping: batch size,
/// step budget, and the shuffle seed.
struct OptimSpec {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int batch_size = 2;
  std::int64_t max_steps = 0;
  std::uint64_t seed = 0;

  void validate() const;
};

/// First and second moment estimates; t is the number of updates applied.
struct AdamState {
  std::vector<double> m, v;
  std::int64_t t = 0;
};

/// Standard bias-corrected adaptive-moment update, in place. Moments are
/// allocated to zero on first use.
void adam_step(std::vector<double>& params, const std::vector<double>& grads, AdamState& state,
               const OptimSpec& optim);

/// L = MSE(prediction, target) + lambda_g * mean |div B_pred|^2
///   + lambda_f * mean |curl E_pred + iw B_pred|^2
///   + lambda_a * mean |curl B_pred/mu0 - (sigma + iw eps) E_pred|^2.
/// Both stacks are 12-channel (channel table order), B in microtesla.
LossBreakdown composite_loss(const ChannelStack& prediction, const ChannelStack& target,
                             const MaterialVolume& materials, double omega,
                             const LossSpec& spec);

/// Same evaluation, also writing dL/dprediction into `grad` (12 channels,
/// allocated by the callee to the prediction's shape).
LossBreakdown composite_loss_grad(const ChannelStack& prediction, const ChannelStack& target,
                                  const MaterialVolume& materials, double omega,
                                  const LossSpec& spec, ChannelStack& grad);

/// Result of a training run: final parameters and optimizer moments, the step
/// count reached, and one per-step loss record for the steps taken.
///
/// The sample shuffle is a pure function of (seed, epoch), and the step index
/// maps to (epoch, position) through the batch count alone, so (params,
/// moments, step) is the complete training state: resuming from a checkpoint
/// replays the remaining steps bit-identically.
struct TrainState {
  net::UNetParams params;
  AdamState adam;
  std::int64_t step = 0;
  std::vector<LossBreakdown> history;

  net::Checkpoint to_checkpoint() const;
};

struct TrainOptions {
  /// When nonempty, a checkpoint is written here at the cadence below and
  /// again at the final step.
  std::string checkpoint_path;
  /// Save every N steps (0 = final save only).
  std::int64_t checkpoint_every = 0;
  /// When nonempty, per-step records are written as line-delimited JSON:
  /// {"step": s, "mse": m, "gauss": g, "faraday": f, "ampere": a, "total": t}.
  std::string log_path;
  /// When set, training continues from this state instead of a fresh init;
  /// the architecture must match and max_steps counts from step 0.
  const net::Checkpoint* resume = nullptr;
};

/// Run the training loop over `samples` until optim.max_steps. Deterministic
/// per seed. Throws NumericError naming the first non-finite loss term and
/// the step at which it appeared.
TrainState train(const std::vector<SampleRecord>& samples, const LossSpec& loss,
                 const OptimSpec& optim, const net::ArchSpec& arch,
                 const TrainOptions& options = {});

/// The trivial reference predictor: a 12-channel all-zero stack on the
/// sample's geometry.
ChannelStack zero_baseline(const SampleRecord& sample);

}  // namespace em::train

#endif
