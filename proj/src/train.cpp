#include "em/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "em/diffops.hpp"
#include "em/errors.hpp"
#include "em/rng.hpp"

namespace em::train {

using nlohmann::json;

void LossSpec::validate() const {
  for (double l : {lambda_gauss, lambda_faraday, lambda_ampere})
    if (!std::isfinite(l) || l < 0.0)
      throw ValidationError("LossSpec: lambda weights must be finite and >= 0");
}

void OptimSpec::validate() const {
  if (!std::isfinite(learning_rate) || learning_rate <= 0.0)
    throw ValidationError("OptimSpec: learning_rate must be > 0");
  if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0)
    throw ValidationError("OptimSpec: betas must lie in [0, 1)");
  if (!std::isfinite(epsilon) || epsilon <= 0.0)
    throw ValidationError("OptimSpec: epsilon must be > 0");
  if (batch_size < 1) throw ValidationError("OptimSpec: batch_size must be >= 1");
  if (max_steps < 0) throw ValidationError("OptimSpec: max_steps must be >= 0");
}

void adam_step(std::vector<double>& params, const std::vector<double>& grads, AdamState& state,
               const OptimSpec& optim) {
  optim.validate();
  if (grads.size() != params.size())
    throw ValidationError("adam_step: gradient length does not match params");
  if (state.m.empty() && state.v.empty()) {
    state.m.assign(params.size(), 0.0);
    state.v.assign(params.size(), 0.0);
  }
  if (state.m.size() != params.size() || state.v.size() != params.size())
    throw ValidationError("adam_step: moment length does not match params");
  state.t += 1;
  const double bc1 = 1.0 - std::pow(optim.beta1, double(state.t));
  const double bc2 = 1.0 - std::pow(optim.beta2, double(state.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    state.m[i] = optim.beta1 * state.m[i] + (1.0 - optim.beta1) * g;
    state.v[i] = optim.beta2 * state.v[i] + (1.0 - optim.beta2) * g * g;
    const double mhat = state.m[i] / bc1;
    const double vhat = state.v[i] / bc2;
    params[i] -= optim.learning_rate * mhat / (std::sqrt(vhat) + optim.epsilon);
  }
}

namespace {

// Shared core of composite_loss and composite_loss_grad. `grad` may be null.
LossBreakdown loss_impl(const ChannelStack& prediction, const ChannelStack& target,
                        const MaterialVolume& materials, double omega, const LossSpec& spec,
                        ChannelStack* grad) {
  spec.validate();
  if (prediction.channels != kTargetChannels || target.channels != kTargetChannels)
    throw ValidationError("composite_loss: stacks must have 12 channels");
  if (prediction.geom != target.geom)
    throw GeometryError("target", "geometry differs from the prediction");
  const GridGeom& geom = prediction.geom;
  const std::size_t n = prediction.data.size();

  LossBreakdown bd;
  double sq = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = prediction.data[i] - target.data[i];
    sq += d * d;
  }
  bd.mse = sq / double(n);
  bd.total = bd.mse;

  if (grad != nullptr) {
    *grad = make_stack(geom, kTargetChannels);
    const double scale = 2.0 / double(n);
    for (std::size_t i = 0; i < n; ++i)
      grad->data[i] = scale * (prediction.data[i] - target.data[i]);
  }

  const bool want_fields =
      spec.lambda_gauss > 0.0 || spec.lambda_faraday > 0.0 || spec.lambda_ampere > 0.0;
  if (!want_fields) return bd;

  auto [e_pred, b_pred] = unpack_targets(prediction);
  const std::size_t cells = geom.cells();

  // accumulate lambda * adjoint contributions into the grad stack; stack
  // channel c maps onto field channel c (E) or c - 6 (B).
  auto add_field = [&](const VectorPhasorField& f, int first_channel, double lambda) {
    for (int c = 0; c < 6; ++c) {
      double* dst = grad->channel(first_channel + c);
      const double* src = f.ch[std::size_t(c)].data();
      for (std::size_t i = 0; i < cells; ++i) dst[i] += lambda * src[i];
    }
  };

  if (spec.lambda_gauss > 0.0) {
    const diffops::ResidualField res = diffops::gauss_residual_b(b_pred);
    bd.gauss = diffops::physics_loss(res);
    bd.total += spec.lambda_gauss * bd.gauss;
    if (grad != nullptr) {
      const diffops::ResidualField g = diffops::physics_loss_grad(res);
      add_field(diffops::divergence_adjoint(g), 6, spec.lambda_gauss);
    }
  }

  if (spec.lambda_faraday > 0.0) {
    const diffops::ResidualField res = diffops::faraday_residual(e_pred, b_pred, omega);
    bd.faraday = diffops::physics_loss(res);
    bd.total += spec.lambda_faraday * bd.faraday;
    if (grad != nullptr) {
      const diffops::ResidualField g = diffops::physics_loss_grad(res);
      add_field(diffops::curl_adjoint(g), 0, spec.lambda_faraday);
      // residual = curl E + iw B with B in microtesla:
      // re -= w*B_im, im += w*B_re, so dL/dB_re = w*g_im, dL/dB_im = -w*g_re.
      const double w = omega * consts::microtesla_to_tesla * spec.lambda_faraday;
      for (int axis = 0; axis < 3; ++axis) {
        double* bre = grad->channel(6 + 2 * axis);
        double* bim = grad->channel(6 + 2 * axis + 1);
        const double* gre = g.re.data() + g.comp_offset(axis);
        const double* gim = g.im.data() + g.comp_offset(axis);
        for (std::size_t i = 0; i < cells; ++i) {
          bre[i] += w * gim[i];
          bim[i] -= w * gre[i];
        }
      }
    }
  }

  if (spec.lambda_ampere > 0.0) {
    if (materials.geom != geom)
      throw GeometryError("materials", "geometry differs from the prediction");
    const diffops::ResidualField res =
        diffops::ampere_residual(e_pred, b_pred, materials, omega);
    bd.ampere = diffops::physics_loss(res);
    bd.total += spec.lambda_ampere * bd.ampere;
    if (grad != nullptr) {
      const diffops::ResidualField g = diffops::physics_loss_grad(res);
      // residual = curl(B)*s - (sigma + iw eps) E with s = 1e-6/mu0.
      const double s = consts::microtesla_to_tesla / consts::mu0;
      diffops::ResidualField gs = g;
      for (double& v : gs.re) v *= s;
      for (double& v : gs.im) v *= s;
      add_field(diffops::curl_adjoint(gs), 6, spec.lambda_ampere);
      const double* sigma = materials.conductivity.values.data();
      const double* eps = materials.permittivity.values.data();
      for (int axis = 0; axis < 3; ++axis) {
        double* ere = grad->channel(2 * axis);
        double* eim = grad->channel(2 * axis + 1);
        const double* gre = g.re.data() + g.comp_offset(axis);
        const double* gim = g.im.data() + g.comp_offset(axis);
        const double la = spec.lambda_ampere;
        for (std::size_t i = 0; i < cells; ++i) {
          const double weps = omega * eps[i];
          ere[i] += la * (-sigma[i] * gre[i] - weps * gim[i]);
          eim[i] += la * (weps * gre[i] - sigma[i] * gim[i]);
        }
      }
    }
  }

  return bd;
}

}  // namespace

LossBreakdown composite_loss(const ChannelStack& prediction, const ChannelStack& target,
                             const MaterialVolume& materials, double omega,
                             const LossSpec& spec) {
  return loss_impl(prediction, target, materials, omega, spec, nullptr);
}

LossBreakdown composite_loss_grad(const ChannelStack& prediction, const ChannelStack& target,
                                  const MaterialVolume& materials, double omega,
                                  const LossSpec& spec, ChannelStack& grad) {
  return loss_impl(prediction, target, materials, omega, spec, &grad);
}

net::Checkpoint TrainState::to_checkpoint() const {
  net::Checkpoint ck;
  ck.arch = params.arch;
  ck.seed = params.seed;
  ck.step = step;
  ck.params = params.values;
  ck.has_optimizer_state = !adam.m.empty();
  ck.moment1 = adam.m;
  ck.moment2 = adam.v;
  return ck;
}

namespace {

std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, std::int64_t epoch) {
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(mix_seed(seed, std::uint64_t(epoch)));
  for (std::size_t i = n - 1; i > 0; --i) {
    const std::size_t j = std::size_t(rng.uniform_int(int(i) + 1));
    std::swap(order[i], order[j]);
  }
  return order;
}

const char* first_non_finite(const LossBreakdown& bd) {
  if (!std::isfinite(bd.mse)) return "mse";
  if (!std::isfinite(bd.gauss)) return "gauss";
  if (!std::isfinite(bd.faraday)) return "faraday";
  if (!std::isfinite(bd.ampere)) return "ampere";
  if (!std::isfinite(bd.total)) return "total";
  return nullptr;
}

net::Tensor stack_to_tensor(const ChannelStack& s) {
  net::Tensor t = net::make_tensor(s.channels, s.geom.nx, s.geom.ny, s.geom.nz);
  std::memcpy(t.v.data(), s.data.data(), s.data.size() * sizeof(double));
  return t;
}

}  // namespace

TrainState train(const std::vector<SampleRecord>& samples, const LossSpec& loss,
                 const OptimSpec& optim, const net::ArchSpec& arch,
                 const TrainOptions& options) {
  loss.validate();
  optim.validate();
  arch.validate();
  if (samples.empty()) throw ValidationError("train: no training samples");

  const std::size_t n = samples.size();
  std::vector<net::Tensor> inputs;
  std::vector<ChannelStack> targets;
  std::vector<double> omegas;
  inputs.reserve(n);
  targets.reserve(n);
  omegas.reserve(n);
  for (const SampleRecord& r : samples) {
    inputs.push_back(stack_to_tensor(build_input_stack(r.materials, r.excitation)));
    targets.push_back(pack_targets(r.target_e, r.target_b));
    omegas.push_back(2.0 * consts::pi * r.frequency_hz);
  }

  TrainState state;
  std::int64_t start_step = 0;
  if (options.resume != nullptr) {
    const net::Checkpoint& ck = *options.resume;
    if (ck.arch.in_channels != arch.in_channels || ck.arch.out_channels != arch.out_channels ||
        ck.arch.depth != arch.depth || ck.arch.base_width != arch.base_width ||
        ck.arch.kernel != arch.kernel || ck.arch.leaky_slope != arch.leaky_slope)
      throw ValidationError("train: resume checkpoint architecture does not match");
    state.params.arch = arch;
    state.params.seed = ck.seed;
    state.params.values = ck.params;
    if (ck.has_optimizer_state) {
      state.adam.m = ck.moment1;
      state.adam.v = ck.moment2;
    } else {
      state.adam.m.assign(ck.params.size(), 0.0);
      state.adam.v.assign(ck.params.size(), 0.0);
    }
    state.adam.t = ck.step;
    start_step = ck.step;
  } else {
    state.params = net::init_params(arch, optim.seed);
    state.adam.m.assign(state.params.values.size(), 0.0);
    state.adam.v.assign(state.params.values.size(), 0.0);
  }
  state.step = start_step;

  std::ofstream log;
  if (!options.log_path.empty()) {
    log.open(options.log_path, std::ios::trunc);
    if (!log) throw Error("train: cannot open log file " + options.log_path);
  }
  auto save = [&](std::int64_t step) {
    if (options.checkpoint_path.empty()) return;
    net::Checkpoint ck = state.to_checkpoint();
    ck.step = step;
    net::save_checkpoint(options.checkpoint_path, ck);
  };

  const std::int64_t steps_per_epoch = std::int64_t((n + std::size_t(optim.batch_size) - 1) /
                                                    std::size_t(optim.batch_size));
  std::vector<std::size_t> order;
  std::int64_t order_epoch = -1;
  std::vector<double> grad_acc(state.params.values.size());
  ChannelStack grad_stack;

  for (std::int64_t s = start_step; s < optim.max_steps; ++s) {
    const std::int64_t epoch = s / steps_per_epoch;
    const std::int64_t pos = s % steps_per_epoch;
    if (epoch != order_epoch) {
      order = epoch_order(n, optim.seed, epoch);
      order_epoch = epoch;
    }
    const std::size_t lo = std::size_t(pos) * std::size_t(optim.batch_size);
    const std::size_t hi = std::min(n, lo + std::size_t(optim.batch_size));
    const double inv_batch = 1.0 / double(hi - lo);

    std::fill(grad_acc.begin(), grad_acc.end(), 0.0);
    LossBreakdown batch_bd;
    for (std::size_t b = lo; b < hi; ++b) {
      const std::size_t idx = order[b];
      net::Tape tape;
      const net::Tensor& pred = net::forward(state.params, inputs[idx], tape);
      ChannelStack pred_stack = make_stack(targets[idx].geom, kTargetChannels);
      std::memcpy(pred_stack.data.data(), pred.v.data(),
                  pred.v.size() * sizeof(double));
      const LossBreakdown bd = composite_loss_grad(pred_stack, targets[idx],
                                                   samples[idx].materials, omegas[idx], loss,
                                                   grad_stack);
      batch_bd.mse += bd.mse;
      batch_bd.gauss += bd.gauss;
      batch_bd.faraday += bd.faraday;
      batch_bd.ampere += bd.ampere;
      batch_bd.total += bd.total;
      const std::vector<double> g = net::backward(tape, state.params, stack_to_tensor(grad_stack));
      for (std::size_t i = 0; i < grad_acc.size(); ++i) grad_acc[i] += g[i];
    }
    batch_bd.mse *= inv_batch;
    batch_bd.gauss *= inv_batch;
    batch_bd.faraday *= inv_batch;
    batch_bd.ampere *= inv_batch;
    batch_bd.total *= inv_batch;
    for (double& g : grad_acc) g *= inv_batch;

    if (const char* term = first_non_finite(batch_bd))
      throw NumericError("train: non-finite " + std::string(term) + " at step " +
                         std::to_string(s));

    adam_step(state.params.values, grad_acc, state.adam, optim);
    state.step = s + 1;
    state.history.push_back(batch_bd);
    if (log.is_open()) {
      json rec{{"step", s},
               {"mse", batch_bd.mse},
               {"gauss", batch_bd.gauss},
               {"faraday", batch_bd.faraday},
               {"ampere", batch_bd.ampere},
               {"total", batch_bd.total}};
      log << rec.dump() << "\n";
    }
    if (options.checkpoint_every > 0 && state.step % options.checkpoint_every == 0 &&
        state.step != optim.max_steps)
      save(state.step);
  }

  save(state.step);
  if (log.is_open() && !log) throw Error("train: log write failed");
  return state;
}

ChannelStack zero_baseline(const SampleRecord& sample) {
  return make_stack(sample.geom, kTargetChannels, 0.0);
}

}  // namespace em::train
