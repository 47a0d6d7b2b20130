#include "em/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "em/container.hpp"
#include "em/errors.hpp"
#include "em/metrics.hpp"
#include "em/net.hpp"
#include "em/oracle.hpp"
#include "em/train.hpp"

namespace em::cli {

namespace {

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in.good()) throw ValidationError("cannot read " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out.good()) throw ValidationError("cannot write " + path);
  out << text;
}

std::string base_name(const std::string& path) {
  return std::filesystem::path(path).filename().string();
}

/// First four bytes of a file, or a FormatError when it is shorter.
std::string file_magic(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in.good()) {
    throw FormatError(FormatError::Kind::truncated, path + ": cannot open file");
  }
  char magic[4];
  in.read(magic, 4);
  if (in.gcount() != 4) {
    throw FormatError(FormatError::Kind::truncated, path + ": file too short for magic");
  }
  return std::string(magic, 4);
}

struct GenArgs {
  std::string family = "dipole";
  std::string spec_path;
  std::string out_train, out_test;
  int samples = 0;
  std::uint64_t seed = 0;
  int nx = 0, ny = 0, nz = 0;
  double spacing = 0.0;
  double frequency = 0.0;
  double eps_r_min = 0.0, eps_r_max = 0.0, sigma_min = -1.0, sigma_max = -1.0;
  int max_waves = 0;
  int elements = 0;
  double dipole_moment = 0.0;
  bool dump_spec = false;
};

int run_gen(const GenArgs& a, const CLI::App& cmd) {
  oracle::DatasetSpec spec;
  if (!a.spec_path.empty()) {
    spec = oracle::dataset_spec_from_json_text(read_text_file(a.spec_path));
  } else {
    spec = oracle::default_dataset_spec();
  }
  if (cmd.count("--family") > 0 || a.spec_path.empty()) {
    spec.family = a.family == "plane" ? oracle::DatasetFamily::plane_waves
                                      : oracle::DatasetFamily::dipole_array;
  }
  if (cmd.count("--samples") > 0) spec.sample_count = a.samples;
  if (cmd.count("--seed") > 0) spec.seed = a.seed;
  if (cmd.count("--frequency") > 0) spec.frequency_hz = a.frequency;
  if (cmd.count("--eps-r-min") > 0) spec.eps_r_min = a.eps_r_min;
  if (cmd.count("--eps-r-max") > 0) spec.eps_r_max = a.eps_r_max;
  if (cmd.count("--sigma-min") > 0) spec.sigma_min = a.sigma_min;
  if (cmd.count("--sigma-max") > 0) spec.sigma_max = a.sigma_max;
  if (cmd.count("--max-waves") > 0) spec.max_waves = a.max_waves;
  if (cmd.count("--elements") > 0) spec.dipole_elements = a.elements;
  if (cmd.count("--dipole-moment") > 0) spec.dipole_moment = a.dipole_moment;

  // grid overrides recenter the domain on the origin
  const bool geom_touched = cmd.count("--nx") > 0 || cmd.count("--ny") > 0 ||
                            cmd.count("--nz") > 0 || cmd.count("--spacing") > 0;
  if (geom_touched) {
    if (cmd.count("--nx") > 0) spec.geom.nx = a.nx;
    if (cmd.count("--ny") > 0) spec.geom.ny = a.ny;
    if (cmd.count("--nz") > 0) spec.geom.nz = a.nz;
    if (cmd.count("--spacing") > 0) spec.geom.hx = spec.geom.hy = spec.geom.hz = a.spacing;
    spec.geom.origin[0] = -0.5 * (spec.geom.nx - 1) * spec.geom.hx;
    spec.geom.origin[1] = -0.5 * (spec.geom.ny - 1) * spec.geom.hy;
    spec.geom.origin[2] = -0.5 * (spec.geom.nz - 1) * spec.geom.hz;
  }

  if (a.dump_spec) std::cout << oracle::dataset_spec_to_json_text(spec) << "\n";

  oracle::generate_dataset(spec, a.out_train, a.out_test);
  const auto [n_train, n_test] = oracle::split_counts(spec);
  std::printf("wrote %d train samples to %s and %d test samples to %s\n", n_train,
              a.out_train.c_str(), n_test, a.out_test.c_str());
  return 0;
}

struct TrainArgs {
  std::string data_path, out_path, log_path, resume_path;
  int depth = net::ArchSpec{}.depth;
  int base = net::ArchSpec{}.base_width;
  int kernel = net::ArchSpec{}.kernel;
  double slope = net::ArchSpec{}.leaky_slope;
  std::int64_t steps = 500;
  double lr = train::OptimSpec{}.learning_rate;
  int batch = train::OptimSpec{}.batch_size;
  std::uint64_t seed = 0;
  double lambda_gauss = train::LossSpec{}.lambda_gauss;
  double lambda_faraday = 0.0;
  double lambda_ampere = 0.0;
  std::int64_t checkpoint_every = 0;
};

int run_train(const TrainArgs& a) {
  const std::vector<SampleRecord> samples = read_container(a.data_path);
  if (samples.empty()) throw ValidationError("train: empty container " + a.data_path);

  net::ArchSpec arch;
  arch.depth = a.depth;
  arch.base_width = a.base;
  arch.kernel = a.kernel;
  arch.leaky_slope = a.slope;
  arch.in_channels =
      build_input_stack(samples.front().materials, samples.front().excitation).channels;

  train::LossSpec loss;
  loss.lambda_gauss = a.lambda_gauss;
  loss.lambda_faraday = a.lambda_faraday;
  loss.lambda_ampere = a.lambda_ampere;

  train::OptimSpec optim;
  optim.learning_rate = a.lr;
  optim.batch_size = a.batch;
  optim.max_steps = a.steps;
  optim.seed = a.seed;

  train::TrainOptions opts;
  opts.checkpoint_path = a.out_path;
  opts.checkpoint_every = a.checkpoint_every;
  opts.log_path = a.log_path;

  net::Checkpoint resume_ck;
  if (!a.resume_path.empty()) {
    resume_ck = net::load_checkpoint(a.resume_path);
    arch = resume_ck.arch;  // a resumed run continues the stored architecture
    opts.resume = &resume_ck;
  }

  const train::TrainState state = train::train(samples, loss, optim, arch, opts);
  if (state.history.empty()) {
    std::printf("trained 0 steps; wrote %s\n", a.out_path.c_str());
  } else {
    std::printf("trained %lld steps; final total %.6e (mse %.6e); wrote %s\n",
                static_cast<long long>(state.step), state.history.back().total,
                state.history.back().mse, a.out_path.c_str());
  }
  return 0;
}

struct EvalArgs {
  std::string model_path, data_path, json_path;
};

int run_eval(const EvalArgs& a) {
  const net::Checkpoint ckpt = net::load_checkpoint(a.model_path);
  const std::vector<SampleRecord> samples = read_container(a.data_path);
  char id[160];
  std::snprintf(id, sizeof id, "%s (depth %d, base %d, step %lld)",
                base_name(a.model_path).c_str(), ckpt.arch.depth, ckpt.arch.base_width,
                static_cast<long long>(ckpt.step));
  const metrics::EvalReport rep = metrics::evaluate(ckpt, samples, id, a.data_path);
  std::cout << rep.to_table();
  if (!a.json_path.empty()) write_text_file(a.json_path, rep.to_json());
  return 0;
}

struct PhysArgs {
  std::string path, fine_path, json_path;
};

int run_physcheck(const PhysArgs& a) {
  const std::vector<SampleRecord> coarse = read_container(a.path);
  metrics::PhysCheckReport rep;
  if (a.fine_path.empty()) {
    rep = metrics::physcheck(coarse, a.path);
  } else {
    const std::vector<SampleRecord> fine = read_container(a.fine_path);
    rep = metrics::physcheck_pair(coarse, fine, a.path + " vs " + a.fine_path);
  }
  std::cout << rep.to_text();
  if (!a.json_path.empty()) write_text_file(a.json_path, rep.to_json());
  if (rep.has_convergence && !rep.converged) {
    std::cerr << "physcheck: residual decay outside the second-order window\n";
    return 2;
  }
  return 0;
}

int run_info(const std::string& path) {
  const std::string magic = file_magic(path);
  if (magic == std::string(kContainerMagic, 4)) {
    const ContainerInfo info = read_container_info(path);
    std::printf("container %s (version %d)\n", base_name(path).c_str(), info.version);
    std::printf("  samples:    %zu\n", info.sample_count);
    std::printf("  grid:       %d x %d x %d, spacing %.6g x %.6g x %.6g m\n", info.geom.nx,
                info.geom.ny, info.geom.nz, info.geom.hx, info.geom.hy, info.geom.hz);
    std::printf("  frequency:  %.6g Hz\n", info.frequency_hz);
    std::printf("  channels:   %zu (%s)\n", info.channel_names.size(), info.dtype.c_str());
    return 0;
  }
  if (magic == std::string(net::kCheckpointMagic, 4)) {
    const net::Checkpoint ck = net::load_checkpoint(path);
    std::printf("checkpoint %s\n", base_name(path).c_str());
    std::printf("  arch:       in %d, out %d, depth %d, base %d, kernel %d, slope %g\n",
                ck.arch.in_channels, ck.arch.out_channels, ck.arch.depth, ck.arch.base_width,
                ck.arch.kernel, ck.arch.leaky_slope);
    std::printf("  parameters: %zu (f64)\n", ck.params.size());
    std::printf("  seed:       %llu\n", static_cast<unsigned long long>(ck.seed));
    std::printf("  step:       %lld\n", static_cast<long long>(ck.step));
    std::printf("  optimizer:  %s\n", ck.has_optimizer_state ? "adam moments stored" : "none");
    return 0;
  }
  throw FormatError(FormatError::Kind::bad_magic,
                    path + ": unrecognized magic (not a container or checkpoint)");
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
  CLI::App app{"electromagnetic field surrogate toolkit"};
  app.require_subcommand(1);

  GenArgs gen_args;
  CLI::App* gen = app.add_subcommand("gen", "generate a synthetic train/test dataset pair");
  gen->add_option("--family", gen_args.family, "sample family: plane or dipole")
      ->check(CLI::IsMember({"plane", "dipole"}))
      ->default_str("dipole");
  gen->add_option("--spec", gen_args.spec_path, "JSON recipe file (flags override its fields)");
  gen->add_option("--out-train", gen_args.out_train, "output container for the train split")
      ->required();
  gen->add_option("--out-test", gen_args.out_test, "output container for the test split")
      ->required();
  gen->add_option("--samples", gen_args.samples, "total sample count before the split");
  gen->add_option("--seed", gen_args.seed, "dataset seed");
  gen->add_option("--frequency", gen_args.frequency, "drive frequency in Hz");
  gen->add_option("--nx", gen_args.nx, "grid cells along x");
  gen->add_option("--ny", gen_args.ny, "grid cells along y");
  gen->add_option("--nz", gen_args.nz, "grid cells along z");
  gen->add_option("--spacing", gen_args.spacing, "grid spacing in meters (cubic voxels)");
  gen->add_option("--eps-r-min", gen_args.eps_r_min, "minimum relative permittivity");
  gen->add_option("--eps-r-max", gen_args.eps_r_max, "maximum relative permittivity");
  gen->add_option("--sigma-min", gen_args.sigma_min, "minimum conductivity in S/m");
  gen->add_option("--sigma-max", gen_args.sigma_max, "maximum conductivity in S/m");
  gen->add_option("--max-waves", gen_args.max_waves, "plane family: waves per sample cap");
  gen->add_option("--elements", gen_args.elements, "dipole family: array element count");
  gen->add_option("--dipole-moment", gen_args.dipole_moment, "dipole family: moment in A*m^2");
  gen->add_flag("--dump-spec", gen_args.dump_spec, "print the effective recipe JSON");

  TrainArgs train_args;
  CLI::App* tr = app.add_subcommand("train", "train a U-Net on a dataset container");
  tr->add_option("--data", train_args.data_path, "training container")->required();
  tr->add_option("--out", train_args.out_path, "checkpoint to write")->required();
  tr->add_option("--depth", train_args.depth, "U-Net down/up levels");
  tr->add_option("--base", train_args.base, "channels at the top level");
  tr->add_option("--kernel", train_args.kernel, "convolution kernel size (odd)");
  tr->add_option("--slope", train_args.slope, "leaky ReLU negative slope");
  tr->add_option("--steps", train_args.steps, "optimizer steps");
  tr->add_option("--lr", train_args.lr, "adam learning rate");
  tr->add_option("--batch", train_args.batch, "minibatch size");
  tr->add_option("--seed", train_args.seed, "init and shuffle seed");
  tr->add_option("--lambda-gauss", train_args.lambda_gauss, "gauss residual weight");
  tr->add_option("--lambda-faraday", train_args.lambda_faraday, "faraday residual weight");
  tr->add_option("--lambda-ampere", train_args.lambda_ampere, "ampere residual weight");
  tr->add_option("--log", train_args.log_path, "NDJSON loss log path");
  tr->add_option("--checkpoint-every", train_args.checkpoint_every,
                 "also checkpoint every N steps (0 = final only)");
  tr->add_option("--resume", train_args.resume_path,
                 "resume from this checkpoint (arch flags are ignored)");

  EvalArgs eval_args;
  CLI::App* ev = app.add_subcommand("eval", "score a checkpoint against a test container");
  ev->add_option("--model", eval_args.model_path, "checkpoint to evaluate")->required();
  ev->add_option("--data", eval_args.data_path, "test container")->required();
  ev->add_option("--json", eval_args.json_path, "also write the report as JSON");

  PhysArgs phys_args;
  CLI::App* ph = app.add_subcommand("physcheck", "audit physics residuals of stored fields");
  ph->add_option("container", phys_args.path, "dataset container")->required();
  ph->add_option("fine", phys_args.fine_path,
                 "half-spacing companion; asserts second-order residual decay");
  ph->add_option("--json", phys_args.json_path, "also write the report as JSON");

  std::string info_path;
  CLI::App* in = app.add_subcommand("info", "print a container or checkpoint header");
  in->add_option("file", info_path, "container or checkpoint file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (gen->parsed()) return run_gen(gen_args, *gen);
    if (tr->parsed()) return run_train(train_args);
    if (ev->parsed()) return run_eval(eval_args);
    if (ph->parsed()) return run_physcheck(phys_args);
    if (in->parsed()) return run_info(info_path);
  } catch (const NumericError& e) {
    std::cerr << "numerical abort: " << e.what() << "\n";
    return 3;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

}  // namespace em::cli
