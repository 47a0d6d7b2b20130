#ifndef EM_NET_HPP
#define EM_NET_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "em/errors.hpp"

namespace em::net {

/// Compact 3D U-Net: per level two 3x3x3 convolutions + leaky ReLU, stride-2
/// average pooling down, nearest-neighbor x2 + convolution up, channel-concat
/// skip connections, linear head convolution. depth 0 degenerates to the head
/// convolution alone.
struct ArchSpec {
  int in_channels = 19;
  int out_channels = 12;  // Re/Im x (x,y,z) x (E,B); fixed by the field model
  int depth = 2;          // number of down/up levels
  int base_width = 8;     // channels at the top level; doubles per level
  int kernel = 3;         // cubic, odd
  double leaky_slope = 0.01;

  void validate() const;
};

/// One convolution's shapes and its slice of the flat parameter vector.
struct LayerShape {
  std::string name;  // "enc0a", "bota", "up1", "dec0b", "head", ...
  int c_in = 0, c_out = 0, kernel = 3;
  std::size_t w_offset = 0, b_offset = 0;

  std::size_t weight_count() const {
    return std::size_t(c_in) * c_out * kernel * kernel * kernel;
  }
};

/// Convolution layers in forward order. Parameter layout is the table order:
/// weights then bias per layer.
std::vector<LayerShape> layer_table(const ArchSpec& arch);

/// Total learnable parameters; a pure function of the architecture.
std::size_t param_count(const ArchSpec& arch);

/// Analytic receptive-field radius in input voxels. Recurrence over layers
/// with jump j (cumulative stride): size += (k_layer - 1) * j; pooling counts
/// with k = 2 and doubles j; upsampling halves j. Radius = (size - 1) / 2,
/// which is half-integral when pooling is involved.
double receptive_field_radius(const ArchSpec& arch);

struct UNetParams {
  ArchSpec arch;
  std::uint64_t seed = 0;
  std::vector<double> values;
};

/// He-style fan-in scaled uniform init, +-sqrt(6 / (c_in k^3)), zero biases.
/// Deterministic per (arch, seed).
UNetParams init_params(const ArchSpec& arch, std::uint64_t seed);

/// Dense channel-major voxel block: v[((c*nx + i)*ny + j)*nz + k].
struct Tensor {
  int c = 0, nx = 0, ny = 0, nz = 0;
  std::vector<double> v;

  std::size_t volume() const { return std::size_t(nx) * ny * nz; }
  double* ch(int i) { return v.data() + std::size_t(i) * volume(); }
  const double* ch(int i) const { return v.data() + std::size_t(i) * volume(); }
};

Tensor make_tensor(int c, int nx, int ny, int nz, double fill = 0.0);

// Primitives. Each forward has an adjoint; gradients accumulate (+=) into
// their output buffers so callers can sum over batches.

/// Same-padded (zero) cubic convolution, kernel odd. Weight layout:
/// w[(((co*c_in + ci)*k + a)*k + b)*k + c] with offsets a,b,c in [0, k).
Tensor conv3d(const Tensor& in, const double* w, const double* b, int c_out, int kernel);
void conv3d_backward(const Tensor& in, const double* w, int c_out, int kernel,
                     const Tensor& grad_out, Tensor* grad_in, double* grad_w,
                     double* grad_b);

Tensor leaky_relu(const Tensor& in, double slope);
Tensor leaky_relu_backward(const Tensor& in, double slope, const Tensor& grad_out);

/// Stride-2 average pooling over 2x2x2 blocks; dims must be even.
Tensor avgpool2(const Tensor& in);
Tensor avgpool2_backward(const Tensor& grad_out);

/// Nearest-neighbor x2 upsampling.
Tensor upsample_nn2(const Tensor& in);
Tensor upsample_nn2_backward(const Tensor& grad_out);

Tensor concat_channels(const Tensor& a, const Tensor& b);

/// Recorded forward pass: the activation arena plus the op list, consumed in
/// reverse by backward(). One tape per forward/backward pair.
struct Tape {
  enum class Op { conv, lrelu, pool, upsample, concat };
  struct Node {
    Op op;
    int layer = -1;        // layer_table index for conv nodes
    int in0 = -1, in1 = -1;
    int out = -1;
  };
  std::vector<Tensor> tensors;  // tensors[0] is the input
  std::vector<Node> nodes;
  int output = -1;
};

/// Runs the network; the returned reference lives in the tape. Throws
/// ValidationError naming the violated constraint (channel count, kernel
/// parity, divisibility of dims by 2^depth).
const Tensor& forward(const UNetParams& params, const Tensor& input, Tape& tape);

/// Gradient of a scalar loss with respect to every parameter, given the
/// loss gradient with respect to the network output. Deterministic.
std::vector<double> backward(const Tape& tape, const UNetParams& params,
                             const Tensor& output_grad);

/// Checkpoint: magic "EMW1", u32 LE header length, JSON header {version,
/// arch, seed, step, has_optimizer_state, param_count, dtype:"f64"}, then
/// f64 LE params and, if present, first/second optimizer moments.
struct Checkpoint {
  ArchSpec arch;
  std::uint64_t seed = 0;
  std::int64_t step = 0;
  std::vector<double> params;
  bool has_optimizer_state = false;
  std::vector<double> moment1, moment2;
};

inline constexpr char kCheckpointMagic[4] = {'E', 'M', 'W', '1'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace em::net

#endif
