#include "em/net.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "em/errors.hpp"
#include "em/rng.hpp"

namespace em::net {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

using nlohmann::json;

void ArchSpec::validate() const {
  if (in_channels < 1) throw ValidationError("ArchSpec: in_channels must be >= 1");
  if (out_channels != 12)
    throw ValidationError("ArchSpec: out_channels is fixed at 12 (Re/Im of E and B)");
  if (depth < 0 || depth > 8) throw ValidationError("ArchSpec: depth must be in [0, 8]");
  if (base_width < 1) throw ValidationError("ArchSpec: base_width must be >= 1");
  if (kernel < 1 || kernel % 2 == 0 || kernel > 9)
    throw ValidationError("ArchSpec: kernel must be odd and in [1, 9]");
  if (!std::isfinite(leaky_slope) || leaky_slope < 0.0 || leaky_slope >= 1.0)
    throw ValidationError("ArchSpec: leaky_slope must be finite and in [0, 1)");
}

std::vector<LayerShape> layer_table(const ArchSpec& a) {
  a.validate();
  std::vector<LayerShape> table;
  std::size_t off = 0;
  auto add = [&](const std::string& name, int c_in, int c_out) {
    LayerShape L;
    L.name = name;
    L.c_in = c_in;
    L.c_out = c_out;
    L.kernel = a.kernel;
    L.w_offset = off;
    off += L.weight_count();
    L.b_offset = off;
    off += std::size_t(c_out);
    table.push_back(std::move(L));
  };
  if (a.depth == 0) {
    add("head", a.in_channels, a.out_channels);
    return table;
  }
  int c_in = a.in_channels;
  for (int l = 0; l < a.depth; ++l) {
    const int w = a.base_width << l;
    add("enc" + std::to_string(l) + "a", c_in, w);
    add("enc" + std::to_string(l) + "b", w, w);
    c_in = w;
  }
  const int wb = a.base_width << a.depth;
  add("bota", c_in, wb);
  add("botb", wb, wb);
  for (int l = a.depth - 1; l >= 0; --l) {
    const int w = a.base_width << l;
    add("up" + std::to_string(l), a.base_width << (l + 1), w);
    add("dec" + std::to_string(l) + "a", 2 * w, w);
    add("dec" + std::to_string(l) + "b", w, w);
  }
  add("head", a.base_width, a.out_channels);
  return table;
}

std::size_t param_count(const ArchSpec& a) {
  std::size_t n = 0;
  for (const LayerShape& L : layer_table(a)) n += L.weight_count() + std::size_t(L.c_out);
  return n;
}

double receptive_field_radius(const ArchSpec& a) {
  a.validate();
  // size/jump recurrence: a k-tap conv adds (k-1)*j, a stride-2 pool adds
  // 1*j and doubles j, nearest-neighbour upsampling halves j and adds nothing.
  double size = 1.0;
  double jump = 1.0;
  auto conv = [&] { size += double(a.kernel - 1) * jump; };
  if (a.depth == 0) {
    conv();
    return (size - 1.0) / 2.0;
  }
  for (int l = 0; l < a.depth; ++l) {
    conv();
    conv();
    size += jump;  // avgpool, k=2
    jump *= 2.0;
  }
  conv();
  conv();
  for (int l = a.depth - 1; l >= 0; --l) {
    jump *= 0.5;
    conv();  // post-upsample conv
    conv();  // dec a
    conv();  // dec b
  }
  conv();  // head
  return (size - 1.0) / 2.0;
}

UNetParams init_params(const ArchSpec& arch, std::uint64_t seed) {
  UNetParams p;
  p.arch = arch;
  p.seed = seed;
  p.values.assign(param_count(arch), 0.0);
  Rng rng(seed);
  for (const LayerShape& L : layer_table(arch)) {
    const double fan_in = double(L.c_in) * double(L.kernel) * double(L.kernel) * double(L.kernel);
    const double bound = std::sqrt(6.0 / fan_in);
    const std::size_t nw = L.weight_count();
    for (std::size_t t = 0; t < nw; ++t) p.values[L.w_offset + t] = rng.uniform(-bound, bound);
    // biases stay zero
  }
  return p;
}

Tensor make_tensor(int c, int nx, int ny, int nz, double fill) {
  if (c < 1 || nx < 1 || ny < 1 || nz < 1)
    throw ValidationError("make_tensor: all dimensions must be >= 1");
  Tensor t;
  t.c = c;
  t.nx = nx;
  t.ny = ny;
  t.nz = nz;
  t.v.assign(std::size_t(c) * std::size_t(nx) * std::size_t(ny) * std::size_t(nz), fill);
  return t;
}

namespace {

// One fused pass per row: out[z] += w0*src[z-1] + w1*src[z] + w2*src[z+1],
// with the z = 0 and z = nz-1 taps clipped at the boundary.
inline void row_conv3(double* __restrict__ out, const double* __restrict__ src, int nz,
                      double w0, double w1, double w2) {
  if (nz == 1) {
    out[0] += w1 * src[0];
    return;
  }
  out[0] += w1 * src[0] + w2 * src[1];
  for (int z = 1; z + 1 < nz; ++z) out[z] += w0 * src[z - 1] + w1 * src[z] + w2 * src[z + 1];
  out[nz - 1] += w0 * src[nz - 2] + w1 * src[nz - 1];
}

// Generic odd-kernel row pass used for kernels other than 3.
inline void row_conv_any(double* __restrict__ out, const double* __restrict__ src, int nz,
                         const double* wz, int kernel) {
  const int half = kernel / 2;
  for (int t = 0; t < kernel; ++t) {
    const int dk = t - half;
    const double wt = wz[t];
    const double* rr = src + dk;
    const int zlo = dk < 0 ? -dk : 0;
    const int zhi = dk > 0 ? nz - dk : nz;
    for (int z = zlo; z < zhi; ++z) out[z] += wt * rr[z];
  }
}

}  // namespace

Tensor conv3d(const Tensor& in, const double* w, const double* b, int c_out, int kernel) {
  if (kernel < 1 || kernel % 2 == 0) throw ValidationError("conv3d: kernel must be odd");
  if (c_out < 1) throw ValidationError("conv3d: c_out must be >= 1");
  const int half = kernel / 2;
  const int nx = in.nx, ny = in.ny, nz = in.nz;
  Tensor out = make_tensor(c_out, nx, ny, nz);
  const std::size_t vol = in.volume();
  for (int co = 0; co < c_out; ++co) {
    double* oc = out.ch(co);
    if (b != nullptr && b[co] != 0.0) {
      const double bv = b[co];
      for (std::size_t t = 0; t < vol; ++t) oc[t] = bv;
    }
    for (int ci = 0; ci < in.c; ++ci) {
      const double* sc = in.ch(ci);
      const double* wb =
          w + (std::size_t(co) * std::size_t(in.c) + std::size_t(ci)) * std::size_t(kernel) *
                  std::size_t(kernel) * std::size_t(kernel);
      for (int a = 0; a < kernel; ++a) {
        const int di = a - half;
        const int ilo = di < 0 ? -di : 0;
        const int ihi = di > 0 ? nx - di : nx;
        for (int bb = 0; bb < kernel; ++bb) {
          const int dj = bb - half;
          const int jlo = dj < 0 ? -dj : 0;
          const int jhi = dj > 0 ? ny - dj : ny;
          const double* wz = wb + (std::size_t(a) * kernel + bb) * kernel;
          for (int i = ilo; i < ihi; ++i) {
            for (int j = jlo; j < jhi; ++j) {
              double* orow = oc + (std::size_t(i) * ny + j) * nz;
              const double* srow = sc + (std::size_t(i + di) * ny + (j + dj)) * nz;
              if (kernel == 3)
                row_conv3(orow, srow, nz, wz[0], wz[1], wz[2]);
              else
                row_conv_any(orow, srow, nz, wz, kernel);
            }
          }
        }
      }
    }
  }
  return out;
}

void conv3d_backward(const Tensor& in, const double* w, int c_out, int kernel,
                     const Tensor& grad_out, Tensor* grad_in, double* grad_w, double* grad_b) {
  if (kernel < 1 || kernel % 2 == 0) throw ValidationError("conv3d_backward: kernel must be odd");
  if (grad_out.c != c_out || grad_out.nx != in.nx || grad_out.ny != in.ny || grad_out.nz != in.nz)
    throw ValidationError("conv3d_backward: grad_out shape does not match");
  if (grad_in != nullptr &&
      (grad_in->c != in.c || grad_in->nx != in.nx || grad_in->ny != in.ny || grad_in->nz != in.nz))
    throw ValidationError("conv3d_backward: grad_in shape does not match");
  const int half = kernel / 2;
  const int nx = in.nx, ny = in.ny, nz = in.nz;

  if (grad_b != nullptr) {
    const std::size_t vol = grad_out.volume();
    for (int co = 0; co < c_out; ++co) {
      const double* g = grad_out.ch(co);
      double s = 0.0;
      for (std::size_t t = 0; t < vol; ++t) s += g[t];
      grad_b[co] += s;
    }
  }

  if (grad_w != nullptr) {
    double acc[9];
    for (int co = 0; co < c_out; ++co) {
      const double* g = grad_out.ch(co);
      for (int ci = 0; ci < in.c; ++ci) {
        const double* sc = in.ch(ci);
        double* wrow =
            grad_w + (std::size_t(co) * std::size_t(in.c) + std::size_t(ci)) *
                         std::size_t(kernel) * std::size_t(kernel) * std::size_t(kernel);
        for (int a = 0; a < kernel; ++a) {
          const int di = a - half;
          const int ilo = di < 0 ? -di : 0;
          const int ihi = di > 0 ? nx - di : nx;
          for (int bb = 0; bb < kernel; ++bb) {
            const int dj = bb - half;
            const int jlo = dj < 0 ? -dj : 0;
            const int jhi = dj > 0 ? ny - dj : ny;
            for (int t = 0; t < kernel; ++t) acc[t] = 0.0;
            for (int i = ilo; i < ihi; ++i) {
              for (int j = jlo; j < jhi; ++j) {
                const double* __restrict__ grow = g + (std::size_t(i) * ny + j) * nz;
                const double* __restrict__ srow =
                    sc + (std::size_t(i + di) * ny + (j + dj)) * nz;
                if (kernel == 3) {
                  // one pass, three shifted dot products
                  double s0 = 0.0, s1 = grow[0] * srow[0], s2 = 0.0;
                  if (nz > 1) {
                    s2 = grow[0] * srow[1];
                    for (int z = 1; z + 1 < nz; ++z) {
                      const double gz = grow[z];
                      s0 += gz * srow[z - 1];
                      s1 += gz * srow[z];
                      s2 += gz * srow[z + 1];
                    }
                    s0 += grow[nz - 1] * srow[nz - 2];
                    s1 += grow[nz - 1] * srow[nz - 1];
                  }
                  acc[0] += s0;
                  acc[1] += s1;
                  acc[2] += s2;
                } else {
                  for (int t = 0; t < kernel; ++t) {
                    const int dk = t - half;
                    const double* rr = srow + dk;
                    const int zlo = dk < 0 ? -dk : 0;
                    const int zhi = dk > 0 ? nz - dk : nz;
                    double s = 0.0;
                    for (int z = zlo; z < zhi; ++z) s += grow[z] * rr[z];
                    acc[t] += s;
                  }
                }
              }
            }
            double* wt = wrow + (std::size_t(a) * kernel + bb) * kernel;
            for (int t = 0; t < kernel; ++t) wt[t] += acc[t];
          }
        }
      }
    }
  }

  // d/d in[y] = sum over offsets o of w[o] * grad_out[y - o]: a correlation
  // with the tap order reversed, so the forward row kernels apply as-is.
  if (grad_in != nullptr) {
    for (int ci = 0; ci < in.c; ++ci) {
      double* dc = grad_in->ch(ci);
      for (int co = 0; co < c_out; ++co) {
        const double* g = grad_out.ch(co);
        const double* wb =
            w + (std::size_t(co) * std::size_t(in.c) + std::size_t(ci)) * std::size_t(kernel) *
                    std::size_t(kernel) * std::size_t(kernel);
        for (int a = 0; a < kernel; ++a) {
          const int di = a - half;
          const int ilo = di > 0 ? di : 0;
          const int ihi = di < 0 ? nx + di : nx;
          for (int bb = 0; bb < kernel; ++bb) {
            const int dj = bb - half;
            const int jlo = dj > 0 ? dj : 0;
            const int jhi = dj < 0 ? ny + dj : ny;
            const double* wz = wb + (std::size_t(a) * kernel + bb) * kernel;
            double wrev[9];
            for (int t = 0; t < kernel; ++t) wrev[t] = wz[kernel - 1 - t];
            for (int i = ilo; i < ihi; ++i) {
              for (int j = jlo; j < jhi; ++j) {
                double* drow = dc + (std::size_t(i) * ny + j) * nz;
                const double* grow = g + (std::size_t(i - di) * ny + (j - dj)) * nz;
                if (kernel == 3)
                  row_conv3(drow, grow, nz, wrev[0], wrev[1], wrev[2]);
                else
                  row_conv_any(drow, grow, nz, wrev, kernel);
              }
            }
          }
        }
      }
    }
  }
}

Tensor leaky_relu(const Tensor& in, double slope) {
  Tensor out = in;
  for (double& x : out.v)
    if (x < 0.0) x *= slope;
  return out;
}

Tensor leaky_relu_backward(const Tensor& in, double slope, const Tensor& grad_out) {
  if (grad_out.v.size() != in.v.size())
    throw ValidationError("leaky_relu_backward: shape mismatch");
  Tensor g = grad_out;
  for (std::size_t t = 0; t < g.v.size(); ++t)
    if (in.v[t] < 0.0) g.v[t] *= slope;
  return g;
}

Tensor avgpool2(const Tensor& in) {
  if (in.nx % 2 != 0 || in.ny % 2 != 0 || in.nz % 2 != 0)
    throw ValidationError("avgpool2: grid dims must be even");
  Tensor out = make_tensor(in.c, in.nx / 2, in.ny / 2, in.nz / 2);
  const int ny = in.ny, nz = in.nz;
  for (int c = 0; c < in.c; ++c) {
    const double* s = in.ch(c);
    double* o = out.ch(c);
    for (int i = 0; i < out.nx; ++i)
      for (int j = 0; j < out.ny; ++j) {
        const double* r0 = s + (std::size_t(2 * i) * ny + 2 * j) * nz;
        const double* r1 = s + (std::size_t(2 * i) * ny + 2 * j + 1) * nz;
        const double* r2 = s + (std::size_t(2 * i + 1) * ny + 2 * j) * nz;
        const double* r3 = s + (std::size_t(2 * i + 1) * ny + 2 * j + 1) * nz;
        double* orow = o + (std::size_t(i) * out.ny + j) * out.nz;
        for (int z = 0; z < out.nz; ++z)
          orow[z] = 0.125 * (r0[2 * z] + r0[2 * z + 1] + r1[2 * z] + r1[2 * z + 1] +
                             r2[2 * z] + r2[2 * z + 1] + r3[2 * z] + r3[2 * z + 1]);
      }
  }
  return out;
}

Tensor avgpool2_backward(const Tensor& grad_out) {
  Tensor g = make_tensor(grad_out.c, grad_out.nx * 2, grad_out.ny * 2, grad_out.nz * 2);
  const int ny = g.ny, nz = g.nz;
  for (int c = 0; c < g.c; ++c) {
    const double* go = grad_out.ch(c);
    double* d = g.ch(c);
    for (int i = 0; i < grad_out.nx; ++i)
      for (int j = 0; j < grad_out.ny; ++j) {
        const double* grow = go + (std::size_t(i) * grad_out.ny + j) * grad_out.nz;
        for (int u = 0; u < 2; ++u)
          for (int v = 0; v < 2; ++v) {
            double* drow = d + (std::size_t(2 * i + u) * ny + 2 * j + v) * nz;
            for (int z = 0; z < grad_out.nz; ++z) {
              const double gv = 0.125 * grow[z];
              drow[2 * z] = gv;
              drow[2 * z + 1] = gv;
            }
          }
      }
  }
  return g;
}

Tensor upsample_nn2(const Tensor& in) {
  Tensor out = make_tensor(in.c, in.nx * 2, in.ny * 2, in.nz * 2);
  const int ny = out.ny, nz = out.nz;
  for (int c = 0; c < in.c; ++c) {
    const double* s = in.ch(c);
    double* o = out.ch(c);
    for (int i = 0; i < out.nx; ++i)
      for (int j = 0; j < out.ny; ++j) {
        const double* srow = s + (std::size_t(i / 2) * in.ny + j / 2) * in.nz;
        double* orow = o + (std::size_t(i) * ny + j) * nz;
        for (int z = 0; z < nz; ++z) orow[z] = srow[z / 2];
      }
  }
  return out;
}

Tensor upsample_nn2_backward(const Tensor& grad_out) {
  if (grad_out.nx % 2 != 0 || grad_out.ny % 2 != 0 || grad_out.nz % 2 != 0)
    throw ValidationError("upsample_nn2_backward: grid dims must be even");
  Tensor g = make_tensor(grad_out.c, grad_out.nx / 2, grad_out.ny / 2, grad_out.nz / 2);
  const int ny = grad_out.ny, nz = grad_out.nz;
  for (int c = 0; c < g.c; ++c) {
    const double* go = grad_out.ch(c);
    double* d = g.ch(c);
    for (int i = 0; i < grad_out.nx; ++i)
      for (int j = 0; j < grad_out.ny; ++j) {
        const double* grow = go + (std::size_t(i) * ny + j) * nz;
        double* drow = d + (std::size_t(i / 2) * g.ny + j / 2) * g.nz;
        for (int z = 0; z < nz; ++z) drow[z / 2] += grow[z];
      }
  }
  return g;
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
  if (a.nx != b.nx || a.ny != b.ny || a.nz != b.nz)
    throw ValidationError("concat_channels: grid dims must match");
  Tensor out = make_tensor(a.c + b.c, a.nx, a.ny, a.nz);
  std::memcpy(out.v.data(), a.v.data(), a.v.size() * sizeof(double));
  std::memcpy(out.v.data() + a.v.size(), b.v.data(), b.v.size() * sizeof(double));
  return out;
}

const Tensor& forward(const UNetParams& params, const Tensor& input, Tape& tape) {
  const ArchSpec& arch = params.arch;
  arch.validate();
  if (params.values.size() != param_count(arch))
    throw ValidationError("forward: parameter vector length does not match the architecture");
  if (input.c != arch.in_channels)
    throw ValidationError("forward: input has " + std::to_string(input.c) +
                          " channels, architecture expects " + std::to_string(arch.in_channels));
  if (input.nx < 1 || input.ny < 1 || input.nz < 1)
    throw ValidationError("forward: input grid dims must be >= 1");
  const int div = 1 << arch.depth;
  if (input.nx % div != 0 || input.ny % div != 0 || input.nz % div != 0)
    throw ValidationError("forward: grid dims must be divisible by 2^depth = " +
                          std::to_string(div));

  const std::vector<LayerShape> table = layer_table(arch);
  tape = Tape{};
  tape.tensors.reserve(4 * table.size());
  tape.tensors.push_back(input);

  int layer = 0;
  auto push = [&](Tape::Op op, int lay, int in0, int in1, Tensor t) {
    tape.tensors.push_back(std::move(t));
    const int out = int(tape.tensors.size()) - 1;
    tape.nodes.push_back(Tape::Node{op, lay, in0, in1, out});
    return out;
  };
  auto conv_step = [&](int src, bool nonlinear) {
    const LayerShape& L = table[std::size_t(layer)];
    int idx = push(Tape::Op::conv, layer, src, -1,
                   conv3d(tape.tensors[std::size_t(src)], params.values.data() + L.w_offset,
                          params.values.data() + L.b_offset, L.c_out, L.kernel));
    ++layer;
    if (nonlinear)
      idx = push(Tape::Op::lrelu, -1, idx, -1,
                 leaky_relu(tape.tensors[std::size_t(idx)], arch.leaky_slope));
    return idx;
  };

  int cur = 0;
  if (arch.depth == 0) {
    tape.output = conv_step(cur, false);
    return tape.tensors[std::size_t(tape.output)];
  }
  std::vector<int> skips;
  for (int l = 0; l < arch.depth; ++l) {
    cur = conv_step(cur, true);
    cur = conv_step(cur, true);
    skips.push_back(cur);
    cur = push(Tape::Op::pool, -1, cur, -1, avgpool2(tape.tensors[std::size_t(cur)]));
  }
  cur = conv_step(cur, true);
  cur = conv_step(cur, true);
  for (int l = arch.depth - 1; l >= 0; --l) {
    cur = push(Tape::Op::upsample, -1, cur, -1, upsample_nn2(tape.tensors[std::size_t(cur)]));
    cur = conv_step(cur, true);
    cur = push(Tape::Op::concat, -1, cur, skips[std::size_t(l)],
               concat_channels(tape.tensors[std::size_t(cur)],
                               tape.tensors[std::size_t(skips[std::size_t(l)])]));
    cur = conv_step(cur, true);
    cur = conv_step(cur, true);
  }
  tape.output = conv_step(cur, false);
  return tape.tensors[std::size_t(tape.output)];
}

std::vector<double> backward(const Tape& tape, const UNetParams& params,
                             const Tensor& output_grad) {
  if (tape.output < 0 || tape.nodes.empty())
    throw ValidationError("backward: tape holds no forward pass");
  const Tensor& out = tape.tensors[std::size_t(tape.output)];
  if (output_grad.c != out.c || output_grad.nx != out.nx || output_grad.ny != out.ny ||
      output_grad.nz != out.nz)
    throw ValidationError("backward: output_grad shape does not match the forward output");
  const std::vector<LayerShape> table = layer_table(params.arch);
  std::vector<double> grads(params.values.size(), 0.0);
  std::vector<Tensor> adj(tape.tensors.size());
  adj[std::size_t(tape.output)] = output_grad;

  auto ensure = [&](int idx) -> Tensor& {
    Tensor& t = adj[std::size_t(idx)];
    if (t.v.empty()) {
      const Tensor& like = tape.tensors[std::size_t(idx)];
      t = make_tensor(like.c, like.nx, like.ny, like.nz);
    }
    return t;
  };
  auto add_into = [&](int idx, const Tensor& g) {
    Tensor& t = ensure(idx);
    for (std::size_t i = 0; i < t.v.size(); ++i) t.v[i] += g.v[i];
  };

  for (auto it = tape.nodes.rbegin(); it != tape.nodes.rend(); ++it) {
    const Tape::Node& n = *it;
    if (adj[std::size_t(n.out)].v.empty()) continue;
    const Tensor& g = adj[std::size_t(n.out)];
    switch (n.op) {
      case Tape::Op::conv: {
        const LayerShape& L = table[std::size_t(n.layer)];
        Tensor* gin = n.in0 == 0 ? nullptr : &ensure(n.in0);
        conv3d_backward(tape.tensors[std::size_t(n.in0)], params.values.data() + L.w_offset,
                        L.c_out, L.kernel, g, gin, grads.data() + L.w_offset,
                        grads.data() + L.b_offset);
        break;
      }
      case Tape::Op::lrelu:
        add_into(n.in0, leaky_relu_backward(tape.tensors[std::size_t(n.in0)],
                                            params.arch.leaky_slope, g));
        break;
      case Tape::Op::pool:
        add_into(n.in0, avgpool2_backward(g));
        break;
      case Tape::Op::upsample:
        add_into(n.in0, upsample_nn2_backward(g));
        break;
      case Tape::Op::concat: {
        const Tensor& a = tape.tensors[std::size_t(n.in0)];
        const Tensor& b = tape.tensors[std::size_t(n.in1)];
        Tensor ga = make_tensor(a.c, a.nx, a.ny, a.nz);
        Tensor gb = make_tensor(b.c, b.nx, b.ny, b.nz);
        std::memcpy(ga.v.data(), g.v.data(), ga.v.size() * sizeof(double));
        std::memcpy(gb.v.data(), g.v.data() + ga.v.size(), gb.v.size() * sizeof(double));
        add_into(n.in0, ga);
        add_into(n.in1, gb);
        break;
      }
    }
  }
  return grads;
}

namespace {

json arch_to_json(const ArchSpec& a) {
  return json{{"in_channels", a.in_channels}, {"out_channels", a.out_channels},
              {"depth", a.depth},             {"base_width", a.base_width},
              {"kernel", a.kernel},           {"leaky_slope", a.leaky_slope}};
}

ArchSpec arch_from_json(const json& j) {
  ArchSpec a;
  a.in_channels = j.at("in_channels").get<int>();
  a.out_channels = j.at("out_channels").get<int>();
  a.depth = j.at("depth").get<int>();
  a.base_width = j.at("base_width").get<int>();
  a.kernel = j.at("kernel").get<int>();
  a.leaky_slope = j.at("leaky_slope").get<double>();
  return a;
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ck) {
  ck.arch.validate();
  const std::size_t n = param_count(ck.arch);
  if (ck.params.size() != n)
    throw ValidationError("save_checkpoint: params length does not match the architecture");
  if (ck.has_optimizer_state && (ck.moment1.size() != n || ck.moment2.size() != n))
    throw ValidationError("save_checkpoint: optimizer state length does not match");

  json header{{"version", kCheckpointVersion},
              {"arch", arch_to_json(ck.arch)},
              {"seed", ck.seed},
              {"step", ck.step},
              {"has_optimizer_state", ck.has_optimizer_state},
              {"param_count", n},
              {"dtype", "f64"}};
  const std::string header_bytes = header.dump();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("save_checkpoint: cannot open " + path);
  out.write(kCheckpointMagic, 4);
  const std::uint32_t hlen = std::uint32_t(header_bytes.size());
  out.write(reinterpret_cast<const char*>(&hlen), 4);
  out.write(header_bytes.data(), std::streamsize(header_bytes.size()));
  out.write(reinterpret_cast<const char*>(ck.params.data()),
            std::streamsize(n * sizeof(double)));
  if (ck.has_optimizer_state) {
    out.write(reinterpret_cast<const char*>(ck.moment1.data()),
              std::streamsize(n * sizeof(double)));
    out.write(reinterpret_cast<const char*>(ck.moment2.data()),
              std::streamsize(n * sizeof(double)));
  }
  if (!out) throw Error("save_checkpoint: write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("load_checkpoint: cannot open " + path);
  in.seekg(0, std::ios::end);
  const std::size_t file_size = std::size_t(in.tellg());
  in.seekg(0);

  char magic[4];
  if (file_size < 8 || !in.read(magic, 4))
    throw FormatError(FormatError::Kind::bad_magic, path + ": file too short for magic");
  if (std::memcmp(magic, kCheckpointMagic, 4) != 0)
    throw FormatError(FormatError::Kind::bad_magic, path + ": bad magic, not an EMW1 checkpoint");
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

  Checkpoint ck;
  std::size_t declared = 0;
  try {
    const int version = header.at("version").get<int>();
    if (version != int(kCheckpointVersion))
      throw FormatError(FormatError::Kind::unsupported_version,
                        path + ": unsupported checkpoint version " + std::to_string(version));
    if (header.at("dtype").get<std::string>() != "f64")
      throw FormatError(FormatError::Kind::bad_header, path + ": unsupported dtype");
    ck.arch = arch_from_json(header.at("arch"));
    ck.seed = header.at("seed").get<std::uint64_t>();
    ck.step = header.at("step").get<std::int64_t>();
    ck.has_optimizer_state = header.at("has_optimizer_state").get<bool>();
    declared = header.at("param_count").get<std::size_t>();
  } catch (const json::exception& e) {
    throw FormatError(FormatError::Kind::bad_header,
                      path + ": header missing or mistyped field: " + e.what());
  }
  try {
    ck.arch.validate();
  } catch (const ValidationError& e) {
    throw FormatError(FormatError::Kind::bad_header, path + ": " + e.what());
  }
  const std::size_t n = param_count(ck.arch);
  if (declared != n)
    throw FormatError(FormatError::Kind::bad_header,
                      path + ": param_count " + std::to_string(declared) +
                          " does not match the declared architecture (" + std::to_string(n) +
                          ")");
  const std::size_t blocks = ck.has_optimizer_state ? 3 : 1;
  const std::size_t expected = 8 + hlen + blocks * n * sizeof(double);
  if (file_size < expected)
    throw FormatError(FormatError::Kind::truncated,
                      path + ": payload truncated, expected " + std::to_string(expected) +
                          " bytes, file has " + std::to_string(file_size));
  if (file_size > expected)
    throw FormatError(FormatError::Kind::length_mismatch,
                      path + ": trailing bytes after declared payload");

  auto read_block = [&](std::vector<double>& dst) {
    dst.resize(n);
    if (!in.read(reinterpret_cast<char*>(dst.data()), std::streamsize(n * sizeof(double))))
      throw FormatError(FormatError::Kind::truncated, path + ": payload read failed");
  };
  read_block(ck.params);
  if (ck.has_optimizer_state) {
    read_block(ck.moment1);
    read_block(ck.moment2);
  }
  for (double v : ck.params)
    if (!std::isfinite(v))
      throw FormatError(FormatError::Kind::bad_header, path + ": non-finite parameter value");
  return ck;
}

}  // namespace em::net
