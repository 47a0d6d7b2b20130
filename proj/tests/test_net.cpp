#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "em/errors.hpp"
#include "em/net.hpp"
#include "em/rng.hpp"

using namespace em;
using namespace em::net;

namespace {

ArchSpec make_arch(int in, int depth, int base, int kernel = 3) {
  ArchSpec a;
  a.in_channels = in;
  a.depth = depth;
  a.base_width = base;
  a.kernel = kernel;
  return a;
}

Tensor random_tensor(int c, int nx, int ny, int nz, Rng& rng, double lo = -1.0,
                     double hi = 1.0) {
  Tensor t = make_tensor(c, nx, ny, nz);
  for (double& v : t.v) v = rng.uniform(lo, hi);
  return t;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

bool contains(const std::string& hay, const std::string& needle) {
  return hay.find(needle) != std::string::npos;
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("layer table covers the documented shapes and parameter count") {
  const ArchSpec arch = make_arch(19, 2, 8);
  const auto table = layer_table(arch);

  // Hand-computed from the conv shapes alone: weights c_out*c_in*k^3, biases c_out.
  struct Shape {
    const char* name;
    int c_in, c_out;
  };
  const Shape expected[] = {
      {"enc0a", 19, 8}, {"enc0b", 8, 8},   {"enc1a", 8, 16},  {"enc1b", 16, 16},
      {"bota", 16, 32}, {"botb", 32, 32},  {"up1", 32, 16},   {"dec1a", 32, 16},
      {"dec1b", 16, 16}, {"up0", 16, 8},   {"dec0a", 16, 8},  {"dec0b", 8, 8},
      {"head", 8, 12},
  };
  REQUIRE(table.size() == 13);
  std::size_t total = 0;
  std::size_t off = 0;
  for (std::size_t i = 0; i < table.size(); ++i) {
    CHECK(table[i].name == expected[i].name);
    CHECK(table[i].c_in == expected[i].c_in);
    CHECK(table[i].c_out == expected[i].c_out);
    CHECK(table[i].kernel == 3);
    const std::size_t w = std::size_t(expected[i].c_out) * expected[i].c_in * 27;
    CHECK(table[i].w_offset == off);
    off += w;
    CHECK(table[i].b_offset == off);
    off += std::size_t(expected[i].c_out);
    total += w + std::size_t(expected[i].c_out);
  }
  CHECK(total == 103660);
  CHECK(param_count(arch) == 103660);
  CHECK(param_count(arch) == off);
}

TEST_CASE("layer table for depth zero is the head conv alone") {
  const auto table = layer_table(make_arch(19, 0, 8));
  REQUIRE(table.size() == 1);
  CHECK(table[0].name == "head");
  CHECK(table[0].c_in == 19);
  CHECK(table[0].c_out == 12);
  CHECK(param_count(make_arch(19, 0, 8)) == std::size_t(19) * 12 * 27 + 12);
}

TEST_CASE("receptive field radius follows the size-jump recurrence") {
  // depth 0: a single 3^3 conv sees one voxel in each direction.
  CHECK(receptive_field_radius(make_arch(19, 0, 8)) == 1.0);
  // depth 1: convs at jump 1 contribute 4, pool 1, bottleneck convs at jump 2
  // contribute 8, decoder convs at jump 1 contribute 6, head 2: size 22.
  CHECK(receptive_field_radius(make_arch(19, 1, 8)) == 10.5);
  // depth 2 extends the same recurrence: size 52.
  CHECK(receptive_field_radius(make_arch(19, 2, 8)) == 25.5);
  // 1^3 kernels never widen the window.
  CHECK(receptive_field_radius(make_arch(19, 0, 8, 1)) == 0.0);
  // width never enters the recurrence
  CHECK(receptive_field_radius(make_arch(4, 2, 2)) == 25.5);
}

TEST_CASE("arch validation rejects out-of-contract settings") {
  CHECK_THROWS_AS(layer_table(make_arch(0, 1, 8)), ValidationError);
  CHECK_THROWS_AS(layer_table(make_arch(19, -1, 8)), ValidationError);
  CHECK_THROWS_AS(layer_table(make_arch(19, 1, 0)), ValidationError);
  CHECK_THROWS_AS(layer_table(make_arch(19, 1, 8, 2)), ValidationError);
  CHECK_THROWS_AS(layer_table(make_arch(19, 1, 8, -3)), ValidationError);
  ArchSpec bad = make_arch(19, 1, 8);
  bad.out_channels = 6;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad = make_arch(19, 1, 8);
  bad.leaky_slope = -0.5;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
}

TEST_CASE("init_params is deterministic with zero biases inside the He bound") {
  const ArchSpec arch = make_arch(5, 1, 3);
  const UNetParams p1 = init_params(arch, 42);
  const UNetParams p2 = init_params(arch, 42);
  const UNetParams p3 = init_params(arch, 43);
  REQUIRE(p1.values.size() == param_count(arch));
  CHECK(std::memcmp(p1.values.data(), p2.values.data(),
                    p1.values.size() * sizeof(double)) == 0);
  CHECK(p1.values != p3.values);
  CHECK(p1.seed == 42);

  for (const LayerShape& L : layer_table(arch)) {
    const double bound = std::sqrt(6.0 / (double(L.c_in) * 27.0));
    double max_abs = 0.0;
    for (std::size_t t = 0; t < L.weight_count(); ++t) {
      const double w = p1.values[L.w_offset + t];
      CHECK(std::abs(w) <= bound);
      max_abs = std::max(max_abs, std::abs(w));
    }
    // the draw actually fills a reasonable part of the interval
    CHECK(max_abs > 0.5 * bound);
    for (int c = 0; c < L.c_out; ++c) CHECK(p1.values[L.b_offset + std::size_t(c)] == 0.0);
  }
}

TEST_CASE("forward rejects inputs that violate a named constraint") {
  const ArchSpec arch = make_arch(4, 2, 2);
  UNetParams p = init_params(arch, 1);
  Tape tape;

  Rng rng(7);
  Tensor wrong_c = random_tensor(5, 8, 8, 8, rng);
  try {
    forward(p, wrong_c, tape);
    FAIL("expected channel mismatch to throw");
  } catch (const ValidationError& e) {
    CHECK(contains(e.what(), "channels"));
  }

  Tensor wrong_div = random_tensor(4, 10, 8, 8, rng);
  try {
    forward(p, wrong_div, tape);
    FAIL("expected divisibility violation to throw");
  } catch (const ValidationError& e) {
    CHECK(contains(e.what(), "divisible"));
  }

  Tensor ok = random_tensor(4, 8, 8, 8, rng);
  UNetParams short_p = p;
  short_p.values.pop_back();
  try {
    forward(short_p, ok, tape);
    FAIL("expected parameter length mismatch to throw");
  } catch (const ValidationError& e) {
    CHECK(contains(e.what(), "parameter"));
  }
}

TEST_CASE("zero parameters map any input to exactly zero") {
  const ArchSpec arch = make_arch(3, 1, 2);
  UNetParams p;
  p.arch = arch;
  p.values.assign(param_count(arch), 0.0);
  Rng rng(3);
  const Tensor in = random_tensor(3, 8, 6, 4, rng);
  Tape tape;
  const Tensor& out = forward(p, in, tape);
  CHECK(out.c == 12);
  CHECK(out.nx == 8);
  CHECK(out.ny == 6);
  CHECK(out.nz == 4);
  for (double v : out.v) CHECK(v == 0.0);
}

TEST_CASE("forward is bitwise deterministic and grid-size agnostic") {
  const ArchSpec arch = make_arch(4, 1, 2);
  const UNetParams p = init_params(arch, 11);
  Rng rng(5);
  const Tensor in = random_tensor(4, 8, 8, 8, rng);
  Tape t1, t2;
  const Tensor& o1 = forward(p, in, t1);
  const Tensor& o2 = forward(p, in, t2);
  REQUIRE(o1.v.size() == o2.v.size());
  CHECK(std::memcmp(o1.v.data(), o2.v.data(), o1.v.size() * sizeof(double)) == 0);

  // the same parameter vector serves any conforming grid
  const Tensor in2 = random_tensor(4, 4, 10, 6, rng);
  Tape t3;
  const Tensor& o3 = forward(p, in2, t3);
  CHECK(o3.nx == 4);
  CHECK(o3.ny == 10);
  CHECK(o3.nz == 6);
}

namespace {

// Central-difference check of d(sum(c * f(x)))/dx against an analytic gradient.
// Returns the max relative error over the probed entries.
double max_rel_err(const std::vector<double>& analytic, const std::vector<double>& fd) {
  double worst = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const double denom = std::max({std::abs(analytic[i]), std::abs(fd[i]), 1e-8});
    worst = std::max(worst, std::abs(analytic[i] - fd[i]) / denom);
  }
  return worst;
}

}  // namespace

TEST_CASE("conv3d gradients match central differences") {
  Rng rng(17);
  const int c_in = 2, c_out = 3, k = 3;
  const Tensor in = random_tensor(c_in, 4, 5, 6, rng);
  std::vector<double> w(std::size_t(c_out) * c_in * k * k * k);
  std::vector<double> b(c_out);
  for (double& x : w) x = rng.uniform(-0.5, 0.5);
  for (double& x : b) x = rng.uniform(-0.5, 0.5);
  Tensor cvec = random_tensor(c_out, 4, 5, 6, rng);

  auto loss = [&](const Tensor& x, const std::vector<double>& wv,
                  const std::vector<double>& bv) {
    const Tensor out = conv3d(x, wv.data(), bv.data(), c_out, k);
    return dot(out.v, cvec.v);
  };

  Tensor gin = make_tensor(c_in, 4, 5, 6);
  std::vector<double> gw(w.size(), 0.0), gb(b.size(), 0.0);
  conv3d_backward(in, w.data(), c_out, k, cvec, &gin, gw.data(), gb.data());

  const double step = 1e-5;
  std::vector<double> fd_w(w.size()), fd_b(b.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    std::vector<double> wp = w, wm = w;
    wp[i] += step;
    wm[i] -= step;
    fd_w[i] = (loss(in, wp, b) - loss(in, wm, b)) / (2 * step);
  }
  for (std::size_t i = 0; i < b.size(); ++i) {
    std::vector<double> bp = b, bm = b;
    bp[i] += step;
    bm[i] -= step;
    fd_b[i] = (loss(in, w, bp) - loss(in, w, bm)) / (2 * step);
  }
  CHECK(max_rel_err(gw, fd_w) <= 1e-6);
  CHECK(max_rel_err(gb, fd_b) <= 1e-6);

  // probe a spread of input entries
  std::vector<double> ga, fa;
  for (std::size_t i = 0; i < in.v.size(); i += 7) {
    Tensor ip = in, im = in;
    ip.v[i] += step;
    im.v[i] -= step;
    ga.push_back(gin.v[i]);
    fa.push_back((loss(ip, w, b) - loss(im, w, b)) / (2 * step));
  }
  CHECK(max_rel_err(ga, fa) <= 1e-6);
}

TEST_CASE("conv3d input gradient is the exact adjoint of the forward map") {
  Rng rng(23);
  const int c_in = 3, c_out = 2, k = 3;
  const Tensor x = random_tensor(c_in, 5, 4, 7, rng);
  const Tensor y = random_tensor(c_out, 5, 4, 7, rng);
  std::vector<double> w(std::size_t(c_out) * c_in * k * k * k);
  for (double& v : w) v = rng.uniform(-1.0, 1.0);

  const Tensor ax = conv3d(x, w.data(), nullptr, c_out, k);
  Tensor aty = make_tensor(c_in, 5, 4, 7);
  conv3d_backward(x, w.data(), c_out, k, y, &aty, nullptr, nullptr);

  const double lhs = dot(ax.v, y.v);
  const double rhs = dot(x.v, aty.v);
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
}

TEST_CASE("pool, upsample, lrelu and concat gradients match central differences") {
  Rng rng(29);
  const double step = 1e-5;

  SUBCASE("avgpool2") {
    const Tensor in = random_tensor(2, 4, 6, 4, rng);
    Tensor cvec = random_tensor(2, 2, 3, 2, rng);
    const Tensor g = avgpool2_backward(cvec);
    std::vector<double> ga, fa;
    for (std::size_t i = 0; i < in.v.size(); i += 5) {
      Tensor ip = in, im = in;
      ip.v[i] += step;
      im.v[i] -= step;
      ga.push_back(g.v[i]);
      fa.push_back((dot(avgpool2(ip).v, cvec.v) - dot(avgpool2(im).v, cvec.v)) / (2 * step));
    }
    CHECK(max_rel_err(ga, fa) <= 1e-6);
    // adjoint identity
    const Tensor px = avgpool2(in);
    CHECK(dot(px.v, cvec.v) == doctest::Approx(dot(in.v, g.v)).epsilon(1e-12));
  }

  SUBCASE("upsample_nn2") {
    const Tensor in = random_tensor(2, 3, 2, 4, rng);
    Tensor cvec = random_tensor(2, 6, 4, 8, rng);
    const Tensor g = upsample_nn2_backward(cvec);
    std::vector<double> ga, fa;
    for (std::size_t i = 0; i < in.v.size(); ++i) {
      Tensor ip = in, im = in;
      ip.v[i] += step;
      im.v[i] -= step;
      ga.push_back(g.v[i]);
      fa.push_back((dot(upsample_nn2(ip).v, cvec.v) - dot(upsample_nn2(im).v, cvec.v)) /
                   (2 * step));
    }
    CHECK(max_rel_err(ga, fa) <= 1e-6);
    const Tensor ux = upsample_nn2(in);
    CHECK(dot(ux.v, cvec.v) == doctest::Approx(dot(in.v, g.v)).epsilon(1e-12));
  }

  SUBCASE("leaky_relu away from the kink") {
    Tensor in = make_tensor(2, 3, 3, 3);
    for (double& v : in.v) {
      v = rng.uniform(0.5, 1.5);
      if (rng.uniform() < 0.5) v = -v;
    }
    Tensor cvec = random_tensor(2, 3, 3, 3, rng);
    const Tensor g = leaky_relu_backward(in, 0.01, cvec);
    std::vector<double> ga, fa;
    for (std::size_t i = 0; i < in.v.size(); ++i) {
      Tensor ip = in, im = in;
      ip.v[i] += step;
      im.v[i] -= step;
      ga.push_back(g.v[i]);
      fa.push_back(
          (dot(leaky_relu(ip, 0.01).v, cvec.v) - dot(leaky_relu(im, 0.01).v, cvec.v)) /
          (2 * step));
    }
    CHECK(max_rel_err(ga, fa) <= 1e-6);
  }

  SUBCASE("concat_channels") {
    const Tensor a = random_tensor(2, 3, 3, 3, rng);
    const Tensor b = random_tensor(3, 3, 3, 3, rng);
    const Tensor cc = concat_channels(a, b);
    REQUIRE(cc.c == 5);
    // channels of a then b, laid out verbatim
    CHECK(std::memcmp(cc.v.data(), a.v.data(), a.v.size() * sizeof(double)) == 0);
    CHECK(std::memcmp(cc.v.data() + a.v.size(), b.v.data(), b.v.size() * sizeof(double)) ==
          0);
  }
}

TEST_CASE("conv3d output translates with its input away from the boundary") {
  Rng rng(31);
  const int c_in = 2, c_out = 2, k = 3;
  const int nx = 8, ny = 6, nz = 6;
  const Tensor x = random_tensor(c_in, nx, ny, nz, rng);
  Tensor xs = make_tensor(c_in, nx, ny, nz);
  for (int c = 0; c < c_in; ++c)
    for (int i = 1; i < nx; ++i)
      std::memcpy(xs.ch(c) + std::size_t(i) * ny * nz,
                  x.ch(c) + std::size_t(i - 1) * ny * nz,
                  std::size_t(ny) * nz * sizeof(double));
  std::vector<double> w(std::size_t(c_out) * c_in * k * k * k);
  std::vector<double> b(c_out);
  for (double& v : w) v = rng.uniform(-1.0, 1.0);
  for (double& v : b) v = rng.uniform(-1.0, 1.0);

  const Tensor y = conv3d(x, w.data(), b.data(), c_out, k);
  const Tensor ys = conv3d(xs, w.data(), b.data(), c_out, k);
  // the shifted window must stay clear of the zero padding on both ends
  for (int c = 0; c < c_out; ++c)
    for (int i = 1; i + 2 < nx; ++i)
      for (int j = 0; j < ny; ++j)
        for (int z = 0; z < nz; ++z) {
          const double a0 = y.ch(c)[(std::size_t(i) * ny + j) * nz + z];
          const double a1 = ys.ch(c)[(std::size_t(i + 1) * ny + j) * nz + z];
          CHECK(a0 == a1);
        }
}

TEST_CASE("full network output translates by a pooling-aligned shift") {
  const ArchSpec arch = make_arch(3, 1, 2);
  const UNetParams p = init_params(arch, 19);
  const int n = 32, shift = 2;
  Rng rng(37);
  const Tensor x = random_tensor(3, n, n, n, rng);
  Tensor xs = make_tensor(3, n, n, n);
  for (int c = 0; c < 3; ++c)
    for (int i = shift; i < n; ++i)
      std::memcpy(xs.ch(c) + std::size_t(i) * n * n,
                  x.ch(c) + std::size_t(i - shift) * n * n,
                  std::size_t(n) * n * sizeof(double));

  Tape t1, t2;
  const Tensor& y = forward(p, x, t1);
  const Tensor& ys = forward(p, xs, t2);

  // radius 10.5 rounds up to an 11-voxel margin along the shifted axis
  const int margin = 11;
  for (int c = 0; c < 12; ++c)
    for (int i = margin; i + shift + margin < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int z = 0; z < n; ++z) {
          const double a0 = y.ch(c)[(std::size_t(i) * n + j) * n + z];
          const double a1 = ys.ch(c)[(std::size_t(i + shift) * n + j) * n + z];
          CHECK(a0 == a1);
        }
}

TEST_CASE("full network backward matches central differences") {
  const ArchSpec arch = make_arch(3, 1, 2);
  UNetParams p = init_params(arch, 47);
  Rng rng(53);
  const Tensor in = random_tensor(3, 8, 8, 8, rng);
  Tensor cvec = random_tensor(12, 8, 8, 8, rng, -0.5, 0.5);

  auto loss = [&](const UNetParams& q) {
    Tape tape;
    const Tensor& out = forward(q, in, tape);
    return dot(out.v, cvec.v);
  };

  Tape tape;
  forward(p, in, tape);
  const std::vector<double> g = backward(tape, p, cvec);
  REQUIRE(g.size() == p.values.size());

  const double step = 1e-4;
  const std::size_t stride = std::max<std::size_t>(1, p.values.size() / 60);
  std::vector<double> ga, fa;
  for (std::size_t i = 0; i < p.values.size(); i += stride) {
    UNetParams qp = p, qm = p;
    qp.values[i] += step;
    qm.values[i] -= step;
    ga.push_back(g[i]);
    fa.push_back((loss(qp) - loss(qm)) / (2 * step));
  }
  REQUIRE(ga.size() >= 50);
  CHECK(max_rel_err(ga, fa) <= 1e-5);
}

TEST_CASE("backward accumulates skip-path and depth-path contributions") {
  // A linear head on top of a concat means both branches feed the loss; the
  // input gradient must be the sum of the direct and the pooled path.
  const ArchSpec arch = make_arch(2, 1, 2);
  UNetParams p = init_params(arch, 61);
  Rng rng(67);
  const Tensor in = random_tensor(2, 4, 4, 4, rng);
  Tensor cvec = random_tensor(12, 4, 4, 4, rng);

  Tape tape;
  forward(p, in, tape);
  const std::vector<double> g1 = backward(tape, p, cvec);
  const std::vector<double> g2 = backward(tape, p, cvec);
  CHECK(g1 == g2);
  double norm = 0.0;
  for (double v : g1) norm += v * v;
  CHECK(norm > 0.0);
}

TEST_CASE("checkpoint round trip is bit exact") {
  const ArchSpec arch = make_arch(4, 1, 2);
  const UNetParams p = init_params(arch, 9);
  Checkpoint ck;
  ck.arch = arch;
  ck.seed = 9;
  ck.step = 1234;
  ck.params = p.values;
  ck.has_optimizer_state = true;
  Rng rng(71);
  ck.moment1.resize(p.values.size());
  ck.moment2.resize(p.values.size());
  for (double& v : ck.moment1) v = rng.uniform(-1e-3, 1e-3);
  for (double& v : ck.moment2) v = rng.uniform(0.0, 1e-6);

  const std::string path = temp_path("em_net_ck.emw");
  save_checkpoint(path, ck);
  const Checkpoint rt = load_checkpoint(path);
  CHECK(rt.arch.in_channels == 4);
  CHECK(rt.arch.depth == 1);
  CHECK(rt.arch.base_width == 2);
  CHECK(rt.arch.kernel == 3);
  CHECK(rt.arch.leaky_slope == arch.leaky_slope);
  CHECK(rt.seed == 9);
  CHECK(rt.step == 1234);
  CHECK(rt.has_optimizer_state);
  REQUIRE(rt.params.size() == ck.params.size());
  CHECK(std::memcmp(rt.params.data(), ck.params.data(),
                    ck.params.size() * sizeof(double)) == 0);
  CHECK(std::memcmp(rt.moment1.data(), ck.moment1.data(),
                    ck.moment1.size() * sizeof(double)) == 0);
  CHECK(std::memcmp(rt.moment2.data(), ck.moment2.data(),
                    ck.moment2.size() * sizeof(double)) == 0);
  std::remove(path.c_str());
}

TEST_CASE("checkpoint without optimizer state stores parameters only") {
  const ArchSpec arch = make_arch(3, 0, 2);
  Checkpoint ck;
  ck.arch = arch;
  ck.params = init_params(arch, 2).values;
  const std::string path = temp_path("em_net_ck_plain.emw");
  save_checkpoint(path, ck);
  const Checkpoint rt = load_checkpoint(path);
  CHECK(!rt.has_optimizer_state);
  CHECK(rt.moment1.empty());
  CHECK(rt.moment2.empty());
  CHECK(rt.params == ck.params);
  std::remove(path.c_str());
}

TEST_CASE("checkpoint loader rejects malformed files by kind") {
  const ArchSpec arch = make_arch(3, 0, 2);
  Checkpoint ck;
  ck.arch = arch;
  ck.params = init_params(arch, 5).values;
  const std::string good = temp_path("em_net_ck_good.emw");
  save_checkpoint(good, ck);
  std::ifstream in(good, std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  in.close();

  auto write_file = [&](const std::string& name, const std::string& content) {
    const std::string path = temp_path(name);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(content.data(), std::streamsize(content.size()));
    out.close();
    return path;
  };
  auto kind_of = [](const std::string& path) {
    try {
      load_checkpoint(path);
    } catch (const FormatError& e) {
      return e.kind;
    }
    return FormatError::Kind::bad_magic;  // unreachable when the call throws
  };

  SUBCASE("bad magic") {
    std::string b = bytes;
    b[0] = 'X';
    const std::string path = write_file("em_net_ck_magic.emw", b);
    CHECK(kind_of(path) == FormatError::Kind::bad_magic);
    std::remove(path.c_str());
  }
  SUBCASE("truncated payload") {
    const std::string path =
        write_file("em_net_ck_trunc.emw", bytes.substr(0, bytes.size() - 8));
    CHECK(kind_of(path) == FormatError::Kind::truncated);
    std::remove(path.c_str());
  }
  SUBCASE("trailing bytes") {
    const std::string path = write_file("em_net_ck_trail.emw", bytes + "zzzz");
    CHECK(kind_of(path) == FormatError::Kind::length_mismatch);
    std::remove(path.c_str());
  }
  SUBCASE("header is not JSON") {
    std::string b = "EMW1";
    const std::uint32_t hlen = 5;
    b.append(reinterpret_cast<const char*>(&hlen), 4);
    b += "notjs";
    const std::string path = write_file("em_net_ck_json.emw", b);
    CHECK(kind_of(path) == FormatError::Kind::bad_header);
    std::remove(path.c_str());
  }
  SUBCASE("unsupported version") {
    std::string header = "{\"arch\":{\"base_width\":2,\"depth\":0,\"in_channels\":3,"
                         "\"kernel\":3,\"leaky_slope\":0.01,\"out_channels\":12},"
                         "\"dtype\":\"f64\",\"has_optimizer_state\":false,"
                         "\"param_count\":984,\"seed\":0,\"step\":0,\"version\":99}";
    std::string b = "EMW1";
    const std::uint32_t hlen = std::uint32_t(header.size());
    b.append(reinterpret_cast<const char*>(&hlen), 4);
    b += header;
    const std::string path = write_file("em_net_ck_ver.emw", b);
    CHECK(kind_of(path) == FormatError::Kind::unsupported_version);
    std::remove(path.c_str());
  }
  SUBCASE("param count disagrees with the architecture") {
    std::string header = "{\"arch\":{\"base_width\":2,\"depth\":0,\"in_channels\":3,"
                         "\"kernel\":3,\"leaky_slope\":0.01,\"out_channels\":12},"
                         "\"dtype\":\"f64\",\"has_optimizer_state\":false,"
                         "\"param_count\":10,\"seed\":0,\"step\":0,\"version\":1}";
    std::string b = "EMW1";
    const std::uint32_t hlen = std::uint32_t(header.size());
    b.append(reinterpret_cast<const char*>(&hlen), 4);
    b += header;
    const std::string path = write_file("em_net_ck_count.emw", b);
    CHECK(kind_of(path) == FormatError::Kind::bad_header);
    std::remove(path.c_str());
  }
  std::remove(good.c_str());
}
