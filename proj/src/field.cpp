// Copyright 2026 the incnerf authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#include "incnerf/field.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

namespace incnerf::field {

namespace {

void validate(const FieldConfig& c) {
  if (c.layers < 2) throw DomainError("FieldConfig: layers must be >= 2");
  if (c.hidden_dim < 1) throw DomainError("FieldConfig: hidden_dim must be >= 1");
  if (c.color_channels != 3) {
    throw DomainError("FieldConfig: color_channels is fixed at 3");
  }
}

inline double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline double softplus(double x) {
  return x > 30.0 ? x : std::log1p(std::exp(x));
}

// slot layout: pos[3] view[3] | per trunk layer: z[H] a[H] | s_pre sigma |
// zc[H] gc[H] | q[3] rgb[3]
struct SlotView {
  const FieldConfig* cfg;
  double* base;

  double* pos() const { return base; }
  double* view() const { return base + 3; }
  double* z(int k) const { return base + 6 + 2 * k * cfg->hidden_dim; }
  double* a(int k) const { return base + 6 + (2 * k + 1) * cfg->hidden_dim; }
  double* s_pre() const { return base + 6 + 2 * cfg->layers * cfg->hidden_dim; }
  double* sigma() const { return s_pre() + 1; }
  double* zc() const { return s_pre() + 2; }
  double* gc() const { return zc() + cfg->hidden_dim; }
  double* q() const { return gc() + cfg->hidden_dim; }
  double* rgb() const { return q() + 3; }
};

void linear_forward(const double* theta, const LayerSpec& l, const double* x,
                    double* z) {
  for (int o = 0; o < l.out; ++o) {
    const double* w = theta + l.w_off + static_cast<std::size_t>(o) * l.in;
    double acc = theta[l.b_off + o];
    for (int i = 0; i < l.in; ++i) acc += w[i] * x[i];
    z[o] = acc;
  }
}

// Accumulates z_bar x' into the weight gradient and returns x_bar = W' z_bar.
void linear_backward(const double* theta, const LayerSpec& l, const double* x,
                     const double* z_bar, double* theta_grad, double* x_bar) {
  if (x_bar) {
    for (int i = 0; i < l.in; ++i) x_bar[i] = 0.0;
  }
  for (int o = 0; o < l.out; ++o) {
    const double zb = z_bar[o];
    const double* w = theta + l.w_off + static_cast<std::size_t>(o) * l.in;
    if (theta_grad) {
      double* wg = theta_grad + l.w_off + static_cast<std::size_t>(o) * l.in;
      for (int i = 0; i < l.in; ++i) wg[i] += zb * x[i];
      theta_grad[l.b_off + o] += zb;
    }
    if (x_bar && zb != 0.0) {
      for (int i = 0; i < l.in; ++i) x_bar[i] += w[i] * zb;
    }
  }
}

}  // namespace

FieldLayout field_layout(const FieldConfig& config) {
  validate(config);
  const int h = config.hidden_dim;
  FieldLayout lay;
  std::size_t off = 0;
  auto push = [&off](int in, int out, double omega) {
    LayerSpec l;
    l.in = in;
    l.out = out;
    l.omega = omega;
    l.w_off = off;
    off += static_cast<std::size_t>(in) * out;
    l.b_off = off;
    off += out;
    return l;
  };
  lay.trunk.push_back(push(3, h, config.first_layer_frequency));
  for (int k = 1; k < config.layers; ++k) lay.trunk.push_back(push(h, h, 1.0));
  lay.sigma_head = push(h, 1, 1.0);
  lay.color_hidden = push(h + 3, h, 1.0);
  lay.rgb_head = push(h, 3, 1.0);
  lay.total = off;
  return lay;
}

std::size_t param_count(const FieldConfig& config) {
  return field_layout(config).total;
}

std::size_t activation_size(const FieldConfig& config) {
  const std::size_t h = config.hidden_dim;
  return 6 + 2 * config.layers * h + 2 + 2 * h + 6;
}

RadianceField init_field(const FieldConfig& config, std::uint64_t seed) {
  RadianceField f(config);
  std::mt19937_64 rng(seed);
  // Manual scaling keeps the draw sequence bit-identical across compilers.
  auto uniform_signed = [&rng](double a) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    return a * (2.0 * u - 1.0);
  };
  auto fill_layer = [&](const LayerSpec& l, double range) {
    const std::size_t nw = static_cast<std::size_t>(l.in) * l.out;
    for (std::size_t i = 0; i < nw; ++i)
      f.theta[l.w_off + i] = uniform_signed(range);
    for (int o = 0; o < l.out; ++o) f.theta[l.b_off + o] = uniform_signed(range);
  };
  fill_layer(f.layout.trunk[0], 1.0 / f.layout.trunk[0].in);
  for (std::size_t k = 1; k < f.layout.trunk.size(); ++k) {
    const LayerSpec& l = f.layout.trunk[k];
    fill_layer(l, std::sqrt(6.0 / l.in));
  }
  fill_layer(f.layout.sigma_head, std::sqrt(6.0 / f.layout.sigma_head.in));
  fill_layer(f.layout.color_hidden, std::sqrt(6.0 / f.layout.color_hidden.in));
  fill_layer(f.layout.rgb_head, std::sqrt(6.0 / f.layout.rgb_head.in));
  return f;
}

void field_forward(const RadianceField& f, const Vec3d& position,
                   const Vec3d& view_dir, double* slot,
                   double out_rgb_sigma[4]) {
  const FieldConfig& cfg = f.config;
  const double* theta = f.theta.data();
  SlotView s{&cfg, slot};
  s.pos()[0] = position.x;
  s.pos()[1] = position.y;
  s.pos()[2] = position.z;
  s.view()[0] = view_dir.x;
  s.view()[1] = view_dir.y;
  s.view()[2] = view_dir.z;

  const double* x = s.pos();
  for (int k = 0; k < cfg.layers; ++k) {
    const LayerSpec& l = f.layout.trunk[k];
    double* z = s.z(k);
    double* a = s.a(k);
    linear_forward(theta, l, x, z);
    for (int o = 0; o < l.out; ++o) a[o] = std::sin(l.omega * z[o]);
    x = a;
  }
  const double* h_last = s.a(cfg.layers - 1);

  linear_forward(theta, f.layout.sigma_head, h_last, s.s_pre());
  *s.sigma() = softplus(*s.s_pre());

  // concat [h_last; view] feeds the color branch
  const int h = cfg.hidden_dim;
  thread_local std::vector<double> u;
  u.assign(static_cast<std::size_t>(h) + 3, 0.0);
  for (int i = 0; i < h; ++i) u[i] = h_last[i];
  for (int i = 0; i < 3; ++i) u[h + i] = s.view()[i];
  linear_forward(theta, f.layout.color_hidden, u.data(), s.zc());
  for (int i = 0; i < h; ++i) s.gc()[i] = std::sin(s.zc()[i]);

  linear_forward(theta, f.layout.rgb_head, s.gc(), s.q());
  for (int c = 0; c < 3; ++c) s.rgb()[c] = logistic(s.q()[c]);

  out_rgb_sigma[0] = s.rgb()[0];
  out_rgb_sigma[1] = s.rgb()[1];
  out_rgb_sigma[2] = s.rgb()[2];
  out_rgb_sigma[3] = *s.sigma();
}

void field_backward(const RadianceField& f, const double* slot,
                    const double out_adj[4], double* theta_grad,
                    Vec3d& position_adj, Vec3d& view_adj) {
  const FieldConfig& cfg = f.config;
  const int h = cfg.hidden_dim;
  const double* theta = f.theta.data();
  SlotView s{&cfg, const_cast<double*>(slot)};

  thread_local std::vector<double> h_bar, z_bar, u_buf, u_bar;
  h_bar.assign(h, 0.0);
  z_bar.assign(h, 0.0);
  u_buf.assign(static_cast<std::size_t>(h) + 3, 0.0);
  u_bar.assign(static_cast<std::size_t>(h) + 3, 0.0);

  // rgb head: rgb = sigmoid(q)
  double q_bar[3];
  for (int c = 0; c < 3; ++c) {
    const double r = s.rgb()[c];
    q_bar[c] = out_adj[c] * r * (1.0 - r);
  }
  linear_backward(theta, f.layout.rgb_head, s.gc(), q_bar, theta_grad,
                  z_bar.data());  // z_bar holds gc_bar here

  // color hidden: gc = sin(zc); input was [h_last; view]
  const double* h_last = s.a(cfg.layers - 1);
  for (int i = 0; i < h; ++i) z_bar[i] *= std::cos(s.zc()[i]);
  for (int i = 0; i < h; ++i) u_buf[i] = h_last[i];
  for (int i = 0; i < 3; ++i) u_buf[h + i] = s.view()[i];
  linear_backward(theta, f.layout.color_hidden, u_buf.data(), z_bar.data(),
                  theta_grad, u_bar.data());
  for (int i = 0; i < h; ++i) h_bar[i] = u_bar[i];
  view_adj = {u_bar[h], u_bar[h + 1], u_bar[h + 2]};

  // density head: sigma = softplus(s_pre)
  const double s_bar = out_adj[3] * logistic(*s.s_pre());
  {
    const LayerSpec& l = f.layout.sigma_head;
    if (theta_grad) {
      double* wg = theta_grad + l.w_off;
      for (int i = 0; i < h; ++i) wg[i] += s_bar * h_last[i];
      theta_grad[l.b_off] += s_bar;
    }
    const double* w = theta + l.w_off;
    for (int i = 0; i < h; ++i) h_bar[i] += w[i] * s_bar;
  }

  // trunk, top down: a = sin(omega * z)
  for (int k = cfg.layers - 1; k >= 0; --k) {
    const LayerSpec& l = f.layout.trunk[k];
    for (int i = 0; i < l.out; ++i) {
      z_bar[i] = h_bar[i] * l.omega * std::cos(l.omega * s.z(k)[i]);
    }
    const double* x = (k == 0) ? s.pos() : s.a(k - 1);
    if (k == 0) {
      double x_bar[3];
      linear_backward(theta, l, x, z_bar.data(), theta_grad, x_bar);
      position_adj = {x_bar[0], x_bar[1], x_bar[2]};
    } else {
      linear_backward(theta, l, x, z_bar.data(), theta_grad, h_bar.data());
    }
  }
}

FieldSample eval_field(const RadianceField& f, const Vec3d& position,
                       const Vec3d& view_dir) {
  thread_local std::vector<double> slot;
  slot.resize(activation_size(f.config));
  double out[4];
  field_forward(f, position, view_dir, slot.data(), out);
  return FieldSample{{out[0], out[1], out[2]}, out[3]};
}

namespace {
constexpr char kMagic[4] = {'I', 'N', 'R', 'F'};
constexpr std::uint32_t kVersion = 1;
}  // namespace

void save_checkpoint(const std::string& path, const RadianceField& f) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open checkpoint for write: " + path);
  out.write(kMagic, 4);
  auto put = [&out](const auto& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
  };
  put(kVersion);
  const std::int32_t layers = f.config.layers;
  const std::int32_t hidden = f.config.hidden_dim;
  const std::int32_t channels = f.config.color_channels;
  put(layers);
  put(hidden);
  put(channels);
  put(f.config.first_layer_frequency);
  const std::uint64_t count = f.theta.size();
  put(count);
  out.write(reinterpret_cast<const char*>(f.theta.data()),
            static_cast<std::streamsize>(count * sizeof(double)));
  if (!out) throw IoError("checkpoint write failed: " + path);
}

RadianceField load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint for read: " + path);
  char magic[4];
  in.read(magic, 4);
  if (in.gcount() != 4 || std::memcmp(magic, kMagic, 4) != 0) {
    throw FormatError("checkpoint: bad magic");
  }
  auto get = [&in](auto& v) {
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    if (static_cast<std::size_t>(in.gcount()) != sizeof(v)) {
      throw FormatError("checkpoint: truncated header");
    }
  };
  std::uint32_t version;
  get(version);
  if (version != kVersion) {
    throw FormatError("checkpoint: unsupported version " +
                      std::to_string(version));
  }
  FieldConfig cfg;
  std::int32_t layers, hidden, channels;
  get(layers);
  get(hidden);
  get(channels);
  get(cfg.first_layer_frequency);
  cfg.layers = layers;
  cfg.hidden_dim = hidden;
  cfg.color_channels = channels;
  std::uint64_t count;
  get(count);
  RadianceField f(cfg);
  if (count != f.theta.size()) {
    throw FormatError("checkpoint: weight count does not match config");
  }
  in.read(reinterpret_cast<char*>(f.theta.data()),
          static_cast<std::streamsize>(count * sizeof(double)));
  if (static_cast<std::size_t>(in.gcount()) != count * sizeof(double)) {
    throw FormatError("checkpoint: truncated weights");
  }
  return f;
}

}  // namespace incnerf::field
