// SPDX-License-Identifier: Apache-2.0
#include "pdfembed/model.hpp"

#include <cmath>
#include <random>
#include <string>

#include "pdfembed/error.hpp"

namespace pdfembed::encoder {

namespace {

constexpr double kLayerNormEps = 1e-5;
constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x * kInvSqrt2)); }

double gelu_grad(double x) {
  return 0.5 * (1.0 + std::erf(x * kInvSqrt2)) +
         x * kInvSqrt2Pi * std::exp(-0.5 * x * x);
}

struct LayoutBuilder {
  std::vector<TensorSpec>* tensors;
  std::size_t offset = 0;

  TensorSpec add(std::string name, int rows, int cols) {
    TensorSpec t{std::move(name), rows, cols, offset};
    offset += t.size();
    tensors->push_back(t);
    return t;
  }
};

void layer_norm(const Matrix& x, ConstMatrixMap gain, ConstMatrixMap bias,
                Matrix& norm, Vector& rstd, Matrix& out) {
  const auto cols = static_cast<double>(x.cols());
  norm.resize(x.rows(), x.cols());
  rstd.resize(x.rows());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double mean = x.row(r).sum() / cols;
    const double var = (x.row(r).array() - mean).square().sum() / cols;
    rstd(r) = 1.0 / std::sqrt(var + kLayerNormEps);
    norm.row(r) = (x.row(r).array() - mean) * rstd(r);
  }
  out = (norm.array().rowwise() * gain.row(0).array()).rowwise() +
        bias.row(0).array();
}

// Returns dL/dx and accumulates dL/dgain, dL/dbias.
Matrix layer_norm_backward(const Matrix& d_out, const Matrix& norm,
                           const Vector& rstd, ConstMatrixMap gain,
                           MatrixMap d_gain, MatrixMap d_bias) {
  d_gain.row(0) += (d_out.array() * norm.array()).colwise().sum().matrix();
  d_bias.row(0) += d_out.colwise().sum();
  const Matrix d_norm = d_out.array().rowwise() * gain.row(0).array();
  const auto cols = static_cast<double>(d_out.cols());
  Matrix d_x(d_out.rows(), d_out.cols());
  for (Eigen::Index r = 0; r < d_out.rows(); ++r) {
    const double mean_d = d_norm.row(r).sum() / cols;
    const double mean_dn = d_norm.row(r).dot(norm.row(r)) / cols;
    d_x.row(r) = rstd(r) * (d_norm.row(r).array() - mean_d -
                            norm.row(r).array() * mean_dn);
  }
  return d_x;
}

void add_bias(Matrix& m, ConstMatrixMap bias) {
  m.rowwise() += bias.row(0);
}

}  // namespace

void ModelConfig::validate() const {
  auto fail = [](const std::string& what) {
    throw Error(ErrorKind::InvalidArgument, "model config: " + what);
  };
  if (image_height <= 0 || image_width <= 0 || channels <= 0) fail("image shape must be positive");
  if (patch_size <= 0) fail("patch size must be positive");
  if (image_height % patch_size != 0 || image_width % patch_size != 0) {
    fail("image size must be divisible by the patch size");
  }
  if (embed_dim <= 0 || num_heads <= 0 || embed_dim % num_heads != 0) {
    fail("embed_dim must be divisible by num_heads");
  }
  if (num_layers < 1) fail("num_layers must be >= 1");
  if (mlp_ratio < 1) fail("mlp_ratio must be >= 1");
  if (max_level < 1) fail("max_level must be >= 1");
  if (!(temperature > 0.0) || !std::isfinite(temperature)) fail("temperature must be positive");
}

ParamLayout::ParamLayout(const ModelConfig& c) {
  c.validate();
  LayoutBuilder b{&tensors};
  const int d = c.embed_dim;
  w_patch = b.add("patch.weight", c.patch_dim(), d);
  b_patch = b.add("patch.bias", 1, d);
  position = b.add("position", c.num_patches(), d);
  class_tokens = b.add("class_tokens", c.num_class_tokens(), d);
  for (int l = 0; l < c.num_layers; ++l) {
    const std::string p = "block" + std::to_string(l) + ".";
    BlockLayout blk;
    blk.ln1_gain = b.add(p + "ln1.gain", 1, d);
    blk.ln1_bias = b.add(p + "ln1.bias", 1, d);
    blk.w_qkv = b.add(p + "attn.qkv.weight", d, 3 * d);
    blk.b_qkv = b.add(p + "attn.qkv.bias", 1, 3 * d);
    blk.w_out = b.add(p + "attn.out.weight", d, d);
    blk.b_out = b.add(p + "attn.out.bias", 1, d);
    blk.ln2_gain = b.add(p + "ln2.gain", 1, d);
    blk.ln2_bias = b.add(p + "ln2.bias", 1, d);
    blk.w_fc1 = b.add(p + "mlp.fc1.weight", d, c.hidden_dim());
    blk.b_fc1 = b.add(p + "mlp.fc1.bias", 1, c.hidden_dim());
    blk.w_fc2 = b.add(p + "mlp.fc2.weight", c.hidden_dim(), d);
    blk.b_fc2 = b.add(p + "mlp.fc2.bias", 1, d);
    blocks.push_back(std::move(blk));
  }
  lnf_gain = b.add("final_ln.gain", 1, d);
  lnf_bias = b.add("final_ln.bias", 1, d);
  total = b.offset;
}

ModelParams::ModelParams(const ModelConfig& config)
    : config_(config), layout_(config), values_(layout_.total, 0.0) {}

ModelParams ModelParams::zeros(const ModelConfig& config) {
  return ModelParams(config);
}

ModelParams ModelParams::initialize(const ModelConfig& config,
                                    std::uint64_t seed) {
  ModelParams p(config);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 0.02);

  auto fill_normal = [&](const TensorSpec& t) {
    for (auto& v : p.view(t).reshaped()) v = normal(rng);
  };
  auto fill_xavier = [&](const TensorSpec& t) {
    const double bound = std::sqrt(6.0 / (t.rows + t.cols));
    std::uniform_real_distribution<double> uni(-bound, bound);
    for (auto& v : p.view(t).reshaped()) v = uni(rng);
  };
  auto fill_ones = [&](const TensorSpec& t) { p.view(t).setOnes(); };

  const auto& L = p.layout_;
  fill_xavier(L.w_patch);
  fill_normal(L.position);
  fill_normal(L.class_tokens);
  for (const auto& blk : L.blocks) {
    fill_ones(blk.ln1_gain);
    fill_xavier(blk.w_qkv);
    fill_xavier(blk.w_out);
    fill_ones(blk.ln2_gain);
    fill_xavier(blk.w_fc1);
    fill_xavier(blk.w_fc2);
  }
  fill_ones(L.lnf_gain);
  return p;
}

void ModelParams::check_finite() const {
  for (const auto& t : layout_.tensors) {
    if (!view(t).allFinite()) {
      throw Error(ErrorKind::NonFinite, "parameter tensor " + t.name + " is not finite");
    }
  }
}

Matrix extract_patches(const ModelConfig& config, const Image& image) {
  if (image.height != config.image_height || image.width != config.image_width ||
      image.channels != config.channels ||
      image.pixels.size() != static_cast<std::size_t>(image.height) * image.width * image.channels) {
    throw Error(ErrorKind::DimensionMismatch,
                "image " + std::to_string(image.height) + "x" +
                    std::to_string(image.width) + "x" + std::to_string(image.channels) +
                    " does not match model input " + std::to_string(config.image_height) +
                    "x" + std::to_string(config.image_width) + "x" +
                    std::to_string(config.channels));
  }
  const int ps = config.patch_size;
  const int per_row = config.image_width / ps;
  Matrix patches(config.num_patches(), config.patch_dim());
  for (int p = 0; p < config.num_patches(); ++p) {
    const int py = p / per_row;
    const int px = p % per_row;
    int col = 0;
    for (int dy = 0; dy < ps; ++dy) {
      for (int dx = 0; dx < ps; ++dx) {
        for (int c = 0; c < config.channels; ++c) {
          patches(p, col++) = image.at(py * ps + dy, px * ps + dx, c);
        }
      }
    }
  }
  return patches;
}

VectorSet forward(const ModelParams& params, const Image& image) {
  ForwardCache cache;
  return forward(params, image, cache);
}

VectorSet forward(const ModelParams& params, const Image& image,
                  ForwardCache& cache) {
  const auto& c = params.config();
  const auto& L = params.layout();
  const int d = c.embed_dim;
  const int dh = c.head_dim();
  const int n_cls = c.num_class_tokens();
  const int n_tok = c.num_tokens();
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  cache.patches = extract_patches(c, image);
  Matrix z(n_tok, d);
  z.topRows(n_cls) = params.view(L.class_tokens);
  Matrix embedded = cache.patches * params.view(L.w_patch);
  add_bias(embedded, params.view(L.b_patch));
  z.bottomRows(c.num_patches()) = embedded + params.view(L.position);

  cache.blocks.resize(L.blocks.size());
  for (std::size_t l = 0; l < L.blocks.size(); ++l) {
    const auto& blk = L.blocks[l];
    auto& bc = cache.blocks[l];
    bc.input = z;

    layer_norm(bc.input, params.view(blk.ln1_gain), params.view(blk.ln1_bias),
               bc.ln1_norm, bc.ln1_rstd, bc.ln1_out);
    bc.qkv = bc.ln1_out * params.view(blk.w_qkv);
    add_bias(bc.qkv, params.view(blk.b_qkv));

    bc.attention.resize(static_cast<std::size_t>(c.num_heads));
    bc.context.resize(n_tok, d);
    for (int h = 0; h < c.num_heads; ++h) {
      const auto q = bc.qkv.middleCols(h * dh, dh);
      const auto k = bc.qkv.middleCols(d + h * dh, dh);
      const auto v = bc.qkv.middleCols(2 * d + h * dh, dh);
      Matrix scores = (q * k.transpose()) * scale;
      for (Eigen::Index r = 0; r < scores.rows(); ++r) {
        const double top = scores.row(r).maxCoeff();
        scores.row(r) = (scores.row(r).array() - top).exp();
        scores.row(r) /= scores.row(r).sum();
      }
      bc.context.middleCols(h * dh, dh) = scores * v;
      bc.attention[static_cast<std::size_t>(h)] = std::move(scores);
    }
    Matrix attn_out = bc.context * params.view(blk.w_out);
    add_bias(attn_out, params.view(blk.b_out));
    bc.mid = bc.input + attn_out;

    layer_norm(bc.mid, params.view(blk.ln2_gain), params.view(blk.ln2_bias),
               bc.ln2_norm, bc.ln2_rstd, bc.ln2_out);
    bc.pre_act = bc.ln2_out * params.view(blk.w_fc1);
    add_bias(bc.pre_act, params.view(blk.b_fc1));
    bc.act = bc.pre_act.unaryExpr([](double x) { return gelu(x); });
    Matrix mlp_out = bc.act * params.view(blk.w_fc2);
    add_bias(mlp_out, params.view(blk.b_fc2));
    z = bc.mid + mlp_out;
  }

  cache.final_tokens = z.topRows(n_cls);
  Matrix out;
  layer_norm(cache.final_tokens, params.view(L.lnf_gain),
             params.view(L.lnf_bias), cache.lnf_norm, cache.lnf_rstd, out);
  return VectorSet(std::move(out));
}

void backward(const ModelParams& params, const ForwardCache& cache,
              const Matrix& d_vectors, ModelParams& grads) {
  const auto& c = params.config();
  const auto& L = params.layout();
  if (!(grads.config() == c)) {
    throw Error(ErrorKind::DimensionMismatch, "gradient buffer config differs");
  }
  const int d = c.embed_dim;
  const int dh = c.head_dim();
  const int n_cls = c.num_class_tokens();
  const int n_tok = c.num_tokens();
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  if (d_vectors.rows() != n_cls || d_vectors.cols() != d) {
    throw Error(ErrorKind::DimensionMismatch, "vector gradient has wrong shape");
  }

  Matrix dz = Matrix::Zero(n_tok, d);
  dz.topRows(n_cls) = layer_norm_backward(
      d_vectors, cache.lnf_norm, cache.lnf_rstd, params.view(L.lnf_gain),
      grads.view(L.lnf_gain), grads.view(L.lnf_bias));

  for (std::size_t li = L.blocks.size(); li-- > 0;) {
    const auto& blk = L.blocks[li];
    const auto& bc = cache.blocks[li];

    // MLP branch.
    grads.view(blk.w_fc2).noalias() += bc.act.transpose() * dz;
    grads.view(blk.b_fc2).row(0) += dz.colwise().sum();
    Matrix d_pre = dz * params.view(blk.w_fc2).transpose();
    d_pre.array() *= bc.pre_act.unaryExpr([](double x) { return gelu_grad(x); }).array();
    grads.view(blk.w_fc1).noalias() += bc.ln2_out.transpose() * d_pre;
    grads.view(blk.b_fc1).row(0) += d_pre.colwise().sum();
    const Matrix d_ln2_out = d_pre * params.view(blk.w_fc1).transpose();
    Matrix d_mid = dz + layer_norm_backward(
                            d_ln2_out, bc.ln2_norm, bc.ln2_rstd,
                            params.view(blk.ln2_gain), grads.view(blk.ln2_gain),
                            grads.view(blk.ln2_bias));

    // Attention branch.
    grads.view(blk.w_out).noalias() += bc.context.transpose() * d_mid;
    grads.view(blk.b_out).row(0) += d_mid.colwise().sum();
    const Matrix d_context = d_mid * params.view(blk.w_out).transpose();

    Matrix d_qkv(n_tok, 3 * d);
    for (int h = 0; h < c.num_heads; ++h) {
      const auto& prob = bc.attention[static_cast<std::size_t>(h)];
      const auto q = bc.qkv.middleCols(h * dh, dh);
      const auto k = bc.qkv.middleCols(d + h * dh, dh);
      const auto v = bc.qkv.middleCols(2 * d + h * dh, dh);
      const auto d_ctx = d_context.middleCols(h * dh, dh);

      Matrix d_prob = d_ctx * v.transpose();
      d_qkv.middleCols(2 * d + h * dh, dh) = prob.transpose() * d_ctx;
      // Softmax backward, row by row.
      const Vector row_dot = (d_prob.array() * prob.array()).rowwise().sum();
      Matrix d_scores = prob.array() * (d_prob.colwise() - row_dot).array();
      d_scores *= scale;
      d_qkv.middleCols(h * dh, dh) = d_scores * k;
      d_qkv.middleCols(d + h * dh, dh) = d_scores.transpose() * q;
    }
    grads.view(blk.w_qkv).noalias() += bc.ln1_out.transpose() * d_qkv;
    grads.view(blk.b_qkv).row(0) += d_qkv.colwise().sum();
    const Matrix d_ln1_out = d_qkv * params.view(blk.w_qkv).transpose();
    dz = d_mid + layer_norm_backward(d_ln1_out, bc.ln1_norm, bc.ln1_rstd,
                                     params.view(blk.ln1_gain),
                                     grads.view(blk.ln1_gain),
                                     grads.view(blk.ln1_bias));
  }

  grads.view(L.class_tokens) += dz.topRows(n_cls);
  const auto d_embedded = dz.bottomRows(c.num_patches());
  grads.view(L.position) += d_embedded;
  grads.view(L.w_patch).noalias() += cache.patches.transpose() * d_embedded;
  grads.view(L.b_patch).row(0) += d_embedded.colwise().sum();
}

}  // namespace pdfembed::encoder
