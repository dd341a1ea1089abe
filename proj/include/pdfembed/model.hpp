// SPDX-License-Identifier: Apache-2.0
//
// Patch transformer mapping an image to N + 1 representative vectors.
//
// The image is cut into non-overlapping patches, each projected to the
// embedding width and offset by a learned positional embedding. The same
// N + 1 learned class tokens are prepended for every image, the sequence
// runs through pre-norm transformer blocks, and the final-layer states of
// the class tokens (after a closing layer norm) form the VectorSet.
//
// All parameters live in one flat buffer of doubles; ParamLayout records
// where each tensor sits so optimizers and gradient checks can treat the
// model as a single vector.
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pdfembed/image.hpp"
#include "pdfembed/vectorset.hpp"

namespace pdfembed::encoder {

/// How a trained model turns a vector-set pair into a prediction.
enum class Head : std::uint8_t {
  Distribution = 0,  // argmax over the per-level similarities
  Scalar = 1,        // N * sigmoid(h_0 / temperature)
};

struct ModelConfig {
  int image_height = 16;
  int image_width = 16;
  int channels = 1;
  int patch_size = 4;
  int embed_dim = 32;
  int num_layers = 2;
  int num_heads = 4;
  int mlp_ratio = 2;
  int max_level = 5;
  Head head = Head::Distribution;
  double temperature = 0.1;

  /// Throws InvalidArgument when the shape is inconsistent.
  void validate() const;

  int num_patches() const { return (image_height / patch_size) * (image_width / patch_size); }
  int num_class_tokens() const { return max_level + 1; }
  int num_tokens() const { return num_class_tokens() + num_patches(); }
  int patch_dim() const { return patch_size * patch_size * channels; }
  int hidden_dim() const { return embed_dim * mlp_ratio; }
  int head_dim() const { return embed_dim / num_heads; }

  bool operator==(const ModelConfig&) const = default;
};

struct TensorSpec {
  std::string name;
  int rows = 0;
  int cols = 0;
  std::size_t offset = 0;

  std::size_t size() const { return static_cast<std::size_t>(rows) * cols; }
};

struct BlockLayout {
  TensorSpec ln1_gain, ln1_bias;
  TensorSpec w_qkv, b_qkv;
  TensorSpec w_out, b_out;
  TensorSpec ln2_gain, ln2_bias;
  TensorSpec w_fc1, b_fc1;
  TensorSpec w_fc2, b_fc2;
};

/// Tensor order is the declaration order used by checkpoints.
struct ParamLayout {
  TensorSpec w_patch, b_patch;
  TensorSpec position;
  TensorSpec class_tokens;
  std::vector<BlockLayout> blocks;
  TensorSpec lnf_gain, lnf_bias;

  std::vector<TensorSpec> tensors;
  std::size_t total = 0;

  explicit ParamLayout(const ModelConfig& config);
};

using MatrixMap = Eigen::Map<Matrix>;
using ConstMatrixMap = Eigen::Map<const Matrix>;

class ModelParams {
 public:
  /// All-zero parameters (gains included); mostly useful as a gradient buffer.
  static ModelParams zeros(const ModelConfig& config);
  /// Class tokens and positions ~ N(0, 0.02), projections Xavier-uniform,
  /// biases zero, layer-norm gains one.
  static ModelParams initialize(const ModelConfig& config, std::uint64_t seed);

  const ModelConfig& config() const noexcept { return config_; }
  const ParamLayout& layout() const noexcept { return layout_; }

  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }

  MatrixMap view(const TensorSpec& t) {
    return {values_.data() + t.offset, t.rows, t.cols};
  }
  ConstMatrixMap view(const TensorSpec& t) const {
    return {values_.data() + t.offset, t.rows, t.cols};
  }

  /// Throws NonFinite if any value is NaN or infinite.
  void check_finite() const;

 private:
  explicit ModelParams(const ModelConfig& config);

  ModelConfig config_;
  ParamLayout layout_;
  std::vector<double> values_;
};

/// Activations retained by forward() for the backward pass.
struct BlockCache {
  Matrix input;
  Matrix ln1_norm;
  Vector ln1_rstd;
  Matrix ln1_out;
  Matrix qkv;
  std::vector<Matrix> attention;  // per head, rows sum to one
  Matrix context;
  Matrix mid;
  Matrix ln2_norm;
  Vector ln2_rstd;
  Matrix ln2_out;
  Matrix pre_act;
  Matrix act;
};

struct ForwardCache {
  Matrix patches;
  std::vector<BlockCache> blocks;
  Matrix final_tokens;
  Matrix lnf_norm;
  Vector lnf_rstd;
};

/// Throws DimensionMismatch if the image does not fit the config.
Matrix extract_patches(const ModelConfig& config, const Image& image);

VectorSet forward(const ModelParams& params, const Image& image);
VectorSet forward(const ModelParams& params, const Image& image,
                  ForwardCache& cache);

/// Accumulates into `grads` the gradient of a loss whose derivative with
/// respect to the returned class-token vectors is `d_vectors`.
void backward(const ModelParams& params, const ForwardCache& cache,
              const Matrix& d_vectors, ModelParams& grads);

}  // namespace pdfembed::encoder
