#pragma once

#include <span>
#include <string>
#include <vector>

#include "sail/rng.hpp"

namespace sail {

/// Per-component affine normalization statistics (z-scoring).
struct NormStats {
  std::vector<double> mean;
  std::vector<double> stdev;

  int dim() const { return static_cast<int>(mean.size()); }
};

/// Column means and standard deviations of a row-major n x dim matrix.
/// Standard deviations are floored at 1e-12 so constant columns stay usable.
NormStats compute_norm_stats(std::span<const double> rows, int dim);

/// Fully connected feed-forward network with logistic-sigmoid hidden layers
/// and a linear output, plus the input/output z-scoring it was trained with.
struct MlpModel {
  std::vector<int> layer_sizes;  ///< e.g. {4, 20, 20, 20, 1}
  /// weights[l] is row-major layer_sizes[l+1] x layer_sizes[l].
  std::vector<std::vector<double>> weights;
  std::vector<std::vector<double>> biases;
  NormStats input_norm;
  NormStats output_norm;
  std::string activation = "logistic";
  /// Content hash of the manifest of the dataset this model was fit on.
  std::string training_manifest_hash;

  int input_dim() const { return layer_sizes.front(); }
  int output_dim() const { return layer_sizes.back(); }
  std::size_t n_params() const;

  /// Scalar prediction in physical units (normalizes the input, denormalizes
  /// the output). Requires output_dim() == 1.
  double forward(std::span<const double> x) const;

  /// Scalar prediction with already-normalized input, normalized output.
  double forward_normalized(std::span<const double> xz) const;

  /// Throws std::invalid_argument when sizes are inconsistent.
  void validate() const;
};

/// Derivative of forward_normalized with respect to every weight and bias,
/// by reverse accumulation. Ordering: for each layer in input-to-output
/// order, the weight matrix row by row, then that layer's biases — the same
/// packing the trainer's normal equations use.
std::vector<double> param_gradient(const MlpModel& model, std::span<const double> xz);

/// Fresh network with uniform fan-in-scaled random weights.
MlpModel make_mlp(const std::vector<int>& layer_sizes, Rng& rng);

std::string model_to_json(const MlpModel& model);
MlpModel model_from_json(const std::string& text);

void save_model(const MlpModel& model, const std::string& path);
MlpModel load_model(const std::string& path);

}  // namespace sail
