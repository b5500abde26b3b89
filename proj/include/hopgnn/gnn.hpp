#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "hopgnn/comm_ledger.hpp"
#include "hopgnn/common.hpp"
#include "hopgnn/sampler.hpp"

namespace hopgnn {

enum class Arch { Gcn, SageMean };

struct ModelDims {
  std::size_t in_dim = 8;
  std::size_t hidden = 8;
  std::size_t n_layers = 2;
  std::size_t n_classes = 2;
  Arch arch = Arch::Gcn;

  /// Rows of layer k's weight (k is 1-based).
  std::size_t weight_rows(std::size_t k) const;
  std::size_t param_count() const;
  std::uint64_t param_bytes() const { return param_count() * kBytesPerElement; }
};

struct DenseLayer {
  Eigen::MatrixXd weight;  // (in or 2*in) x out
  Eigen::VectorXd bias;    // out
};

/// Dense parameters of the GNN. The same shape doubles as a gradient.
struct Parameters {
  Arch arch = Arch::Gcn;
  std::vector<DenseLayer> layers;  // layers[k-1] is GNN layer k
  Eigen::MatrixXd classifier;      // hidden x classes

  static Parameters init(const ModelDims& dims, std::uint64_t seed);
  static Parameters zeros_like(const Parameters& shape);

  ModelDims dims() const;
  std::size_t param_count() const;
  bool same_shape(const Parameters& other) const;

  /// this += scale * other.
  void add_scaled(const Parameters& other, double scale);
  /// Flat row-major view: layer weights, layer biases, then classifier.
  std::vector<double> flatten() const;

  friend bool operator==(const Parameters& a, const Parameters& b);
};

using ModelState = Parameters;
using Gradient = Parameters;

/// Deterministic labels in [0, n_classes) derived from (seed, v).
struct LabelOracle {
  std::uint64_t seed = 0;
  std::size_t n_classes = 2;

  std::size_t label(VertexId v) const;
};

/// Everything backward needs from one forward pass.
struct ForwardCache {
  std::vector<Eigen::MatrixXd> h;    // h[k]: rows = layers[k] of the micrograph
  std::vector<Eigen::MatrixXd> agg;  // agg[k], k >= 1: aggregated input of layer k
  std::vector<Eigen::MatrixXd> pre;  // pre[k], k >= 1: agg[k] * W + b before ReLU
  Eigen::RowVectorXd logits;
};

/// Runs the micrograph bottom-up. `inputs` holds one feature row per vertex of
/// layers[0], in that order; a row-count mismatch throws std::invalid_argument.
ForwardCache forward(const Micrograph& m, const Eigen::MatrixXd& inputs, const ModelState& model);

struct LossGrad {
  double loss = 0.0;
  Gradient grad;
};

/// Softmax cross-entropy on the root and the unscaled gradient of that loss.
LossGrad loss_and_backward(const Micrograph& m, const ForwardCache& cache, std::size_t label,
                           const ModelState& model);

/// Sum of per-micrograph gradients owned by one logical model.
struct GradAccumulator {
  ModelId owner = 0;
  Gradient sum;
  std::size_t count = 0;

  static GradAccumulator for_model(ModelId owner, const ModelState& model);
  void reset();
};

/// acc += g; throws std::invalid_argument on a shape mismatch.
void accumulate(GradAccumulator& acc, const Gradient& g);

/// Averages each accumulator over its own micrograph count, averages those
/// means over the models that trained anything, applies one SGD step to every
/// replica and resets the accumulators.
/// Replicas must be identical beforehand (InvariantViolation otherwise). When
/// `ledger` is given, the ring all-reduce traffic is recorded on it.
void sync_and_update(std::span<ModelState> models, std::span<GradAccumulator> accs, double lr,
                     CommLedger* ledger = nullptr);

/// Text dump: a "name rows cols" header per tensor, then row-major values with
/// 17 significant digits.
void write_parameters(std::ostream& out, const ModelState& model);

}  // namespace hopgnn
