#pragma once

/**
 * @file mlp.hpp
 * @brief Dense feedforward network with leaky-ReLU hidden layers, trained
 * with Adam on a mean-squared-error loss and early stopping.
 *
 * Batches are stored column-wise: one sample per column.
 */

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace costa {

using Matrix = Eigen::MatrixXd;

class MlpNetwork {
public:
    MlpNetwork() = default;
    /// layer_dims = {d0, d1, ..., dN}; parameters start at zero.
    explicit MlpNetwork(std::vector<int> layer_dims, double leak = 0.01);

    /// Input -> four hidden layers of width 80 -> output.
    static MlpNetwork standard(int inputs, int outputs);

    /// Uniform He-style initialisation scaled by fan-in; biases zero.
    void initialize(std::uint64_t seed);

    Eigen::VectorXd forward(const Eigen::VectorXd& x) const;
    Matrix forward_batch(const Matrix& inputs) const;

    const std::vector<int>& layer_dims() const { return dims_; }
    int layer_count() const { return static_cast<int>(weights_.size()); }
    int input_size() const { return dims_.front(); }
    int output_size() const { return dims_.back(); }
    double leak() const { return leak_; }
    std::size_t parameter_count() const;

    std::vector<Matrix>& weights() { return weights_; }
    const std::vector<Matrix>& weights() const { return weights_; }
    std::vector<Eigen::VectorXd>& biases() { return biases_; }
    const std::vector<Eigen::VectorXd>& biases() const { return biases_; }

    bool all_finite() const;

private:
    std::vector<int> dims_;
    double leak_ = 0.01;
    std::vector<Matrix> weights_;
    std::vector<Eigen::VectorXd> biases_;
};

struct Gradients {
    std::vector<Matrix> weights;
    std::vector<Eigen::VectorXd> biases;

    static Gradients zeros_like(const MlpNetwork& net);
};

/// Mean of squared entries of (net(inputs) - targets), averaged over all outputs and samples.
double mse_loss(const MlpNetwork& net, const Matrix& inputs, const Matrix& targets);

/// Exact gradient of mse_loss by backpropagation; returns the loss.
double gradient(const MlpNetwork& net, const Matrix& inputs, const Matrix& targets, Gradients& out);

class AdamOptimizer {
public:
    static constexpr double beta1 = 0.9;
    static constexpr double beta2 = 0.999;
    static constexpr double epsilon = 1e-8;

    explicit AdamOptimizer(const MlpNetwork& net);

    /// Throws std::domain_error on a non-finite gradient; the network is left untouched then.
    void step(MlpNetwork& net, const Gradients& grads, double learning_rate);
    long steps_taken() const { return steps_; }

private:
    Gradients first_;
    Gradients second_;
    long steps_ = 0;
};

/// Per-feature z-score with the sample (N-1) standard deviation.
struct Normalizer {
    Eigen::VectorXd mean;
    Eigen::VectorXd stddev;  ///< zero marks a constant feature

    static Normalizer fit(const Matrix& samples);
    Matrix apply(const Matrix& samples) const;
    Matrix invert(const Matrix& normalized) const;
    Eigen::VectorXd apply(const Eigen::VectorXd& sample) const;
    Eigen::VectorXd invert(const Eigen::VectorXd& normalized) const;
};

struct TrainConfig {
    double learning_rate = 1e-5;
    int patience = 20;        ///< validation checks (one per epoch) without improvement
    int max_epochs = 5000;
    int batch_size = 128;
    std::uint64_t seed = 0;

    void validate() const;
};

struct TrainHistory {
    std::vector<double> train_loss;       ///< mean minibatch loss per epoch
    std::vector<double> validation_loss;  ///< one entry per validation check
    int best_epoch = -1;
    double best_validation_loss = 0.0;
};

class TrainingDiverged : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Network plus the normalisation that wraps it; predict() works in raw units.
struct TrainedModel {
    MlpNetwork net;
    Normalizer input_scaling;
    Normalizer target_scaling;
    TrainConfig config;

    Eigen::VectorXd predict(const Eigen::VectorXd& input) const;
};

struct TrainResult {
    TrainedModel model;
    TrainHistory history;
};

/**
 * Fits normalisers on the training set, initialises net from config.seed and
 * minimises the normalised MSE. Returns the snapshot with the best validation
 * loss. Throws TrainingDiverged when a loss turns non-finite.
 */
TrainResult train(MlpNetwork net, const Matrix& train_inputs, const Matrix& train_targets,
                  const Matrix& val_inputs, const Matrix& val_targets, const TrainConfig& config);

/// Binary checkpoint; see README for the layout. Round trips are bit-exact.
void save_checkpoint(const TrainedModel& model, const std::filesystem::path& path);
TrainedModel load_checkpoint(const std::filesystem::path& path);

}  // namespace costa
