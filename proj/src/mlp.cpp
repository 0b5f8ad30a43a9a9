#include "costa/mlp.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>

namespace costa {

namespace {

Matrix leaky_relu(const Matrix& z, double leak)
{
    return z.unaryExpr([leak](double v) { return v > 0.0 ? v : leak * v; });
}

Matrix leaky_relu_slope(const Matrix& z, double leak)
{
    return z.unaryExpr([leak](double v) { return v > 0.0 ? 1.0 : leak; });
}

void check_batch(const MlpNetwork& net, const Matrix& inputs, const Matrix& targets)
{
    if (inputs.cols() == 0) {
        throw std::invalid_argument("empty batch");
    }
    if (inputs.rows() != net.input_size() || targets.rows() != net.output_size() ||
        targets.cols() != inputs.cols()) {
        throw std::invalid_argument("batch shape does not match network dimensions");
    }
}

}  // namespace

MlpNetwork::MlpNetwork(std::vector<int> layer_dims, double leak) : dims_(std::move(layer_dims)), leak_(leak)
{
    if (dims_.size() < 2) {
        throw std::invalid_argument("MlpNetwork: need at least an input and an output layer");
    }
    for (int d : dims_) {
        if (d < 1) {
            throw std::invalid_argument("MlpNetwork: layer widths must be positive");
        }
    }
    for (std::size_t l = 1; l < dims_.size(); ++l) {
        weights_.push_back(Matrix::Zero(dims_[l], dims_[l - 1]));
        biases_.push_back(Eigen::VectorXd::Zero(dims_[l]));
    }
}

MlpNetwork MlpNetwork::standard(int inputs, int outputs)
{
    return MlpNetwork({inputs, 80, 80, 80, 80, outputs});
}

void MlpNetwork::initialize(std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        const double bound = std::sqrt(6.0 / static_cast<double>(weights_[l].cols()));
        std::uniform_real_distribution<double> dist(-bound, bound);
        for (Eigen::Index c = 0; c < weights_[l].cols(); ++c) {
            for (Eigen::Index r = 0; r < weights_[l].rows(); ++r) {
                weights_[l](r, c) = dist(rng);
            }
        }
        biases_[l].setZero();
    }
}

Eigen::VectorXd MlpNetwork::forward(const Eigen::VectorXd& x) const
{
    if (x.size() != input_size()) {
        throw std::invalid_argument("MlpNetwork::forward: input has " + std::to_string(x.size()) +
                                    " entries, expected " + std::to_string(input_size()));
    }
    return forward_batch(x);
}

Matrix MlpNetwork::forward_batch(const Matrix& inputs) const
{
    if (inputs.rows() != input_size()) {
        throw std::invalid_argument("MlpNetwork::forward_batch: dimension mismatch");
    }
    Matrix a = inputs;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        Matrix z = weights_[l] * a;
        z.colwise() += biases_[l];
        a = (l + 1 < weights_.size()) ? leaky_relu(z, leak_) : std::move(z);
    }
    return a;
}

std::size_t MlpNetwork::parameter_count() const
{
    std::size_t n = 0;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        n += static_cast<std::size_t>(weights_[l].size() + biases_[l].size());
    }
    return n;
}

bool MlpNetwork::all_finite() const
{
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        if (!weights_[l].allFinite() || !biases_[l].allFinite()) {
            return false;
        }
    }
    return true;
}

Gradients Gradients::zeros_like(const MlpNetwork& net)
{
    Gradients g;
    for (int l = 0; l < net.layer_count(); ++l) {
        g.weights.push_back(Matrix::Zero(net.weights()[l].rows(), net.weights()[l].cols()));
        g.biases.push_back(Eigen::VectorXd::Zero(net.biases()[l].size()));
    }
    return g;
}

double mse_loss(const MlpNetwork& net, const Matrix& inputs, const Matrix& targets)
{
    check_batch(net, inputs, targets);
    return (net.forward_batch(inputs) - targets).squaredNorm() / static_cast<double>(targets.size());
}

double gradient(const MlpNetwork& net, const Matrix& inputs, const Matrix& targets, Gradients& out)
{
    check_batch(net, inputs, targets);
    const int layers = net.layer_count();
    const auto& w = net.weights();
    const auto& b = net.biases();

    std::vector<Matrix> pre(static_cast<std::size_t>(layers));
    std::vector<Matrix> act(static_cast<std::size_t>(layers) + 1);
    act[0] = inputs;
    for (int l = 0; l < layers; ++l) {
        pre[l] = w[l] * act[l];
        pre[l].colwise() += b[l];
        act[l + 1] = (l + 1 < layers) ? leaky_relu(pre[l], net.leak()) : pre[l];
    }

    const double scale = 1.0 / static_cast<double>(targets.size());
    const Matrix diff = act[layers] - targets;
    Matrix delta = (2.0 * scale) * diff;

    if (static_cast<int>(out.weights.size()) != layers) {
        out = Gradients::zeros_like(net);
    }
    for (int l = layers - 1; l >= 0; --l) {
        out.weights[l].noalias() = delta * act[l].transpose();
        out.biases[l] = delta.rowwise().sum();
        if (l > 0) {
            delta = (w[l].transpose() * delta).cwiseProduct(leaky_relu_slope(pre[l - 1], net.leak()));
        }
    }
    return diff.squaredNorm() * scale;
}

AdamOptimizer::AdamOptimizer(const MlpNetwork& net)
    : first_(Gradients::zeros_like(net)), second_(Gradients::zeros_like(net))
{
}

void AdamOptimizer::step(MlpNetwork& net, const Gradients& grads, double learning_rate)
{
    if (!(learning_rate > 0.0)) {
        throw std::invalid_argument("AdamOptimizer: learning rate must be positive");
    }
    for (std::size_t l = 0; l < grads.weights.size(); ++l) {
        if (!grads.weights[l].allFinite() || !grads.biases[l].allFinite()) {
            throw std::domain_error("AdamOptimizer: non-finite gradient");
        }
    }
    ++steps_;
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(steps_));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(steps_));
    auto update = [&](auto& param, const auto& g, auto& m, auto& v) {
        m = beta1 * m + (1.0 - beta1) * g;
        v = beta2 * v + (1.0 - beta2) * g.cwiseProduct(g);
        param.array() -= learning_rate * (m.array() / c1) / ((v.array() / c2).sqrt() + epsilon);
    };
    for (std::size_t l = 0; l < grads.weights.size(); ++l) {
        update(net.weights()[l], grads.weights[l], first_.weights[l], second_.weights[l]);
        update(net.biases()[l], grads.biases[l], first_.biases[l], second_.biases[l]);
    }
}

Normalizer Normalizer::fit(const Matrix& samples)
{
    if (samples.cols() == 0 || samples.rows() == 0) {
        throw std::invalid_argument("Normalizer::fit: empty sample set");
    }
    Normalizer n;
    const double count = static_cast<double>(samples.cols());
    n.mean = samples.rowwise().sum() / count;
    n.stddev = Eigen::VectorXd::Zero(samples.rows());
    if (samples.cols() > 1) {
        const Matrix centred = samples.colwise() - n.mean;
        n.stddev = (centred.rowwise().squaredNorm() / (count - 1.0)).cwiseSqrt();
    }
    for (Eigen::Index i = 0; i < n.stddev.size(); ++i) {
        // Spread at round-off level counts as constant.
        if (n.stddev[i] <= 1e-12 * std::max(1.0, std::abs(n.mean[i]))) {
            n.stddev[i] = 0.0;
        }
    }
    return n;
}

Matrix Normalizer::apply(const Matrix& samples) const
{
    Matrix out(samples.rows(), samples.cols());
    for (Eigen::Index i = 0; i < samples.rows(); ++i) {
        if (stddev[i] == 0.0) {
            out.row(i).setZero();
        } else {
            out.row(i) = (samples.row(i).array() - mean[i]) / stddev[i];
        }
    }
    return out;
}

Matrix Normalizer::invert(const Matrix& normalized) const
{
    Matrix out(normalized.rows(), normalized.cols());
    for (Eigen::Index i = 0; i < normalized.rows(); ++i) {
        out.row(i) = normalized.row(i).array() * stddev[i] + mean[i];
    }
    return out;
}

Eigen::VectorXd Normalizer::apply(const Eigen::VectorXd& sample) const
{
    return apply(Matrix(sample)).col(0);
}

Eigen::VectorXd Normalizer::invert(const Eigen::VectorXd& normalized) const
{
    return invert(Matrix(normalized)).col(0);
}

void TrainConfig::validate() const
{
    if (!(learning_rate > 0.0)) {
        throw std::invalid_argument("TrainConfig: learning rate must be positive");
    }
    if (patience < 1) {
        throw std::invalid_argument("TrainConfig: patience must be at least 1");
    }
    if (max_epochs < 1 || batch_size < 1) {
        throw std::invalid_argument("TrainConfig: max_epochs and batch_size must be positive");
    }
}

Eigen::VectorXd TrainedModel::predict(const Eigen::VectorXd& input) const
{
    return target_scaling.invert(net.forward(input_scaling.apply(input)));
}

TrainResult train(MlpNetwork net, const Matrix& train_inputs, const Matrix& train_targets,
                  const Matrix& val_inputs, const Matrix& val_targets, const TrainConfig& config)
{
    config.validate();
    check_batch(net, train_inputs, train_targets);
    check_batch(net, val_inputs, val_targets);

    TrainResult result;
    result.model.config = config;
    result.model.input_scaling = Normalizer::fit(train_inputs);
    result.model.target_scaling = Normalizer::fit(train_targets);
    const Matrix x = result.model.input_scaling.apply(train_inputs);
    const Matrix y = result.model.target_scaling.apply(train_targets);
    const Matrix xv = result.model.input_scaling.apply(val_inputs);
    const Matrix yv = result.model.target_scaling.apply(val_targets);

    net.initialize(config.seed);
    AdamOptimizer adam(net);
    Gradients grads = Gradients::zeros_like(net);
    std::mt19937_64 shuffler(config.seed ^ 0x9e3779b97f4a7c15ULL);

    const int samples = static_cast<int>(x.cols());
    std::vector<int> order(static_cast<std::size_t>(samples));
    std::iota(order.begin(), order.end(), 0);

    MlpNetwork best = net;
    double best_loss = std::numeric_limits<double>::infinity();
    int stale = 0;
    auto& history = result.history;

    for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), shuffler);
        double epoch_loss = 0.0;
        int batches = 0;
        for (int start = 0; start < samples; start += config.batch_size) {
            const int stop = std::min(samples, start + config.batch_size);
            const std::vector<int> cols(order.begin() + start, order.begin() + stop);
            const Matrix xb = x(Eigen::all, cols);
            const Matrix yb = y(Eigen::all, cols);
            const double loss = gradient(net, xb, yb, grads);
            if (!std::isfinite(loss)) {
                throw TrainingDiverged("training loss became non-finite at epoch " + std::to_string(epoch));
            }
            try {
                adam.step(net, grads, config.learning_rate);
            } catch (const std::domain_error& e) {
                throw TrainingDiverged(std::string(e.what()) + " at epoch " + std::to_string(epoch));
            }
            epoch_loss += loss;
            ++batches;
        }
        history.train_loss.push_back(epoch_loss / batches);

        const double val_loss = mse_loss(net, xv, yv);
        if (!std::isfinite(val_loss) || !net.all_finite()) {
            throw TrainingDiverged("validation loss became non-finite at epoch " + std::to_string(epoch));
        }
        history.validation_loss.push_back(val_loss);
        if (val_loss < best_loss) {
            best_loss = val_loss;
            best = net;
            history.best_epoch = epoch;
            stale = 0;
        } else if (++stale >= config.patience) {
            break;
        }
    }
    history.best_validation_loss = best_loss;
    result.model.net = std::move(best);
    return result;
}

// Checkpoint layout (native little-endian):
//   char[8] "COSTAMLP", u32 version, u32 layer-dim count, i32 dims[],
//   f64 leak, per layer {f64 weights column-major, f64 biases},
//   f64 input mean/std, f64 target mean/std,
//   f64 learning rate, i32 patience, i32 max_epochs, i32 batch_size, u64 seed.
namespace {

constexpr std::array<char, 8> kMagic{'C', 'O', 'S', 'T', 'A', 'M', 'L', 'P'};
constexpr std::uint32_t kVersion = 1;

template <class T>
void put(std::ofstream& out, const T& value)
{
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <class T>
T take(std::ifstream& in)
{
    T value{};
    in.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!in) {
        throw std::runtime_error("checkpoint truncated");
    }
    return value;
}

void put_block(std::ofstream& out, const double* data, Eigen::Index n)
{
    out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(n * sizeof(double)));
}

void take_block(std::ifstream& in, double* data, Eigen::Index n)
{
    in.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(n * sizeof(double)));
    if (!in) {
        throw std::runtime_error("checkpoint truncated");
    }
}

}  // namespace

void save_checkpoint(const TrainedModel& model, const std::filesystem::path& path)
{
    static_assert(std::endian::native == std::endian::little, "checkpoint format is little-endian");
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot open checkpoint for writing: " + path.string());
    }
    out.write(kMagic.data(), kMagic.size());
    put(out, kVersion);
    const auto& dims = model.net.layer_dims();
    put(out, static_cast<std::uint32_t>(dims.size()));
    for (int d : dims) {
        put(out, static_cast<std::int32_t>(d));
    }
    put(out, model.net.leak());
    for (int l = 0; l < model.net.layer_count(); ++l) {
        put_block(out, model.net.weights()[l].data(), model.net.weights()[l].size());
        put_block(out, model.net.biases()[l].data(), model.net.biases()[l].size());
    }
    for (const Normalizer* n : {&model.input_scaling, &model.target_scaling}) {
        put_block(out, n->mean.data(), n->mean.size());
        put_block(out, n->stddev.data(), n->stddev.size());
    }
    put(out, model.config.learning_rate);
    put(out, static_cast<std::int32_t>(model.config.patience));
    put(out, static_cast<std::int32_t>(model.config.max_epochs));
    put(out, static_cast<std::int32_t>(model.config.batch_size));
    put(out, static_cast<std::uint64_t>(model.config.seed));
    if (!out) {
        throw std::runtime_error("failed writing checkpoint: " + path.string());
    }
}

TrainedModel load_checkpoint(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open checkpoint: " + path.string());
    }
    std::array<char, 8> magic{};
    in.read(magic.data(), magic.size());
    if (!in || magic != kMagic) {
        throw std::runtime_error("not a checkpoint file: " + path.string());
    }
    if (take<std::uint32_t>(in) != kVersion) {
        throw std::runtime_error("unsupported checkpoint version: " + path.string());
    }
    const auto count = take<std::uint32_t>(in);
    if (count < 2 || count > 1024) {
        throw std::runtime_error("corrupt checkpoint layer count: " + path.string());
    }
    std::vector<int> dims;
    for (std::uint32_t i = 0; i < count; ++i) {
        dims.push_back(take<std::int32_t>(in));
    }
    const double leak = take<double>(in);

    TrainedModel model;
    model.net = MlpNetwork(dims, leak);
    for (int l = 0; l < model.net.layer_count(); ++l) {
        take_block(in, model.net.weights()[l].data(), model.net.weights()[l].size());
        take_block(in, model.net.biases()[l].data(), model.net.biases()[l].size());
    }
    for (auto [n, size] : {std::pair{&model.input_scaling, dims.front()}, std::pair{&model.target_scaling, dims.back()}}) {
        n->mean.resize(size);
        n->stddev.resize(size);
        take_block(in, n->mean.data(), size);
        take_block(in, n->stddev.data(), size);
    }
    model.config.learning_rate = take<double>(in);
    model.config.patience = take<std::int32_t>(in);
    model.config.max_epochs = take<std::int32_t>(in);
    model.config.batch_size = take<std::int32_t>(in);
    model.config.seed = take<std::uint64_t>(in);
    return model;
}

}  // namespace costa
