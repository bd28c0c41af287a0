#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "pdd/mask.hpp"
#include "pdd/matrix.hpp"

namespace pdd {

/// One fully-connected layer: y = W x + b with W stored [out x in].
struct Layer {
    Matrix weight;
    std::vector<double> bias;

    std::size_t in() const noexcept { return weight.cols(); }
    std::size_t out() const noexcept { return weight.rows(); }

    bool operator==(const Layer&) const = default;
};

/// MLP parameters. ReLU between layers, identity on the output layer.
/// Also used as the gradient container (same shapes).
struct ParameterSet {
    std::vector<Layer> layers;

    /// Glorot-uniform weights in +-sqrt(6/(in+out)), zero biases.
    /// `widths` = {input, hidden..., classes}.
    static ParameterSet init(std::span<const std::size_t> widths, std::uint64_t seed);

    /// Same shapes, every entry zero.
    ParameterSet zeros_like() const;

    std::size_t input_width() const;
    std::size_t output_width() const;
    std::size_t parameter_count() const noexcept;

    /// Throws ConfigError if consecutive layers do not chain or any entry is non-finite.
    void check() const;
    bool same_shape(const ParameterSet& other) const noexcept;
    bool all_finite() const noexcept;

    bool operator==(const ParameterSet&) const = default;
};

struct ForwardResult {
    Matrix logits;
    Matrix probabilities;
    /// activations[0] is the input batch; activations[l] is the post-ReLU
    /// output of layer l-1 (the input to layer l).
    std::vector<Matrix> activations;
};

/// Throws ConfigError on feature-width mismatch.
ForwardResult forward(const ParameterSet& params, const Matrix& batch);

/// Row-wise numerically stable softmax.
Matrix softmax(const Matrix& logits);

/// Cross-entropy of every row, -log p[label].
std::vector<double> per_sample_loss(const ForwardResult& fwd, std::span<const int> labels);

struct LossAndGrad {
    double loss = 0.0;
    ParameterSet grads;
};

/// Mean softmax cross-entropy over the masked rows and its exact gradient.
/// Unmasked rows contribute nothing. An empty mask is a contract violation.
LossAndGrad loss_and_grad(const ParameterSet& params, const ForwardResult& fwd,
                          std::span<const int> labels, const BatchMask& mask);

enum class OptimizerKind { sgd_momentum, adamw };

struct OptimizerSettings {
    OptimizerKind kind = OptimizerKind::adamw;
    double learning_rate = 3e-4;
    double momentum = 0.9;  // sgd only
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double weight_decay = 0.01;
    double decay_factor = 0.97;  // StepLR gamma, step size one epoch
};

/// SGD with momentum or AdamW (decoupled weight decay), with a per-epoch
/// step decay of the learning rate.
class Optimizer {
public:
    Optimizer(OptimizerSettings settings, const ParameterSet& like);

    /// Applies one update. Throws NumericalError on a non-finite gradient and
    /// ContractViolation on a shape mismatch.
    void step(ParameterSet& params, const ParameterSet& grads);

    /// Epoch boundary: lr <- lr * decay_factor.
    void end_epoch() noexcept;

    double learning_rate() const noexcept { return lr_; }
    std::uint64_t step_count() const noexcept { return steps_; }
    const OptimizerSettings& settings() const noexcept { return settings_; }

private:
    OptimizerSettings settings_;
    double lr_;
    std::uint64_t steps_ = 0;
    ParameterSet first_moment_;
    ParameterSet second_moment_;
};

/// Index of the largest entry, lowest index on ties.
std::size_t argmax(std::span<const double> row) noexcept;

}  // namespace pdd
