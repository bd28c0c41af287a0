#include "pdd/nn.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>

#include "pdd/error.hpp"
#include "pdd/rng.hpp"

namespace pdd {

ParameterSet ParameterSet::init(std::span<const std::size_t> widths, std::uint64_t seed) {
    if (widths.size() < 2) throw ConfigError("network needs at least an input and an output width");
    for (std::size_t w : widths)
        if (w == 0) throw ConfigError("layer widths must be positive");

    RngStream rng = make_stream(seed, {stream_tag::init});
    ParameterSet p;
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
        const std::size_t in = widths[l];
        const std::size_t out = widths[l + 1];
        const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
        std::uniform_real_distribution<double> dist(-limit, limit);
        Layer layer{Matrix(out, in), std::vector<double>(out, 0.0)};
        for (double& w : layer.weight.values()) w = dist(rng);
        p.layers.push_back(std::move(layer));
    }
    return p;
}

ParameterSet ParameterSet::zeros_like() const {
    ParameterSet z;
    z.layers.reserve(layers.size());
    for (const Layer& l : layers) z.layers.push_back({Matrix(l.out(), l.in()), std::vector<double>(l.out(), 0.0)});
    return z;
}

std::size_t ParameterSet::input_width() const {
    if (layers.empty()) throw ConfigError("empty parameter set");
    return layers.front().in();
}

std::size_t ParameterSet::output_width() const {
    if (layers.empty()) throw ConfigError("empty parameter set");
    return layers.back().out();
}

std::size_t ParameterSet::parameter_count() const noexcept {
    std::size_t n = 0;
    for (const Layer& l : layers) n += l.weight.size() + l.bias.size();
    return n;
}

bool ParameterSet::same_shape(const ParameterSet& other) const noexcept {
    if (layers.size() != other.layers.size()) return false;
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const Layer& a = layers[l];
        const Layer& b = other.layers[l];
        if (a.in() != b.in() || a.out() != b.out() || a.bias.size() != b.bias.size()) return false;
    }
    return true;
}

bool ParameterSet::all_finite() const noexcept {
    for (const Layer& l : layers) {
        for (double w : l.weight.values())
            if (!std::isfinite(w)) return false;
        for (double b : l.bias)
            if (!std::isfinite(b)) return false;
    }
    return true;
}

void ParameterSet::check() const {
    if (layers.empty()) throw ConfigError("empty parameter set");
    for (std::size_t l = 0; l < layers.size(); ++l) {
        if (layers[l].bias.size() != layers[l].out())
            throw ConfigError(fmt::format("layer {}: bias length {} != output width {}", l, layers[l].bias.size(),
                                          layers[l].out()));
        if (l > 0 && layers[l].in() != layers[l - 1].out())
            throw ConfigError(fmt::format("layer {}: input width {} does not chain with previous output {}", l,
                                          layers[l].in(), layers[l - 1].out()));
    }
    if (!all_finite()) throw ConfigError("parameter set contains non-finite entries");
}

std::size_t argmax(std::span<const double> row) noexcept {
    std::size_t best = 0;
    for (std::size_t c = 1; c < row.size(); ++c)
        if (row[c] > row[best]) best = c;
    return best;
}

Matrix softmax(const Matrix& logits) {
    Matrix p(logits.rows(), logits.cols());
    for (std::size_t r = 0; r < logits.rows(); ++r) {
        auto z = logits.row(r);
        auto out = p.row(r);
        const double m = *std::max_element(z.begin(), z.end());
        double sum = 0.0;
        for (std::size_t c = 0; c < z.size(); ++c) {
            out[c] = std::exp(z[c] - m);
            sum += out[c];
        }
        for (double& v : out) v /= sum;
    }
    return p;
}

namespace {

// out = in * W^T + b, row by row.
Matrix affine(const Matrix& in, const Layer& layer) {
    Matrix out(in.rows(), layer.out());
    for (std::size_t r = 0; r < in.rows(); ++r) {
        auto x = in.row(r);
        auto y = out.row(r);
        for (std::size_t o = 0; o < layer.out(); ++o) {
            auto w = layer.weight.row(o);
            double acc = layer.bias[o];
            for (std::size_t j = 0; j < x.size(); ++j) acc += w[j] * x[j];
            y[o] = acc;
        }
    }
    return out;
}

double row_cross_entropy(std::span<const double> logits, int label) {
    const double m = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (double z : logits) sum += std::exp(z - m);
    return -(logits[static_cast<std::size_t>(label)] - m - std::log(sum));
}

void check_labels(std::span<const int> labels, std::size_t rows, std::size_t classes) {
    if (labels.size() != rows)
        throw ConfigError(fmt::format("label count {} != batch rows {}", labels.size(), rows));
    for (int y : labels)
        if (y < 0 || static_cast<std::size_t>(y) >= classes)
            throw ConfigError(fmt::format("label {} outside [0, {})", y, classes));
}

}  // namespace

ForwardResult forward(const ParameterSet& params, const Matrix& batch) {
    if (params.layers.empty()) throw ConfigError("empty parameter set");
    if (batch.cols() != params.input_width())
        throw ConfigError(
            fmt::format("batch feature width {} != network input width {}", batch.cols(), params.input_width()));

    ForwardResult res;
    res.activations.reserve(params.layers.size());
    res.activations.push_back(batch);
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        Matrix z = affine(res.activations.back(), params.layers[l]);
        if (l + 1 == params.layers.size()) {
            res.logits = std::move(z);
        } else {
            for (double& v : z.values()) v = std::max(v, 0.0);
            res.activations.push_back(std::move(z));
        }
    }
    res.probabilities = softmax(res.logits);
    return res;
}

std::vector<double> per_sample_loss(const ForwardResult& fwd, std::span<const int> labels) {
    check_labels(labels, fwd.logits.rows(), fwd.logits.cols());
    std::vector<double> out(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) out[i] = row_cross_entropy(fwd.logits.row(i), labels[i]);
    return out;
}

LossAndGrad loss_and_grad(const ParameterSet& params, const ForwardResult& fwd, std::span<const int> labels,
                          const BatchMask& mask) {
    const std::size_t n = fwd.logits.rows();
    const std::size_t classes = fwd.logits.cols();
    if (mask.empty()) throw ContractViolation("loss_and_grad called with an empty mask");
    if (!mask.valid_for(n)) throw ContractViolation("mask indices must be strictly increasing and below batch size");
    if (fwd.activations.size() != params.layers.size())
        throw ContractViolation("forward cache does not match parameter set");
    check_labels(labels, n, classes);

    const std::size_t m = mask.size();
    const double inv_m = 1.0 / static_cast<double>(m);

    LossAndGrad out;
    out.grads = params.zeros_like();

    // delta holds dL/dz for the masked rows of the current layer, compacted.
    Matrix delta(m, classes);
    double loss = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
        const std::size_t i = mask.indices[k];
        loss += row_cross_entropy(fwd.logits.row(i), labels[i]);
        auto p = fwd.probabilities.row(i);
        auto d = delta.row(k);
        for (std::size_t c = 0; c < classes; ++c) d[c] = p[c] * inv_m;
        d[static_cast<std::size_t>(labels[i])] -= inv_m;
    }
    out.loss = loss * inv_m;

    for (std::size_t l = params.layers.size(); l-- > 0;) {
        const Layer& layer = params.layers[l];
        Layer& g = out.grads.layers[l];
        const Matrix& input = fwd.activations[l];

        for (std::size_t k = 0; k < m; ++k) {
            auto x = input.row(mask.indices[k]);
            auto d = delta.row(k);
            for (std::size_t o = 0; o < layer.out(); ++o) {
                const double dk = d[o];
                if (dk == 0.0) continue;
                auto gw = g.weight.row(o);
                for (std::size_t j = 0; j < x.size(); ++j) gw[j] += dk * x[j];
                g.bias[o] += dk;
            }
        }

        if (l == 0) break;
        Matrix prev(m, layer.in());
        for (std::size_t k = 0; k < m; ++k) {
            auto x = input.row(mask.indices[k]);
            auto d = delta.row(k);
            auto pd = prev.row(k);
            for (std::size_t o = 0; o < layer.out(); ++o) {
                const double dk = d[o];
                if (dk == 0.0) continue;
                auto w = layer.weight.row(o);
                for (std::size_t j = 0; j < pd.size(); ++j) pd[j] += dk * w[j];
            }
            // ReLU: post-activation > 0 iff pre-activation > 0.
            for (std::size_t j = 0; j < pd.size(); ++j)
                if (x[j] <= 0.0) pd[j] = 0.0;
        }
        delta = std::move(prev);
    }
    return out;
}

Optimizer::Optimizer(OptimizerSettings settings, const ParameterSet& like)
    : settings_(settings), lr_(settings.learning_rate) {
    if (!(settings.learning_rate > 0.0) || !std::isfinite(settings.learning_rate))
        throw ConfigError("learning rate must be positive and finite");
    if (settings.weight_decay < 0.0) throw ConfigError("weight decay must be non-negative");
    if (!(settings.decay_factor > 0.0) || settings.decay_factor > 1.0)
        throw ConfigError("learning-rate decay factor must be in (0, 1]");
    if (settings.kind == OptimizerKind::sgd_momentum) {
        if (settings.momentum < 0.0 || settings.momentum >= 1.0) throw ConfigError("momentum must be in [0, 1)");
    } else {
        if (settings.beta1 < 0.0 || settings.beta1 >= 1.0 || settings.beta2 < 0.0 || settings.beta2 >= 1.0)
            throw ConfigError("adam betas must be in [0, 1)");
        second_moment_ = like.zeros_like();
    }
    first_moment_ = like.zeros_like();
}

void Optimizer::end_epoch() noexcept { lr_ *= settings_.decay_factor; }

namespace {

template <typename Fn>
void for_each_param(ParameterSet& params, const ParameterSet& grads, ParameterSet& m1, ParameterSet* m2, Fn&& fn) {
    static double dummy = 0.0;
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        auto pw = params.layers[l].weight.values();
        auto gw = grads.layers[l].weight.values();
        auto mw = m1.layers[l].weight.values();
        for (std::size_t i = 0; i < pw.size(); ++i)
            fn(pw[i], gw[i], mw[i], m2 ? m2->layers[l].weight.values()[i] : dummy);
        auto& pb = params.layers[l].bias;
        const auto& gb = grads.layers[l].bias;
        auto& mb = m1.layers[l].bias;
        for (std::size_t i = 0; i < pb.size(); ++i) fn(pb[i], gb[i], mb[i], m2 ? m2->layers[l].bias[i] : dummy);
    }
}

}  // namespace

void Optimizer::step(ParameterSet& params, const ParameterSet& grads) {
    if (!params.same_shape(grads) || !params.same_shape(first_moment_))
        throw ContractViolation("optimizer step: gradient shape does not match parameters");
    if (!grads.all_finite()) throw NumericalError("non-finite gradient");

    ++steps_;
    const double lr = lr_;
    const double wd = settings_.weight_decay;

    if (settings_.kind == OptimizerKind::sgd_momentum) {
        const double mu = settings_.momentum;
        for_each_param(params, grads, first_moment_, nullptr, [&](double& p, double g, double& buf, double&) {
            const double d = g + wd * p;
            buf = mu * buf + d;
            p -= lr * buf;
        });
        return;
    }

    const double b1 = settings_.beta1;
    const double b2 = settings_.beta2;
    const double eps = settings_.epsilon;
    const double t = static_cast<double>(steps_);
    const double c1 = 1.0 - std::pow(b1, t);
    const double c2 = 1.0 - std::pow(b2, t);
    for_each_param(params, grads, first_moment_, &second_moment_, [&](double& p, double g, double& m, double& v) {
        p *= 1.0 - lr * wd;
        m = b1 * m + (1.0 - b1) * g;
        v = b2 * v + (1.0 - b2) * g * g;
        p -= lr * (m / c1) / (std::sqrt(v / c2) + eps);
    });
}

}  // namespace pdd
