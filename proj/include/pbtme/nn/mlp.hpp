#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "pbtme/errors.hpp"
#include "pbtme/rng.hpp"

namespace pbtme::nn {

enum class Activation { identity, relu, tanh };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& s);

/// Shape of a fully-connected network. Parameters are laid out layer by layer,
/// each layer as its weight matrix (out x in, row-major) followed by its bias.
struct MlpSpec {
    std::vector<int> layer_sizes;
    Activation hidden = Activation::relu;
    Activation output = Activation::identity;

    std::size_t num_affine() const { return layer_sizes.size() - 1; }
    int input_size() const { return layer_sizes.front(); }
    int output_size() const { return layer_sizes.back(); }
    std::size_t param_count() const;
    /// Offset of layer l's weight block in the flat layout.
    std::size_t weight_offset(std::size_t l) const;
    std::size_t bias_offset(std::size_t l) const { return weight_offset(l) + std::size_t(layer_sizes[l]) * layer_sizes[l + 1]; }
    void validate() const;

    bool operator==(const MlpSpec&) const = default;
};

using FlatParams = std::vector<float>;

template <class S>
using Matrix = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <class S>
using Vector = Eigen::Matrix<S, Eigen::Dynamic, 1>;

/// Activations recorded by a forward pass; acts[0] is the input batch,
/// acts[l + 1] the output of affine layer l after its activation.
template <class S>
struct Tape {
    std::vector<Matrix<S>> acts;
};

FlatParams init_params(const MlpSpec& spec, Rng& rng);

namespace detail {

template <class S>
using RowMajorMap = Eigen::Map<const Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

template <class S>
void apply_activation(Matrix<S>& z, Activation a) {
    switch (a) {
    case Activation::identity: break;
    case Activation::relu: z.array() = z.array().max(S(0)); break;
    case Activation::tanh: z.array() = z.array().tanh(); break;
    }
}

/// In-place multiply of the upstream gradient by the activation derivative,
/// expressed through the activation output.
template <class S>
void scale_by_derivative(Matrix<S>& grad, const Matrix<S>& out, Activation a) {
    switch (a) {
    case Activation::identity: break;
    case Activation::relu: grad = (out.array() > S(0)).select(grad, S(0)); break;
    case Activation::tanh: grad.array() *= (S(1) - out.array().square()); break;
    }
}

inline void check_params(const MlpSpec& spec, std::size_t n) {
    if (n != spec.param_count())
        throw ContractViolation("parameter vector has " + std::to_string(n) + " values, network needs " +
                                std::to_string(spec.param_count()));
}

} // namespace detail

/// Batched forward pass; columns of `x` are samples.
template <class S>
Matrix<S> forward_batch(const MlpSpec& spec, std::span<const S> params, const Matrix<S>& x, Tape<S>* tape = nullptr) {
    detail::check_params(spec, params.size());
    if (x.rows() != spec.input_size())
        throw ContractViolation("network input has " + std::to_string(x.rows()) + " rows, expected " +
                                std::to_string(spec.input_size()));
    Tape<S> local;
    Tape<S>& t = tape ? *tape : local;
    t.acts.resize(spec.layer_sizes.size());
    t.acts[0] = x;
    const std::size_t L = spec.num_affine();
    for (std::size_t l = 0; l < L; ++l) {
        const int in = spec.layer_sizes[l], out = spec.layer_sizes[l + 1];
        // Products run on owned copies: Eigen's kernels on unaligned views can change
        // the summation order with the heap address, which breaks run-to-run determinism.
        const Matrix<S> w = detail::RowMajorMap<S>(params.data() + spec.weight_offset(l), out, in);
        Eigen::Map<const Vector<S>> b(params.data() + spec.bias_offset(l), out);
        Matrix<S>& z = t.acts[l + 1];
        z.noalias() = w * t.acts[l];
        z.colwise() += b;
        detail::apply_activation(z, l + 1 == L ? spec.output : spec.hidden);
    }
    if (tape) return t.acts.back();
    return std::move(t.acts.back());
}

/// Reverse pass for the scalar sum(output .* upstream). Parameter gradients are
/// accumulated (summed over the batch) into `grad`; returns the input gradient
/// (empty when `want_input_grad` is false).
template <class S>
Matrix<S> backward_batch(const MlpSpec& spec, std::span<const S> params, const Tape<S>& tape,
                         const Matrix<S>& upstream, std::span<S> grad, bool want_input_grad = true) {
    detail::check_params(spec, params.size());
    detail::check_params(spec, grad.size());
    const std::size_t L = spec.num_affine();
    if (tape.acts.size() != L + 1) throw ContractViolation("tape does not match network depth");
    if (upstream.rows() != spec.output_size() || upstream.cols() != tape.acts.back().cols())
        throw ContractViolation("upstream gradient shape does not match network output");
    Matrix<S> d = upstream;
    for (std::size_t l = L; l-- > 0;) {
        const int in = spec.layer_sizes[l], out = spec.layer_sizes[l + 1];
        detail::scale_by_derivative(d, tape.acts[l + 1], l + 1 == L ? spec.output : spec.hidden);
        // Row-major (out x in) storage is the column-major layout of the transpose.
        Eigen::Map<Matrix<S>> gw_t(grad.data() + spec.weight_offset(l), in, out);
        Eigen::Map<Vector<S>> gb(grad.data() + spec.bias_offset(l), out);
        const Matrix<S> dw = tape.acts[l] * d.transpose();
        const Vector<S> db = d.rowwise().sum();
        gw_t += dw;
        gb += db;
        if (l == 0 && !want_input_grad) break;
        const Matrix<S> w = detail::RowMajorMap<S>(params.data() + spec.weight_offset(l), out, in);
        Matrix<S> next;
        next.noalias() = w.transpose() * d;
        d = std::move(next);
    }
    return d;
}

/// Single-sample evaluation.
std::vector<float> forward(const MlpSpec& spec, std::span<const float> params, std::span<const float> input);

struct Gradients {
    FlatParams params;
    std::vector<float> input;
};

/// Single-sample reverse pass of output . upstream.
Gradients backward(const MlpSpec& spec, std::span<const float> params, std::span<const float> input,
                   std::span<const float> upstream);

} // namespace pbtme::nn
