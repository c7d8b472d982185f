#include "pbtme/nn/mlp.hpp"

#include <random>

namespace pbtme::nn {

std::string to_string(Activation a) {
    switch (a) {
    case Activation::identity: return "identity";
    case Activation::relu: return "relu";
    case Activation::tanh: return "tanh";
    }
    return "?";
}

Activation activation_from_string(const std::string& s) {
    if (s == "identity") return Activation::identity;
    if (s == "relu") return Activation::relu;
    if (s == "tanh") return Activation::tanh;
    throw ParseError("unknown activation '" + s + "'");
}

std::size_t MlpSpec::param_count() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l)
        n += std::size_t(layer_sizes[l]) * layer_sizes[l + 1] + layer_sizes[l + 1];
    return n;
}

std::size_t MlpSpec::weight_offset(std::size_t l) const {
    std::size_t n = 0;
    for (std::size_t i = 0; i < l; ++i) n += std::size_t(layer_sizes[i]) * layer_sizes[i + 1] + layer_sizes[i + 1];
    return n;
}

void MlpSpec::validate() const {
    if (layer_sizes.size() < 2) throw ContractViolation("network needs at least an input and an output layer");
    for (int s : layer_sizes)
        if (s <= 0) throw ContractViolation("layer sizes must be positive");
}

FlatParams init_params(const MlpSpec& spec, Rng& rng) {
    spec.validate();
    FlatParams p(spec.param_count());
    for (std::size_t l = 0; l < spec.num_affine(); ++l) {
        const float bound = 1.f / std::sqrt(float(spec.layer_sizes[l]));
        std::uniform_real_distribution<float> u(-bound, bound);
        const std::size_t begin = spec.weight_offset(l);
        const std::size_t end = spec.bias_offset(l) + spec.layer_sizes[l + 1];
        for (std::size_t i = begin; i < end; ++i) p[i] = u(rng);
    }
    return p;
}

std::vector<float> forward(const MlpSpec& spec, std::span<const float> params, std::span<const float> input) {
    if (input.size() != std::size_t(spec.input_size()))
        throw ContractViolation("input has " + std::to_string(input.size()) + " values, expected " +
                                std::to_string(spec.input_size()));
    Matrix<float> x = Eigen::Map<const Vector<float>>(input.data(), input.size());
    Matrix<float> y = forward_batch<float>(spec, params, x);
    return {y.data(), y.data() + y.size()};
}

Gradients backward(const MlpSpec& spec, std::span<const float> params, std::span<const float> input,
                   std::span<const float> upstream) {
    if (input.size() != std::size_t(spec.input_size()))
        throw ContractViolation("input has wrong dimension for backward");
    if (upstream.size() != std::size_t(spec.output_size()))
        throw ContractViolation("upstream gradient has " + std::to_string(upstream.size()) + " values, expected " +
                                std::to_string(spec.output_size()));
    Matrix<float> x = Eigen::Map<const Vector<float>>(input.data(), input.size());
    Tape<float> tape;
    forward_batch<float>(spec, params, x, &tape);
    Gradients g;
    g.params.assign(spec.param_count(), 0.f);
    Matrix<float> up = Eigen::Map<const Vector<float>>(upstream.data(), upstream.size());
    Matrix<float> dx = backward_batch<float>(spec, params, tape, up, g.params);
    g.input.assign(dx.data(), dx.data() + dx.size());
    return g;
}

} // namespace pbtme::nn
