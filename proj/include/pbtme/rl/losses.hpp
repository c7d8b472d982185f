#pragma once

// Loss functions and their exact gradients for the TD3 and SAC updates.
// Templated on the scalar so that gradient checks can run in double precision
// against the same code path that trains in float.

#include <Eigen/Core>

#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "pbtme/nn/mlp.hpp"
#include "pbtme/rl/replay_buffer.hpp"

namespace pbtme::rl::loss {

template <class S>
using Mat = nn::Matrix<S>;

template <class S>
S softplus(S x) {
    return x > S(0) ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

template <class S>
S sigmoid(S x) {
    return x >= S(0) ? S(1) / (S(1) + std::exp(-x)) : std::exp(x) / (S(1) + std::exp(x));
}

/// log(1 - tanh(u)^2), stable for large |u|.
template <class S>
S log_one_minus_tanh_sq(S u) {
    return S(2) * (std::numbers::ln2_v<S> - u - softplus(S(-2) * u));
}

template <class S>
Mat<S> stack_rows(const Mat<S>& top, const Mat<S>& bottom) {
    Mat<S> out(top.rows() + bottom.rows(), top.cols());
    out << top, bottom;
    return out;
}

inline constexpr double sac_min_std = 1e-3;

/// Reparameterized tanh-Gaussian sample from a SAC actor output (2A x B).
template <class S>
struct SquashedSample {
    Mat<S> pre_tanh;   // u = mean + std * eps
    Mat<S> action;     // tanh(u)
    Mat<S> std_dev;
    Mat<S> log_prob;   // 1 x B
};

template <class S>
SquashedSample<S> squash_sample(const Mat<S>& actor_out, const Mat<S>& eps) {
    const Eigen::Index A = eps.rows(), B = eps.cols();
    SquashedSample<S> r;
    r.pre_tanh.resize(A, B);
    r.action.resize(A, B);
    r.std_dev.resize(A, B);
    r.log_prob = Mat<S>::Zero(1, B);
    const S half_log_2pi = S(0.5) * std::log(S(2) * std::numbers::pi_v<S>);
    for (Eigen::Index b = 0; b < B; ++b)
        for (Eigen::Index i = 0; i < A; ++i) {
            const S sd = softplus(actor_out(A + i, b)) + S(sac_min_std);
            const S u = actor_out(i, b) + sd * eps(i, b);
            r.std_dev(i, b) = sd;
            r.pre_tanh(i, b) = u;
            r.action(i, b) = std::tanh(u);
            r.log_prob(0, b) += -S(0.5) * eps(i, b) * eps(i, b) - std::log(sd) - half_log_2pi - log_one_minus_tanh_sq(u);
        }
    return r;
}

/// Density of a = tanh(u), u ~ N(mean, sd^2), at a point a in (-1, 1).
template <class S>
S squashed_gaussian_log_density(S mean, S sd, S a) {
    const S u = std::atanh(a);
    const S z = (u - mean) / sd;
    return -S(0.5) * z * z - std::log(sd) - S(0.5) * std::log(S(2) * std::numbers::pi_v<S>) - log_one_minus_tanh_sq(u);
}

template <class S>
Mat<S> min_rows(const Mat<S>& a, const Mat<S>& b) {
    return a.cwiseMin(b);
}

template <class S>
std::vector<S> scratch(const nn::MlpSpec& spec) {
    return std::vector<S>(spec.param_count(), S(0));
}

/// Clipped double-Q critic loss with target policy smoothing:
///   y = r + gamma (1 - done) min_i Q'_i(s', clip(mu'(s') + clip(policy_noise * xi, +-noise_clip), +-1))
///   L = mean (Q_1(s, a) - y)^2 + mean (Q_2(s, a) - y)^2
/// Gradients w.r.t. both critics are accumulated into grad_c1 / grad_c2.
template <class S>
S td3_critic(const nn::MlpSpec& actor, const nn::MlpSpec& critic, std::span<const S> target_actor,
             std::span<const S> c1, std::span<const S> c2, std::span<const S> tc1, std::span<const S> tc2,
             const Batch<S>& b, const Mat<S>& xi, S gamma, S policy_noise, S noise_clip, std::span<S> grad_c1,
             std::span<S> grad_c2) {
    const auto B = Eigen::Index(b.size());
    Mat<S> next_action = nn::forward_batch<S>(actor, target_actor, b.next_state);
    Mat<S> noise = (policy_noise * xi.array()).cwiseMax(-noise_clip).cwiseMin(noise_clip).matrix();
    next_action = (next_action + noise).cwiseMax(S(-1)).cwiseMin(S(1));
    const Mat<S> next_in = stack_rows(b.next_state, next_action);
    const Mat<S> q_next = min_rows<S>(nn::forward_batch<S>(critic, tc1, next_in), nn::forward_batch<S>(critic, tc2, next_in));
    const Mat<S> y = (b.reward.array() + gamma * (S(1) - b.done.array()) * q_next.array()).matrix();

    const Mat<S> in = stack_rows(b.state, b.action);
    S loss = S(0);
    const std::span<const S> critics[2] = {c1, c2};
    const std::span<S> grads[2] = {grad_c1, grad_c2};
    for (int k = 0; k < 2; ++k) {
        nn::Tape<S> tape;
        const Mat<S> q = nn::forward_batch<S>(critic, critics[k], in, &tape);
        const Mat<S> diff = q - y;
        loss += diff.squaredNorm() / S(B);
        if (!grads[k].empty()) nn::backward_batch<S>(critic, critics[k], tape, (S(2) / S(B)) * diff, grads[k], false);
    }
    return loss;
}

/// Deterministic policy-gradient loss L = -mean Q_1(s, mu(s)); gradient w.r.t. theta.
template <class S>
S td3_actor(const nn::MlpSpec& actor, const nn::MlpSpec& critic, std::span<const S> theta, std::span<const S> c1,
            const Mat<S>& states, std::span<S> grad_theta) {
    const auto B = states.cols();
    nn::Tape<S> actor_tape, critic_tape;
    const Mat<S> a = nn::forward_batch<S>(actor, theta, states, &actor_tape);
    const Mat<S> q = nn::forward_batch<S>(critic, c1, stack_rows(states, a), &critic_tape);
    const S loss = -q.sum() / S(B);
    if (!grad_theta.empty()) {
        auto unused = scratch<S>(critic);
        const Mat<S> up = Mat<S>::Constant(1, B, S(-1) / S(B));
        const Mat<S> d_in = nn::backward_batch<S>(critic, c1, critic_tape, up, unused);
        const Mat<S> d_a = d_in.bottomRows(a.rows());
        nn::backward_batch<S>(actor, theta, actor_tape, d_a, grad_theta, false);
    }
    return loss;
}

/// Soft Bellman critic loss:
///   y = reward_scale r + gamma (1 - done) (min_i Q'_i(s', a') - alpha log pi(a'|s')),  a' ~ pi(s')
template <class S>
S sac_critic(const nn::MlpSpec& actor, const nn::MlpSpec& critic, std::span<const S> theta, std::span<const S> c1,
             std::span<const S> c2, std::span<const S> tc1, std::span<const S> tc2, S log_alpha, const Batch<S>& b,
             const Mat<S>& eps_next, S gamma, S reward_scale, std::span<S> grad_c1, std::span<S> grad_c2) {
    const auto B = Eigen::Index(b.size());
    const S alpha = std::exp(log_alpha);
    const auto next = squash_sample<S>(nn::forward_batch<S>(actor, theta, b.next_state), eps_next);
    const Mat<S> next_in = stack_rows(b.next_state, next.action);
    const Mat<S> q_next = min_rows<S>(nn::forward_batch<S>(critic, tc1, next_in), nn::forward_batch<S>(critic, tc2, next_in));
    const Mat<S> soft = (q_next.array() - alpha * next.log_prob.array()).matrix();
    const Mat<S> y = (reward_scale * b.reward.array() + gamma * (S(1) - b.done.array()) * soft.array()).matrix();

    const Mat<S> in = stack_rows(b.state, b.action);
    S loss = S(0);
    const std::span<const S> critics[2] = {c1, c2};
    const std::span<S> grads[2] = {grad_c1, grad_c2};
    for (int k = 0; k < 2; ++k) {
        nn::Tape<S> tape;
        const Mat<S> q = nn::forward_batch<S>(critic, critics[k], in, &tape);
        const Mat<S> diff = q - y;
        loss += diff.squaredNorm() / S(B);
        if (!grads[k].empty()) nn::backward_batch<S>(critic, critics[k], tape, (S(2) / S(B)) * diff, grads[k], false);
    }
    return loss;
}

/// Reparameterized policy loss L = mean (alpha log pi(a|s) - min_i Q_i(s, a)), a = tanh(mean + std eps).
/// The sampled log-probabilities are returned through `log_prob_out` for the temperature update.
template <class S>
S sac_actor(const nn::MlpSpec& actor, const nn::MlpSpec& critic, std::span<const S> theta, std::span<const S> c1,
            std::span<const S> c2, S log_alpha, const Mat<S>& states, const Mat<S>& eps, std::span<S> grad_theta,
            Mat<S>* log_prob_out = nullptr) {
    const auto B = states.cols();
    const auto A = eps.rows();
    const S alpha = std::exp(log_alpha);
    nn::Tape<S> actor_tape;
    const Mat<S> out = nn::forward_batch<S>(actor, theta, states, &actor_tape);
    const auto smp = squash_sample<S>(out, eps);
    const Mat<S> in = stack_rows(states, smp.action);
    nn::Tape<S> t1, t2;
    const Mat<S> q1 = nn::forward_batch<S>(critic, c1, in, &t1);
    const Mat<S> q2 = nn::forward_batch<S>(critic, c2, in, &t2);
    const Mat<S> qmin = min_rows<S>(q1, q2);
    const S loss = (alpha * smp.log_prob.array() - qmin.array()).sum() / S(B);
    if (log_prob_out) *log_prob_out = smp.log_prob;

    if (!grad_theta.empty()) {
        // Route -1/B through whichever critic attains the minimum (first on ties).
        Mat<S> up1 = Mat<S>::Zero(1, B), up2 = Mat<S>::Zero(1, B);
        for (Eigen::Index j = 0; j < B; ++j) (q1(0, j) <= q2(0, j) ? up1 : up2)(0, j) = S(-1) / S(B);
        auto unused = scratch<S>(critic);
        const Mat<S> d_a = nn::backward_batch<S>(critic, c1, t1, up1, unused).bottomRows(A) +
                           nn::backward_batch<S>(critic, c2, t2, up2, unused).bottomRows(A);
        Mat<S> d_out(2 * A, B);
        const S w = alpha / S(B);
        for (Eigen::Index j = 0; j < B; ++j)
            for (Eigen::Index i = 0; i < A; ++i) {
                const S a = smp.action(i, j);
                const S du = d_a(i, j) * (S(1) - a * a) + w * S(2) * a;
                const S dsd = du * eps(i, j) - w / smp.std_dev(i, j);
                d_out(i, j) = du;
                d_out(A + i, j) = dsd * sigmoid(out(A + i, j));
            }
        nn::backward_batch<S>(actor, theta, actor_tape, d_out, grad_theta, false);
    }
    return loss;
}

/// Temperature loss L = alpha * mean(-log pi - target_entropy) with alpha = exp(log_alpha).
template <class S>
S sac_alpha(S log_alpha, const Mat<S>& log_prob, S target_entropy, S* grad_log_alpha) {
    const S alpha = std::exp(log_alpha);
    const S m = (-log_prob.array() - target_entropy).mean();
    if (grad_log_alpha) *grad_log_alpha = alpha * m;
    return alpha * m;
}

} // namespace pbtme::rl::loss
