#include "nbf/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "nbf/jsonio.hpp"

namespace nbf {

json TrainConfig::to_json() const {
    return json{{"epochs", epochs},
                {"minibatch", minibatch},
                {"full_batch_limit", full_batch_limit},
                {"lr", lr},
                {"margin_init", margin_init},
                {"margin_unsafe", margin_unsafe},
                {"margin_decrease", margin_decrease},
                {"train_a", train_a},
                {"seed", seed}};
}

TrainConfig TrainConfig::from_json(const json& j) {
    TrainConfig cfg;
    cfg.epochs = j.value("epochs", cfg.epochs);
    cfg.minibatch = j.value("minibatch", cfg.minibatch);
    cfg.full_batch_limit = j.value("full_batch_limit", cfg.full_batch_limit);
    cfg.lr = j.value("lr", cfg.lr);
    cfg.margin_init = j.value("margin_init", cfg.margin_init);
    cfg.margin_unsafe = j.value("margin_unsafe", cfg.margin_unsafe);
    cfg.margin_decrease = j.value("margin_decrease", cfg.margin_decrease);
    cfg.train_a = j.value("train_a", cfg.train_a);
    cfg.seed = j.value("seed", cfg.seed);
    return cfg;
}

namespace {

struct Grads {
    std::vector<AffineMap> phi;  // weight/bias gradients per layer
    Eigen::MatrixXd C;
    Eigen::VectorXd b;
    Eigen::MatrixXd A;

    static Grads zeros_like(const VectorBarrier& bf) {
        Grads g;
        if (bf.basis == Basis::MlpNet) {
            for (const AffineMap& l : bf.phi.layers) {
                g.phi.push_back({Eigen::MatrixXd::Zero(l.weight.rows(), l.weight.cols()),
                                 Eigen::VectorXd::Zero(l.bias.size())});
            }
        }
        g.C = Eigen::MatrixXd::Zero(bf.C.rows(), bf.C.cols());
        g.b = Eigen::VectorXd::Zero(bf.b.size());
        g.A = Eigen::MatrixXd::Zero(bf.A.rows(), bf.A.cols());
        return g;
    }
};

// Backpropagate an adjoint on phi(x) into the layer gradients.
void phi_backward(const Mlp& phi, const std::vector<Eigen::VectorXd>& trace,
                  Eigen::VectorXd delta, Grads& g) {
    for (int l = static_cast<int>(phi.layers.size()) - 1; l >= 0; --l) {
        g.phi[static_cast<size_t>(l)].weight.noalias() +=
            delta * trace[static_cast<size_t>(l)].transpose();
        g.phi[static_cast<size_t>(l)].bias += delta;
        if (l > 0) {
            delta = phi.layers[static_cast<size_t>(l)].weight.transpose() * delta;
            // ReLU mask from the stored post-activation (0 at the kink).
            delta.array() *= (trace[static_cast<size_t>(l)].array() > 0.0).cast<double>();
        }
    }
}

struct Batch {
    const std::vector<Eigen::VectorXd>* s0;
    const std::vector<Eigen::VectorXd>* su;
    const std::vector<Eigen::VectorXd>* sx;
    const std::vector<Eigen::VectorXd>* sx_next;  // f(x) aligned with sx
};

// Loss and (optionally) parameter gradients over one batch. The loss is a sum
// of per-set means, so gradients flow through 1/N factors per set.
double loss_and_grads(const VectorBarrier& bf, const Batch& batch, const TrainConfig& cfg,
                      Grads* g) {
    const Eigen::Index m = bf.m();
    const bool net = bf.basis == Basis::MlpNet;
    double loss = 0.0;

    // Accumulate dC/db plus phi backprop for one sample's dB at state x.
    auto accumulate = [&](const Eigen::VectorXd& x, const Eigen::VectorXd& feat,
                          const std::vector<Eigen::VectorXd>* trace, const Eigen::VectorXd& dB) {
        if (!g) return;
        g->C.noalias() += dB * feat.transpose();
        g->b += dB;
        if (net) {
            (void)x;
            phi_backward(bf.phi, *trace, bf.C.transpose() * dB, *g);
        }
    };

    if (!batch.s0->empty()) {
        const double w = 1.0 / static_cast<double>(batch.s0->size());
        for (const Eigen::VectorXd& x : *batch.s0) {
            std::vector<Eigen::VectorXd> trace;
            Eigen::VectorXd feat;
            if (net) {
                trace = bf.phi.forward_trace(x);
                feat = trace.back();
            } else {
                feat = bf.features(x);
            }
            Eigen::VectorXd v = bf.C * feat + bf.b + Eigen::VectorXd::Constant(m, cfg.margin_init);
            loss += w * v.cwiseMax(0.0).sum();
            Eigen::VectorXd dB = w * (v.array() > 0.0).cast<double>().matrix();
            accumulate(x, feat, &trace, dB);
        }
    }

    if (!batch.su->empty()) {
        const double w = 1.0 / static_cast<double>(batch.su->size());
        for (const Eigen::VectorXd& x : *batch.su) {
            std::vector<Eigen::VectorXd> trace;
            Eigen::VectorXd feat;
            if (net) {
                trace = bf.phi.forward_trace(x);
                feat = trace.back();
            } else {
                feat = bf.features(x);
            }
            double bi = bf.C.row(bf.i_star).dot(feat) + bf.b[bf.i_star];
            double v = cfg.margin_unsafe - bi;
            if (v > 0.0) {
                loss += w * v;
                Eigen::VectorXd dB = Eigen::VectorXd::Zero(m);
                dB[bf.i_star] = -w;
                accumulate(x, feat, &trace, dB);
            }
        }
    }

    if (!batch.sx->empty()) {
        const double w = 1.0 / static_cast<double>(batch.sx->size());
        for (size_t k = 0; k < batch.sx->size(); ++k) {
            const Eigen::VectorXd& x = (*batch.sx)[k];
            const Eigen::VectorXd& y = (*batch.sx_next)[k];
            std::vector<Eigen::VectorXd> trace_x, trace_y;
            Eigen::VectorXd feat_x, feat_y;
            if (net) {
                trace_x = bf.phi.forward_trace(x);
                trace_y = bf.phi.forward_trace(y);
                feat_x = trace_x.back();
                feat_y = trace_y.back();
            } else {
                feat_x = bf.features(x);
                feat_y = bf.features(y);
            }
            Eigen::VectorXd Bx = bf.C * feat_x + bf.b;
            Eigen::VectorXd By = bf.C * feat_y + bf.b;
            Eigen::VectorXd v =
                By - bf.A * Bx + Eigen::VectorXd::Constant(m, cfg.margin_decrease);
            loss += w * v.cwiseMax(0.0).sum();
            if (g) {
                Eigen::VectorXd d = w * (v.array() > 0.0).cast<double>().matrix();
                if (d.isZero(0.0)) continue;
                Eigen::VectorXd dBx = -bf.A.transpose() * d;
                g->A.noalias() -= d * Bx.transpose();
                accumulate(y, feat_y, &trace_y, d);
                accumulate(x, feat_x, &trace_x, dBx);
            }
        }
    }
    return loss;
}

void adam_update(Eigen::Ref<Eigen::MatrixXd> p, const Eigen::MatrixXd& grad,
                 Eigen::MatrixXd& m, Eigen::MatrixXd& v, int t, double lr) {
    constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    m = b1 * m + (1.0 - b1) * grad;
    v = b2 * v + (1.0 - b2) * grad.cwiseProduct(grad);
    double c1 = 1.0 - std::pow(b1, t);
    double c2 = 1.0 - std::pow(b2, t);
    p -= (lr * (m / c1).array() / ((v / c2).array().sqrt() + eps)).matrix();
}

void adam_update_vec(Eigen::Ref<Eigen::VectorXd> p, const Eigen::VectorXd& grad,
                     Eigen::VectorXd& m, Eigen::VectorXd& v, int t, double lr) {
    constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    m = b1 * m + (1.0 - b1) * grad;
    v = b2 * v + (1.0 - b2) * grad.cwiseProduct(grad);
    double c1 = 1.0 - std::pow(b1, t);
    double c2 = 1.0 - std::pow(b2, t);
    p -= (lr * (m / c1).array() / ((v / c2).array().sqrt() + eps)).matrix();
}

}  // namespace

std::pair<double, BarrierGrads> barrier_loss_grads(const VectorBarrier& bf,
                                                   const SampleSet& samples, const ClosedLoop& sys,
                                                   const TrainConfig& cfg) {
    std::vector<Eigen::VectorXd> next;
    next.reserve(samples.sx.size());
    for (const Eigen::VectorXd& x : samples.sx) next.push_back(sys.step(x));
    Grads g = Grads::zeros_like(bf);
    Batch batch{&samples.s0, &samples.su, &samples.sx, &next};
    double loss = loss_and_grads(bf, batch, cfg, &g);
    return {loss, BarrierGrads{std::move(g.phi), std::move(g.C), std::move(g.b), std::move(g.A)}};
}

double barrier_loss(const VectorBarrier& bf, const SampleSet& samples, const ClosedLoop& sys,
                    const TrainConfig& cfg) {
    std::vector<Eigen::VectorXd> next;
    next.reserve(samples.sx.size());
    for (const Eigen::VectorXd& x : samples.sx) next.push_back(sys.step(x));
    Batch batch{&samples.s0, &samples.su, &samples.sx, &next};
    return loss_and_grads(bf, batch, cfg, nullptr);
}

VectorBarrier train_barrier(VectorBarrier bf, const SampleSet& samples, const ClosedLoop& sys,
                            const TrainConfig& cfg) {
    bf.validate();
    Rng rng = Rng(cfg.seed).fork("train");

    // The controller is part of the fixed plant here, so successor states are
    // computed once up front.
    std::vector<Eigen::VectorXd> next;
    next.reserve(samples.sx.size());
    for (const Eigen::VectorXd& x : samples.sx) next.push_back(sys.step(x));

    Grads m = Grads::zeros_like(bf), v = Grads::zeros_like(bf);
    int t = 0;

    const bool full_batch = samples.total() <= static_cast<size_t>(cfg.full_batch_limit);

    auto step_on = [&](const Batch& batch) {
        Grads g = Grads::zeros_like(bf);
        double loss = loss_and_grads(bf, batch, cfg, &g);
        if (!std::isfinite(loss)) {
            throw std::runtime_error("train_barrier: non-finite loss at step " +
                                     std::to_string(t));
        }
        ++t;
        if (bf.basis == Basis::MlpNet) {
            for (size_t l = 0; l < bf.phi.layers.size(); ++l) {
                adam_update(bf.phi.layers[l].weight, g.phi[l].weight, m.phi[l].weight,
                            v.phi[l].weight, t, cfg.lr);
                adam_update_vec(bf.phi.layers[l].bias, g.phi[l].bias, m.phi[l].bias,
                                v.phi[l].bias, t, cfg.lr);
            }
        }
        adam_update(bf.C, g.C, m.C, v.C, t, cfg.lr);
        adam_update_vec(bf.b, g.b, m.b, v.b, t, cfg.lr);
        if (cfg.train_a) {
            adam_update(bf.A, g.A, m.A, v.A, t, cfg.lr);
            bf.A = bf.A.cwiseMax(0.0);
        }
        return loss;
    };

    if (full_batch) {
        Batch batch{&samples.s0, &samples.su, &samples.sx, &next};
        for (int e = 0; e < cfg.epochs; ++e) step_on(batch);
        return bf;
    }

    // Minibatch path: per-epoch shuffles of each set, proportional chunks.
    const size_t total = samples.total();
    const size_t steps = (total + static_cast<size_t>(cfg.minibatch) - 1) /
                         static_cast<size_t>(cfg.minibatch);
    auto chunk_of = [&](const std::vector<Eigen::VectorXd>& set, const std::vector<size_t>& perm,
                        size_t step_idx, size_t chunk,
                        const std::vector<Eigen::VectorXd>* aligned,
                        std::vector<Eigen::VectorXd>& out,
                        std::vector<Eigen::VectorXd>* out_aligned) {
        out.clear();
        if (out_aligned) out_aligned->clear();
        if (set.empty() || chunk == 0) return;
        for (size_t i = 0; i < chunk; ++i) {
            size_t j = perm[(step_idx * chunk + i) % set.size()];
            out.push_back(set[j]);
            if (out_aligned) out_aligned->push_back((*aligned)[j]);
        }
    };

    std::vector<size_t> p0(samples.s0.size()), pu(samples.su.size()), px(samples.sx.size());
    std::iota(p0.begin(), p0.end(), 0);
    std::iota(pu.begin(), pu.end(), 0);
    std::iota(px.begin(), px.end(), 0);
    const size_t c0 = samples.s0.size() * static_cast<size_t>(cfg.minibatch) / total;
    const size_t cu = samples.su.size() * static_cast<size_t>(cfg.minibatch) / total;
    const size_t cx = samples.sx.size() * static_cast<size_t>(cfg.minibatch) / total;

    std::vector<Eigen::VectorXd> b0, bu, bx, bx_next;
    for (int e = 0; e < cfg.epochs; ++e) {
        std::shuffle(p0.begin(), p0.end(), rng.gen());
        std::shuffle(pu.begin(), pu.end(), rng.gen());
        std::shuffle(px.begin(), px.end(), rng.gen());
        for (size_t s = 0; s < steps; ++s) {
            chunk_of(samples.s0, p0, s, c0, nullptr, b0, nullptr);
            chunk_of(samples.su, pu, s, cu, nullptr, bu, nullptr);
            chunk_of(samples.sx, px, s, cx, &next, bx, &bx_next);
            Batch batch{&b0, &bu, &bx, &bx_next};
            step_on(batch);
        }
    }
    return bf;
}

VectorBarrier shrink_and_perturb(const VectorBarrier& bf, double lambda, double sigma, Rng& rng) {
    std::vector<Eigen::Index> sizes;
    if (bf.basis == Basis::MlpNet) {
        sizes.push_back(bf.phi.in_dim());
        for (const AffineMap& l : bf.phi.layers) sizes.push_back(l.weight.rows());
    }
    VectorBarrier fresh = random_barrier(bf.basis, sizes, bf.m(),
                                         bf.basis == Basis::MlpNet ? bf.phi.in_dim()
                                                                   : bf.state_dim,
                                         rng);
    VectorBarrier out = bf;
    if (bf.basis == Basis::MlpNet) {
        for (size_t l = 0; l < out.phi.layers.size(); ++l) {
            out.phi.layers[l].weight =
                lambda * out.phi.layers[l].weight + sigma * fresh.phi.layers[l].weight;
            out.phi.layers[l].bias =
                lambda * out.phi.layers[l].bias + sigma * fresh.phi.layers[l].bias;
        }
    }
    out.C = lambda * out.C + sigma * fresh.C;
    out.b = lambda * out.b + sigma * fresh.b;
    out.A = (lambda * out.A + sigma * fresh.A).cwiseMax(0.0);
    return out;
}

VectorBarrier random_barrier(Basis basis, const std::vector<Eigen::Index>& phi_sizes,
                             Eigen::Index m, Eigen::Index state_dim, Rng& rng) {
    VectorBarrier bf;
    bf.basis = basis;
    bf.state_dim = state_dim;
    Eigen::Index M;
    if (basis == Basis::MlpNet) {
        if (phi_sizes.size() < 2) {
            throw std::invalid_argument("random_barrier: phi_sizes must list in/out dims");
        }
        Rng phi_rng = rng.fork("phi");
        bf.phi = random_mlp(phi_sizes, phi_rng);
        M = bf.phi.out_dim();
    } else if (basis == Basis::Identity) {
        M = state_dim;
    } else {
        M = quadratic_feature_dim(state_dim);
    }
    Rng head = rng.fork("head");
    double ws = std::sqrt(6.0 / static_cast<double>(M));
    double bs = 1.0 / std::sqrt(static_cast<double>(M));
    bf.C.resize(m, M);
    for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index j = 0; j < M; ++j) bf.C(i, j) = head.uniform(-ws, ws);
    }
    bf.b.resize(m);
    for (Eigen::Index i = 0; i < m; ++i) bf.b[i] = head.uniform(-bs, bs);
    Rng arow = rng.fork("A");
    bf.A = Eigen::MatrixXd::Identity(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index j = 0; j < m; ++j) bf.A(i, j) += arow.uniform(0.0, 0.1);
    }
    bf.i_star = 0;
    return bf;
}

}  // namespace nbf
