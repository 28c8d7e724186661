#include "gmmbench/nn_core.hpp"

#include "gmmbench/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace gmmbench::nn {

Mlp::Mlp(const std::vector<int>& dims) {
    if (dims.size() < 2) throw InvalidConfigError("Mlp: need at least input and output dims");
    for (std::size_t i = 0; i + 1 < dims.size(); ++i)
        layers.emplace_back(dims[i + 1], dims[i]);
    masks_.resize(layers.size());
}

Mat Mlp::forward(const Mat& X) {
    Mat a = X;
    const std::size_t last = layers.size() - 1;
    for (std::size_t l = 0; l < layers.size(); ++l) {
        Mat z = layers[l].forward(a);
        if (l < last) {
            masks_[l] = (z.array() > 0.0).cast<double>();
            a = z.cwiseMax(0.0);
        } else {
            a = std::move(z);
        }
    }
    return a;
}

void Mlp::backward(const Mat& d_output) {
    Mat d = d_output;
    for (std::size_t l = layers.size(); l-- > 0;) {
        if (l < layers.size() - 1) d = d.cwiseProduct(masks_[l]);
        d = layers[l].backward(d);
    }
}

void Mlp::zero_grad() {
    for (auto& layer : layers) layer.zero_grad();
}

static void push_layer_views(DenseLayer& layer, std::vector<ParamView>& out) {
    out.push_back({layer.W.data(), layer.dW.data(), static_cast<long>(layer.W.size())});
    out.push_back({layer.b.data(), layer.db.data(), static_cast<long>(layer.b.size())});
}

std::vector<ParamView> Mlp::params() {
    std::vector<ParamView> views;
    for (auto& layer : layers) push_layer_views(layer, views);
    return views;
}

ResidualMlp::ResidualMlp(int input_dim, int width, int n_blocks, int output_dim)
    : stem(width, input_dim), head(output_dim, width) {
    if (width < 1) throw InvalidConfigError("ResidualMlp: width must be >= 1");
    if (n_blocks < 0) throw InvalidConfigError("ResidualMlp: block count must be >= 0");
    blocks.resize(n_blocks);
    for (auto& blk : blocks) {
        blk.first = DenseLayer(width, width);
        blk.second = DenseLayer(width, width);
    }
}

Mat ResidualMlp::forward(const Mat& X) {
    Mat h = stem.forward(X);
    for (auto& blk : blocks) {
        Mat z = blk.first.forward(h);
        blk.mask = (z.array() > 0.0).cast<double>();
        Mat u = z.cwiseMax(0.0);
        h += blk.second.forward(u);
    }
    return head.forward(h);
}

void ResidualMlp::backward(const Mat& d_output) {
    Mat dh = head.backward(d_output);
    for (std::size_t k = blocks.size(); k-- > 0;) {
        auto& blk = blocks[k];
        Mat du = blk.second.backward(dh);
        Mat dz = du.cwiseProduct(blk.mask);
        dh += blk.first.backward(dz);  // skip path adds the incoming gradient
    }
    stem.backward(dh);
}

void ResidualMlp::zero_grad() {
    stem.zero_grad();
    for (auto& blk : blocks) {
        blk.first.zero_grad();
        blk.second.zero_grad();
    }
    head.zero_grad();
}

std::vector<ParamView> ResidualMlp::params() {
    std::vector<ParamView> views;
    push_layer_views(stem, views);
    for (auto& blk : blocks) {
        push_layer_views(blk.first, views);
        push_layer_views(blk.second, views);
    }
    push_layer_views(head, views);
    return views;
}

void he_init(DenseLayer& layer, RandomStream& rng) {
    const double std_dev = std::sqrt(2.0 / layer.W.cols());
    for (int r = 0; r < layer.W.rows(); ++r)
        for (int c = 0; c < layer.W.cols(); ++c) layer.W(r, c) = std_dev * rng.gaussian();
    layer.b.setZero();
}

namespace {

class Adam {
public:
    Adam(double lr, const std::vector<ParamView>& views) : lr_(lr) {
        for (const auto& p : views) {
            m_.push_back(Vec::Zero(p.size));
            v_.push_back(Vec::Zero(p.size));
        }
    }

    void step(const std::vector<ParamView>& views) {
        ++t_;
        const double bias1 = 1.0 - std::pow(kBeta1, t_);
        const double bias2 = 1.0 - std::pow(kBeta2, t_);
        for (std::size_t i = 0; i < views.size(); ++i) {
            const auto& p = views[i];
            Eigen::Map<Vec> value(p.value, p.size);
            Eigen::Map<const Vec> grad(p.grad, p.size);
            m_[i] = kBeta1 * m_[i] + (1.0 - kBeta1) * grad;
            v_[i] = kBeta2 * v_[i] + (1.0 - kBeta2) * grad.cwiseProduct(grad);
            value.array() -=
                lr_ * (m_[i].array() / bias1) / ((v_[i].array() / bias2).sqrt() + kEps);
        }
    }

private:
    static constexpr double kBeta1 = 0.9;
    static constexpr double kBeta2 = 0.999;
    static constexpr double kEps = 1e-8;
    double lr_;
    long t_ = 0;
    std::vector<Vec> m_, v_;
};

double mse_loss(const Mat& Y, const Mat& T) {
    return (Y - T).squaredNorm() / T.cols();
}

std::vector<Vec> snapshot(const std::vector<ParamView>& views) {
    std::vector<Vec> copy;
    copy.reserve(views.size());
    for (const auto& p : views) copy.emplace_back(Eigen::Map<const Vec>(p.value, p.size));
    return copy;
}

void restore(const std::vector<ParamView>& views, const std::vector<Vec>& copy) {
    for (std::size_t i = 0; i < views.size(); ++i)
        Eigen::Map<Vec>(views[i].value, views[i].size) = copy[i];
}

}  // namespace

TrainLog train_mse(Network& net, const Mat& X, const Mat& T, const TrainOptions& options,
                   RandomStream& rng) {
    const int n = static_cast<int>(X.cols());
    if (n < 1) throw InvalidConfigError("train_mse: empty training set");
    if (options.epochs < 1) throw InvalidConfigError("train_mse: epochs must be >= 1");
    if (options.batch_size < 1) throw InvalidConfigError("train_mse: batch size must be >= 1");

    // Held-out validation slice for early stopping (none if it would empty
    // the fit set).
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    for (int i = n - 1; i > 0; --i)
        std::swap(perm[i], perm[static_cast<int>(rng.next_below(static_cast<std::uint64_t>(i) + 1))]);
    int n_val = static_cast<int>(std::llround(options.validation_fraction * n));
    n_val = std::clamp(n_val, 0, n - 1);
    const int n_fit = n - n_val;

    Mat X_fit(X.rows(), n_fit), T_fit(T.rows(), n_fit);
    Mat X_val(X.rows(), n_val), T_val(T.rows(), n_val);
    for (int i = 0; i < n_fit; ++i) {
        X_fit.col(i) = X.col(perm[i]);
        T_fit.col(i) = T.col(perm[i]);
    }
    for (int i = 0; i < n_val; ++i) {
        X_val.col(i) = X.col(perm[n_fit + i]);
        T_val.col(i) = T.col(perm[n_fit + i]);
    }

    auto views = net.params();
    Adam adam(options.learning_rate, views);

    TrainLog log;
    double best_val = std::numeric_limits<double>::infinity();
    std::vector<Vec> best_weights = snapshot(views);
    int stale_epochs = 0;

    std::vector<int> order(n_fit);
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 0; epoch < options.epochs; ++epoch) {
        for (int i = n_fit - 1; i > 0; --i)
            std::swap(order[i],
                      order[static_cast<int>(rng.next_below(static_cast<std::uint64_t>(i) + 1))]);

        for (int start = 0; start < n_fit; start += options.batch_size) {
            const int count = std::min(options.batch_size, n_fit - start);
            Mat xb(X.rows(), count), tb(T.rows(), count);
            for (int i = 0; i < count; ++i) {
                xb.col(i) = X_fit.col(order[start + i]);
                tb.col(i) = T_fit.col(order[start + i]);
            }
            net.zero_grad();
            Mat y = net.forward(xb);
            const double batch_loss = mse_loss(y, tb);
            if (!std::isfinite(batch_loss))
                throw NumericalError("train_mse: loss diverged at epoch " + std::to_string(epoch) +
                                     " (learning rate " + std::to_string(options.learning_rate) +
                                     ")");
            net.backward(2.0 * (y - tb) / count);
            adam.step(views);
        }

        const double train_loss = mse_loss(net.forward(X_fit), T_fit);
        if (!std::isfinite(train_loss))
            throw NumericalError("train_mse: loss diverged at epoch " + std::to_string(epoch) +
                                 " (learning rate " + std::to_string(options.learning_rate) + ")");
        log.epoch_train_loss.push_back(train_loss);
        log.epochs_run = epoch + 1;

        if (n_val > 0) {
            const double val_loss = mse_loss(net.forward(X_val), T_val);
            if (val_loss < best_val - 1e-12) {
                best_val = val_loss;
                best_weights = snapshot(views);
                log.best_epoch = epoch;
                stale_epochs = 0;
            } else if (++stale_epochs >= options.patience) {
                break;
            }
        } else {
            log.best_epoch = epoch;
        }
    }

    if (n_val > 0) restore(views, best_weights);
    return log;
}

}  // namespace gmmbench::nn
