#pragma once

#include "gmmbench/gmm_model.hpp"
#include "gmmbench/random.hpp"

#include <cstdint>
#include <vector>

namespace gmmbench::nn {

// Flat view of one parameter tensor and its gradient.
struct ParamView {
    double* value = nullptr;
    double* grad = nullptr;
    long size = 0;
};

class Network {
public:
    virtual ~Network() = default;

    // Columns of X are samples; caches activations for backward.
    virtual Mat forward(const Mat& X) = 0;

    // d(loss)/d(output) in, parameter gradients accumulate into the views.
    virtual void backward(const Mat& d_output) = 0;

    virtual void zero_grad() = 0;
    virtual std::vector<ParamView> params() = 0;

    long parameter_count() {
        long total = 0;
        for (const auto& p : params()) total += p.size;
        return total;
    }
};

struct DenseLayer {
    Mat W;  // out x in
    Vec b;
    Mat dW;
    Vec db;
    Mat input;  // cached forward input, in x n

    DenseLayer() = default;
    DenseLayer(int out, int in) : W(Mat::Zero(out, in)), b(Vec::Zero(out)),
                                  dW(Mat::Zero(out, in)), db(Vec::Zero(out)) {}

    Mat forward(const Mat& X) {
        input = X;
        return (W * X).colwise() + b;
    }
    // Returns d(loss)/d(input).
    Mat backward(const Mat& dZ) {
        dW += dZ * input.transpose();
        db += dZ.rowwise().sum();
        return W.transpose() * dZ;
    }
    void zero_grad() {
        dW.setZero();
        db.setZero();
    }
};

// Plain feedforward net: ReLU after every layer except the last.
class Mlp : public Network {
public:
    explicit Mlp(const std::vector<int>& dims);

    Mat forward(const Mat& X) override;
    void backward(const Mat& d_output) override;
    void zero_grad() override;
    std::vector<ParamView> params() override;

    std::vector<DenseLayer> layers;

private:
    std::vector<Mat> masks_;  // ReLU derivative per hidden layer
};

// Fully connected residual net: linear stem, identity-skip blocks
//   h <- h + W2 relu(W1 h + b1) + b2
// (width preserved), linear head. With the second block layers at zero the
// net is exactly head(stem(x)); with zero blocks it is a linear model.
class ResidualMlp : public Network {
public:
    struct Block {
        DenseLayer first;
        DenseLayer second;
        Mat mask;
    };

    ResidualMlp(int input_dim, int width, int blocks, int output_dim);

    Mat forward(const Mat& X) override;
    void backward(const Mat& d_output) override;
    void zero_grad() override;
    std::vector<ParamView> params() override;

    DenseLayer stem;
    std::vector<Block> blocks;
    DenseLayer head;
};

// He-normal weights (std sqrt(2/fan_in)), zero biases; entries drawn row by
// row so the sequence is part of the seed contract.
void he_init(DenseLayer& layer, RandomStream& rng);

struct TrainOptions {
    double learning_rate = 1e-3;
    int epochs = 200;
    int batch_size = 64;
    double validation_fraction = 0.1;
    int patience = 15;  // epochs without validation improvement before stopping
};

struct TrainLog {
    std::vector<double> epoch_train_loss;  // full-train MSE after each epoch
    int best_epoch = 0;
    int epochs_run = 0;
};

// Mini-batch Adam on mean-squared-error loss, with early stopping on a
// held-out validation slice (best-validation weights are restored). The
// stream drives the validation split and the per-epoch shuffles. Throws
// NumericalError if the loss turns non-finite.
TrainLog train_mse(Network& net, const Mat& X, const Mat& T, const TrainOptions& options,
                   RandomStream& rng);

}  // namespace gmmbench::nn
