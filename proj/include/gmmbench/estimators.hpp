#pragma once

#include "gmmbench/nn_core.hpp"
#include "gmmbench/observation.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace gmmbench {

enum class EstimatorKind : std::uint32_t { Elm = 0, LayeredRfn = 1, Ffnn = 2, ResidualMlp = 3 };

std::string kind_name(EstimatorKind kind);
EstimatorKind kind_from_name(const std::string& name);

struct EstimatorSpec {
    EstimatorKind kind = EstimatorKind::Elm;
    std::string name;  // CSV/plot label; defaults to kind_name(kind)

    // elm / layered_rfn
    int hidden = 30;
    double ridge_lambda = 1e-2;
    int max_layers = 20;
    double layer_improvement_eps_db = 0.01;  // minimum validation gain to keep stacking

    // ffnn
    std::vector<int> hidden_sizes = {64, 128, 256, 256, 128, 64};

    // residual_mlp
    int residual_width = 64;
    int residual_blocks = 4;

    // gradient training (ffnn / residual_mlp)
    double learning_rate = 1e-3;
    int epochs = 200;
    int batch_size = 64;
    double validation_fraction = 0.1;
    int patience = 15;

    std::uint64_t seed = 0;

    void validate() const;  // throws InvalidConfigError
};

struct TrainingMeta {
    double final_train_nmse_db = 0.0;
    std::vector<double> epoch_losses;        // gradient-trained kinds
    std::vector<double> layer_val_nmse_db;   // layered_rfn
    int selected_layer = 0;                  // layered_rfn, 1-based
    long parameter_count = 0;
    bool standardized_inputs = false;        // no input standardization by default
};

// Learned weights plus training metadata. Tensor layout per kind:
//   elm:          W1 (h x P), b1 (h x 1), Wout (Q x (h+1))
//   layered_rfn:  W1, b1, ..., WL, bL, Wout (Q x (h+1))
//   ffnn:         W1, b1, ..., Wk, bk alternating
//   residual_mlp: Wstem, bstem, [Wa, ba, Wb, bb] per block, Whead, bhead
// Biases are stored as single-column matrices.
struct FittedEstimator {
    EstimatorKind kind = EstimatorKind::Elm;
    int input_dim = 0;
    int output_dim = 0;
    std::vector<Mat> tensors;
    TrainingMeta meta;
};

FittedEstimator fit_elm(const Dataset& train, const EstimatorSpec& spec);
FittedEstimator fit_layered_rfn(const Dataset& train, const EstimatorSpec& spec);
FittedEstimator fit_ffnn(const Dataset& train, const EstimatorSpec& spec);
FittedEstimator fit_residual_mlp(const Dataset& train, const EstimatorSpec& spec);

// Dispatches on spec.kind.
FittedEstimator fit(const Dataset& train, const EstimatorSpec& spec);

Vec predict(const FittedEstimator& estimator, const Vec& x);
// Column-wise loop of single predictions, so the batch form matches the
// single form exactly.
Mat predict(const FittedEstimator& estimator, const Mat& X);

// Untrained networks with the seeded initialization the fits start from.
nn::Mlp make_ffnn_net(const EstimatorSpec& spec, int input_dim, int output_dim,
                      RandomStream& rng);
nn::ResidualMlp make_residual_net(const EstimatorSpec& spec, int input_dim, int output_dim,
                                  RandomStream& rng);

// Versioned binary blob: magic "GMBEST01", kind tag, dims, tensor count, then
// each tensor as (rows u64, cols u64, row-major float64), all little-endian.
std::vector<unsigned char> serialize(const FittedEstimator& estimator);
FittedEstimator deserialize(const std::vector<unsigned char>& blob);

}  // namespace gmmbench
