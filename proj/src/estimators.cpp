#include "gmmbench/estimators.hpp"

#include "gmmbench/errors.hpp"
#include "gmmbench/metrics.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>
#include <string>

namespace gmmbench {

std::string kind_name(EstimatorKind kind) {
    switch (kind) {
        case EstimatorKind::Elm: return "elm";
        case EstimatorKind::LayeredRfn: return "layered_rfn";
        case EstimatorKind::Ffnn: return "ffnn";
        case EstimatorKind::ResidualMlp: return "residual_mlp";
    }
    return "unknown";
}

EstimatorKind kind_from_name(const std::string& name) {
    if (name == "elm") return EstimatorKind::Elm;
    if (name == "layered_rfn") return EstimatorKind::LayeredRfn;
    if (name == "ffnn") return EstimatorKind::Ffnn;
    if (name == "residual_mlp") return EstimatorKind::ResidualMlp;
    throw InvalidConfigError("unknown estimator kind '" + name + "'");
}

void EstimatorSpec::validate() const {
    if (hidden < 1) throw InvalidConfigError("estimator spec: hidden size must be >= 1");
    if (ridge_lambda < 0.0) throw InvalidConfigError("estimator spec: ridge lambda must be >= 0");
    if (max_layers < 1) throw InvalidConfigError("estimator spec: max layers must be >= 1");
    for (int h : hidden_sizes)
        if (h < 1) throw InvalidConfigError("estimator spec: hidden sizes must be >= 1");
    if (residual_width < 1) throw InvalidConfigError("estimator spec: residual width must be >= 1");
    if (residual_blocks < 0) throw InvalidConfigError("estimator spec: residual blocks must be >= 0");
    if (!(learning_rate > 0.0)) throw InvalidConfigError("estimator spec: learning rate must be > 0");
    if (epochs < 1) throw InvalidConfigError("estimator spec: epochs must be >= 1");
    if (batch_size < 1) throw InvalidConfigError("estimator spec: batch size must be >= 1");
    if (validation_fraction < 0.0 || validation_fraction >= 1.0)
        throw InvalidConfigError("estimator spec: validation fraction must lie in [0, 1)");
    if (patience < 1) throw InvalidConfigError("estimator spec: patience must be >= 1");
}

namespace {

void check_nonempty(const Dataset& train) {
    if (train.size() < 1) throw InvalidConfigError("fit: empty training set");
}

// Uniform(-1, 1) entries, row by row; the draw order is shared by fit_elm and
// fit_layered_rfn so a 1-layer RFN reduces to the ELM exactly.
void draw_random_layer(Mat& W, Vec& b, RandomStream& rng) {
    for (int r = 0; r < W.rows(); ++r)
        for (int c = 0; c < W.cols(); ++c) W(r, c) = rng.uniform_sym();
    for (int r = 0; r < b.size(); ++r) b(r) = rng.uniform_sym();
}

// Hidden features with a constant bias row appended.
Mat with_bias_row(const Mat& Z) {
    Mat phi(Z.rows() + 1, Z.cols());
    phi.topRows(Z.rows()) = Z;
    phi.bottomRows(1).setOnes();
    return phi;
}

// Ridge readout W (Q x f) minimizing ||W phi - T||_F^2 + lambda ||W_nonbias||_F^2.
// The bias row (last feature) is left unpenalized, so the readout is never
// worse on the training objective than the constant mean predictor.
Mat solve_ridge_readout(const Mat& features, const Mat& targets, double lambda) {
    Mat A = features * features.transpose();
    if (lambda > 0.0)
        for (int i = 0; i + 1 < A.rows(); ++i) A(i, i) += lambda;
    Eigen::LLT<Mat> llt(A);
    if (llt.info() != Eigen::Success)
        throw NumericalError("ridge readout: normal equations are singular; use ridge lambda > 0");
    return llt.solve(features * targets.transpose()).transpose();
}

double meta_train_nmse(const Mat& predictions, const Dataset& train) {
    double denom = 0.0;
    if (train.record.prior.M >= 1) {
        denom = signal_power(train.record.prior);
    } else {
        const Vec mean = train.targets.rowwise().mean();
        denom = (train.targets.colwise() - mean).squaredNorm() / train.size();
    }
    if (!(denom > 0.0)) return kNmseFloorDb;
    return nmse_db(predictions, train.targets, denom);
}

Mat column(const Vec& v) { return Eigen::Map<const Mat>(v.data(), v.size(), 1); }

long count_parameters(const std::vector<Mat>& tensors) {
    long total = 0;
    for (const Mat& t : tensors) total += static_cast<long>(t.size());
    return total;
}

}  // namespace

FittedEstimator fit_elm(const Dataset& train, const EstimatorSpec& spec) {
    spec.validate();
    check_nonempty(train);
    const int P = static_cast<int>(train.observations.rows());
    const int Q = static_cast<int>(train.targets.rows());

    Mat W1(spec.hidden, P);
    Vec b1(spec.hidden);
    RandomStream rng(spec.seed);
    draw_random_layer(W1, b1, rng);

    const Mat phi = with_bias_row((((W1 * train.observations).colwise() + b1)).cwiseMax(0.0));
    const Mat Wout = solve_ridge_readout(phi, train.targets, spec.ridge_lambda);

    FittedEstimator est;
    est.kind = EstimatorKind::Elm;
    est.input_dim = P;
    est.output_dim = Q;
    est.tensors = {W1, column(b1), Wout};
    est.meta.parameter_count = count_parameters(est.tensors);
    est.meta.final_train_nmse_db = meta_train_nmse(Wout * phi, train);
    return est;
}

FittedEstimator fit_layered_rfn(const Dataset& train, const EstimatorSpec& spec) {
    spec.validate();
    check_nonempty(train);
    const int P = static_cast<int>(train.observations.rows());
    const int Q = static_cast<int>(train.targets.rows());
    const int n = train.size();

    // Validation slice for layer selection; drawn from a derived stream so the
    // layer-weight draws stay aligned with fit_elm.
    RandomStream val_rng(derive_seed(spec.seed, 0, 0, "rfn_val"));
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    for (int i = n - 1; i > 0; --i)
        std::swap(perm[i],
                  perm[static_cast<int>(val_rng.next_below(static_cast<std::uint64_t>(i) + 1))]);
    const int n_val = std::clamp(static_cast<int>(std::llround(spec.validation_fraction * n)), 0, n - 1);
    const int n_fit = n - n_val;

    double denom = train.record.prior.M >= 1 ? signal_power(train.record.prior) : 0.0;
    if (!(denom > 0.0)) {
        const Vec mean = train.targets.rowwise().mean();
        denom = (train.targets.colwise() - mean).squaredNorm() / n;
        if (!(denom > 0.0)) denom = 1.0;
    }

    RandomStream weight_rng(spec.seed);
    std::vector<Mat> Ws;
    std::vector<Vec> bs;
    std::vector<double> val_scores;

    Mat activations = train.observations;  // input to the next random layer
    Mat best_features;                     // full-train features of the best layer
    int best_layer = 0;
    double best_val = std::numeric_limits<double>::infinity();

    for (int layer = 1; layer <= spec.max_layers; ++layer) {
        Mat W(spec.hidden, static_cast<int>(activations.rows()));
        Vec b(spec.hidden);
        draw_random_layer(W, b, weight_rng);
        Ws.push_back(W);
        bs.push_back(b);

        activations = ((W * activations).colwise() + b).cwiseMax(0.0);
        const Mat phi = with_bias_row(activations);

        Mat phi_fit(phi.rows(), n_fit), t_fit(Q, n_fit);
        for (int i = 0; i < n_fit; ++i) {
            phi_fit.col(i) = phi.col(perm[i]);
            t_fit.col(i) = train.targets.col(perm[i]);
        }
        const Mat Wout = solve_ridge_readout(phi_fit, t_fit, spec.ridge_lambda);

        double score;
        if (n_val > 0) {
            Mat phi_val(phi.rows(), n_val), t_val(Q, n_val);
            for (int i = 0; i < n_val; ++i) {
                phi_val.col(i) = phi.col(perm[n_fit + i]);
                t_val.col(i) = train.targets.col(perm[n_fit + i]);
            }
            score = nmse_db(Wout * phi_val, t_val, denom);
        } else {
            score = nmse_db(Wout * phi_fit, t_fit, denom);
        }
        val_scores.push_back(score);

        const double improvement = best_val - score;
        if (score < best_val) {
            best_val = score;
            best_layer = layer;
            best_features = phi;
        }
        // Greedy stop: the new layer failed to improve validation NMSE by eps.
        if (layer >= 2 && improvement < spec.layer_improvement_eps_db) break;
    }

    // Final readout refit on the full training set at the selected depth.
    const Mat Wout = solve_ridge_readout(best_features, train.targets, spec.ridge_lambda);

    FittedEstimator est;
    est.kind = EstimatorKind::LayeredRfn;
    est.input_dim = P;
    est.output_dim = Q;
    for (int l = 0; l < best_layer; ++l) {
        est.tensors.push_back(Ws[l]);
        est.tensors.push_back(column(bs[l]));
    }
    est.tensors.push_back(Wout);
    est.meta.parameter_count = count_parameters(est.tensors);
    est.meta.layer_val_nmse_db = val_scores;
    est.meta.selected_layer = best_layer;
    est.meta.final_train_nmse_db = meta_train_nmse(Wout * best_features, train);
    return est;
}

nn::Mlp make_ffnn_net(const EstimatorSpec& spec, int input_dim, int output_dim,
                      RandomStream& rng) {
    std::vector<int> dims;
    dims.push_back(input_dim);
    dims.insert(dims.end(), spec.hidden_sizes.begin(), spec.hidden_sizes.end());
    dims.push_back(output_dim);
    nn::Mlp net(dims);
    for (auto& layer : net.layers) nn::he_init(layer, rng);
    return net;
}

nn::ResidualMlp make_residual_net(const EstimatorSpec& spec, int input_dim, int output_dim,
                                  RandomStream& rng) {
    nn::ResidualMlp net(input_dim, spec.residual_width, spec.residual_blocks, output_dim);
    nn::he_init(net.stem, rng);
    for (auto& blk : net.blocks) {
        nn::he_init(blk.first, rng);
        blk.second.W.setZero();  // zero residual branches: net starts as head(stem(x))
        blk.second.b.setZero();
    }
    nn::he_init(net.head, rng);
    return net;
}

namespace {

nn::TrainOptions train_options(const EstimatorSpec& spec) {
    nn::TrainOptions opts;
    opts.learning_rate = spec.learning_rate;
    opts.epochs = spec.epochs;
    opts.batch_size = spec.batch_size;
    opts.validation_fraction = spec.validation_fraction;
    opts.patience = spec.patience;
    return opts;
}

FittedEstimator finish_gradient_fit(nn::Network& net, std::vector<nn::DenseLayer*> layers,
                                    EstimatorKind kind, const Dataset& train,
                                    nn::TrainLog log) {
    FittedEstimator est;
    est.kind = kind;
    est.input_dim = static_cast<int>(train.observations.rows());
    est.output_dim = static_cast<int>(train.targets.rows());
    for (auto* layer : layers) {
        est.tensors.push_back(layer->W);
        est.tensors.push_back(column(layer->b));
    }
    est.meta.parameter_count = count_parameters(est.tensors);
    est.meta.epoch_losses = std::move(log.epoch_train_loss);
    est.meta.final_train_nmse_db = meta_train_nmse(net.forward(train.observations), train);
    return est;
}

}  // namespace

FittedEstimator fit_ffnn(const Dataset& train, const EstimatorSpec& spec) {
    spec.validate();
    check_nonempty(train);
    RandomStream rng(spec.seed);
    nn::Mlp net = make_ffnn_net(spec, static_cast<int>(train.observations.rows()),
                                static_cast<int>(train.targets.rows()), rng);
    nn::TrainLog log = nn::train_mse(net, train.observations, train.targets, train_options(spec), rng);

    std::vector<nn::DenseLayer*> layers;
    for (auto& layer : net.layers) layers.push_back(&layer);
    return finish_gradient_fit(net, layers, EstimatorKind::Ffnn, train, std::move(log));
}

FittedEstimator fit_residual_mlp(const Dataset& train, const EstimatorSpec& spec) {
    spec.validate();
    check_nonempty(train);
    RandomStream rng(spec.seed);
    nn::ResidualMlp net = make_residual_net(spec, static_cast<int>(train.observations.rows()),
                                            static_cast<int>(train.targets.rows()), rng);
    nn::TrainLog log = nn::train_mse(net, train.observations, train.targets, train_options(spec), rng);

    std::vector<nn::DenseLayer*> layers;
    layers.push_back(&net.stem);
    for (auto& blk : net.blocks) {
        layers.push_back(&blk.first);
        layers.push_back(&blk.second);
    }
    layers.push_back(&net.head);
    return finish_gradient_fit(net, layers, EstimatorKind::ResidualMlp, train, std::move(log));
}

FittedEstimator fit(const Dataset& train, const EstimatorSpec& spec) {
    switch (spec.kind) {
        case EstimatorKind::Elm: return fit_elm(train, spec);
        case EstimatorKind::LayeredRfn: return fit_layered_rfn(train, spec);
        case EstimatorKind::Ffnn: return fit_ffnn(train, spec);
        case EstimatorKind::ResidualMlp: return fit_residual_mlp(train, spec);
    }
    throw InvalidConfigError("fit: unknown estimator kind");
}

Vec predict(const FittedEstimator& est, const Vec& x) {
    if (x.size() != est.input_dim)
        throw NumericalError("predict: input has dimension " + std::to_string(x.size()) +
                             ", estimator expects " + std::to_string(est.input_dim));

    const auto& T = est.tensors;
    switch (est.kind) {
        case EstimatorKind::Elm:
        case EstimatorKind::LayeredRfn: {
            const std::size_t n_layers = (T.size() - 1) / 2;
            Vec a = x;
            for (std::size_t l = 0; l < n_layers; ++l)
                a = (T[2 * l] * a + T[2 * l + 1].col(0)).cwiseMax(0.0);
            Vec phi(a.size() + 1);
            phi << a, 1.0;
            return T.back() * phi;
        }
        case EstimatorKind::Ffnn: {
            const std::size_t n_layers = T.size() / 2;
            Vec a = x;
            for (std::size_t l = 0; l < n_layers; ++l) {
                a = T[2 * l] * a + T[2 * l + 1].col(0);
                if (l + 1 < n_layers) a = a.cwiseMax(0.0);
            }
            return a;
        }
        case EstimatorKind::ResidualMlp: {
            const std::size_t n_blocks = (T.size() - 4) / 4;
            Vec h = T[0] * x + T[1].col(0);
            for (std::size_t k = 0; k < n_blocks; ++k) {
                const std::size_t base = 2 + 4 * k;
                const Vec u = (T[base] * h + T[base + 1].col(0)).cwiseMax(0.0);
                h += T[base + 2] * u + T[base + 3].col(0);
            }
            return T[T.size() - 2] * h + T[T.size() - 1].col(0);
        }
    }
    throw NumericalError("predict: unknown estimator kind");
}

Mat predict(const FittedEstimator& est, const Mat& X) {
    Mat out(est.output_dim, X.cols());
    for (int i = 0; i < X.cols(); ++i) out.col(i) = predict(est, Vec(X.col(i)));
    return out;
}

// --- serialization ---------------------------------------------------------

namespace {

constexpr char kMagic[9] = "GMBEST01";

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
}
void put_u64(std::vector<unsigned char>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
}
void put_f64(std::vector<unsigned char>& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    put_u64(out, bits);
}

struct Reader {
    const std::vector<unsigned char>& buf;
    std::size_t pos = 0;

    void need(std::size_t n) const {
        if (pos + n > buf.size()) throw IoError("estimator blob: truncated");
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(buf[pos + i]) << (8 * i);
        pos += 4;
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[pos + i]) << (8 * i);
        pos += 8;
        return v;
    }
    double f64() {
        const std::uint64_t bits = u64();
        double v;
        std::memcpy(&v, &bits, 8);
        return v;
    }
};

}  // namespace

std::vector<unsigned char> serialize(const FittedEstimator& est) {
    std::vector<unsigned char> out;
    out.insert(out.end(), kMagic, kMagic + 8);
    put_u32(out, static_cast<std::uint32_t>(est.kind));
    put_u32(out, static_cast<std::uint32_t>(est.input_dim));
    put_u32(out, static_cast<std::uint32_t>(est.output_dim));
    put_u32(out, static_cast<std::uint32_t>(est.tensors.size()));
    for (const Mat& t : est.tensors) {
        put_u64(out, static_cast<std::uint64_t>(t.rows()));
        put_u64(out, static_cast<std::uint64_t>(t.cols()));
        for (int r = 0; r < t.rows(); ++r)
            for (int c = 0; c < t.cols(); ++c) put_f64(out, t(r, c));
    }
    return out;
}

FittedEstimator deserialize(const std::vector<unsigned char>& blob) {
    Reader in{blob};
    in.need(8);
    if (std::memcmp(blob.data(), kMagic, 8) != 0)
        throw IoError("estimator blob: bad magic bytes");
    in.pos = 8;

    FittedEstimator est;
    const std::uint32_t kind = in.u32();
    if (kind > static_cast<std::uint32_t>(EstimatorKind::ResidualMlp))
        throw IoError("estimator blob: unknown kind tag " + std::to_string(kind));
    est.kind = static_cast<EstimatorKind>(kind);
    est.input_dim = static_cast<int>(in.u32());
    est.output_dim = static_cast<int>(in.u32());
    const std::uint32_t count = in.u32();
    est.tensors.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        const auto rows = static_cast<long>(in.u64());
        const auto cols = static_cast<long>(in.u64());
        if (rows < 0 || cols < 0 || rows * cols > (1L << 32))
            throw IoError("estimator blob: implausible tensor shape");
        Mat t(rows, cols);
        for (long r = 0; r < rows; ++r)
            for (long c = 0; c < cols; ++c) t(r, c) = in.f64();
        est.tensors.push_back(std::move(t));
    }
    est.meta.parameter_count = count_parameters(est.tensors);
    return est;
}

}  // namespace gmmbench
