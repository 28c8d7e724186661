#include "gmmbench/harness.hpp"

#include "gmmbench/errors.hpp"
#include "gmmbench/random.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

namespace gmmbench {

std::string experiment_name(ExperimentKind kind) {
    switch (kind) {
        case ExperimentKind::TrainSizeSweep: return "train_size_sweep";
        case ExperimentKind::SnrASweep: return "snr_a_sweep";
        case ExperimentKind::DimensionPSweep: return "dimension_p_sweep";
        case ExperimentKind::MismatchBSweep: return "mismatch_b_sweep";
    }
    return "unknown";
}

ExperimentKind experiment_from_name(const std::string& name) {
    if (name == "train_size_sweep") return ExperimentKind::TrainSizeSweep;
    if (name == "snr_a_sweep") return ExperimentKind::SnrASweep;
    if (name == "dimension_p_sweep") return ExperimentKind::DimensionPSweep;
    if (name == "mismatch_b_sweep") return ExperimentKind::MismatchBSweep;
    throw InvalidConfigError("unknown experiment '" + name + "'");
}

std::vector<double> default_grid(ExperimentKind kind) {
    switch (kind) {
        case ExperimentKind::TrainSizeSweep: return {300, 1000, 3000, 10000};
        case ExperimentKind::SnrASweep: return {0, 1, 2, 3, 5, 7, 9};
        case ExperimentKind::DimensionPSweep: return {5, 10, 15, 20, 25, 30, 35};
        case ExperimentKind::MismatchBSweep: return {0.01, 0.05, 0.2, 1, 5, 20};
    }
    return {};
}

void ExperimentConfig::validate() const {
    if (Q < 1) throw InvalidConfigError("config: Q must be >= 1");
    if (mean_layout == MeanLayout::Ring && Q < 2)
        throw InvalidConfigError("config: ring layout needs Q >= 2");
    if (P < 1) throw InvalidConfigError("config: P must be >= 1");
    if (M < 1) throw InvalidConfigError("config: M must be >= 1");
    if (a < 0.0) throw InvalidConfigError("config: a must be nonnegative");
    if (b <= 0.0) throw InvalidConfigError("config: b must be positive");
    if (n_total < 2) throw InvalidConfigError("config: n_total must be >= 2");
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw InvalidConfigError("config: train_fraction must lie in (0, 1)");
    if (mc_runs < 1) throw InvalidConfigError("config: mc_runs must be >= 1");
    if (threads < 0) throw InvalidConfigError("config: threads must be >= 0");
    if (h_entry_stddev < 0.0) throw InvalidConfigError("config: h_entry_stddev must be >= 0");

    if (grid.empty()) throw InvalidConfigError("config: sweep grid is empty");
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (!(grid[i] > grid[i - 1]))
            throw InvalidConfigError("config: sweep grid must be strictly increasing");

    const bool integer_grid = experiment == ExperimentKind::TrainSizeSweep ||
                              experiment == ExperimentKind::DimensionPSweep;
    for (double v : grid) {
        if (integer_grid && std::abs(v - std::llround(v)) > 1e-9)
            throw InvalidConfigError("config: this sweep needs an integer grid");
        if (experiment == ExperimentKind::TrainSizeSweep && v < 2)
            throw InvalidConfigError("config: train-size grid values must be >= 2");
        if (experiment == ExperimentKind::DimensionPSweep && v < 1)
            throw InvalidConfigError("config: dimension grid values must be >= 1");
        if (experiment == ExperimentKind::MismatchBSweep && v <= 0)
            throw InvalidConfigError("config: test noise powers must be positive");
        if (experiment == ExperimentKind::SnrASweep && v < 0)
            throw InvalidConfigError("config: a grid values must be nonnegative");
    }

    if (estimators.empty()) throw InvalidConfigError("config: no estimators configured");
    for (const auto& spec : estimators) {
        spec.validate();
        if (spec.name.rfind("mmse_bound", 0) == 0)
            throw InvalidConfigError("config: estimator name '" + spec.name + "' is reserved");
    }
    if (experiment == ExperimentKind::MismatchBSweep && train_b <= 0.0)
        throw InvalidConfigError("config: train_b must be positive");
}

namespace {

void run_tasks(int n_tasks, int threads_requested, const std::function<void(int)>& body) {
    int n_threads = threads_requested > 0 ? threads_requested
                                          : static_cast<int>(std::thread::hardware_concurrency());
    n_threads = std::clamp(n_threads, 1, std::max(1, n_tasks));

    if (n_threads == 1) {
        for (int i = 0; i < n_tasks; ++i) body(i);
        return;
    }

    std::atomic<int> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;

    auto worker = [&] {
        while (!failed.load()) {
            const int i = next.fetch_add(1);
            if (i >= n_tasks) break;
            try {
                body(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
                failed.store(true);
            }
        }
    };

    std::vector<std::thread> pool;
    for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

// Re-throws the active exception with sweep-point context, preserving type.
[[noreturn]] void rethrow_with_context(const std::string& context) {
    try {
        throw;
    } catch (const InvalidConfigError& e) {
        throw InvalidConfigError(context + e.what());
    } catch (const IoError& e) {
        throw IoError(context + e.what());
    } catch (const std::exception& e) {
        throw NumericalError(context + e.what());
    }
}

NmseRecord make_record(std::string estimator, const std::string& sweep_name, double sweep_value,
                       double snr, int run, int n_train, int n_test, double nmse, double power) {
    NmseRecord rec;
    rec.estimator = std::move(estimator);
    rec.sweep_name = sweep_name;
    rec.sweep_value = sweep_value;
    rec.snr_db = snr;
    rec.mc_run = run;
    rec.n_train = n_train;
    rec.n_test = n_test;
    rec.nmse_db = nmse;
    rec.signal_power = power;
    return rec;
}

// Fits every configured estimator on `train`, evaluates everything (oracle
// first) on `test`. Estimator seeds must already be set by the caller.
std::vector<NmseRecord> bench_point(const GmmPrior& prior, const NoiseModel& noise,
                                    const ObservationSystem& system, const Dataset& train,
                                    const Dataset& test, const std::vector<EstimatorSpec>& specs,
                                    const std::string& sweep_name, double sweep_value, double snr,
                                    int run) {
    const double power = signal_power(prior);
    std::vector<NmseRecord> records;
    records.reserve(specs.size() + 1);
    records.push_back(make_record(kOracleName, sweep_name, sweep_value, snr, run, train.size(),
                                  test.size(), oracle_nmse_db(prior, noise, system, test), power));
    for (const auto& spec : specs) {
        const FittedEstimator fitted = fit(train, spec);
        const double nmse = nmse_db(predict(fitted, test.observations), test.targets, power);
        records.push_back(make_record(spec.name, sweep_name, sweep_value, snr, run, train.size(),
                                      test.size(), nmse, power));
    }
    return records;
}

struct PointModel {
    GmmPrior prior;
    NoiseModel noise;
    int P = 0;
    int n_total = 0;
    double sweep_value = 0.0;
};

// Shared driver for the matched-statistics sweeps: fresh system and data per
// (sweep point, MC run), 70:30-style split, fit on train, evaluate on test.
SweepResult run_matched_sweep(const ExperimentConfig& config, const std::string& sweep_name,
                              const std::function<PointModel(int)>& model_at) {
    config.validate();
    const int n_points = static_cast<int>(config.grid.size());
    const int n_tasks = n_points * config.mc_runs;
    std::vector<std::vector<NmseRecord>> slots(n_tasks);

    run_tasks(n_tasks, config.threads, [&](int task) {
        const int point = task / config.mc_runs;
        const int run = task % config.mc_runs;
        const PointModel model = model_at(point);
        const std::string context = "[" + experiment_name(config.experiment) + " " + sweep_name +
                                    "=" + std::to_string(model.sweep_value) + " run " +
                                    std::to_string(run) + "] ";
        try {
            const auto sweep_idx = static_cast<std::uint64_t>(point);
            const auto run_idx = static_cast<std::uint64_t>(run);
            ObservationSystem system =
                config.h_entry_stddev > 0.0
                    ? draw_system(model.P, config.Q,
                                  derive_seed(config.seed, run_idx, sweep_idx, "system"),
                                  config.h_entry_stddev)
                    : draw_system(model.P, config.Q,
                                  derive_seed(config.seed, run_idx, sweep_idx, "system"));
            Dataset dataset =
                generate_dataset(model.prior, model.noise, system, model.n_total,
                                 derive_seed(config.seed, run_idx, sweep_idx, "data"));
            auto [train, test] = split(dataset, config.train_fraction,
                                       derive_seed(config.seed, run_idx, sweep_idx, "split"));

            std::vector<EstimatorSpec> specs = config.estimators;
            for (auto& spec : specs)
                spec.seed = derive_seed(config.seed, run_idx, sweep_idx, "est:" + spec.name);

            slots[task] = bench_point(model.prior, model.noise, system, train, test, specs,
                                      sweep_name, model.sweep_value,
                                      snr_db(model.prior, model.noise), run);
        } catch (...) {
            rethrow_with_context(context);
        }
    });

    SweepResult result;
    result.config = config;
    for (auto& slot : slots)
        result.records.insert(result.records.end(), slot.begin(), slot.end());
    return result;
}

GmmPrior base_prior(const ExperimentConfig& config, double scale_a) {
    return make_prior(config.Q, config.M, config.mean_layout, scale_a, config.mean_seed);
}

}  // namespace

SweepResult run_train_size_sweep(const ExperimentConfig& config) {
    const GmmPrior prior = base_prior(config, config.a);
    const NoiseModel noise = make_noise(config.P, config.b);
    return run_matched_sweep(config, "n_total", [&](int point) {
        PointModel model{prior, noise, config.P, static_cast<int>(config.grid[point]),
                         config.grid[point]};
        return model;
    });
}

SweepResult run_snr_a_sweep(const ExperimentConfig& config) {
    const NoiseModel noise = make_noise(config.P, config.b);
    return run_matched_sweep(config, "a", [&](int point) {
        PointModel model{base_prior(config, config.grid[point]), noise, config.P, config.n_total,
                         config.grid[point]};
        return model;
    });
}

SweepResult run_dimension_p_sweep(const ExperimentConfig& config) {
    const GmmPrior prior = base_prior(config, config.a);
    return run_matched_sweep(config, "P", [&](int point) {
        const int P = static_cast<int>(config.grid[point]);
        PointModel model{prior, make_noise(P, config.b), P, config.n_total, config.grid[point]};
        return model;
    });
}

SweepResult run_mismatch_b_sweep(const ExperimentConfig& config) {
    config.validate();

    // Training prior: either the configured a, or the a that realizes the
    // requested training SNR at noise power train_b.
    GmmPrior prior = base_prior(config, config.a);
    if (std::isfinite(config.train_snr_db))
        prior = base_prior(config, scale_for_snr_db(config.train_snr_db, prior, config.train_b));
    const NoiseModel train_noise = make_noise(config.P, config.train_b);
    const double power = signal_power(prior);

    const int n_points = static_cast<int>(config.grid.size());
    const int n_train = static_cast<int>(std::llround(config.n_total * config.train_fraction));
    const int n_test = config.n_total - n_train;
    if (n_train < 1 || n_test < 1)
        throw InvalidConfigError("config: n_total and train_fraction leave an empty split");

    // One task per MC run: estimators are fit once on training-b data and
    // reused across the whole test grid.
    std::vector<std::vector<std::vector<NmseRecord>>> slots(config.mc_runs);

    run_tasks(config.mc_runs, config.threads, [&](int run) {
        const std::string context = "[" + experiment_name(config.experiment) + " run " +
                                    std::to_string(run) + "] ";
        try {
            const auto run_idx = static_cast<std::uint64_t>(run);
            ObservationSystem system =
                config.h_entry_stddev > 0.0
                    ? draw_system(config.P, config.Q,
                                  derive_seed(config.seed, run_idx, 0, "system"),
                                  config.h_entry_stddev)
                    : draw_system(config.P, config.Q,
                                  derive_seed(config.seed, run_idx, 0, "system"));
            Dataset pool = generate_dataset(prior, train_noise, system, config.n_total,
                                            derive_seed(config.seed, run_idx, 0, "data"));
            auto [train, matched_test] =
                split(pool, config.train_fraction, derive_seed(config.seed, run_idx, 0, "split"));
            (void)matched_test;  // fresh test sets are drawn per grid point below

            std::vector<std::pair<std::string, FittedEstimator>> fitted;
            for (auto spec : config.estimators) {
                spec.seed = derive_seed(config.seed, run_idx, 0, "est:" + spec.name);
                fitted.emplace_back(spec.name, fit(train, spec));
            }
            const OracleCache train_cache = build_cache(prior, train_noise, system);

            slots[run].resize(n_points);
            for (int point = 0; point < n_points; ++point) {
                const double b_test = config.grid[point];
                const NoiseModel test_noise = make_noise(config.P, b_test);
                const Dataset test = generate_dataset(
                    prior, test_noise, system, n_test,
                    derive_seed(config.seed, run_idx, static_cast<std::uint64_t>(point),
                                "test_data"));
                const double snr = snr_db(prior, test_noise);

                auto& records = slots[run][point];
                records.push_back(make_record(kOracleName, "b_test", b_test, snr, run, n_train,
                                              n_test,
                                              oracle_nmse_db(prior, test_noise, system, test),
                                              power));
                Mat train_matched(config.Q, n_test);
                for (int i = 0; i < n_test; ++i)
                    train_matched.col(i) = mmse_estimate(train_cache, test.observations.col(i));
                records.push_back(make_record(kOracleTrainMatchedName, "b_test", b_test, snr, run,
                                              n_train, n_test,
                                              nmse_db(train_matched, test.targets, power), power));
                for (const auto& [name, estimator] : fitted) {
                    const double nmse =
                        nmse_db(predict(estimator, test.observations), test.targets, power);
                    records.push_back(
                        make_record(name, "b_test", b_test, snr, run, n_train, n_test, nmse, power));
                }
            }
        } catch (...) {
            rethrow_with_context(context);
        }
    });

    SweepResult result;
    result.config = config;
    for (int point = 0; point < n_points; ++point)
        for (int run = 0; run < config.mc_runs; ++run)
            result.records.insert(result.records.end(), slots[run][point].begin(),
                                  slots[run][point].end());
    return result;
}

SweepResult run_experiment(const ExperimentConfig& config) {
    switch (config.experiment) {
        case ExperimentKind::TrainSizeSweep: return run_train_size_sweep(config);
        case ExperimentKind::SnrASweep: return run_snr_a_sweep(config);
        case ExperimentKind::DimensionPSweep: return run_dimension_p_sweep(config);
        case ExperimentKind::MismatchBSweep: return run_mismatch_b_sweep(config);
    }
    throw InvalidConfigError("run_experiment: unknown experiment kind");
}

std::vector<std::string> audit_bound_dominance(const SweepResult& result, double slack_db) {
    std::map<std::pair<double, int>, std::vector<const NmseRecord*>> groups;
    for (const auto& rec : result.records) groups[{rec.sweep_value, rec.mc_run}].push_back(&rec);

    std::vector<std::string> violations;
    for (const auto& [key, members] : groups) {
        const NmseRecord* bound = nullptr;
        for (const auto* rec : members)
            if (rec->estimator == kOracleName) bound = rec;
        if (!bound) {
            violations.push_back("sweep value " + std::to_string(key.first) + " run " +
                                 std::to_string(key.second) + ": no oracle record");
            continue;
        }
        for (const auto* rec : members) {
            if (rec == bound) continue;
            if (bound->nmse_db > rec->nmse_db + slack_db) {
                std::ostringstream msg;
                msg << "bound dominance violated at sweep value " << key.first << " run "
                    << key.second << ": " << rec->estimator << " " << rec->nmse_db
                    << " dB beats oracle " << bound->nmse_db << " dB by more than " << slack_db
                    << " dB";
                violations.push_back(msg.str());
            }
        }
    }
    return violations;
}

// --- CSV -------------------------------------------------------------------

namespace {

constexpr const char* kCsvHeader =
    "experiment,sweep_name,sweep_value,snr_db,estimator,mc_run,n_train,n_test,nmse_db";

std::string format_double(double v) {
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

double parse_double_field(const std::string& s, const std::string& path) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw IoError(path + ": bad numeric field '" + s + "'");
    return v;
}

int parse_int_field(const std::string& s, const std::string& path) {
    int v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw IoError(path + ": bad integer field '" + s + "'");
    return v;
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return fields;
}

}  // namespace

void emit_csv(const SweepResult& result, const std::string& path) {
    if (result.records.empty()) throw InvalidConfigError("emit_csv: no records to write");
    std::ofstream out(path, std::ios::binary);  // binary: byte-stable newlines
    if (!out) throw IoError("emit_csv: cannot open '" + path + "' for writing");

    const std::string experiment = experiment_name(result.config.experiment);
    out << kCsvHeader << "\n";
    for (const auto& rec : result.records) {
        out << experiment << ',' << rec.sweep_name << ',' << format_double(rec.sweep_value) << ','
            << format_double(rec.snr_db) << ',' << rec.estimator << ',' << rec.mc_run << ','
            << rec.n_train << ',' << rec.n_test << ',' << format_double(rec.nmse_db) << "\n";
    }
    if (!out) throw IoError("emit_csv: write failed for '" + path + "'");
}

std::vector<NmseRecord> read_csv(const std::string& path, std::string* experiment_out) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("read_csv: cannot open '" + path + "'");

    std::string line;
    if (!std::getline(in, line)) throw IoError("read_csv: '" + path + "' is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kCsvHeader) throw IoError("read_csv: '" + path + "' has an unexpected header");

    std::vector<NmseRecord> records;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = split_fields(line);
        if (fields.size() != 9) throw IoError("read_csv: '" + path + "' has a malformed row");
        if (experiment_out && records.empty()) *experiment_out = fields[0];
        NmseRecord rec;
        rec.sweep_name = fields[1];
        rec.sweep_value = parse_double_field(fields[2], path);
        rec.snr_db = parse_double_field(fields[3], path);
        rec.estimator = fields[4];
        rec.mc_run = parse_int_field(fields[5], path);
        rec.n_train = parse_int_field(fields[6], path);
        rec.n_test = parse_int_field(fields[7], path);
        rec.nmse_db = parse_double_field(fields[8], path);
        records.push_back(std::move(rec));
    }
    return records;
}

void write_dataset_csv(const Dataset& dataset, int run_id, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("write_dataset_csv: cannot open '" + path + "'");

    const int P = static_cast<int>(dataset.observations.rows());
    const int Q = static_cast<int>(dataset.targets.rows());
    out << "run_id,sample_id";
    for (int p = 1; p <= P; ++p) out << ",x_" << p;
    for (int q = 1; q <= Q; ++q) out << ",t_" << q;
    out << "\n";
    for (int i = 0; i < dataset.size(); ++i) {
        out << run_id << ',' << i;
        for (int p = 0; p < P; ++p) out << ',' << format_double(dataset.observations(p, i));
        for (int q = 0; q < Q; ++q) out << ',' << format_double(dataset.targets(q, i));
        out << "\n";
    }
    if (!out) throw IoError("write_dataset_csv: write failed for '" + path + "'");
}

// --- config parsing ---------------------------------------------------------

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

double to_double(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const double v = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw InvalidConfigError("config: key '" + key + "' has a bad number '" + value + "'");
    }
}

long to_long(const std::string& key, const std::string& value) {
    const double v = to_double(key, value);
    if (std::abs(v - std::llround(v)) > 1e-9)
        throw InvalidConfigError("config: key '" + key + "' must be an integer, got '" + value + "'");
    return std::llround(v);
}

std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> items;
    std::size_t start = 0;
    while (start <= value.size()) {
        const std::size_t comma = value.find(',', start);
        const std::string item =
            trim(comma == std::string::npos ? value.substr(start)
                                            : value.substr(start, comma - start));
        if (!item.empty()) items.push_back(item);
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return items;
}

std::vector<double> to_double_list(const std::string& key, const std::string& value) {
    std::vector<double> out;
    for (const auto& item : split_list(value)) out.push_back(to_double(key, item));
    if (out.empty()) throw InvalidConfigError("config: key '" + key + "' has an empty list");
    return out;
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text) {
    std::map<std::string, std::string> keys;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw InvalidConfigError("config line " + std::to_string(line_no) +
                                     ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty())
            throw InvalidConfigError("config line " + std::to_string(line_no) +
                                     ": empty key or value");
        if (!keys.emplace(key, value).second)
            throw InvalidConfigError("config: duplicate key '" + key + "'");
    }

    for (const char* required : {"experiment", "Q", "P", "M", "mean_layout", "a", "b", "n_total",
                                 "train_fraction", "mc_runs", "grid", "estimators", "seed",
                                 "out_dir"})
        if (!keys.count(required))
            throw InvalidConfigError(std::string("config: missing required key '") + required + "'");

    ExperimentConfig cfg;
    EstimatorSpec elm_proto;
    elm_proto.kind = EstimatorKind::Elm;
    EstimatorSpec rfn_proto;
    rfn_proto.kind = EstimatorKind::LayeredRfn;
    EstimatorSpec ffnn_proto;
    ffnn_proto.kind = EstimatorKind::Ffnn;
    EstimatorSpec resmlp_proto;
    resmlp_proto.kind = EstimatorKind::ResidualMlp;
    std::vector<std::string> estimator_names;

    for (const auto& [key, value] : keys) {
        if (key == "experiment") cfg.experiment = experiment_from_name(value);
        else if (key == "Q") cfg.Q = static_cast<int>(to_long(key, value));
        else if (key == "P") cfg.P = static_cast<int>(to_long(key, value));
        else if (key == "M") cfg.M = static_cast<int>(to_long(key, value));
        else if (key == "mean_layout") {
            if (value == "ring") cfg.mean_layout = MeanLayout::Ring;
            else if (value == "random_sphere") cfg.mean_layout = MeanLayout::RandomSphere;
            else throw InvalidConfigError("config: mean_layout must be ring or random_sphere");
        } else if (key == "mean_seed") cfg.mean_seed = static_cast<std::uint64_t>(to_long(key, value));
        else if (key == "a") cfg.a = to_double(key, value);
        else if (key == "b") cfg.b = to_double(key, value);
        else if (key == "h_entry_stddev") cfg.h_entry_stddev = to_double(key, value);
        else if (key == "n_total") cfg.n_total = static_cast<int>(to_long(key, value));
        else if (key == "train_fraction") cfg.train_fraction = to_double(key, value);
        else if (key == "mc_runs") cfg.mc_runs = static_cast<int>(to_long(key, value));
        else if (key == "grid") cfg.grid = to_double_list(key, value);
        else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(to_long(key, value));
        else if (key == "out_dir") cfg.out_dir = value;
        else if (key == "train_b") cfg.train_b = to_double(key, value);
        else if (key == "train_snr_db") cfg.train_snr_db = to_double(key, value);
        else if (key == "threads") cfg.threads = static_cast<int>(to_long(key, value));
        else if (key == "average_domain") {
            if (value == "db") cfg.average_domain = AverageDomain::Db;
            else if (value == "linear") cfg.average_domain = AverageDomain::Linear;
            else throw InvalidConfigError("config: average_domain must be db or linear");
        } else if (key == "estimators") estimator_names = split_list(value);
        else if (key == "elm_hidden") elm_proto.hidden = static_cast<int>(to_long(key, value));
        else if (key == "elm_lambda") elm_proto.ridge_lambda = to_double(key, value);
        else if (key == "rfn_hidden") rfn_proto.hidden = static_cast<int>(to_long(key, value));
        else if (key == "rfn_lambda") rfn_proto.ridge_lambda = to_double(key, value);
        else if (key == "rfn_max_layers") rfn_proto.max_layers = static_cast<int>(to_long(key, value));
        else if (key == "rfn_eps_db") rfn_proto.layer_improvement_eps_db = to_double(key, value);
        else if (key == "rfn_val_fraction") rfn_proto.validation_fraction = to_double(key, value);
        else if (key == "ffnn_hidden_sizes") {
            ffnn_proto.hidden_sizes.clear();
            for (double v : to_double_list(key, value))
                ffnn_proto.hidden_sizes.push_back(static_cast<int>(v));
        } else if (key == "ffnn_lr") ffnn_proto.learning_rate = to_double(key, value);
        else if (key == "ffnn_epochs") ffnn_proto.epochs = static_cast<int>(to_long(key, value));
        else if (key == "ffnn_batch") ffnn_proto.batch_size = static_cast<int>(to_long(key, value));
        else if (key == "ffnn_patience") ffnn_proto.patience = static_cast<int>(to_long(key, value));
        else if (key == "ffnn_val_fraction") ffnn_proto.validation_fraction = to_double(key, value);
        else if (key == "resmlp_width") resmlp_proto.residual_width = static_cast<int>(to_long(key, value));
        else if (key == "resmlp_blocks") resmlp_proto.residual_blocks = static_cast<int>(to_long(key, value));
        else if (key == "resmlp_lr") resmlp_proto.learning_rate = to_double(key, value);
        else if (key == "resmlp_epochs") resmlp_proto.epochs = static_cast<int>(to_long(key, value));
        else if (key == "resmlp_batch") resmlp_proto.batch_size = static_cast<int>(to_long(key, value));
        else if (key == "resmlp_patience") resmlp_proto.patience = static_cast<int>(to_long(key, value));
        else throw InvalidConfigError("config: unknown key '" + key + "'");
    }

    for (const auto& name : estimator_names) {
        EstimatorSpec spec;
        switch (kind_from_name(name)) {
            case EstimatorKind::Elm: spec = elm_proto; break;
            case EstimatorKind::LayeredRfn: spec = rfn_proto; break;
            case EstimatorKind::Ffnn: spec = ffnn_proto; break;
            case EstimatorKind::ResidualMlp: spec = resmlp_proto; break;
        }
        spec.name = name;
        cfg.estimators.push_back(std::move(spec));
    }
    for (std::size_t i = 0; i < cfg.estimators.size(); ++i)
        for (std::size_t j = i + 1; j < cfg.estimators.size(); ++j)
            if (cfg.estimators[i].name == cfg.estimators[j].name)
                throw InvalidConfigError("config: duplicate estimator '" + cfg.estimators[i].name +
                                         "'");

    cfg.validate();
    return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidConfigError("cannot open config file '" + path + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_config_text(buffer.str());
}

}  // namespace gmmbench
