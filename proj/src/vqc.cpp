#include "qtf/vqc.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>

#include "qtf/errors.hpp"

namespace qtf {

namespace {

constexpr double kPi = 3.14159265358979323846;

int qubits_for_dim(long rows) {
    if (rows < 1) throw InputError("feature vectors must be non-empty");
    int q = 1;
    while ((1L << q) < rows) ++q;
    return q;
}

/// Amplitude-encode into exactly 2^q real amplitudes (zero-padded).
VectorXd encode_real(const VectorXd& x, int q) {
    const long dim = 1L << q;
    if (x.size() > dim) {
        throw DimensionError("feature vector longer than the stage register");
    }
    if (!x.allFinite()) throw EncodingError("cannot encode non-finite values");
    const double norm = x.norm();
    if (norm <= 0.0) throw EncodingError("cannot encode the zero vector");
    VectorXd amps = VectorXd::Zero(dim);
    amps.head(x.size()) = x / norm;
    return amps;
}

/// P(qubit 0 = |1>) of a real statevector: odd-index mass.
double prob_first_qubit_one(const VectorXd& amps) {
    double p = 0.0;
    for (long i = 1; i < amps.size(); i += 2) p += amps(i) * amps(i);
    return p;
}

double run_p1(const AnsatzCircuit& circ, const VectorXd& encoded) {
    return prob_first_qubit_one(run_ansatz_real_from(circ, encoded));
}

/// Sum in ascending value order so the result is invariant under any
/// permutation of the inputs (full-batch determinism guarantee).
double deterministic_sum(std::vector<double>& vals) {
    std::sort(vals.begin(), vals.end());
    double s = 0.0;
    for (double v : vals) s += v;
    return s;
}

} // namespace

AnsatzCircuit BinaryVqcModel::circuit() const {
    AnsatzCircuit c;
    c.q = q;
    c.layers = layers;
    c.theta = theta;
    c.validate();
    return c;
}

double score(const BinaryVqcModel& model, const VectorXd& x) {
    if (model.mode != BinaryVqcModel::Mode::Trained) {
        // Constant stages sit strictly on the chosen side of the threshold.
        return model.mode == BinaryVqcModel::Mode::AlwaysAssign
                   ? model.threshold + 1.0
                   : model.threshold - 1.0;
    }
    return run_p1(model.circuit(), encode_real(x, model.q)) + model.bias;
}

BinaryVqcModel train_binary(const MatrixXd& z, const std::vector<int>& y01,
                            int class_id, const VqcConfig& config,
                            BinaryTrainReport* report) {
    const int n = static_cast<int>(z.cols());
    if (n == 0) throw InputError("train_binary: empty training set");
    if (static_cast<int>(y01.size()) != n) {
        throw DimensionError("train_binary: target count must match columns");
    }
    config.train.validate();
    if (config.layers < 1) throw ParameterError("layers must be >= 1");

    int n_pos = 0;
    for (int y : y01) {
        if (y != 0 && y != 1) throw InputError("binary targets must be 0 or 1");
        n_pos += y;
    }
    if (n_pos == 0 || n_pos == n) {
        throw DegenerateDataError("train_binary: pool contains a single class");
    }

    BinaryVqcModel model;
    model.class_id = class_id;
    model.q = qubits_for_dim(z.rows());
    model.layers = config.layers;
    model.threshold = static_cast<double>(n_pos) / n;

    const int p = model.layers * model.q;
    std::mt19937_64 rng(config.train.seed);
    std::uniform_real_distribution<double> init(-0.1, 0.1);
    model.theta.resize(p);
    for (int j = 0; j < p; ++j) model.theta(j) = init(rng);
    model.bias = 0.0;

    std::vector<VectorXd> encoded;
    encoded.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) encoded.push_back(encode_real(z.col(i), model.q));

    AnsatzCircuit circ = model.circuit();
    // theta followed by the bias, so one optimizer drives both.
    VectorXd params(p + 1);
    params.head(p) = model.theta;
    params(p) = model.bias;
    GradientOptimizer opt(config.train, p + 1);

    std::vector<double> residual(static_cast<size_t>(n));
    std::vector<double> scratch(static_cast<size_t>(n));
    VectorXd grad(p + 1);

    auto batch_loss = [&](const VectorXd& theta, double bias) {
        circ.theta = theta;
        double loss = 0.0;
        for (int i = 0; i < n; ++i) {
            const double r = run_p1(circ, encoded[static_cast<size_t>(i)]) + bias -
                             y01[static_cast<size_t>(i)];
            residual[static_cast<size_t>(i)] = r;
            loss += 0.5 * r * r;
        }
        return loss;
    };

    if (report) {
        report->degenerate_pool = false;
        report->loss.clear();
        report->loss.push_back(batch_loss(params.head(p), params(p)));
    }

    for (int epoch = 0; epoch < config.train.epochs; ++epoch) {
        // With a report attached the loss (and thus the residuals) for the
        // current parameters was already evaluated at the end of the
        // previous epoch / before the loop.
        if (!report) batch_loss(params.head(p), params(p));

        // d(loss)/d(theta_j) = sum_i residual_i * dP1_i/dtheta_j, with the
        // probability derivative from the two-point shift rule.
        circ.theta = params.head(p);
        for (int j = 0; j < p; ++j) {
            const double saved = circ.theta(j);
            circ.theta(j) = saved + 0.5 * kPi;
            for (int i = 0; i < n; ++i) {
                scratch[static_cast<size_t>(i)] =
                    run_p1(circ, encoded[static_cast<size_t>(i)]);
            }
            circ.theta(j) = saved - 0.5 * kPi;
            for (int i = 0; i < n; ++i) {
                const double dp1 =
                    0.5 * (scratch[static_cast<size_t>(i)] -
                           run_p1(circ, encoded[static_cast<size_t>(i)]));
                scratch[static_cast<size_t>(i)] = residual[static_cast<size_t>(i)] * dp1;
            }
            circ.theta(j) = saved;
            grad(j) = deterministic_sum(scratch);
        }
        std::copy(residual.begin(), residual.end(), scratch.begin());
        grad(p) = deterministic_sum(scratch);

        if (grad.cwiseAbs().maxCoeff() < 1e-9) break;
        opt.step(params, grad);

        if (report) report->loss.push_back(batch_loss(params.head(p), params(p)));
    }

    model.theta = params.head(p);
    model.bias = params(p);
    return model;
}

CascadeModel fit_cascade(const MatrixXd& z_source, const LabelVector& y_source,
                         const VqcConfig& config,
                         std::vector<BinaryTrainReport>* reports) {
    y_source.validate();
    const int n = static_cast<int>(z_source.cols());
    if (static_cast<int>(y_source.labels.size()) != n) {
        throw DimensionError("fit_cascade: label count must match columns");
    }
    const int c_total = y_source.num_classes;
    if (c_total < 2) throw InputError("fit_cascade: need at least 2 classes");

    CascadeModel model;
    model.class_order.resize(static_cast<size_t>(c_total));
    for (int c = 0; c < c_total; ++c) model.class_order[static_cast<size_t>(c)] = c + 1;
    if (reports) reports->clear();

    std::vector<int> pool(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) pool[static_cast<size_t>(i)] = i;

    for (int k = 0; k + 1 < c_total; ++k) {
        const int cls = model.class_order[static_cast<size_t>(k)];
        const int pool_n = static_cast<int>(pool.size());

        int n_pos = 0;
        for (int idx : pool) {
            if (y_source.labels[static_cast<size_t>(idx)] == cls) ++n_pos;
        }

        BinaryTrainReport local_report;
        if (pool_n == 0 || n_pos == 0 || n_pos == pool_n) {
            BinaryVqcModel stage;
            stage.class_id = cls;
            stage.mode = (pool_n > 0 && n_pos == pool_n)
                             ? BinaryVqcModel::Mode::AlwaysAssign
                             : BinaryVqcModel::Mode::NeverAssign;
            stage.threshold = pool_n > 0 ? static_cast<double>(n_pos) / pool_n : 0.0;
            local_report.degenerate_pool = true;
            model.stages.push_back(std::move(stage));
        } else {
            MatrixXd z_pool(z_source.rows(), pool_n);
            std::vector<int> y01(static_cast<size_t>(pool_n));
            for (int i = 0; i < pool_n; ++i) {
                const int idx = pool[static_cast<size_t>(i)];
                z_pool.col(i) = z_source.col(idx);
                y01[static_cast<size_t>(i)] =
                    y_source.labels[static_cast<size_t>(idx)] == cls ? 1 : 0;
            }
            VqcConfig stage_config = config;
            // Decorrelate stage initializations while keeping determinism.
            stage_config.train.seed =
                config.train.seed + 0x9e3779b97f4a7c15ull * static_cast<uint64_t>(k + 1);
            model.stages.push_back(
                train_binary(z_pool, y01, cls, stage_config, &local_report));
        }
        if (reports) reports->push_back(std::move(local_report));

        std::vector<int> next_pool;
        next_pool.reserve(pool.size());
        for (int idx : pool) {
            if (y_source.labels[static_cast<size_t>(idx)] != cls) next_pool.push_back(idx);
        }
        pool = std::move(next_pool);
    }
    return model;
}

LabelVector predict_cascade(const CascadeModel& model, const MatrixXd& z_target) {
    if (model.stages.empty()) throw InputError("predict_cascade: untrained model");
    LabelVector out;
    out.num_classes = model.num_classes();
    const int n = static_cast<int>(z_target.cols());
    out.labels.resize(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        int label = model.residual_class();
        for (const auto& stage : model.stages) {
            if (score(stage, z_target.col(i)) > stage.threshold) {
                label = stage.class_id;
                break;
            }
        }
        out.labels[static_cast<size_t>(i)] = label;
    }
    return out;
}

std::string serialize_cascade(const CascadeModel& model) {
    std::ostringstream os;
    auto num = [](double v) {
        char buf[40];
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        return std::string(buf);
    };
    os << "cascade_model v1\n";
    os << "classes " << model.num_classes() << "\n";
    os << "class_order";
    for (int c : model.class_order) os << " " << c;
    os << "\n";
    os << "stages " << model.stages.size() << "\n";
    for (size_t k = 0; k < model.stages.size(); ++k) {
        const auto& s = model.stages[k];
        os << "stage " << k << "\n";
        os << "class_id " << s.class_id << "\n";
        os << "mode " << static_cast<int>(s.mode) << "\n";
        os << "q " << s.q << "\n";
        os << "layers " << s.layers << "\n";
        os << "bias " << num(s.bias) << "\n";
        os << "threshold " << num(s.threshold) << "\n";
        os << "theta " << s.theta.size();
        for (long j = 0; j < s.theta.size(); ++j) os << " " << num(s.theta(j));
        os << "\n";
    }
    return os.str();
}

CascadeModel deserialize_cascade(const std::string& text) {
    std::istringstream is(text);
    std::string token;
    auto expect = [&](const std::string& want) {
        if (!(is >> token) || token != want) {
            throw DataError("cascade model parse error: expected '" + want + "'");
        }
    };
    expect("cascade_model");
    expect("v1");

    CascadeModel model;
    int classes = 0;
    expect("classes");
    if (!(is >> classes) || classes < 2) throw DataError("cascade model: bad class count");
    expect("class_order");
    model.class_order.resize(static_cast<size_t>(classes));
    for (int& c : model.class_order) {
        if (!(is >> c)) throw DataError("cascade model: bad class order");
    }
    size_t n_stages = 0;
    expect("stages");
    if (!(is >> n_stages)) throw DataError("cascade model: bad stage count");

    model.stages.resize(n_stages);
    for (size_t k = 0; k < n_stages; ++k) {
        auto& s = model.stages[k];
        size_t idx = 0;
        expect("stage");
        if (!(is >> idx) || idx != k) throw DataError("cascade model: bad stage index");
        int mode = 0;
        long p = 0;
        expect("class_id");
        if (!(is >> s.class_id)) throw DataError("cascade model: bad class id");
        expect("mode");
        if (!(is >> mode) || mode < 0 || mode > 2) {
            throw DataError("cascade model: bad stage mode");
        }
        s.mode = static_cast<BinaryVqcModel::Mode>(mode);
        expect("q");
        if (!(is >> s.q)) throw DataError("cascade model: bad qubit count");
        expect("layers");
        if (!(is >> s.layers)) throw DataError("cascade model: bad layer count");
        expect("bias");
        if (!(is >> s.bias)) throw DataError("cascade model: bad bias");
        expect("threshold");
        if (!(is >> s.threshold)) throw DataError("cascade model: bad threshold");
        expect("theta");
        if (!(is >> p) || p < 0) throw DataError("cascade model: bad theta length");
        s.theta.resize(p);
        for (long j = 0; j < p; ++j) {
            if (!(is >> s.theta(j))) throw DataError("cascade model: bad theta value");
        }
    }
    return model;
}

} // namespace qtf
