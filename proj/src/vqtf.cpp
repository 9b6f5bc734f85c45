#include "qtf/vqtf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <random>

#include <json.hpp>

#include "qtf/errors.hpp"
#include "real_circuit.hpp"

namespace qtf {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kDenominatorFloor = 1e-12;

// Flat gate list of the layered ansatz, for forward and reverse sweeps.
struct RealGate {
    bool is_ry = true;
    int target = 0;
    int param = 0;    // RY: index into theta
    int control = 0;  // CNOT only
};

std::vector<RealGate> ansatz_gates(int q, int layers) {
    std::vector<RealGate> gates;
    gates.reserve(static_cast<size_t>(layers) * (q > 1 ? 2 * q : q));
    for (int layer = 0; layer < layers; ++layer) {
        for (int qb = 0; qb < q; ++qb) {
            gates.push_back({true, qb, layer * q + qb, 0});
        }
        if (q > 1) {
            for (int qb = 0; qb < q; ++qb) {
                gates.push_back({false, (qb + 1) % q, 0, qb});
            }
        }
    }
    return gates;
}

VectorXd forward_state(const std::vector<RealGate>& gates, const VectorXd& theta,
                       long dim) {
    VectorXd amps = VectorXd::Zero(dim);
    amps(0) = 1.0;
    for (const auto& g : gates) {
        if (g.is_ry) {
            const double t = theta(g.param);
            detail::apply_ry(amps, g.target, std::cos(0.5 * t), std::sin(0.5 * t));
        } else {
            detail::apply_cnot(amps, g.control, g.target);
        }
    }
    return amps;
}

/// sum over basis pairs of b . (dRY/dtheta a), with dRY = 0.5*[[-s,-c],[c,-s]].
double ry_derivative_dot(const VectorXd& b, const VectorXd& a, int target,
                         double c, double s) {
    const auto dim = static_cast<long>(a.size());
    const long bit = 1L << target;
    double acc = 0.0;
    for (long base = 0; base < dim; ++base) {
        if (base & bit) continue;
        const long partner = base | bit;
        const double a0 = a(base);
        const double a1 = a(partner);
        acc += b(base) * (-s * a0 - c * a1) + b(partner) * (c * a0 - s * a1);
    }
    return 0.5 * acc;
}

/// Reverse sweep computing, for every cotangent vector b_m, the values
/// g_m(j) = b_m . (U_G..U_{j+1} dU_j/dtheta_j U_{j-1}..U_1 |0>). For a
/// quadratic form v^T H v the caller passes b = H v and doubles the result;
/// for a linear form c . v it passes b = c and uses it as-is.
std::vector<VectorXd> reverse_sweeps(const std::vector<RealGate>& gates,
                                     const VectorXd& theta, int param_count,
                                     const VectorXd& final_state,
                                     std::vector<VectorXd> bs) {
    std::vector<VectorXd> grads(bs.size(), VectorXd::Zero(param_count));
    VectorXd a = final_state;
    for (auto it = gates.rbegin(); it != gates.rend(); ++it) {
        const RealGate& g = *it;
        if (g.is_ry) {
            const double t = theta(g.param);
            const double c = std::cos(0.5 * t);
            const double s = std::sin(0.5 * t);
            detail::apply_ry(a, g.target, c, -s);  // transpose = RY(-theta)
            for (size_t m = 0; m < bs.size(); ++m) {
                grads[m](g.param) += ry_derivative_dot(bs[m], a, g.target, c, s);
            }
            for (auto& b : bs) detail::apply_ry(b, g.target, c, -s);
        } else {
            detail::apply_cnot(a, g.control, g.target);  // self-inverse
            for (auto& b : bs) detail::apply_cnot(b, g.control, g.target);
        }
    }
    return grads;
}

/// Deflation data staged for repeated evaluations within one level:
/// hb_states[i] = H_B psi_i, so overlaps are plain dot products.
struct PenaltyContext {
    std::vector<VectorXd> hb_states;
    std::vector<double> alphas;

    static PenaltyContext from(const DeflationSet& deflation, const MatrixXd& h_b) {
        PenaltyContext ctx;
        ctx.alphas = deflation.alphas;
        ctx.hb_states.reserve(deflation.states.size());
        for (const auto& psi : deflation.states) {
            if (psi.size() != h_b.rows()) {
                throw DimensionError("deflation state does not match register size");
            }
            ctx.hb_states.push_back(h_b * psi);
        }
        if (ctx.alphas.size() != ctx.hb_states.size()) {
            throw DimensionError("deflation alphas/states count mismatch");
        }
        return ctx;
    }
};

struct LossParts {
    double numerator = 0.0;
    double denominator = 0.0;
    double penalty = 0.0;

    double total() const {
        if (denominator <= kDenominatorFloor) {
            return std::numeric_limits<double>::infinity();
        }
        return numerator / denominator + penalty;
    }
    double rayleigh() const { return numerator / denominator; }
};

LossParts loss_parts(const HamiltonianPair& pair, const PenaltyContext& ctx,
                     bool literal_penalty, const VectorXd& v) {
    LossParts parts;
    parts.numerator = v.dot(pair.h_a * v);
    parts.denominator = v.dot(pair.h_b * v);
    if (literal_penalty) {
        double alpha_sum = 0.0;
        for (double a : ctx.alphas) alpha_sum += a;
        parts.penalty = alpha_sum * parts.denominator * parts.denominator;
    } else {
        for (size_t i = 0; i < ctx.hb_states.size(); ++i) {
            const double overlap = ctx.hb_states[i].dot(v);
            parts.penalty += ctx.alphas[i] * overlap * overlap;
        }
    }
    return parts;
}

VectorXd loss_grad(const std::vector<RealGate>& gates, const VectorXd& theta,
                   int param_count, const HamiltonianPair& pair,
                   const PenaltyContext& ctx, bool literal_penalty,
                   const VectorXd& v) {
    const VectorXd ha_v = pair.h_a * v;
    const VectorXd hb_v = pair.h_b * v;
    const double num = v.dot(ha_v);
    const double den = v.dot(hb_v);
    if (den <= kDenominatorFloor) {
        throw SingularityError("loss gradient requested at a vanishing denominator");
    }

    std::vector<VectorXd> bs{ha_v, hb_v};
    if (!literal_penalty && !ctx.hb_states.empty()) {
        VectorXd combo = VectorXd::Zero(v.size());
        for (size_t i = 0; i < ctx.hb_states.size(); ++i) {
            combo += 2.0 * ctx.alphas[i] * ctx.hb_states[i].dot(v) * ctx.hb_states[i];
        }
        bs.push_back(std::move(combo));
    }
    std::vector<VectorXd> sweeps =
        reverse_sweeps(gates, theta, param_count, v, std::move(bs));

    const VectorXd grad_num = 2.0 * sweeps[0];
    const VectorXd grad_den = 2.0 * sweeps[1];
    VectorXd grad = (grad_num * den - num * grad_den) / (den * den);
    if (literal_penalty) {
        double alpha_sum = 0.0;
        for (double a : ctx.alphas) alpha_sum += a;
        grad += 2.0 * alpha_sum * den * grad_den;
    } else if (sweeps.size() > 2) {
        grad += sweeps[2];
    }
    return grad;
}

struct LevelOutcome {
    VectorXd theta;
    VectorXd state;
    double loss = std::numeric_limits<double>::infinity();
    double rayleigh = 0.0;
    std::vector<double> trace;
    bool converged = false;
};

VectorXd draw_theta(std::mt19937_64& rng, int param_count, bool wide) {
    const double span = wide ? kPi : 0.1;
    std::uniform_real_distribution<double> dist(-span, span);
    VectorXd theta(param_count);
    for (int j = 0; j < param_count; ++j) theta(j) = dist(rng);
    return theta;
}

LevelOutcome optimize_level(const HamiltonianPair& pair, const PenaltyContext& ctx,
                            const EigensolveConfig& config,
                            const std::vector<RealGate>& gates, int param_count,
                            const VectorXd& init_theta) {
    LevelOutcome out;
    out.theta = init_theta;

    VectorXd v = forward_state(gates, out.theta, pair.h_a.rows());
    LossParts parts = loss_parts(pair, ctx, config.literal_penalty, v);
    double loss = parts.total();
    if (!std::isfinite(loss)) {
        // Caller re-draws the start; report the failure via +inf loss.
        return out;
    }
    out.trace.push_back(loss);

    TrainConfig train;
    train.learning_rate = config.learning_rate;
    train.optimizer = config.optimizer;
    GradientOptimizer opt(train, param_count);

    int rejects = 0;
    int stagnant = 0;
    VectorXd candidate = out.theta;
    for (int epoch = 0; epoch < config.epochs_per_level; ++epoch) {
        const VectorXd grad = loss_grad(gates, out.theta, param_count, pair, ctx,
                                        config.literal_penalty, v);
        candidate = out.theta;
        opt.step(candidate, grad);
        const VectorXd v_new = forward_state(gates, candidate, pair.h_a.rows());
        const LossParts parts_new = loss_parts(pair, ctx, config.literal_penalty, v_new);
        const double loss_new = parts_new.total();

        // A step is kept only when it does not increase the loss beyond
        // rounding; otherwise the parameters are restored and the optimizer
        // backtracks: accumulated momentum points uphill here, so it is
        // dropped and the step size halved before the next proposal.
        if (!(loss_new <= loss + 1e-9)) {
            out.trace.push_back(loss);
            if (++rejects >= 30) {
                out.converged = true;
                break;
            }
            train.learning_rate =
                std::max(0.5 * train.learning_rate, 1e-4 * config.learning_rate);
            opt = GradientOptimizer(train, param_count);
            continue;
        }
        rejects = 0;
        const double improvement = loss - loss_new;
        out.theta = candidate;
        v = v_new;
        parts = parts_new;
        loss = std::min(loss, loss_new);
        out.trace.push_back(loss);

        if (improvement <= config.convergence_tol * std::max(1.0, std::abs(loss))) {
            if (++stagnant >= 15) {
                out.converged = true;
                break;
            }
        } else {
            stagnant = 0;
        }
    }

    out.state = v;
    out.loss = loss;
    out.rayleigh = parts.rayleigh();
    return out;
}

} // namespace

int qubits_for(int n) {
    if (n < 1) throw ParameterError("operator dimension must be >= 1");
    int q = 1;
    while ((1L << q) < n) ++q;
    if (q > kMaxQubits) {
        throw ParameterError("operator dimension exceeds the register cap");
    }
    return q;
}

HamiltonianPair embed_pair(const MatrixXd& a, const MatrixXd& b, int q) {
    const int n = static_cast<int>(a.rows());
    if (a.cols() != n || b.rows() != n || b.cols() != n) {
        throw DimensionError("embed_pair: operators must be square and equal-sized");
    }
    if (q < 1 || q > kMaxQubits) throw ParameterError("embed_pair: invalid register size");
    const long dim = 1L << q;
    if (n > dim) throw ParameterError("embed_pair: operator larger than the register");

    HamiltonianPair pair;
    pair.n = n;
    pair.q = q;
    pair.pad_penalty = 10.0 * a.diagonal().cwiseAbs().maxCoeff();

    pair.h_a = MatrixXd::Zero(dim, dim);
    pair.h_b = MatrixXd::Zero(dim, dim);
    pair.h_a.topLeftCorner(n, n) = 0.5 * (a + a.transpose());
    pair.h_b.topLeftCorner(n, n) = 0.5 * (b + b.transpose());
    for (long i = n; i < dim; ++i) {
        pair.h_a(i, i) = pair.pad_penalty;
        pair.h_b(i, i) = 1.0;
    }
    return pair;
}

HamiltonianPair build_hamiltonians(const KernelBundle& bundle, int q) {
    MatrixXd a = bundle.k * bundle.l_q * bundle.k;
    a.diagonal().array() += bundle.mu;
    const MatrixXd b = bundle.k * bundle.m * bundle.k;
    return embed_pair(a, b, q);
}

double eigenstate_loss(const AnsatzCircuit& circ, const HamiltonianPair& pair,
                       const DeflationSet& deflation, bool literal_penalty) {
    circ.validate();
    if (circ.q != pair.q) throw DimensionError("ansatz register does not match pair");
    const auto gates = ansatz_gates(circ.q, circ.layers);
    const VectorXd v = forward_state(gates, circ.theta, pair.h_a.rows());
    const PenaltyContext ctx = PenaltyContext::from(deflation, pair.h_b);
    return loss_parts(pair, ctx, literal_penalty, v).total();
}

VectorXd eigenstate_loss_grad(const AnsatzCircuit& circ, const HamiltonianPair& pair,
                              const DeflationSet& deflation, bool literal_penalty) {
    circ.validate();
    if (circ.q != pair.q) throw DimensionError("ansatz register does not match pair");
    const auto gates = ansatz_gates(circ.q, circ.layers);
    const VectorXd v = forward_state(gates, circ.theta, pair.h_a.rows());
    const PenaltyContext ctx = PenaltyContext::from(deflation, pair.h_b);
    return loss_grad(gates, circ.theta, circ.param_count(), pair, ctx,
                     literal_penalty, v);
}

EigensolveResult solve_eigenstates(const HamiltonianPair& pair,
                                   const EigensolveConfig& config,
                                   const MatrixXd* warm_thetas) {
    if (config.d < 1 || config.d > pair.n) {
        throw ParameterError("solve_eigenstates: need 1 <= d <= n");
    }
    if (config.layers < 1) throw ParameterError("solve_eigenstates: layers must be >= 1");
    if (config.epochs_per_level < 1 || config.restarts < 1) {
        throw ParameterError("solve_eigenstates: epochs and restarts must be >= 1");
    }
    const int param_count = config.layers * pair.q;
    if (warm_thetas &&
        (warm_thetas->rows() != param_count || warm_thetas->cols() < config.d)) {
        throw DimensionError("solve_eigenstates: warm-start shape mismatch");
    }

    const auto gates = ansatz_gates(pair.q, config.layers);
    const double hb_norm = pair.h_b.norm();

    EigensolveResult result;
    result.eigvals.resize(config.d);
    result.w.resize(pair.n, config.d);
    result.thetas.resize(param_count, config.d);
    result.loss_traces.resize(static_cast<size_t>(config.d));

    DeflationSet deflation;
    for (int level = 0; level < config.d; ++level) {
        double alpha = config.alpha_deflate;
        if (alpha <= 0.0) {
            double scale = 1.0;
            for (double ev : deflation.eigvals) scale = std::max(scale, std::abs(ev));
            alpha = 10.0 * scale;
        }

        LevelOutcome best;
        for (int attempt = 0; attempt < 3; ++attempt) {
            std::fill(deflation.alphas.begin(), deflation.alphas.end(), alpha);
            const PenaltyContext ctx = PenaltyContext::from(deflation, pair.h_b);

            best = LevelOutcome{};
            for (int restart = 0; restart < config.restarts; ++restart) {
                std::mt19937_64 rng(config.seed +
                                    0x9e3779b97f4a7c15ull *
                                        static_cast<uint64_t>(level * 1021 +
                                                              attempt * 89 + restart + 1));
                VectorXd init;
                if (restart == 0 && attempt == 0 && warm_thetas) {
                    init = warm_thetas->col(level);
                } else {
                    init = draw_theta(rng, param_count, restart > 0);
                }
                LevelOutcome out =
                    optimize_level(pair, ctx, config, gates, param_count, init);
                for (int redraw = 0; redraw < 50 && !std::isfinite(out.loss); ++redraw) {
                    init = draw_theta(rng, param_count, true);
                    out = optimize_level(pair, ctx, config, gates, param_count, init);
                }
                if (out.loss < best.loss) best = std::move(out);
            }
            if (!std::isfinite(best.loss)) {
                throw SingularityError(
                    "solve_eigenstates: could not leave the denominator guard region");
            }

            double worst_overlap = 0.0;
            for (const auto& psi : deflation.states) {
                worst_overlap = std::max(
                    worst_overlap, std::abs(psi.dot(pair.h_b * best.state)));
            }
            if (hb_norm <= 0.0 || worst_overlap <= 0.05 * hb_norm) break;
            alpha *= 2.0;  // penalty too weak: repeat the level with more weight
        }

        result.eigvals(level) = best.rayleigh;
        result.thetas.col(level) = best.theta;
        result.loss_traces[static_cast<size_t>(level)] = best.trace;
        if (!best.converged) result.converged = false;

        for (const auto& psi : deflation.states) {
            result.max_b_overlap =
                std::max(result.max_b_overlap,
                         hb_norm > 0.0
                             ? std::abs(psi.dot(pair.h_b * best.state)) / hb_norm
                             : 0.0);
        }

        VectorXd col = best.state.head(pair.n);
        const double norm = col.norm();
        if (norm <= 0.0) {
            throw SingularityError("solve_eigenstates: extracted state has no active mass");
        }
        result.w.col(level) = col / norm;

        deflation.states.push_back(best.state);
        deflation.alphas.push_back(alpha);
        deflation.eigvals.push_back(best.rayleigh);
    }
    return result;
}

std::pair<LabelVector, VqtfHistory> vqtf_fit_predict(
    const DataMatrix& x, const LabelVector& y_source, const VqtfConfig& config,
    const IterationEvaluator& evaluator) {
    x.validate();
    y_source.validate();
    if (static_cast<int>(y_source.labels.size()) != x.n_source) {
        throw DimensionError("vqtf_fit_predict: labels must cover source samples");
    }
    if (config.t_iters < 1) throw ParameterError("t_iters must be >= 1");
    const int num_classes = y_source.num_classes;
    const int n = x.cols();
    const int q = qubits_for(n);

    KernelBundle bundle = make_kernel_bundle(x, config.kernel, std::nullopt, 0.0,
                                             config.mu, num_classes);
    bundle.kappa = config.kappa;

    EigensolveConfig eig = config.eig;
    eig.d = config.d;
    if (eig.seed == 0) eig.seed = config.seed + 1;

    LabelVector y_target = knn_predict(x.source(), y_source, x.target());

    LabelVector combined;
    combined.num_classes = num_classes;
    combined.labels.resize(static_cast<size_t>(n));

    VqtfHistory history;
    MatrixXd warm;
    for (int iter = 0; iter < config.t_iters; ++iter) {
        if (config.kappa > 0.0) {
            std::copy(y_source.labels.begin(), y_source.labels.end(),
                      combined.labels.begin());
            std::copy(y_target.labels.begin(), y_target.labels.end(),
                      combined.labels.begin() + x.n_source);
            refresh_conditional_matrices(bundle, combined, num_classes);
        }
        const HamiltonianPair pair = build_hamiltonians(bundle, q);
        const EigensolveResult eig_result =
            solve_eigenstates(pair, eig, warm.size() ? &warm : nullptr);
        warm = eig_result.thetas;

        const MatrixXd z = embed(bundle.k, eig_result.w);

        VqcConfig classifier = config.classifier;
        classifier.train.seed = config.seed + 7919ull * static_cast<uint64_t>(iter + 1);
        const CascadeModel cascade =
            fit_cascade(z.leftCols(x.n_source), y_source, classifier);
        LabelVector y_new = predict_cascade(cascade, z.rightCols(x.n_target));

        int changes = 0;
        for (size_t i = 0; i < y_new.labels.size(); ++i) {
            if (y_new.labels[i] != y_target.labels[i]) ++changes;
        }

        VqtfIterationRecord record;
        record.iter = iter;
        record.eigvals = eig_result.eigvals;
        record.loss_traces = eig_result.loss_traces;
        record.converged = eig_result.converged;
        record.label_changes = changes;
        if (evaluator) record.evaluator_metric = evaluator(y_new);
        history.iterations.push_back(std::move(record));

        y_target = std::move(y_new);
        if (changes == 0) break;  // pseudo-label fixed point reached
    }
    return {y_target, history};
}

std::string history_to_json(const VqtfHistory& history) {
    nlohmann::json records = nlohmann::json::array();
    for (const auto& rec : history.iterations) {
        for (long level = 0; level < rec.eigvals.size(); ++level) {
            const auto& trace = rec.loss_traces[static_cast<size_t>(level)];
            records.push_back({
                {"iter", rec.iter},
                {"level", level + 1},
                {"final_loss", trace.empty() ? 0.0 : trace.back()},
                {"rayleigh", rec.eigvals(level)},
                {"label_change_count", rec.label_changes},
            });
        }
    }
    return records.dump(2) + "\n";
}

} // namespace qtf
