#include "qtf/qblas.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include <json.hpp>

#include "qtf/errors.hpp"

namespace qtf {

namespace {

void check_symmetric(const MatrixXd& m, const char* name) {
    if (m.rows() != m.cols()) {
        throw DimensionError(std::string(name) + " must be square");
    }
    if (!m.isApprox(m.transpose(), 1e-10)) {
        throw InputError(std::string(name) + " must be symmetric");
    }
}

/// A^{-1/2} for positive definite A by the coupled Newton iteration
/// (Denman-Beavers): Y -> (Y + Z^{-1})/2, Z -> (Z + Y^{-1})/2, giving
/// Y -> A^{1/2}, Z -> A^{-1/2}. Deliberately avoids the eigendecomposition
/// so the proportionality check does not reuse the rebuild's own spectrum.
MatrixXd inverse_sqrt_pd(const MatrixXd& a) {
    const int n = static_cast<int>(a.rows());
    MatrixXd y = a;
    MatrixXd z = MatrixXd::Identity(n, n);
    for (int it = 0; it < 100; ++it) {
        const MatrixXd y_next = 0.5 * (y + z.partialPivLu().inverse());
        const MatrixXd z_next = 0.5 * (z + y.partialPivLu().inverse());
        const double delta = (y_next - y).norm();
        y = y_next;
        z = z_next;
        if (delta <= 1e-15 * std::max(1.0, y.norm())) break;
    }
    if (!((y * y - a).norm() <= 1e-8 * std::max(1.0, a.norm()))) {
        throw SingularityError("matrix inverse square root did not converge");
    }
    return 0.5 * (z + z.transpose());
}

double check_proportionality(const MatrixXd& rebuilt, const MatrixXd& target) {
    const double denom = target.squaredNorm();
    if (denom <= 0.0 || rebuilt.norm() <= 0.0) {
        throw VerificationError("spectral rebuild produced a zero operator");
    }
    const double scale = (rebuilt.cwiseProduct(target)).sum() / denom;
    const double dev = (rebuilt - scale * target).norm() / rebuilt.norm();
    if (!(dev <= 1e-8)) {
        std::ostringstream msg;
        msg << "spectral rebuild deviates from the direct product: relative "
            << "Frobenius error " << dev << " after optimal scaling";
        throw VerificationError(msg.str());
    }
    return dev;
}

} // namespace

SpectralBuild spectral_rebuild(SpectralKind kind, const SpectralInputs& inputs) {
    SpectralBuild build;
    build.kind = kind;

    if (kind == SpectralKind::B || kind == SpectralKind::A) {
        check_symmetric(inputs.k, "K");
        const MatrixXd& weight = kind == SpectralKind::B ? inputs.m : inputs.l0;
        check_symmetric(weight, kind == SpectralKind::B ? "M" : "L0");
        if (weight.rows() != inputs.k.rows()) {
            throw DimensionError("kernel and weight matrix sizes differ");
        }
        const double weight_trace = weight.trace();
        if (std::abs(weight_trace) <= 0.0) {
            throw InputError("weight operator has zero trace; cannot normalize");
        }
        const MatrixXd rho_w = weight / weight_trace;

        Eigen::SelfAdjointEigenSolver<MatrixXd> es(inputs.k);
        if (es.info() != Eigen::Success) {
            throw SingularityError("kernel eigendecomposition failed");
        }
        build.basis = es.eigenvectors();
        build.eigenvalues = es.eigenvalues();

        const double lam_max = build.eigenvalues.cwiseAbs().maxCoeff();
        if (lam_max <= 0.0) throw InputError("kernel matrix is zero");
        build.gamma = inputs.gamma > 0.0 ? inputs.gamma : 0.9 / lam_max;
        if (build.gamma * lam_max > 1.0 + 1e-12) {
            throw ParameterError("gamma * lambda_max exceeds the arcsin domain");
        }

        // <u_i|rho_w|u_j> scaled by gamma^2 lambda_i lambda_j, reassembled
        // in the eigenbasis.
        MatrixXd coeff = build.basis.transpose() * rho_w * build.basis;
        const double g2 = build.gamma * build.gamma;
        for (long i = 0; i < coeff.rows(); ++i) {
            for (long j = 0; j < coeff.cols(); ++j) {
                coeff(i, j) *= g2 * build.eigenvalues(i) * build.eigenvalues(j);
            }
        }
        const MatrixXd raw = build.basis * coeff * build.basis.transpose();

        // P = sum_ij |gamma^2 lambda_i lambda_j|^2 = gamma^4 (sum lambda^2)^2.
        const double lam_sq = build.eigenvalues.squaredNorm();
        build.success_prob = g2 * g2 * lam_sq * lam_sq;
        build.result = raw / std::sqrt(build.success_prob);

        const MatrixXd target = inputs.k * weight * inputs.k;
        build.proportionality_dev = check_proportionality(build.result, target);
        return build;
    }

    // Kind G: reference spectrum comes from A, the sandwiched operator is B.
    check_symmetric(inputs.a, "A");
    check_symmetric(inputs.b, "B");
    if (inputs.b.rows() != inputs.a.rows()) {
        throw DimensionError("A and B sizes differ");
    }
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(inputs.a);
    if (es.info() != Eigen::Success) {
        throw SingularityError("reference eigendecomposition failed");
    }
    build.basis = es.eigenvectors();
    build.eigenvalues = es.eigenvalues();
    const double lam_min = build.eigenvalues.minCoeff();
    const double lam_max = build.eigenvalues.maxCoeff();
    if (lam_min <= 1e-12 * std::max(1.0, lam_max)) {
        throw SingularityError("reference matrix must be positive definite");
    }

    // Rotation amplitudes are gamma / sqrt(lambda_i), so the domain bound is
    // sqrt(lambda_min); the default keeps the usual 0.9 safety margin.
    build.gamma = inputs.gamma > 0.0 ? inputs.gamma : 0.9 * std::sqrt(lam_min);
    if (build.gamma > std::sqrt(lam_min) * (1.0 + 1e-12)) {
        throw ParameterError("gamma / sqrt(lambda_min) exceeds the arcsin domain");
    }

    const double b_trace = inputs.b.trace();
    if (std::abs(b_trace) <= 0.0) {
        throw InputError("B operator has zero trace; cannot normalize");
    }
    const MatrixXd rho_b = inputs.b / b_trace;

    MatrixXd coeff = build.basis.transpose() * rho_b * build.basis;
    const double g2 = build.gamma * build.gamma;
    double inv_sqrt_sum = 0.0;
    for (long i = 0; i < build.eigenvalues.size(); ++i) {
        inv_sqrt_sum += 1.0 / std::sqrt(build.eigenvalues(i));
    }
    for (long i = 0; i < coeff.rows(); ++i) {
        for (long j = 0; j < coeff.cols(); ++j) {
            coeff(i, j) *= g2 / std::sqrt(build.eigenvalues(i) * build.eigenvalues(j));
        }
    }
    const MatrixXd raw = build.basis * coeff * build.basis.transpose();

    // P = |sum_ij gamma^2 (lambda_i lambda_j)^{-1/2}|^2
    //   = gamma^4 (sum_i lambda_i^{-1/2})^4.
    build.success_prob = g2 * g2 * std::pow(inv_sqrt_sum, 4);
    build.result = raw / std::sqrt(build.success_prob);

    const MatrixXd a_inv_sqrt = inverse_sqrt_pd(inputs.a);
    const MatrixXd target = a_inv_sqrt * inputs.b * a_inv_sqrt;
    build.proportionality_dev = check_proportionality(build.result, target);
    return build;
}

double fidelity_distance(const VectorXd& x, const VectorXd& y) {
    if (x.size() != y.size()) throw DimensionError("fidelity_distance: size mismatch");
    const double nx = x.norm();
    const double ny = y.norm();
    if (nx <= 0.0 || ny <= 0.0) {
        throw InputError("fidelity_distance: zero vector");
    }
    const double overlap = std::min(1.0, std::abs(x.dot(y)) / (nx * ny));
    return std::sqrt(std::max(0.0, 2.0 - 2.0 * overlap));
}

LabelVector qknn_predict(const MatrixXd& z_source, const LabelVector& y_source,
                         const MatrixXd& z_target, int k) {
    const int n_s = static_cast<int>(z_source.cols());
    const int n_t = static_cast<int>(z_target.cols());
    if (n_s == 0) throw InputError("qknn_predict: empty source set");
    if (z_source.rows() != z_target.rows()) {
        throw DimensionError("qknn_predict: source/target feature dims differ");
    }
    if (static_cast<int>(y_source.labels.size()) != n_s) {
        throw DimensionError("qknn_predict: label count must match source columns");
    }
    if (k < 1 || k > n_s) throw ParameterError("qknn_predict: need 1 <= k <= n_s");

    LabelVector out;
    out.num_classes = y_source.num_classes;
    out.labels.resize(static_cast<size_t>(n_t));

    std::vector<std::pair<double, int>> dist(static_cast<size_t>(n_s));
    for (int t = 0; t < n_t; ++t) {
        for (int s = 0; s < n_s; ++s) {
            dist[static_cast<size_t>(s)] = {
                fidelity_distance(z_source.col(s), z_target.col(t)), s};
        }
        std::partial_sort(dist.begin(), dist.begin() + k, dist.end());
        if (k == 1) {
            out.labels[static_cast<size_t>(t)] =
                y_source.labels[static_cast<size_t>(dist[0].second)];
            continue;
        }
        std::map<int, int> votes;
        for (int i = 0; i < k; ++i) {
            ++votes[y_source.labels[static_cast<size_t>(dist[static_cast<size_t>(i)].second)]];
        }
        int best_label = 0;
        int best_count = -1;
        for (int i = 0; i < k; ++i) {
            const int lab =
                y_source.labels[static_cast<size_t>(dist[static_cast<size_t>(i)].second)];
            if (votes[lab] > best_count) {
                best_count = votes[lab];
                best_label = lab;
            }
        }
        out.labels[static_cast<size_t>(t)] = best_label;
    }
    return out;
}

std::pair<LabelVector, ProjectionResult> qblas_tf_reference(
    const DataMatrix& x, const LabelVector& y_source, const QblasConfig& config,
    QblasHistory* history, const IterationEvaluator& evaluator) {
    x.validate();
    y_source.validate();
    if (static_cast<int>(y_source.labels.size()) != x.n_source) {
        throw DimensionError("qblas_tf_reference: labels must cover source samples");
    }
    if (config.t_iters < 0) throw ParameterError("t_iters must be >= 0");
    if (config.d < 1) throw ParameterError("d must be >= 1");

    const int num_classes = y_source.num_classes;
    LabelVector y_target = qknn_predict(x.source(), y_source, x.target());

    ProjectionResult proj;
    if (config.t_iters == 0) {
        if (history && evaluator) {
            history->evaluator_metric.push_back(evaluator(y_target));
        }
        return {y_target, proj};
    }

    KernelBundle bundle = make_kernel_bundle(x, config.kernel, std::nullopt, 0.0,
                                             config.mu, num_classes);
    bundle.kappa = config.kappa;
    const int n = x.cols();
    const MatrixXd b_mat = bundle.k * bundle.m * bundle.k;

    LabelVector combined;
    combined.num_classes = num_classes;
    combined.labels.resize(static_cast<size_t>(n));

    for (int iter = 0; iter < config.t_iters; ++iter) {
        if (bundle.kappa > 0.0) {
            std::copy(y_source.labels.begin(), y_source.labels.end(),
                      combined.labels.begin());
            std::copy(y_target.labels.begin(), y_target.labels.end(),
                      combined.labels.begin() + x.n_source);
            refresh_conditional_matrices(bundle, combined, num_classes);
        }
        MatrixXd a_mat = bundle.k * bundle.l_q * bundle.k;
        a_mat.diagonal().array() += bundle.mu;

        SpectralInputs si;
        si.a = a_mat;
        si.b = b_mat;
        si.gamma = config.gamma3;
        const SpectralBuild build = spectral_rebuild(SpectralKind::G, si);

        Eigen::SelfAdjointEigenSolver<MatrixXd> es_g(build.result);
        if (es_g.info() != Eigen::Success) {
            throw SingularityError("rho_G eigendecomposition failed");
        }
        const double rho_max = es_g.eigenvalues().maxCoeff();

        MatrixXd u(n, config.d);
        proj.eigvals.resize(config.d);
        if (config.order == EigenOrder::SmallestOfPair) {
            // The objective minimizers are the LARGEST rho_G eigenpairs
            // (rho_G's spectrum is the inverted image of the pair's);
            // spectrum sampling reaches them without any shift.
            for (int i = 0; i < config.d; ++i) {
                u.col(i) = es_g.eigenvectors().col(n - 1 - i);
                proj.eigvals(i) = es_g.eigenvalues()(n - 1 - i);
            }
        } else {
            const double eta = config.eta > 0.0 ? config.eta : 1.1 * rho_max;
            if (eta <= rho_max) {
                throw ParameterError(
                    "eta must exceed the largest rho_G eigenvalue");
            }

            // The shifted operator turns the smallest rho_G eigenvalues into
            // the largest of eta*I - rho_G; decompose it literally.
            const MatrixXd g_hat =
                eta * MatrixXd::Identity(n, n) - build.result;
            Eigen::SelfAdjointEigenSolver<MatrixXd> es_hat(g_hat);
            if (es_hat.info() != Eigen::Success) {
                throw SingularityError(
                    "shifted operator eigendecomposition failed");
            }

            // Columns of es_hat ascend, so the wanted vectors sit at the
            // top; optionally skip directions whose rho_G eigenvalue is
            // numerically zero (they carry no spectrum-sampling
            // probability).
            const double null_floor = 1e-10 * std::max(rho_max, 1e-300);
            int taken = 0;
            for (int idx = n - 1; idx >= 0 && taken < config.d; --idx) {
                const double rho_eig = eta - es_hat.eigenvalues()(idx);
                if (config.drop_null_space && rho_eig < null_floor) continue;
                u.col(taken) = es_hat.eigenvectors().col(idx);
                proj.eigvals(taken) = rho_eig;
                ++taken;
            }
            if (taken < config.d) {
                throw SingularityError(
                    "rho_G support too small for the requested embedding "
                    "dimension");
            }
        }

        // The extracted eigenvectors are used as the transformation matrix
        // directly; they are orthonormal, so at d = n the embedding is a
        // rotation of the kernel rows and the fidelity classifier sees the
        // same geometry it would on unprojected data.
        proj.w = u;
        proj.z = embed(bundle.k, proj.w);
        proj.iterations_used = iter + 1;

        y_target = qknn_predict(proj.z.leftCols(x.n_source), y_source,
                                proj.z.rightCols(x.n_target));

        if (history) {
            history->pseudo_labels.push_back(y_target);
            history->selected_eigvals.push_back(proj.eigvals);
            if (evaluator) history->evaluator_metric.push_back(evaluator(y_target));
        }
    }
    return {y_target, proj};
}

ComplexityReport resource_report(const MatrixXd& k, const MatrixXd& a,
                                 double epsilon) {
    check_symmetric(k, "K");
    check_symmetric(a, "A");
    if (epsilon <= 0.0) throw ParameterError("epsilon must be > 0");

    auto condition_of = [](const MatrixXd& m) {
        Eigen::SelfAdjointEigenSolver<MatrixXd> es(m, Eigen::EigenvaluesOnly);
        const VectorXd abs_ev = es.eigenvalues().cwiseAbs();
        const double hi = abs_ev.maxCoeff();
        const double lo = abs_ev.minCoeff();
        if (hi <= 0.0) return std::numeric_limits<double>::infinity();
        if (lo <= 0.0) return std::numeric_limits<double>::infinity();
        return std::max(1.0, hi / lo);
    };

    ComplexityReport report;
    report.kappa_k = condition_of(k);
    report.kappa_a = condition_of(a);
    report.epsilon = epsilon;
    report.n = static_cast<int>(k.rows());

    const double log_n = std::log(std::max(2.0, static_cast<double>(report.n)));
    const double eps3 = epsilon * epsilon * epsilon;
    report.stages = {
        {"state_prep_B", "kappa_K^4 * log(n) / eps^3",
         std::pow(report.kappa_k, 4) * log_n / eps3},
        {"state_prep_A", "kappa_K^4 * log(n) / eps^3",
         std::pow(report.kappa_k, 4) * log_n / eps3},
        {"state_prep_G", "kappa_A^4 * log(n) / eps^3",
         std::pow(report.kappa_a, 4) * log_n / eps3},
        {"nearest_neighbor_search", "sqrt(n)",
         std::sqrt(static_cast<double>(report.n))},
    };
    return report;
}

std::string report_to_json(const ComplexityReport& report) {
    auto num = [](double v) -> nlohmann::json {
        if (std::isinf(v)) return "inf";
        return v;
    };
    nlohmann::json j{
        {"units", "asymptotic formula values, not wall-clock"},
        {"n", report.n},
        {"epsilon", report.epsilon},
        {"kappa_K", num(report.kappa_k)},
        {"kappa_A", num(report.kappa_a)},
        {"stages", nlohmann::json::array()},
    };
    for (const auto& s : report.stages) {
        j["stages"].push_back(
            {{"name", s.name}, {"formula", s.formula}, {"value", num(s.value)}});
    }
    return j.dump(2) + "\n";
}

} // namespace qtf
