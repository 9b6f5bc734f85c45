#include "qtf/dda.hpp"

#include <algorithm>
#include <map>

#include "qtf/errors.hpp"

namespace qtf {

LabelVector knn_predict(const MatrixXd& z_source, const LabelVector& y_source,
                        const MatrixXd& z_target, int k) {
    const int n_s = static_cast<int>(z_source.cols());
    const int n_t = static_cast<int>(z_target.cols());
    if (n_s == 0) throw InputError("knn_predict: empty source set");
    if (z_source.rows() != z_target.rows()) {
        throw DimensionError("knn_predict: source/target feature dims differ");
    }
    if (static_cast<int>(y_source.labels.size()) != n_s) {
        throw DimensionError("knn_predict: label count must match source columns");
    }
    if (k < 1 || k > n_s) throw ParameterError("knn_predict: need 1 <= k <= n_s");

    LabelVector out;
    out.num_classes = y_source.num_classes;
    out.labels.resize(static_cast<size_t>(n_t));

    std::vector<std::pair<double, int>> dist(static_cast<size_t>(n_s));
    for (int t = 0; t < n_t; ++t) {
        for (int s = 0; s < n_s; ++s) {
            dist[static_cast<size_t>(s)] = {
                (z_source.col(s) - z_target.col(t)).squaredNorm(), s};
        }
        // Sorting by (distance, index) makes the lowest index win exact ties.
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
            const int cnt = votes[lab];
            // Iterating in neighbor order means a vote tie falls to the
            // label whose closest representative is nearest.
            if (cnt > best_count) {
                best_count = cnt;
                best_label = lab;
            }
        }
        out.labels[static_cast<size_t>(t)] = best_label;
    }
    return out;
}

double DdaConfig::effective_kappa() const {
    switch (variant) {
        case DdaVariant::Tca: return 0.0;
        case DdaVariant::Jda: return 0.5;
        case DdaVariant::Bda: return kappa;
    }
    throw ParameterError("unknown DDA variant");
}

std::pair<LabelVector, ProjectionResult> dda_fit_predict(
    const DataMatrix& x, const LabelVector& y_source, const DdaConfig& config,
    DdaHistory* history, const IterationEvaluator& evaluator) {
    x.validate();
    if (static_cast<int>(y_source.labels.size()) != x.n_source) {
        throw DimensionError("dda_fit_predict: labels must cover source samples");
    }
    if (config.t_iters < 0) throw ParameterError("t_iters must be >= 0");
    y_source.validate();

    const int num_classes = y_source.num_classes;
    const double kappa = config.effective_kappa();

    // Iteration 0 predictor: nearest neighbors on the raw features.
    LabelVector y_target = knn_predict(x.source(), y_source, x.target());

    ProjectionResult proj;
    if (config.t_iters == 0) {
        if (history && evaluator) history->evaluator_metric.push_back(evaluator(y_target));
        return {y_target, proj};
    }

    KernelBundle bundle = make_kernel_bundle(x, config.kernel, std::nullopt, 0.0,
                                             config.mu, num_classes);
    bundle.kappa = kappa;
    const int n = x.cols();
    const MatrixXd b_mat = bundle.k * bundle.m * bundle.k;

    LabelVector combined;
    combined.num_classes = num_classes;
    combined.labels.resize(static_cast<size_t>(n));

    for (int iter = 0; iter < config.t_iters; ++iter) {
        if (kappa > 0.0) {
            std::copy(y_source.labels.begin(), y_source.labels.end(),
                      combined.labels.begin());
            std::copy(y_target.labels.begin(), y_target.labels.end(),
                      combined.labels.begin() + x.n_source);
            refresh_conditional_matrices(bundle, combined, num_classes);
        }
        MatrixXd a_mat = bundle.k * bundle.l_q * bundle.k;
        a_mat.diagonal().array() += config.mu;

        GevResult gev = solve_generalized_eigen(a_mat, b_mat, config.d, config.order);
        proj.w = std::move(gev.w);
        proj.eigvals = std::move(gev.eigenvalues);
        proj.z = embed(bundle.k, proj.w);
        proj.iterations_used = iter + 1;

        y_target = knn_predict(proj.z.leftCols(x.n_source), y_source,
                               proj.z.rightCols(x.n_target));

        if (history) {
            history->objective.push_back(
                (proj.w.transpose() * a_mat * proj.w).trace());
            history->pseudo_labels.push_back(y_target);
            if (evaluator) history->evaluator_metric.push_back(evaluator(y_target));
        }
    }
    return {y_target, proj};
}

} // namespace qtf
