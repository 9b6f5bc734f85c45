#include "qtf/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "qtf/errors.hpp"

namespace qtf {

double median_heuristic_bandwidth(const MatrixXd& x, uint64_t seed) {
    const int n = static_cast<int>(x.cols());
    if (n < 2) {
        throw InputError("median_heuristic_bandwidth: need at least 2 samples");
    }
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> pick(0, n - 1);

    const long total_pairs = static_cast<long>(n) * (n - 1) / 2;
    std::vector<double> dists;
    if (total_pairs <= 1000) {
        dists.reserve(static_cast<size_t>(total_pairs));
        for (int i = 0; i < n; ++i) {
            for (int j = i + 1; j < n; ++j) {
                dists.push_back((x.col(i) - x.col(j)).norm());
            }
        }
    } else {
        dists.reserve(1000);
        while (dists.size() < 1000) {
            int i = pick(rng);
            int j = pick(rng);
            if (i == j) continue;
            dists.push_back((x.col(i) - x.col(j)).norm());
        }
    }
    std::sort(dists.begin(), dists.end());
    const size_t m = dists.size();
    double median = (m % 2 == 1) ? dists[m / 2]
                                 : 0.5 * (dists[m / 2 - 1] + dists[m / 2]);
    if (median <= 0.0) {
        // All sampled points coincide; any positive scale keeps exp() finite.
        median = 1.0;
    }
    return median;
}

double resolve_bandwidth(const MatrixXd& x, const KernelSpec& spec) {
    if (spec.kind == KernelSpec::Kind::Linear) return 0.0;
    if (spec.bandwidth < 0.0) {
        throw ParameterError("kernel bandwidth must be >= 0");
    }
    if (spec.bandwidth > 0.0) return spec.bandwidth;
    return median_heuristic_bandwidth(x);
}

MatrixXd compute_kernel(const DataMatrix& x, const KernelSpec& spec) {
    x.validate();
    const MatrixXd& v = x.values;
    const int n = static_cast<int>(v.cols());

    if (spec.kind == KernelSpec::Kind::Linear) {
        MatrixXd k = v.transpose() * v;
        // Force exact symmetry against rounding in the BLAS product.
        k = 0.5 * (k + k.transpose()).eval();
        return k;
    }

    const double bw = resolve_bandwidth(v, spec);
    const double inv = 1.0 / (2.0 * bw * bw);
    VectorXd sq = v.colwise().squaredNorm();
    MatrixXd k(n, n);
    for (int j = 0; j < n; ++j) {
        k(j, j) = 1.0;
        for (int i = j + 1; i < n; ++i) {
            double d2 = sq(i) + sq(j) - 2.0 * v.col(i).dot(v.col(j));
            if (d2 < 0.0) d2 = 0.0;
            const double val = std::exp(-d2 * inv);
            k(i, j) = val;
            k(j, i) = val;
        }
    }
    return k;
}

MmdMatrices build_mmd_matrices(int n_source, int n_target,
                               const std::optional<LabelVector>& labels,
                               double kappa, int num_classes) {
    if (n_source <= 0 || n_target <= 0) {
        throw InputError("build_mmd_matrices: both domains must be non-empty");
    }
    if (kappa < 0.0 || kappa > 1.0) {
        throw ParameterError("kappa must lie in [0, 1]");
    }
    const int n = n_source + n_target;

    VectorXd l0_vec(n);
    l0_vec.head(n_source).setConstant(1.0 / n_source);
    l0_vec.tail(n_target).setConstant(-1.0 / n_target);

    MmdMatrices out;
    out.l0 = l0_vec * l0_vec.transpose();
    out.m = MatrixXd::Identity(n, n) - MatrixXd::Constant(n, n, 1.0 / n);

    if (kappa > 0.0) {
        if (!labels) {
            throw InputError("conditional MMD (kappa > 0) requires labels");
        }
        if (static_cast<int>(labels->labels.size()) != n) {
            throw DimensionError("labels must cover source and target samples");
        }
        if (num_classes < 1) {
            throw ParameterError("num_classes must be >= 1 when kappa > 0");
        }
        out.lc.reserve(static_cast<size_t>(num_classes));
        for (int c = 1; c <= num_classes; ++c) {
            std::vector<int> src_idx, tgt_idx;
            for (int i = 0; i < n_source; ++i) {
                if (labels->labels[static_cast<size_t>(i)] == c) src_idx.push_back(i);
            }
            for (int i = n_source; i < n; ++i) {
                if (labels->labels[static_cast<size_t>(i)] == c) tgt_idx.push_back(i);
            }
            MatrixXd lc = MatrixXd::Zero(n, n);
            const auto ns_c = static_cast<double>(src_idx.size());
            const auto nt_c = static_cast<double>(tgt_idx.size());
            if (ns_c > 0) {
                const double w = 1.0 / (ns_c * ns_c);
                for (int i : src_idx)
                    for (int j : src_idx) lc(i, j) = w;
            }
            if (nt_c > 0) {
                const double w = 1.0 / (nt_c * nt_c);
                for (int i : tgt_idx)
                    for (int j : tgt_idx) lc(i, j) = w;
            }
            // The cross terms need members on both sides; with one side
            // empty only the same-domain normalization blocks remain.
            if (ns_c > 0 && nt_c > 0) {
                const double w = -1.0 / (ns_c * nt_c);
                for (int i : src_idx)
                    for (int j : tgt_idx) {
                        lc(i, j) = w;
                        lc(j, i) = w;
                    }
            }
            out.lc.push_back(std::move(lc));
        }
    }

    out.l_q = (1.0 - kappa) * out.l0;
    for (const auto& lc : out.lc) out.l_q += kappa * lc;
    return out;
}

double mmd_trace(const MatrixXd& k, const MatrixXd& l) {
    if (k.rows() != k.cols() || l.rows() != l.cols() || k.rows() != l.rows()) {
        throw DimensionError("mmd_trace: K and L must be square with equal size");
    }
    return (k * l).trace();
}

KernelBundle make_kernel_bundle(const DataMatrix& x, const KernelSpec& spec,
                                const std::optional<LabelVector>& labels,
                                double kappa, double mu, int num_classes) {
    if (mu < 0.0) throw ParameterError("mu must be >= 0");
    KernelBundle bundle;
    bundle.k = compute_kernel(x, spec);
    MmdMatrices mmd = build_mmd_matrices(x.n_source, x.n_target, labels, kappa,
                                         num_classes);
    bundle.l0 = std::move(mmd.l0);
    bundle.lc = std::move(mmd.lc);
    bundle.m = std::move(mmd.m);
    bundle.l_q = std::move(mmd.l_q);
    bundle.kappa = kappa;
    bundle.mu = mu;
    bundle.n_source = x.n_source;
    bundle.n_target = x.n_target;
    return bundle;
}

void refresh_conditional_matrices(KernelBundle& bundle, const LabelVector& labels,
                                  int num_classes) {
    MmdMatrices mmd = build_mmd_matrices(bundle.n_source, bundle.n_target, labels,
                                         bundle.kappa, num_classes);
    bundle.lc = std::move(mmd.lc);
    bundle.l_q = std::move(mmd.l_q);
}

} // namespace qtf
