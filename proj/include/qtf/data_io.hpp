#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "qtf/types.hpp"

namespace qtf {

struct SyntheticSpec {
    int n_per_domain = 100;
    int dim = 4;
    double mean_a = 0.0;
    double std_a = 1.0;
    double mean_b = 1.0;
    double std_b = 2.0;
    int classes = 2;
    /// Class structure, imprinted before normalization on the first two
    /// coordinates of both domains: class c's mean moves by
    /// t_c * class_shift * domain_std on each of those coordinates (t_c
    /// spread linearly over [+1, -1]), and the within-class spread there is
    /// shrunk so every coordinate's marginal moments stay exactly
    /// (mean, std). The same polarity is used in both domains; the domains
    /// still differ in the location and scale of every coordinate. Must
    /// satisfy class_shift^2 * mean(t_c^2) < 1.
    double class_shift = 0.95;
    /// Last class's within-class spread on the class coordinates divided by
    /// the first class's. Values != 1 make the class modes asymmetric, so
    /// they stay distinguishable from unlabeled marginals alone.
    double class_width_ratio = 1.6;

    void validate() const;
};

/// A transfer task: labeled source columns followed by unlabeled target
/// columns. The target ground truth is available only through truth(),
/// which counts its own accesses so tests can prove no fit path reads it.
struct DatasetBundle {
    DataMatrix x;
    LabelVector y_s;
    std::string name;
    std::string provenance;
    uint64_t seed = 0;
    mutable long truth_accesses = 0;

    const LabelVector& truth() const {
        ++truth_accesses;
        return y_t_truth_;
    }
    void set_truth(LabelVector truth) { y_t_truth_ = std::move(truth); }

  private:
    LabelVector y_t_truth_;
};

/// Raw (pre-normalization) draws of the two synthetic domains, for
/// distribution sanity checks.
struct SyntheticRaw {
    MatrixXd domain_a;
    MatrixXd domain_b;
    LabelVector labels_a;
    LabelVector labels_b;
};

SyntheticRaw gen_synthetic_raw(const SyntheticSpec& spec, uint64_t seed);

/// Two seeded transfer tasks over the same draws: (A as source -> B as
/// target, and the reverse). Every column is L2-normalized.
std::pair<DatasetBundle, DatasetBundle> gen_synthetic(const SyntheticSpec& spec,
                                                      uint64_t seed);

struct DigitImages {
    int count = 0;
    int rows = 0;
    int cols = 0;
    MatrixXd pixels;           // (rows*cols) x count, values in [0, 1]
    std::vector<int> labels;   // digit 0..9
};

/// IDX-format reader (big-endian magic + dims + raw bytes), pixel bytes
/// rescaled to [0, 1].
DigitImages load_mnist_idx(const std::string& images_path,
                           const std::string& labels_path);

/// Text rows "label v1 ... v256"; the value range variant ([-1,1] or [0,2])
/// is auto-detected and rescaled to [0, 1].
DigitImages load_usps(const std::string& path);

/// Bilinear resize of one image stack (columns are flattened row-major
/// images).
MatrixXd resize_bilinear(const MatrixXd& images, int rows, int cols,
                         int new_rows, int new_cols);

/// Put both digit sets into a common 256-dim space (16x16, unit columns),
/// stratified-subsample to the requested sizes, and return both transfer
/// directions. Labels are shifted to 1..10 (class c = digit c-1).
std::pair<DatasetBundle, DatasetBundle> preprocess_digits(
    const DigitImages& mnist, const DigitImages& usps, int n_mnist, int n_usps,
    uint64_t seed);

/// Binary container round-trip for bundles (header + little-endian float64
/// payload).
void save_bundle(const std::string& path, const DatasetBundle& bundle);
DatasetBundle load_bundle(const std::string& path);

} // namespace qtf
