#pragma once

#include <Eigen/Dense>
#include <vector>

#include "qtf/errors.hpp"

namespace qtf {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Feature matrix over both domains. Columns are samples, source block
/// first, target block after it.
struct DataMatrix {
    MatrixXd values; // D x n
    int n_source = 0;
    int n_target = 0;

    int dim() const { return static_cast<int>(values.rows()); }
    int cols() const { return static_cast<int>(values.cols()); }

    Eigen::Ref<const MatrixXd> source() const {
        return values.leftCols(n_source);
    }
    Eigen::Ref<const MatrixXd> target() const {
        return values.rightCols(n_target);
    }

    void validate() const {
        if (n_source < 1 || n_target < 1)
            throw InputError("DataMatrix: both domains must be nonempty");
        if (n_source + n_target != cols())
            throw DimensionError("DataMatrix: column count does not match domain partition");
        if (!values.allFinite())
            throw InputError("DataMatrix: non-finite entries");
    }
};

/// Integer labels in {1..C}; 0 marks an unlabeled sample.
struct LabelVector {
    static constexpr int kUnlabeled = 0;

    std::vector<int> labels;
    int num_classes = 0;

    int size() const { return static_cast<int>(labels.size()); }

    void validate() const {
        for (int y : labels)
            if (y < 0 || y > num_classes)
                throw InputError("LabelVector: label outside {0..C}");
    }
};

inline double accuracy(const std::vector<int>& predicted, const std::vector<int>& truth) {
    if (predicted.size() != truth.size() || truth.empty())
        throw DimensionError("accuracy: size mismatch");
    int hits = 0;
    for (size_t i = 0; i < truth.size(); ++i)
        if (predicted[i] == truth[i]) ++hits;
    return static_cast<double>(hits) / static_cast<double>(truth.size());
}

} // namespace qtf
