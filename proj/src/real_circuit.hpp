#pragma once

#include "qtf/types.hpp"

// Internal real-arithmetic gate kernels. RY and CNOT have real matrices, so
// circuits built from them map real amplitude vectors to real amplitude
// vectors; the simulator and the variational eigensolver share these loops.

namespace qtf::detail {

/// Rotation [[c, -s], [s, c]] on `target` across the whole register.
inline void apply_ry(VectorXd& amps, int target, double c, double s) {
    const auto dim = static_cast<long>(amps.size());
    const long bit = 1L << target;
    for (long base = 0; base < dim; ++base) {
        if (base & bit) continue;
        const long partner = base | bit;
        const double a0 = amps(base);
        const double a1 = amps(partner);
        amps(base) = c * a0 - s * a1;
        amps(partner) = s * a0 + c * a1;
    }
}

inline void apply_cnot(VectorXd& amps, int control, int target) {
    const auto dim = static_cast<long>(amps.size());
    const long cbit = 1L << control;
    const long tbit = 1L << target;
    for (long base = 0; base < dim; ++base) {
        if (!(base & cbit) || (base & tbit)) continue;
        std::swap(amps(base), amps(base | tbit));
    }
}

} // namespace qtf::detail
