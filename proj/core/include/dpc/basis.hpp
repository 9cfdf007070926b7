#pragma once

#include <vector>

#include "dpc/kernel.hpp"
#include "dpc/types.hpp"

namespace dpc {

enum class BasisKind {
    KernelActiveSet,  // phi_bar(z) = (k(z, c_i))_{i in A}
    LinearIdentity,   // phi_bar(z) = z
};

/// Basis-function evaluator plus its lifted data matrix Phi = [phi(z_1) ... phi(z_T)].
struct BasisModel {
    BasisKind kind = BasisKind::KernelActiveSet;
    Matrix centers;           // d x L selected centers (kernel kind)
    KernelWidths widths;      // kernel kind only
    std::vector<int> active;  // indices into the original T columns (kernel kind)
    Matrix Phi;               // L x T
    int L = 0;
    int d = 0;  // trajectory dimension the basis acts on

    Vector evaluate(const Vector& z) const;
    /// Jacobian d(phi_bar)/dz, size L x d.
    Matrix jacobian(const Vector& z) const;
};

/// Identity basis over the raw trajectory stack [U_p; Y_p; U_f] (L = d).
BasisModel make_linear_basis(const HankelSet& hs);

}  // namespace dpc
