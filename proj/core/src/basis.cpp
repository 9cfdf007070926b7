#include "dpc/basis.hpp"

#include <stdexcept>

namespace dpc {

Vector BasisModel::evaluate(const Vector& z) const {
    if (z.size() != d) throw std::invalid_argument("BasisModel::evaluate: dimension mismatch");
    if (kind == BasisKind::LinearIdentity) return z;
    return kvec(z, centers, widths);
}

Matrix BasisModel::jacobian(const Vector& z) const {
    if (z.size() != d) throw std::invalid_argument("BasisModel::jacobian: dimension mismatch");
    if (kind == BasisKind::LinearIdentity) return Matrix::Identity(d, d);
    return kvec_jacobian(z, centers, widths);
}

BasisModel make_linear_basis(const HankelSet& hs) {
    BasisModel b;
    b.kind = BasisKind::LinearIdentity;
    b.Phi = trajectory_matrix(hs);
    b.L = static_cast<int>(b.Phi.rows());
    b.d = b.L;
    return b;
}

}  // namespace dpc
