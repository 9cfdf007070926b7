#pragma once

#include <vector>

#include "dpc/plant.hpp"
#include "dpc/types.hpp"

namespace dpc {

struct HankelConfig {
    int T_ini = 1;  // past window length
    int N = 1;      // prediction horizon
    int T = 1;      // number of columns
    int m = 1;      // input dimension
    int p = 1;      // output dimension

    /// Samples needed to build T columns.
    int required_samples() const { return T_ini + T + N - 1; }
    /// Length of one trajectory column z_j = col(U_p, Y_p, U_f)[:, j].
    int trajectory_dim() const { return (T_ini - 1) * m + T_ini * p + N * m; }
};

/// The four block data matrices. Column j of the stack [U_p; Y_p; U_f; Y_f]
/// is the contiguous trajectory window starting at sample j:
///   U_p[:,j] = col(u(j), ..., u(j+T_ini-2))
///   Y_p[:,j] = col(y(j), ..., y(j+T_ini-1))
///   U_f[:,j] = col(u(j+T_ini-1), ..., u(j+T_ini+N-2))
///   Y_f[:,j] = col(y(j+T_ini), ..., y(j+T_ini+N-1))
/// so that for the anchor time k = j+T_ini-1 the column holds (u_ini, y_ini)
/// ending at k, the inputs applied from k, and the outputs from k+1 on.
struct HankelSet {
    Matrix U_p;  // (T_ini-1)*m x T  (zero rows when T_ini == 1)
    Matrix Y_p;  // T_ini*p x T
    Matrix U_f;  // N*m x T
    Matrix Y_f;  // N*p x T
    HankelConfig cfg;
};

/// Past window col(u_ini, y_ini) used to anchor predictions at time k.
struct InitWindow {
    Vector u_ini;  // (T_ini-1)*m, ends at u(k-1)
    Vector y_ini;  // T_ini*p, ends at y(k)
    Vector x_ini;  // col(u_ini, y_ini)
};

HankelSet build_hankel(const Dataset& data, const HankelConfig& cfg);

/// z_j = col(U_p[:,j], Y_p[:,j], U_f[:,j]).
Vector trajectory_column(const HankelSet& hs, int j);

/// All trajectory columns stacked as a d x T matrix.
Matrix trajectory_matrix(const HankelSet& hs);

/// The full stack [U_p; Y_p; U_f; Y_f].
Matrix stacked(const HankelSet& hs);

/// Build the init window at time k from the recorded history
/// (u_hist[i], y_hist[i] are the samples at absolute time i).
InitWindow init_window(const std::vector<Vector>& u_hist, const std::vector<Vector>& y_hist,
                       int T_ini, int k);

}  // namespace dpc
