#pragma once

#include <string>

#include "dpc/basis.hpp"
#include "dpc/plant.hpp"
#include "dpc/reduce.hpp"

namespace dpc {

/// Matrices are written row-major, comma separated, full double precision
/// (17 significant digits) so that re-runs are byte-identical.
void write_matrix_csv(const std::string& path, const Matrix& M);
Matrix read_matrix_csv(const std::string& path);

/// Dataset CSV with header `k,u_1..u_m,y_1..y_p`.
void write_dataset_csv(const std::string& path, const Dataset& data);
Dataset read_dataset_csv(const std::string& path);

std::string format_double(double v);

/// Versioned on-disk model bundle: a directory holding `model.json` plus CSV
/// payloads for the basis matrices and the reduced data.
struct ModelFiles {
    BasisModel basis;
    ReducedData reduced;
    PredictorMatrix M;
    Matrix Yf_raw;
    int T_ini = 1, N = 1, m = 1, p = 1, T = 1;
};

void save_model_bundle(const std::string& dir, const ModelFiles& mf);
ModelFiles load_model_bundle(const std::string& dir);

}  // namespace dpc
