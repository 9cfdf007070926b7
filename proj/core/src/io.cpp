#include "dpc/io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace dpc {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_matrix_csv(const std::string& path, const Matrix& M) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_matrix_csv: cannot open " + path);
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
        for (Eigen::Index j = 0; j < M.cols(); ++j) {
            if (j > 0) out << ',';
            out << format_double(M(i, j));
        }
        out << '\n';
    }
}

Matrix read_matrix_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_matrix_csv: cannot open " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
        rows.push_back(std::move(row));
    }
    if (rows.empty()) return Matrix(0, 0);
    Matrix M(rows.size(), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != rows.front().size()) {
            throw std::runtime_error("read_matrix_csv: ragged rows in " + path);
        }
        for (std::size_t j = 0; j < rows[i].size(); ++j) M(i, j) = rows[i][j];
    }
    return M;
}

void write_dataset_csv(const std::string& path, const Dataset& data) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_dataset_csv: cannot open " + path);
    out << 'k';
    for (int i = 1; i <= data.m(); ++i) out << ",u_" << i;
    for (int i = 1; i <= data.p(); ++i) out << ",y_" << i;
    out << '\n';
    for (int k = 0; k < data.count; ++k) {
        out << k;
        for (Eigen::Index i = 0; i < data.u[k].size(); ++i) out << ',' << format_double(data.u[k](i));
        for (Eigen::Index i = 0; i < data.y[k].size(); ++i) out << ',' << format_double(data.y[k](i));
        out << '\n';
    }
}

Dataset read_dataset_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_dataset_csv: cannot open " + path);
    std::string header;
    if (!std::getline(in, header)) throw std::runtime_error("read_dataset_csv: empty file");
    int m = 0, p = 0;
    {
        std::stringstream ss(header);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            if (cell.rfind("u_", 0) == 0) ++m;
            if (cell.rfind("y_", 0) == 0) ++p;
        }
    }
    if (m == 0 || p == 0) throw std::runtime_error("read_dataset_csv: bad header in " + path);

    Dataset data;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::getline(ss, cell, ',');  // k
        Vector u(m), y(p);
        for (int i = 0; i < m; ++i) {
            std::getline(ss, cell, ',');
            u(i) = std::stod(cell);
        }
        for (int i = 0; i < p; ++i) {
            std::getline(ss, cell, ',');
            y(i) = std::stod(cell);
        }
        data.u.push_back(u);
        data.y.push_back(y);
    }
    data.count = static_cast<int>(data.u.size());
    return data;
}

namespace {

ordered_json vector_to_json(const Vector& v) {
    ordered_json arr = ordered_json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
    return arr;
}

Vector vector_from_json(const ordered_json& arr) {
    Vector v(arr.size());
    for (std::size_t i = 0; i < arr.size(); ++i) v(i) = arr[i].get<double>();
    return v;
}

}  // namespace

void save_model_bundle(const std::string& dir, const ModelFiles& mf) {
    fs::create_directories(dir);
    const fs::path base(dir);

    ordered_json j;
    j["version"] = 1;
    j["kind"] = mf.basis.kind == BasisKind::KernelActiveSet ? "kernel-active-set"
                                                            : "linear-identity";
    j["L"] = mf.basis.L;
    j["d"] = mf.basis.d;
    j["T_ini"] = mf.T_ini;
    j["N"] = mf.N;
    j["m"] = mf.m;
    j["p"] = mf.p;
    j["T"] = mf.T;
    j["widths"] = vector_to_json(mf.basis.widths.eta);
    j["active"] = mf.basis.active;
    j["keep"] = mf.reduced.keep;
    j["rank"] = mf.reduced.rank;
    j["sigma_tail"] = mf.reduced.sigma_tail;
    j["rank_deficient"] = mf.M.rank_deficient;
    j["full_vs_reduced_gap"] = mf.M.full_vs_reduced_gap;
    j["files"] = {
        {"centers", "centers.csv"},   {"phi", "phi.csv"},
        {"yf_raw", "yf_raw.csv"},     {"v1", "v1.csv"},
        {"phi_t", "phi_t.csv"},       {"yf_t", "yf_t.csv"},
        {"phi_t_pinv", "phi_t_pinv.csv"}, {"proj_null", "proj_null.csv"},
        {"svals", "svals.csv"},       {"range_basis", "range_basis.csv"},
        {"null_basis", "null_basis.csv"}, {"m", "m.csv"},
        {"m_full", "m_full.csv"},
    };

    std::ofstream out(base / "model.json");
    if (!out) throw std::runtime_error("save_model_bundle: cannot open " + dir);
    out << j.dump(2) << '\n';

    write_matrix_csv((base / "centers.csv").string(), mf.basis.centers);
    write_matrix_csv((base / "phi.csv").string(), mf.basis.Phi);
    write_matrix_csv((base / "yf_raw.csv").string(), mf.Yf_raw);
    write_matrix_csv((base / "v1.csv").string(), mf.reduced.V1);
    write_matrix_csv((base / "phi_t.csv").string(), mf.reduced.Phi_t);
    write_matrix_csv((base / "yf_t.csv").string(), mf.reduced.Yf_t);
    write_matrix_csv((base / "phi_t_pinv.csv").string(), mf.reduced.Phi_t_pinv);
    write_matrix_csv((base / "proj_null.csv").string(), mf.reduced.proj_null);
    write_matrix_csv((base / "svals.csv").string(), mf.reduced.svals);
    write_matrix_csv((base / "range_basis.csv").string(), mf.reduced.range_basis);
    write_matrix_csv((base / "null_basis.csv").string(), mf.reduced.null_basis);
    write_matrix_csv((base / "m.csv").string(), mf.M.M);
    write_matrix_csv((base / "m_full.csv").string(), mf.M.M_full);
}

ModelFiles load_model_bundle(const std::string& dir) {
    const fs::path base(dir);
    std::ifstream in(base / "model.json");
    if (!in) throw std::runtime_error("load_model_bundle: cannot open " + dir + "/model.json");
    ordered_json j;
    in >> j;
    if (j.value("version", 0) != 1) {
        throw std::runtime_error("load_model_bundle: unsupported model version");
    }

    ModelFiles mf;
    mf.basis.kind = j["kind"] == "kernel-active-set" ? BasisKind::KernelActiveSet
                                                     : BasisKind::LinearIdentity;
    mf.basis.L = j["L"].get<int>();
    mf.basis.d = j["d"].get<int>();
    mf.T_ini = j["T_ini"].get<int>();
    mf.N = j["N"].get<int>();
    mf.m = j["m"].get<int>();
    mf.p = j["p"].get<int>();
    mf.T = j["T"].get<int>();
    mf.basis.widths.eta = vector_from_json(j["widths"]);
    mf.basis.active = j["active"].get<std::vector<int>>();

    mf.basis.centers = read_matrix_csv((base / "centers.csv").string());
    mf.basis.Phi = read_matrix_csv((base / "phi.csv").string());
    mf.Yf_raw = read_matrix_csv((base / "yf_raw.csv").string());
    mf.reduced.V1 = read_matrix_csv((base / "v1.csv").string());
    mf.reduced.Phi_t = read_matrix_csv((base / "phi_t.csv").string());
    mf.reduced.Yf_t = read_matrix_csv((base / "yf_t.csv").string());
    mf.reduced.Phi_t_pinv = read_matrix_csv((base / "phi_t_pinv.csv").string());
    mf.reduced.proj_null = read_matrix_csv((base / "proj_null.csv").string());
    mf.reduced.svals = read_matrix_csv((base / "svals.csv").string());
    mf.reduced.range_basis = read_matrix_csv((base / "range_basis.csv").string());
    mf.reduced.null_basis = read_matrix_csv((base / "null_basis.csv").string());
    mf.M.M = read_matrix_csv((base / "m.csv").string());
    mf.M.M_full = read_matrix_csv((base / "m_full.csv").string());
    mf.reduced.keep = j["keep"].get<int>();
    mf.reduced.rank = j["rank"].get<int>();
    mf.reduced.sigma_tail = j["sigma_tail"].get<double>();
    mf.M.rank_deficient = j["rank_deficient"].get<bool>();
    mf.M.full_vs_reduced_gap = j["full_vs_reduced_gap"].get<double>();
    return mf;
}

}  // namespace dpc
