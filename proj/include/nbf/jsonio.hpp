// JSON <-> Eigen conversion helpers used by every serializable type.
#pragma once

#include <Eigen/Dense>
#include <json.hpp>
#include <stdexcept>

namespace nbf {

using json = nlohmann::json;

inline json to_json(const Eigen::VectorXd& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

// Row-major nested arrays.
inline json to_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json r = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
        rows.push_back(r);
    }
    return rows;
}

inline Eigen::VectorXd vector_from_json(const json& a) {
    if (!a.is_array()) throw std::runtime_error("expected JSON array for vector");
    Eigen::VectorXd v(a.size());
    for (size_t i = 0; i < a.size(); ++i) v[static_cast<Eigen::Index>(i)] = a[i].get<double>();
    return v;
}

inline Eigen::MatrixXd matrix_from_json(const json& a) {
    if (!a.is_array() || a.empty()) throw std::runtime_error("expected nonempty JSON array of rows for matrix");
    const size_t cols = a[0].size();
    Eigen::MatrixXd m(a.size(), cols);
    for (size_t i = 0; i < a.size(); ++i) {
        if (a[i].size() != cols) throw std::runtime_error("ragged matrix rows in JSON");
        for (size_t j = 0; j < cols; ++j) m(i, j) = a[i][j].get<double>();
    }
    return m;
}

}  // namespace nbf
