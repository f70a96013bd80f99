#pragma once

#include <Eigen/Dense>
#include <string>

#include "gsim/errors.hpp"

namespace gsim {

// Scalars are 64-bit floats throughout; matrices are dense row-major.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// The two input modalities. Domain decides which branch of the feature
/// net processes a sample and which similarity components apply to it.
enum class Domain { X, Y };

inline const char* domain_name(Domain d) { return d == Domain::X ? "X" : "Y"; }

inline bool all_finite(const Matrix& m) { return m.allFinite(); }
inline bool all_finite(const Vector& v) { return v.allFinite(); }

/// Throws ValidationError naming `what` when the vector length differs
/// from `expected`.
inline void require_length(const Vector& v, Eigen::Index expected, const std::string& what) {
    if (v.size() != expected) {
        throw ValidationError(what + " has length " + std::to_string(v.size()) +
                              ", expected " + std::to_string(expected));
    }
}

inline void require_shape(const Matrix& m, Eigen::Index rows, Eigen::Index cols,
                          const std::string& what) {
    if (m.rows() != rows || m.cols() != cols) {
        throw ValidationError(what + " has shape " + std::to_string(m.rows()) + "x" +
                              std::to_string(m.cols()) + ", expected " + std::to_string(rows) +
                              "x" + std::to_string(cols));
    }
}

inline void require_finite(const Matrix& m, const std::string& what) {
    if (!m.allFinite()) throw ValidationError(what + " contains non-finite entries");
}

inline void require_finite(const Vector& v, const std::string& what) {
    if (!v.allFinite()) throw ValidationError(what + " contains non-finite entries");
}

}  // namespace gsim
