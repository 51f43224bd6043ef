#pragma once

#include <Eigen/SparseCore>

#include "pflab/grid.hpp"

namespace pflab {

using SparseMatrix = Eigen::SparseMatrix<double>;
using Triplets = std::vector<Eigen::Triplet<double>>;

/// Matrix of the linear map phi -> weighted_div_grad(phi, weights),
/// emitted as triplets with the given row/column offsets so callers can
/// embed it in a larger block system.
void append_div_grad(const FaceField& weights, double scale, Eigen::Index row_offset,
                     Eigen::Index col_offset, Triplets& out);

SparseMatrix div_grad_matrix(const FaceField& weights);

inline Eigen::Map<const Eigen::VectorXd> as_vector(const Field& f) {
    return {f.data().data(), static_cast<Eigen::Index>(f.size())};
}

inline Eigen::Map<Eigen::VectorXd> as_vector(Field& f) {
    return {f.data().data(), static_cast<Eigen::Index>(f.size())};
}

}  // namespace pflab
