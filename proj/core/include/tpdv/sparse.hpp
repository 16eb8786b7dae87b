#pragma once

#include <Eigen/Dense>

#include <iosfwd>
#include <string>
#include <vector>

namespace tpdv {

using Vector = Eigen::VectorXd;

struct Triplet {
    int row;
    int col;
    double value;
};

/// Compressed-sparse-row matrix in canonical form: column indices strictly
/// increasing within each row, duplicates summed at construction, exact
/// zeros dropped. Canonical form makes equality bit-exact and keeps the
/// arithmetic order of every product reproducible.
class SparseMatrix {
public:
    SparseMatrix() = default;

    static SparseMatrix from_triplets(int rows, int cols, const std::vector<Triplet>& entries);
    static SparseMatrix identity(int n);
    static SparseMatrix diagonal(const Vector& d);
    static SparseMatrix from_dense(const Eigen::MatrixXd& m, double drop_tol = 0.0);

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    int nnz() const { return static_cast<int>(values_.size()); }

    const std::vector<int>& row_offsets() const { return row_offsets_; }
    const std::vector<int>& col_indices() const { return col_indices_; }
    const std::vector<double>& values() const { return values_; }

    Vector apply(const Vector& x) const;            // y = A x
    Vector apply_transpose(const Vector& x) const;  // y = A^T x

    SparseMatrix transpose() const;
    SparseMatrix multiply(const SparseMatrix& other) const;

    /// a*A + b*B with general pattern merge.
    static SparseMatrix add(double a, const SparseMatrix& A, double b, const SparseMatrix& B);

    SparseMatrix scaled(double s) const;

    /// A^T D A for diagonal D, the workhorse of Galerkin-style products.
    static SparseMatrix scaled_gram(const SparseMatrix& A, const Vector& d);

    Vector diag() const;
    Vector row_sums() const;

    Eigen::MatrixXd to_dense() const;

    bool same_pattern(const SparseMatrix& other) const;
    bool operator==(const SparseMatrix& other) const = default;

    /// Matrix Market coordinate format, general symmetry, full precision.
    void write_mtx(std::ostream& os) const;
    void write_mtx(const std::string& path) const;
    static SparseMatrix read_mtx(std::istream& is);
    static SparseMatrix read_mtx(const std::string& path);

private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<int> row_offsets_{0};
    std::vector<int> col_indices_;
    std::vector<double> values_;
};

}  // namespace tpdv
