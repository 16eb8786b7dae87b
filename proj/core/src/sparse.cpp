#include "tpdv/sparse.hpp"

#include "tpdv/errors.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <ostream>
#include <sstream>

namespace tpdv {

namespace {

void check_index_bounds(int rows, int cols, const std::vector<Triplet>& entries) {
    for (const auto& t : entries) {
        if (t.row < 0 || t.row >= rows || t.col < 0 || t.col >= cols)
            throw InvalidArgument("sparse triplet index out of range");
    }
}

}  // namespace

SparseMatrix SparseMatrix::from_triplets(int rows, int cols, const std::vector<Triplet>& entries) {
    if (rows < 0 || cols < 0) throw InvalidArgument("negative sparse dimension");
    check_index_bounds(rows, cols, entries);

    SparseMatrix m;
    m.rows_ = rows;
    m.cols_ = cols;

    std::vector<std::size_t> order(entries.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (entries[a].row != entries[b].row) return entries[a].row < entries[b].row;
        return entries[a].col < entries[b].col;
    });

    m.row_offsets_.assign(static_cast<std::size_t>(rows) + 1, 0);
    m.col_indices_.reserve(entries.size());
    m.values_.reserve(entries.size());

    std::size_t i = 0;
    for (int r = 0; r < rows; ++r) {
        while (i < order.size() && entries[order[i]].row == r) {
            const int c = entries[order[i]].col;
            double v = 0.0;
            while (i < order.size() && entries[order[i]].row == r && entries[order[i]].col == c) {
                v += entries[order[i]].value;
                ++i;
            }
            if (v != 0.0) {
                m.col_indices_.push_back(c);
                m.values_.push_back(v);
            }
        }
        m.row_offsets_[static_cast<std::size_t>(r) + 1] = static_cast<int>(m.values_.size());
    }
    return m;
}

SparseMatrix SparseMatrix::identity(int n) {
    std::vector<Triplet> t;
    t.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) t.push_back({i, i, 1.0});
    return from_triplets(n, n, t);
}

SparseMatrix SparseMatrix::diagonal(const Vector& d) {
    std::vector<Triplet> t;
    t.reserve(static_cast<std::size_t>(d.size()));
    for (int i = 0; i < d.size(); ++i) t.push_back({i, i, d[i]});
    return from_triplets(static_cast<int>(d.size()), static_cast<int>(d.size()), t);
}

SparseMatrix SparseMatrix::from_dense(const Eigen::MatrixXd& m, double drop_tol) {
    std::vector<Triplet> t;
    for (int i = 0; i < m.rows(); ++i)
        for (int j = 0; j < m.cols(); ++j)
            if (std::abs(m(i, j)) > drop_tol) t.push_back({i, j, m(i, j)});
    return from_triplets(static_cast<int>(m.rows()), static_cast<int>(m.cols()), t);
}

Vector SparseMatrix::apply(const Vector& x) const {
    if (x.size() != cols_) throw DimensionError("sparse apply: vector length mismatch");
    Vector y = Vector::Zero(rows_);
    for (int r = 0; r < rows_; ++r) {
        double s = 0.0;
        for (int k = row_offsets_[r]; k < row_offsets_[static_cast<std::size_t>(r) + 1]; ++k)
            s += values_[k] * x[col_indices_[k]];
        y[r] = s;
    }
    return y;
}

Vector SparseMatrix::apply_transpose(const Vector& x) const {
    if (x.size() != rows_) throw DimensionError("sparse apply_transpose: vector length mismatch");
    Vector y = Vector::Zero(cols_);
    for (int r = 0; r < rows_; ++r) {
        const double xr = x[r];
        for (int k = row_offsets_[r]; k < row_offsets_[static_cast<std::size_t>(r) + 1]; ++k)
            y[col_indices_[k]] += values_[k] * xr;
    }
    return y;
}

SparseMatrix SparseMatrix::transpose() const {
    std::vector<Triplet> t;
    t.reserve(values_.size());
    for (int r = 0; r < rows_; ++r)
        for (int k = row_offsets_[r]; k < row_offsets_[static_cast<std::size_t>(r) + 1]; ++k)
            t.push_back({col_indices_[k], r, values_[k]});
    return from_triplets(cols_, rows_, t);
}

SparseMatrix SparseMatrix::multiply(const SparseMatrix& other) const {
    if (cols_ != other.rows_) throw DimensionError("sparse multiply: inner dimension mismatch");

    SparseMatrix m;
    m.rows_ = rows_;
    m.cols_ = other.cols_;
    m.row_offsets_.assign(static_cast<std::size_t>(rows_) + 1, 0);

    std::vector<double> acc(static_cast<std::size_t>(other.cols_), 0.0);
    std::vector<int> touched;
    touched.reserve(64);

    for (int r = 0; r < rows_; ++r) {
        touched.clear();
        for (int k = row_offsets_[r]; k < row_offsets_[static_cast<std::size_t>(r) + 1]; ++k) {
            const int mid = col_indices_[k];
            const double v = values_[k];
            for (int k2 = other.row_offsets_[mid]; k2 < other.row_offsets_[static_cast<std::size_t>(mid) + 1]; ++k2) {
                const int c = other.col_indices_[k2];
                if (acc[c] == 0.0 && std::find(touched.begin(), touched.end(), c) == touched.end())
                    touched.push_back(c);
                acc[c] += v * other.values_[k2];
            }
        }
        std::sort(touched.begin(), touched.end());
        for (int c : touched) {
            if (acc[c] != 0.0) {
                m.col_indices_.push_back(c);
                m.values_.push_back(acc[c]);
            }
            acc[c] = 0.0;
        }
        m.row_offsets_[static_cast<std::size_t>(r) + 1] = static_cast<int>(m.values_.size());
    }
    return m;
}

SparseMatrix SparseMatrix::add(double a, const SparseMatrix& A, double b, const SparseMatrix& B) {
    if (A.rows_ != B.rows_ || A.cols_ != B.cols_) throw DimensionError("sparse add: shape mismatch");

    SparseMatrix m;
    m.rows_ = A.rows_;
    m.cols_ = A.cols_;
    m.row_offsets_.assign(static_cast<std::size_t>(A.rows_) + 1, 0);

    for (int r = 0; r < A.rows_; ++r) {
        int ka = A.row_offsets_[r];
        int kb = B.row_offsets_[r];
        const int ea = A.row_offsets_[static_cast<std::size_t>(r) + 1];
        const int eb = B.row_offsets_[static_cast<std::size_t>(r) + 1];
        while (ka < ea || kb < eb) {
            int c;
            double v;
            if (kb >= eb || (ka < ea && A.col_indices_[ka] < B.col_indices_[kb])) {
                c = A.col_indices_[ka];
                v = a * A.values_[ka];
                ++ka;
            } else if (ka >= ea || B.col_indices_[kb] < A.col_indices_[ka]) {
                c = B.col_indices_[kb];
                v = b * B.values_[kb];
                ++kb;
            } else {
                c = A.col_indices_[ka];
                v = a * A.values_[ka] + b * B.values_[kb];
                ++ka;
                ++kb;
            }
            if (v != 0.0) {
                m.col_indices_.push_back(c);
                m.values_.push_back(v);
            }
        }
        m.row_offsets_[static_cast<std::size_t>(r) + 1] = static_cast<int>(m.values_.size());
    }
    return m;
}

SparseMatrix SparseMatrix::scaled(double s) const {
    SparseMatrix m = *this;
    for (double& v : m.values_) v *= s;
    if (s == 0.0) return from_triplets(rows_, cols_, {});
    return m;
}

SparseMatrix SparseMatrix::scaled_gram(const SparseMatrix& A, const Vector& d) {
    if (d.size() != A.rows()) throw DimensionError("scaled_gram: diagonal length mismatch");
    // A^T (D A) via one scaled copy and one canonical multiply
    SparseMatrix da = A;
    for (int r = 0; r < A.rows_; ++r)
        for (int k = A.row_offsets_[r]; k < A.row_offsets_[static_cast<std::size_t>(r) + 1]; ++k)
            da.values_[k] *= d[r];
    return A.transpose().multiply(da);
}

Vector SparseMatrix::diag() const {
    const int n = std::min(rows_, cols_);
    Vector d = Vector::Zero(n);
    for (int r = 0; r < n; ++r)
        for (int k = row_offsets_[r]; k < row_offsets_[static_cast<std::size_t>(r) + 1]; ++k)
            if (col_indices_[k] == r) d[r] = values_[k];
    return d;
}

Vector SparseMatrix::row_sums() const {
    Vector s = Vector::Zero(rows_);
    for (int r = 0; r < rows_; ++r) {
        double acc = 0.0;
        for (int k = row_offsets_[r]; k < row_offsets_[static_cast<std::size_t>(r) + 1]; ++k)
            acc += values_[k];
        s[r] = acc;
    }
    return s;
}

Eigen::MatrixXd SparseMatrix::to_dense() const {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(rows_, cols_);
    for (int r = 0; r < rows_; ++r)
        for (int k = row_offsets_[r]; k < row_offsets_[static_cast<std::size_t>(r) + 1]; ++k)
            m(r, col_indices_[k]) = values_[k];
    return m;
}

bool SparseMatrix::same_pattern(const SparseMatrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_ && row_offsets_ == other.row_offsets_ &&
           col_indices_ == other.col_indices_;
}

void SparseMatrix::write_mtx(std::ostream& os) const {
    os << "%%MatrixMarket matrix coordinate real general\n";
    os << rows_ << " " << cols_ << " " << nnz() << "\n";
    char buf[64];
    for (int r = 0; r < rows_; ++r) {
        for (int k = row_offsets_[r]; k < row_offsets_[static_cast<std::size_t>(r) + 1]; ++k) {
            std::snprintf(buf, sizeof(buf), "%d %d %.17g\n", r + 1, col_indices_[k] + 1, values_[k]);
            os << buf;
        }
    }
}

void SparseMatrix::write_mtx(const std::string& path) const {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open for writing: " + path);
    write_mtx(os);
    if (!os) throw IoError("write failed: " + path);
}

SparseMatrix SparseMatrix::read_mtx(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw IoError("mtx: empty stream");
    if (line.rfind("%%MatrixMarket", 0) != 0) throw IoError("mtx: missing MatrixMarket banner");
    {
        std::istringstream hs(line);
        std::string tag, object, format, field, symmetry;
        hs >> tag >> object >> format >> field >> symmetry;
        if (object != "matrix" || format != "coordinate")
            throw IoError("mtx: only coordinate matrices supported");
        if (field != "real" && field != "integer") throw IoError("mtx: only real data supported");
        if (symmetry != "general" && symmetry != "symmetric")
            throw IoError("mtx: unsupported symmetry kind: " + symmetry);
        bool symmetric = (symmetry == "symmetric");
        while (std::getline(is, line)) {
            if (!line.empty() && line[0] != '%') break;
        }
        std::istringstream sz(line);
        int rows = -1, cols = -1, entries = -1;
        sz >> rows >> cols >> entries;
        if (rows < 0 || cols < 0 || entries < 0) throw IoError("mtx: bad size line");
        std::vector<Triplet> t;
        t.reserve(static_cast<std::size_t>(entries));
        for (int e = 0; e < entries; ++e) {
            int i = 0, j = 0;
            double v = 0.0;
            if (!(is >> i >> j >> v)) throw IoError("mtx: truncated entry list");
            t.push_back({i - 1, j - 1, v});
            if (symmetric && i != j) t.push_back({j - 1, i - 1, v});
        }
        return from_triplets(rows, cols, t);
    }
}

SparseMatrix SparseMatrix::read_mtx(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open for reading: " + path);
    return read_mtx(is);
}

}  // namespace tpdv
