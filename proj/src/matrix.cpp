#include "adbn/matrix.hpp"
#include "adbn/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace adbn {

Matrix Matrix::from_rows(const std::vector<Vector>& rows) {
    if (rows.empty()) return {};
    Matrix m(rows.size(), rows.front().size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        require(rows[r].size() == m.cols(), ErrorCode::dimension_mismatch,
                "ragged rows building matrix at row " + std::to_string(r));
        std::copy(rows[r].begin(), rows[r].end(), m.row(r).begin());
    }
    return m;
}

Vector Matrix::column(std::size_t c) const {
    Vector out(rows_);
    for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
    return out;
}

void Matrix::insert_column(std::size_t pos, std::span<const double> values) {
    require(pos <= cols_, ErrorCode::dimension_mismatch, "column insert position out of range");
    require(values.size() == rows_, ErrorCode::dimension_mismatch, "column length does not match row count");
    std::vector<double> next(rows_ * (cols_ + 1));
    for (std::size_t r = 0; r < rows_; ++r) {
        const double* src = data_.data() + r * cols_;
        double* dst = next.data() + r * (cols_ + 1);
        std::copy(src, src + pos, dst);
        dst[pos] = values[r];
        std::copy(src + pos, src + cols_, dst + pos + 1);
    }
    data_ = std::move(next);
    ++cols_;
}

void Matrix::erase_column(std::size_t pos) {
    require(pos < cols_, ErrorCode::dimension_mismatch, "column erase position out of range");
    std::vector<double> next(rows_ * (cols_ - 1));
    for (std::size_t r = 0; r < rows_; ++r) {
        const double* src = data_.data() + r * cols_;
        double* dst = next.data() + r * (cols_ - 1);
        std::copy(src, src + pos, dst);
        std::copy(src + pos + 1, src + cols_, dst + pos);
    }
    data_ = std::move(next);
    --cols_;
}

Matrix Matrix::select_rows(std::span<const std::size_t> indices) const {
    Matrix out(indices.size(), cols_);
    for (std::size_t k = 0; k < indices.size(); ++k) {
        require(indices[k] < rows_, ErrorCode::dimension_mismatch, "row index out of range");
        auto src = row(indices[k]);
        std::copy(src.begin(), src.end(), out.row(k).begin());
    }
    return out;
}

double sigmoid(double x) {
    if (x >= 0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double euclidean_distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return std::sqrt(s);
}

}  // namespace adbn
