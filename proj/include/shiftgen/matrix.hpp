#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "shiftgen/types.hpp"

namespace shiftgen {

/// Dense row-major matrix of doubles. The n x d sample matrix
/// ("particle cloud", one sample per row) is the common currency
/// between all modules; d stays small, so no sparse storage.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Matrix identity(std::size_t n);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    VecView row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    void set_row(std::size_t r, VecView v);
    Vec row_vec(std::size_t r) const { auto s = row(r); return Vec(s.begin(), s.end()); }

    /// True when every entry is finite.
    bool all_finite() const;

private:
    std::size_t rows_ = 0, cols_ = 0;
    std::vector<double> data_;
};

Matrix operator+(const Matrix& a, const Matrix& b);
Matrix operator-(const Matrix& a, const Matrix& b);
Matrix operator*(const Matrix& a, const Matrix& b);   // matrix product
Matrix operator*(double s, const Matrix& a);
Matrix transpose(const Matrix& a);
Vec matvec(const Matrix& a, VecView x);
double frobenius_norm(const Matrix& a);

/// Stacks rows of b under a (column counts must agree).
Matrix vstack(const Matrix& a, const Matrix& b);

// Small vector helpers shared across modules.
Vec vec_add(VecView a, VecView b);
Vec vec_sub(VecView a, VecView b);
Vec vec_scale(double s, VecView a);
double dot(VecView a, VecView b);
double norm2(VecView a);          // Euclidean norm
double sq_dist(VecView a, VecView b);

/// Shortest decimal form that round-trips to the same double.
std::string format_shortest(double v);

struct Csv {
    std::vector<std::string> columns;
    Matrix values;
};

/// Writes header + rows, comma separated, shortest round-trip floats.
/// Empty `columns` emits c0,c1,...
void write_csv(const std::filesystem::path& path, const Matrix& m,
               const std::vector<std::string>& columns = {});

/// Reads a CSV written by write_csv (or any numeric CSV with a header row).
/// Throws DataError naming the offending column on non-numeric fields.
Csv read_csv(const std::filesystem::path& path);

}  // namespace shiftgen
