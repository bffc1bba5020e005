#include "shiftgen/matrix.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace shiftgen {

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

void Matrix::set_row(std::size_t r, VecView v) {
    std::copy(v.begin(), v.end(), data_.begin() + static_cast<std::ptrdiff_t>(r * cols_));
}

bool Matrix::all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

static void check_same_shape(const Matrix& a, const Matrix& b, const char* op) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw std::invalid_argument(std::string(op) + ": shape mismatch");
}

Matrix operator+(const Matrix& a, const Matrix& b) {
    check_same_shape(a, b, "matrix add");
    Matrix r = a;
    for (std::size_t i = 0; i < r.data().size(); ++i) r.data()[i] += b.data()[i];
    return r;
}

Matrix operator-(const Matrix& a, const Matrix& b) {
    check_same_shape(a, b, "matrix sub");
    Matrix r = a;
    for (std::size_t i = 0; i < r.data().size(); ++i) r.data()[i] -= b.data()[i];
    return r;
}

Matrix operator*(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) throw std::invalid_argument("matrix product: inner dims disagree");
    Matrix r(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            for (std::size_t j = 0; j < b.cols(); ++j) r(i, j) += aik * b(k, j);
        }
    return r;
}

Matrix operator*(double s, const Matrix& a) {
    Matrix r = a;
    for (double& v : r.data()) v *= s;
    return r;
}

Matrix transpose(const Matrix& a) {
    Matrix r(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) r(j, i) = a(i, j);
    return r;
}

Vec matvec(const Matrix& a, VecView x) {
    if (a.cols() != x.size()) throw std::invalid_argument("matvec: dimension mismatch");
    Vec r(a.rows(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) r[i] = dot(a.row(i), x);
    return r;
}

double frobenius_norm(const Matrix& a) {
    double s = 0.0;
    for (double v : a.data()) s += v * v;
    return std::sqrt(s);
}

Matrix vstack(const Matrix& a, const Matrix& b) {
    if (a.empty()) return b;
    if (a.cols() != b.cols()) throw std::invalid_argument("vstack: column counts differ");
    Matrix r(a.rows() + b.rows(), a.cols());
    std::copy(a.data().begin(), a.data().end(), r.data().begin());
    std::copy(b.data().begin(), b.data().end(),
              r.data().begin() + static_cast<std::ptrdiff_t>(a.data().size()));
    return r;
}

Vec vec_add(VecView a, VecView b) {
    Vec r(a.begin(), a.end());
    for (std::size_t i = 0; i < r.size(); ++i) r[i] += b[i];
    return r;
}

Vec vec_sub(VecView a, VecView b) {
    Vec r(a.begin(), a.end());
    for (std::size_t i = 0; i < r.size(); ++i) r[i] -= b[i];
    return r;
}

Vec vec_scale(double s, VecView a) {
    Vec r(a.begin(), a.end());
    for (double& v : r) v *= s;
    return r;
}

double dot(VecView a, VecView b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm2(VecView a) { return std::sqrt(dot(a, a)); }

double sq_dist(VecView a, VecView b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

std::string format_shortest(double v) {
    char buf[40];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

void write_csv(const std::filesystem::path& path, const Matrix& m,
               const std::vector<std::string>& columns) {
    if (!columns.empty() && columns.size() != m.cols())
        throw std::invalid_argument("write_csv: header width disagrees with matrix");
    std::ofstream out(path);
    if (!out) throw DataError("write_csv: cannot open " + path.string());
    for (std::size_t j = 0; j < m.cols(); ++j) {
        if (j) out << ',';
        out << (columns.empty() ? "c" + std::to_string(j) : columns[j]);
    }
    out << '\n';
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j) {
            if (j) out << ',';
            out << format_shortest(m(i, j));
        }
        out << '\n';
    }
}

static std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    fields.push_back(cur);
    return fields;
}

Csv read_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("read_csv: cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw DataError("read_csv: empty file " + path.string());
    Csv csv;
    csv.columns = split_fields(line);
    const std::size_t d = csv.columns.size();

    std::vector<double> values;
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto fields = split_fields(line);
        if (fields.size() != d)
            throw DataError("read_csv: row " + std::to_string(rows + 1) + " has " +
                            std::to_string(fields.size()) + " fields, expected " + std::to_string(d));
        for (std::size_t j = 0; j < d; ++j) {
            double v = 0.0;
            const char* first = fields[j].data();
            const char* last = first + fields[j].size();
            auto res = std::from_chars(first, last, v);
            if (res.ec != std::errc{} || res.ptr != last)
                throw DataError("read_csv: non-numeric value '" + fields[j] + "' in column '" +
                                csv.columns[j] + "'");
            values.push_back(v);
        }
        ++rows;
    }
    csv.values = Matrix(rows, d);
    std::copy(values.begin(), values.end(), csv.values.data().begin());
    return csv;
}

}  // namespace shiftgen
