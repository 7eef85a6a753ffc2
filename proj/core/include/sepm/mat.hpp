#pragma once

#include <cstddef>
#include <vector>

namespace sepm {

// Minimal dense row-major matrix.  The samplers only ever need indexed
// access and whole-buffer iteration, so this stays deliberately small.
template <typename T>
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, T fill = T{})
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    const T& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }

    T* row(std::size_t r) { return data_.data() + r * cols_; }
    const T* row(std::size_t r) const { return data_.data() + r * cols_; }

    void assign(std::size_t rows, std::size_t cols, T fill = T{}) {
        rows_ = rows;
        cols_ = cols;
        data_.assign(rows * cols, fill);
    }
    void fill(T value) { data_.assign(data_.size(), value); }

    std::vector<T>& data() { return data_; }
    const std::vector<T>& data() const { return data_; }

    auto begin() { return data_.begin(); }
    auto end() { return data_.end(); }
    auto begin() const { return data_.begin(); }
    auto end() const { return data_.end(); }

    friend bool operator==(const Matrix& a, const Matrix& b) {
        return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<T> data_;
};

using Mat = Matrix<double>;
using IMat = Matrix<long long>;

}  // namespace sepm
