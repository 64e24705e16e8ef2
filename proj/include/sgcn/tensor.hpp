#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "sgcn/errors.hpp"
#include "sgcn/rng.hpp"

namespace sgcn {

/// Dense 2-D array of doubles, row-major. Values are immutable once
/// constructed; storage is shared, so copies are cheap and a tensor recorded
/// on a tape can never be mutated behind the tape's back. A tensor may carry
/// a handle to the tape node that produced it (node() >= 0).
class Tensor {
public:
    Tensor() : rows_(0), cols_(0), data_(std::make_shared<std::vector<double>>()) {}

    Tensor(int rows, int cols, std::vector<double> values)
        : rows_(rows), cols_(cols),
          data_(std::make_shared<std::vector<double>>(std::move(values))) {
        if (rows_ < 0 || cols_ < 0)
            throw ShapeError("Tensor: negative dimension " + shape_str());
        if (data_->size() != static_cast<std::size_t>(rows_) * cols_)
            throw ShapeError("Tensor: " + std::to_string(data_->size()) +
                             " values for shape " + shape_str());
    }

    static Tensor zeros(int rows, int cols) {
        return Tensor(rows, cols, std::vector<double>(static_cast<std::size_t>(rows) * cols, 0.0));
    }

    static Tensor full(int rows, int cols, double v) {
        return Tensor(rows, cols, std::vector<double>(static_cast<std::size_t>(rows) * cols, v));
    }

    static Tensor row(std::vector<double> values) {
        int c = static_cast<int>(values.size());
        return Tensor(1, c, std::move(values));
    }

    static Tensor scalar(double v) { return Tensor(1, 1, {v}); }

    // Glorot-uniform fill: [-sqrt(6/(fan_in+fan_out)), +sqrt(6/(fan_in+fan_out))].
    static Tensor glorot(int rows, int cols, Rng& rng);

    // Uniform fill in [lo, hi).
    static Tensor uniform(int rows, int cols, double lo, double hi, Rng& rng);

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    std::size_t size() const { return data_->size(); }

    double operator()(int r, int c) const {
        return (*data_)[static_cast<std::size_t>(r) * cols_ + c];
    }

    const std::vector<double>& values() const { return *data_; }

    // Value at flat row-major index.
    double at(std::size_t i) const { return (*data_)[i]; }

    // Fresh tensor with one value replaced; used by finite differencing.
    Tensor with_value(std::size_t i, double v) const {
        std::vector<double> copy(*data_);
        copy[i] = v;
        return Tensor(rows_, cols_, std::move(copy));
    }

    bool same_shape(const Tensor& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

    std::string shape_str() const {
        return std::to_string(rows_) + "x" + std::to_string(cols_);
    }

    /// Tape handle; -1 when the tensor is a free value.
    int node() const { return node_; }
    bool on_tape() const { return node_ >= 0; }

private:
    friend class Tape;

    int rows_;
    int cols_;
    std::shared_ptr<const std::vector<double>> data_;
    int node_ = -1;
    std::uint64_t tape_id_ = 0;
};

} // namespace sgcn
