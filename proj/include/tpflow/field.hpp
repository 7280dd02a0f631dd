#pragma once

#include <cassert>
#include <cstddef>
#include <vector>

namespace tpflow {

// Dense 2-D array of doubles. Index (i, j): i runs east (columns),
// j runs north (rows). Storage is row-major with j as the slow index.
class Field {
public:
    Field() = default;
    Field(int nx, int ny, double init = 0.0)
        : nx_(nx), ny_(ny), data_(static_cast<std::size_t>(nx) * ny, init) {}

    int nx() const { return nx_; }
    int ny() const { return ny_; }
    std::size_t size() const { return data_.size(); }

    double& operator()(int i, int j) {
        assert(i >= 0 && i < nx_ && j >= 0 && j < ny_);
        return data_[static_cast<std::size_t>(j) * nx_ + i];
    }
    double operator()(int i, int j) const {
        assert(i >= 0 && i < nx_ && j >= 0 && j < ny_);
        return data_[static_cast<std::size_t>(j) * nx_ + i];
    }
    double& operator[](std::size_t k) { return data_[k]; }
    double operator[](std::size_t k) const { return data_[k]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    void fill(double v) { data_.assign(data_.size(), v); }

    bool same_shape(const Field& o) const { return nx_ == o.nx_ && ny_ == o.ny_; }

private:
    int nx_ = 0;
    int ny_ = 0;
    std::vector<double> data_;
};

// Compensated (Kahan) summation, used for mass bookkeeping.
class KahanSum {
public:
    void add(double x) {
        double y = x - comp_;
        double t = sum_ + y;
        comp_ = (t - sum_) - y;
        sum_ = t;
    }
    double value() const { return sum_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

} // namespace tpflow
