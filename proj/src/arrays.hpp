#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

namespace rbsde {

// Flat path-major storage used across the library. CellArray holds one
// d-vector per (path, step) with step < N (increments, Z, theta);
// StateArray holds one d-vector per (path, node) with node <= N;
// NodeArray holds one scalar per (path, node).

class CellArray {
public:
    CellArray() = default;
    CellArray(std::size_t paths, std::size_t steps, std::size_t dim, double fill = 0.0)
        : paths_(paths), steps_(steps), dim_(dim), data_(paths * steps * dim, fill) {}

    std::size_t paths() const { return paths_; }
    std::size_t steps() const { return steps_; }
    std::size_t dim() const { return dim_; }

    double& at(std::size_t m, std::size_t i, std::size_t k) {
        return data_[(m * steps_ + i) * dim_ + k];
    }
    double at(std::size_t m, std::size_t i, std::size_t k) const {
        return data_[(m * steps_ + i) * dim_ + k];
    }
    Eigen::Map<const Eigen::VectorXd> vec(std::size_t m, std::size_t i) const {
        return {data_.data() + (m * steps_ + i) * dim_,
                static_cast<Eigen::Index>(dim_)};
    }
    Eigen::Map<Eigen::VectorXd> vec(std::size_t m, std::size_t i) {
        return {data_.data() + (m * steps_ + i) * dim_,
                static_cast<Eigen::Index>(dim_)};
    }

    const std::vector<double>& data() const { return data_; }
    std::vector<double>& data() { return data_; }

    bool same_shape(const CellArray& o) const {
        return paths_ == o.paths_ && steps_ == o.steps_ && dim_ == o.dim_;
    }

private:
    std::size_t paths_ = 0, steps_ = 0, dim_ = 0;
    std::vector<double> data_;
};

class StateArray {
public:
    StateArray() = default;
    StateArray(std::size_t paths, std::size_t nodes, std::size_t dim)
        : paths_(paths), nodes_(nodes), dim_(dim), data_(paths * nodes * dim, 0.0) {}

    std::size_t paths() const { return paths_; }
    std::size_t nodes() const { return nodes_; }
    std::size_t dim() const { return dim_; }

    double& at(std::size_t m, std::size_t i, std::size_t k) {
        return data_[(m * nodes_ + i) * dim_ + k];
    }
    double at(std::size_t m, std::size_t i, std::size_t k) const {
        return data_[(m * nodes_ + i) * dim_ + k];
    }
    Eigen::Map<const Eigen::VectorXd> vec(std::size_t m, std::size_t i) const {
        return {data_.data() + (m * nodes_ + i) * dim_,
                static_cast<Eigen::Index>(dim_)};
    }
    Eigen::Map<Eigen::VectorXd> vec(std::size_t m, std::size_t i) {
        return {data_.data() + (m * nodes_ + i) * dim_,
                static_cast<Eigen::Index>(dim_)};
    }

    const std::vector<double>& data() const { return data_; }

private:
    std::size_t paths_ = 0, nodes_ = 0, dim_ = 0;
    std::vector<double> data_;
};

class NodeArray {
public:
    NodeArray() = default;
    NodeArray(std::size_t paths, std::size_t nodes, double fill = 0.0)
        : paths_(paths), nodes_(nodes), data_(paths * nodes, fill) {}

    std::size_t paths() const { return paths_; }
    std::size_t nodes() const { return nodes_; }

    double& at(std::size_t m, std::size_t i) { return data_[m * nodes_ + i]; }
    double at(std::size_t m, std::size_t i) const { return data_[m * nodes_ + i]; }

    const std::vector<double>& data() const { return data_; }
    std::vector<double>& data() { return data_; }

    bool same_shape(const NodeArray& o) const {
        return paths_ == o.paths_ && nodes_ == o.nodes_;
    }

private:
    std::size_t paths_ = 0, nodes_ = 0;
    std::vector<double> data_;
};

} // namespace rbsde
