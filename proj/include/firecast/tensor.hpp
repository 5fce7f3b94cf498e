#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace firecast {

/// Dense row-major tensor. Scalar type is float or double; the training
/// pipeline picks one at runtime (TrainConfig.precision).
template <class T>
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<T> data;

    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> s) : shape(std::move(s)), data(count_of(shape), T(0)) {}
    Tensor(std::vector<std::size_t> s, std::vector<T> d) : shape(std::move(s)), data(std::move(d)) {
        if (data.size() != count_of(shape))
            throw std::invalid_argument("Tensor: data length " + std::to_string(data.size()) +
                                        " does not match shape (" + shape_str() + ")");
    }

    static std::size_t count_of(const std::vector<std::size_t>& s) {
        std::size_t n = 1;
        for (std::size_t e : s) {
            if (e == 0) throw std::invalid_argument("Tensor: zero extent in shape");
            n *= e;
        }
        return n;
    }

    std::size_t size() const { return data.size(); }
    std::size_t dim(std::size_t i) const { return shape.at(i); }
    std::size_t rank() const { return shape.size(); }

    T& operator[](std::size_t i) { return data[i]; }
    const T& operator[](std::size_t i) const { return data[i]; }

    void fill(T v) { std::fill(data.begin(), data.end(), v); }
    void zero() { fill(T(0)); }

    bool all_finite() const {
        for (const T& v : data)
            if (!std::isfinite(static_cast<double>(v))) return false;
        return true;
    }

    std::string shape_str() const {
        std::string s;
        for (std::size_t i = 0; i < shape.size(); ++i) {
            if (i) s += "x";
            s += std::to_string(shape[i]);
        }
        return s.empty() ? "scalar" : s;
    }

    template <class U>
    Tensor<U> cast() const {
        Tensor<U> out;
        out.shape = shape;
        out.data.resize(data.size());
        for (std::size_t i = 0; i < data.size(); ++i) out.data[i] = static_cast<U>(data[i]);
        return out;
    }

    friend bool operator==(const Tensor& a, const Tensor& b) {
        return a.shape == b.shape && a.data == b.data;
    }
};

inline bool same_shape(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
    return a == b;
}

template <class T>
void require_shape(const Tensor<T>& t, const std::vector<std::size_t>& want, const char* what) {
    if (t.shape != want) {
        Tensor<T> w;
        w.shape = want;
        throw std::invalid_argument(std::string(what) + ": expected shape (" + w.shape_str() +
                                    "), got (" + t.shape_str() + ")");
    }
}

}  // namespace firecast
