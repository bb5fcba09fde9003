#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace lss {

// Dense row-major tensor of doubles. Rank is dynamic but everything in this
// project is rank 1..4: [n], [c,h,w], [n,c,h,w] or [co,ci,kh,kw].
class Tensor {
public:
    Tensor() = default;

    explicit Tensor(std::vector<int> shape_) : shape(std::move(shape_)) {
        for (int d : shape) {
            if (d <= 0) throw std::invalid_argument("Tensor: non-positive dim");
        }
        data.assign(static_cast<size_t>(count(shape)), 0.0);
    }

    static Tensor zeros(std::vector<int> shape) { return Tensor(std::move(shape)); }

    static Tensor full(std::vector<int> shape, double v) {
        Tensor t(std::move(shape));
        std::fill(t.data.begin(), t.data.end(), v);
        return t;
    }

    static int64_t count(const std::vector<int>& shape) {
        int64_t n = 1;
        for (int d : shape) n *= d;
        return n;
    }

    int64_t size() const { return static_cast<int64_t>(data.size()); }
    int rank() const { return static_cast<int>(shape.size()); }

    int dim(int i) const {
        if (i < 0 || i >= rank()) throw std::out_of_range("Tensor::dim");
        return shape[static_cast<size_t>(i)];
    }

    double* ptr() { return data.data(); }
    const double* ptr() const { return data.data(); }

    double& operator[](int64_t i) { return data[static_cast<size_t>(i)]; }
    double operator[](int64_t i) const { return data[static_cast<size_t>(i)]; }

    // [c,h,w] addressing
    double& at3(int c, int y, int x) {
        return data[static_cast<size_t>((static_cast<int64_t>(c) * shape[1] + y) * shape[2] + x)];
    }
    double at3(int c, int y, int x) const {
        return data[static_cast<size_t>((static_cast<int64_t>(c) * shape[1] + y) * shape[2] + x)];
    }

    // [a,b,h,w] addressing
    double& at4(int a, int b, int y, int x) {
        return data[static_cast<size_t>(((static_cast<int64_t>(a) * shape[1] + b) * shape[2] + y) * shape[3] + x)];
    }
    double at4(int a, int b, int y, int x) const {
        return data[static_cast<size_t>(((static_cast<int64_t>(a) * shape[1] + b) * shape[2] + y) * shape[3] + x)];
    }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }

    Tensor& operator+=(const Tensor& o) {
        require_same(o, "operator+=");
        for (size_t i = 0; i < data.size(); ++i) data[i] += o.data[i];
        return *this;
    }
    Tensor& operator-=(const Tensor& o) {
        require_same(o, "operator-=");
        for (size_t i = 0; i < data.size(); ++i) data[i] -= o.data[i];
        return *this;
    }
    Tensor& operator*=(double s) {
        for (double& v : data) v *= s;
        return *this;
    }

    friend Tensor operator+(Tensor a, const Tensor& b) { a += b; return a; }
    friend Tensor operator-(Tensor a, const Tensor& b) { a -= b; return a; }
    friend Tensor operator*(Tensor a, double s) { a *= s; return a; }
    friend Tensor operator*(double s, Tensor a) { a *= s; return a; }

    double dot(const Tensor& o) const {
        require_same(o, "dot");
        double acc = 0.0;
        for (size_t i = 0; i < data.size(); ++i) acc += data[i] * o.data[i];
        return acc;
    }

    double sum() const { return std::accumulate(data.begin(), data.end(), 0.0); }
    double mean() const { return size() ? sum() / static_cast<double>(size()) : 0.0; }

    double mse(const Tensor& o) const {
        require_same(o, "mse");
        double acc = 0.0;
        for (size_t i = 0; i < data.size(); ++i) {
            double d = data[i] - o.data[i];
            acc += d * d;
        }
        return acc / static_cast<double>(size());
    }

    double variance() const {
        double m = mean(), acc = 0.0;
        for (double v : data) acc += (v - m) * (v - m);
        return size() ? acc / static_cast<double>(size()) : 0.0;
    }

    bool all_finite() const {
        for (double v : data) {
            if (!std::isfinite(v)) return false;
        }
        return true;
    }

    void require_finite(const std::string& who) const {
        if (!all_finite()) throw std::runtime_error(who + ": non-finite value");
    }

    std::string shape_str() const {
        std::string s = "[";
        for (int i = 0; i < rank(); ++i) s += (i ? "," : "") + std::to_string(shape[static_cast<size_t>(i)]);
        return s + "]";
    }

    std::vector<int> shape;
    std::vector<double> data;

private:
    void require_same(const Tensor& o, const char* who) const {
        if (!same_shape(o)) {
            throw std::invalid_argument(std::string(who) + ": shape mismatch " + shape_str() + " vs " + o.shape_str());
        }
    }
};

}  // namespace lss
