#pragma once

#include <cstddef>
#include <cstring>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace satadv {

using Index = Eigen::Index;
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

template <class T>
std::string shape_of(const T& t) {
    return std::to_string(t.rows()) + "x" + std::to_string(t.cols());
}

// Throws ShapeError "<what>: expected RxC, got RxC" on mismatch.
template <class T>
void require_shape(const T& t, Index rows, Index cols, std::string_view what) {
    if (t.rows() != rows || t.cols() != cols) {
        throw ShapeError(std::string(what) + ": expected " + std::to_string(rows) +
                         "x" + std::to_string(cols) + ", got " + shape_of(t));
    }
}

// Parameter structs expose `visit(f)` calling f(name, tensor) for each array
// in a fixed order. The helpers below work on any such struct.

template <class P>
std::vector<std::span<double>> spans_of(P& p) {
    std::vector<std::span<double>> out;
    p.visit([&](std::string_view, auto& t) {
        out.emplace_back(t.data(), static_cast<std::size_t>(t.size()));
    });
    return out;
}

template <class P>
std::vector<std::span<const double>> spans_of(const P& p) {
    std::vector<std::span<const double>> out;
    p.visit([&](std::string_view, const auto& t) {
        out.emplace_back(t.data(), static_cast<std::size_t>(t.size()));
    });
    return out;
}

template <class P>
std::size_t param_count(const P& p) {
    std::size_t n = 0;
    p.visit([&](std::string_view, const auto& t) { n += static_cast<std::size_t>(t.size()); });
    return n;
}

template <class P>
P zeros_like(const P& p) {
    P z = p;
    z.visit([](std::string_view, auto& t) { t.setZero(); });
    return z;
}

// y += a * x, arrays matched by visit order.
template <class P>
void axpy(double a, const P& x, P& y) {
    auto xs = spans_of(x);
    auto ys = spans_of(y);
    for (std::size_t k = 0; k < xs.size(); ++k) {
        if (xs[k].size() != ys[k].size()) {
            throw ShapeError("axpy: parameter shapes differ");
        }
        for (std::size_t i = 0; i < xs[k].size(); ++i) {
            ys[k][i] += a * xs[k][i];
        }
    }
}

template <class P>
void scale(double a, P& p) {
    p.visit([&](std::string_view, auto& t) { t *= a; });
}

template <class P>
bool all_finite(const P& p) {
    bool ok = true;
    p.visit([&](std::string_view, const auto& t) { ok = ok && t.allFinite(); });
    return ok;
}

template <class P>
bool bitwise_equal(const P& a, const P& b) {
    auto as = spans_of(a);
    auto bs = spans_of(b);
    if (as.size() != bs.size()) {
        return false;
    }
    for (std::size_t k = 0; k < as.size(); ++k) {
        if (as[k].size() != bs[k].size() ||
            std::memcmp(as[k].data(), bs[k].data(), as[k].size_bytes()) != 0) {
            return false;
        }
    }
    return true;
}

}  // namespace satadv
