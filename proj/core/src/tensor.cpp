#include "pada/tensor.hpp"

#include <cmath>

#include "pada/errors.hpp"

namespace pada {

Tensor::Tensor(std::vector<std::size_t> s) : shape(std::move(s)) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    data.assign(n, 0.0);
}

std::size_t Tensor::numel() const {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return n;
}

double& Tensor::at(std::size_t r, std::size_t c) {
    if (shape.size() != 2) throw UsageError("Tensor::at(r,c) on non-matrix tensor");
    return data[r * shape[1] + c];
}

double Tensor::at(std::size_t r, std::size_t c) const {
    if (shape.size() != 2) throw UsageError("Tensor::at(r,c) on non-matrix tensor");
    return data[r * shape[1] + c];
}

bool Tensor::all_finite() const {
    for (double v : data) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

}  // namespace pada
