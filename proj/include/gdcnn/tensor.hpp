#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace gdcnn {

/// Dense row-major float32 tensor with a dynamic shape.
///
/// This is the single value carrier for the whole library: images,
/// featuremaps, weights and gradients are all Tensors. Data is stored
/// contiguously; indexing helpers are provided for ranks 1-4 and hot
/// kernels work on the raw pointer directly.
class Tensor {
public:
    Tensor() = default;

    /// Zero-filled tensor of the given shape. All dims must be positive.
    explicit Tensor(std::vector<int> shape);

    Tensor(std::vector<int> shape, std::vector<float> values);

    static Tensor full(std::vector<int> shape, float value);

    const std::vector<int>& shape() const { return shape_; }
    int rank() const { return static_cast<int>(shape_.size()); }
    int dim(int i) const { return shape_[static_cast<size_t>(i)]; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    float* data() { return data_.data(); }
    const float* data() const { return data_.data(); }
    std::vector<float>& values() { return data_; }
    const std::vector<float>& values() const { return data_; }

    float& operator[](std::size_t i) { return data_[i]; }
    float operator[](std::size_t i) const { return data_[i]; }

    // Row-major accessors; no bounds checks in release builds.
    float& at(int i, int j) { return data_[idx2(i, j)]; }
    float at(int i, int j) const { return data_[idx2(i, j)]; }
    float& at(int i, int j, int k) { return data_[idx3(i, j, k)]; }
    float at(int i, int j, int k) const { return data_[idx3(i, j, k)]; }
    float& at(int i, int j, int k, int l) { return data_[idx4(i, j, k, l)]; }
    float at(int i, int j, int k, int l) const { return data_[idx4(i, j, k, l)]; }

    /// Reinterpret the shape; element count must not change.
    void reshape(std::vector<int> new_shape);

    void fill(float value);
    bool all_finite() const;

    /// "CxHxW" style rendering used by error messages.
    std::string shape_str() const;

private:
    std::size_t idx2(int i, int j) const {
        return static_cast<std::size_t>(i) * static_cast<std::size_t>(shape_[1]) +
               static_cast<std::size_t>(j);
    }
    std::size_t idx3(int i, int j, int k) const {
        return (static_cast<std::size_t>(i) * static_cast<std::size_t>(shape_[1]) +
                static_cast<std::size_t>(j)) *
                   static_cast<std::size_t>(shape_[2]) +
               static_cast<std::size_t>(k);
    }
    std::size_t idx4(int i, int j, int k, int l) const {
        return ((static_cast<std::size_t>(i) * static_cast<std::size_t>(shape_[1]) +
                 static_cast<std::size_t>(j)) *
                    static_cast<std::size_t>(shape_[2]) +
                static_cast<std::size_t>(k)) *
                   static_cast<std::size_t>(shape_[3]) +
               static_cast<std::size_t>(l);
    }

    std::vector<int> shape_;
    std::vector<float> data_;
};

std::size_t shape_numel(const std::vector<int>& shape);
std::string shape_to_string(const std::vector<int>& shape);

}  // namespace gdcnn
