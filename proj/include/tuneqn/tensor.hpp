// Copyright 2026 The TuneQn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <variant>
#include <vector>

#include "tuneqn/errors.hpp"

namespace tuneqn {

static_assert(std::endian::native == std::endian::little,
              "container formats are read and written as raw little-endian buffers");

/// Element type codes; the numeric values are the on-disk tensor file codes.
enum class DType : std::uint8_t { F32 = 0, I8 = 1, U8 = 2, I32 = 3, I64 = 4 };

std::string_view dtype_name(DType dtype);
DType dtype_from_name(std::string_view name);
DType dtype_from_code(std::uint8_t code);
std::size_t dtype_size(DType dtype);

template <class T>
struct dtype_of;
template <>
struct dtype_of<float> : std::integral_constant<DType, DType::F32> {};
template <>
struct dtype_of<std::int8_t> : std::integral_constant<DType, DType::I8> {};
template <>
struct dtype_of<std::uint8_t> : std::integral_constant<DType, DType::U8> {};
template <>
struct dtype_of<std::int32_t> : std::integral_constant<DType, DType::I32> {};
template <>
struct dtype_of<std::int64_t> : std::integral_constant<DType, DType::I64> {};

using Shape = std::vector<std::int64_t>;

/// Product of extents; 1 for a scalar. Throws ArgumentError on negative extents.
std::int64_t element_count(const Shape& shape);
std::string shape_string(const Shape& shape);

/// Dense row-major n-dimensional array with value semantics.
class Tensor {
public:
    /// Empty F32 tensor of shape [0].
    Tensor();
    /// Zero-filled tensor.
    Tensor(DType dtype, Shape shape);

    template <class T>
    Tensor(Shape shape, std::vector<T> values) : dtype_(dtype_of<T>::value), shape_(std::move(shape)) {
        if (element_count(shape_) != static_cast<std::int64_t>(values.size()))
            throw ArgumentError("tensor of shape " + shape_string(shape_) + " given " +
                                std::to_string(values.size()) + " elements");
        data_ = std::move(values);
    }

    static Tensor scalar(float value) { return Tensor(Shape{}, std::vector<float>{value}); }
    static Tensor from_bytes(DType dtype, Shape shape, std::span<const std::byte> raw);

    DType dtype() const noexcept { return dtype_; }
    const Shape& shape() const noexcept { return shape_; }
    std::int64_t rank() const noexcept { return static_cast<std::int64_t>(shape_.size()); }
    std::int64_t size() const noexcept;
    std::int64_t dim(std::int64_t axis) const;

    template <class T>
    std::span<const T> values() const {
        require(dtype_of<T>::value);
        return std::get<std::vector<T>>(data_);
    }
    template <class T>
    std::span<T> values() {
        require(dtype_of<T>::value);
        return std::get<std::vector<T>>(data_);
    }

    std::span<const std::byte> bytes() const;
    std::size_t byte_size() const noexcept { return static_cast<std::size_t>(size()) * dtype_size(dtype_); }

    /// Same data under a new shape with equal element count.
    Tensor reshaped(Shape shape) const;

    /// Bitwise equality: dtype, shape and raw bytes.
    friend bool operator==(const Tensor& a, const Tensor& b);

    using Storage = std::variant<std::vector<float>, std::vector<std::int8_t>, std::vector<std::uint8_t>,
                                 std::vector<std::int32_t>, std::vector<std::int64_t>>;

private:
    void require(DType dtype) const;

    DType dtype_;
    Shape shape_;
    Storage data_;
};

/// Rows [begin, end) along axis 0.
Tensor slice_batch(const Tensor& t, std::int64_t begin, std::int64_t end);
/// Concatenation along axis 0; all parts must agree on dtype and trailing extents.
Tensor concat_batch(std::span<const Tensor> parts);
/// Stacks equally-shaped tensors into a new leading axis.
Tensor stack(std::span<const Tensor> items);

} // namespace tuneqn
