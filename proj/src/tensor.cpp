// Copyright 2026 The TuneQn Authors
// SPDX-License-Identifier: Apache-2.0

#include "tuneqn/tensor.hpp"

#include <algorithm>
#include <cstring>
#include <sstream>

namespace tuneqn {

UnsupportedOpError::UnsupportedOpError(std::vector<std::string> ops)
    : Error([&] {
          std::string msg = "unsupported operator(s):";
          for (const auto& op : ops)
              msg += " " + op;
          return msg;
      }()),
      ops_(std::move(ops)) {}

std::string_view dtype_name(DType dtype) {
    switch (dtype) {
    case DType::F32: return "F32";
    case DType::I8: return "I8";
    case DType::U8: return "U8";
    case DType::I32: return "I32";
    case DType::I64: return "I64";
    }
    throw ArgumentError("invalid dtype");
}

DType dtype_from_name(std::string_view name) {
    for (DType d : {DType::F32, DType::I8, DType::U8, DType::I32, DType::I64})
        if (dtype_name(d) == name)
            return d;
    throw FormatError("unknown dtype '" + std::string(name) + "'");
}

DType dtype_from_code(std::uint8_t code) {
    if (code > static_cast<std::uint8_t>(DType::I64))
        throw FormatError("unknown dtype code " + std::to_string(code));
    return static_cast<DType>(code);
}

std::size_t dtype_size(DType dtype) {
    switch (dtype) {
    case DType::F32: return 4;
    case DType::I8: return 1;
    case DType::U8: return 1;
    case DType::I32: return 4;
    case DType::I64: return 8;
    }
    throw ArgumentError("invalid dtype");
}

std::int64_t element_count(const Shape& shape) {
    std::int64_t n = 1;
    for (auto d : shape) {
        if (d < 0)
            throw ArgumentError("negative extent in shape " + shape_string(shape));
        n *= d;
    }
    return n;
}

std::string shape_string(const Shape& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i)
        os << (i ? "," : "") << shape[i];
    os << ']';
    return os.str();
}

namespace {

Tensor::Storage make_storage(DType dtype, std::size_t n) {
    switch (dtype) {
    case DType::F32: return std::vector<float>(n);
    case DType::I8: return std::vector<std::int8_t>(n);
    case DType::U8: return std::vector<std::uint8_t>(n);
    case DType::I32: return std::vector<std::int32_t>(n);
    case DType::I64: return std::vector<std::int64_t>(n);
    }
    throw ArgumentError("invalid dtype");
}

} // namespace

Tensor::Tensor() : dtype_(DType::F32), shape_{0}, data_(std::vector<float>{}) {}

Tensor::Tensor(DType dtype, Shape shape)
    : dtype_(dtype), shape_(std::move(shape)),
      data_(make_storage(dtype, static_cast<std::size_t>(element_count(shape_)))) {}

Tensor Tensor::from_bytes(DType dtype, Shape shape, std::span<const std::byte> raw) {
    Tensor t(dtype, std::move(shape));
    if (raw.size() != t.byte_size())
        throw FormatError("tensor of shape " + shape_string(t.shape_) + " needs " + std::to_string(t.byte_size()) +
                          " bytes, got " + std::to_string(raw.size()));
    std::visit([&](auto& v) { std::memcpy(v.data(), raw.data(), raw.size()); }, t.data_);
    return t;
}

std::int64_t Tensor::size() const noexcept {
    return std::visit([](const auto& v) { return static_cast<std::int64_t>(v.size()); }, data_);
}

std::int64_t Tensor::dim(std::int64_t axis) const {
    if (axis < 0)
        axis += rank();
    if (axis < 0 || axis >= rank())
        throw ArgumentError("axis " + std::to_string(axis) + " out of range for rank " + std::to_string(rank()));
    return shape_[static_cast<std::size_t>(axis)];
}

std::span<const std::byte> Tensor::bytes() const {
    return std::visit([](const auto& v) { return std::as_bytes(std::span(v)); }, data_);
}

Tensor Tensor::reshaped(Shape shape) const {
    if (element_count(shape) != size())
        throw ArgumentError("cannot reshape " + shape_string(shape_) + " to " + shape_string(shape));
    Tensor t = *this;
    t.shape_ = std::move(shape);
    return t;
}

void Tensor::require(DType dtype) const {
    if (dtype != dtype_)
        throw ArgumentError("tensor holds " + std::string(dtype_name(dtype_)) + ", requested " +
                            std::string(dtype_name(dtype)));
}

bool operator==(const Tensor& a, const Tensor& b) {
    if (a.dtype_ != b.dtype_ || a.shape_ != b.shape_)
        return false;
    auto x = a.bytes();
    auto y = b.bytes();
    return x.size() == y.size() && std::memcmp(x.data(), y.data(), x.size()) == 0;
}

Tensor slice_batch(const Tensor& t, std::int64_t begin, std::int64_t end) {
    if (t.rank() == 0 || begin < 0 || end < begin || end > t.dim(0))
        throw ArgumentError("bad batch slice [" + std::to_string(begin) + "," + std::to_string(end) + ") of " +
                            shape_string(t.shape()));
    Shape shape = t.shape();
    shape[0] = end - begin;
    const std::size_t row = t.byte_size() / static_cast<std::size_t>(std::max<std::int64_t>(t.dim(0), 1));
    auto raw = t.bytes().subspan(static_cast<std::size_t>(begin) * row, static_cast<std::size_t>(end - begin) * row);
    return Tensor::from_bytes(t.dtype(), std::move(shape), raw);
}

Tensor concat_batch(std::span<const Tensor> parts) {
    if (parts.empty())
        throw ArgumentError("concat of zero tensors");
    if (parts.size() == 1)
        return parts[0];
    const Tensor& first = parts[0];
    if (first.rank() == 0)
        throw ArgumentError("cannot concatenate scalars along the batch axis");
    Shape shape = first.shape();
    shape[0] = 0;
    std::vector<std::byte> raw;
    for (const auto& p : parts) {
        if (p.dtype() != first.dtype() || p.rank() != first.rank() ||
            !std::equal(p.shape().begin() + 1, p.shape().end(), first.shape().begin() + 1))
            throw ArgumentError("concat of mismatched tensors " + shape_string(first.shape()) + " and " +
                                shape_string(p.shape()));
        shape[0] += p.dim(0);
        auto b = p.bytes();
        raw.insert(raw.end(), b.begin(), b.end());
    }
    return Tensor::from_bytes(first.dtype(), std::move(shape), raw);
}

Tensor stack(std::span<const Tensor> items) {
    if (items.empty())
        throw ArgumentError("stack of zero tensors");
    std::vector<Tensor> rows;
    rows.reserve(items.size());
    for (const auto& it : items) {
        Shape s{1};
        s.insert(s.end(), it.shape().begin(), it.shape().end());
        rows.push_back(it.reshaped(std::move(s)));
    }
    return concat_batch(rows);
}

} // namespace tuneqn
