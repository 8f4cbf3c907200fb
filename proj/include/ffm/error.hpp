// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace ffm {

/// Base of every error thrown by the library.
class error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Box with non-positive or non-finite width/height.
class invalid_box_error : public error {
public:
  using error::error;
};

/// Box clipped to nothing.
class empty_box_error : public error {
public:
  using error::error;
};

class unknown_class_error : public error {
public:
  using error::error;
};

/// Part detection handed to a restore rule for a different class.
class mismatch_error : public error {
public:
  using error::error;
};

/// Tensor shape / channel disagreement in the reference network ops.
class shape_error : public error {
public:
  using error::error;
};

/// Malformed model spec. The message names the first offending layer.
class spec_error : public error {
public:
  using error::error;
};

/// Configuration value out of range. `key()` is the dotted key path.
class config_error : public error {
public:
  config_error(std::string key, const std::string &what)
      : error(key + ": " + what), key_(std::move(key)) {}
  const std::string &key() const noexcept { return key_; }

private:
  std::string key_;
};

class undefined_metric_error : public error {
public:
  using error::error;
};

/// Gradient requested where the loss is not differentiable.
class boundary_error : public error {
public:
  using error::error;
};

class generation_error : public error {
public:
  generation_error(std::size_t index, const std::string &what)
      : error("pedestrian " + std::to_string(index) + ": " + what),
        index_(index) {}
  std::size_t index() const noexcept { return index_; }

private:
  std::size_t index_;
};

} // namespace ffm
