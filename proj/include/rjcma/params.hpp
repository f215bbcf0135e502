// Copyright 2026 The RJCMA Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "rjcma/tensor.hpp"

namespace rjcma {

struct NamedTensor {
  std::string name;
  Tensor value;
};

/// Ordered collection of named tensors. Insertion order is the canonical
/// order for checkpoints, optimizer state and gradient reports.
class ParamStore {
 public:
  /// Appends a tensor; throws ConfigError on a duplicate name.
  std::size_t add(std::string name, Tensor value);

  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  std::size_t scalar_count() const noexcept;

  NamedTensor& operator[](std::size_t i) { return entries_[i]; }
  const NamedTensor& operator[](std::size_t i) const { return entries_[i]; }

  std::optional<std::size_t> find(const std::string& name) const;
  /// Throws ConfigError if absent.
  std::size_t index_of(const std::string& name) const;
  Tensor& at(const std::string& name) { return entries_[index_of(name)].value; }
  const Tensor& at(const std::string& name) const { return entries_[index_of(name)].value; }

  auto begin() { return entries_.begin(); }
  auto end() { return entries_.end(); }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

  /// Same names, same shapes, same bits.
  bool bit_equal(const ParamStore& other) const;

 private:
  std::vector<NamedTensor> entries_;
};

}  // namespace rjcma
