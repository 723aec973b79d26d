#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace avgemb {

enum class matrix_origin { synthetic, loaded };

// immutable-after-build row-major float32 store; dot products accumulate in
// double downstream, storage stays single precision
class embedding_matrix {
public:
  embedding_matrix() = default;
  embedding_matrix(std::size_t n_items, std::size_t dim)
      : n_(n_items), d_(dim), data_(n_items * dim, 0.0f) {}

  std::size_t n_items() const noexcept { return n_; }
  std::size_t dim() const noexcept { return d_; }

  float* row(std::size_t i) noexcept { return data_.data() + i * d_; }
  const float* row(std::size_t i) const noexcept { return data_.data() + i * d_; }
  std::span<const float> values() const noexcept { return data_; }
  std::span<float> values() noexcept { return data_; }

  bool has_ids() const noexcept { return !ids_.empty(); }
  const std::vector<std::string>& item_ids() const noexcept { return ids_; }
  std::vector<std::string>& item_ids() noexcept { return ids_; }

  matrix_origin origin() const noexcept { return origin_; }
  void set_origin(matrix_origin o) noexcept { origin_ = o; }
  // human-readable provenance, e.g. "normal(0,1) n=1000 d=128 seed=7/0"
  const std::string& label() const noexcept { return label_; }
  void set_label(std::string l) { label_ = std::move(l); }

private:
  std::size_t n_ = 0, d_ = 0;
  std::vector<float> data_;
  std::vector<std::string> ids_;
  matrix_origin origin_ = matrix_origin::synthetic;
  std::string label_;
};

}  // namespace avgemb
