#pragma once

#include <cassert>
#include <vector>

namespace haps {

/// Dense table indexed by (tone, user, cluster).
template <typename T>
class LinkArray {
 public:
  LinkArray() = default;
  LinkArray(int tones, int users, int clusters, const T& init = T{})
      : tones_(tones),
        users_(users),
        clusters_(clusters),
        data_(static_cast<size_t>(tones) * users * clusters, init) {}

  int tones() const { return tones_; }
  int users() const { return users_; }
  int clusters() const { return clusters_; }
  size_t size() const { return data_.size(); }

  T& operator()(int n, int u, int q) { return data_[index(n, u, q)]; }
  const T& operator()(int n, int u, int q) const { return data_[index(n, u, q)]; }

  auto begin() { return data_.begin(); }
  auto end() { return data_.end(); }
  auto begin() const { return data_.begin(); }
  auto end() const { return data_.end(); }

 private:
  size_t index(int n, int u, int q) const {
    assert(n >= 0 && n < tones_ && u >= 0 && u < users_ && q >= 0 && q < clusters_);
    return (static_cast<size_t>(n) * users_ + u) * clusters_ + q;
  }

  int tones_ = 0;
  int users_ = 0;
  int clusters_ = 0;
  std::vector<T> data_;
};

}  // namespace haps
