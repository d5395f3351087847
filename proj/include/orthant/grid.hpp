#pragma once

#include <cstdint>
#include <vector>

#include "orthant/cone.hpp"
#include "orthant/lattice.hpp"

namespace orthant {

/// Dense indexing of Lambda_{r+pad}. Axis 0 has the largest stride, so
/// increasing cell index is lexicographic order on vertices.
class WindowGrid {
public:
    WindowGrid(int d, int radius, int pad = 1) : d_(d), radius_(radius), pad_(pad), side_(2 * (radius + pad) + 1) {
        require(d >= 2 && d <= kMaxDim, "WindowGrid: dimension must be in 2..4");
        require(radius >= 0, "WindowGrid: negative radius");
        std::int64_t s = 1;
        for (int i = d - 1; i >= 0; --i) {
            stride_[i] = s;
            s *= side_;
        }
        require(s < (std::int64_t{1} << 31), "WindowGrid: window too large");
        size_ = static_cast<std::size_t>(s);
    }

    int dim() const { return d_; }
    int radius() const { return radius_; }
    int pad() const { return pad_; }
    std::size_t size() const { return size_; }
    std::int64_t stride(int axis) const { return stride_[axis]; }

    bool addressable(const Vertex& v) const { return v.sup_norm() <= radius_ + pad_; }

    std::uint32_t index(const Vertex& v) const {
        std::int64_t idx = 0;
        for (int i = 0; i < d_; ++i) idx += (v.coords[i] + radius_ + pad_) * stride_[i];
        return static_cast<std::uint32_t>(idx);
    }

    Vertex vertex(std::uint32_t idx) const {
        Vertex v(d_);
        std::int64_t rest = idx;
        for (int i = 0; i < d_; ++i) {
            v.coords[i] = static_cast<std::int32_t>(rest / stride_[i]) - radius_ - pad_;
            rest %= stride_[i];
        }
        return v;
    }

    std::int32_t coord(std::uint32_t idx, int axis) const {
        return static_cast<std::int32_t>((idx / stride_[axis]) % side_) - radius_ - pad_;
    }

    int sup_norm(std::uint32_t idx) const {
        int m = 0;
        for (int i = 0; i < d_; ++i) {
            const int c = coord(idx, i);
            m = std::max(m, c < 0 ? -c : c);
        }
        return m;
    }

    bool in_window(std::uint32_t idx) const { return sup_norm(idx) <= radius_; }

    /// Neighbour offset for +-e_axis.
    std::int64_t offset(int axis, int sign) const { return sign * stride_[axis]; }

private:
    int d_;
    int radius_;
    int pad_;
    int side_;
    std::array<std::int64_t, kMaxDim> stride_{};
    std::size_t size_ = 0;
};

/// Membership set over grid cells, cleared in O(1) by bumping an epoch.
class StampSet {
public:
    explicit StampSet(std::size_t n = 0) : stamp_(n, 0) {}

    void resize(std::size_t n) {
        if (stamp_.size() != n) {
            stamp_.assign(n, 0);
            epoch_ = 1;
        }
    }
    void clear() {
        if (++epoch_ == 0) {
            std::fill(stamp_.begin(), stamp_.end(), 0);
            epoch_ = 1;
        }
    }
    bool contains(std::uint32_t i) const { return stamp_[i] == epoch_; }
    /// Returns true if newly inserted.
    bool insert(std::uint32_t i) {
        if (stamp_[i] == epoch_) return false;
        stamp_[i] = epoch_;
        return true;
    }
    void erase(std::uint32_t i) { stamp_[i] = 0; }
    std::size_t capacity() const { return stamp_.size(); }

private:
    std::vector<std::uint32_t> stamp_;
    std::uint32_t epoch_ = 1;
};

}  // namespace orthant
