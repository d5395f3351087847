#pragma once

// Vertices of Z^d, the orthant / half-orthant edge rules, and the reproducible
// site field omega that drives every simulation in the library.

#include <algorithm>
#include <array>
#include <atomic>
#include <bit>
#include <compare>
#include <concepts>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <ostream>
#include <string>
#include <vector>

#include "orthant/error.hpp"

namespace orthant {

inline constexpr int kMaxDim = 4;

/// A point of Z^d, 2 <= d <= 4. Coordinates beyond `dim` are kept at zero so
/// the defaulted ordering is the lexicographic order on the first `dim` axes.
struct Vertex {
    std::array<std::int32_t, kMaxDim> coords{};
    std::int32_t dim = 2;

    Vertex() = default;
    explicit Vertex(int d) : dim(d) {}
    Vertex(std::initializer_list<std::int32_t> values) : dim(static_cast<std::int32_t>(values.size())) {
        require(values.size() >= 1 && values.size() <= kMaxDim, "Vertex: dimension out of range");
        int i = 0;
        for (auto v : values) coords[i++] = v;
    }

    static Vertex origin(int d) { return Vertex(d); }
    static Vertex unit(int d, int axis, int sign = 1) {
        Vertex v(d);
        v.coords[axis] = sign;
        return v;
    }
    static Vertex ones(int d, std::int32_t scale = 1) {
        Vertex v(d);
        for (int i = 0; i < d; ++i) v.coords[i] = scale;
        return v;
    }

    std::int32_t operator[](int i) const { return coords[i]; }
    std::int32_t& operator[](int i) { return coords[i]; }

    Vertex& operator+=(const Vertex& o) {
        for (int i = 0; i < dim; ++i) coords[i] += o.coords[i];
        return *this;
    }
    Vertex& operator-=(const Vertex& o) {
        for (int i = 0; i < dim; ++i) coords[i] -= o.coords[i];
        return *this;
    }
    friend Vertex operator+(Vertex a, const Vertex& b) { return a += b; }
    friend Vertex operator-(Vertex a, const Vertex& b) { return a -= b; }
    friend Vertex operator*(std::int32_t s, Vertex a) {
        for (int i = 0; i < a.dim; ++i) a.coords[i] *= s;
        return a;
    }

    std::int64_t sum() const {
        std::int64_t s = 0;
        for (int i = 0; i < dim; ++i) s += coords[i];
        return s;
    }
    std::int64_t l1() const {
        std::int64_t s = 0;
        for (int i = 0; i < dim; ++i) s += coords[i] < 0 ? -std::int64_t{coords[i]} : coords[i];
        return s;
    }
    std::int32_t sup_norm() const {
        std::int32_t m = 0;
        for (int i = 0; i < dim; ++i) m = std::max(m, coords[i] < 0 ? -coords[i] : coords[i]);
        return m;
    }
    std::int32_t min_coord() const {
        std::int32_t m = coords[0];
        for (int i = 1; i < dim; ++i) m = std::min(m, coords[i]);
        return m;
    }

    friend auto operator<=>(const Vertex&, const Vertex&) = default;
    friend bool operator==(const Vertex&, const Vertex&) = default;

    std::string str() const {
        std::string s = "(";
        for (int i = 0; i < dim; ++i) {
            if (i) s += ",";
            s += std::to_string(coords[i]);
        }
        return s + ")";
    }
    friend std::ostream& operator<<(std::ostream& os, const Vertex& v) { return os << v.str(); }
};

struct VertexHash {
    std::size_t operator()(const Vertex& v) const noexcept {
        std::uint64_t h = 0x9e3779b97f4a7c15ULL ^ static_cast<std::uint64_t>(v.dim);
        for (int i = 0; i < kMaxDim; ++i) {
            h ^= static_cast<std::uint64_t>(static_cast<std::uint32_t>(v.coords[i])) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
        }
        return static_cast<std::size_t>(h);
    }
};

/// One of the 2d unit steps +-e_axis.
struct Direction {
    int axis = 0;
    int sign = 1;

    Vertex step(int d) const { return Vertex::unit(d, axis, sign); }
    friend bool operator==(const Direction&, const Direction&) = default;
};

/// E_+ first (axis order), then E_-.
inline std::vector<Direction> all_directions(int d) {
    std::vector<Direction> dirs;
    for (int i = 0; i < d; ++i) dirs.push_back({i, +1});
    for (int i = 0; i < d; ++i) dirs.push_back({i, -1});
    return dirs;
}

enum class ModelKind { Orthant, HalfOrthant };

inline std::string to_string(ModelKind m) { return m == ModelKind::Orthant ? "orthant" : "half-orthant"; }

// ---------------------------------------------------------------------------
// Philox4x64-10 counter-based generator (Salmon et al. 2011 construction).

struct Philox4x64 {
    using Counter = std::array<std::uint64_t, 4>;
    using Key = std::array<std::uint64_t, 2>;

    static constexpr std::uint64_t kMul0 = 0xD2E7470EE14C6C93ULL;
    static constexpr std::uint64_t kMul1 = 0xCA5A826395121157ULL;
    static constexpr std::uint64_t kWeyl0 = 0x9E3779B97F4A7C15ULL;
    static constexpr std::uint64_t kWeyl1 = 0xBB67AE8584CAA73BULL;
    static constexpr int kRounds = 10;

    static constexpr Counter apply(Counter ctr, Key key) {
        for (int r = 0; r < kRounds; ++r) {
            if (r) {
                key[0] += kWeyl0;
                key[1] += kWeyl1;
            }
            const unsigned __int128 p0 = static_cast<unsigned __int128>(kMul0) * ctr[0];
            const unsigned __int128 p1 = static_cast<unsigned __int128>(kMul1) * ctr[2];
            const auto hi0 = static_cast<std::uint64_t>(p0 >> 64);
            const auto lo0 = static_cast<std::uint64_t>(p0);
            const auto hi1 = static_cast<std::uint64_t>(p1 >> 64);
            const auto lo1 = static_cast<std::uint64_t>(p1);
            ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        }
        return ctr;
    }
};

inline constexpr const char* kGeneratorIdentity = "philox4x64-10";

/// 53-bit uniform in [0,1) from the top bits of a 64-bit word.
inline constexpr double to_unit_interval(std::uint64_t word) {
    return static_cast<double>(word >> 11) * 0x1.0p-53;
}

/// Child seed for stream `stream`, item `index`; a pure function of its inputs.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index) {
    return Philox4x64::apply({index, stream, 0x5eedULL, 0}, {master, 0xd1b54a32d192ed03ULL})[0];
}

// ---------------------------------------------------------------------------
// Site fields. Anything answering is_one(v, p) can drive a search.

template <class F>
concept SiteOracle = requires(const F& f, const Vertex& v, double p) {
    { f.is_one(v, p) } -> std::convertible_to<bool>;
};

template <class F>
concept UniformSiteField = SiteOracle<F> && requires(const F& f, const Vertex& v) {
    { f.uniform(v) } -> std::convertible_to<double>;
};

/// The U-field: U_v = Philox(key={seed,d}, ctr=coords), omega_v(p) = 1{U_v < p}.
class SiteField {
public:
    SiteField(std::uint64_t seed, int dim) : seed_(seed), dim_(dim) {
        require(dim >= 2 && dim <= kMaxDim, "SiteField: dimension must be in 2..4");
    }

    std::uint64_t seed() const { return seed_; }
    int dim() const { return dim_; }

    double uniform(const Vertex& v) const {
        Philox4x64::Counter ctr{};
        for (int i = 0; i < kMaxDim; ++i) ctr[i] = static_cast<std::uint64_t>(static_cast<std::int64_t>(v.coords[i]));
        return to_unit_interval(Philox4x64::apply(ctr, {seed_, static_cast<std::uint64_t>(dim_)})[0]);
    }

    bool is_one(const Vertex& v, double p) const { return p >= 1 || (p > 0 && uniform(v) < p); }

private:
    std::uint64_t seed_;
    int dim_;
};

/// omega^{+v}: the base field with the Boolean at `pivot` negated.
template <SiteOracle Base>
class FlippedField {
public:
    FlippedField(const Base& base, const Vertex& pivot) : base_(&base), pivot_(pivot) {}

    bool is_one(const Vertex& v, double p) const {
        const bool b = base_->is_one(v, p);
        return v == pivot_ ? !b : b;
    }
    const Vertex& pivot() const { return pivot_; }
    const Base& base() const { return *base_; }

private:
    const Base* base_;
    Vertex pivot_;
};

template <SiteOracle Base>
FlippedField<Base> flip(const Base& base, const Vertex& pivot) {
    return FlippedField<Base>(base, pivot);
}

/// SiteField with a memo over the sup-norm ball of radius `radius`.
/// Reads and writes are relaxed atomics; concurrent writers store identical
/// bits, so sharing one instance across threads is safe.
class CachedSiteField {
public:
    CachedSiteField(SiteField base, int radius)
        : base_(base), radius_(radius), side_(2 * radius + 1) {
        std::size_t n = 1;
        for (int i = 0; i < base.dim(); ++i) n *= static_cast<std::size_t>(side_);
        slots_ = std::vector<std::atomic<std::uint64_t>>(n);
        for (auto& s : slots_) s.store(kEmpty, std::memory_order_relaxed);
    }

    int dim() const { return base_.dim(); }
    std::uint64_t seed() const { return base_.seed(); }

    double uniform(const Vertex& v) const {
        if (v.sup_norm() > radius_) return base_.uniform(v);
        std::size_t idx = 0;
        for (int i = 0; i < base_.dim(); ++i) idx = idx * side_ + static_cast<std::size_t>(v.coords[i] + radius_);
        std::uint64_t bits = slots_[idx].load(std::memory_order_relaxed);
        if (bits == kEmpty) {
            bits = std::bit_cast<std::uint64_t>(base_.uniform(v));
            slots_[idx].store(bits, std::memory_order_relaxed);
        }
        return std::bit_cast<double>(bits);
    }
    bool is_one(const Vertex& v, double p) const { return p >= 1 || (p > 0 && uniform(v) < p); }

private:
    static constexpr std::uint64_t kEmpty = ~std::uint64_t{0};  // a NaN pattern never produced by uniform()
    SiteField base_;
    int radius_;
    int side_;
    mutable std::vector<std::atomic<std::uint64_t>> slots_;
};

template <SiteOracle F>
bool sample_site(const F& field, const Vertex& v, double p) {
    return field.is_one(v, p);
}

/// Out-neighbours of v: E_+ shifts in axis order, then E_- shifts.
template <SiteOracle F>
std::vector<Vertex> out_neighbors(ModelKind model, const F& field, const Vertex& v, double p) {
    const int d = v.dim;
    const bool one = field.is_one(v, p);
    std::vector<Vertex> out;
    const bool plus = model == ModelKind::HalfOrthant || one;
    const bool minus = !one;
    if (plus)
        for (int i = 0; i < d; ++i) out.push_back(v + Vertex::unit(d, i, +1));
    if (minus)
        for (int i = 0; i < d; ++i) out.push_back(v + Vertex::unit(d, i, -1));
    return out;
}

}  // namespace orthant
