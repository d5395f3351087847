#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "orthant/error.hpp"
#include "orthant/lattice.hpp"

namespace orthant {

/// Nonnegative-denominator rational with int64 parts, always reduced.
struct Rational {
    std::int64_t num = 0;
    std::int64_t den = 1;

    Rational() = default;
    Rational(std::int64_t n, std::int64_t d = 1) : num(n), den(d) {
        require(d != 0, "Rational: zero denominator");
        if (den < 0) {
            num = -num;
            den = -den;
        }
        const std::int64_t g = std::gcd(num < 0 ? -num : num, den);
        if (g > 1) {
            num /= g;
            den /= g;
        }
    }

    double to_double() const { return static_cast<double>(num) / static_cast<double>(den); }
    std::string str() const { return den == 1 ? std::to_string(num) : std::to_string(num) + "/" + std::to_string(den); }

    friend bool operator==(const Rational&, const Rational&) = default;
    friend std::strong_ordering operator<=>(const Rational& a, const Rational& b) {
        const __int128 l = static_cast<__int128>(a.num) * b.den;
        const __int128 r = static_cast<__int128>(b.num) * a.den;
        return l < r ? std::strong_ordering::less : (l > r ? std::strong_ordering::greater : std::strong_ordering::equal);
    }
};

/// Parses "a", "a/b" or "-a/b". Returns nullopt on malformed text.
inline std::optional<Rational> parse_rational(std::string_view text) {
    auto trim = [](std::string_view s) {
        while (!s.empty() && (s.front() == ' ' || s.front() == '"' || s.front() == '\'')) s.remove_prefix(1);
        while (!s.empty() && (s.back() == ' ' || s.back() == '"' || s.back() == '\'')) s.remove_suffix(1);
        return s;
    };
    text = trim(text);
    auto parse_int = [](std::string_view s) -> std::optional<std::int64_t> {
        if (s.empty()) return std::nullopt;
        std::int64_t v = 0;
        auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
        return v;
    };
    const auto slash = text.find('/');
    if (slash == std::string_view::npos) {
        auto n = parse_int(text);
        if (!n) return std::nullopt;
        return Rational(*n);
    }
    auto n = parse_int(trim(text.substr(0, slash)));
    auto d = parse_int(trim(text.substr(slash + 1)));
    if (!n || !d || *d == 0) return std::nullopt;
    return Rational(*n, *d);
}

/// Sup-norm ball Lambda_r.
struct Window {
    int radius = 0;

    bool contains(const Vertex& v) const { return v.sup_norm() <= radius; }
    std::size_t site_count(int d) const {
        std::size_t n = 1;
        for (int i = 0; i < d; ++i) n *= static_cast<std::size_t>(2 * radius + 1);
        return n;
    }
    friend bool operator==(const Window&, const Window&) = default;
};

/// All points of Lambda_r in lexicographic order.
inline std::vector<Vertex> window_points(int d, const Window& w) {
    std::vector<Vertex> out;
    out.reserve(w.site_count(d));
    Vertex v = Vertex::ones(d, -w.radius);
    while (true) {
        out.push_back(v);
        int i = d - 1;
        while (i >= 0 && v.coords[i] == w.radius) {
            v.coords[i] = -w.radius;
            --i;
        }
        if (i < 0) break;
        ++v.coords[i];
    }
    return out;
}

/// The shifted cone -k*1 + K_eta, K_eta = {x : x.1 >= eta ||x||_1}.
struct Cone {
    Rational eta{0};
    std::int64_t shift = 0;

    Cone() = default;
    Cone(Rational e, std::int64_t k) : eta(e), shift(k) {
        require(eta.num >= 0 && eta.num <= eta.den, "Cone: eta must lie in [0,1]");
    }

    bool contains(const Vertex& x) const {
        std::int64_t s = 0, l = 0;
        for (int i = 0; i < x.dim; ++i) {
            const std::int64_t y = x.coords[i] + shift;
            s += y;
            l += y < 0 ? -y : y;
        }
        return static_cast<__int128>(eta.den) * s >= static_cast<__int128>(eta.num) * l;
    }
};

inline bool cone_contains(const Cone& c, const Vertex& x) { return c.contains(x); }

/// Points of the cone inside Lambda_w that have a lattice neighbour outside the cone.
inline std::vector<Vertex> cone_boundary(const Cone& c, const Window& w, int d) {
    std::vector<Vertex> out;
    for (const auto& x : window_points(d, w)) {
        if (!c.contains(x)) continue;
        for (const auto& dir : all_directions(d)) {
            if (!c.contains(x + dir.step(d))) {
                out.push_back(x);
                break;
            }
        }
    }
    return out;
}

/// Points outside the cone inside Lambda_w that have a lattice neighbour inside it.
inline std::vector<Vertex> cone_outer_boundary(const Cone& c, const Window& w, int d) {
    std::vector<Vertex> out;
    for (const auto& x : window_points(d, w)) {
        if (c.contains(x)) continue;
        for (const auto& dir : all_directions(d)) {
            if (c.contains(x + dir.step(d))) {
                out.push_back(x);
                break;
            }
        }
    }
    return out;
}

/// Integer or +-infinity.
struct ExtendedInt {
    enum class Kind { NegInf, Finite, PosInf };
    Kind kind = Kind::Finite;
    std::int64_t value = 0;

    static ExtendedInt neg_inf() { return {Kind::NegInf, 0}; }
    static ExtendedInt pos_inf() { return {Kind::PosInf, 0}; }
    static ExtendedInt finite(std::int64_t v) { return {Kind::Finite, v}; }
};

/// Lambda_{u,v}(m,n) = {z : m u.v <= z.v < n u.v}; v is held as integer
/// numerators over a common positive denominator.
class Slab {
public:
    Slab(Vertex u, const std::vector<Rational>& v, ExtendedInt m, ExtendedInt n) : u_(u), m_(m), n_(n) {
        require(static_cast<int>(v.size()) == u.dim, "Slab: u and v must have equal dimension");
        bool on_diagonal = true;
        for (int i = 1; i < u.dim; ++i) on_diagonal = on_diagonal && u[i] == u[0];
        require(!on_diagonal, "Slab: u must not be a multiple of 1");
        den_ = 1;
        for (const auto& r : v) den_ = std::lcm(den_, r.den);
        std::int64_t total = 0;
        for (const auto& r : v) {
            vnum_.push_back(r.num * (den_ / r.den));
            total += vnum_.back();
        }
        require(total == 0, "Slab: v.1 must be 0");
        uv_ = dot(u_);
        require(uv_ > 0, "Slab: u.v must be positive");
    }

    bool contains(const Vertex& z) const {
        const std::int64_t zv = dot(z);
        const bool lower = m_.kind == ExtendedInt::Kind::NegInf ||
                           (m_.kind == ExtendedInt::Kind::Finite && static_cast<__int128>(m_.value) * uv_ <= zv);
        const bool upper = n_.kind == ExtendedInt::Kind::PosInf ||
                           (n_.kind == ExtendedInt::Kind::Finite && zv < static_cast<__int128>(n_.value) * uv_);
        return lower && upper;
    }

    /// u.v as a rational.
    Rational u_dot_v() const { return Rational(uv_, den_); }

private:
    std::int64_t dot(const Vertex& z) const {
        std::int64_t s = 0;
        for (int i = 0; i < z.dim; ++i) s += static_cast<std::int64_t>(z[i]) * vnum_[i];
        return s;
    }

    Vertex u_;
    std::vector<std::int64_t> vnum_;
    std::int64_t den_ = 1;
    std::int64_t uv_ = 0;
    ExtendedInt m_, n_;
};

inline bool slab_contains(const Slab& s, const Vertex& z) { return s.contains(z); }

}  // namespace orthant
