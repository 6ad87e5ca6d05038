#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hrw/rng.hpp"

namespace hrw::group {

// Point of the hierarchical group of order N: a finite digit sequence over
// Z_N, stored little-endian (coordinate 1 first) and canonical (no trailing
// zeros). The empty sequence is the origin; the hierarchical norm is the
// sequence length.
class GroupElement {
public:
    explicit GroupElement(std::uint32_t order);
    GroupElement(std::uint32_t order, std::vector<std::uint32_t> digits);

    static GroupElement origin(std::uint32_t order) { return GroupElement(order); }

    std::uint32_t order() const { return order_; }
    std::uint32_t norm() const { return static_cast<std::uint32_t>(digits_.size()); }
    bool is_origin() const { return digits_.empty(); }

    // Coordinate i >= 1; zero beyond the stored length.
    std::uint32_t digit(std::uint32_t i) const {
        return (i >= 1 && i <= digits_.size()) ? digits_[i - 1] : 0u;
    }

    const std::vector<std::uint32_t>& digits() const { return digits_; }

    bool operator==(const GroupElement& other) const {
        return order_ == other.order_ && digits_ == other.digits_;
    }

    // Comma-separated digit list; the origin is the empty string.
    std::string to_string() const;
    static GroupElement parse(std::uint32_t order, const std::string& text);

private:
    void canonicalize();

    std::uint32_t order_;
    std::vector<std::uint32_t> digits_;
};

// Largest coordinate index at which x and y differ (0 iff equal).
std::uint32_t distance(const GroupElement& x, const GroupElement& y);

GroupElement add(const GroupElement& x, const GroupElement& y);
GroupElement subtract(const GroupElement& x, const GroupElement& y);
GroupElement negate(const GroupElement& x);

// Number of points at distance exactly j from a fixed point: N^{j-1}(N-1).
// j = 0 is rejected; callers handle the center separately.
std::uint64_t sphere_size(std::uint32_t order, std::uint32_t j);

// Uniform point on the sphere of radius j around the origin: coordinates
// 1..j-1 uniform in Z_N, coordinate j uniform nonzero.
GroupElement sample_uniform_sphere(std::uint32_t order, std::uint32_t j, Rng& rng);

std::uint64_t default_enumeration_cap();

// All N^R points of the closed ball of radius R around the origin, origin
// first, each exactly once.
std::vector<GroupElement> enumerate_ball(std::uint32_t order, std::uint32_t radius,
                                         std::uint64_t cap = default_enumeration_cap());

struct GroupElementHash {
    std::size_t operator()(const GroupElement& x) const;
};

} // namespace hrw::group
