#include "hrw/group.hpp"

#include <cstdlib>
#include <sstream>
#include <stdexcept>

#include "hrw/errors.hpp"

namespace hrw::group {

namespace {

void check_order(std::uint32_t order) {
    if (order < 2) throw std::invalid_argument("group order must be >= 2");
}

void check_same_order(const GroupElement& x, const GroupElement& y) {
    if (x.order() != y.order())
        throw OrderMismatchError("group elements have different orders: " +
                                 std::to_string(x.order()) + " vs " + std::to_string(y.order()));
}

} // namespace

GroupElement::GroupElement(std::uint32_t order) : order_(order) { check_order(order); }

GroupElement::GroupElement(std::uint32_t order, std::vector<std::uint32_t> digits)
    : order_(order), digits_(std::move(digits)) {
    check_order(order);
    for (std::uint32_t d : digits_)
        if (d >= order_) throw std::invalid_argument("digit out of range for group order");
    canonicalize();
}

void GroupElement::canonicalize() {
    while (!digits_.empty() && digits_.back() == 0) digits_.pop_back();
}

std::string GroupElement::to_string() const {
    std::string out;
    for (std::size_t i = 0; i < digits_.size(); ++i) {
        if (i) out += ',';
        out += std::to_string(digits_[i]);
    }
    return out;
}

GroupElement GroupElement::parse(std::uint32_t order, const std::string& text) {
    std::vector<std::uint32_t> digits;
    if (!text.empty()) {
        std::stringstream ss(text);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            digits.push_back(static_cast<std::uint32_t>(std::stoul(tok)));
        }
    }
    return GroupElement(order, std::move(digits));
}

std::uint32_t distance(const GroupElement& x, const GroupElement& y) {
    check_same_order(x, y);
    const std::uint32_t top = std::max(x.norm(), y.norm());
    for (std::uint32_t i = top; i >= 1; --i) {
        if (x.digit(i) != y.digit(i)) return i;
    }
    return 0;
}

GroupElement add(const GroupElement& x, const GroupElement& y) {
    check_same_order(x, y);
    const std::uint32_t n = x.order();
    const std::uint32_t top = std::max(x.norm(), y.norm());
    std::vector<std::uint32_t> digits(top);
    for (std::uint32_t i = 1; i <= top; ++i) digits[i - 1] = (x.digit(i) + y.digit(i)) % n;
    return GroupElement(n, std::move(digits));
}

GroupElement negate(const GroupElement& x) {
    const std::uint32_t n = x.order();
    std::vector<std::uint32_t> digits(x.norm());
    for (std::uint32_t i = 1; i <= x.norm(); ++i) {
        const std::uint32_t d = x.digit(i);
        digits[i - 1] = d == 0 ? 0 : n - d;
    }
    return GroupElement(n, std::move(digits));
}

GroupElement subtract(const GroupElement& x, const GroupElement& y) {
    return add(x, negate(y));
}

std::uint64_t sphere_size(std::uint32_t order, std::uint32_t j) {
    check_order(order);
    if (j == 0) throw std::invalid_argument("sphere_size: radius must be >= 1");
    std::uint64_t size = order - 1;
    for (std::uint32_t i = 1; i < j; ++i) {
        if (size > UINT64_MAX / order) throw CapExceededError("sphere_size overflows 64 bits");
        size *= order;
    }
    return size;
}

GroupElement sample_uniform_sphere(std::uint32_t order, std::uint32_t j, Rng& rng) {
    check_order(order);
    if (j == 0) throw std::invalid_argument("sample_uniform_sphere: radius must be >= 1");
    std::vector<std::uint32_t> digits(j);
    for (std::uint32_t i = 0; i + 1 < j; ++i)
        digits[i] = static_cast<std::uint32_t>(rng.below(order));
    digits[j - 1] = 1 + static_cast<std::uint32_t>(rng.below(order - 1));
    return GroupElement(order, std::move(digits));
}

std::uint64_t default_enumeration_cap() {
    if (const char* env = std::getenv("HRW_ENUM_CAP")) {
        const unsigned long long v = std::strtoull(env, nullptr, 10);
        if (v > 0) return v;
    }
    return 1000000;
}

std::vector<GroupElement> enumerate_ball(std::uint32_t order, std::uint32_t radius,
                                         std::uint64_t cap) {
    check_order(order);
    std::uint64_t count = 1;
    for (std::uint32_t i = 0; i < radius; ++i) {
        if (count > cap / order) throw CapExceededError("enumerate_ball: N^R exceeds cap");
        count *= order;
    }
    if (count > cap) throw CapExceededError("enumerate_ball: N^R exceeds cap");

    std::vector<GroupElement> out;
    out.reserve(count);
    std::vector<std::uint32_t> digits(radius, 0);
    for (std::uint64_t k = 0; k < count; ++k) {
        out.emplace_back(order, digits);
        for (std::uint32_t i = 0; i < radius; ++i) {
            if (++digits[i] < order) break;
            digits[i] = 0;
        }
    }
    return out;
}

std::size_t GroupElementHash::operator()(const GroupElement& x) const {
    std::size_t h = 1469598103934665603ULL ^ x.order();
    for (std::uint32_t d : x.digits()) {
        h ^= d + 0x9E3779B9ULL + (h << 6) + (h >> 2);
    }
    return h;
}

} // namespace hrw::group
