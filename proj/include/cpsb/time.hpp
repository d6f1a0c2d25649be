#pragma once

#include <compare>
#include <cstdint>

namespace cpsb {

// Time is an integer count of microseconds. All scheduling constants used by
// the toolkit (periods, computing times, analysis windows) are exact at 1 us,
// so window-boundary comparisons are integer equality tests, never epsilon
// comparisons.

struct Duration {
    std::int64_t us = 0;

    static constexpr Duration micros(std::int64_t v) { return {v}; }
    static constexpr Duration millis(std::int64_t v) { return {v * 1000}; }
    static constexpr Duration seconds(std::int64_t v) { return {v * 1000000}; }

    double as_seconds() const { return static_cast<double>(us) * 1e-6; }

    constexpr auto operator<=>(const Duration&) const = default;

    constexpr Duration operator+(Duration o) const { return {us + o.us}; }
    constexpr Duration operator-(Duration o) const { return {us - o.us}; }
    constexpr Duration operator-() const { return {-us}; }
    constexpr Duration operator*(std::int64_t k) const { return {us * k}; }
    constexpr Duration& operator+=(Duration o) {
        us += o.us;
        return *this;
    }
    constexpr Duration& operator-=(Duration o) {
        us -= o.us;
        return *this;
    }
};

struct Instant {
    std::int64_t us = 0;

    static constexpr Instant micros(std::int64_t v) { return {v}; }
    static constexpr Instant millis(std::int64_t v) { return {v * 1000}; }
    static constexpr Instant seconds(std::int64_t v) { return {v * 1000000}; }

    double as_seconds() const { return static_cast<double>(us) * 1e-6; }

    constexpr auto operator<=>(const Instant&) const = default;

    constexpr Instant operator+(Duration d) const { return {us + d.us}; }
    constexpr Instant operator-(Duration d) const { return {us - d.us}; }
    constexpr Duration operator-(Instant o) const { return {us - o.us}; }
    constexpr Instant& operator+=(Duration d) {
        us += d.us;
        return *this;
    }
};

// Side tag for queries at a window boundary t: Before selects the left limit
// t^- (state before arrival resets), At selects the state after them.
enum class Side { Before, At };

constexpr int sgn(std::int64_t v) { return v > 0 ? 1 : (v < 0 ? -1 : 0); }
constexpr int sgn(Duration d) { return sgn(d.us); }

}  // namespace cpsb
