#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>

namespace voxl {

/// Integer voxel coordinates. 2D domains use z = 0 and a z-extent of 1.
struct Vec3i {
    int x = 0;
    int y = 0;
    int z = 0;

    constexpr int operator[](int axis) const { return axis == 0 ? x : (axis == 1 ? y : z); }
    constexpr int& operator[](int axis) { return axis == 0 ? x : (axis == 1 ? y : z); }

    friend constexpr Vec3i operator+(Vec3i a, Vec3i b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
    friend constexpr Vec3i operator-(Vec3i a, Vec3i b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
    friend constexpr bool operator==(Vec3i a, Vec3i b) { return a.x == b.x && a.y == b.y && a.z == b.z; }
    friend constexpr bool operator!=(Vec3i a, Vec3i b) { return !(a == b); }
};

/// Domain extents; 2D domains carry nz = 1.
struct Extents {
    int nx = 1;
    int ny = 1;
    int nz = 1;

    constexpr int operator[](int axis) const { return axis == 0 ? nx : (axis == 1 ? ny : nz); }
    constexpr int& operator[](int axis) { return axis == 0 ? nx : (axis == 1 ? ny : nz); }
    constexpr std::int64_t volume() const {
        return std::int64_t(nx) * std::int64_t(ny) * std::int64_t(nz);
    }
    constexpr bool contains(Vec3i v) const {
        return v.x >= 0 && v.x < nx && v.y >= 0 && v.y < ny && v.z >= 0 && v.z < nz;
    }
    friend constexpr bool operator==(Extents a, Extents b) {
        return a.nx == b.nx && a.ny == b.ny && a.nz == b.nz;
    }
};

/// Row-major linear index, x fastest. This is the canonical voxel order used by
/// field dumps and cross-layout comparisons.
constexpr std::int64_t linear_index(Vec3i v, Extents e) {
    return (std::int64_t(v.z) * e.ny + v.y) * e.nx + v.x;
}

/// Packs signed coordinates in [-2^20, 2^20) into one key for hashing.
constexpr std::uint64_t pack_coord(Vec3i v) {
    constexpr std::uint64_t bias = 1u << 20;
    return ((std::uint64_t(v.x) + bias) << 42) | ((std::uint64_t(v.y) + bias) << 21) |
           (std::uint64_t(v.z) + bias);
}

constexpr Vec3i unpack_coord(std::uint64_t key) {
    constexpr std::int64_t bias = 1 << 20;
    return {int(std::int64_t((key >> 42) & 0x1FFFFF) - bias),
            int(std::int64_t((key >> 21) & 0x1FFFFF) - bias),
            int(std::int64_t(key & 0x1FFFFF) - bias)};
}

} // namespace voxl
