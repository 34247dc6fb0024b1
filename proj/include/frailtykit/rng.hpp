#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace frailtykit {

using Rng = std::mt19937_64;

/// Independent generator for the stream addressed by (seed, path...).
inline Rng make_rng(std::uint64_t seed, std::initializer_list<std::uint64_t> path = {}) {
    std::vector<std::uint32_t> words;
    auto push = [&](std::uint64_t v) {
        words.push_back(static_cast<std::uint32_t>(v & 0xffffffffu));
        words.push_back(static_cast<std::uint32_t>(v >> 32));
    };
    push(seed);
    push(path.size());
    for (auto p : path) push(p);
    std::seed_seq seq(words.begin(), words.end());
    return Rng(seq);
}

}  // namespace frailtykit
