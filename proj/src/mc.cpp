#include "uma/mc.hpp"

#include <thread>

#include "uma/rng.hpp"

namespace uma {

void RcusSamplePool::generate(int n, std::uint64_t count, std::uint64_t seed, int workers) {
    n_dim = n;
    a.resize(count);
    ga.resize(count);
    q2.resize(count);
    log_v.resize(count);
    // Fixed-size blocks with per-block streams: the output is identical for
    // any worker count.
    constexpr std::uint64_t kBlock = 1 << 16;
    std::uint64_t blocks = (count + kBlock - 1) / kBlock;
    auto fill = [&](std::uint64_t b0, std::uint64_t b1) {
        for (std::uint64_t b = b0; b < b1; ++b) {
            Rng rng(seed, 0xb10c0000ULL + b);
            std::uint64_t lo = b * kBlock, hi = std::min(count, lo + kBlock);
            for (std::uint64_t i = lo; i < hi; ++i) {
                double A = rng.chi_square(n);
                double G = rng.normal();
                double R = n > 1 ? rng.chi_square(n - 1) : 0.0;
                a[i] = static_cast<float>(A);
                ga[i] = static_cast<float>(G * std::sqrt(A));
                q2[i] = static_cast<float>(G * G + R);
                log_v[i] = static_cast<float>(std::log(rng.uniform()));
            }
        }
    };
    if (workers <= 1 || blocks <= 1) {
        fill(0, blocks);
        return;
    }
    std::vector<std::thread> pool;
    std::uint64_t per = (blocks + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
        std::uint64_t b0 = std::min(blocks, static_cast<std::uint64_t>(w) * per);
        std::uint64_t b1 = std::min(blocks, b0 + per);
        if (b0 < b1) pool.emplace_back(fill, b0, b1);
    }
    for (auto& t : pool) t.join();
}

}  // namespace uma
