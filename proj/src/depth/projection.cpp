#include "bh3d/core/error.hpp"
#include "bh3d/core/parallel.hpp"
#include "bh3d/depth/depth.hpp"

namespace bh3d::depth {

Image max_project(const ScanStack& stack) {
    BH3D_REQUIRE(stack.angle_count() > 0 && stack.pixel_count() > 0, ContractError, "max_project: empty stack");
    Image out(stack.width(), stack.height());
    parallel_for(0, stack.pixel_count(), [&](std::size_t p) {
        const auto s = stack.samples(p);
        double best = s[0];
        for (std::size_t i = 1; i < s.size(); ++i) {
            if (s[i] > best) best = s[i];
        }
        out.data[p] = best;
    });
    return out;
}

Image mean_project(const ScanStack& stack) {
    BH3D_REQUIRE(stack.angle_count() > 0 && stack.pixel_count() > 0, ContractError, "mean_project: empty stack");
    Image out(stack.width(), stack.height());
    parallel_for(0, stack.pixel_count(), [&](std::size_t p) {
        double sum = 0.0;
        for (double v : stack.samples(p)) sum += v;
        out.data[p] = sum / static_cast<double>(stack.angle_count());
    });
    return out;
}

}  // namespace bh3d::depth
