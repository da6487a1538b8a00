#pragma once

#include <vector>

#include "mixflow/constructions.hpp"

namespace fixture {

// four squares of Grid(2), each squeezed by 1/2 into one vertical quarter strip
inline std::vector<mixflow::DiagonalAffine> quarter_strips() {
    using mixflow::ExactScalar;
    mixflow::Grid g(2);
    std::vector<mixflow::DiagonalAffine> out;
    for (int j = 0; j < 2; ++j)
        for (int i = 0; i < 2; ++i) out.push_back({g.square(i, j), ExactScalar(1, 2), {ExactScalar(j, 2), -j}});
    return out;
}

// Grid(6): rows 0-1 (12 squares) onto [0,1/3]x[0,1] with lambda 1/2,
// rows 2-5 (24 squares) onto [1/3,1]x[0,1] with lambda 2/3
inline std::vector<mixflow::DiagonalAffine> two_type_tiling() {
    using mixflow::ExactScalar;
    mixflow::Grid g(6);
    std::vector<mixflow::DiagonalAffine> out;
    for (int k = 0; k < 36; ++k) {
        mixflow::Rect src = g.square(k);
        ExactScalar lam, x, y;
        if (k < 12) {
            lam = ExactScalar(1, 2);  // images 1/12 x 1/3
            x = ExactScalar(k % 4, 12);
            y = ExactScalar(k / 4, 3);
        } else {
            int m = k - 12;
            lam = ExactScalar(2, 3);  // images 1/9 x 1/4
            x = ExactScalar(1, 3) + ExactScalar(m % 6, 9);
            y = ExactScalar(m / 6, 4);
        }
        mixflow::Point shift{x - lam * src.x_lo, y - src.y_lo / lam};
        out.push_back({src, lam, shift});
    }
    return out;
}

}  // namespace fixture
