#include "terracal/correspond.hpp"

namespace terracal {

// Fixed comparison pattern for the 256-bit descriptor: offsets drawn once from
// a seeded gaussian (sigma r/3) clipped to a radius-13 disk, then frozen here.
const std::array<PatternPair, 256> kDescriptorPattern = {{
    {1, 4, 7, 0}, {-7, 5, 5, -3}, {-3, -6, -1, -3}, {2, -3, 2, 3},
    {-1, 2, 6, -3}, {-2, -2, 7, -2}, {-2, -5, -9, -8}, {1, -1, 9, -3},
    {7, 5, -5, 4}, {6, 0, 9, -7}, {7, 5, 1, 0}, {-2, 2, -1, -4},
    {-5, 0, 2, 4}, {-3, -1, 11, 2}, {7, 6, -2, -2}, {5, -6, -6, -3},
    {2, 11, -3, 2}, {3, -3, -6, 2}, {-1, 3, -5, 3}, {1, 0, -4, 5},
    {2, 2, -4, 3}, {7, -2, -2, 3}, {-2, 7, 0, 5}, {9, -1, -2, -2},
    {-1, 5, -2, -4}, {-1, 0, 1, 9}, {5, 2, -9, 1}, {6, -3, 3, -1},
    {11, -2, -7, 0}, {4, 0, 6, -3}, {1, -4, 0, 5}, {0, -5, 1, -3},
    {-3, 8, -2, -5}, {2, 5, 5, 1}, {-2, -7, 8, -2}, {0, 6, 2, -4},
    {1, 3, 2, 9}, {-6, 1, 4, 1}, {-3, -11, 11, -5}, {-2, -4, -8, 7},
    {-1, -1, -1, 0}, {0, 0, 5, 2}, {-1, 0, 1, -3}, {-6, -1, 0, 1},
    {-4, 4, 1, 3}, {-3, 0, -2, 0}, {2, 3, -2, 6}, {5, 1, -2, -2},
    {-3, -8, -1, 2}, {6, -4, -6, -5}, {-2, 10, 0, 4}, {7, 2, 2, 2},
    {3, 4, 0, -5}, {-3, 0, 0, 5}, {2, -6, 4, 7}, {2, 0, 3, 0},
    {-9, -2, -7, -8}, {-9, 2, -7, -3}, {-5, -1, 0, 5}, {0, 5, -7, -9},
    {-2, 2, 0, 5}, {-6, 2, 3, -5}, {0, 4, 1, 2}, {3, 3, 1, 3},
    {1, 1, 9, 2}, {-5, 0, 1, 0}, {-11, 0, -4, -7}, {-10, 8, 1, 2},
    {-1, 0, -6, -7}, {2, -3, -4, 5}, {1, -1, 0, -1}, {4, -2, 3, 6},
    {3, -6, 5, 3}, {-2, 5, 2, 2}, {-1, 7, 2, -6}, {-2, 1, 0, -2},
    {5, -2, 4, 0}, {3, 0, 4, -4}, {1, -4, -4, -2}, {-5, -4, -1, 5},
    {4, -3, -7, 2}, {2, 1, 9, -9}, {4, -2, -1, -6}, {7, -5, -2, 3},
    {9, 2, 5, 0}, {-2, 0, 4, 1}, {3, -3, -3, 0}, {-2, 4, 0, 4},
    {-2, 1, -1, 0}, {3, -3, -1, 4}, {3, 5, 3, -1}, {1, -4, -2, -8},
    {9, -1, 2, -8}, {-1, -7, 0, 4}, {5, 2, -1, 2}, {2, -5, 6, -2},
    {2, -1, -6, -1}, {2, 1, -7, -3}, {-7, 8, 2, 1}, {0, 2, 0, -1},
    {-3, 3, -4, -1}, {-1, -2, 2, -3}, {-2, 0, 1, -6}, {1, -1, 3, 1},
    {0, 0, -1, 4}, {-3, 1, -7, 3}, {4, 5, 5, -2}, {-5, -5, -1, -1},
    {2, 1, -2, -1}, {-1, 6, -4, 3}, {1, -1, 7, -4}, {5, 4, 9, -3},
    {-5, 8, 4, -2}, {6, 3, -1, -1}, {1, 4, 4, -2}, {-1, 7, 6, 2},
    {-7, 4, -6, 1}, {1, -6, -9, 3}, {-3, -6, -6, 1}, {0, -4, 0, 3},
    {4, 6, 0, 9}, {4, -5, 0, 1}, {-6, 0, -5, 1}, {1, 7, 2, 2},
    {1, -3, -8, 1}, {3, 2, 0, 4}, {3, -6, 5, -3}, {-5, 0, -2, 1},
    {-1, 0, -2, -2}, {2, -2, 5, -1}, {2, 6, 3, 5}, {0, -4, -4, 0},
    {-2, 7, -2, -3}, {4, -10, -3, -6}, {10, 1, 0, 2}, {-4, 5, 2, 4},
    {0, -6, 5, 1}, {2, -2, -2, 4}, {4, -4, -3, 4}, {4, 4, 5, -1},
    {-3, -4, -8, 9}, {2, 1, -1, -3}, {-7, 3, -3, 5}, {-4, -1, 1, -2},
    {-7, -4, 3, 0}, {2, -1, 0, -1}, {-2, 1, 0, -7}, {0, -1, -4, 2},
    {1, 2, 4, -7}, {-1, -8, -2, 2}, {-7, 2, -1, -2}, {0, -7, -7, 6},
    {2, 1, -5, 8}, {0, 7, -6, -2}, {2, -9, 7, -1}, {3, -3, 4, 6},
    {-2, -3, 2, -5}, {-3, 2, 7, 0}, {6, 5, 1, 4}, {0, 10, -8, -2},
    {-2, 1, -8, -3}, {5, -7, 2, -4}, {7, 1, 3, 5}, {-4, -5, 3, -3},
    {-5, 1, -7, 3}, {1, 3, -4, 7}, {1, 0, -7, -1}, {-8, 0, -2, 2},
    {1, -4, -6, -3}, {-1, -1, 4, 1}, {-3, 5, -3, 8}, {3, -2, 9, 3},
    {5, 4, -3, 3}, {1, 5, -7, -6}, {-6, 2, 5, 7}, {0, -7, 0, 3},
    {2, -1, -8, 3}, {5, 2, 0, 5}, {-5, 11, -8, 7}, {3, -2, -3, 2},
    {8, -6, 2, 1}, {0, -2, 2, -7}, {-3, 4, 7, 1}, {-5, 1, -2, -10},
    {-2, -4, -2, 3}, {10, 4, -4, 1}, {1, -6, 5, 3}, {2, -3, 0, -5},
    {-4, 3, -3, 7}, {8, -6, -8, -5}, {-3, -8, 3, 3}, {1, 3, -11, 5},
    {3, 1, -3, 7}, {-3, 2, 6, 5}, {4, 0, -3, -1}, {-2, 0, 1, 1},
    {-4, -2, -2, -5}, {-4, -3, -3, -3}, {6, -2, 0, 0}, {-3, 10, 1, 11},
    {5, 5, 6, -7}, {-1, -1, 2, -3}, {-2, -7, 2, 2}, {4, -3, -8, -4},
    {-3, 3, -1, 4}, {4, -2, 4, -6}, {-2, -6, 0, -2}, {-6, 3, -6, 0},
    {-2, -1, -1, 1}, {-3, -5, -6, -1}, {1, -1, 2, -1}, {4, 2, -2, -2},
    {-6, -1, -3, 4}, {0, 7, -1, 0}, {5, 5, -1, 6}, {-6, -1, 2, 0},
    {0, -8, -5, 2}, {-5, -3, 8, 8}, {-2, -9, 4, -2}, {-3, 2, 1, 12},
    {0, 0, 0, 13}, {6, -2, -6, 3}, {0, -2, -9, 1}, {4, -2, 2, -2},
    {-2, 7, 4, 0}, {-1, 3, -1, -6}, {-1, 5, -3, -2}, {3, 1, -10, -5},
    {-6, 0, 6, 7}, {-8, 1, 0, -1}, {-3, 2, 0, 7}, {1, 6, 2, 1},
    {3, -5, 2, 1}, {-3, 4, 1, -7}, {5, -1, -3, 5}, {11, -1, 1, -5},
    {3, 2, -4, -1}, {-5, 0, 9, -3}, {-1, -2, -1, -4}, {-5, 3, 0, 1},
    {0, -4, 4, -4}, {4, -7, -1, 0}, {-2, -4, 5, 2}, {1, 3, 3, -2},
    {-4, -1, -3, -7}, {-1, 2, 3, -2}, {3, 3, -1, -6}, {1, 3, 0, 2},
    {4, -5, 0, -1}, {2, -6, -2, -11}, {0, 1, -2, -5}, {5, 0, -1, -6},
    {0, -3, -8, -5}, {-2, 3, -3, -7}, {-4, -8, -7, 1}, {4, -1, -2, 11}
}};

}  // namespace terracal
