"""Reference values of the published tables, keyed by degree and mesh size.

Mesh sizes are stored as cell counts (``h = 1 / cells`` on [0, 1]). A value of
``None`` in the Burgers residual table marks a run that does not reach the
final time.
"""

from __future__ import annotations

X = None  # run does not reach the final time

# condition number of the mass matrix
TABLE2 = {
    "cells": [10, 30, 50, 100],
    1: [28.60, 89.51, 149.70, 299.85],
    2: [63.63, 195.22, 325.97, 652.44],
    3: [106.87, 325.48, 543.14, 1086.85],
    4: [158.52, 480.73, 801.92, 1604.43],
}

# slopes of the unstabilized heat-term errors; p = 1 is (early slope, last
# k of the early regime, late slope)
TABLE1 = {
    "cells": [20, 50, 100, 200],
    1: [(0.69, 5, 2.74), (0.69, 4, 3.56), (0.69, 3, 4.17), (0.69, 2, 4.77)],
    2: [3.47, 4.27, 4.87, 5.48],
    3: [3.48, 4.27, 4.88, 5.48],
    4: [4.28, 5.07, 5.68, 6.27],
}

# exponent c of alpha_0 = h**c minimizing the condition number
TABLE3 = {
    "cells": [50, 100, 200, 300, 400, 500],
    1: [1.96] * 6,
    2: [2.18, 2.02, 1.9, 1.86, 1.82, 1.80],
    3: [2.52, 2.28, 2.14, 2.06, 2.02, 2.00],
    4: [2.68, 2.4, 2.22, 2.14, 2.10, 2.06],
}

# integrated residual of the heat run (dt = 5e-3, m = 5, r = s = 2, Ng = 20, T = 1)
TABLE4 = {
    "cells": [20, 50, 100],
    1: [0.0573, 0.0357, 0.0251],
    2: [0.0363, 0.0225, 0.0159],
    3: [0.0274, 0.0170, 0.0120],
}

# (c, R) pairs for alpha_0 = h**c and alpha_{k+1} = R alpha_k
ALPHA_R = {
    "cells": [20, 50, 100, 200],
    2: [(2.0, 1.9), (1.86, 2.85), (1.8, 3.8), (1.76, 5.4)],
    3: [(2.3, 2.1), (2.12, 3.5), (2.0, 4.7), (1.94, 6.3)],
    4: [(2.5, 1.7), (2.26, 2.7), (2.1, 3.4), (2.02, 4.4)],
    5: [(2.8, 1.9), (2.4, 2.1), (2.3, 3.5), (2.1, 3.0)],
}

# log10 of the heat amplification factor
TABLE6 = {
    "cells": [20, 50, 100, 200],
    1: [3.35, 5.10, 5.77, 6.39],
    2: [4.99, 5.81, 6.43, 7.03],
    3: [5.40, 6.21, 6.81, 7.42],
    4: [5.70, 6.53, 7.14, 7.75],
}

# log10 of the Burgers amplification factor
TABLE7 = {
    "cells": [20, 50, 100, 200],
    1: [0.99, 2.13, 2.35, 2.52],
    2: [2.20, 2.42, 2.58, 2.73],
    3: [2.34, 2.55, 2.70, 2.85],
    4: [2.45, 2.68, 2.83, 2.99],
}

# Burgers (nu = 1, u_0 = sin(2 pi x), T = 0.5) integrated residuals:
# TABLE8[dt][plan][cells] -> values for p = 1, 2, 3
TABLE8 = {
    5e-2: {
        "none": {20: [X, X, X], 50: [X, X, X], 100: [X, X, X], 200: [X, X, X]},
        "constant": {20: [X, X, X], 50: [X, X, X], 100: [X, X, X], 200: [X, X, X]},
        "geometric": {20: [0.029671, 0.0194313, 0.017131], 50: [0.018912, X, X], 100: [X, X, X], 200: [X, X, X]},
    },
    1e-2: {
        "none": {20: [X, X, X], 50: [X, X, X], 100: [X, X, X], 200: [X, X, X]},
        "constant": {20: [0.02718, 0.017171, X], 50: [0.01750, X, X], 100: [X, X, X], 200: [X, X, X]},
        "geometric": {20: [0.02714, 0.017159, 0.01306], 50: [0.01733, 0.01094, X], 100: [0.01225, X, X], 200: [X, X, X]},
    },
    1e-3: {
        "none": {20: [0.02750, X, X], 50: [X, X, X], 100: [X, X, X], 200: [X, X, X]},
        "constant": {
            20: [0.027244, 0.017220, 0.013100],
            50: [0.017284, 0.010977, 0.008315],
            100: [0.012294, 0.007778, X],
            200: [X, X, X],
        },
        "geometric": {
            20: [0.027246, 0.017222, 0.013101],
            50: [0.017286, 0.010977, 0.008315],
            100: [0.012295, 0.007778, 0.005884],
            200: [0.008704, 0.005504, X],
        },
    },
    1e-4: {
        "none": {20: [0.027516, 0.017424, 0.013171], 50: [0.017420, X, X], 100: [0.012320, X, X], 200: [X, X, X]},
        "constant": {
            20: [0.027263, 0.017233, 0.013108],
            50: [0.017295, 0.010983, 0.008320],
            100: [0.012301, 0.007782, 0.005887],
            200: [0.008708, 0.005507, 0.004164],
        },
        "geometric": {
            20: [0.027263, 0.017233, 0.013108],
            50: [0.017295, 0.010983, 0.008320],
            100: [0.012301, 0.007783, 0.005887],
            200: [0.008709, 0.005507, 0.004164],
        },
    },
}
