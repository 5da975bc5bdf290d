"""Sequential cyclic-correlation loop, shared verbatim by both backends.

The accumulation order (channel, then row, then ground column) is part of
the contract: results must be bit-identical to a scalar reimplementation
of the same loop, so the body must stay free of reassociation. The numba
backend compiles this exact function with fastmath disabled.
"""

import numpy as np


def cyclic_corr(fa, fg):
    h_a, w_a, c_a = fa.shape
    h_g, w_g, c_g = fg.shape
    scores = np.zeros(w_a, dtype=np.float64)
    for i in range(w_a):
        acc = 0.0
        for c in range(c_a):
            for h in range(h_a):
                for w in range(w_g):
                    acc += fa[h, (i + w) % w_a, c] * fg[h, w, c]
        scores[i] = acc
    return scores
