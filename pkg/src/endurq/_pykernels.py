"""Pure-Python versions of the hot kernels.

Used when the compiled ``_kernels`` extension is unavailable or when
``ENDURQ_PURE_PYTHON=1`` is set. Both implementations must agree bit for bit.
"""

import math

import numpy as np


class TraceMachine:
    """Leftmost-innermost reduction of A(m, n), one resolved subterm at a time.

    The pending outer levels live on ``stack``; ``n`` is the value of the
    innermost argument. Every collapse of an ``A(0, x)`` redex is one step.
    """

    def __init__(self, m, n, cap):
        if m < 0 or n < 0 or cap < 1:
            raise ValueError("m, n must be >= 0 and cap >= 1")
        self.cap = cap
        self._stack = [m]
        self._n = n
        self.done = False
        self.saturated = False
        self.steps_taken = 0

    def advance(self, k):
        """Resolve up to ``k`` more steps; return their values (capped)."""
        out = []
        stack = self._stack
        n = self._n
        cap = self.cap
        while len(out) < k and not self.done:
            m = stack.pop()
            if m == 0:
                n += 1
                if n > cap:
                    # the final value can only be larger than any inner one
                    out.append(cap)
                    self.saturated = True
                    self.done = True
                    stack.clear()
                    break
                out.append(n)
                if not stack:
                    self.done = True
            elif n == 0:
                stack.append(m - 1)
                n = 1
            else:
                stack.append(m - 1)
                stack.append(m)
                n -= 1
        self._n = n
        self.steps_taken += len(out)
        return out


def convolve(demands, N):
    g = [0.0] * (N + 1)
    g[0] = 1.0
    for d in demands:
        d = float(d)
        for n in range(1, N + 1):
            g[n] = g[n] + d * g[n - 1]
    return np.asarray(g, dtype=np.float64)


def bucket_counts(times, system_idx, counts, width, n_buckets, n_systems):
    out = np.zeros((n_buckets, n_systems), dtype=np.int64)
    for t, s, c in zip(times, system_idx, counts):
        b = math.floor(t / width)
        if b >= n_buckets:
            b = n_buckets - 1
        out[b, s] += c
    return out
