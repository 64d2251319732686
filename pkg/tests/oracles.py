"""Independent reference computations shared by the tests."""


def saturated_bisection(n, w=32, m=5, tol=1e-15):
    """Saturated, error-free, no-capture fixed point by plain bisection on tau."""

    def f(p):
        # geometric sum written out, so p = 1/2 needs no special case
        return 2 / ((w + 1) + p * w * sum((2 * p) ** i for i in range(m)))

    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        p = 1 - (1 - mid) ** (n - 1)
        if mid - f(p) > 0:
            hi = mid
        else:
            lo = mid
    tau = 0.5 * (lo + hi)
    return tau, 1 - (1 - tau) ** (n - 1)


def renewal_throughput(payload_us, t_s, sigma, w):
    """One saturated station: each frame costs T_s plus a mean of (W-1)/2 idle slots."""
    return payload_us / (t_s + sigma * (w - 1) / 2)
