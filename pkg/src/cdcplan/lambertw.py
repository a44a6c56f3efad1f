"""Lower real branch of the Lambert W function.

W_-1 is the inverse of w * exp(w) restricted to w <= -1; it is real and
single-valued on [-1/e, 0).  The static-code baseline needs it to size
the code rate, and nothing heavier than a scalar evaluator is required,
so it is implemented here as a bracketed, safeguarded Halley iteration.
"""

import math

# Lower end of the search bracket: exp(-745) is the smallest positive
# double, so w * exp(w) underflows to -0.0 left of it and every
# representable target x < 0 has its root right of it.
_BRACKET_LO = -745.0
_BRANCH_POINT_X = -math.exp(-1.0)  # -1/e, left edge of the domain


def _halley_step(w: float, fw: float) -> float:
    # f(w) = w e^w - x, f' = e^w (1 + w), f'' = e^w (2 + w)
    ew = math.exp(w)
    f1 = ew * (1.0 + w)
    if f1 == 0.0:
        return math.inf  # derivative vanishes at w = -1; force bisection
    f2 = ew * (2.0 + w)
    denom = f1 - fw * f2 / (2.0 * f1)
    if denom == 0.0:
        return math.inf
    return w - fw / denom


def lambert_w_m1(x: float) -> float:
    """Evaluate W_-1(x) for x in [-1/e, 0).

    Returns w <= -1 with w * exp(w) = x to a residual of at most
    1e-12 * max(|x|, 1e-300).  Raises ValueError outside the domain.
    """
    if math.isnan(x) or not _BRANCH_POINT_X <= x < 0.0:
        raise ValueError(f"W_-1 is defined on [-1/e, 0), got {x!r}")

    # Branch-point series in p = -sqrt(2 (1 + e x)); the clamp absorbs the
    # rounding of e * (-1/e) slightly past 1.
    if x < -0.25:
        p = -math.sqrt(max(0.0, 2.0 * (1.0 + math.e * x)))
        if p == 0.0:
            return -1.0
        w = -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p**3
    else:
        # Asymptotics for x -> 0-: w ~ log(-x) - log(-log(-x))
        log_mx = math.log(-x)
        log_neg = math.log(-log_mx)
        w = log_mx - log_neg + log_neg / log_mx

    lo, hi = _BRACKET_LO, -1.0
    tol = 1e-13 * max(abs(x), 1e-300)
    w = min(max(w, lo), hi)
    for _ in range(200):
        fw = w * math.exp(w) - x
        if abs(fw) <= tol:
            return w
        # f is strictly decreasing on [lo, -1]: positive residual means the
        # root lies to the right of w.
        if fw > 0.0:
            lo = w
        else:
            hi = w
        step = _halley_step(w, fw)
        if not (lo < step < hi) or not math.isfinite(step):
            step = 0.5 * (lo + hi)
        if step == w:
            break
        w = step

    fw = w * math.exp(w) - x
    if abs(fw) <= 1e-12 * max(abs(x), 1e-300):
        return w
    raise ArithmeticError(f"W_-1 iteration failed to converge at x={x!r}")
