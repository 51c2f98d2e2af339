"""Reference values for the normality tests.

W and its p-value come from scipy.stats.shapiro (Fortran swilk). The H
statistic is recomputed here from those per-variate results with numpy and
scipy.stats.chi2. Prints C++ initializers for tests/unit/test_stats.cpp.
Run: python3 tools/oracles/stats_oracle.py
"""
import numpy as np
from scipy import stats


def sw_p(w, n):
    """Royston's normalizing transformation, used for Shapiro-Francia W'."""
    if n == 3:
        return max(0.0, min(1.0, 6 / np.pi * (np.arcsin(np.sqrt(w)) - np.arcsin(np.sqrt(0.75)))))
    if n <= 11:
        g = 0.459 * n - 2.273
        m = 0.544 - 0.39978 * n + 0.025054 * n**2 - 0.0006714 * n**3
        s = np.exp(1.3822 - 0.77857 * n + 0.062767 * n**2 - 0.0020322 * n**3)
        z = (-np.log(g - np.log1p(-w)) - m) / s
    else:
        x = np.log(n)
        m = -1.5861 - 0.31082 * x - 0.083751 * x**2 + 0.0038915 * x**3
        s = np.exp(-0.4803 - 0.082676 * x + 0.0030302 * x**2)
        z = (np.log1p(-w) - m) / s
    return stats.norm.sf(z)


def francia(x):
    n = len(x)
    m = stats.norm.ppf((np.arange(1, n + 1) - 0.375) / (n + 0.25))
    return np.corrcoef(np.sort(x), m)[0, 1] ** 2


def royston(X, matlab):
    n, d = X.shape
    R = []
    for j in range(d):
        x = X[:, j]
        c = x - x.mean()
        kurt = np.mean(c**4) / np.mean(c**2) ** 2
        if matlab and kurt > 3:
            p = sw_p(francia(x), n)
        else:
            p = stats.shapiro(x).pvalue
        R.append(stats.norm.ppf(p / 2) ** 2)
    C = np.corrcoef(X, rowvar=False).reshape(d, d)
    ln = np.log(n)
    u, v = 0.715, 0.21364 + 0.015124 * ln**2 - 0.0018034 * ln**3
    off = C[~np.eye(d, dtype=bool)]
    mc = np.sum(off**5 * (1 - u * (1 - off) ** u / v)) / (d * d - d) if d > 1 else 0.0
    e = d / (1 + (d - 1) * mc)
    H = e * np.sum(R) / d
    return H, e, stats.chi2.sf(H, e)


def fmt(a):
    return ", ".join(repr(float(v)) for v in a)


if __name__ == "__main__":
    rng = np.random.default_rng(20240611)
    x = np.round(rng.normal(size=20), 6)
    y = np.round(rng.exponential(size=30), 6)
    t = np.round(rng.normal(size=7), 6)
    X = np.round(np.column_stack([rng.normal(size=25), rng.standard_t(3, size=25), rng.normal(size=25)]), 6)
    X[:, 2] += 0.6 * X[:, 0]
    # check the transformation against scipy before using it for W'
    for v in (x, y, t):
        assert abs(sw_p(stats.shapiro(v).statistic, len(v)) - stats.shapiro(v).pvalue) < 1e-6
    for name, v in (("normal20", x), ("expo30", y), ("normal7", t)):
        r = stats.shapiro(v)
        print(f"// {name}\n{{{fmt(v)}}}\nW = {r.statistic!r}, p = {r.pvalue!r}")
    print("// shapiro-francia normal20: W' =", repr(francia(x)), "p =", repr(sw_p(francia(x), 20)))
    print(f"// matrix 25x3 row-major\n{{{fmt(X.ravel())}}}")
    print("// kurtosis per column", [float(np.mean((X[:, j] - X[:, j].mean())**4) / np.var(X[:, j])**2) for j in range(3)])
    for matlab in (False, True):
        print(f"// royston matlab={matlab}: H, e, p =", ", ".join(repr(float(v)) for v in royston(X, matlab)))
