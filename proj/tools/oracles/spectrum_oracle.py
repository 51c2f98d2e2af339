"""Reference values for the energy spectrum, computed with mpmath.

Integrals are done by direct adaptive quadrature of the piecewise spectrum,
so nothing here shares algebra with the closed forms in src/spectrum.cpp.
Run: python3 tools/oracles/spectrum_oracle.py
"""
import mpmath as mp

mp.mp.dps = 40
A = [mp.mpf(230) / 9, mp.mpf(-391) / 9, mp.mpf(170) / 9]  # a4..a6
B = [mp.mpf(209) / 9, mp.mpf(-352) / 9, mp.mpf(152) / 9]  # b7..b9
CK = mp.mpf(1) / 2


def energy(k, k1, k2):
    if k < k1:
        return CK * k1 ** (-mp.mpf(5) / 3) * sum(a * (k / k1) ** j for a, j in zip(A, (4, 5, 6)))
    if k2 is None or k <= k2:
        return CK * k ** (-mp.mpf(5) / 3)
    return CK * k2 ** (-mp.mpf(5) / 3) * sum(b * (k / k2) ** (-j) for b, j in zip(B, (7, 8, 9)))


def moment(p, k1, k2):
    f = lambda k: k ** p * energy(k, k1, k2)
    pts = [0, k1] + ([k2, mp.inf] if k2 is not None else [mp.inf])
    return mp.quad(f, pts)


def solve(zeta):
    if zeta == 0:
        return mp.findroot(lambda k1: moment(0, k1, None) - 1, mp.mpf(1)), None
    f = lambda k1, k2: [moment(0, k1, k2) - 1, moment(2, k1, k2) - 1 / (2 * mp.mpf(zeta))]
    guess = (mp.mpf("1.04"), mp.mpf(zeta) ** (-0.75) * mp.mpf("0.07")) if zeta < 0.1 else (mp.mpf("0.5"), mp.mpf("0.8"))
    if zeta >= 2:
        guess = (mp.mpf("0.36"), mp.mpf("0.39"))
    return mp.findroot(f, guess)


def trace(r, k1, k2):
    """tr gamma(r) for zeta = 0 (k2 is None).

    Head on [0, k1] by quadrature split at the zeros of sin(kr); the k^(-5/3)
    tail from the upper incomplete gamma function,
    int_x^inf s^(a-1) sin s ds = Im(exp(i pi a / 2) Gamma(a, -i x)).
    """
    assert k2 is None
    g = lambda k: 2 * energy(k, k1, k2) * mp.sinc(k * r)
    head = mp.quad(g, mp.linspace(0, k1, int(max(2, k1 * r)) + 2))
    a = -mp.mpf(5) / 3
    tail = mp.im(mp.exp(1j * mp.pi * a / 2) * mp.gammainc(a, -1j * k1 * r))
    return head + 2 * CK * r ** (mp.mpf(2) / 3) * tail


if __name__ == "__main__":
    for z in ["1e-4", "1e-2", "1", "3"]:
        k1, k2 = solve(mp.mpf(z))
        print(f"zeta={z}: kappa1={mp.nstr(k1, 18)} kappa2={mp.nstr(k2, 18)}")
    k1, _ = solve(0)
    print(f"zeta=0: kappa1={mp.nstr(k1, 18)}")
    for r in ["0.5", "1", "2", "10", "100", "1000"]:
        print(f"tr gamma({r}) = {mp.nstr(trace(mp.mpf(r), k1, None), 17)}")
