"""Independent derivation of the frozen reference values used in the tests.

Exact rational arithmetic only; nothing from the package is imported.
Run ``python tests/oracle/derive.py`` to reprint the table.
"""

from fractions import Fraction as F


def canonical_limit():
    # stationarity on the x-axis: first component of (gamma f - mu G) x vanishes,
    # gamma = mu = 1, f(x) = x/10 + (1, 1), G = I  ->  1 - (9/10) x = 0
    return F(10, 9)


def tau(mu, eta, L, dq=F(1), q=2):
    return mu * (eta - dq * mu ** (q - 1) * L**q / q)


def mu_bound(eta, L, dq=F(1), q=2):
    return (q * eta / (dq * L**q)) ** (1 / F(q - 1))


def threshold(lam, dq=F(1), q=2):
    return max(F(0), 1 - (lam * q / dq) ** (1 // (q - 1)))


def hilbert_strictness(a):
    # a <= 1 - lam (1 - a)^2 for a diagonal entry a < 1
    return (1 - a) / (1 - a) ** 2


def path_second_coordinate(t, beta=F(1, 2)):
    # x_t = t (x/10 + (1, 1)) + (1 - t) T x with T = b I + (1-b) diag(1, -1/4);
    # second coordinate: y = t (y/10 + 1) + (1 - t) c y with c = b - (1-b)/4
    c = beta - (1 - beta) / 4
    return t / (1 - t / 10 - (1 - t) * c)


def table():
    out = {
        "canonical_limit": canonical_limit(),
        "tau(mu=1,eta=L=1)": tau(F(1), F(1), F(1)),
        "tau(mu=1/4,eta=1,L=2)": tau(F(1, 4), F(1), F(2)),
        "tau(mu=1/2,eta=L=1)": tau(F(1, 2), F(1), F(1)),
        "mu_bound(eta=L=1)": mu_bound(F(1), F(1)),
        "mu_bound(eta=1,L=2)": mu_bound(F(1), F(2)),
        "threshold(1/2)": threshold(F(1, 2)),
        "threshold(1/4)": threshold(F(1, 4)),
        "strictness(a=-1/2)": hilbert_strictness(F(-1, 2)),
        "combined diag": (F(1), (F(0) + F(-1, 2)) / 2),
        "averaged diag(1,-1/2) at 1/2": (F(1), F(1, 2) + F(1, 2) * F(-1, 2)),
        "gamma bound canonical": tau(F(1), F(1), F(1)) / F(1, 10),
        "step factor t=1 mu=1/2": 1 - tau(F(1, 2), F(1), F(1)),
    }
    for t in (F(1, 2), F(1, 10), F(1, 100), F(1, 1000)):
        out[f"path y(t={t})"] = path_second_coordinate(t)
    return out


if __name__ == "__main__":
    for k, v in table().items():
        if isinstance(v, tuple):
            print(f"{k:32s} {tuple(str(a) for a in v)}")
        else:
            print(f"{k:32s} {str(v):>22s} {float(v)!r}")
