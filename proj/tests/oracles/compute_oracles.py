"""Independent oracles for frozen test values. Run: python3 compute_oracles.py"""
import math
import numpy as np
import scipy.linalg

np.set_printoptions(precision=17)

# cosine schedule, zero-based index i holds f(i+1)/f(0)
T, s = 1000, 0.008
f = lambda t: math.cos(((t / T) + s) / (1 + s) * math.pi / 2) ** 2
ab = [f(i + 1) / f(0) for i in range(T)]
ab[-1] = ab[-2] * (1 - 0.999)
print("cosine ab[0], ab[1], ab[499], ab[998], ab[999]:", repr(ab[0]), repr(ab[1]), repr(ab[499]), repr(ab[998]), repr(ab[999]))

print("forward example:", repr(math.sqrt(0.25) + math.sqrt(0.75)))

a = np.array([0.3, -1.2, 0.5, 2.0, -0.7, 0.1, 1.5, -0.25])
b = np.array([0.1, -0.9, 1.5, 1.0, -0.2, 0.4, 1.0, 0.75])
print("loss 8:", repr(float(np.mean((a - b) ** 2))))

mu = np.array([0.5, -1.0, 0.2]); sig = np.array([0.8, 1.5, 1.0])
print("kl3:", repr(float(np.sum(0.5 * (mu**2 + sig**2 - 1 - np.log(sig**2))))))

# karras sigmas
smax, smin, rho, n = 80.0, 0.002, 7.0, 5
ks = [(smax ** (1 / rho) + i / (n - 1) * (smin ** (1 / rho) - smax ** (1 / rho))) ** rho for i in range(n)]
print("karras 80/0.002/5:", [repr(x) for x in ks])

# clip starts for 42.1 s at 16 kHz
rate = 16000
Tn = int(round(42.1 * rate)); w = 10 * rate; h = 5 * rate
starts = list(range(0, Tn - w + 1, h))
if starts[-1] + w < Tn:
    starts.append(Tn - w)
print("42.1 starts:", [x / rate for x in starts], len(starts))

# FAD oracle on fixed 20x3 sets
rng = np.random.default_rng(1234)
g = rng.normal(size=(20, 3)); r = rng.normal(size=(20, 3)) * 1.3 + 0.4
def fad(x, y, eps=1e-6):
    mx, my = x.mean(0), y.mean(0)
    cx = np.cov(x, rowvar=False) + eps * np.eye(x.shape[1])
    cy = np.cov(y, rowvar=False) + eps * np.eye(y.shape[1])
    w, v = np.linalg.eig(cx @ cy)
    tr = np.sum(np.sqrt(w.real.clip(min=0)))
    tr2 = np.trace(scipy.linalg.sqrtm(cx @ cy)).real
    assert abs(tr - tr2) < 1e-10
    return float(np.sum((mx - my) ** 2) + np.trace(cx) + np.trace(cy) - 2 * tr)
print("fad g:", repr(g.tolist()))
print("fad r:", repr(r.tolist()))
print("fad value:", repr(fad(g, r)))

# inception score: K distinct one-hots with floor 1e-10 and renormalisation
K, eps = 8, 1e-10
P = np.full((K, K), eps); np.fill_diagonal(P, 1.0); P /= P.sum(1, keepdims=True)
m = P.mean(0)
print("IS one-hot K=8:", repr(float(math.exp(np.mean(np.sum(P * np.log(P / m), 1))))))

p = np.array([0.5, 0.5]); q = np.array([0.9, 0.1])
print("KL(p||q):", repr(float(np.sum(p * np.log(p / q)))), "KL(q||p):", repr(float(np.sum(q * np.log(q / p)))))

# Frozen copy of the FAD sets for the C++ tests.
def rows(m):
    return ",\n".join("    {" + ", ".join(repr(float(x)) for x in row) + "}" for row in m)
header = f"""// Generated by compute_oracles.py; do not edit.
#pragma once

namespace oracle {{

constexpr int kFadRows = {g.shape[0]};
constexpr int kFadCols = {g.shape[1]};
constexpr double kFadGen[kFadRows][kFadCols] = {{
{rows(g)}
}};
constexpr double kFadRef[kFadRows][kFadCols] = {{
{rows(r)}
}};
constexpr double kFadValue = {fad(g, r)!r};

}}  // namespace oracle
"""
with open(__file__.rsplit("/", 1)[0] + "/fad_sets.hpp" if "/" in __file__ else "fad_sets.hpp", "w") as fh:
    fh.write(header)
