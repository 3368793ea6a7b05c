"""Independent reference values for the WSCC 9-bus case.

Builds the bus admittance matrix element by element from the line list and
solves the power flow with scipy's root finder on the rectangular current
balance equations (no Newton polar Jacobian shared with the C++ code).
Prints values that are frozen into tests/test_grid_model.cpp.
"""
import json
import pathlib

import numpy as np
from scipy.optimize import root

case = json.loads((pathlib.Path(__file__).parents[2] / "data" / "wscc9.json").read_text())
ids = [b["id"] for b in case["buses"]]
idx = {b: i for i, b in enumerate(ids)}
n = len(ids)

Y = np.zeros((n, n), dtype=complex)
for ln in case["lines"]:
    i, j = idx[ln["from"]], idx[ln["to"]]
    y = 1.0 / complex(ln["r"], ln["x"])
    Y[i, i] += y + 0.5j * ln["b_sh"]
    Y[j, j] += y + 0.5j * ln["b_sh"]
    Y[i, j] -= y
    Y[j, i] -= y

p_spec = np.zeros(n)
q_spec = np.zeros(n)
for g in case["generators"]:
    p_spec[idx[g["bus"]]] += g["p_set"]
for ld in case["loads"]:
    p_spec[idx[ld["bus"]]] -= ld["p"]
    q_spec[idx[ld["bus"]]] -= ld["q"]

kinds = [b["kind"] for b in case["buses"]]
vset = [b.get("v_set", 1.0) for b in case["buses"]]


def unpack(x):
    e = x[:n]
    f = x[n:]
    return e + 1j * f


def residual(x):
    v = unpack(x)
    s = v * np.conj(Y @ v)
    r = []
    for k in range(n):
        if kinds[k] == "slack":
            r += [v[k].real - vset[k], v[k].imag]
        elif kinds[k] == "pv":
            r += [s[k].real - p_spec[k], abs(v[k]) ** 2 - vset[k] ** 2]
        else:
            r += [s[k].real - p_spec[k], s[k].imag - q_spec[k]]
    return np.array(r)


sol = root(residual, np.concatenate([np.ones(n), np.zeros(n)]), method="lm",
           options={"xtol": 1e-15, "ftol": 1e-15, "maxiter": 10000})
v = unpack(sol.x)
s = v * np.conj(Y @ v)
print("max residual", np.max(np.abs(residual(sol.x))))
print("Y(4,5) =", repr(Y[idx[4], idx[5]]))
print("Y(4,4) =", repr(Y[idx[4], idx[4]]))
for k in range(n):
    print(f"bus {ids[k]}: v={abs(v[k]):.15f} theta={np.angle(v[k]):.15f} p={s[k].real:.15f} q={s[k].imag:.15f}")
