"""Built-in invariant battery behind the CLI selftest command.

A fast, deterministic miniature of the full test suite: propagation
identities, cell constants, operator identities, expansion cross-checks and
the square-cell oracle.  Each check prints one PASS/FAIL line.
"""

from __future__ import annotations

import math

import numpy as np

from . import wop
from .green import SquareWellParams, green_exact, square_well_oracle
from .halfline import m_functions, s_functions
from .potential import cell_constants, load_potential, square_potential
from .transfer import evolve, monodromy, series_evolution

_SQUARE = "period=1; const V=0 len=0.6; const V=1 len=0.4"
_COSINE = "period=2; cosine amp=0.3 len=2"


def _checks():
    pot = square_potential(1.0, 1.0, 0.6)
    cosv = load_potential(_COSINE)
    cc = cell_constants(pot)

    def unimodularity():
        worst = 0.0
        for p, k in ((pot, 0.7), (pot, 0.4 + 0.2j), (cosv, 1.1), (cosv, 0.3 + 0.5j)):
            worst = max(worst, abs(evolve(p, 1.3, -0.4, k).det - 1.0))
        return worst, 1e-12

    def composition():
        worst = 0.0
        for p, k in ((pot, 0.9), (cosv, 0.6 + 0.1j)):
            lhs = evolve(p, 2.1, 0.8, k).matrix @ evolve(p, 0.8, -0.3, k).matrix
            rhs = evolve(p, 2.1, -0.3, k).matrix
            worst = max(worst, float(np.abs(lhs - rhs).max()))
        return worst, 1e-10

    def cell_identity():
        return max(abs(cc.L0 ** 2 - cc.P * cc.M),
                   abs(cc.V0 - 0.5 * math.log(cc.P / cc.M))), 1e-12

    def series_route():
        worst = 0.0
        for k in (0.3, 0.1j, 0.25 + 0.25j):
            d = np.abs(series_evolution(pot, 1.2, 0.1, k).matrix
                       - evolve(pot, 1.2, 0.1, k).matrix).max()
            worst = max(worst, float(d))
        return worst, 1e-8

    def discriminant():
        p = SquareWellParams(C=1.0, L=1.0, a=0.6)
        worst = 0.0
        for k in (0.5, 1.7, 4.4, 9.9):
            worst = max(worst, abs(monodromy(pot, k).Y - p.discriminant(k)))
        return worst, 1e-10

    def operator_identities():
        grid = wop.WopGrid(pot, cc=cc)
        xs = grid.mesh.nodes[:, :, None]
        w = grid.w_nodes[None, None, :]
        vals = (np.sin(2 * np.pi * xs) + 0.5 * np.cos(4 * np.pi * xs)) * np.cos(0.4 * (w - cc.V0))
        g = wop.WGridFunction(grid, vals)
        h = wop.op_A_inv(pot, g)
        resid = float(np.abs(wop.op_A(h).values - g.values).max())
        resid = max(resid, wop.op_B(pot, h).cell_mean_residual())
        return resid, 1e-8

    def expansion_closed_forms():
        series = wop.rbar_numeric(pot, 2)
        worst = 0.0
        for x in (0.25, 0.7):
            for w in (cc.V0 - 1.0, cc.V0 + 0.8):
                worst = max(worst, abs(series.rbar[2].eval(x, w)
                                       - wop.rbar_closed(pot, x, w, 2, cc=cc)))
        return worst, 1e-6

    def oracle_match():
        p = SquareWellParams(C=1.0, L=1.0, a=0.6)
        worst = 0.0
        for k in (0.5, 2.0):
            exact = green_exact(pot, 0.4, 0.1, k).G_S
            ref = square_well_oracle(p, 0.4, 0.1, k)
            worst = max(worst, abs(exact - ref) / abs(ref))
        return worst, 1e-8

    def m_reconstruction():
        worst = 0.0
        for k in (0.5, 1.0):
            mp, mm = m_functions(pot, 0.3, k)
            _, _, S = s_functions(pot, 0.3, k)
            worst = max(worst, abs((1j / (2 * k)) * (mp + mm) + 1.0 - S))
        return worst, 1e-10

    return [
        ("unimodularity", unimodularity),
        ("composition", composition),
        ("cell-constants", cell_identity),
        ("series-vs-ode", series_route),
        ("discriminant", discriminant),
        ("operator-identities", operator_identities),
        ("expansion-closed-forms", expansion_closed_forms),
        ("green-oracle", oracle_match),
        ("m-reconstruction", m_reconstruction),
    ]


def run_selftest(out=None) -> int:
    """Run every check; returns the number of failures."""
    import sys

    out = out or sys.stdout
    failures = 0
    for name, check in _checks():
        try:
            worst, tol = check()
            ok = worst <= tol
        except Exception as exc:  # a crash is a failure, not an abort
            out.write(f"FAIL {name}: {type(exc).__name__}: {exc}\n")
            failures += 1
            continue
        if ok:
            out.write(f"PASS {name} (worst {worst:.3e} <= {tol:g})\n")
        else:
            out.write(f"FAIL {name} (worst {worst:.3e} > {tol:g})\n")
            failures += 1
    return failures
