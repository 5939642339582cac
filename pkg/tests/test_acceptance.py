"""Acceptance suite: one test per criterion, each recording a PASS/FAIL line."""
import time

import numpy as np

from swallowtail_qbd.polynomials import (gram_schmidt_table, moment_blocks, pde_residual,
                                         random_interior_points)
from swallowtail_qbd.quadrature import build_quadrature
from swallowtail_qbd.recurrence import (U_FAMILIES, V_FAMILIES, b_u_alternative, build_operator,
                                        coeff_special_gamma, coeff_u, coeff_v,
                                        delta_ratio_identity, in_range, pi_norm, pi_norm_alt,
                                        u_blocks, v_blocks)
from swallowtail_qbd.simulation import (ChainState, run_replications, urn_closed_form,
                                        urn_exact_probabilities)
from swallowtail_qbd.special import ModelParameters, normalizing_constant
from swallowtail_qbd.spectral import km_report
from swallowtail_qbd.stochastic import (Recurrence, Region, build_P, classify_recurrence,
                                        classify_region, continuous_time_feasibility,
                                        divergence_probe, invariance_residual, invariant_measure,
                                        probe_trend, validate_stochastic)

from conftest import random_params

SEED = 20240601

# one triple per region plus the two special gamma values
ORACLE_TRIPLES = [ModelParameters(0.3, 1.4, 0.2),     # A
                  ModelParameters(1.5, 0.2, 0.7),     # B
                  ModelParameters(-0.7, 0.3, 0.9),   # C
                  ModelParameters(0.5, 1.5, -0.5),
                  ModelParameters(2.0, -0.6, 0.5)]


def test_criterion_01_weight_normalization(criterion):
    rng = np.random.default_rng(SEED)
    triples = random_params(rng, 20, gammas=[-0.5, 0.5])
    t0 = time.perf_counter()
    err = max(abs(build_quadrature(40, p).weights.sum() - 1) for p in triples)
    dt = time.perf_counter() - t0
    ok = err <= 1e-9 and dt < 5
    criterion(1, ok, f"max |int W - 1| = {err:.2e} over 20 triples in {dt:.2f} s")
    assert ok


def test_criterion_02_geometry(criterion):
    zero = ModelParameters(0, 0, 0)
    area = build_quadrature(24, zero, normalized=False).weights.sum()
    C = float(normalizing_constant(zero))
    ok = abs(area - 1 / 6) <= 1e-12 and abs(C - 1 / 6) <= 1e-15
    criterion(2, ok, f"area - 1/6 = {area - 1 / 6:.1e}, C(0,0,0) - 1/6 = {C - 1 / 6:.1e}")
    assert ok


def test_criterion_03_coefficient_oracle(criterion):
    t0 = time.perf_counter()
    worst = 0.0
    for p in ORACLE_TRIPLES:
        table = gram_schmidt_table(7, p, build_quadrature(20, p))
        rule = table.rule
        for n in range(7):
            for var, ref in (("u", u_blocks(n, p)), ("v", v_blocks(n, p))):
                for got, want in zip(moment_blocks(table, rule, n, var), (ref.A, ref.B, ref.C)):
                    if want.size:
                        worst = max(worst, float(np.abs(got - want).max()))
    dt = time.perf_counter() - t0
    regions = [classify_region(p).region.value for p in ORACLE_TRIPLES[:3]]
    ok = worst <= 1e-8 and dt < 60
    criterion(3, ok, f"max block deviation {worst:.2e} for n <= 6, regions {regions} "
                     f"and gamma = -1/2, 1/2, in {dt:.1f} s")
    assert ok


def test_criterion_04_identities(criterion):
    rng = np.random.default_rng(SEED + 4)
    triples = random_params(rng, 10, gammas=[-0.5, 0.5]) + ORACLE_TRIPLES
    rows = ident = alt = pis = 0.0
    for p in triples:
        for kind in ("J1", "J2", "P"):
            op = build_operator(kind, 10, p.with_tau(0.5))
            rows = max(rows, max(np.abs(L.row_sums() - 1).max() for L in op.levels))
        for n in range(11):
            for k in range(n + 1):
                if not (p.gamma == -0.5 and k == n):
                    ident = max(ident, abs(delta_ratio_identity(n, k, p) - 4))
                if p.beta ** 2 != p.alpha ** 2:
                    alt = max(alt, abs(b_u_alternative(n, k, p) - coeff_u(n, k, "b", p)))
                pis = max(pis, abs(pi_norm_alt(n, k, p) / pi_norm(n, k, p) - 1))
    special = 0.0
    for p in triples:
        if p.gamma in (-0.5, 0.5):
            for n in range(9):
                for k in range(n + 1):
                    for w in U_FAMILIES + V_FAMILIES:
                        if in_range(w, n, k):
                            ref = (coeff_u if w in U_FAMILIES else coeff_v)(n, k, w, p)
                            special = max(special, abs(coeff_special_gamma(n, k, w, p) - ref))
    ok = rows <= 1e-12 and ident <= 1e-10 and alt <= 1e-10 and special <= 1e-10 and pis <= 1e-10
    criterion(4, ok, f"row sums {rows:.1e}, delta sum {ident:.1e}, alternative b {alt:.1e}, "
                     f"gamma = +-1/2 forms {special:.1e}, Pi forms (rel) {pis:.1e}")
    assert ok


def _region_sample(rng, region, count, tau_cap=1.0):
    out = []
    while len(out) < count:
        a, b = rng.uniform(-0.95, 3, 2)
        g = rng.uniform(-0.95, 3)
        p = ModelParameters(float(a), float(b), float(g)) if min(a + g, b + g) > -1.5 else None
        if p is None:
            continue
        r = classify_region(p)
        if r.region == region and r.tau_max <= tau_cap:
            out.append(p)
    return out


def test_criterion_05_stochasticity(criterion):
    rng = np.random.default_rng(SEED + 5)
    configs = []
    for region, count in ((Region.A, 34), (Region.B, 33), (Region.C, 33)):
        for i, p in enumerate(_region_sample(rng, region, count)):
            tau_max = classify_region(p).tau_max
            tau = tau_max if i % 4 == 0 else float(rng.uniform(0, tau_max))
            configs.append(p.with_tau(tau))
    bad = sum(bool(validate_stochastic(build_P(p, 15))) for p in configs)
    above = []
    for region in (Region.B, Region.C):
        for p in _region_sample(rng, region, 5, tau_cap=1 / 1.05):
            tau = 1.05 * classify_region(p).tau_max
            above.append(bool(validate_stochastic(build_P(p.with_tau(tau), 20))))
    exact = classify_region(ModelParameters(1, 0, 0)).tau_max == 3 / 5
    ok = bad == 0 and all(above) and exact
    criterion(5, ok, f"{bad} of {len(configs)} configs with tau <= tau_max violate; "
                     f"{sum(above)} of {len(above)} B/C configs violate at 1.05 tau_max; "
                     f"C_-1/2(1,0) = 3/5 exactly: {exact}")
    assert ok


def test_criterion_06_karlin_mcgregor(criterion):
    t0 = time.perf_counter()
    worst = 0.0
    for p in (ModelParameters(0.3, 1.4, 0.2), ModelParameters(1, 0, 0),
              ModelParameters(-0.7, 0.3, 0.9)):
        for tau in (0.0, 0.5, classify_region(p).tau_max):
            rows = km_report(p.with_tau(tau), 3, 4, N=7)
            worst = max(worst, max(r["abs_diff"] for r in rows))
    dt = time.perf_counter() - t0
    ok = worst <= 1e-6 and dt < 120
    criterion(6, ok, f"max |KM - matrix power| = {worst:.2e} over levels <= 3, "
                     f"n <= 4, 3 triples x 3 tau in {dt:.1f} s")
    assert ok


def test_criterion_07_invariant_measure(criterion):
    worst = 0.0
    for p in (ModelParameters(0, 0, 0, 0.5), ModelParameters(0.3, 1.4, 0.2, 1.0),
              ModelParameters(1, 0, 0, 0.6), ModelParameters(-0.6, -0.8, 0.9, 0.3)):
        worst = max(worst, invariance_residual(p, 15))
    first = invariant_measure(ModelParameters(0, 0, 0), 1)
    ok = worst <= 1e-10 and np.allclose(first, [1, 10, 14], rtol=1e-14)
    criterion(7, ok, f"max relative |pi P - pi| = {worst:.1e} at N = 15; "
                     f"first entries {first.tolist()}")
    assert ok


def test_criterion_08_recurrence(criterion):
    rows = []
    ok = True
    for a in (-0.8, -0.5, -0.2):
        for g in (-0.5, -0.3, 0.0):
            p = ModelParameters(a, 0.5, g)
            s = a + g
            expected = Recurrence.NULL_RECURRENT if -1.5 < s <= -1 else Recurrence.TRANSIENT
            cls = classify_recurrence(p)
            tau = min(0.5, classify_region(p).tau_max)
            verdict = probe_trend(divergence_probe(p.with_tau(tau))).verdict
            consistent = (verdict == "growing") == (cls == Recurrence.NULL_RECURRENT)
            ok &= cls == expected and consistent
            rows.append(f"{s:+.1f}:{cls.value[0]}/{verdict[0]}")
    criterion(8, ok, "alpha+gamma: class/probe " + " ".join(rows))
    assert ok


def test_criterion_09_pde(criterion):
    pts = random_interior_points(50, np.random.default_rng(SEED + 9))
    worst = 0.0
    for p in (ModelParameters(0, 0, 0), ModelParameters(0.5, 1, 0.5),
              ModelParameters(-0.7, 0.3, 0.9)):
        table = gram_schmidt_table(6, p)
        for n, k in table.indices():
            worst = max(worst, pde_residual(n, k, p, table, pts))
    ok = worst <= 1e-7
    criterion(9, ok, f"max |D Q + lambda Q| = {worst:.1e} over 50 points, n <= 6, 3 triples")
    assert ok


def test_criterion_10_urn(criterion):
    worst = 0.0
    stay_exact = True
    for a in range(3):
        for g in range(3):
            p = ModelParameters(a, a, g)
            for n in range(6):
                for k in range(n + 1):
                    ex = urn_exact_probabilities(ChainState(n, k), p)
                    stay_exact &= ex[ChainState(n, k)] == 0.5
                    for w, (m, j) in {"a": (n + 1, k), "c": (n - 1, k),
                                      "e": (n, k + 1), "d": (n, k - 1)}.items():
                        if 0 <= j <= m:
                            got = float(ex.get(ChainState(m, j), 0))
                            worst = max(worst, abs(got - float(urn_closed_form(n, k, w, a, g))))
                            worst = max(worst, abs(got - coeff_u(n, k, w, p)))
    R = 10 ** 6
    res = run_replications(ChainState(1, 0), 1, R, "urn", ModelParameters(0, 0, 0), 7)
    target = {(2, 0): 0.25, (0, 0): 0.05, (1, 1): 0.2, (1, 0): 0.5}
    zs = []
    for s, q in target.items():
        f = res.transitions.get(((1, 0), s), 0) / R
        zs.append(abs(f - q) / np.sqrt(q * (1 - q) / R))
    ok = worst <= 1e-12 and stay_exact and max(zs) <= 3
    criterion(10, ok, f"enumeration vs closed form {worst:.1e}, stay = 1/2 exactly: {stay_exact}, "
                      f"Monte Carlo max |z| = {max(zs):.2f} (R = 1e6)")
    assert ok


def test_criterion_11_no_continuous_time(criterion):
    rng = np.random.default_rng(SEED + 11)
    results = [continuous_time_feasibility(p, 8) for p in random_params(rng, 20, gammas=[-0.5, 0.5])]
    ok = all(not r.feasible and r.witness is not None for r in results)
    worst = max(r.witness["value"] for r in results)
    criterion(11, ok, f"20 of 20 triples infeasible, each with a witness "
                      f"(largest witness entry {worst:.3f})")
    assert ok
