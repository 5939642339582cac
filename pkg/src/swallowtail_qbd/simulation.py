"""Monte Carlo simulation of the chain and of the two-urn procedure for beta = alpha."""
from __future__ import annotations

import csv
import io
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from .recurrence import u_blocks, v_blocks
from .special import DomainError, ModelParameters, ParameterError

BLOCK = 4096
ROW_TOL = 1e-9


@dataclass(frozen=True, order=True)
class ChainState:
    level: int
    phase: int

    def __post_init__(self):
        if not (0 <= self.phase <= self.level):
            raise DomainError(f"need 0 <= phase <= level, got ({self.level},{self.phase})")

    @classmethod
    def parse(cls, text: str) -> "ChainState":
        try:
            n, k = (int(t) for t in text.split(","))
        except ValueError as exc:
            raise DomainError(f"state must look like 'n,k', got {text!r}") from exc
        return cls(n, k)

    def key(self) -> str:
        return f"{self.level},{self.phase}"


def _generator(seed_seq: np.random.SeedSequence) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed_seq))


# --------------------------------------------------------------------------
# chain driven by a stochastic operator


def _check_row(row, state):
    total = sum(w for _, w in row)
    if abs(total - 1) > ROW_TOL:
        raise DomainError(f"row of {state} sums to {total!r}")
    if any(w < -ROW_TOL for _, w in row):
        raise DomainError(f"row of {state} has a negative entry")


def step_chain(state: ChainState, row_of: Callable, rng: np.random.Generator) -> ChainState:
    """One transition; ``row_of(n, k)`` returns [((n', k'), weight), ...]."""
    row = row_of(state.level, state.phase)
    _check_row(row, state)
    w = np.clip(np.array([x for _, x in row]), 0, None)
    i = int(np.searchsorted(np.cumsum(w) / w.sum(), rng.random(), side="right"))
    (n, k), _ = row[min(i, len(row) - 1)]
    return ChainState(n, k)


class RowTable:
    """Transition rows of P = (1-tau) J1 + tau J2 built level by level on demand.

    Every row has at most nine targets; they are stored as padded arrays so a
    whole population of chains can be stepped at once.
    """
    WIDTH = 9

    def __init__(self, p: ModelParameters):
        if p.tau is None:
            raise DomainError("the chain needs tau")
        self.p = p
        self.levels = 0
        self.cum = np.zeros((0, self.WIDTH))
        self.tn = np.zeros((0, self.WIDTH), dtype=np.int64)
        self.tk = np.zeros((0, self.WIDTH), dtype=np.int64)

    def row(self, n: int, k: int):
        self.ensure(n)
        s = n * (n + 1) // 2 + k
        probs = np.diff(np.concatenate([[0.0], self.cum[s]]))
        return [((int(a), int(b)), float(w)) for a, b, w in zip(self.tn[s], self.tk[s], probs)
                if w > 0]

    def ensure(self, level: int):
        if level < self.levels:
            return
        tau = self.p.tau
        cums, tns, tks = [self.cum], [self.tn], [self.tk]
        for n in range(self.levels, level + 1):
            U, V = u_blocks(n, self.p), v_blocks(n, self.p)
            A = (1 - tau) * U.A + tau * V.A
            B = (1 - tau) * U.B + tau * V.B
            C = (1 - tau) * U.C + tau * V.C
            cum = np.ones((n + 1, self.WIDTH))
            tn = np.zeros((n + 1, self.WIDTH), dtype=np.int64)
            tk = np.zeros((n + 1, self.WIDTH), dtype=np.int64)
            for k in range(n + 1):
                row = []
                for m, M in ((n - 1, C), (n, B), (n + 1, A)):
                    if M.shape[1] == 0:
                        continue
                    for j in range(max(0, k - 1), min(M.shape[1], k + 2)):
                        if M[k, j] != 0:
                            row.append(((m, j), M[k, j]))
                _check_row(row, (n, k))
                w = np.clip([x for _, x in row], 0, None)
                c = np.cumsum(w) / w.sum()
                cum[k, :len(row)] = c
                cum[k, len(row) - 1:] = 1.0
                for i, ((m, j), _) in enumerate(row):
                    tn[k, i], tk[k, i] = m, j
                tn[k, len(row):], tk[k, len(row):] = tn[k, len(row) - 1], tk[k, len(row) - 1]
            cums.append(cum)
            tns.append(tn)
            tks.append(tk)
        self.cum = np.vstack(cums)
        self.tn = np.vstack(tns)
        self.tk = np.vstack(tks)
        self.levels = level + 1

    def step(self, n: np.ndarray, k: np.ndarray, rng: np.random.Generator):
        self.ensure(int(n.max()))
        s = n * (n + 1) // 2 + k
        r = rng.random(n.size)
        idx = (r[:, None] >= self.cum[s]).sum(axis=1)
        idx = np.minimum(idx, self.WIDTH - 1)
        return self.tn[s, idx], self.tk[s, idx]


# --------------------------------------------------------------------------
# urn model


def _check_urn_params(p: ModelParameters):
    a, g = p.alpha, p.gamma
    if p.beta != a:
        raise ParameterError("the urn model needs beta = alpha")
    if not (float(a).is_integer() and float(g).is_integer() and a >= 0 and g >= 0):
        raise ParameterError("the urn model needs nonnegative integer alpha and gamma")
    return int(a), int(g)


@dataclass(frozen=True)
class UrnConfiguration:
    """Ball counts seen from state (n, k) before the first draw."""
    state: ChainState
    u1_blue: int
    u1_red: int
    u2_blue: int
    u2_red: int

    @classmethod
    def at(cls, state: ChainState, p: ModelParameters) -> "UrnConfiguration":
        a, g = _check_urn_params(p)
        n, k = state.level, state.phase
        return cls(state, n + k + 2 * a + 2 * g + 2, n + k + 2 * a + 1,
                   n - k + 2 * g + 1, n - k)

    def refill(self, same_colour: bool, p: ModelParameters) -> Tuple[int, int]:
        """Blue and red balls put in urn A_k for the second stage."""
        a, g = int(p.alpha), int(p.gamma)
        n, k = self.state.level, self.state.phase
        if same_colour:
            return 2 * n + 4 * a + 2 * g + 3, 2 * n + 2 * g + 1
        return k + 2 * a + 1, k


def _urn_move(state: ChainState, c1: str, c2: str, c3: str) -> ChainState:
    n, k = state.level, state.phase
    if c1 == c2 == c3 == "blue":
        return ChainState(n + 1, k)
    if c1 == c2 == c3 == "red":
        return ChainState(n - 1, k)
    if (c1, c2, c3) == ("blue", "red", "blue"):
        return ChainState(n, k + 1)
    if (c1, c2, c3) == ("red", "blue", "red"):
        return ChainState(n, k - 1)
    return state


def urn_step(state: ChainState, p: ModelParameters, rng: np.random.Generator):
    """One literal pass of the two-stage procedure; returns (new state, trace)."""
    cfg = UrnConfiguration.at(state, p)

    def draw(blue, red):
        return "blue" if rng.integers(blue + red) < blue else "red"

    c1 = draw(cfg.u1_blue, cfg.u1_red)
    c2 = draw(cfg.u2_blue, cfg.u2_red)
    blue, red = cfg.refill(c1 == c2, p)
    c3 = draw(blue, red)
    new = _urn_move(state, c1, c2, c3)
    trace = {"U1": c1, "U2": c2, "A_k": {"blue": blue, "red": red}, "A_k_draw": c3,
             "from": state.key(), "to": new.key()}
    return new, trace


def urn_exact_probabilities(state: ChainState, p: ModelParameters) -> Dict[ChainState, Fraction]:
    """Exact law of the next state, enumerating all eight colour outcomes."""
    cfg = UrnConfiguration.at(state, p)
    t1 = cfg.u1_blue + cfg.u1_red
    t2 = cfg.u2_blue + cfg.u2_red
    out: Dict[ChainState, Fraction] = Counter()
    for c1, w1 in (("blue", Fraction(cfg.u1_blue, t1)), ("red", Fraction(cfg.u1_red, t1))):
        for c2, w2 in (("blue", Fraction(cfg.u2_blue, t2)), ("red", Fraction(cfg.u2_red, t2))):
            if w1 * w2 == 0:
                continue
            blue, red = cfg.refill(c1 == c2, p)
            for c3, w3 in (("blue", Fraction(blue, blue + red)), ("red", Fraction(red, blue + red))):
                if w3:
                    out[_urn_move(state, c1, c2, c3)] += w1 * w2 * w3
    return dict(out)


def urn_closed_form(n: int, k: int, which: str, alpha: int, gamma: int) -> Fraction:
    """The explicit beta = alpha coefficients as exact rationals."""
    a, g = alpha, gamma
    den = (2 * n - 2 * k + 2 * g + 1) * (2 * n + 2 * k + 4 * a + 2 * g + 3)
    if which == "a":
        return Fraction((2 * n + 4 * a + 2 * g + 3) * (n - k + 2 * g + 1) * (n + k + 2 * a + 2 * g + 2),
                        4 * (n + a + g + 1) * den)
    if which == "c":
        return Fraction((2 * n + 2 * g + 1) * (n - k) * (n + k + 2 * a + 1), 4 * (n + a + g + 1) * den)
    if which == "e":
        return Fraction((k + 2 * a + 1) * (n - k) * (n + k + 2 * a + 2 * g + 2), (2 * k + 2 * a + 1) * den)
    if which == "d":
        return Fraction(k * (n - k + 2 * g + 1) * (n + k + 2 * a + 1), (2 * k + 2 * a + 1) * den)
    if which == "b":
        return Fraction(1, 2)
    raise DomainError(f"unknown coefficient {which!r}")


def _urn_step_vec(n, k, a, g, rng):
    t1 = 2 * n + 2 * k + 4 * a + 2 * g + 3
    t2 = 2 * n - 2 * k + 2 * g + 1
    blue1 = rng.integers(0, t1) < n + k + 2 * a + 2 * g + 2
    blue2 = rng.integers(0, t2) < n - k + 2 * g + 1
    same = blue1 == blue2
    fb = np.where(same, 2 * n + 4 * a + 2 * g + 3, k + 2 * a + 1)
    fr = np.where(same, 2 * n + 2 * g + 1, k)
    blue3 = rng.integers(0, fb + fr) < fb
    up = blue1 & blue2 & blue3
    down = ~blue1 & ~blue2 & ~blue3
    right = blue1 & ~blue2 & blue3
    left = ~blue1 & blue2 & ~blue3
    return n + up - down, k + right - left


# --------------------------------------------------------------------------
# replications


@dataclass
class ReplicationResult:
    transitions: Counter
    occupancy: Counter
    trajectory: Optional[List[Tuple[int, int, int]]]
    replications: int
    steps: int

    def frequency_table(self) -> dict:
        """{"n,k->n',k'": {"count", "frequency"}} with frequencies per origin state."""
        totals = Counter()
        for (s, _), c in self.transitions.items():
            totals[s] += c
        out = {}
        for (s, t), c in sorted(self.transitions.items()):
            out[f"{s[0]},{s[1]}->{t[0]},{t[1]}"] = {"count": c, "frequency": c / totals[s]}
        return out

    def occupancy_table(self) -> dict:
        return {f"{n},{k}": c for (n, k), c in sorted(self.occupancy.items())}

    def trajectory_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "level", "phase"])
        for row in self.trajectory or []:
            w.writerow(row)
        return buf.getvalue()


def _run_block(start: ChainState, T: int, size: int, mode: str, p: ModelParameters,
               seed_seq: np.random.SeedSequence, table: Optional[RowTable], keep_path: bool):
    rng = _generator(seed_seq)
    n = np.full(size, start.level, dtype=np.int64)
    k = np.full(size, start.phase, dtype=np.int64)
    trans, occ = Counter(), Counter()
    path = [(0, start.level, start.phase)] if keep_path else None
    a, g = (int(p.alpha), int(p.gamma)) if mode == "urn" else (0, 0)

    def tally_states(n, k):
        keys, counts = np.unique(np.stack([n, k], axis=1), axis=0, return_counts=True)
        for (x, y), c in zip(keys, counts):
            occ[(int(x), int(y))] += int(c)

    tally_states(n, k)
    for t in range(1, T + 1):
        if mode == "urn":
            n2, k2 = _urn_step_vec(n, k, a, g, rng)
        else:
            n2, k2 = table.step(n, k, rng)
        keys, counts = np.unique(np.stack([n, k, n2, k2], axis=1), axis=0, return_counts=True)
        for (x, y, x2, y2), c in zip(keys, counts):
            trans[((int(x), int(y)), (int(x2), int(y2)))] += int(c)
        n, k = n2, k2
        tally_states(n, k)
        if keep_path:
            path.append((t, int(n[0]), int(k[0])))
    return trans, occ, path


def run_replications(start: ChainState, steps: int, replications: int, mode: str,
                     p: ModelParameters, seed: int, threads: int = 1) -> ReplicationResult:
    """R independent trajectories of length T; counts are exact integers.

    Replications are grouped in fixed blocks of 4096, and block b draws from
    the b-th child of SeedSequence(seed), so the output does not depend on the
    number of threads.
    """
    if mode not in ("chain", "urn"):
        raise DomainError(f"unknown mode {mode!r}")
    if steps < 0 or replications < 1:
        raise DomainError("need steps >= 0 and replications >= 1")
    table = None
    if mode == "urn":
        _check_urn_params(p)
    else:
        table = RowTable(p)
        table.ensure(start.level + steps + 1)
    nblocks = -(-replications // BLOCK)
    children = np.random.SeedSequence(seed).spawn(nblocks)
    sizes = [min(BLOCK, replications - b * BLOCK) for b in range(nblocks)]
    jobs = [(start, steps, sizes[b], mode, p, children[b], table, b == 0) for b in range(nblocks)]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            results = list(ex.map(lambda j: _run_block(*j), jobs))
    else:
        results = [_run_block(*j) for j in jobs]
    trans, occ = Counter(), Counter()
    for tr, oc, _ in results:
        trans.update(tr)
        occ.update(oc)
    traj = results[0][2]
    return ReplicationResult(trans, occ, traj, replications, steps)
