"""Pure-Python kernels. Reference semantics for ``_ckernels.pyx``.

Every random decision is taken from caller-supplied uniforms in [0, 1), so
both backends consume identical draws and produce bit-identical runs.
Fitness values are integer metres throughout.
"""
from __future__ import annotations

import math

import numpy as np

from .errors import InfeasibleVisitError

BACKEND = "python"

# per-iteration uniforms consumed by ArchiveCore.vary_batch / EaCore.generation
ME_UNIFORMS = 8
EA_UNIFORMS = 13
EMPTY_BEST = -1


def pick(u: float, k: int) -> int:
    i = int(u * k)
    return k - 1 if i >= k else i


def section(u: float, n: int) -> tuple[int, int]:
    """Map one uniform onto a pair ``i <= j``, uniform over all n(n+1)/2 pairs."""
    k = pick(u, n * (n + 1) // 2)
    i = 0
    while k >= n - i:
        k -= n - i
        i += 1
    return i, i + k


def move_entry(tour: list, modes: list, src: int, dst: int) -> None:
    """Remove position ``src`` and reinsert it so it ends at index ``dst``."""
    v = tour.pop(src)
    m = modes.pop(src)
    tour.insert(dst, v)
    modes.insert(dst, m)


def mutate(tour: list, modes: list, u_src: float, u_dst: float, u_flip: float, u_pos: float, flip_prob: float) -> None:
    n = len(tour)
    if n >= 2:
        src = pick(u_src, n)
        d = pick(u_dst, n - 1)
        move_entry(tour, modes, src, d + (d >= src))
    if u_flip < flip_prob:
        p = pick(u_pos, n)
        modes[p] = 1 - modes[p]


def order_crossover(t1, m1, t2, m2, i: int, j: int) -> tuple[list, list]:
    """Keep ``t1[i..j]`` in place; fill the rest left to right in parent-2 order.

    Mode genes follow the visit from whichever parent contributed it.
    """
    n = len(t1)
    kept = set(t1[i : j + 1])
    fill_t = [v for v in t2 if v not in kept]
    fill_m = [m for v, m in zip(t2, m2) if v not in kept]
    ct = fill_t[:i] + list(t1[i : j + 1]) + fill_t[i:]
    cm = fill_m[:i] + list(m1[i : j + 1]) + fill_m[i:]
    assert len(ct) == n
    return ct, cm


class _Problem:
    __slots__ = ("dist", "ttime", "loc", "dur", "ws", "we", "depot", "day_start", "cost")

    def __init__(self, arr):
        self.dist = arr.dist.tolist()
        self.ttime = arr.ttime.tolist()
        self.loc = arr.loc.tolist()
        self.dur = arr.dur.tolist()
        self.ws = arr.wstart.tolist()
        self.we = arr.wend.tolist()
        self.depot = arr.depot
        self.day_start = arr.day_start
        self.cost = tuple(arr.cost)


_cache: dict[int, tuple] = {}


def _problem(arr) -> _Problem:
    key = id(arr)
    hit = _cache.get(key)
    if hit is not None and hit[0] is arr:
        return hit[1]
    p = _Problem(arr)
    if len(_cache) >= 64:
        _cache.clear()
    _cache[key] = (arr, p)
    return p


def _totals(p: _Problem, tour, modes) -> tuple[int, int, int, int, int, int]:
    dist, ttime, loc, dur, ws, we = p.dist, p.ttime, p.loc, p.dur, p.ws, p.we
    depot, day_start = p.depot, p.day_start
    car_m = pt_m = elapsed = n_j = n_car = fallbacks = 0
    mode = -1
    prev = depot
    depart = 0
    leave = 0
    metres = 0
    for pos, v in enumerate(tour):
        lv = loc[v]
        if mode >= 0:
            a = leave + ttime[mode][prev][lv]
            start = a if a > ws[v] else ws[v]
            if start <= we[v]:
                metres += dist[mode][prev][lv]
                leave = start + dur[v]
                prev = lv
                continue
            metres += dist[mode][prev][depot]
            ret = leave + ttime[mode][prev][depot]
            elapsed += ret - depart
            n_j += 1
            if mode == 0:
                car_m += metres
                n_car += 1
            else:
                pt_m += metres
        gene = modes[pos]
        for m in (gene, 1 - gene):
            tt = ttime[m][depot][lv]
            depart = ws[v] - tt
            if depart < day_start:
                depart = day_start
            start = depart + tt
            if start < ws[v]:
                start = ws[v]
            if start <= we[v]:
                break
        else:
            raise InfeasibleVisitError(int(v))
        if m != gene:
            fallbacks += 1
        mode = m
        metres = dist[m][depot][lv]
        leave = start + dur[v]
        prev = lv
    if mode >= 0:
        metres += dist[mode][prev][depot]
        elapsed += leave + ttime[mode][prev][depot] - depart
        n_j += 1
        if mode == 0:
            car_m += metres
            n_car += 1
        else:
            pt_m += metres
    return car_m, pt_m, elapsed, n_j, n_car, fallbacks


def decode_totals(arr, tour, modes) -> tuple[int, int, int, int, int, int]:
    """``(car_m, pt_m, elapsed_min, n_journeys, n_car, n_fallbacks)`` for one genotype."""
    return _totals(_problem(arr), [int(v) for v in tour], [int(m) for m in modes])


def _chars(cost, car_m, pt_m, elapsed, n_j, n_car):
    ce, pe, sr, cc, pc = cost
    return (
        (car_m * ce + pt_m * pe) / 1000.0,
        (elapsed / 60.0) * sr,
        (car_m * cc + pt_m * pc) / 1000.0,
        n_car / n_j,
    )


def _cell(chars, lo, hi, bins) -> int:
    cell = 0
    for d in range(4):
        b = math.floor(((chars[d] - lo[d]) / (hi[d] - lo[d])) * bins)
        if b < 0:
            b = 0
        elif b > bins - 1:
            b = bins - 1
        cell = cell * bins + b
    return cell


def bin_index(x: float, lo: float, hi: float, bins: int) -> int:
    b = math.floor(((x - lo) / (hi - lo)) * bins)
    return 0 if b < 0 else (bins - 1 if b > bins - 1 else b)


def evaluate_batch(arr, tours, modes, fits_out, chars_out) -> None:
    """Decode+evaluate each row; fill ``fits_out[k]`` (metres) and ``chars_out[k, :4]``."""
    p = _problem(arr)
    for k in range(tours.shape[0]):
        car_m, pt_m, el, nj, nc, _ = _totals(p, tours[k].tolist(), modes[k].tolist())
        fits_out[k] = car_m + pt_m
        chars_out[k] = _chars(p.cost, car_m, pt_m, el, nj, nc)


class ArchiveCore:
    """Dense-keyed elite store driving the MAP-Elites inner loop."""

    def __init__(self, arr, lo, hi, bins: int, capacity: int = 0):
        self.arr = arr
        self.p = _problem(arr)
        self.n = len(arr.loc)
        self.lo = [float(x) for x in lo]
        self.hi = [float(x) for x in hi]
        self.bins = int(bins)
        self.slot_of: dict[int, int] = {}
        self.tours: list[list[int]] = []
        self.modes: list[list[int]] = []
        self.fits: list[int] = []
        self.cells: list[int] = []
        self.chars: list[tuple] = []
        self.best = EMPTY_BEST

    @property
    def n_filled(self) -> int:
        return len(self.fits)

    def ensure_capacity(self, extra: int) -> None:
        pass

    def _insert(self, t, m, it, ev_iter, ev_cell, ev_fit, n_ev) -> int:
        car_m, pt_m, el, nj, nc, _ = _totals(self.p, t, m)
        fit = car_m + pt_m
        ch = _chars(self.p.cost, car_m, pt_m, el, nj, nc)
        cell = _cell(ch, self.lo, self.hi, self.bins)
        if self.best == EMPTY_BEST or fit < self.best:
            self.best = fit
        s = self.slot_of.get(cell)
        if s is None:
            self.slot_of[cell] = len(self.fits)
            self.tours.append(t)
            self.modes.append(m)
            self.fits.append(fit)
            self.cells.append(cell)
            self.chars.append(ch)
        elif fit < self.fits[s]:
            self.tours[s] = t
            self.modes[s] = m
            self.fits[s] = fit
            self.chars[s] = ch
        else:
            return n_ev
        ev_iter[n_ev] = it
        ev_cell[n_ev] = cell
        ev_fit[n_ev] = fit
        return n_ev + 1

    def insert_batch(self, tours, modes, eval_offset: int, trace, ev_iter, ev_cell, ev_fit) -> int:
        n_ev = 0
        for k in range(tours.shape[0]):
            n_ev = self._insert(tours[k].tolist(), modes[k].tolist(), eval_offset + k, ev_iter, ev_cell, ev_fit, n_ev)
            trace[k] = self.best
        return n_ev

    def vary_batch(self, uniforms, cx_prob: float, flip_prob: float, eval_offset: int, trace, ev_iter, ev_cell, ev_fit) -> int:
        n = self.n
        n_ev = 0
        for k in range(uniforms.shape[0]):
            u = uniforms[k].tolist()
            nf = len(self.fits)
            a = pick(u[0], nf)
            if nf >= 2 and u[1] < cx_prob:
                b = pick(u[2], nf)
                i, j = section(u[3], n)
                t, m = order_crossover(self.tours[a], self.modes[a], self.tours[b], self.modes[b], i, j)
            else:
                t, m = list(self.tours[a]), list(self.modes[a])
            mutate(t, m, u[4], u[5], u[6], u[7], flip_prob)
            n_ev = self._insert(t, m, eval_offset + k, ev_iter, ev_cell, ev_fit, n_ev)
            trace[k] = self.best
        return n_ev

    def export(self):
        nf = len(self.fits)
        return (
            np.array(self.tours, dtype=np.int32).reshape(nf, self.n),
            np.array(self.modes, dtype=np.int8).reshape(nf, self.n),
            np.array(self.fits, dtype=np.int64),
            np.array(self.cells, dtype=np.int64),
            np.array(self.chars, dtype=np.float64).reshape(nf, 4),
        )


class EaCore:
    """Steady-state population with tournament selection and replace-the-loser."""

    def __init__(self, arr, tours, modes):
        self.p = _problem(arr)
        self.n = tours.shape[1]
        self.tours = [r.tolist() for r in tours]
        self.modes = [r.tolist() for r in modes]
        self.fits = []
        self.best = EMPTY_BEST

    @property
    def size(self) -> int:
        return len(self.tours)

    def evaluate_initial(self, trace) -> None:
        for k in range(len(self.tours)):
            car_m, pt_m, *_ = _totals(self.p, self.tours[k], self.modes[k])
            f = car_m + pt_m
            self.fits.append(f)
            if self.best == EMPTY_BEST or f < self.best:
                self.best = f
            trace[k] = self.best

    def _tournament(self, ua: float, ub: float) -> tuple[int, int]:
        """Return ``(winner, loser)`` of a distinct-pair tournament; ties favour the first pick."""
        size = len(self.fits)
        a = pick(ua, size)
        b = pick(ub, size - 1)
        if b >= a:
            b += 1
        if self.fits[b] < self.fits[a]:
            return b, a
        return a, b

    def generation(self, uniforms, cx_prob, mut_rate, flip_prob, trace, child_tours, child_modes, child_fits, child_chars) -> int:
        """Breed ``len(uniforms)`` children from the current population, then replace.

        Returns the number of replacements made.
        """
        n = self.n
        kids = []
        for k in range(uniforms.shape[0]):
            u = uniforms[k].tolist()
            p1, _ = self._tournament(u[1], u[2])
            if u[0] < cx_prob:
                p2, _ = self._tournament(u[3], u[4])
                i, j = section(u[5], n)
                t, m = order_crossover(self.tours[p1], self.modes[p1], self.tours[p2], self.modes[p2], i, j)
            else:
                t, m = list(self.tours[p1]), list(self.modes[p1])
            if u[6] < mut_rate:
                mutate(t, m, u[7], u[8], u[9], u[10], flip_prob)
            car_m, pt_m, el, nj, nc, _ = _totals(self.p, t, m)
            f = car_m + pt_m
            if f < self.best:
                self.best = f
            trace[k] = self.best
            child_tours[k] = t
            child_modes[k] = m
            child_fits[k] = f
            child_chars[k] = _chars(self.p.cost, car_m, pt_m, el, nj, nc)
            kids.append((t, m, f))
        replaced = 0
        for k, (t, m, f) in enumerate(kids):
            u = uniforms[k]
            _, loser = self._tournament(float(u[11]), float(u[12]))
            if f < self.fits[loser]:
                self.tours[loser] = t
                self.modes[loser] = m
                self.fits[loser] = f
                replaced += 1
        return replaced

    def export(self):
        return (
            np.array(self.tours, dtype=np.int32),
            np.array(self.modes, dtype=np.int8),
            np.array(self.fits, dtype=np.int64),
        )
