# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels. Semantics mirror ``_pykernels`` draw for draw."""
import numpy as np
cimport numpy as cnp
from libc.math cimport floor

from .errors import InfeasibleVisitError

cnp.import_array()

BACKEND = "cython"
ME_UNIFORMS = 8
EA_UNIFORMS = 13
EMPTY_BEST = -1
MAX_DENSE_CELLS = 1 << 26

ctypedef long long i64
ctypedef int i32
ctypedef signed char i8


cdef inline Py_ssize_t _pick(double u, Py_ssize_t k) noexcept nogil:
    cdef Py_ssize_t i = <Py_ssize_t>(u * k)
    return k - 1 if i >= k else i


cdef inline void _section(double u, Py_ssize_t n, Py_ssize_t* i, Py_ssize_t* j) noexcept nogil:
    cdef Py_ssize_t k = _pick(u, n * (n + 1) // 2)
    cdef Py_ssize_t a = 0
    while k >= n - a:
        k -= n - a
        a += 1
    i[0] = a
    j[0] = a + k


cdef inline void _move(i32* t, i8* m, Py_ssize_t src, Py_ssize_t dst) noexcept nogil:
    cdef i32 v = t[src]
    cdef i8 g = m[src]
    cdef Py_ssize_t p
    if src < dst:
        for p in range(src, dst):
            t[p] = t[p + 1]
            m[p] = m[p + 1]
    else:
        p = src
        while p > dst:
            t[p] = t[p - 1]
            m[p] = m[p - 1]
            p -= 1
    t[dst] = v
    m[dst] = g


cdef inline void _mutate(i32* t, i8* m, Py_ssize_t n, double u_src, double u_dst, double u_flip,
                         double u_pos, double flip_prob) noexcept nogil:
    cdef Py_ssize_t src, d, p
    if n >= 2:
        src = _pick(u_src, n)
        d = _pick(u_dst, n - 1)
        if d >= src:
            d += 1
        _move(t, m, src, d)
    if u_flip < flip_prob:
        p = _pick(u_pos, n)
        m[p] = 1 - m[p]


cdef inline void _ox(const i32* t1, const i8* m1, const i32* t2, const i8* m2, Py_ssize_t n,
                     Py_ssize_t i, Py_ssize_t j, i32* ct, i8* cm, i8* kept) noexcept nogil:
    cdef Py_ssize_t p, q = 0
    for p in range(n):
        kept[p] = 0
    for p in range(i, j + 1):
        kept[t1[p]] = 1
    for p in range(n):
        if i <= p <= j:
            ct[p] = t1[p]
            cm[p] = m1[p]
        else:
            while kept[t2[q]]:
                q += 1
            ct[p] = t2[q]
            cm[p] = m2[q]
            q += 1


cdef class Problem:
    cdef const i64[:, :, ::1] dist
    cdef const i32[:, :, ::1] ttime
    cdef const i32[::1] loc, dur, ws, we
    cdef i32 depot, day_start
    cdef double ce, pe, sr, cc, pc
    cdef readonly object arr
    cdef Py_ssize_t L

    def __init__(self, arr):
        self.arr = arr
        self.dist = np.ascontiguousarray(arr.dist, dtype=np.int64)
        self.ttime = np.ascontiguousarray(arr.ttime, dtype=np.int32)
        self.loc = np.ascontiguousarray(arr.loc, dtype=np.int32)
        self.dur = np.ascontiguousarray(arr.dur, dtype=np.int32)
        self.ws = np.ascontiguousarray(arr.wstart, dtype=np.int32)
        self.we = np.ascontiguousarray(arr.wend, dtype=np.int32)
        self.depot = arr.depot
        self.day_start = arr.day_start
        self.ce, self.pe, self.sr, self.cc, self.pc = arr.cost
        self.L = self.dist.shape[1]

    cdef i64 totals(self, const i32* tour, const i8* modes, Py_ssize_t n, i64* out) noexcept nogil:
        """Fill out[0..5]; return -1, or the id of a visit that cannot open a journey."""
        cdef i64 car_m = 0, pt_m = 0, elapsed = 0, n_j = 0, n_car = 0, fallbacks = 0
        cdef i64 metres = 0, depart = 0, leave = 0, start, a, tt
        cdef int mode = -1, gene, m, attempt
        cdef i32 prev = self.depot, lv, v
        cdef i32 depot = self.depot
        cdef Py_ssize_t pos
        cdef bint ok
        for pos in range(n):
            v = tour[pos]
            lv = self.loc[v]
            if mode >= 0:
                a = leave + self.ttime[mode, prev, lv]
                start = a if a > self.ws[v] else self.ws[v]
                if start <= self.we[v]:
                    metres += self.dist[mode, prev, lv]
                    leave = start + self.dur[v]
                    prev = lv
                    continue
                metres += self.dist[mode, prev, depot]
                elapsed += leave + self.ttime[mode, prev, depot] - depart
                n_j += 1
                if mode == 0:
                    car_m += metres
                    n_car += 1
                else:
                    pt_m += metres
            gene = modes[pos]
            ok = False
            for attempt in range(2):
                m = gene if attempt == 0 else 1 - gene
                tt = self.ttime[m, depot, lv]
                depart = self.ws[v] - tt
                if depart < self.day_start:
                    depart = self.day_start
                start = depart + tt
                if start < self.ws[v]:
                    start = self.ws[v]
                if start <= self.we[v]:
                    ok = True
                    break
            if not ok:
                return v
            if m != gene:
                fallbacks += 1
            mode = m
            metres = self.dist[m, depot, lv]
            leave = start + self.dur[v]
            prev = lv
        if mode >= 0:
            metres += self.dist[mode, prev, depot]
            elapsed += leave + self.ttime[mode, prev, depot] - depart
            n_j += 1
            if mode == 0:
                car_m += metres
                n_car += 1
            else:
                pt_m += metres
        out[0] = car_m
        out[1] = pt_m
        out[2] = elapsed
        out[3] = n_j
        out[4] = n_car
        out[5] = fallbacks
        return -1

    cdef inline void chars(self, const i64* t, double* c) noexcept nogil:
        c[0] = (<double>t[0] * self.ce + <double>t[1] * self.pe) / 1000.0
        c[1] = (<double>t[2] / 60.0) * self.sr
        c[2] = (<double>t[0] * self.cc + <double>t[1] * self.pc) / 1000.0
        c[3] = <double>t[4] / <double>t[3]


cdef dict _problems = {}


cdef Problem _problem(object arr):
    cdef object key = id(arr)
    hit = _problems.get(key)
    if hit is not None and hit[0] is arr:
        return hit[1]
    p = Problem(arr)
    if len(_problems) >= 64:
        _problems.clear()
    _problems[key] = (arr, p)
    return p


def pick(double u, Py_ssize_t k):
    return _pick(u, k)


def section(double u, Py_ssize_t n):
    cdef Py_ssize_t i, j
    _section(u, n, &i, &j)
    return i, j


def decode_totals(arr, tour, modes):
    """``(car_m, pt_m, elapsed_min, n_journeys, n_car, n_fallbacks)`` for one genotype."""
    cdef Problem p = _problem(arr)
    cdef const i32[::1] t = np.ascontiguousarray(tour, dtype=np.int32)
    cdef const i8[::1] m = np.ascontiguousarray(modes, dtype=np.int8)
    cdef i64 out[6]
    cdef i64 bad
    if t.shape[0] == 0:
        return (0, 0, 0, 0, 0, 0)
    bad = p.totals(&t[0], &m[0], t.shape[0], out)
    if bad >= 0:
        raise InfeasibleVisitError(int(bad))
    return (out[0], out[1], out[2], out[3], out[4], out[5])


def bin_index(double x, double lo, double hi, int bins):
    cdef i64 b = <i64>floor(((x - lo) / (hi - lo)) * bins)
    return 0 if b < 0 else (bins - 1 if b > bins - 1 else b)


def evaluate_batch(arr, const i32[:, ::1] tours, const i8[:, ::1] modes, i64[::1] fits_out, double[:, ::1] chars_out):
    cdef Problem p = _problem(arr)
    cdef Py_ssize_t k, n = tours.shape[1]
    cdef i64 t[6]
    cdef i64 bad
    for k in range(tours.shape[0]):
        bad = p.totals(&tours[k, 0], &modes[k, 0], n, t)
        if bad >= 0:
            raise InfeasibleVisitError(int(bad))
        fits_out[k] = t[0] + t[1]
        p.chars(t, &chars_out[k, 0])


def mutate(i32[::1] tour, i8[::1] modes, double u_src, double u_dst, double u_flip, double u_pos, double flip_prob):
    _mutate(&tour[0], &modes[0], tour.shape[0], u_src, u_dst, u_flip, u_pos, flip_prob)


def order_crossover(const i32[::1] t1, const i8[::1] m1, const i32[::1] t2, const i8[::1] m2, Py_ssize_t i, Py_ssize_t j):
    cdef Py_ssize_t n = t1.shape[0]
    ct = np.empty(n, dtype=np.int32)
    cm = np.empty(n, dtype=np.int8)
    kept = np.empty(n, dtype=np.int8)
    cdef i32[::1] ctv = ct
    cdef i8[::1] cmv = cm
    cdef i8[::1] kv = kept
    _ox(&t1[0], &m1[0], &t2[0], &m2[0], n, i, j, &ctv[0], &cmv[0], &kv[0])
    return ct, cm


cdef class ArchiveCore:
    """Dense-keyed elite store driving the MAP-Elites inner loop."""
    cdef Problem p
    cdef readonly Py_ssize_t n, bins, n_filled, capacity
    cdef readonly i64 best
    cdef double lo[4]
    cdef double span[4]
    cdef double hi[4]
    cdef i32[::1] slot_of
    cdef object _tours, _modes, _fits, _cells, _chars
    cdef i32[:, ::1] tours
    cdef i8[:, ::1] modes
    cdef i64[::1] fits
    cdef i64[::1] cells
    cdef double[:, ::1] chars_
    cdef i32[::1] wt
    cdef i8[::1] wm
    cdef i8[::1] kept

    def __init__(self, arr, lo, hi, int bins, Py_ssize_t capacity=1024):
        cdef int d
        cdef i64 ncells = <i64>bins * bins * bins * bins
        if ncells > MAX_DENSE_CELLS:
            raise ValueError(f"{bins}^4 cells exceeds the dense archive limit")
        self.p = _problem(arr)
        self.n = len(arr.loc)
        self.bins = bins
        for d in range(4):
            self.lo[d] = float(lo[d])
            self.hi[d] = float(hi[d])
        self.slot_of = np.full(ncells, -1, dtype=np.int32)
        self.n_filled = 0
        self.best = EMPTY_BEST
        self.capacity = 0
        self._alloc(max(capacity, 16))
        self.wt = np.empty(self.n, dtype=np.int32)
        self.wm = np.empty(self.n, dtype=np.int8)
        self.kept = np.empty(self.n, dtype=np.int8)

    cdef _alloc(self, Py_ssize_t cap):
        nt = np.zeros((cap, self.n), dtype=np.int32)
        nm = np.zeros((cap, self.n), dtype=np.int8)
        nf = np.zeros(cap, dtype=np.int64)
        nc = np.zeros(cap, dtype=np.int64)
        nch = np.zeros((cap, 4), dtype=np.float64)
        if self.capacity:
            k = self.n_filled
            nt[:k] = self._tours[:k]
            nm[:k] = self._modes[:k]
            nf[:k] = self._fits[:k]
            nc[:k] = self._cells[:k]
            nch[:k] = self._chars[:k]
        self._tours, self._modes, self._fits, self._cells, self._chars = nt, nm, nf, nc, nch
        self.tours, self.modes, self.fits, self.cells, self.chars_ = nt, nm, nf, nc, nch
        self.capacity = cap

    def ensure_capacity(self, Py_ssize_t extra):
        cdef Py_ssize_t need = self.n_filled + extra
        cdef Py_ssize_t cap = self.capacity
        if need > cap:
            while cap < need:
                cap *= 2
            self._alloc(min(cap, max(need, self.slot_of.shape[0])))

    cdef i64 _cell(self, const double* c) noexcept nogil:
        cdef i64 cell = 0, b
        cdef int d
        for d in range(4):
            b = <i64>floor(((c[d] - self.lo[d]) / (self.hi[d] - self.lo[d])) * self.bins)
            if b < 0:
                b = 0
            elif b > self.bins - 1:
                b = self.bins - 1
            cell = cell * self.bins + b
        return cell

    cdef i64 _insert(self, const i32* t, const i8* m, i64 it, i64[::1] ev_iter, i64[::1] ev_cell,
                     i64[::1] ev_fit, i64 n_ev) except -2:
        cdef i64 tot[6]
        cdef double c[4]
        cdef i64 bad = self.p.totals(t, m, self.n, tot)
        cdef i64 fit, cell
        cdef i32 s
        cdef Py_ssize_t q
        if bad >= 0:
            raise InfeasibleVisitError(int(bad))
        fit = tot[0] + tot[1]
        self.p.chars(tot, c)
        cell = self._cell(c)
        if self.best == EMPTY_BEST or fit < self.best:
            self.best = fit
        s = self.slot_of[cell]
        if s < 0:
            s = <i32>self.n_filled
            self.slot_of[cell] = s
            self.cells[s] = cell
            self.n_filled += 1
        elif not fit < self.fits[s]:
            return n_ev
        for q in range(self.n):
            self.tours[s, q] = t[q]
            self.modes[s, q] = m[q]
        self.fits[s] = fit
        for q in range(4):
            self.chars_[s, q] = c[q]
        ev_iter[n_ev] = it
        ev_cell[n_ev] = cell
        ev_fit[n_ev] = fit
        return n_ev + 1

    def insert_batch(self, const i32[:, ::1] tours, const i8[:, ::1] modes, i64 eval_offset, i64[::1] trace,
                     i64[::1] ev_iter, i64[::1] ev_cell, i64[::1] ev_fit):
        cdef Py_ssize_t k
        cdef i64 n_ev = 0
        if self.n_filled + tours.shape[0] > self.capacity:
            self.ensure_capacity(tours.shape[0])
        for k in range(tours.shape[0]):
            n_ev = self._insert(&tours[k, 0], &modes[k, 0], eval_offset + k, ev_iter, ev_cell, ev_fit, n_ev)
            trace[k] = self.best
        return n_ev

    def vary_batch(self, const double[:, ::1] u, double cx_prob, double flip_prob, i64 eval_offset, i64[::1] trace,
                   i64[::1] ev_iter, i64[::1] ev_cell, i64[::1] ev_fit):
        cdef Py_ssize_t k, a, b, i, j, q, n = self.n, nf
        cdef i64 n_ev = 0
        cdef i32* wt = &self.wt[0]
        cdef i8* wm = &self.wm[0]
        if self.n_filled + u.shape[0] > self.capacity:
            self.ensure_capacity(u.shape[0])
        for k in range(u.shape[0]):
            nf = self.n_filled
            a = _pick(u[k, 0], nf)
            if nf >= 2 and u[k, 1] < cx_prob:
                b = _pick(u[k, 2], nf)
                _section(u[k, 3], n, &i, &j)
                _ox(&self.tours[a, 0], &self.modes[a, 0], &self.tours[b, 0], &self.modes[b, 0], n, i, j,
                    wt, wm, &self.kept[0])
            else:
                for q in range(n):
                    wt[q] = self.tours[a, q]
                    wm[q] = self.modes[a, q]
            _mutate(wt, wm, n, u[k, 4], u[k, 5], u[k, 6], u[k, 7], flip_prob)
            n_ev = self._insert(wt, wm, eval_offset + k, ev_iter, ev_cell, ev_fit, n_ev)
            trace[k] = self.best
        return n_ev

    def export(self):
        k = self.n_filled
        return (
            np.array(self._tours[:k]),
            np.array(self._modes[:k]),
            np.array(self._fits[:k]),
            np.array(self._cells[:k]),
            np.array(self._chars[:k]),
        )


cdef class EaCore:
    """Steady-state population with tournament selection and replace-the-loser."""
    cdef Problem p
    cdef readonly Py_ssize_t n, size
    cdef readonly i64 best
    cdef object _tours, _modes, _fits
    cdef i32[:, ::1] tours
    cdef i8[:, ::1] modes
    cdef i64[::1] fits
    cdef i8[::1] kept

    def __init__(self, arr, tours, modes):
        self.p = _problem(arr)
        self._tours = np.array(tours, dtype=np.int32, order="C")
        self._modes = np.array(modes, dtype=np.int8, order="C")
        self._fits = np.zeros(self._tours.shape[0], dtype=np.int64)
        self.tours, self.modes, self.fits = self._tours, self._modes, self._fits
        self.size = self._tours.shape[0]
        self.n = self._tours.shape[1]
        self.best = EMPTY_BEST
        self.kept = np.empty(self.n, dtype=np.int8)

    def evaluate_initial(self, i64[::1] trace):
        cdef Py_ssize_t k
        cdef i64 tot[6]
        cdef i64 bad, f
        for k in range(self.size):
            bad = self.p.totals(&self.tours[k, 0], &self.modes[k, 0], self.n, tot)
            if bad >= 0:
                raise InfeasibleVisitError(int(bad))
            f = tot[0] + tot[1]
            self.fits[k] = f
            if self.best == EMPTY_BEST or f < self.best:
                self.best = f
            trace[k] = self.best

    cdef inline void _tournament(self, double ua, double ub, Py_ssize_t* win, Py_ssize_t* lose) noexcept nogil:
        cdef Py_ssize_t a = _pick(ua, self.size)
        cdef Py_ssize_t b = _pick(ub, self.size - 1)
        if b >= a:
            b += 1
        if self.fits[b] < self.fits[a]:
            win[0] = b
            lose[0] = a
        else:
            win[0] = a
            lose[0] = b

    def generation(self, const double[:, ::1] u, double cx_prob, double mut_rate, double flip_prob, i64[::1] trace,
                   i32[:, ::1] child_tours, i8[:, ::1] child_modes, i64[::1] child_fits, double[:, ::1] child_chars):
        cdef Py_ssize_t k, q, p1, p2, w, lose, i, j, n = self.n
        cdef i64 tot[6]
        cdef i64 bad, f
        cdef int replaced = 0
        for k in range(u.shape[0]):
            self._tournament(u[k, 1], u[k, 2], &p1, &w)
            if u[k, 0] < cx_prob:
                self._tournament(u[k, 3], u[k, 4], &p2, &w)
                _section(u[k, 5], n, &i, &j)
                _ox(&self.tours[p1, 0], &self.modes[p1, 0], &self.tours[p2, 0], &self.modes[p2, 0], n, i, j,
                    &child_tours[k, 0], &child_modes[k, 0], &self.kept[0])
            else:
                for q in range(n):
                    child_tours[k, q] = self.tours[p1, q]
                    child_modes[k, q] = self.modes[p1, q]
            if u[k, 6] < mut_rate:
                _mutate(&child_tours[k, 0], &child_modes[k, 0], n, u[k, 7], u[k, 8], u[k, 9], u[k, 10], flip_prob)
            bad = self.p.totals(&child_tours[k, 0], &child_modes[k, 0], n, tot)
            if bad >= 0:
                raise InfeasibleVisitError(int(bad))
            f = tot[0] + tot[1]
            if f < self.best:
                self.best = f
            trace[k] = self.best
            child_fits[k] = f
            self.p.chars(tot, &child_chars[k, 0])
        for k in range(u.shape[0]):
            self._tournament(u[k, 11], u[k, 12], &w, &lose)
            if child_fits[k] < self.fits[lose]:
                for q in range(n):
                    self.tours[lose, q] = child_tours[k, q]
                    self.modes[lose, q] = child_modes[k, q]
                self.fits[lose] = child_fits[k]
                replaced += 1
        return replaced

    def export(self):
        return np.array(self._tours), np.array(self._modes), np.array(self._fits)
