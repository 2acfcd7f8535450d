"""Instrumented desk-scale versions of the Stanford integer/float benchmarks.

Each kernel runs its algorithm on seeded input and reports every conditional
branch through a recorder. Static branch sites get synthetic addresses laid
out from a per-kernel base with a stride of 4 bytes.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Callable

from csafsim.errors import ConfigError
from csafsim.trace import Branch


class Recorder:
    def __init__(self, base: int, sites: tuple[str, ...]):
        self.pcs = {name: base + 4 * i for i, name in enumerate(sites)}
        self.events: list[Branch] = []

    def __call__(self, site: str, cond) -> bool:
        cond = bool(cond)
        self.events.append(Branch(self.pcs[site], cond))
        return cond


def bubblesort(br: Recorder, a: list[int]) -> list[int]:
    top = len(a) - 1
    while br("outer", top > 0):
        i = 0
        while br("inner", i < top):
            if br("swap", a[i] > a[i + 1]):
                a[i], a[i + 1] = a[i + 1], a[i]
            i += 1
        top -= 1
    return a


def quicksort(br: Recorder, a: list[int]) -> list[int]:
    def sort(lo, hi):
        i, j = lo, hi
        x = a[(lo + hi) // 2]
        while True:
            while br("scan_lo", a[i] < x):
                i += 1
            while br("scan_hi", x < a[j]):
                j -= 1
            if br("exchange", i <= j):
                a[i], a[j] = a[j], a[i]
                i += 1
                j -= 1
            if not br("partition", i <= j):
                break
        if br("recurse_lo", lo < j):
            sort(lo, j)
        if br("recurse_hi", i < hi):
            sort(i, hi)

    if a:
        sort(0, len(a) - 1)
    return a


def treesort(br: Recorder, values: list[int]) -> list[int]:
    """Insert into an unbalanced BST, then walk it in order checking the ordering."""
    if not values:
        return []
    val = [values[0]]
    left = [-1]
    right = [-1]
    for v in values[1:]:
        node = 0
        while True:
            if br("go_left", v < val[node]):
                if br("left_free", left[node] < 0):
                    left[node] = len(val)
                    break
                node = left[node]
            else:
                if br("right_free", right[node] < 0):
                    right[node] = len(val)
                    break
                node = right[node]
        val.append(v)
        left.append(-1)
        right.append(-1)

    out: list[int] = []
    stack: list[int] = []
    node = 0
    while br("walk", stack or node >= 0):
        if br("descend", node >= 0):
            stack.append(node)
            node = left[node]
        else:
            node = stack.pop()
            if br("misordered", out and val[node] < out[-1]):
                raise AssertionError("tree out of order")
            out.append(val[node])
            node = right[node]
    return out


def towers(br: Recorder, disks: int) -> int:
    pegs: list[list[int]] = [[], list(range(disks, 0, -1)), [], []]
    moves = 0

    def move(src, dst):
        nonlocal moves
        if br("pop_empty", not pegs[src]):
            raise AssertionError("move from empty peg")
        d = pegs[src].pop()
        if br("push_bad", pegs[dst] and pegs[dst][-1] < d):
            raise AssertionError("disk placed on smaller disk")
        pegs[dst].append(d)
        moves += 1

    def tower(i, j, k):
        if br("single", k == 1):
            move(i, j)
        else:
            other = 6 - i - j
            tower(i, other, k - 1)
            move(i, j)
            tower(other, j, k - 1)

    if disks:
        tower(1, 3, disks)
    return moves


def queens(br: Recorder, n: int) -> int:
    """Count every placement of n non-attacking queens."""
    col_free = [True] * n
    up_free = [True] * (2 * n)
    down_free = [True] * (2 * n)
    solutions = 0

    def place(row):
        nonlocal solutions
        c = 0
        while br("column", c < n):
            if br("safe", col_free[c] and up_free[row + c] and down_free[row - c + n]):
                if br("last_row", row == n - 1):
                    solutions += 1
                else:
                    col_free[c] = up_free[row + c] = down_free[row - c + n] = False
                    place(row + 1)
                    col_free[c] = up_free[row + c] = down_free[row - c + n] = True
            c += 1

    if n:
        place(0)
    return solutions


def perm(br: Recorder, n: int) -> int:
    """Heap-style recursive permutation generator; returns the number of calls."""
    a = list(range(n + 1))
    calls = 0

    def permute(m):
        nonlocal calls
        calls += 1
        if br("nontrivial", m != 1):
            permute(m - 1)
            k = m - 1
            while br("swap_loop", k >= 1):
                a[m], a[k] = a[k], a[m]
                permute(m - 1)
                a[m], a[k] = a[k], a[m]
                k -= 1

    if n:
        permute(n)
    return calls


def _matmul(br: Recorder, a, b):
    n = len(a)
    c = [[0] * n for _ in range(n)]
    i = 0
    while br("row", i < n):
        j = 0
        while br("col", j < n):
            s = 0
            k = 0
            while br("inner", k < n):
                s += a[i][k] * b[k][j]
                k += 1
            c[i][j] = s
            j += 1
        i += 1
    return c


def _fill_matrix(br: Recorder, n: int, make) -> list[list]:
    m = []
    i = 0
    while br("init_row", i < n):
        row = []
        j = 0
        while br("init_col", j < n):
            row.append(make())
            j += 1
        m.append(row)
        i += 1
    return m


def intmm(br: Recorder, n: int, rng: random.Random):
    a = _fill_matrix(br, n, lambda: rng.randrange(120) - 60)
    b = _fill_matrix(br, n, lambda: rng.randrange(120) - 60)
    return _matmul(br, a, b)


def realmm(br: Recorder, n: int, rng: random.Random):
    a = _fill_matrix(br, n, lambda: (rng.randrange(120) - 60) / 3.0)
    b = _fill_matrix(br, n, lambda: (rng.randrange(120) - 60) / 3.0)
    return _matmul(br, a, b)


def floatmm(br: Recorder, n: int, rng: random.Random):
    a = _fill_matrix(br, n, lambda: rng.uniform(-1.0, 1.0))
    b = _fill_matrix(br, n, lambda: rng.uniform(-1.0, 1.0))
    return _matmul(br, a, b)


def oscar(br: Recorder, n: int, rng: random.Random, passes: int = 4) -> list[complex]:
    """Radix-2 in-place FFT, applied forward then inverse ``passes`` times."""
    z = [complex(rng.uniform(-1, 1), rng.uniform(-1, 1)) for _ in range(n)]

    def fft(sign):
        j = 0
        i = 0
        while br("reverse", i < n - 1):
            if br("rev_swap", i < j):
                z[i], z[j] = z[j], z[i]
            k = n >> 1
            while br("carry", k <= j):
                j -= k
                k >>= 1
            j += k
            i += 1
        span = 1
        while br("stage", span < n):
            step = sign * math.pi / span
            m = 0
            while br("twiddle", m < span):
                w = complex(math.cos(step * m), math.sin(step * m))
                p = m
                while br("butterfly", p < n):
                    q = p + span
                    t = w * z[q]
                    z[q] = z[p] - t
                    z[p] = z[p] + t
                    p += 2 * span
                m += 1
            span <<= 1

    while br("pass", passes > 0):
        fft(-1)
        fft(1)
        inv = 1.0 / n
        for idx in range(n):
            z[idx] *= inv
        passes -= 1
    return z


def puzzle(br: Recorder, width: int) -> int:
    """Count domino tilings of a 4 x width board by first-empty-cell backtracking."""
    h = 4
    cells = h * width
    board = [False] * cells
    count = 0

    def fill(pos):
        nonlocal count
        while br("skip", pos < cells and board[pos]):
            pos += 1
        if br("done", pos == cells):
            count += 1
            return
        r, c = divmod(pos, width)
        if br("fit_across", c + 1 < width and not board[pos + 1]):
            board[pos] = board[pos + 1] = True
            fill(pos + 2)
            board[pos] = board[pos + 1] = False
        if br("fit_down", r + 1 < h):
            board[pos] = board[pos + width] = True
            fill(pos + 1)
            board[pos] = board[pos + width] = False

    if width:
        fill(0)
    return count


@dataclass(frozen=True)
class KernelInfo:
    sites: tuple[str, ...]
    default_size: int
    min_size: int
    max_size: int
    run: Callable[[Recorder, int, random.Random], object]


def _shuffled(n, rng):
    a = list(range(n))
    rng.shuffle(a)
    return a


_SORT_VALUES = lambda n, rng: [rng.randrange(1 << 16) for _ in range(n)]  # noqa: E731

KERNELS: dict[str, KernelInfo] = {
    "bubblesort": KernelInfo(
        ("outer", "inner", "swap"), 256, 1, 4096, lambda br, n, rng: bubblesort(br, _SORT_VALUES(n, rng))
    ),
    "floatmm": KernelInfo(
        ("init_row", "init_col", "row", "col", "inner"), 32, 1, 128, lambda br, n, rng: floatmm(br, n, rng)
    ),
    "intmm": KernelInfo(
        ("init_row", "init_col", "row", "col", "inner"), 32, 1, 128, lambda br, n, rng: intmm(br, n, rng)
    ),
    "oscar": KernelInfo(
        ("pass", "reverse", "rev_swap", "carry", "stage", "twiddle", "butterfly"),
        256,
        2,
        8192,
        lambda br, n, rng: oscar(br, n, rng),
    ),
    "perm": KernelInfo(("nontrivial", "swap_loop"), 7, 1, 9, lambda br, n, rng: perm(br, n)),
    "puzzle": KernelInfo(("skip", "done", "fit_across", "fit_down"), 7, 1, 10, lambda br, n, rng: puzzle(br, n)),
    "queens": KernelInfo(("column", "safe", "last_row"), 8, 1, 11, lambda br, n, rng: queens(br, n)),
    "quicksort": KernelInfo(
        ("scan_lo", "scan_hi", "exchange", "partition", "recurse_lo", "recurse_hi"),
        2000,
        1,
        100_000,
        lambda br, n, rng: quicksort(br, _SORT_VALUES(n, rng)),
    ),
    "realmm": KernelInfo(
        ("init_row", "init_col", "row", "col", "inner"), 32, 1, 128, lambda br, n, rng: realmm(br, n, rng)
    ),
    "towers": KernelInfo(
        ("single", "pop_empty", "push_bad"), 12, 1, 20, lambda br, n, rng: towers(br, n)
    ),
    "treesort": KernelInfo(
        ("go_left", "left_free", "right_free", "walk", "descend", "misordered"),
        1000,
        1,
        100_000,
        lambda br, n, rng: treesort(br, _shuffled(n, rng)),
    ),
}

KERNEL_NAMES = tuple(KERNELS)


def kernel_base(name: str) -> int:
    """Base address for a kernel's branch sites; kernels sit in distinct 64 KiB blocks."""
    i = KERNEL_NAMES.index(name)
    return 0x10000 * (i + 1) + 0x24 * i
