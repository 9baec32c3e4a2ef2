"""Reference values for the two-point task on the three-phase supply."""

from fractions import Fraction

F = Fraction
H = F(1, 2)

# (phase, missed, rem) of s11, s12, s21, s22, s31, s32
LISTED_STATES = [(0, True, 1), (0, False, 0), (1, True, 1), (1, False, 0), (2, True, 0), (2, False, 0)]

# column-stochastic, rows/columns in LISTED_STATES order
LISTED_P = [
    [0, 0, 0, 0, H, H],
    [0, 0, 0, 0, H, H],
    [H, 0, 0, 0, 0, 0],
    [H, 1, 0, 0, 0, 0],
    [0, 0, H, 0, 0, 0],
    [0, 0, H, 1, 0, 0],
]
LISTED_PI = [F(4, 24), F(4, 24), F(2, 24), F(6, 24), F(1, 24), F(7, 24)]
DMR = F(7, 24)
DMR_3 = {F(0): F(1, 2), F(1, 3): F(1, 4), F(2, 3): F(1, 8), F(1): F(1, 8)}

# D = 6, delta = 0: every edge as (src, dst, prob)
WIDE_DEADLINE_EDGES = {
    ((0, False, 1), (1, False, 1), H),
    ((0, False, 1), (1, False, 0), H),
    ((0, False, 0), (1, False, 0), F(1)),
    ((0, False, 2), (1, False, 1), H),
    ((0, False, 2), (1, True, 1), H),
    ((1, False, 1), (2, False, 1), H),
    ((1, False, 1), (2, False, 0), H),
    ((1, False, 0), (2, False, 0), F(1)),
    ((1, True, 1), (2, False, 1), H),
    ((1, True, 1), (2, False, 0), H),
    ((2, False, 1), (0, False, 1), H),
    ((2, False, 1), (0, False, 2), H),
    ((2, False, 0), (0, False, 1), H),
    ((2, False, 0), (0, False, 0), H),
}
WIDE_DEADLINE_DMR = F(1, 72)


def edge_set(chain):
    lab = lambda i: (chain.states[i].phase, chain.states[i].missed, chain.states[i].rem)  # noqa: E731
    return {(lab(s), lab(r), p) for s, r, p in chain.edges()}


def listed_order(chain):
    return [chain.find(*s) for s in LISTED_STATES]
