"""Pure-Python exhaustive set search; fallback for the compiled ``_kernel``.

Same contract and summation order as the extension, so both backends return
bit-identical scores and identical rankings.
"""

from __future__ import annotations

R_ONLY = 1
NO_OVERLAP = 2
NO_CQ = 4
NO_CA = 8


def _as_int_masks(mask_rows) -> list[int]:
    out = []
    for row in mask_rows:
        v = 0
        for w, word in enumerate(row):
            v |= int(word) << (64 * w)
        out.append(v)
    return out


def _beats(s, k, es, ek, tol):
    thr = tol * abs(es)
    if s > es + thr:
        return True
    return s >= es - thr and k < ek


def search(bm25, pair, qmask, amask, q_weights, a_weights, nq, na, k_values,
           epsilon, flags, top_m=1, tol=1e-12):
    """Score every subset of the candidates whose size is in ``k_values``.

    Returns ``(ranked, n_scored)`` where ``ranked`` holds up to ``top_m``
    ``(score, positions)`` pairs, best first.
    """
    n = len(bm25)
    ks = sorted({int(k) for k in k_values})
    if not ks or ks[0] < 1 or ks[-1] > n:
        raise ValueError("k values must lie in [1, n]")
    if top_m < 1:
        raise ValueError("top_m must be >= 1")
    kmax, kmin = ks[-1], ks[0]
    want = [False] * (kmax + 1)
    for k in ks:
        want[k] = True

    bm = [float(x) for x in bm25]
    pr = [[float(x) for x in row] for row in pair]
    qm = _as_int_masks(qmask)
    am = _as_int_masks(amask)
    qw = [float(x) for x in q_weights]
    aw = [float(x) for x in a_weights]

    q_memo: dict[int, float] = {}
    a_memo: dict[int, float] = {}

    def mask_sum(mask, weights, memo):
        v = memo.get(mask)
        if v is None:
            v = 0.0
            x = mask
            while x:
                low = x & -x
                v += weights[low.bit_length() - 1]
                x ^= low
            memo[mask] = v
        return v

    r_only = bool(flags & R_ONLY)
    no_overlap = bool(flags & NO_OVERLAP)
    no_cq = bool(flags & NO_CQ)
    no_ca = bool(flags & NO_CA)
    eps = float(epsilon)

    best: list[tuple[float, int, tuple]] = []
    members: list[int] = []
    n_scored = 0

    def consider(s, k):
        last = len(best)
        if last == top_m:
            es, ek, _ = best[-1]
            if not _beats(s, k, es, ek, tol):
                return
            last -= 1
        p = 0
        while p < last and not _beats(s, k, best[p][0], best[p][1], tol):
            p += 1
        best.insert(p, (s, k, tuple(members)))
        if len(best) > top_m:
            best.pop()

    def dfs(depth, start, rsum, osum, qcov, acov):
        nonlocal n_scored
        d1 = depth + 1
        stop = min(n, n - kmin + d1)
        score_here = want[d1]
        go_deeper = d1 < kmax
        members.append(-1)
        for j in range(start, stop):
            members[depth] = j
            r1 = rsum + bm[j]
            inner = 0.0
            for l in range(depth):
                inner += pr[members[l]][j]
            o1 = osum + inner
            q1 = qcov | qm[j]
            a1 = acov | am[j]
            if score_here:
                r = r1 / d1
                o = o1 / float(d1 * (d1 - 1) // 2) if d1 >= 2 else 0.0
                cq = mask_sum(q1, qw, q_memo) / nq if nq > 0 else 0.0
                ca = mask_sum(a1, aw, a_memo) / na if na > 0 else 0.0
                if r_only:
                    s = r
                else:
                    s = r if no_overlap else r / (eps + o)
                    if not no_ca:
                        s *= eps + ca
                    if not no_cq:
                        s *= eps + cq
                n_scored += 1
                consider(s, d1)
            if go_deeper:
                dfs(d1, j + 1, r1, o1, q1, a1)
        members.pop()

    dfs(0, 0, 0.0, 0.0, 0, 0)
    return [(s, m) for s, _, m in best], n_scored
