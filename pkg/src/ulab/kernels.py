"""Hot loops on raw int64 arrays, compiled with numba unless ULAB_NUMBA=0.

Every kernel is self-contained (no calls into other kernels) so the pure
Python fallbacks in PY_IMPLS and the compiled versions exercise exactly
the same code.  Field arithmetic arrives as dense lookup tables:
``mul_t``/``add_t`` are q-by-q code tables, ``neg_t``/``inv_t`` are
length-q code tables (inv_t[0] is unused).

Conventions:

* polynomial coefficient arrays are little-endian (index i = coefficient
  of X^i) and may carry trailing zeros; callers normalize,
* series coefficient windows are top-first relative arrays,
* degree -1 stands for the zero polynomial inside kernels (the public
  classes use a proper minus-infinity marker).
"""

import numpy as np

from .backend import USING_NUMBA, maybe_njit


def poly_mul(a, b, mul_t, add_t):
    """Convolution of two coefficient arrays (len >= 1 each)."""
    la = a.shape[0]
    lb = b.shape[0]
    out = np.zeros(la + lb - 1, dtype=np.int64)
    for i in range(la):
        ai = a[i]
        if ai == 0:
            continue
        for j in range(lb):
            bj = b[j]
            if bj == 0:
                continue
            out[i + j] = add_t[out[i + j], mul_t[ai, bj]]
    return out


def poly_divmod(a, b, mul_t, add_t, neg_t, inv_t):
    """Long division a = q*b + r.  b must be normalized (top coeff nonzero).

    Returns (quot, rem) with rem carrying len(b)-1 slots (possibly with
    trailing zeros); quot has max(la-lb+1, 1) slots.
    """
    la = a.shape[0]
    lb = b.shape[0]
    qlen = la - lb + 1
    if qlen < 1:
        qlen = 1
    quot = np.zeros(qlen, dtype=np.int64)
    rem = a.copy()
    lead_inv = inv_t[b[lb - 1]]
    for top in range(la - 1, lb - 2, -1):
        c = rem[top]
        if c == 0:
            continue
        f = mul_t[c, lead_inv]
        quot[top - lb + 1] = f
        off = top - lb + 1
        for j in range(lb):
            bj = b[j]
            if bj == 0:
                continue
            rem[off + j] = add_t[rem[off + j], neg_t[mul_t[f, bj]]]
    out_rem = np.zeros(lb - 1 if lb > 1 else 1, dtype=np.int64)
    for j in range(min(lb - 1, la)):
        out_rem[j] = rem[j]
    return quot, out_rem


def series_inv_unit(u, nout, mul_t, add_t, neg_t, inv_t):
    """First nout coefficients of 1/u for a unit power series u (u[0] != 0).

    u is a relative coefficient array (u[k] multiplies the k-th power of
    the local parameter); the geometric-series expansion is summed by
    back-substitution: v[0] = u[0]^-1, and for k >= 1
    v[k] = -u[0]^-1 * sum_{j=1..k} u[j] v[k-j].
    """
    lu = u.shape[0]
    v = np.zeros(nout, dtype=np.int64)
    u0i = inv_t[u[0]]
    v[0] = u0i
    for k in range(1, nout):
        acc = 0
        jmax = k if k < lu - 1 else lu - 1
        for j in range(1, jmax + 1):
            uj = u[j]
            if uj == 0:
                continue
            vk = v[k - j]
            if vk == 0:
                continue
            acc = add_t[acc, mul_t[uj, vk]]
        if acc != 0:
            v[k] = neg_t[mul_t[u0i, acc]]
    return v


def cf_degree_hist(batch, dcap, hist, mul_t, add_t, neg_t, inv_t):
    """Tally certified partial-quotient degrees for a batch of series.

    batch[j, i] is the coefficient of X^-(i+1) of sample j (i.i.d. uniform
    for Haar sampling).  Degrees d >= dcap pool into hist[dcap]; hist[0]
    stays unused.  A step is tallied only while the remaining certified
    window is at least dcap wide, so every tally has the exact untruncated
    law: counting in a narrower window would clip large degrees and bias
    the tail.  Each step with quotient degree d then consumes 2d
    coefficients of precision.
    """
    nsamp = batch.shape[0]
    n = batch.shape[1]
    r = np.zeros(n, dtype=np.int64)
    v = np.zeros(n + 1, dtype=np.int64)
    rnew = np.zeros(n, dtype=np.int64)
    for s in range(nsamp):
        avail = n
        for i in range(n):
            r[i] = batch[s, i]
        while avail >= dcap:
            i0 = -1
            for i in range(avail):
                if r[i] != 0:
                    i0 = i
                    break
            if i0 < 0:
                # no nonzero down to the floor: degree exceeds avail >= dcap
                hist[dcap] += 1
                break
            d = i0 + 1
            if d < dcap:
                hist[d] += 1
            else:
                hist[dcap] += 1
            newavail = avail - 2 * d
            if newavail < 1:
                break
            # u[k] = r[d-1+k] for k = 0..avail-d; v = 1/u to the same order
            nu = avail - d + 1
            u0i = inv_t[r[d - 1]]
            v[0] = u0i
            for k in range(1, nu):
                acc = 0
                for j in range(1, k + 1):
                    uj = r[d - 1 + j]
                    if uj == 0:
                        continue
                    vk = v[k - j]
                    if vk == 0:
                        continue
                    acc = add_t[acc, mul_t[uj, vk]]
                if acc != 0:
                    v[k] = neg_t[mul_t[u0i, acc]]
                else:
                    v[k] = 0
            for j in range(1, newavail + 1):
                rnew[j - 1] = v[d + j]
            for j in range(newavail):
                r[j] = rnew[j]
            avail = newavail
    return 0


def weak_popov(C, rowdeg, err, mul_t, add_t, neg_t, inv_t):
    """In-place weak Popov reduction of a nonsingular polynomial matrix.

    C is d x d x W little-endian coefficient storage; row degrees only
    ever decrease, so W never needs to grow.  The pivot of a row is the
    rightmost column attaining the row degree.  While two rows share a
    pivot column, the row pair at the smallest such column is picked, the
    row of minimal degree (lowest index on ties) survives, and the
    lowest-index other row is reduced by it.  err[i] tracks the exponent
    below which row i may disagree with an untruncated source basis;
    a simple transformation with shift e propagates err as
    max(err_i, e + err_k).

    Returns 0 on success, 1 if a row became (or was) identically zero.
    """
    d = C.shape[0]
    W = C.shape[2]
    pivot = np.zeros(d, dtype=np.int64)
    for i in range(d):
        rd = -1
        for col in range(d):
            for t in range(W - 1, rd, -1):
                if C[i, col, t] != 0:
                    if t > rd:
                        rd = t
                    break
        rowdeg[i] = rd
        if rd < 0:
            return 1
    guard = (d * d + d) * (W + 2) * 4 + 64
    it = 0
    while True:
        it += 1
        if it > guard:
            return 2
        for i in range(d):
            rd = rowdeg[i]
            pv = -1
            for col in range(d):
                if C[i, col, rd] != 0:
                    pv = col
            pivot[i] = pv
        target = -1
        for col in range(d):
            cnt = 0
            for i in range(d):
                if pivot[i] == col:
                    cnt += 1
            if cnt >= 2:
                target = col
                break
        if target < 0:
            return 0
        k = -1
        for i in range(d):
            if pivot[i] == target:
                if k < 0 or rowdeg[i] < rowdeg[k]:
                    k = i
        i_red = -1
        for i in range(d):
            if pivot[i] == target and i != k:
                i_red = i
                break
        e = rowdeg[i_red] - rowdeg[k]
        c = mul_t[C[i_red, target, rowdeg[i_red]], inv_t[C[k, target, rowdeg[k]]]]
        for col in range(d):
            for t in range(rowdeg[k] + 1):
                v = C[k, col, t]
                if v == 0:
                    continue
                C[i_red, col, t + e] = add_t[C[i_red, col, t + e], neg_t[mul_t[c, v]]]
        if err[k] + e > err[i_red]:
            err[i_red] = err[k] + e
        rd = -1
        for col in range(d):
            for t in range(W - 1, rd, -1):
                if C[i_red, col, t] != 0:
                    if t > rd:
                        rd = t
                    break
        rowdeg[i_red] = rd
        if rd < 0:
            return 1


def dioph_scan(afrac, D, cap, thr, maxw, wq, wdeg, wdepth, hist, counts, mul_t, add_t, neg_t):
    """Walk every nonzero q in F_q[X] with deg q <= D and record depths.

    For one-row approximation targets: afrac[i] (i >= 1) is the
    coefficient of X^-i of the target series.  The depth of q is the
    smallest i >= 1 with a nonzero coefficient of X^-i in frac(target*q),
    clipped to cap+1 when everything down to X^-cap vanishes.  The walk
    is an odometer over coefficient codes with incremental updates of the
    tracked window, so each step costs O(cap).

    hist[d, depth] counts visits; counts[d] counts q at degree d whose
    depth reaches thr[d]; the first maxw of those are copied into
    wq/wdeg/wdepth.  Returns the number of witnesses stored.
    """
    q = mul_t.shape[0]
    dig = np.zeros(D + 1, dtype=np.int64)
    f = np.zeros(cap + 1, dtype=np.int64)
    nfound = 0
    topj = 0
    total = 1
    for _ in range(D + 1):
        total *= q
    for _step in range(total - 1):
        # odometer increment with carry, updating the tracked window
        j = 0
        while True:
            old = dig[j]
            new = old + 1
            if new == q:
                new = 0
            dig[j] = new
            delta = add_t[new, neg_t[old]]
            if delta != 0:
                for i in range(1, cap + 1):
                    fa = afrac[i + j]
                    if fa != 0:
                        f[i] = add_t[f[i], mul_t[delta, fa]]
            if old != q - 1:
                break
            j += 1
        if j > topj:
            topj = j
        depth = cap + 1
        for i in range(1, cap + 1):
            if f[i] != 0:
                depth = i
                break
        hist[topj, depth] += 1
        if depth >= thr[topj]:
            counts[topj] += 1
            if nfound < maxw:
                for jj in range(D + 1):
                    wq[nfound, jj] = dig[jj]
                wdeg[nfound] = topj
                wdepth[nfound] = depth
                nfound += 1
    return nfound


def gauss_kernel_vector(M, mul_t, add_t, neg_t, inv_t):
    """Nonzero kernel vector of an R x C matrix over F_q, or all zeros.

    Forward elimination with first-nonzero pivoting, then back
    substitution for the first free column, so the witness is
    deterministic.  M is destroyed.
    """
    R = M.shape[0]
    Cc = M.shape[1]
    piv_row = np.full(Cc, -1, dtype=np.int64)
    row = 0
    for col in range(Cc):
        if row >= R:
            break
        sel = -1
        for r in range(row, R):
            if M[r, col] != 0:
                sel = r
                break
        if sel < 0:
            continue
        if sel != row:
            for c in range(Cc):
                tmp = M[row, c]
                M[row, c] = M[sel, c]
                M[sel, c] = tmp
        pinv = inv_t[M[row, col]]
        for c in range(col, Cc):
            if M[row, c] != 0:
                M[row, c] = mul_t[M[row, c], pinv]
        for r in range(R):
            if r == row:
                continue
            fac = M[r, col]
            if fac == 0:
                continue
            for c in range(col, Cc):
                v = M[row, c]
                if v != 0:
                    M[r, c] = add_t[M[r, c], neg_t[mul_t[fac, v]]]
        piv_row[col] = row
        row += 1
    out = np.zeros(Cc, dtype=np.int64)
    free_col = -1
    for col in range(Cc):
        if piv_row[col] < 0:
            free_col = col
            break
    if free_col < 0:
        return out
    out[free_col] = 1
    for col in range(Cc):
        pr = piv_row[col]
        if pr >= 0 and M[pr, free_col] != 0:
            out[col] = neg_t[M[pr, free_col]]
    return out


PY_IMPLS = {
    "poly_mul": poly_mul,
    "poly_divmod": poly_divmod,
    "series_inv_unit": series_inv_unit,
    "cf_degree_hist": cf_degree_hist,
    "weak_popov": weak_popov,
    "dioph_scan": dioph_scan,
    "gauss_kernel_vector": gauss_kernel_vector,
}

if USING_NUMBA:
    _jit = maybe_njit(cache=True, nogil=True)
    poly_mul = _jit(poly_mul)
    poly_divmod = _jit(poly_divmod)
    series_inv_unit = _jit(series_inv_unit)
    cf_degree_hist = _jit(cf_degree_hist)
    weak_popov = _jit(weak_popov)
    dioph_scan = _jit(dioph_scan)
    gauss_kernel_vector = _jit(gauss_kernel_vector)
