"""Pure NumPy fallback for the pairwise closest-point kernel.

Mirrors the semantics of the compiled extension exactly: pairs whose
subspace determinant is <= det_tol are rejected as parallel and tallied,
remaining pairs are solved via the SPD reduction of the normal equations,
and only pairs with distance <= u_max are returned.
"""

import numpy as np

BACKEND = "python"

_CHUNK = 1 << 17


def _solve_chunk_k1(u1, u2, a1, a2, det_tol):
    g = np.einsum("nd,nd->n", u1, u2)
    s = 1.0 - g * g
    ok = np.sqrt(np.clip(s, 0.0, None)) > det_tol
    diff = a2 - a1
    c1 = np.einsum("nd,nd->n", u1, diff)
    c2 = np.einsum("nd,nd->n", u2, diff)
    s_ok = s[ok]
    beta = (g[ok] * c1[ok] - c2[ok]) / s_ok
    alpha = c1[ok] + g[ok] * beta
    x = a1[ok] + alpha[:, None] * u1[ok]
    y = a2[ok] + beta[:, None] * u2[ok]
    dist = np.linalg.norm(x - y, axis=1)
    mid = 0.5 * (x + y)
    return ok, dist, mid


def _solve_chunk(b1, b2, a1, a2, det_tol):
    k = b1.shape[2]
    g = np.einsum("ndi,ndj->nij", b1, b2)
    s = np.eye(k) - np.einsum("nca,ncb->nab", g, g)
    det = np.linalg.det(s)
    ok = np.sqrt(np.clip(det, 0.0, None)) > det_tol
    diff = a2 - a1
    c1 = np.einsum("ndi,nd->ni", b1, diff)
    c2 = np.einsum("ndi,nd->ni", b2, diff)
    rhs = np.einsum("nca,nc->na", g, c1) - c2
    beta = np.linalg.solve(s[ok], rhs[ok][:, :, None])[:, :, 0]
    alpha = c1[ok] + np.einsum("nij,nj->ni", g[ok], beta)
    x = a1[ok] + np.einsum("ndi,ni->nd", b1[ok], alpha)
    y = a2[ok] + np.einsum("ndi,ni->nd", b2[ok], beta)
    dist = np.linalg.norm(x - y, axis=1)
    mid = 0.5 * (x + y)
    return ok, dist, mid


def pair_records(bases, anchors, det_tol, u_max):
    """All unordered general-position pairs with distance <= u_max.

    Returns (i, j, dist, mid, n_rejected); same contract as the compiled
    backend.
    """
    bases = np.ascontiguousarray(bases, dtype=float)
    anchors = np.ascontiguousarray(anchors, dtype=float)
    n, d, k = bases.shape
    ii, jj = np.triu_indices(n, 1)
    out_i, out_j, out_dist, out_mid = [], [], [], []
    rejected = 0
    for start in range(0, ii.size, _CHUNK):
        ci = ii[start:start + _CHUNK]
        cj = jj[start:start + _CHUNK]
        if k == 1:
            ok, dist, mid = _solve_chunk_k1(bases[ci, :, 0], bases[cj, :, 0],
                                            anchors[ci], anchors[cj], det_tol)
        else:
            ok, dist, mid = _solve_chunk(bases[ci], bases[cj],
                                         anchors[ci], anchors[cj], det_tol)
        rejected += int(ci.size - ok.sum())
        keep = dist <= u_max
        out_i.append(ci[ok][keep])
        out_j.append(cj[ok][keep])
        out_dist.append(dist[keep])
        out_mid.append(mid[keep])
    if out_i:
        return (np.concatenate(out_i).astype(np.int64),
                np.concatenate(out_j).astype(np.int64),
                np.concatenate(out_dist), np.concatenate(out_mid), rejected)
    return (np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64),
            np.empty(0), np.empty((0, d)), rejected)
