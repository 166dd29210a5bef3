#!/usr/bin/env python3
"""Generate the two gas benchmark fixtures in the canonical network format.

The original GasLib files are not redistributed here. These fixtures reproduce
the structural statistics the experiments depend on:

  gaslib40.json   40 vertices, 45 pipes, 6 independent loops, uniform a = 500,
                  one pressure anchor 'source_1'
  gaslib134.json  134 vertices, 133 pipes (tree), longest path 55 pipes,
                  uniform a = 50, pressure anchors 'node_1', 'node_20', 'node_80'

Units: vertex_value is the squared pressure v = p^2 in bar^2, injection is the
volumetric flow in the units implied by Q = a * sgn(dv) * sqrt(|dv|) with the
uniform coefficient a. Positive injection feeds gas into the network.
Every generated steady state keeps all pressures between 40 and 60 bar; the
script asserts this after solving the network equations.

Usage: make_gas_fixtures.py OUT_DIR
"""
import json
import math
import os
import sys

import numpy as np
from scipy.optimize import fsolve

P_MIN, P_MAX = 40.0, 60.0


def flow(a, vi, vj):
    d = vi - vj
    return a * math.copysign(math.sqrt(abs(d)), d)


def solve(n, links, a, anchors, inj):
    """Damped Newton solve of the steady state with anchors fixed.

    Starts from a linear (laminar) flow law, returns squared pressures."""
    free = [i for i in range(n) if i not in anchors]
    pos = {v: k for k, v in enumerate(free)}

    def full(x):
        v = np.empty(n)
        for i, val in anchors.items():
            v[i] = val
        v[free] = x
        return v

    def system(x, slope_floor=1e-9):
        v = full(x)
        res = np.array([inj[i] for i in free], dtype=float)
        jac = np.zeros((len(free), len(free)))
        for (i, j) in links:
            q = flow(a, v[i], v[j])
            s = a / (2.0 * math.sqrt(max(abs(v[i] - v[j]), slope_floor)))
            for (u, w, sign) in ((i, j, 1.0), (j, i, -1.0)):
                if u in pos:
                    res[pos[u]] -= sign * q
                    jac[pos[u], pos[u]] -= s
                    if w in pos:
                        jac[pos[u], pos[w]] += s
        return res, jac

    # laminar start: Q = (a / 10) * dv
    lap = np.zeros((len(free), len(free)))
    rhs = np.array([inj[i] for i in free], dtype=float)
    for (i, j) in links:
        for (u, w) in ((i, j), (j, i)):
            if u in pos:
                lap[pos[u], pos[u]] += a / 10
                if w in pos:
                    lap[pos[u], pos[w]] -= a / 10
                else:
                    rhs[pos[u]] += a / 10 * anchors[w]
    x = np.linalg.solve(lap, rhs)
    for _ in range(200):
        res, jac = system(x)
        norm = np.abs(res).max()
        if norm < 1e-8:
            return full(x)
        step = np.linalg.solve(jac, -res)
        t = 1.0
        while t > 1e-8:
            if np.abs(system(x + t * step)[0]).max() < norm:
                break
            t *= 0.5
        x = x + t * step
    raise RuntimeError(f"no convergence, residual {norm}")


def tree_flows(n, links, root, inj):
    """Conservative flows on a tree given injections at all vertices but root."""
    adj = [[] for _ in range(n)]
    for k, (i, j) in enumerate(links):
        adj[i].append((j, k))
        adj[j].append((i, k))
    parent, order, seen = [None] * n, [root], {root}
    for u in order:
        for (w, k) in adj[u]:
            if w not in seen:
                seen.add(w)
                parent[w] = (u, k)
                order.append(w)
    sub = np.array(inj, dtype=float)
    q = np.zeros(len(links))
    for u in reversed(order[1:]):
        p, k = parent[u]
        # net outflow of subtree u towards p
        out = sub[u]
        q[k] = out if links[k][0] == u else -out
        sub[p] += sub[u]
    return q, order, parent


def gaslib134(rng):
    n, a = 134, 50.0
    names = [f"node_{k + 1}" for k in range(n)]
    # spine node_1 .. node_56 gives the 55-pipe longest path
    links = [(k, k + 1) for k in range(55)]
    # (spine position, distance from spine); a branch hanging off spine
    # position s may reach depth min(s, 55 - s) without exceeding diameter 55
    where = {k: (k, 0) for k in range(56)}
    for v in range(56, n):
        while True:
            p = int(rng.integers(1, v))
            s, d = where[p]
            if d + 1 <= min(s, 55 - s):
                break
        links.append((p, v))
        where[v] = (s, d + 1)
    anchors_idx = [0, 19, 79]
    inj = np.zeros(n)
    sinks = [v for v in range(n) if v not in anchors_idx]
    inj[sinks] = -rng.uniform(0.5, 3.0, len(sinks))
    # anchors share the supply; node_1 is the big entry point
    total = -inj.sum()
    share = np.array([0.6, 0.25, 0.15])
    for s, k in zip(share, anchors_idx):
        inj[k] = s * total
    q, order, parent = tree_flows(n, links, 0, inj)
    v = np.zeros(n)
    v[0] = P_MAX ** 2
    for u in order[1:]:
        p, k = parent[u]
        qk = q[k] if links[k][0] == p else -q[k]
        v[u] = v[p] - math.copysign((qk / a) ** 2, qk)
    p = np.sqrt(v)
    assert P_MIN <= p.min() and p.max() <= P_MAX, (p.min(), p.max())
    vertices = []
    for k in range(n):
        rec = {"id": names[k], "injection": None, "vertex_value": None}
        if k in anchors_idx:
            rec["vertex_value"] = float(v[k])
        else:
            rec["injection"] = float(inj[k])
        vertices.append(rec)
    check_residual(n, links, a, v, inj, anchors_idx)
    return names, links, a, vertices


def check_residual(n, links, a, v, inj, anchors):
    out = np.array(inj, dtype=float)
    for (i, j) in links:
        q = flow(a, v[i], v[j])
        out[i] -= q
        out[j] += q
    out[list(anchors)] = 0.0
    assert np.abs(out).max() < 1e-8, np.abs(out).max()


def gaslib40(rng):
    n, a = 40, 500.0
    names = ["source_1", "source_2", "source_3"] + [f"sink_{k}" for k in range(1, 30)] + \
            [f"innode_{k}" for k in range(1, 9)]
    links = []
    for v in range(1, n):
        links.append((int(rng.integers(max(0, v - 6), v)), v))
    have = {tuple(sorted(l)) for l in links}
    while len(links) < 45:
        i, j = sorted(int(x) for x in rng.choice(n, 2, replace=False))
        if (i, j) not in have and j - i <= 10:
            have.add((i, j))
            links.append((i, j))
    inj = np.zeros(n)
    inj[3:32] = -rng.uniform(150.0, 600.0, 29)
    total = -inj.sum()
    inj[1], inj[2] = 0.3 * total, 0.2 * total
    anchors = {0: 58.0 ** 2}
    v = solve(n, links, a, anchors, inj)
    p = np.sqrt(v)
    assert P_MIN <= p.min() and p.max() <= P_MAX, (p.min(), p.max())
    vertices = []
    for k in range(n):
        rec = {"id": names[k], "injection": None, "vertex_value": None}
        if k in anchors:
            rec["vertex_value"] = anchors[k]
        else:
            rec["injection"] = float(inj[k])
        vertices.append(rec)
    return names, links, a, vertices


def write(path, names, links, a, vertices):
    doc = {
        "kind": "gas",
        "vertices": vertices,
        "links": [{"from": names[i], "to": names[j], "coeff": a} for (i, j) in links],
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def main(out_dir):
    rng = np.random.default_rng(20111101)
    write(os.path.join(out_dir, "gaslib134.json"), *gaslib134(rng))
    write(os.path.join(out_dir, "gaslib40.json"), *gaslib40(rng))


if __name__ == "__main__":
    main(sys.argv[1])
