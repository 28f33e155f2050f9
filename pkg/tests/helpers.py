"""Shared test utilities: document builders and the randomized
concave-quadratic instance generator used by the conversion tests."""

from __future__ import annotations

import numpy as np

from valfun import model


def poly_source(terms):
    """Render [(coef, [varnames...]), ...] as grammar-conforming source."""
    parts = []
    for coef, vs in terms:
        c = float(coef)
        if c == 0.0:
            continue
        mono = "*".join(vs)
        body = repr(abs(c)) + ("*" + mono if mono else "")
        parts.append(("-" if c < 0 else "+", body))
    if not parts:
        return "0"
    first_sign, first_body = parts[0]
    out = first_body if first_sign == "+" else "0 - " + first_body
    for sign, body in parts[1:]:
        out += f" {sign} {body}"
    return out


def build_problem_doc(n, m, q, f_terms, g_term_lists, x_lo=-5.0, x_hi=5.0,
                      y_lo=-6.0, y_hi=6.0, flags=("concave_in_y",)):
    lines = ["[dims]", f"n = {n}", f"m = {m}", f"q = {q}", "[objective]",
             f'f = "{poly_source(f_terms)}"']
    if q:
        lines.append("[constraints]")
        for i, terms in enumerate(g_term_lists):
            lines.append(f'g{i+1} = "{poly_source(terms)}"')
    lines.append("[x_domain]")
    for j in range(n):
        lines.append(f"x{j+1} = {x_lo}, {x_hi}")
    lines.append("[y_search_box]")
    for j in range(m):
        lines.append(f"y{j+1} = {y_lo}, {y_hi}")
    if flags:
        lines.append("[flags]")
        for fl in flags:
            lines.append(f"{fl} = true")
    return "\n".join(lines) + "\n"


def random_wolfe_instance(rng):
    """Random concave-in-y quadratic with a KKT point whose Wolfe
    optimality system is feasible by construction.

    Returns (problem, xbar, ybar, lam, u_witness).
    """
    n = int(rng.integers(1, 4))
    m = int(rng.integers(1, 4))
    q = int(rng.integers(0, 3))

    u = rng.normal(size=m)
    u /= np.linalg.norm(u)
    u *= rng.uniform(0.3, 1.5)

    # concave quadratic with u in the Hessian nullspace
    k = max(0, m - 1)
    B = rng.normal(size=(m, k)) if k else np.zeros((m, 0))
    if k:
        B -= np.outer(u, u @ B) / float(u @ u)
    Q = B @ B.T  # PSD, Q u = 0

    A = rng.normal(size=(n, m))
    xbar = rng.uniform(-1.5, 1.5, size=n)
    ybar = rng.uniform(-1.5, 1.5, size=m)

    a_rows = np.zeros((q, m))
    d_rows = np.zeros((q, n))
    c_off = np.zeros(q)
    lam = np.zeros(q)
    for i in range(q):
        mode = rng.choice(["pos", "biactive", "inactive"])
        a = rng.normal(size=m)
        d = rng.normal(size=n) * 0.5
        if mode == "pos":
            a -= u * float(a @ u) / float(u @ u)  # a is orthogonal to u
            if np.linalg.norm(a) < 1e-6:
                a = rng.normal(size=m)
                a -= u * float(a @ u) / float(u @ u)
            lam[i] = rng.uniform(0.5, 2.0)
            c_off[i] = float(a @ ybar + d @ xbar)
        elif mode == "biactive":
            if float(a @ u) > 0:
                a = -a
            c_off[i] = float(a @ ybar + d @ xbar)
        else:
            c_off[i] = float(a @ ybar + d @ xbar) + abs(float(a @ u)) + 0.7
        a_rows[i] = a
        d_rows[i] = d

    b_y = Q @ ybar + a_rows.T @ lam - A.T @ xbar
    c0 = -A @ (ybar + u) + d_rows.T @ lam

    xv = [f"x{j+1}" for j in range(n)]
    yv = [f"y{j+1}" for j in range(m)]
    f_terms = []
    for j in range(n):
        f_terms.append((c0[j], [xv[j]]))
        for kk in range(m):
            f_terms.append((A[j, kk], [xv[j], yv[kk]]))
    for j in range(m):
        f_terms.append((b_y[j], [yv[j]]))
        f_terms.append((-0.5 * Q[j, j], [yv[j], yv[j]]))
        for kk in range(j + 1, m):
            f_terms.append((-Q[j, kk], [yv[j], yv[kk]]))
    g_lists = []
    for i in range(q):
        terms = [(a_rows[i, j], [yv[j]]) for j in range(m)]
        terms += [(d_rows[i, j], [xv[j]]) for j in range(n)]
        terms.append((-c_off[i], []))
        g_lists.append(terms)

    doc = build_problem_doc(n, m, q, f_terms, g_lists)
    prob = model.load_problem(doc, name="randquad")
    return prob, xbar, ybar, lam, u
