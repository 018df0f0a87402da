"""Per-term plot data, static SVG charts and per-record explanations for a PRN.

Curves are drawn in original feature units. Each term's contribution is the
logit shift it adds relative to the anchor (the training median), so a
recentered network gives curves through zero at the median.
"""

import csv
import json
from html import escape
from pathlib import Path

import numpy as np

from .network import prn_forward

N_GRID = 101
N_GRID_PAIR = 41
N_BINS = 20


def _names(prn):
    return prn.feature_names or tuple(f"x{i}" for i in range(prn.d))


def _term_file(sub):
    return "term_" + "_".join(str(i) for i in sub.inputs)


def univariate_grid(lo, hi, anchor, n=N_GRID):
    """``n`` evenly spaced points on ``[lo, hi]`` with the one nearest the anchor moved onto it."""
    g = np.linspace(lo, hi, n)
    if lo <= anchor <= hi:
        g[np.argmin(np.abs(g - anchor))] = anchor
    return g


def _sub_on_grid(sub, d, norm, columns):
    """Evaluate one subnetwork where its inputs take the given original-unit values."""
    Z = np.zeros((len(columns[0]), d))
    for i, col in zip(sub.inputs, columns):
        Z[:, i] = (col - norm.center[i]) / norm.scale[i]
    return sub.output(Z)


def univariate_curve(prn, sub, norm, lo, hi, n=N_GRID):
    i = sub.inputs[0]
    g = univariate_grid(lo, hi, norm.center[i], n)
    return g, _sub_on_grid(sub, prn.d, norm, [g])


def bivariate_surface(prn, sub, norm, ranges, n=N_GRID_PAIR):
    gi = np.linspace(*ranges[0], n)
    gj = np.linspace(*ranges[1], n)
    A, B = np.meshgrid(gi, gj, indexing="ij")
    return gi, gj, _sub_on_grid(sub, prn.d, norm, [A.ravel(), B.ravel()]).reshape(n, n)


# -- SVG ----------------------------------------------------------------------

_W, _H, _PAD = 480, 320, 50


def _scale(v, lo, hi, a, b):
    return a + (b - a) * (v - lo) / (hi - lo) if hi > lo else np.full_like(v, (a + b) / 2)


def _svg(body, title):
    return (f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
            f'viewBox="0 0 {_W} {_H}" font-family="sans-serif" font-size="11">\n'
            f'<rect width="{_W}" height="{_H}" fill="white"/>\n'
            f'<text x="{_W / 2}" y="18" text-anchor="middle" font-size="13">{escape(title)}</text>\n'
            + "\n".join(body) + "\n</svg>\n")


def _axes(xlo, xhi, ylo, yhi, xlabel, ylabel):
    x0, x1, y0, y1 = _PAD, _W - _PAD, _H - _PAD, _PAD
    out = [f'<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>',
           f'<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>',
           f'<text x="{(x0 + x1) / 2}" y="{_H - 12}" text-anchor="middle">{escape(xlabel)}</text>',
           f'<text x="14" y="{(y0 + y1) / 2}" text-anchor="middle" '
           f'transform="rotate(-90 14 {(y0 + y1) / 2})">{escape(ylabel)}</text>']
    for v, anchor, x in ((xlo, "start", x0), (xhi, "end", x1)):
        out.append(f'<text x="{x}" y="{y0 + 14}" text-anchor="{anchor}">{v:.4g}</text>')
    for v, y in ((ylo, y0), (yhi, y1)):
        out.append(f'<text x="{x0 - 4}" y="{y + 4}" text-anchor="end">{v:.3g}</text>')
    return out


def univariate_svg(grid, values, counts, edges, anchor, label):
    xlo, xhi = float(grid[0]), float(grid[-1])
    ylo, yhi = min(float(values.min()), 0.0), max(float(values.max()), 0.0)
    if yhi - ylo < 1e-12:
        ylo, yhi = ylo - 1.0, yhi + 1.0
    x0, x1, y0, y1 = _PAD, _W - _PAD, _H - _PAD, _PAD
    body = []
    top = counts.max() if counts.size and counts.max() > 0 else 1
    for c, a, b in zip(counts, edges[:-1], edges[1:]):
        xa, xb = _scale(np.array([a, b]), xlo, xhi, x0, x1)
        hgt = (y0 - y1) * 0.4 * c / top
        body.append(f'<rect x="{xa:.2f}" y="{y0 - hgt:.2f}" width="{max(xb - xa, 0):.2f}" '
                    f'height="{hgt:.2f}" fill="#ccd" stroke="white"/>')
    yz = _scale(np.array(0.0), ylo, yhi, y0, y1)
    body.append(f'<line x1="{x0}" y1="{yz:.2f}" x2="{x1}" y2="{yz:.2f}" stroke="grey" '
                'stroke-dasharray="4 3"/>')
    xa = _scale(np.array(anchor), xlo, xhi, x0, x1)
    body.append(f'<line x1="{xa:.2f}" y1="{y0}" x2="{xa:.2f}" y2="{y1}" stroke="grey" '
                'stroke-dasharray="2 3"/>')
    px = _scale(grid, xlo, xhi, x0, x1)
    py = _scale(values, ylo, yhi, y0, y1)
    pts = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(px, py))
    body.append(f'<polyline points="{pts}" fill="none" stroke="#c03" stroke-width="2"/>')
    body += _axes(xlo, xhi, ylo, yhi, label, "logit contribution")
    return _svg(body, label)


def _diverging(v, vmax):
    s = 0.0 if vmax <= 0 else float(np.clip(v / vmax, -1, 1))
    if s >= 0:
        return f"rgb(255,{int(255 * (1 - s))},{int(255 * (1 - s))})"
    return f"rgb({int(255 * (1 + s))},{int(255 * (1 + s))},255)"


def bivariate_svg(gi, gj, Z, labels):
    x0, x1, y0, y1 = _PAD, _W - _PAD, _H - _PAD, _PAD
    n, m = Z.shape
    cw, ch = (x1 - x0) / n, (y0 - y1) / m
    vmax = float(np.max(np.abs(Z)))
    body = []
    for a in range(n):
        for b in range(m):
            body.append(f'<rect x="{x0 + a * cw:.2f}" y="{y0 - (b + 1) * ch:.2f}" '
                        f'width="{cw + 0.05:.2f}" height="{ch + 0.05:.2f}" '
                        f'fill="{_diverging(Z[a, b], vmax)}"/>')
    body += _axes(gi[0], gi[-1], gj[0], gj[-1], labels[0], labels[1])
    body.append(f'<text x="{x1}" y="{y1 - 6}" text-anchor="end">max |contribution| {vmax:.3g}</text>')
    return _svg(body, " x ".join(labels))


# -- export -------------------------------------------------------------------

def _write_rows(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows([repr(float(v)) for v in r] for r in rows)


def export_nomogram(prn, norm, X_train, outdir, n_grid=N_GRID, n_grid_pair=N_GRID_PAIR,
                    n_bins=N_BINS):
    """Write plot data (CSV) and an SVG chart for every subnetwork of ``prn``.

    ``X_train`` holds the training rows in original units; it fixes the grid
    ranges and the histograms. Returns the path of the ``index.json`` listing.
    """
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    X_train = np.atleast_2d(np.asarray(X_train, dtype=float))
    names = _names(prn)
    lo, hi = X_train.min(axis=0), X_train.max(axis=0)
    index = {"global_bias": prn.global_bias, "terms": []}
    for sub in prn.subnetworks:
        stem = _term_file(sub)
        label = "*".join(names[i] for i in sub.inputs)
        entry = {"label": label, "inputs": list(sub.inputs), "data": stem + ".csv",
                 "svg": stem + ".svg"}
        if len(sub.inputs) == 1:
            i = sub.inputs[0]
            grid, vals = univariate_curve(prn, sub, norm, lo[i], hi[i], n_grid)
            _write_rows(outdir / entry["data"], [names[i], "contribution"], zip(grid, vals))
            counts, edges = np.histogram(X_train[:, i], bins=n_bins, range=(lo[i], hi[i]))
            entry["histogram"] = stem + "_hist.csv"
            _write_rows(outdir / entry["histogram"], ["bin_low", "bin_high", "count"],
                        zip(edges[:-1], edges[1:], counts))
            svg = univariate_svg(grid, vals, counts, edges, norm.center[i], label)
            entry["anchor"] = float(norm.center[i])
        else:
            i, j = sub.inputs
            gi, gj, Z = bivariate_surface(prn, sub, norm, [(lo[i], hi[i]), (lo[j], hi[j])],
                                          n_grid_pair)
            A, B = np.meshgrid(gi, gj, indexing="ij")
            _write_rows(outdir / entry["data"], [names[i], names[j], "contribution"],
                        zip(A.ravel(), B.ravel(), Z.ravel()))
            svg = bivariate_svg(gi, gj, Z, (names[i], names[j]))
        (outdir / entry["svg"]).write_text(svg)
        index["terms"].append(entry)
    (outdir / "index.json").write_text(json.dumps(index, indent=2))
    return outdir / "index.json"


def explain_record(prn, norm, record):
    """Score one record given in original units and itemize its logit.

    Returns a JSON-ready dict with the probability, the total logit, the
    global bias and the per-term contributions in decreasing magnitude.
    """
    record = np.asarray(record, dtype=float).reshape(-1)
    if record.shape != (prn.d,):
        raise ValueError(f"expected {prn.d} values, got {record.size}")
    if not np.all(np.isfinite(record)):
        raise ValueError("record contains non-finite values")
    p, contrib = prn_forward(prn, norm.apply(record))
    labels = prn.labels()
    order = sorted(range(len(contrib)), key=lambda k: -abs(contrib[k]))
    return {"probability": p,
            "logit": prn.global_bias + float(np.sum(contrib)),
            "global_bias": prn.global_bias,
            "contributions": [{"term": labels[k], "inputs": list(prn.subnetworks[k].inputs),
                               "value": float(contrib[k])} for k in order]}
