"""Plot-ready CSV and text outputs."""
from __future__ import annotations

import csv
from pathlib import Path

import numpy as np


def fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.12g}"
    return str(value)


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for v in row])
    return path


def run_stem(name: str, alpha: float) -> str:
    return f"{name}_alpha{alpha:.4f}"


def write_trajectory(traj, out_dir, stem):
    """Write ``<stem>_states.csv`` and ``<stem>_norms.csv``; return both paths."""
    out_dir = Path(out_dir)

    def state_rows():
        for t, st in zip(traj.times, traj.states):
            for i, x in enumerate(st.grid):
                yield (t, x, *st.data[:, i])

    states = write_csv(out_dir / f"{stem}_states.csv",
                       ["t", "x", "rho1", "u1", "rho2", "u2"], state_rows())
    norms = write_csv(out_dir / f"{stem}_norms.csv",
                      ["t", "norm_class1", "norm_class2"],
                      ((t, *n) for t, n in zip(traj.times, traj.norms)))
    paths = [states, norms]
    if traj.route_states:
        def route_rows():
            for t, st in zip(traj.times, traj.route_states):
                for i, x in enumerate(st.grid):
                    yield (t, x, *st.data[:, i])
        paths.append(write_csv(out_dir / f"{stem}_route_states.csv",
                               ["t", "x", "rho1", "u1", "rho2", "u2"], route_rows()))
    return paths


def write_stability(report, out_dir, stem):
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    text = out_dir / f"{stem}_report.txt"
    text.write_text(report.to_text())
    eig = write_csv(out_dir / f"{stem}_eigenvalues.csv", ["index", "eigenvalue"],
                    ((i, _complex_str(v)) for i, v in enumerate(report.eigenvalues, 1)))
    cert = write_csv(
        out_dir / f"{stem}_certificate.csv",
        ["mu", "min_eig_sym", "max_eig_sym", "pos_def", "neg_def", "min_re_eig",
         "max_re_eig"],
        report.certificate.table)
    row = report.csv_row()
    summary = write_csv(out_dir / f"{stem}_stability.csv", list(row), [list(row.values())])
    return [text, eig, cert, summary]


def _complex_str(v):
    v = complex(v)
    return fmt(v.real) if v.imag == 0 else f"{v.real:.12g}{v.imag:+.12g}j"
