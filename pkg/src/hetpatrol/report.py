"""Turn sweep records into Pareto, bootstrap and hypothesis-test tables plus an SVG plot."""

from __future__ import annotations

import csv
import warnings
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence, Union
from xml.sax.saxutils import escape

import numpy as np

from .analysis import (CLASS_ORDER, BootstrapSummary, DistributionClass, bootstrap, distribution_class,
                       fisher_exact, label_medians, mann_whitney, normalize, pareto_front, ObjectivePoint)


def label_text(label) -> str:
    alg, cls, pm = label
    return f"{alg}/{cls}/{'pm' if pm else 'nopm'}"


@dataclass
class AnalysisReport:
    medians: dict
    front: list
    knee: tuple
    boot: BootstrapSummary
    tests: list[dict]


def hypothesis_tests(records: Sequence[dict]) -> list[dict]:
    """Searcher Skew against All Search.

    Mann-Whitney on TTF (successful trials only) and on idleness per
    ``(map, N, algorithm, pm)``; Fisher on success per communication range
    for PSO.
    """
    groups: dict = defaultdict(list)
    for r in records:
        cls = distribution_class(r["N"], r["k"])
        groups[(r["map"], r["N"], r["algorithm"], r["pm"], cls)].append(r)
    out = []
    cells = sorted({k[:4] for k in groups}, key=str)
    for m, n, alg, pm in cells:
        ss = groups.get((m, n, alg, pm, DistributionClass.SEARCH_SKEW), [])
        al = groups.get((m, n, alg, pm, DistributionClass.ALL_SEARCH), [])
        if not ss or not al:
            continue
        tag = f"{m}/N={n}/{alg}/{'pm' if pm else 'nopm'}"
        a = [r["ttf"] for r in ss if r["ttf"] is not None]
        b = [r["ttf"] for r in al if r["ttf"] is not None]
        if a and b:
            res = mann_whitney(a, b)
            out.append(_mw_row(f"ttf:{tag}:SearchSkew_vs_AllSearch", len(a), len(b), res))
        res = mann_whitney([r["avg_idleness"] for r in ss], [r["avg_idleness"] for r in al])
        out.append(_mw_row(f"idleness:{tag}:SearchSkew_vs_AllSearch", len(ss), len(al), res))
        if alg != "pso":
            continue
        ranges = sorted({r["comm_range"] for r in ss + al})
        for rng in ranges:
            sa = [r for r in ss if r["comm_range"] == rng]
            sb = [r for r in al if r["comm_range"] == rng]
            if not sa or not sb:
                continue
            ya, yb = sum(r["success"] for r in sa), sum(r["success"] for r in sb)
            table = [[ya, len(sa) - ya], [yb, len(sb) - yb]]
            try:
                fr = fisher_exact(table)
            except ValueError:
                continue  # a zero margin, nothing to test
            out.append({"comparison": f"success:{tag}/range={rng}:SearchSkew_vs_AllSearch",
                        "test": "fisher_exact", "n_a": len(sa), "n_b": len(sb),
                        "statistic": fr.odds_ratio, "p_value": fr.p, "effect": fr.odds_ratio,
                        "effect_kind": "sample_odds_ratio"})
    return out


def _mw_row(name, na, nb, res):
    return {"comparison": name, "test": "mann_whitney", "n_a": na, "n_b": nb, "statistic": res.u,
            "p_value": res.p, "effect": res.r, "effect_kind": "rank_biserial"}


def _label_key(label):
    alg, cls, pm = label
    return (alg, CLASS_ORDER.index(DistributionClass(cls)), not pm)


def analyze(records: Sequence[dict], resamples: int = 10_000, boot_seed: int = 0) -> AnalysisReport:
    if not records:
        raise ValueError("no records to analyse")
    points = normalize(records)
    medians = label_medians(points)
    labels = sorted(medians, key=_label_key)
    meds = [ObjectivePoint(*medians[lab], lab) for lab in labels]
    pr = pareto_front(meds)
    boot = bootstrap(points, resamples, np.random.Generator(np.random.Philox(boot_seed)))
    return AnalysisReport(medians={lab: medians[lab] for lab in labels},
                          front=[p.label for p in pr.front], knee=pr.knee.label, boot=boot,
                          tests=hypothesis_tests(records))


def write_report(rep: AnalysisReport, out_dir: Union[str, Path]) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    front = set(rep.front)
    with open(out / "pareto.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["algorithm", "class", "pm", "median_idleness_norm", "median_ttf_norm", "on_front", "knee"])
        for lab, (x, y) in rep.medians.items():
            w.writerow([lab[0], lab[1], _b(lab[2]), f"{x:.6f}", f"{y:.6f}", _b(lab in front), _b(lab == rep.knee)])
    with open(out / "bootstrap.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["algorithm", "class", "pm", "knee_count", "knee_frequency", "pareto_count",
                    "pareto_frequency", "resamples"])
        kf, pf = rep.boot.knee_frequency, rep.boot.pareto_frequency
        for lab in sorted(rep.boot.labels, key=_label_key):
            w.writerow([lab[0], lab[1], _b(lab[2]), rep.boot.knee_counts[lab], f"{kf[lab]:.6f}",
                        rep.boot.pareto_counts[lab], f"{pf[lab]:.6f}", rep.boot.resamples])
    with open(out / "tests.csv", "w", newline="") as fh:
        fields = ["comparison", "test", "n_a", "n_b", "statistic", "p_value", "effect", "effect_kind"]
        w = csv.DictWriter(fh, fields, lineterminator="\n")
        w.writeheader()
        for row in rep.tests:
            w.writerow({k: (_num(v) if isinstance(v, float) else v) for k, v in row.items()})
    (out / "pareto.svg").write_text(pareto_svg(rep))


def _b(flag) -> str:
    return "true" if flag else "false"


def _num(v: float) -> str:
    return "inf" if v == float("inf") else f"{v:.6g}"


_COLORS = {"pso": "#1f77b4", "hcpso": "#d62728", "ecoli": "#2ca02c"}


def pareto_svg(rep: AnalysisReport, size: int = 480) -> str:
    """Scatter of label medians with the front drawn as a step line and the knee ringed."""
    pad = 50
    span = size - 2 * pad

    def xy(x, y):
        return pad + x * span, size - pad - y * span

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
             f'font-family="sans-serif" font-size="11">',
             f'<rect x="{pad}" y="{pad}" width="{span}" height="{span}" fill="none" stroke="#888"/>',
             f'<text x="{size / 2}" y="{size - 12}" text-anchor="middle">normalised idleness</text>',
             f'<text x="14" y="{size / 2}" text-anchor="middle" '
             f'transform="rotate(-90 14 {size / 2})">normalised time to find</text>']
    for t in (0.0, 0.5, 1.0):
        x0, y0 = xy(t, 0)
        parts.append(f'<text x="{x0:.1f}" y="{y0 + 15:.1f}" text-anchor="middle">{t:g}</text>')
        x1, y1 = xy(0, t)
        parts.append(f'<text x="{x1 - 6:.1f}" y="{y1 + 4:.1f}" text-anchor="end">{t:g}</text>')
    fpts = sorted(rep.medians[lab] for lab in rep.front)
    if fpts:
        path = " ".join(f"{a:.1f},{b:.1f}" for a, b in (xy(*p) for p in fpts))
        parts.append(f'<polyline points="{path}" fill="none" stroke="#444" stroke-dasharray="4 3"/>')
    for lab, (x, y) in rep.medians.items():
        cx, cy = xy(x, y)
        color = _COLORS.get(lab[0], "#555")
        fill = color if lab[2] else "white"
        parts.append(f'<circle cx="{cx:.1f}" cy="{cy:.1f}" r="4" fill="{fill}" stroke="{color}">'
                     f'<title>{escape(label_text(lab))}</title></circle>')
    kx, ky = xy(*rep.medians[rep.knee])
    parts.append(f'<circle cx="{kx:.1f}" cy="{ky:.1f}" r="9" fill="none" stroke="black" stroke-width="1.5"/>')
    parts.append(f'<text x="{kx + 11:.1f}" y="{ky - 6:.1f}">knee: {escape(label_text(rep.knee))}</text>')
    parts.append("</svg>\n")
    return "\n".join(parts)


def analyze_file(records_path, out_dir, resamples: int = 10_000, boot_seed: int = 0) -> AnalysisReport:
    from .experiments import read_records

    with warnings.catch_warnings():
        warnings.simplefilter("default")
        rep = analyze(read_records(records_path), resamples, boot_seed)
    write_report(rep, out_dir)
    return rep
