"""Diagnostic plots and the balance report.

Five SVG figures cover the standard visual checks on a matching solution:
score distributions by group and phase (histogram + kernel density), a
per-unit score dotplot split by match status, histograms of the term
standardized differences before/after, a per-covariate dotplot of the
same, and a parallel-line plot where terms whose imbalance grew after
matching stand out with a heavier stroke.

Rendering is a pure function of its inputs: the same model, data, and
result produce byte-identical files.  Panels that must be visually
comparable share axis ranges.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .balance import L1Result, OmnibusResult, SampleSizes, TermBalance
from .dataset import Dataset
from .errors import DegenerateData
from .matcher import MATCHED, MatchResult
from .propensity import PropensityModel
from .rng import SplitMix64
from .svgplot import CONTROL_COLOR, TREATED_COLOR, Figure, Panel

KDE_GRID_POINTS = 256
_JITTER_SEED = 0x9D07B5E1

PLOT_FILES = (
    "fig_ps_hist.svg",
    "fig_ps_dot.svg",
    "fig_smd_hist.svg",
    "fig_smd_dot.svg",
    "fig_smd_line.svg",
)


@dataclass(frozen=True)
class OutcomeSummary:
    """Two-group mean difference on a passthrough outcome column."""

    name: str
    mean_t: float
    mean_c: float
    diff: float
    d: float
    phase: str


def _weighted_quantile(values: np.ndarray, weights: np.ndarray, q: float) -> float:
    order = np.argsort(values, kind="stable")
    v = values[order]
    cum = np.cumsum(weights[order])
    cum /= cum[-1]
    idx = int(np.searchsorted(cum, q, side="left"))
    return float(v[min(idx, v.size - 1)])


def kde(values, weights=None) -> tuple[np.ndarray, np.ndarray]:
    """Gaussian kernel density estimate on a 256-point grid.

    Bandwidth is Silverman's rule, 0.9 * min(sd, IQR/1.34) * n^(-1/5);
    when the IQR is zero but the data still have spread, the sd alone sets
    the bandwidth.  The grid spans the data range extended by three
    bandwidths.  Weights, when given, are normalized and the effective
    sample size replaces n.  Raises :class:`DegenerateData` when all
    values are equal.
    """
    values = np.asarray(values, dtype=float)
    n = values.size
    if n < 2 or np.all(values == values[0]):
        raise DegenerateData("kernel density needs at least two distinct values")
    if weights is None:
        sd = float(np.std(values, ddof=1))
        q25, q75 = np.percentile(values, [25.0, 75.0])
        iqr = float(q75 - q25)
        n_eff = float(n)
        w = np.full(n, 1.0 / n)
    else:
        w = np.asarray(weights, dtype=float)
        w = w / float(np.sum(w))
        mean = float(np.sum(w * values))
        sd = math.sqrt(float(np.sum(w * (values - mean) ** 2)))
        iqr = _weighted_quantile(values, w, 0.75) - _weighted_quantile(values, w, 0.25)
        n_eff = 1.0 / float(np.sum(w**2))
    if sd == 0.0:
        raise DegenerateData("kernel density needs positive spread")
    spread = min(sd, iqr / 1.34)
    if spread == 0.0:
        spread = sd
    h = 0.9 * spread * n_eff ** (-0.2)
    lo = float(np.min(values)) - 3.0 * h
    hi = float(np.max(values)) + 3.0 * h
    grid = np.linspace(lo, hi, KDE_GRID_POINTS)
    z = (grid[:, None] - values[None, :]) / h
    density = (np.exp(-0.5 * z**2) @ w) / (h * math.sqrt(2.0 * math.pi))
    return grid, density


def _histogram_density(values, edges, weights=None):
    counts, _ = np.histogram(values, bins=edges, weights=weights)
    total = float(np.sum(counts))
    widths = np.diff(edges)
    if total <= 0.0:
        return np.zeros(len(widths))
    return counts / (total * widths)


def _sturges(n: int) -> int:
    return max(1, math.ceil(math.log2(max(n, 1))) + 1)


def _draw_hist_panel(panel: Panel, edges, density, color):
    for j in range(len(density)):
        if density[j] <= 0:
            continue
        x_left = panel.px(edges[j])
        x_right = panel.px(edges[j + 1])
        y_top = panel.py(density[j])
        panel.fig.rect(
            x_left,
            y_top,
            x_right - x_left,
            panel.py(0.0) - y_top,
            fill=color,
            opacity=0.55,
            stroke="#ffffff",
            cls="bar",
        )


def _render_ps_hist(model, ds, result, path):
    scores = model.scores
    weights = np.asarray(result.weights, dtype=float)
    bins = _sturges(ds.n)
    lo, hi = float(np.min(scores)), float(np.max(scores))
    if hi <= lo:
        hi = lo + 1e-9
    edges = np.linspace(lo, hi, bins + 1)

    t, c = ds.treated_mask, ds.control_mask
    series = [
        ("treated, before", scores[t], None, TREATED_COLOR),
        ("control, before", scores[c], None, CONTROL_COLOR),
        ("treated, after", scores[t & (weights > 0)], weights[t & (weights > 0)], TREATED_COLOR),
        ("control, after", scores[c & (weights > 0)], weights[c & (weights > 0)], CONTROL_COLOR),
    ]

    prepared = []
    y_max = 1e-9
    x_lo, x_hi = edges[0], edges[-1]
    for title, vals, wts, color in series:
        density = _histogram_density(vals, edges, wts) if vals.size else np.zeros(bins)
        curve = None
        if vals.size >= 2:
            try:
                curve = kde(vals, wts)
            except DegenerateData:
                curve = None
        if density.size:
            y_max = max(y_max, float(np.max(density, initial=0.0)))
        if curve is not None:
            y_max = max(y_max, float(np.max(curve[1])))
            x_lo = min(x_lo, float(curve[0][0]))
            x_hi = max(x_hi, float(curve[0][-1]))
        prepared.append((title, vals, density, curve, color))

    fig = Figure("Propensity score distributions by group, before and after matching")
    xlim = (x_lo, x_hi)
    ylim = (0.0, y_max * 1.08)
    slots = [(70, 70), (440, 70), (70, 330), (440, 330)]
    for (title, vals, density, curve, color), (px0, py0) in zip(prepared, slots):
        panel = Panel(fig, px0, py0, 300, 200, xlim, ylim, title=title)
        if vals.size == 0:
            fig.text(px0 + 150, py0 + 100, "no units", size=12, anchor="middle", cls="message")
        else:
            _draw_hist_panel(panel, edges, density, color)
            if curve is not None:
                pts = [(panel.px(x), panel.py(y)) for x, y in zip(*curve)]
                fig.polyline(pts, color="#000000", width=1.2, cls="kde")
        panel.x_ticks()
        panel.y_ticks(labels=px0 == 70)
        panel.close()
    fig.text(400, 580, "propensity score", size=12, anchor="middle")
    fig.save(path)


def _render_ps_dot(model, ds, result, path):
    scores = model.scores
    weights = np.asarray(result.weights, dtype=float)
    disposition = result.disposition
    t = ds.treated_mask

    lanes = [
        ("treated, matched", [i for i in range(ds.n) if t[i] and disposition[i] == MATCHED]),
        ("treated, unmatched", [i for i in range(ds.n) if t[i] and disposition[i] != MATCHED]),
        ("control, matched", [i for i in range(ds.n) if not t[i] and disposition[i] == MATCHED]),
        ("control, unmatched", [i for i in range(ds.n) if not t[i] and disposition[i] != MATCHED]),
    ]

    matched_weights = weights[weights > 0]
    size_by_weight = matched_weights.size > 0 and bool(np.any(matched_weights != 1.0))
    w_max = float(np.max(matched_weights)) if matched_weights.size else 1.0

    fig = Figure("Unit propensity scores by group and match status")
    lo, hi = float(np.min(scores)), float(np.max(scores))
    pad = (hi - lo) * 0.05 or 0.05
    panel = Panel(fig, 170, 70, 560, 460, (lo - pad, hi + pad), (0.0, 4.0))
    jitter = SplitMix64(_JITTER_SEED)
    for lane_no, (label, rows) in enumerate(lanes):
        y_center = 3.5 - lane_no
        fig.text(160, panel.py(y_center) + 4, label, size=11, anchor="end")
        for i in rows:
            y = y_center + jitter.uniform(-0.28, 0.28)
            matched = disposition[i] == MATCHED
            if matched and size_by_weight:
                # Dot area proportional to weight: radius scales with sqrt(w).
                r = 3.0 * math.sqrt(weights[i])
            elif matched:
                r = 3.0
            else:
                r = 2.0
            color = (TREATED_COLOR if t[i] else CONTROL_COLOR) if matched else "#999999"
            fig.circle(panel.px(scores[i]), panel.py(y), r, fill=color, opacity=0.6, cls="unit")
    panel.x_ticks()
    panel.close()
    fig.text(450, 570, "propensity score", size=12, anchor="middle")
    fig.save(path)


def _finite_smds(terms: list[TermBalance]) -> list[float]:
    return [t.smd for t in terms if not math.isnan(t.smd)]


def _render_smd_hist(terms_before, terms_after, path):
    fig = Figure("Standardized mean differences of all terms, before and after matching")
    before = _finite_smds(terms_before)
    after = _finite_smds(terms_after)
    pooled = before + after
    if not pooled:
        fig.message("no covariate terms to plot")
        fig.save(path)
        return
    lo, hi = min(pooled), max(pooled)
    if hi <= lo:
        lo, hi = lo - 0.1, hi + 0.1
    bins = _sturges(max(len(before), len(after)))
    edges = np.linspace(lo, hi, bins + 1)

    prepared = []
    y_max = 1e-9
    x_lo, x_hi = lo, hi
    for title, vals in (("before matching", before), ("after matching", after)):
        arr = np.asarray(vals)
        density = _histogram_density(arr, edges) if arr.size else np.zeros(bins)
        curve = None
        if arr.size >= 2:
            try:
                curve = kde(arr)
            except DegenerateData:
                curve = None
        y_max = max(y_max, float(np.max(density, initial=0.0)))
        if curve is not None:
            y_max = max(y_max, float(np.max(curve[1])))
            x_lo = min(x_lo, float(curve[0][0]))
            x_hi = max(x_hi, float(curve[0][-1]))
        prepared.append((title, arr, density, curve))

    xlim, ylim = (x_lo, x_hi), (0.0, y_max * 1.08)
    for (title, arr, density, curve), px0 in zip(prepared, (70, 440)):
        panel = Panel(fig, px0, 90, 300, 420, xlim, ylim, title=title)
        if arr.size == 0:
            fig.text(px0 + 150, 300, "no terms", size=12, anchor="middle", cls="message")
        else:
            _draw_hist_panel(panel, edges, density, "#7f8c9b")
            if curve is not None:
                pts = [(panel.px(x), panel.py(y)) for x, y in zip(*curve)]
                fig.polyline(pts, color="#000000", width=1.2, cls="kde")
        zero_x = panel.px(0.0)
        if xlim[0] <= 0.0 <= xlim[1]:
            fig.line(zero_x, 90, zero_x, 510, color="#aaaaaa", width=0.8, dash="4,3")
        panel.x_ticks()
        panel.y_ticks(labels=px0 == 70)
        panel.close()
    fig.text(400, 570, "standardized mean difference", size=12, anchor="middle")
    fig.save(path)


def _dataset_order(ds: Dataset, terms: list[TermBalance]) -> list[TermBalance]:
    base = [t for t in terms if t.kind == "linear"]
    position = {name: k for k, name in enumerate(ds.column_order)}
    return sorted(base, key=lambda t: position.get(t.term, len(position)))


def _render_smd_dot(ds, terms_before, terms_after, path):
    fig = Figure("Covariate standardized mean differences before vs after matching")
    before = _dataset_order(ds, terms_before)
    after_by_name = {t.term: t for t in terms_after}
    rows = [(t, after_by_name.get(t.term)) for t in before]
    rows = [(b, a) for b, a in rows if not math.isnan(b.smd) or (a and not math.isnan(a.smd))]
    if not rows:
        fig.message("no covariate terms to plot")
        fig.save(path)
        return
    magnitudes = [abs(v.smd) for b, a in rows for v in (b, a) if v and not math.isnan(v.smd)]
    m = max(max(magnitudes), 0.3) * 1.15
    panel = Panel(fig, 220, 70, 520, 460, (-m, m), (0.0, float(len(rows))))
    zero_x = panel.px(0.0)
    fig.line(zero_x, 70, zero_x, 530, color="#aaaaaa", width=0.8, dash="4,3")
    for k, (b, a) in enumerate(rows):
        y = panel.py(len(rows) - k - 0.5)
        fig.text(210, y + 4, b.term, size=11, anchor="end")
        if not math.isnan(b.smd):
            fig.circle(panel.px(b.smd), y, 4.0, fill="#888888", cls="before-dot")
        if a is not None and not math.isnan(a.smd):
            fig.circle(panel.px(a.smd), y, 4.0, fill=TREATED_COLOR, cls="after-dot")
    panel.x_ticks()
    panel.close()
    fig.circle(600, 40, 4.0, fill="#888888")
    fig.text(610, 44, "before", size=11)
    fig.circle(670, 40, 4.0, fill=TREATED_COLOR)
    fig.text(680, 44, "after", size=11)
    fig.text(480, 570, "standardized mean difference", size=12, anchor="middle")
    fig.save(path)


def _render_smd_line(terms_before, terms_after, path):
    fig = Figure("Absolute standardized differences, before to after matching")
    after_by_name = {t.term: t for t in terms_after}
    pairs = []
    for b in terms_before:
        a = after_by_name.get(b.term)
        if a is None or math.isnan(b.smd) or math.isnan(a.smd):
            continue
        pairs.append((abs(b.smd), abs(a.smd)))
    if not pairs:
        fig.message("no covariate terms to plot")
        fig.save(path)
        return
    top = max(max(b, a) for b, a in pairs) * 1.1 or 0.1
    panel = Panel(fig, 140, 70, 520, 460, (0.0, 1.0), (0.0, top))
    x_b, x_a = panel.px(0.25), panel.px(0.75)
    for b, a in pairs:
        # Terms whose imbalance grew after matching get a heavier stroke.
        if a > b:
            fig.line(x_b, panel.py(b), x_a, panel.py(a), color="#000000", width=2.8, cls="term-line worse")
        else:
            fig.line(x_b, panel.py(b), x_a, panel.py(a), color="#777777", width=1.0, cls="term-line")
    fig.text(x_b, 555, "before", size=12, anchor="middle")
    fig.text(x_a, 555, "after", size=12, anchor="middle")
    panel.y_ticks()
    panel.close()
    fig.text(30, 300, "|SMD|", size=12)
    fig.save(path)


def render_plots(
    model: PropensityModel,
    ds: Dataset,
    result: MatchResult,
    terms_before: list[TermBalance],
    terms_after: list[TermBalance],
    outdir,
) -> list[str]:
    """Render the five diagnostic figures into ``outdir``.

    Returns the file paths.  Identical inputs produce byte-identical SVGs.
    """
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    paths = [outdir / name for name in PLOT_FILES]
    _render_ps_hist(model, ds, result, paths[0])
    _render_ps_dot(model, ds, result, paths[1])
    _render_smd_hist(terms_before, terms_after, paths[2])
    _render_smd_dot(ds, terms_before, terms_after, paths[3])
    _render_smd_line(terms_before, terms_after, paths[4])
    return [str(p) for p in paths]


def format_sample_sizes(sizes: SampleSizes) -> str:
    rows = [
        ("total", "total"),
        ("matched", "matched"),
        ("discarded (support)", "discarded_support"),
        ("unmatched (no match)", "unmatched_no_match"),
        ("unused control", "unused_control"),
    ]
    lines = [f"  {'':24s}{'treated':>9s}{'control':>9s}"]
    for label, attr in rows:
        t = getattr(sizes.treated, attr)
        c = getattr(sizes.control, attr)
        lines.append(f"  {label:24s}{t:>9d}{c:>9d}")
    return "\n".join(lines)


def format_omnibus(label: str, res: OmnibusResult) -> str:
    if not res.computed:
        return f"  {label}: not computed (test is unavailable for weighted data)"
    return f"  {label}: chi2({res.df}) = {res.statistic:.4f}, p = {res.p_value:.4f}"


def format_l1(l1: L1Result) -> str:
    return (
        f"  before matching: {l1.l1_before:.6f}\n"
        f"  after matching:  {l1.l1_after:.6f}"
    )


def format_outcome(summary: OutcomeSummary) -> str:
    return (
        f"  {summary.name} ({summary.phase}): mean treated = {summary.mean_t:.6g}, "
        f"mean control = {summary.mean_c:.6g}, diff = {summary.diff:.6g}, d = {summary.d:.4f}"
    )


def _term_table_lines(terms: list[TermBalance]) -> list[str]:
    width = max([len(t.term) for t in terms], default=4)
    width = max(width, 4)
    lines = [f"  {'term':<{width}s} {'mean_t':>12s} {'mean_c':>12s} {'sd_c':>12s} {'smd':>10s}"]
    for t in terms:
        smd = "0-variance" if t.zero_variance else f"{t.smd:10.4f}"
        lines.append(
            f"  {t.term:<{width}s} {t.mean_t:12.5g} {t.mean_c:12.5g} {t.sd_c:12.5g} {smd:>10s}"
        )
    return lines


def render_report(
    outdir,
    *,
    model: PropensityModel,
    sizes: SampleSizes,
    omnibus_before: OmnibusResult,
    omnibus_after: OmnibusResult,
    l1: L1Result,
    terms_before: list[TermBalance],
    terms_after: list[TermBalance],
    condensed: list[TermBalance],
    threshold: float = 0.25,
    condensed_only: bool = False,
    pairs: tuple = (),
    outcome_summaries: tuple = (),
) -> str:
    """Write report.txt, balance_terms.csv, and pairs.csv; return the text.

    With ``condensed_only`` the full per-term tables are left out of the
    text report (the CSV keeps every term either way).
    """
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)

    lines = ["Propensity score matching report", "=" * 32, ""]
    lines.append(
        "Note: standardized mean differences in both phases divide by the"
    )
    lines.append("unmatched control-group standard deviation (n-1 denominator).")
    lines.append("")
    lines.append("Sample sizes")
    lines.append("-" * 12)
    lines.append(format_sample_sizes(sizes))
    lines.append("")
    lines.append("Propensity model")
    lines.append("-" * 16)
    status = "converged" if model.converged else "did not converge"
    lines.append(
        f"  {status} after {model.iterations} iterations, "
        f"log-likelihood = {model.log_likelihood:.6f}"
    )
    names = ("(intercept)", *model.covariate_names)
    for name, coef in zip(names, model.coefficients):
        lines.append(f"  {name:<20s} {coef:14.8f}")
    lines.append("")
    lines.append("Omnibus imbalance test")
    lines.append("-" * 22)
    lines.append(format_omnibus("before matching", omnibus_before))
    lines.append(format_omnibus("after matching ", omnibus_after))
    lines.append("")
    lines.append("Multivariate L1 imbalance")
    lines.append("-" * 25)
    lines.append(format_l1(l1))
    lines.append("")
    lines.append(f"Large imbalances after matching (|SMD| > {threshold:g}, largest first)")
    lines.append("-" * 55)
    if condensed:
        lines.extend(_term_table_lines(condensed))
    else:
        lines.append("  none: no terms exceed the threshold")
    lines.append("")
    if not condensed_only:
        lines.append("Term balance before matching")
        lines.append("-" * 28)
        lines.extend(_term_table_lines(terms_before))
        lines.append("")
        lines.append("Term balance after matching")
        lines.append("-" * 27)
        lines.extend(_term_table_lines(terms_after))
        lines.append("")
    if outcome_summaries:
        lines.append("Outcome summaries")
        lines.append("-" * 17)
        for summary in outcome_summaries:
            lines.append(format_outcome(summary))
        lines.append("")
    text = "\n".join(lines)

    with open(outdir / "report.txt", "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)

    after_by_name = {t.term: t for t in terms_after}
    with open(outdir / "balance_terms.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(
            [
                "term",
                "kind",
                "sd_c",
                "mean_t_before",
                "mean_c_before",
                "smd_before",
                "mean_t_after",
                "mean_c_after",
                "smd_after",
            ]
        )
        for t in terms_before:
            a = after_by_name.get(t.term)
            writer.writerow(
                [
                    t.term,
                    t.kind,
                    format(t.sd_c, ".17g"),
                    format(t.mean_t, ".17g"),
                    format(t.mean_c, ".17g"),
                    format(t.smd, ".17g"),
                    format(a.mean_t, ".17g") if a else "",
                    format(a.mean_c, ".17g") if a else "",
                    format(a.smd, ".17g") if a else "",
                ]
            )

    with open(outdir / "pairs.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["treated_id", "control_id"])
        for treated_id, control_id in pairs:
            writer.writerow([treated_id, control_id])

    return text
