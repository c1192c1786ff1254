"""Command-line front end: load, estimate, match, diagnose, export.

Every analysis option is a flag; a config file (``--config``, one
``key = value`` per line with flag names as keys) can supply any of them,
with explicit flags taking precedence.  The resolved options are echoed
into ``run_config.txt`` in the output directory so a run can be repeated
exactly.  Outputs carry no timestamps: the same config and seed produce a
byte-identical output directory.

Exit codes: 0 success, 1 input/config, 2 estimation, 3 matching, 4 io.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import balance as bal
from . import diagnostics as diag
from .config import parse_config_file, parse_name_list
from .dataset import ColumnRoles, Dataset, export, load_csv, write_csv
from .errors import EstimationError, InputError, MatchingError, PsmatchError
from .matcher import CALIPER_MODES, MatchResult, MatchSpec, match
from .propensity import fit_logistic
from .simgen import load_sim_spec, simulate

DISCARD_FLAGS = {
    "none": "none",
    "treated": "treated_only",
    "control": "control_only",
    "both": "both",
}
EXPORT_FLAGS = {"full": "full", "matched": "matched_only"}


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved options for one matching run."""

    input: str
    treatment: str
    covariates: tuple[str, ...]
    out: str
    balance_only: tuple[str, ...] = ()
    outcomes: tuple[str, ...] = ()
    unit_id: str | None = None
    ratio: int = 1
    replace: bool = False
    caliper: float | None = None
    caliper_mode: str = "random_within"
    discard: str = "none"
    seed: int = 0
    report: str = "full"
    export: str = "full"

    def match_spec(self) -> MatchSpec:
        return MatchSpec(
            ratio=self.ratio,
            replace=self.replace,
            caliper=self.caliper,
            discard=self.discard,
            caliper_mode=self.caliper_mode,
            seed=self.seed,
        )


def outcome_summaries(
    ds: Dataset, result: MatchResult, names: tuple[str, ...]
) -> tuple[diag.OutcomeSummary, ...]:
    """Two-group mean differences on outcome columns, before and matched.

    The matched phase uses the matching weights; d divides by the
    unmatched control-group SD in both phases, mirroring the term tables.
    """
    weights = np.asarray(result.weights, dtype=float)
    t, c = ds.treated_mask, ds.control_mask
    out = []
    for name in names:
        y = ds.numeric_extra(name)
        sd_c = float(np.std(y[c], ddof=1)) if ds.n_control > 1 else 0.0
        for phase, w in (("unmatched", np.ones(ds.n)), ("matched", weights)):
            wt, wc = w[t], w[c]
            mean_t = float(np.sum(wt * y[t]) / np.sum(wt)) if np.sum(wt) > 0 else float("nan")
            mean_c = float(np.sum(wc * y[c]) / np.sum(wc)) if np.sum(wc) > 0 else float("nan")
            diff = mean_t - mean_c
            d = diff / sd_c if sd_c > 0 else float("nan")
            out.append(
                diag.OutcomeSummary(
                    name=name, mean_t=mean_t, mean_c=mean_c, diff=diff, d=d, phase=phase
                )
            )
    return tuple(out)


def _write_run_config(config: RunConfig, outdir: Path) -> None:
    # The output directory path itself is deliberately not echoed, so two
    # runs into different directories stay byte-identical.
    lines = [
        f"input = {config.input}",
        f"treatment = {config.treatment}",
        f"covariates = {','.join(config.covariates)}",
        f"balance-only = {','.join(config.balance_only)}",
        f"outcomes = {','.join(config.outcomes)}",
        f"id = {config.unit_id or ''}",
        f"ratio = {config.ratio}",
        f"replace = {'true' if config.replace else 'false'}",
        f"caliper = {'' if config.caliper is None else format(config.caliper, 'g')}",
        f"caliper-mode = {config.caliper_mode}",
        f"discard = {config.discard}",
        f"seed = {config.seed}",
        f"report = {config.report}",
        f"export = {config.export}",
    ]
    with open(outdir / "run_config.txt", "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def run(config: RunConfig) -> int:
    """Execute the five-step pipeline and write all artifacts."""
    roles = ColumnRoles(
        treatment=config.treatment,
        covariates=config.covariates,
        balance_only=config.balance_only,
        unit_id=config.unit_id,
    )
    ds = load_csv(config.input, roles)
    model = fit_logistic(ds)
    result = match(model, ds, config.match_spec())

    terms_before = bal.smd_table(ds, None, "before", expand=True)
    terms_after = bal.smd_table(ds, result, "after", expand=True)
    condensed = bal.condensed_table(terms_after)
    omnibus_before = bal.omnibus_d2(ds, None, "before")
    omnibus_after = bal.omnibus_d2(ds, result, "after")
    l1 = bal.l1_measure(ds, result)
    sizes = bal.sample_size_table(ds, result)
    summaries = outcome_summaries(ds, result, config.outcomes)

    outdir = Path(config.out)
    outdir.mkdir(parents=True, exist_ok=True)
    diag.render_plots(model, ds, result, terms_before, terms_after, outdir)
    diag.render_report(
        outdir,
        model=model,
        sizes=sizes,
        omnibus_before=omnibus_before,
        omnibus_after=omnibus_after,
        l1=l1,
        terms_before=terms_before,
        terms_after=terms_after,
        condensed=condensed,
        condensed_only=config.report == "condensed",
        pairs=result.pairs,
        outcome_summaries=summaries,
    )
    export(ds, model, result, EXPORT_FLAGS[config.export], outdir / "export.csv")
    _write_run_config(config, outdir)

    print("Sample sizes")
    print(diag.format_sample_sizes(sizes))
    print()
    print("Omnibus imbalance test")
    print(diag.format_omnibus("before matching", omnibus_before))
    print(diag.format_omnibus("after matching ", omnibus_after))
    print()
    print("Multivariate L1 imbalance")
    print(diag.format_l1(l1))
    if summaries:
        print()
        print("Outcome summaries")
        for summary in summaries:
            print(diag.format_outcome(summary))
    return 0


def _build_match_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="psmatch",
        description="Propensity score matching with balance diagnostics.",
        add_help=True,
    )
    parser.add_argument("--config", help="config file (key = value lines; flags override)")
    parser.add_argument("--input", help="input CSV file")
    parser.add_argument("--treatment", help="binary 0/1 treatment column")
    parser.add_argument("--covariates", help="comma-separated estimation covariates")
    parser.add_argument("--balance-only", dest="balance_only",
                        help="comma-separated balance-only columns")
    parser.add_argument("--outcomes", help="comma-separated outcome columns to summarize")
    parser.add_argument("--id", dest="unit_id", help="unit id column")
    parser.add_argument("--ratio", help="controls per treated unit (k:1)")
    parser.add_argument("--replace", action="store_const", const="true",
                        help="match with replacement")
    parser.add_argument("--caliper", help="caliper in SDs of the logit of the score")
    parser.add_argument("--caliper-mode", dest="caliper_mode",
                        help="random_within or nearest_within")
    parser.add_argument("--discard", help="common-support discarding: none|treated|control|both")
    parser.add_argument("--seed", help="seed for all random choices")
    parser.add_argument("--report", help="report verbosity: full|condensed")
    parser.add_argument("--export", help="dataset export mode: full|matched")
    parser.add_argument("--out", help="output directory")
    return parser


def _resolve_config(args: argparse.Namespace) -> RunConfig:
    options: dict[str, str] = {}
    if args.config:
        options.update(parse_config_file(args.config))
    for key in (
        "input", "treatment", "covariates", "balance_only", "outcomes", "unit_id",
        "ratio", "replace", "caliper", "caliper_mode", "discard", "seed",
        "report", "export", "out",
    ):
        value = getattr(args, key)
        if value is not None:
            options[key] = value
    if "id" in options:
        # Config files use the flag name "id"; an explicit --id flag wins.
        options.setdefault("unit_id", options.pop("id"))

    for required in ("input", "treatment", "covariates", "out"):
        if not options.get(required):
            raise InputError(f"missing required option --{required}")

    def pick(key: str, default: str) -> str:
        return options.get(key, default) or default

    try:
        ratio = int(pick("ratio", "1"))
        seed = int(pick("seed", "0"))
    except ValueError as exc:
        raise InputError(f"bad integer option: {exc}") from None
    caliper_text = options.get("caliper", "").strip()
    if caliper_text in ("", "none"):
        caliper = None
    else:
        try:
            caliper = float(caliper_text)
        except ValueError:
            raise InputError(f"bad caliper value {caliper_text!r}") from None

    replace_text = pick("replace", "false").lower()
    if replace_text not in ("true", "false"):
        raise InputError(f"replace must be true or false, got {replace_text!r}")

    discard = pick("discard", "none")
    if discard not in DISCARD_FLAGS:
        raise InputError(f"discard must be one of {sorted(DISCARD_FLAGS)}, got {discard!r}")
    report = pick("report", "full")
    if report not in ("full", "condensed"):
        raise InputError(f"report must be full or condensed, got {report!r}")
    export_mode = pick("export", "full")
    if export_mode not in EXPORT_FLAGS:
        raise InputError(f"export must be full or matched, got {export_mode!r}")
    caliper_mode = options.get("caliper_mode")
    if caliper_mode is not None and caliper is None:
        raise InputError("caliper-mode requires a caliper")
    caliper_mode = caliper_mode or "random_within"
    if caliper_mode not in CALIPER_MODES:
        raise InputError(f"caliper-mode must be one of {CALIPER_MODES}, got {caliper_mode!r}")

    return RunConfig(
        input=options["input"],
        treatment=options["treatment"],
        covariates=parse_name_list(options["covariates"]),
        out=options["out"],
        balance_only=parse_name_list(options.get("balance_only", "")),
        outcomes=parse_name_list(options.get("outcomes", "")),
        unit_id=options.get("unit_id") or None,
        ratio=ratio,
        replace=replace_text == "true",
        caliper=caliper,
        caliper_mode=caliper_mode,
        discard=DISCARD_FLAGS[discard],
        seed=seed,
        report=report,
        export=export_mode,
    )


def _run_simulate(argv: list[str]) -> int:
    parser = argparse.ArgumentParser(
        prog="psmatch simulate",
        description="Generate a synthetic confounded dataset.",
    )
    parser.add_argument("--spec", required=True, help="simulation spec config file")
    parser.add_argument("--out", required=True, help="output CSV path")
    args = parser.parse_args(argv)
    ds = simulate(load_sim_spec(args.spec))
    write_csv(ds, args.out)
    print(f"wrote {ds.n} units ({ds.n_treated} treated, {ds.n_control} control) to {args.out}")
    return 0


def main(argv: list[str] | None = None) -> int:
    if argv is None:
        argv = sys.argv[1:]
    try:
        if argv and argv[0] == "simulate":
            return _run_simulate(argv[1:])
        args = _build_match_parser().parse_args(argv)
        return run(_resolve_config(args))
    except InputError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except EstimationError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except MatchingError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: IoError: {exc}", file=sys.stderr)
        return 4
    except PsmatchError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
