"""Command-line harness: ``littlecarleson <subcommand> [--config PATH] [--out DIR] [--seed INT] [--threads INT]``.

Exit codes: 0 when every check of the subcommand passes, 1 when one fails,
2 for usage errors (bad flags or an invalid configuration file).
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import acceptance as acc
from .decomposition import amplified_upper, build_partition, good_bad_split, good_part_bound_check
from .dyadic import ROOT, TORUS
from .errors import CarlesonError
from .exceptional import threshold
from .fourier import integer_table, rearrangement
from .growth import growth_experiment, halton_cells
from .hausdorff_young import heldout_decay

SUBCOMMANDS = ("coeffs", "hy", "partition", "operators", "exceptional", "growth", "all")


class UsageError(Exception):
    pass


def load_config(path: str | None, seed: int | None) -> acc.RunConfig:
    data = {}
    if path:
        text = Path(path).read_text()
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise UsageError(f"{path}: line {e.lineno}, column {e.colno}: {e.msg}") from e
        if not isinstance(data, dict):
            raise UsageError(f"{path}: the top level must be a JSON object")
    if seed is not None:
        data["seed"] = seed
    try:
        return acc.RunConfig.from_dict(data)
    except (KeyError, ValueError, TypeError, CarlesonError) as e:
        raise UsageError(f"invalid configuration: {e}") from e


class Writer:
    """Writes artifacts in a fixed order and collects metadata."""

    def __init__(self, out: Path, cfg: acc.RunConfig, command: str):
        self.out = out
        self.cfg = cfg
        self.command = command
        self.files: list[str] = []
        self.constants: list[dict] = []
        self.checks: list[dict] = []
        out.mkdir(parents=True, exist_ok=True)

    def write(self, name: str, text: str) -> None:
        (self.out / name).write_text(text, encoding="utf-8", newline="")
        self.files.append(name)

    def result(self, res: acc.CriterionResult) -> None:
        for name, text in sorted(res.tables.items()):
            self.write(name, text)
        self.constants.extend(res.constants)
        self.checks.append({"criterion": res.number, "title": res.title, "passed": bool(res.passed),
                            "metrics": _jsonable(res.metrics)})
        print(res.line())

    def finish(self) -> bool:
        ok = all(c["passed"] for c in self.checks)
        meta = {"command": self.command, "config": self.cfg.to_dict(), "config_sha256": self.cfg.digest(),
                "constants": self.constants, "checks": self.checks, "files": self.files, "passed": ok}
        (self.out / "metadata.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
        return ok


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, (np.integer, np.bool_)):
        return obj.item()
    return obj


# subcommands ---------------------------------------------------------------------------


def cmd_coeffs(cfg, w: Writer) -> None:
    corpus = acc.corpus_of(cfg)
    rows = []
    for f in corpus:
        tab = integer_table(f, TORUS, cfg.K)
        w.write(f"coeffs_{f.name}.csv", tab.to_csv())
        dec = rearrangement(tab, cfg.K)
        r = np.arange(1, dec.size)
        absk = (r + 1) // 2
        for beta in cfg.betas:
            sel = absk >= 2
            rows.append((f.name, beta, float((dec[1:][sel] * np.log(absk[sel]) ** beta).max()),
                         heldout_decay(f, TORUS, beta, cfg.K)))
    w.write("rearrangement_decay.csv", acc.table(["member", "beta", "max_decay", "heldout_decay"], rows))
    w.result(acc.criterion_1(cfg, corpus))


def cmd_hy(cfg, w: Writer) -> None:
    corpus = acc.corpus_of(cfg)
    w.result(acc.criterion_3(cfg, corpus))
    w.result(acc.criterion_4(cfg, corpus))
    w.result(acc.criterion_9(cfg))


def cmd_partition(cfg, w: Writer) -> None:
    corpus = acc.corpus_of(cfg)
    for f in corpus:
        top = amplified_upper(f, ROOT, cfg.n_max, cfg.m_trunc)
        if top == 0:
            continue
        part = build_partition(f, ROOT, cfg.n_max, 2 * top, cfg.n_max, cfg.m_trunc)
        w.write(f"partition_{f.name}.csv", part.to_csv())
        chk = good_part_bound_check(f, part, good_bad_split(f, part))
        w.constants.append(acc.constant("K_good", chk["K"], "decomposition", "good_part_bound_check", f.name))
    w.result(acc.criterion_2(cfg, corpus))


def cmd_operators(cfg, w: Writer) -> None:
    w.result(acc.criterion_5(cfg, acc.corpus_of(cfg)))


def cmd_exceptional(cfg, w: Writer) -> None:
    corpus = acc.corpus_of(cfg)
    w.result(acc.criterion_6(cfg, corpus, acc.PipelineCache()))


def cmd_growth(cfg, w: Writer) -> None:
    corpus = acc.corpus_of(cfg)
    cache = acc.PipelineCache()
    if all(threshold(f, cfg.eps, cfg.delta) == 0 for f in corpus):
        rows = []
        for f in corpus:
            cells = halton_cells(f.n_cells, cfg.x_samples)
            run = growth_experiment(f, 0.0, cells, cfg.n_grid, cfg.m_trunc)
            w.write(f"growth_{f.name}_summary.csv", run.summary_csv())
            rows.extend((f.name, s["n"], s["max_direct"]) for s in run.summary())
        w.write("growth_zero.csv", acc.table(["member", "n", "max_direct"], rows))
        return
    sweep = acc.growth_sweep(cfg, corpus, cache)
    w.write("growth_steps.csv", acc.growth_steps_csv(sweep))
    w.result(acc.criterion_7(cfg, sweep))
    w.result(acc.criterion_8(cfg, sweep))


def cmd_all(cfg, w: Writer) -> None:
    results, extra = acc.run_all(cfg)
    for name, text in sorted(extra.items()):
        w.write(name, text)
    for res in results:
        w.result(res)


COMMANDS = {"coeffs": cmd_coeffs, "hy": cmd_hy, "partition": cmd_partition, "operators": cmd_operators,
            "exceptional": cmd_exceptional, "growth": cmd_growth, "all": cmd_all}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="littlecarleson", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=SUBCOMMANDS)
    p.add_argument("--config", help="JSON configuration file (fields default to the embedded values)")
    p.add_argument("--out", default="out", help="output directory")
    p.add_argument("--seed", type=int, help="override the configured seed")
    p.add_argument("--threads", type=int, default=1, help="BLAS thread cap for numerical kernels")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 2 if e.code else 0
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    if args.threads < 1:
        print("error: --threads must be positive", file=sys.stderr)
        return 2
    os.environ.setdefault("OMP_NUM_THREADS", str(args.threads))
    try:
        cfg = load_config(args.config, args.seed)
    except (UsageError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    writer = Writer(Path(args.out), cfg, args.command)
    try:
        COMMANDS[args.command](cfg, writer)
    except CarlesonError as e:
        diag = getattr(e, "diagnostics", None)
        print(f"{args.command}: {type(e).__name__}: {e}" + (f" {diag}" if diag else ""), file=sys.stderr)
        writer.checks.append({"criterion": None, "title": args.command, "passed": False,
                              "metrics": {"error": str(e)}})
        writer.finish()
        return 1
    return 0 if writer.finish() else 1


if __name__ == "__main__":
    sys.exit(main())
