"""Command-line entry point: ``symmetrize <subcommand> --config run.ini``."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Sequence

from .circuit import CircuitError, parse_circuit, transpile_to_native
from .harness import (
    ConfigError,
    base_noise,
    build_circuit,
    default_n_physical,
    emit_report,
    load_config_file,
    run_experiment,
    run_shot_sweep,
    sweep_csv,
    train_threshold,
)
from .simulate import bitstring, sample_shots, shots_to_histogram, simulate_ideal, simulate_noisy, stream_rng
from .voting import VotingModel, VotingModelError, g_table_csv, small_g

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _common(p: argparse.ArgumentParser, config: bool = True) -> None:
    if config:
        p.add_argument("--config", required=True, help="experiment config (INI-style key = value)")
        p.add_argument("--seed", type=int, help="master seed; overrides [run] seed")
    p.add_argument("--out", help="output directory (default: stdout for tables, [output] dir for reports)")
    p.add_argument("--format", choices=("json", "csv"), help="output format")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="symmetrize", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="ideal and noisy distribution of one circuit on the identity mapping")
    _common(p)
    p.add_argument("--shots", type=int, help="also sample this many shots")

    p = sub.add_parser("symmetrize", help="full pipeline: symmetries, variants, noise, aggregation")
    _common(p)

    p = sub.add_parser("vote-theory", help="single-draw vote distribution g for given h, m, t")
    _common(p, config=False)
    p.add_argument("--h", type=_float_list, required=True, help="comma-separated probabilities")
    p.add_argument("--m", type=int, required=True, help="number of variants")
    p.add_argument("--t", type=_int_list, help="thresholds (default: 1..m)")

    p = sub.add_parser("train-threshold", help="choose the initial vote threshold on training circuits")
    _common(p)
    p.add_argument("--train-circuit", action="append", default=[], metavar="FILE",
                   help="training circuit file (repeatable); default: the config's circuit")

    p = sub.add_parser("sweep-shots", help="target probability vs shots per variant")
    _common(p)
    p.add_argument("--grid", type=_int_list, required=True, help="comma-separated shot counts")
    p.add_argument("--replicas", type=int, default=10)
    return parser


def _write(text: str, out: str | None, name: str) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    (path / name).write_text(text)
    print(path / name)


def _cmd_simulate(args, cfg) -> None:
    c = build_circuit(cfg)
    n_phys = cfg.n_physical or default_n_physical(c.n_qubits)
    nm = base_noise(cfg, n_phys, cfg.seed)
    ideal = simulate_ideal(c)
    noisy = simulate_noisy(c, list(range(c.n_qubits)), nm)
    rows = {"ideal": ideal, "noisy": noisy}
    if args.shots:
        rows["sampled"] = shots_to_histogram(sample_shots(noisy, args.shots, stream_rng(cfg.seed, "shots")))
    fmt = args.format or "json"
    if fmt == "json":
        doc = {k: {bitstring(o, h.n_bits): v for o, v in h.entries.items()} for k, h in rows.items()}
        _write(json.dumps(doc, indent=2, sort_keys=True) + "\n", args.out, "simulate.json")
    else:
        lines = ["source,bitstring,frequency"]
        for k, h in rows.items():
            lines += [f"{k},{bitstring(o, h.n_bits)},{v!r}" for o, v in h.entries.items()]
        _write("\n".join(lines) + "\n", args.out, "simulate.csv")


def _cmd_vote_theory(args) -> None:
    ts = args.t or list(range(1, args.m + 1))
    if (args.format or "csv") == "csv":
        _write(g_table_csv(args.h, args.m, ts), args.out, "g_table.csv")
    else:
        doc = {"h": args.h, "m": args.m, "g": {str(t): list(small_g(VotingModel(tuple(args.h), args.m, t))) for t in ts}}
        _write(json.dumps(doc, indent=2, sort_keys=True) + "\n", args.out, "g_table.json")


def _cmd_train(args, cfg) -> None:
    circuits = []
    for f in args.train_circuit:
        try:
            c = parse_circuit(Path(f).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read training circuit {f}: {exc}") from None
        circuits.append(c if c.is_native else transpile_to_native(c))
    if not circuits:
        circuits = [build_circuit(cfg)]
    res = train_threshold(cfg, circuits)
    if (args.format or "json") == "json":
        doc = {"recommended": res.recommended, "scores": {str(t): s for t, s in res.scores.items()}}
        _write(json.dumps(doc, indent=2, sort_keys=True) + "\n", args.out, "threshold.json")
    else:
        lines = ["threshold,mean_fidelity"] + [f"{t},{s!r}" for t, s in res.scores.items()]
        _write("\n".join(lines) + f"\n# recommended,{res.recommended}\n", args.out, "threshold.csv")


def _cmd_sweep(args, cfg) -> None:
    rows = run_shot_sweep(cfg, args.grid, args.replicas)
    if (args.format or "csv") == "csv":
        _write(sweep_csv(rows), args.out, "sweep.csv")
    else:
        doc = [
            {"shots": r.shots, "vote_mean": r.vote_mean, "vote_std": r.vote_std,
             "average_mean": r.average_mean, "average_std": r.average_std,
             "unsymmetrized_mean": r.unsymmetrized_mean}
            for r in rows
        ]
        _write(json.dumps(doc, indent=2, sort_keys=True) + "\n", args.out, "sweep.json")


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "vote-theory":
            try:
                _cmd_vote_theory(args)
            except VotingModelError as exc:
                raise ConfigError(str(exc)) from None
            return EXIT_OK
        cfg = load_config_file(args.config, seed=args.seed, out_dir=args.out, fmt=args.format)
        if args.command == "simulate":
            _cmd_simulate(args, cfg)
        elif args.command == "symmetrize":
            for path in emit_report(run_experiment(cfg), cfg.out_dir, cfg.fmt):
                print(path)
        elif args.command == "train-threshold":
            _cmd_train(args, cfg)
        elif args.command == "sweep-shots":
            _cmd_sweep(args, cfg)
    except (ConfigError, CircuitError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
