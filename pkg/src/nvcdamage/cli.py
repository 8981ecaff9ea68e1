"""Command line entry point: ``nvcdamage run|preset|sweep``."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import __version__
from .config import ConfigError, load_config, serialize_config
from .driver import (SWEEP_AXES, ScenarioConfig, SolverFailure, TensileRecord, run_tensile,
                     sweep, sweep_config)
from .fem.mechanics import EquilibriumError
from .fem.transport import TransportError
from .gurson import StressUpdateError
from .io import RunManifest, write_curve_csv
from .presets import PRESET_NAMES, SCENARIOS, SWEEPS, sweep_base
from .validation import TOLERANCE, validate_point

EXIT_OK, EXIT_UNKNOWN_PRESET, EXIT_SOLVER, EXIT_CONFIG = 0, 1, 2, 3

def _summary(record: TensileRecord) -> dict[str, object]:
    return {
        "uts_MPa": record.uts / 1e6,
        "e_f": record.e_f,
        "failed": record.failed,
        "failure_reason": record.failure_reason,
        "final_strain": record.final_strain,
        "wall_time_s": round(record.wall_time, 3),
        "max_hydrogen_cv": record.max_H_cv,
    }


def _emit(out: Path, runs: list[tuple[str, ScenarioConfig, TensileRecord]], preset: str | None) -> None:
    out.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest(version=__version__, preset=preset)
    for stem, cfg, rec in runs:
        name = f"{stem}.csv"
        write_curve_csv(rec, out / name)
        manifest.outputs.append(name)
        manifest.configs[name] = serialize_config(cfg)
        manifest.results[name] = _summary(rec)
        print(f"{name}: UTS {rec.uts / 1e6:.1f} MPa, "
              f"e_f {'n/a' if rec.e_f is None else f'{100 * rec.e_f:.1f}%'}")
    manifest.write(out / "manifest.json")


def _value_label(axis: str, value: float) -> str:
    return f"{axis}_{value:g}".replace("+", "")


def _run_sweep(base: ScenarioConfig, axis: str, values, out: Path, preset: str | None) -> None:
    records = sweep(base, axis, values)
    runs = [(_value_label(axis, v), sweep_config(base, axis, v), r)
            for v, r in zip(values, records)]
    _emit(out, runs, preset)


def _validate(out: Path) -> int:
    checks = validate_point()
    out.mkdir(parents=True, exist_ok=True)
    lines = ["path,rel_error,max_step_error,final_epbar,final_f,passed"]
    for i, c in enumerate(checks):
        lines.append(f"{i},{c.rel_error!r},{c.max_step_error!r},{c.final_epbar!r},"
                     f"{c.final_f!r},{int(c.passed)}")
    (out / "validate_point.csv").write_text("\n".join(lines) + "\n", encoding="ascii")
    manifest = RunManifest(version=__version__, preset="validate-point",
                           outputs=["validate_point.csv"])
    worst = max(c.rel_error for c in checks)
    manifest.results["validate_point.csv"] = {"worst_rel_error": worst, "tolerance": TOLERANCE,
                                              "passed": int(sum(c.passed for c in checks)),
                                              "paths": len(checks)}
    manifest.write(out / "manifest.json")
    ok = all(c.passed for c in checks)
    print(f"validate-point: {sum(c.passed for c in checks)}/{len(checks)} paths within "
          f"{100 * TOLERANCE:g}% (worst {100 * worst:.3f}%)")
    return EXIT_OK if ok else EXIT_SOLVER


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nvcdamage", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="simulate one scenario file")
    run.add_argument("--config", required=True, type=Path)
    run.add_argument("--out", type=Path, default=Path("out"))
    pre = sub.add_parser("preset", help=f"run a named scenario: {', '.join(PRESET_NAMES)}")
    pre.add_argument("name")
    pre.add_argument("--out", type=Path, default=Path("out"))
    sw = sub.add_parser("sweep", help="vary one parameter of a scenario file")
    sw.add_argument("--config", required=True, type=Path)
    sw.add_argument("--axis", required=True, choices=SWEEP_AXES)
    sw.add_argument("--values", required=True,
                    help="comma separated, SI units (Cc via C_rel, B in m3/mol, C_total in mol/m3)")
    sw.add_argument("--out", type=Path, default=Path("out"))
    return ap


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "run":
            cfg = load_config(args.config)
            _emit(args.out, [(args.config.stem, cfg, run_tensile(cfg))], None)
        elif args.command == "sweep":
            cfg = load_config(args.config)
            try:
                values = [float(v) for v in args.values.split(",") if v.strip()]
            except ValueError:
                raise ConfigError(f"--values must be numbers, got {args.values!r}") from None
            _run_sweep(cfg, args.axis, values, args.out, None)
        else:
            name = args.name
            if name not in PRESET_NAMES:
                ap.print_usage(sys.stderr)
                print(f"unknown preset {name!r}; choose from {', '.join(PRESET_NAMES)}",
                      file=sys.stderr)
                return EXIT_UNKNOWN_PRESET
            if name == "validate-point":
                return _validate(args.out)
            if name in SCENARIOS:
                cfg = SCENARIOS[name]()
                _emit(args.out, [(name, cfg, run_tensile(cfg))], name)
            else:
                axis, values = SWEEPS[name]
                _run_sweep(sweep_base(), axis, values, args.out, name)
    except (SolverFailure, EquilibriumError, StressUpdateError, TransportError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (ValueError, OSError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
