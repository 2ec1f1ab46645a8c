"""Command line entry point: ``recipe-rl <command> --target ks,L,a,b [options]``.

Commands: train, oracle, random-search, hill-climb, recommend.
Settings resolve as command-line flag > ``--config`` JSON file > default.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .env import RecipeEnv
from .grid import GridState, ParameterGrid, default_paper_grid, load_grid
from .learner import (Hyperparameters, extract_recommendation, save_qtable, train)
from .oracle import brute_force, hill_climb, random_search
from .predictor import ColorQuad, ObjectiveSpec, ReferenceSurrogate, load_table

log = logging.getLogger("recipe_rl")

COMMANDS = ("train", "oracle", "random-search", "hill-climb", "recommend")
CURVE_HEADER = ("episode", "best_f", "episode_reward", "blocked_steps")

DEFAULTS = {
    "grid": None,
    "predictor": "reference",
    "target": None,
    "weights": None,
    "episodes": 100,
    "steps": 1000,
    "alpha": 0.05,
    "gamma": 0.8,
    "epsilon": 0.88,
    "seed": 0,
    "seeds": None,
    "jobs": 1,
    "budget": 100000,
    "start": None,
    "verify": False,
    "report": None,
    "curve": None,
    "qtable": None,
    "figure": None,
}
OUTPUT_KEYS = ("report", "curve", "qtable", "figure")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    grid_path: str | None
    predictor: str
    target: ColorQuad
    weights: tuple[float, ...]
    hp: Hyperparameters
    seeds: list[int] | None = None
    jobs: int = 1
    budget: int = 100000
    start: tuple[float, ...] | None = None
    verify: bool = False
    outputs: dict[str, str | None] = field(default_factory=dict)
    grid: ParameterGrid | None = None

    def echo(self) -> dict:
        """Every setting that influences results; output paths are left out."""
        out = {
            "command": self.command,
            "grid": self.grid.fingerprint(),
            "predictor": self.predictor,
            "target": list(self.target),
            "weights": list(self.weights),
            "hyperparameters": self.hp.to_dict(),
        }
        if self.seeds is not None:
            out["seeds"] = self.seeds
        if self.command == "random-search":
            out["budget"] = self.budget
        if self.command == "hill-climb":
            out["start"] = list(self.start) if self.start else None
        return out


def _floats(flag: str, text, count: int | None = None) -> tuple[float, ...]:
    if isinstance(text, (list, tuple)):
        parts = list(text)
    else:
        parts = str(text).split(",")
    try:
        vals = tuple(float(p) for p in parts)
    except ValueError:
        raise ConfigError(f"{flag}: expected comma-separated numbers, got {text!r}") from None
    if count is not None and len(vals) != count:
        raise ConfigError(f"{flag}: expected {count} values, got {len(vals)}")
    return vals


def _seed_range(text) -> list[int]:
    if isinstance(text, list):
        return [int(s) for s in text]
    lo, sep, hi = str(text).partition("..")
    try:
        lo_i, hi_i = int(lo), int(hi)
    except ValueError:
        raise ConfigError(f"--seeds: expected a..b, got {text!r}") from None
    if not sep or hi_i < lo_i or lo_i < 0:
        raise ConfigError(f"--seeds: expected a..b with 0 <= a <= b, got {text!r}")
    return list(range(lo_i, hi_i + 1))


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--config", help="JSON file with settings (flags take precedence)")
    common.add_argument("--target", help="target color k/s,L,a,b (required)")
    common.add_argument("--weights", help="objective weights w1,w2,w3,w4")
    common.add_argument("--grid", help="grid JSON file; default is the built-in C/T/pH/t grid")
    common.add_argument("--predictor", help="reference | table:<csv path>")
    common.add_argument("--episodes", type=int)
    common.add_argument("--steps", type=int)
    common.add_argument("--alpha", type=float)
    common.add_argument("--gamma", type=float)
    common.add_argument("--epsilon", type=float)
    common.add_argument("--seed", type=int)
    common.add_argument("--seeds", help="seed sweep a..b (inclusive)")
    common.add_argument("--jobs", type=int, help="parallel workers for a seed sweep")
    common.add_argument("--budget", type=int, help="random-search sample count")
    common.add_argument("--start", help="hill-climb start as raw values, e.g. 0,0,1,1")
    common.add_argument("--verify", action="store_true",
                        help="recommend: compare the result with exhaustive search")
    common.add_argument("--report", help="report JSON path")
    common.add_argument("--curve", help="learning-curve CSV path")
    common.add_argument("--qtable", help="Q-table output path")
    common.add_argument("--figure", help="PNG figure path")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="recipe-rl", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def parse_config(argv: list[str] | None = None) -> tuple[RunConfig, bool]:
    """Resolve flags, config file and defaults into a RunConfig.

    Raises ConfigError naming the offending flag or field.
    """
    args = vars(build_parser().parse_args(argv))
    command = args.pop("command")
    verbose = args.pop("verbose", False)
    settings = dict(DEFAULTS)
    config_path = args.pop("config", None)
    if config_path:
        try:
            with open(config_path) as fh:
                from_file = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"--config: cannot read {config_path}: {exc}") from None
        if not isinstance(from_file, dict):
            raise ConfigError(f"--config: {config_path} must hold a JSON object")
        unknown = set(from_file) - set(DEFAULTS)
        if unknown:
            raise ConfigError(f"--config: unknown field(s) {sorted(unknown)}")
        settings.update(from_file)
    settings.update(args)

    if settings["target"] is None:
        raise ConfigError("--target: required (four comma-separated reals k/s,L,a,b)")
    target = ColorQuad(*_floats("--target", settings["target"], 4))
    weights = (_floats("--weights", settings["weights"], 4)
               if settings["weights"] is not None else (1.0, 1.0, 1.0, 1.0))
    try:
        ObjectiveSpec(target, weights)
    except ValueError as exc:
        raise ConfigError(f"--target/--weights: {exc}") from None

    for flag in ("alpha", "gamma", "epsilon"):
        v = settings[flag]
        if not isinstance(v, (int, float)) or not 0.0 <= v <= 1.0:
            raise ConfigError(f"--{flag}: must lie in [0, 1], got {v}")
    for flag, low in (("episodes", 1), ("steps", 0), ("jobs", 1), ("budget", 1), ("seed", 0)):
        v = settings[flag]
        if not isinstance(v, int) or v < low:
            raise ConfigError(f"--{flag}: must be an integer >= {low}, got {v}")
    try:
        hp = Hyperparameters(settings["episodes"], settings["steps"], float(settings["alpha"]),
                             float(settings["gamma"]), float(settings["epsilon"]), settings["seed"])
    except ValueError as exc:
        raise ConfigError(f"--seed: {exc}") from None

    predictor = str(settings["predictor"])
    if predictor != "reference" and not predictor.startswith("table:"):
        raise ConfigError(f"--predictor: expected 'reference' or 'table:<path>', got {predictor!r}")

    grid_path = settings["grid"]
    try:
        grid = load_grid(grid_path) if grid_path else default_paper_grid()
    except (OSError, ValueError) as exc:
        raise ConfigError(f"--grid: {exc}") from None
    if predictor == "reference" and grid.ndim != 4:
        raise ConfigError("--predictor: the reference surrogate needs a 4-dimensional C,T,pH,t grid")

    seeds = _seed_range(settings["seeds"]) if settings["seeds"] is not None else None
    start = (_floats("--start", settings["start"], grid.ndim)
             if settings["start"] is not None else None)

    outputs = {k: settings[k] for k in OUTPUT_KEYS}
    for key, path in outputs.items():
        if path and not Path(path).resolve().parent.is_dir():
            raise ConfigError(f"--{key}: directory of {path} does not exist")

    cfg = RunConfig(command, grid_path, predictor, target, weights, hp, seeds,
                    settings["jobs"], settings["budget"], start, bool(settings["verify"]),
                    outputs, grid)
    return cfg, verbose


def make_predictor(cfg: RunConfig):
    if cfg.predictor == "reference":
        return ReferenceSurrogate()
    return load_table(cfg.predictor.split(":", 1)[1], cfg.grid)


class Outputs:
    """Writes files atomically; on failure every file written so far is removed."""

    def __init__(self):
        self.written: list[Path] = []

    def write_text(self, path, text: str) -> None:
        path = Path(path)
        fd, tmp = tempfile.mkstemp(dir=path.resolve().parent, prefix=f".{path.name}.")
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
        self.written.append(path)

    def write_with(self, path, writer) -> None:
        """``writer(tmp_path)`` produces the file; it is then moved into place."""
        path = Path(path)
        fd, tmp = tempfile.mkstemp(dir=path.resolve().parent, prefix=f".{path.name}.",
                                   suffix=path.suffix)
        os.close(fd)
        try:
            writer(tmp)
            os.replace(tmp, path)
        finally:
            if os.path.exists(tmp):
                os.unlink(tmp)
        self.written.append(path)

    def rollback(self) -> None:
        for path in self.written:
            path.unlink(missing_ok=True)
        self.written.clear()


def report_json(payload: dict, wall_time: float) -> str:
    payload = dict(payload)
    payload["wall_time"] = round(wall_time, 6)
    return json.dumps(payload, indent=2) + "\n"


def curve_csv(curve) -> str:
    lines = [",".join(CURVE_HEADER)]
    for r in curve:
        lines.append(f"{r.episode},{r.best_f!r},{r.episode_reward!r},{r.blocked_steps}")
    return "\n".join(lines) + "\n"


def _train_one(grid, predictor, spec, hp):
    env = RecipeEnv(grid, predictor, spec)
    qtable, report = train(env, hp)
    extract_recommendation(qtable, env, report)
    return qtable, report


def _sweep_worker(args):
    # Q-tables stay in the worker; only the report crosses the process boundary
    return _train_one(*args)[1]


def _suffixed(path, seed: int) -> Path:
    p = Path(path)
    return p.with_name(f"{p.stem}.seed{seed}{p.suffix}")


def run_train(cfg: RunConfig, predictor, spec, out: Outputs):
    if cfg.seeds is None:
        qtable, report = _train_one(cfg.grid, predictor, spec, cfg.hp)
        if cfg.outputs["curve"]:
            out.write_text(cfg.outputs["curve"], curve_csv(report.curve))
        if cfg.outputs["qtable"]:
            out.write_with(cfg.outputs["qtable"], lambda p: save_qtable(qtable, p, cfg.hp))
        if cfg.outputs["figure"]:
            from .plotting import learning_curves
            out.write_with(cfg.outputs["figure"],
                           lambda p: learning_curves({f"seed {cfg.hp.seed}": report.curve}, p))
        return {"config": cfg.echo(), "result": report.to_dict()}, report.wall_time, [report]

    hps = [Hyperparameters(**{**cfg.hp.to_dict(), "seed": s}) for s in cfg.seeds]
    jobs = [(cfg.grid, predictor, spec, hp) for hp in hps]
    if cfg.jobs > 1:
        with ProcessPoolExecutor(cfg.jobs) as pool:
            reports = list(pool.map(_sweep_worker, jobs))
    else:
        reports = [_sweep_worker(j) for j in jobs]
    if cfg.outputs["curve"]:
        for s, r in zip(cfg.seeds, reports):
            out.write_text(_suffixed(cfg.outputs["curve"], s), curve_csv(r.curve))
    if cfg.outputs["figure"]:
        from .plotting import learning_curves
        out.write_with(cfg.outputs["figure"], lambda p: learning_curves(
            {f"seed {s}": r.curve for s, r in zip(cfg.seeds, reports)}, p))
    best = min(reports, key=lambda r: (r.best_objective, r.best_state.index))
    payload = {
        "config": cfg.echo(),
        "runs": [{"seed": s, **r.to_dict()} for s, r in zip(cfg.seeds, reports)],
        "summary": {"best_state": best.best_state.as_dict(),
                    "best_objective": best.best_objective,
                    "best_seed": best.hyperparameters.seed},
    }
    return payload, sum(r.wall_time for r in reports), reports


def run_oracle(cfg: RunConfig, predictor, spec, out: Outputs):
    result = brute_force(cfg.grid, predictor, spec)
    if cfg.outputs["figure"]:
        from .plotting import objective_histogram
        out.write_with(cfg.outputs["figure"], lambda p: objective_histogram(
            result.values, p, result.optimum_objective,
            {"0.5% quantile": result.quantile(0.005)}))
    return {"config": cfg.echo(), "result": result.to_dict()}, result.wall_time, result


def run_command(cfg: RunConfig, stdout=None) -> int:
    """Execute one command; returns the process exit status."""
    stdout = stdout or sys.stdout
    out = Outputs()
    try:
        predictor = make_predictor(cfg)
        spec = ObjectiveSpec(cfg.target, cfg.weights)
        if cfg.command in ("train", "recommend"):
            payload, wall, reports = run_train(cfg, predictor, spec, out)
            if cfg.command == "recommend":
                best = min(reports, key=lambda r: (r.best_objective, r.best_state.index))
                line = str(best.best_state)
                if cfg.verify:
                    oracle = brute_force(cfg.grid, predictor, spec)
                    threshold = oracle.quantile(0.005)
                    payload["oracle"] = oracle.to_dict()
                    if best.best_state != oracle.optimum:
                        tag = ("within lowest 0.5%" if best.best_objective <= threshold
                               else "OUTSIDE lowest 0.5%")
                        line += (f"  # f={best.best_objective:.6g}, {tag} "
                                 f"(oracle optimum {oracle.optimum}, f={oracle.optimum_objective:.6g})")
                print(line, file=stdout)
            else:
                r = reports[0] if len(reports) == 1 else None
                if r is not None:
                    print(f"best {r.best_state}  f={r.best_objective:.6g}", file=stdout)
        elif cfg.command == "oracle":
            payload, wall, result = run_oracle(cfg, predictor, spec, out)
            print(f"optimum {result.optimum}  f={result.optimum_objective:.6g}", file=stdout)
        elif cfg.command == "random-search":
            t0 = time.perf_counter()
            state, f = random_search(cfg.grid, predictor, spec, cfg.budget, cfg.hp.seed)
            wall = time.perf_counter() - t0
            payload = {"config": cfg.echo(),
                       "result": {"best_state": state.as_dict(), "best_objective": f}}
            print(f"best {state}  f={f:.6g}", file=stdout)
        elif cfg.command == "hill-climb":
            t0 = time.perf_counter()
            start = (cfg.grid.state_at(cfg.start) if cfg.start
                     else GridState(cfg.grid, (0,) * cfg.grid.ndim))
            state, f, iters = hill_climb(cfg.grid, predictor, spec, start)
            wall = time.perf_counter() - t0
            payload = {"config": cfg.echo(),
                       "result": {"start": start.as_dict(), "local_optimum": state.as_dict(),
                                  "objective": f, "iterations": iters}}
            print(f"local optimum {state}  f={f:.6g}  ({iters} moves)", file=stdout)
        else:  # pragma: no cover - argparse restricts choices
            raise ConfigError(f"unknown command {cfg.command}")
        if cfg.outputs["report"]:
            out.write_text(cfg.outputs["report"], report_json(payload, wall))
    except Exception as exc:
        out.rollback()
        log.debug("command failed", exc_info=True)
        print(f"recipe-rl {cfg.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


def main(argv: list[str] | None = None) -> int:
    try:
        cfg, verbose = parse_config(argv)
    except ConfigError as exc:
        print(f"recipe-rl: error: {exc}", file=sys.stderr)
        return 2
    logging.basicConfig(level=logging.DEBUG if verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return run_command(cfg)


if __name__ == "__main__":
    sys.exit(main())
