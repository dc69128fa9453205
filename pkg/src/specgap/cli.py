"""Command-line front end: ``specgap {bounds,gap,verify,grazing}``.

Every run resolves its options into a :class:`RunConfig`; when output goes to
a file the config is written next to it as ``<output>.config.json`` and
``specgap <command> --config <that file>`` reproduces the output byte for
byte.  Precedence is defaults < config file < explicit flags.

Exit codes: 0 success, 1 configuration error, 2 hypothesis violation,
3 verification failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import asdict, dataclass, field, fields
from typing import Any

from .bounds import SUITES, bound_report, run_suite
from .dissipation import Grids, grazing_sweep
from .errors import HypothesisViolation, SpecgapError
from .functions import PolynomialFunction, collision_invariants
from .kernels import Mollifier, angular_from_json, phi_from_json
from .spectral import assemble_boltzmann, assemble_landau, gap_analysis, lambda0_sweep

logger = logging.getLogger("specgap")

EXIT_OK, EXIT_CONFIG, EXIT_HYPOTHESIS, EXIT_FAIL = 0, 1, 2, 3
COMMANDS = ("bounds", "gap", "verify", "grazing")
DEFAULT_EPS = (0.4, 0.2, 0.1, 0.05)


class ConfigError(SpecgapError):
    pass


@dataclass
class RunConfig:
    command: str
    phi: dict = field(default_factory=lambda: {"type": "power", "gamma": 1.0})
    b: dict = field(default_factory=lambda: {"type": "constant", "value": 1.0})
    dim: int = 3
    grids: dict | None = None
    truncation: int = 8
    eps: list = field(default_factory=lambda: list(DEFAULT_EPS))
    seed: int = 0
    normalization: str = "unit-mass"
    output: str | None = None
    format: str = "json"
    operator: str = "boltzmann"
    suite: str = "theorem1"
    n: int = 50
    R: float | None = None
    mollifier: str = "bump"
    function: str = "v1v2"
    lambda0: bool = False
    threads: int | None = None

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, data: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)


# --------------------------------------------------------------------------- parsing


def parse_kernel_spec(text: str, kind: str) -> dict:
    """``power:1``, ``constant:2``, ``grazing:0.1``, ``linear`` or a JSON object."""
    text = text.strip()
    if text.startswith("{"):
        try:
            return json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"bad {kind} JSON: {exc}") from None
    name, _, arg = text.partition(":")
    try:
        if name == "power":
            return {"type": "power", "gamma": float(arg)}
        if name == "constant":
            return {"type": "constant", "value": float(arg) if arg else 1.0}
        if name == "grazing":
            return {"type": "grazing", "eps": float(arg)}
        if name == "linear":
            return {"type": "linear"}
    except ValueError:
        raise ConfigError(f"bad {kind} spec {text!r}") from None
    raise ConfigError(f"unknown {kind} spec {text!r}")


def _eps_list(text: str) -> list:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"bad eps list {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="specgap", description=__doc__.split("\n")[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        S = argparse.SUPPRESS
        sp.add_argument("--config", default=None, help="JSON RunConfig to start from")
        sp.add_argument("--output", "-o", default=S, help="output file (default: stdout)")
        sp.add_argument("--threads", type=int, default=S, help="worker cap (results do not depend on it)")
        sp.add_argument("--dim", type=int, default=S)
        sp.add_argument("--phi", default=S, help="kinetic kernel: power:<g>, constant:<c> or JSON")
        sp.add_argument("--gamma", type=float, default=S, help="shorthand for --phi power:<g>")
        sp.add_argument("--grids", default=S, help='JSON rule orders, e.g. {"velocity": 10}')
        sp.add_argument("-v", "--verbose", action="store_true")

    sp = sub.add_parser("bounds", help="explicit constants and optimized bounds")
    common(sp)
    sp.add_argument("--b", default=argparse.SUPPRESS)
    sp.add_argument("--R", type=float, default=argparse.SUPPRESS)

    sp = sub.add_parser("gap", help="Galerkin spectral gap")
    common(sp)
    sp.add_argument("--operator", choices=("boltzmann", "landau"), default=argparse.SUPPRESS)
    sp.add_argument("--b", default=argparse.SUPPRESS)
    sp.add_argument("--truncation", type=int, default=argparse.SUPPRESS)
    sp.add_argument("--normalization", choices=("unit-mass", "paper-raw"), default=argparse.SUPPRESS)

    sp = sub.add_parser("verify", help="inequality suites")
    common(sp)
    sp.add_argument("--suite", choices=SUITES, default=argparse.SUPPRESS)
    sp.add_argument("--n", type=int, default=argparse.SUPPRESS)
    sp.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    sp.add_argument("--b", default=argparse.SUPPRESS)
    sp.add_argument("--R", type=float, default=argparse.SUPPRESS)

    sp = sub.add_parser("grazing", help="grazing-collision sweep (CSV)")
    common(sp)
    sp.add_argument("--eps", type=_eps_list, default=argparse.SUPPRESS, help="comma-separated, decreasing")
    sp.add_argument("--mollifier", choices=("bump", "uniform"), default=argparse.SUPPRESS)
    sp.add_argument("--function", choices=("v1v2", "1", "v1", "energy"), default=argparse.SUPPRESS)
    sp.add_argument("--lambda0", action="store_true", default=argparse.SUPPRESS)
    return p


_COMMAND_DEFAULTS = {
    "bounds": {"format": "json"},
    "gap": {"format": "json", "normalization": "unit-mass"},
    "verify": {"format": "jsonl", "normalization": "paper-raw"},
    "grazing": {"format": "csv", "phi": {"type": "constant", "value": 1.0}},
}


def resolve_config(ns: argparse.Namespace) -> RunConfig:
    base: dict[str, Any] = {"command": ns.command, **_COMMAND_DEFAULTS[ns.command]}
    if ns.config:
        try:
            with open(ns.config) as fh:
                loaded = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {ns.config}: {exc}") from None
        if loaded.get("command", ns.command) != ns.command:
            raise ConfigError(f"config is for command {loaded.get('command')!r}, not {ns.command!r}")
        base.update(loaded)
    given = vars(ns)
    if "gamma" in given:
        base["phi"] = {"type": "power", "gamma": given["gamma"]}
    if "phi" in given:
        base["phi"] = parse_kernel_spec(given["phi"], "phi")
    if "b" in given:
        base["b"] = parse_kernel_spec(given["b"], "b")
    if "grids" in given:
        try:
            base["grids"] = json.loads(given["grids"])
        except json.JSONDecodeError as exc:
            raise ConfigError(f"bad --grids JSON: {exc}") from None
    for key in ("output", "dim", "truncation", "normalization", "operator", "suite", "n", "seed",
                "R", "mollifier", "function", "lambda0", "eps"):
        if key in given:
            base[key] = given[key]
    threads = given.get("threads", base.get("threads"))
    if threads is None and os.environ.get("SPECGAP_THREADS"):
        try:
            threads = int(os.environ["SPECGAP_THREADS"])
        except ValueError:
            raise ConfigError("SPECGAP_THREADS must be an integer") from None
    base["threads"] = threads
    cfg = RunConfig.from_json(base)
    if cfg.threads is not None and cfg.threads < 1:
        raise ConfigError("--threads must be >= 1")
    return cfg


# --------------------------------------------------------------------------- commands


def _grids(cfg: RunConfig) -> Grids | None:
    if cfg.grids is None:
        return None
    try:
        return Grids(**{**Grids().to_json(), **cfg.grids})
    except TypeError as exc:
        raise ConfigError(f"bad grids {cfg.grids}: {exc}") from None


def _kernels(cfg: RunConfig):
    phi = phi_from_json(cfg.phi)
    b = angular_from_json(cfg.b, cfg.dim)
    return phi, b


def cmd_bounds(cfg: RunConfig) -> tuple[str, int]:
    phi, b = _kernels(cfg)
    report = bound_report(phi, b, cfg.dim, cfg.R)
    return report.dumps() + "\n", EXIT_OK


def cmd_gap(cfg: RunConfig) -> tuple[str, int]:
    phi, b = _kernels(cfg)
    grids = _grids(cfg)
    T = cfg.truncation
    levels = sorted({t for t in range(2, T + 1, 2)} | {T})

    def gap_at(t):
        g = grids if grids is not None else Grids.for_degree(t)
        if cfg.operator == "landau":
            system = assemble_landau(phi, t, g, dim=cfg.dim, normalization=cfg.normalization)
        else:
            system = assemble_boltzmann(phi, b, t, g, dim=cfg.dim, normalization=cfg.normalization)
        return gap_analysis(system)

    if T < 2:
        gap_at(T)  # raises the empty-complement error
    table = []
    final = None
    for t in levels:
        res = gap_at(t)
        table.append({"truncation": t, "gap": res.gap, "multiplicity": res.multiplets[0][1]})
        final = res
    out = {
        "operator": cfg.operator,
        "normalization": cfg.normalization,
        "dim": cfg.dim,
        "phi": cfg.phi,
        "b": cfg.b if cfg.operator == "boltzmann" else None,
        "gap": final.gap,
        "multiplets": [[v, m] for v, m in final.multiplets[:6]],
        "table": table,
        "non_increasing": all(b["gap"] <= a["gap"] * (1 + 1e-9) for a, b in zip(table, table[1:])),
    }
    return json.dumps(out, indent=2) + "\n", EXIT_OK


def cmd_verify(cfg: RunConfig) -> tuple[str, int]:
    phi = phi_from_json(cfg.phi)
    if phi.to_json()["type"] != "power":
        raise ConfigError("verify suites use power-law kernels; pass --gamma or --phi power:<g>")
    gamma = float(cfg.phi["gamma"])
    b = None
    if cfg.suite in ("theorem1", "lemma1", "lemma3") and cfg.b != RunConfig("verify").b:
        b = angular_from_json(cfg.b, cfg.dim)
    res = run_suite(cfg.suite, gamma, cfg.n, cfg.seed, dim=cfg.dim, grids=_grids(cfg), b=b, R=cfg.R)
    lines = [r.dumps() for r in res.records]
    lines += [r.dumps() for r in res.escalated]
    summary = {"summary": {"suite": cfg.suite, "gamma": gamma, **res.summary}}
    lines.append(json.dumps(summary, sort_keys=True))
    code = EXIT_FAIL if res.summary["fail"] else EXIT_OK
    return "\n".join(lines) + "\n", code


def _named_function(name: str, dim: int):
    if name == "v1v2":
        e = [0] * dim
        e[0] = e[1] = 1
        return PolynomialFunction.from_terms(dim, {tuple(e): 1.0}, name="v1v2")
    inv = collision_invariants(dim)
    return {"1": inv[0], "v1": inv[1], "energy": inv[-1]}[name]


def cmd_grazing(cfg: RunConfig) -> tuple[str, int]:
    j = Mollifier(cfg.mollifier)
    if cfg.lambda0:
        if cfg.dim != 3:
            raise ConfigError("the lambda_0 sweep is defined for dim = 3")
        return lambda0_sweep(j, cfg.eps).to_csv(), EXIT_OK
    phi = phi_from_json(cfg.phi)
    h = _named_function(cfg.function, cfg.dim)
    table = grazing_sweep(h, phi, j, cfg.eps, _grids(cfg))
    return table.to_csv(), EXIT_OK


_HANDLERS = {"bounds": cmd_bounds, "gap": cmd_gap, "verify": cmd_verify, "grazing": cmd_grazing}


def run(cfg: RunConfig) -> tuple[str, int]:
    return _HANDLERS[cfg.command](cfg)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        cfg = resolve_config(ns)
        text, code = run(cfg)
    except HypothesisViolation as exc:
        print(f"hypothesis violation: {exc}", file=sys.stderr)
        return EXIT_HYPOTHESIS
    except (SpecgapError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if cfg.output:
        with open(cfg.output, "w") as fh:
            fh.write(text)
        with open(cfg.output + ".config.json", "w") as fh:
            json.dump(cfg.to_json(), fh, indent=2, sort_keys=True)
            fh.write("\n")
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
