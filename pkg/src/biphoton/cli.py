"""Command-line entry point.

Settings are resolved in increasing precedence: built-in defaults, the
``BIPHOTON_SEED`` environment variable (seed only), a ``--scenario`` file,
then explicit flags.
"""

import argparse
import math
import os
import re
import sys
import time
from dataclasses import asdict, dataclass, fields, replace

from . import experiments as ex
from .optics import PhaseSettings
from .output import FORMAT_VERSION, fmt_number, to_csv, to_json
from .streams import SEED_MASK, Rng

COMMANDS = ("scan", "trials", "chsh", "nosignal", "zwm", "decohere", "cat", "ambiguity")
SEED_ENV = "BIPHOTON_SEED"

EXIT_OK, EXIT_GATES_FAILED, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3


class ConfigError(ValueError):
    pass


# --- value parsing ------------------------------------------------------------

_ANGLE = re.compile(
    r"^(?P<sign>[+-]?)(?:(?P<coef>\d+(?:\.\d*)?|\.\d+)\s*\*?\s*)?pi(?:\s*/\s*(?P<den>\d+(?:\.\d*)?))?$"
)


def parse_angle(text):
    """Radians, either a plain number or ``[-][k][*]pi[/d]`` such as ``3pi/4``."""
    s = str(text).strip()
    m = _ANGLE.match(s)
    if m:
        value = math.pi
        if m["coef"]:
            value = float(m["coef"]) * value
        if m["den"]:
            value = value / float(m["den"])
        return -value if m["sign"] == "-" else value
    try:
        value = float(s)
    except ValueError:
        raise ConfigError(f"malformed angle {text!r}") from None
    if not math.isfinite(value):
        raise ConfigError(f"angle must be finite, got {text!r}")
    return value


def parse_int(text):
    try:
        return int(str(text).strip())
    except ValueError:
        raise ConfigError(f"malformed integer {text!r}") from None


def parse_complex(text):
    try:
        value = complex(str(text).strip().replace(" ", ""))
    except ValueError:
        raise ConfigError(f"malformed number {text!r}") from None
    if not (math.isfinite(value.real) and math.isfinite(value.imag)):
        raise ConfigError(f"number must be finite, got {text!r}")
    return value


def format_complex(z):
    z = complex(z)
    if z.imag == 0:
        return fmt_number(z.real)
    return f"{fmt_number(z.real)}{'+' if z.imag >= 0 else '-'}{fmt_number(abs(z.imag))}j"


def parse_str(text):
    return str(text).strip()


# --- configuration --------------------------------------------------------------


@dataclass(frozen=True)
class RunConfig:
    command: str = None
    seed: int = 42
    trials: int = 100_000
    points: int = 360
    grid: int = 32
    phi_s: float = 0.0
    phi_a: float = 0.0
    c1: complex = complex(math.sqrt(0.5))
    c2: complex = complex(math.sqrt(0.5))
    gamma: complex = complex(0.5)
    theta: float = math.pi / 4
    collisions: int = 3
    a: float = 0.0
    a_prime: float = math.pi / 2
    b: float = math.pi / 4
    b_prime: float = 3 * math.pi / 4
    workers: int = 1
    out_csv: str = ""
    out_json: str = ""
    format_version: str = FORMAT_VERSION

    @property
    def settings(self):
        return PhaseSettings(self.phi_s, self.phi_a)

    @property
    def decoherence(self):
        return ex.DecoherenceConfig(self.theta, self.collisions)


# key -> (parser, formatter, help)
_ANGLE_FMT = fmt_number
FIELDS = {
    "command": (parse_str, str, "experiment to run"),
    "seed": (parse_int, str, "64-bit root seed"),
    "trials": (parse_int, str, "Monte Carlo trials per setting (0 = analytic only)"),
    "points": (parse_int, str, "scan / fringe points over [0, 2pi)"),
    "grid": (parse_int, str, "no-signalling grid size per phase"),
    "phi_s": (parse_angle, _ANGLE_FMT, "phase shift on photon S (radians, pi/ shorthand ok)"),
    "phi_a": (parse_angle, _ANGLE_FMT, "phase shift on photon A (radians)"),
    "c1": (parse_complex, format_complex, "amplitude of |s1>"),
    "c2": (parse_complex, format_complex, "amplitude of |s2>"),
    "gamma": (parse_complex, format_complex, "partner which-path overlap for zwm"),
    "theta": (parse_angle, _ANGLE_FMT, "per-collision pointer rotation, overlap cos(theta)"),
    "collisions": (parse_int, str, "number of environment collisions"),
    "a": (parse_angle, _ANGLE_FMT, "CHSH setting a (photon S)"),
    "a_prime": (parse_angle, _ANGLE_FMT, "CHSH setting a' (photon S)"),
    "b": (parse_angle, _ANGLE_FMT, "CHSH setting b (photon A)"),
    "b_prime": (parse_angle, _ANGLE_FMT, "CHSH setting b' (photon A)"),
    "workers": (parse_int, str, "worker threads for trial blocks"),
    "out_csv": (parse_str, str, "CSV output path"),
    "out_json": (parse_str, str, "JSON summary output path"),
    "format_version": (parse_str, str, "output format version"),
}


def validate(cfg):
    """Range checks; returns the config with amplitudes renormalized."""
    if cfg.command is None:
        raise ConfigError(f"missing command; choose one of {', '.join(COMMANDS)}")
    if cfg.command not in COMMANDS:
        raise ConfigError(f"unknown command {cfg.command!r}")
    if not 0 <= cfg.seed <= SEED_MASK:
        raise ConfigError(f"seed must be in [0, 2^64), got {cfg.seed}")
    if cfg.trials < 0 or (cfg.command == "trials" and cfg.trials < 1):
        raise ConfigError(f"trials out of range: {cfg.trials}")
    if cfg.points < 2:
        raise ConfigError(f"points must be >= 2, got {cfg.points}")
    if cfg.grid < 2:
        raise ConfigError(f"grid must be >= 2, got {cfg.grid}")
    if cfg.workers < 1:
        raise ConfigError(f"workers must be >= 1, got {cfg.workers}")
    if abs(cfg.gamma) > 1 + 1e-12:
        raise ConfigError(f"|gamma| must be <= 1, got {abs(cfg.gamma)}")
    if not 0 <= cfg.theta <= math.pi / 2 + 1e-15:
        raise ConfigError(f"theta must lie in [0, pi/2], got {cfg.theta}")
    if not 0 <= cfg.collisions <= ex.MAX_COLLISIONS:
        raise ConfigError(f"collisions must lie in [0, {ex.MAX_COLLISIONS}], got {cfg.collisions}")
    if cfg.format_version != FORMAT_VERSION:
        raise ConfigError(f"unsupported format version {cfg.format_version!r}")
    norm = math.hypot(abs(cfg.c1), abs(cfg.c2))
    if abs(norm - 1) > 1e-6:
        raise ConfigError(f"amplitudes c1, c2 have norm {norm:.9g}; must be 1 within 1e-6")
    if norm != 1:
        cfg = replace(cfg, c1=cfg.c1 / norm, c2=cfg.c2 / norm)
    return cfg


def read_scenario(path):
    """Read a ``key = value`` scenario file into a dict of parsed values."""
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise OSError(f"cannot read scenario {path}: {exc.strerror}") from exc
    values = {}
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (x.strip() for x in line.split("=", 1))
        if key not in FIELDS:
            raise ConfigError(f"{path}:{lineno}: unknown key '{key}'")
        try:
            values[key] = FIELDS[key][0](value)
        except ConfigError as exc:
            raise ConfigError(f"{path}:{lineno}: {exc}") from None
    return values


def load_scenario(path):
    """Scenario file applied over the defaults, validated like flags."""
    return validate(replace(RunConfig(), **read_scenario(path)))


def dump_scenario(cfg):
    out = []
    for f in fields(RunConfig):
        value = getattr(cfg, f.name)
        if value is None:
            continue
        out.append(f"{f.name} = {FIELDS[f.name][1](value)}")
    return "\n".join(out) + "\n"


# --- argument parsing -------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.exit(EXIT_USAGE, f"biphoton: error: {message}\n")


def _argtype(fn):
    def conv(text):
        try:
            return fn(text)
        except ConfigError as exc:
            raise argparse.ArgumentTypeError(str(exc)) from None

    conv.__name__ = fn.__name__.replace("parse_", "")
    return conv


def build_parser():
    defaults = RunConfig()
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    for name, (parse, fmt, help_) in FIELDS.items():
        if name in ("command", "format_version"):
            continue
        default = getattr(defaults, name)
        shown = fmt(default) if default != "" else "none"
        common.add_argument(
            "--" + name.replace("_", "-"),
            dest=name,
            type=_argtype(parse),
            help=f"{help_} (default: {shown})",
        )
    common.add_argument("--scenario", help="key = value scenario file (default: none)")
    common.add_argument("--quiet", action="store_true", help="suppress stdout summary (default: off)")
    common.add_argument("--timing", action="store_true",
                        help="add wall-clock timing to the JSON summary (default: off)")

    parser = _Parser(prog="biphoton", parents=[common], argument_default=argparse.SUPPRESS,
                     description="Two-photon interferometry and measurement-state experiments.")
    sub = parser.add_subparsers(dest="command", metavar="{" + ",".join(COMMANDS) + "}",
                                parser_class=_Parser)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], argument_default=argparse.SUPPRESS)
    return parser


def parse_args(argv, environ=None):
    """Resolve argv (plus environment and scenario file) into a validated RunConfig.

    Returns ``(config, options)`` where options holds the non-config flags.
    """
    environ = os.environ if environ is None else environ
    ns = {k: v for k, v in vars(build_parser().parse_args(argv)).items() if v is not None}
    options = {k: ns.pop(k, False) for k in ("quiet", "timing")}
    scenario = ns.pop("scenario", None)
    merged = {}
    if environ.get(SEED_ENV):
        merged["seed"] = parse_int(environ[SEED_ENV])
    if scenario:
        merged.update(read_scenario(scenario))
    merged.update(ns)
    return validate(replace(RunConfig(), **merged)), options


# --- running ---------------------------------------------------------------------


def run(cfg):
    rng = Rng(cfg.seed)
    if cfg.command == "scan":
        return ex.scan_experiment(cfg.points, cfg.trials, rng, cfg.workers)
    if cfg.command == "trials":
        return ex.trials_experiment(cfg.settings, cfg.trials, rng, cfg.workers)
    if cfg.command == "chsh":
        return ex.chsh_experiment(cfg.a, cfg.a_prime, cfg.b, cfg.b_prime, cfg.trials, rng,
                                  cfg.workers)
    if cfg.command == "nosignal":
        return ex.no_signaling_sweep(cfg.grid, cfg.trials, rng, cfg.workers)
    if cfg.command == "zwm":
        return ex.zwm_experiment(cfg.gamma, cfg.points)
    if cfg.command == "decohere":
        return ex.decoherence_experiment(cfg.decoherence)
    if cfg.command == "cat":
        return ex.cat_experiment(cfg.c1, cfg.c2, cfg.trials, rng, cfg.workers)
    if cfg.command == "ambiguity":
        return ex.ambiguity_experiment(cfg.c1, cfg.c2)
    raise ConfigError(f"unknown command {cfg.command!r}")


def summary(result, cfg, elapsed=None):
    config = {k: v for k, v in asdict(cfg).items() if k not in ("out_csv", "out_json", "workers")}
    out = {
        "format_version": FORMAT_VERSION,
        "command": cfg.command,
        "seed": cfg.seed,
        "passed": result.passed,
        "config": config,
        "gates": result.gates,
        "results": result.extra,
    }
    if elapsed is not None:
        out["timing_seconds"] = elapsed
    return out


def emit(result, cfg, elapsed=None, quiet=False, stdout=None):
    """Write the CSV table and JSON summary; return the JSON text."""
    stdout = stdout or sys.stdout
    text = to_json(summary(result, cfg, elapsed))
    if cfg.out_csv:
        with open(cfg.out_csv, "w", encoding="utf-8", newline="") as fh:
            fh.write(to_csv(result.columns, result.rows))
    if cfg.out_json:
        with open(cfg.out_json, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    if not quiet:
        stdout.write(text)
    return text


def main(argv=None):
    argv = sys.argv[1:] if argv is None else argv
    try:
        cfg, options = parse_args(argv)
    except (ConfigError, OSError) as exc:
        print(f"biphoton: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    start = time.perf_counter()
    result = run(cfg)
    elapsed = time.perf_counter() - start if options["timing"] else None
    try:
        emit(result, cfg, elapsed, options["quiet"])
    except OSError as exc:
        print(f"biphoton: error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK if result.passed else EXIT_GATES_FAILED


if __name__ == "__main__":
    sys.exit(main())
