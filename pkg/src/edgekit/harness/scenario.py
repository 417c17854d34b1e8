"""Scenario configuration, the run driver, and on-disk report bundles.

A scenario names a model, the orders (m, r), sample sizes, and transport
and moment orders; running it produces a manifest plus one table per
scan in the output directory. Output bytes are deterministic for a
fixed configuration and environment: all reals are serialized with 17
significant digits, '.' decimals and '\\n' line endings.
"""

import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
import scipy

from .. import __version__
from ..models import ChainModel, builtin_model, builtin_model_names, load_chain_spec
from ..models.families import _centered_builder
from .scans import (
    scan_assumptions,
    scan_coupling,
    scan_moments,
    scan_nonuniform,
    scan_stationarity,
    scan_transport,
)

__all__ = [
    "ScenarioConfig",
    "ScenarioError",
    "ScenarioRun",
    "parse_scenario_text",
    "parse_scenario_file",
    "load_scenario",
    "resolve_model",
    "run_scenario",
    "scenario_presets",
    "format_real",
    "report_summary",
    "report_failed",
    "write_table",
]

_DYADIC = (8, 16, 32, 64, 128, 256, 512)


class ScenarioError(ValueError):
    """Configuration or model-capability problem, phrased for the user."""


@dataclass(frozen=True)
class ScenarioConfig:
    """Inputs of one scenario run.

    `model` is either "builtin:<name>" or a path to a chain description
    file. `target` is the blocking target variance for the coupling scan
    (None picks the engine default). `out` may stay None when the caller
    supplies a directory at run time.
    """

    model: str
    m: int = 4
    r: int = 0
    ns: tuple = _DYADIC
    ps: tuple = (1, 2)
    qs: tuple = (2, 3, 4)
    target: float = None
    seed: int = 0
    out: str = None
    grid_max: float = 8.0
    fmt: str = "csv"

    def validate(self):
        if not self.model:
            raise ScenarioError("field 'model': empty")
        if not 3 <= self.m <= 8:
            raise ScenarioError("field 'm': must be between 3 and 8, got %r" % (self.m,))
        if not 0 <= self.r <= self.m - 2:
            raise ScenarioError(
                "field 'r': must be between 0 and m-2 = %d, got %r" % (self.m - 2, self.r)
            )
        if len(self.ns) < 2:
            raise ScenarioError("field 'n': need at least two sample sizes")
        if any(n < 1 for n in self.ns):
            raise ScenarioError("field 'n': sample sizes must be >= 1")
        if any(b <= a for a, b in zip(self.ns[:-1], self.ns[1:])):
            raise ScenarioError("field 'n': sample sizes must be strictly increasing")
        if not self.ps or any(not p >= 1 for p in self.ps):
            raise ScenarioError("field 'p': transport orders must be >= 1")
        if not self.qs or any(q < 1 for q in self.qs):
            raise ScenarioError("field 'q': moment orders must be >= 1")
        if self.target is not None and not self.target > 0.0:
            raise ScenarioError("field 'target': must be positive when given")
        if self.seed < 0:
            raise ScenarioError("field 'seed': must be nonnegative")
        if not self.grid_max > 0.0:
            raise ScenarioError("field 'grid_max': must be positive")
        if self.fmt not in ("csv", "json"):
            raise ScenarioError("field 'format': must be csv or json, got %r" % (self.fmt,))
        return self


def _parse_int_list(raw):
    return tuple(int(part) for part in raw.split(",") if part.strip())


def _parse_p_list(raw):
    out = []
    for part in raw.split(","):
        part = part.strip()
        if not part:
            continue
        v = float(part)
        out.append(int(v) if v.is_integer() else v)
    return tuple(out)


_FIELD_PARSERS = {
    "model": ("model", str),
    "m": ("m", int),
    "r": ("r", int),
    "n": ("ns", _parse_int_list),
    "p": ("ps", _parse_p_list),
    "q": ("qs", _parse_int_list),
    "target": ("target", float),
    "seed": ("seed", int),
    "out": ("out", str),
    "grid_max": ("grid_max", float),
    "format": ("fmt", str),
}


def parse_scenario_text(text, source="<config>"):
    """Parse 'key = value' scenario text, reporting line and field."""
    values = {}
    for lineno, rawline in enumerate(text.splitlines(), start=1):
        line = rawline.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ScenarioError("%s:%d: expected 'key = value', got %r" % (source, lineno, rawline))
        key, _, raw = line.partition("=")
        key = key.strip()
        raw = raw.strip()
        if key not in _FIELD_PARSERS:
            known = ", ".join(sorted(_FIELD_PARSERS))
            raise ScenarioError("%s:%d: unknown field %r (known: %s)" % (source, lineno, key, known))
        field, conv = _FIELD_PARSERS[key]
        try:
            values[field] = conv(raw)
        except ValueError:
            raise ScenarioError("%s:%d: field %r: cannot parse %r" % (source, lineno, key, raw)) from None
    if "model" not in values:
        raise ScenarioError("%s: missing required field 'model'" % source)
    try:
        return ScenarioConfig(**values).validate()
    except ScenarioError as exc:
        raise ScenarioError("%s: %s" % (source, exc)) from None


def parse_scenario_file(path):
    with open(path, "r", encoding="utf-8") as fh:
        return parse_scenario_text(fh.read(), source=str(path))


def scenario_presets():
    """Built-in scenario names usable in place of a config file."""
    return tuple(sorted(_PRESETS))


_PRESETS = {
    "rademacher-be": (
        "model = builtin:rademacher\n"
        "m = 3\n"
        "r = 0\n"
        "n = 16,32,64,128,256\n"
        "p = 1,2\n"
        "q = 2,3,4\n"
        "seed = 0\n"
    ),
    "uniform-edgeworth": (
        "model = builtin:uniform\n"
        "m = 4\n"
        "r = 1\n"
        "n = 4,8,16,32\n"
        "p = 1,2\n"
        "q = 2,3,4\n"
        "seed = 0\n"
    ),
    "elliptic2-stationary": (
        "model = builtin:elliptic2\n"
        "m = 4\n"
        "r = 1\n"
        "n = 32,64,128,256,512\n"
        "p = 1,2\n"
        "q = 2,3,4\n"
        "seed = 0\n"
    ),
}


def resolve_model(token):
    """Model from a "builtin:<name>" token or a chain description file."""
    if token.startswith("builtin:"):
        name = token[len("builtin:"):]
        try:
            return builtin_model(name)
        except (KeyError, ValueError) as exc:
            # the lookup error already names the builtins where that helps
            raise ScenarioError(str(exc)) from None
    if not os.path.exists(token):
        raise ScenarioError(
            "model %r is neither builtin:<name> nor a readable file; "
            "builtins: %s" % (token, ", ".join(builtin_model_names()))
        )
    spec = load_chain_spec(token)
    name = spec.name or os.path.splitext(os.path.basename(token))[0]
    builder = _centered_builder(spec.prefix)
    return ChainModel(name, builder, max_steps=spec.n_steps)


# -- serialization ------------------------------------------------------------


def format_real(v):
    """17-significant-digit decimal form, stable across runs."""
    return "%.17g" % float(v)


def _fmt_cell(v):
    if isinstance(v, (bool, np.bool_)):
        return "yes" if v else "no"
    if isinstance(v, (int, np.integer)):
        return "%d" % v
    if isinstance(v, str):
        return v
    return format_real(v)


def write_table(path, header, rows, meta=None, fmt="csv"):
    """Write one report table; CSV by default, JSON on request."""
    if fmt == "csv":
        lines = [",".join(str(h) for h in header)]
        lines.extend(",".join(_fmt_cell(v) for v in row) for row in rows)
        body = "\n".join(lines) + "\n"
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(body)
        return
    doc = {
        "header": list(header),
        "rows": [[_json_cell(v) for v in row] for row in rows],
    }
    if meta:
        doc["meta"] = meta
    with open(path, "w", encoding="utf-8", newline="") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _json_cell(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return float(v)
    return str(v)


def report_summary(name, rep):
    """One manifest line describing a report's verdicts."""
    if name in ("scan_be", "scan_edgeworth"):
        extra = " flagged=%s" % ("yes" if rep.flagged else "no")
        return "%s%s passed=%s" % (rep.verdict, extra, "yes" if rep.passed else "no")
    if name == "scan_transport":
        cols = " ".join(
            "p=%s:%s%s" % (p, v, "(outside-guarantee)" if f else "")
            for p, v, f in zip(rep.ps, rep.verdicts, rep.p_flags)
        )
        if rep.corrected_verdicts is not None:
            cols += " corrected: " + " ".join(
                "p=%s:%s" % (p, v) for p, v in zip(rep.ps, rep.corrected_verdicts)
            )
        cols += " bound_ok=%s" % ("yes" if rep.bound_ok else "no")
        if rep.flagged:
            cols += " flagged=yes"
        return "%s passed=%s" % (cols, "yes" if rep.passed else "no")
    if name == "scan_moments":
        cols = " ".join(
            "q=%d:%s/%s" % (q, sv, av)
            for q, sv, av in zip(rep.qs, rep.signed_verdicts, rep.abs_verdicts)
        )
        return "%s passed=%s" % (cols, "yes" if rep.passed else "no")
    if name == "scan_stationary":
        return "%s passed=%s" % (rep.verdict, "yes" if rep.passed else "no")
    if name == "couple":
        return "%s a_monotone=%s b_bounded=%s passed=%s" % (
            rep.verdict,
            "yes" if rep.a_monotone else "no",
            "yes" if rep.b_bounded else "no",
            "yes" if rep.passed else "no",
        )
    if name == "assumptions":
        return "derivative=%s tail=%s corrections_supported=%s" % (
            "bounded" if rep.derivative.bounded else "unbounded",
            "vanishing" if rep.tail.vanishing else "plateau",
            "yes" if rep.corrections_supported else "no",
        )
    return "?"


def report_failed(name, rep):
    """Whether a report counts against the exit code."""
    if name in ("scan_be", "scan_edgeworth"):
        return not rep.passed and not rep.flagged
    if name == "assumptions":
        return False  # descriptive: verdicts characterize the model
    return not rep.passed


# -- the run driver -----------------------------------------------------------


@dataclass(frozen=True)
class ScenarioRun:
    config: ScenarioConfig
    model_name: str
    reports: dict
    files: tuple
    failures: int
    exit_code: int


def run_scenario(config, out=None):
    """Run the scan battery for one configuration, writing the bundle.

    Per-n exact laws are built concurrently (they are independent);
    report assembly and file writing stay single-threaded. The exit code
    is 0 exactly when no unflagged verdict failed.
    """
    config.validate()
    outdir = out if out is not None else config.out
    if not outdir:
        raise ScenarioError("no output directory: set 'out = <dir>' or pass one explicitly")
    model = resolve_model(config.model)
    if model.max_steps is not None and config.ns[-1] > model.max_steps:
        raise ScenarioError(
            "model %r supports n up to %d but the scan asks for n=%d; trim 'n'"
            % (config.model, model.max_steps, config.ns[-1])
        )
    if model.kind == "chain":
        with ThreadPoolExecutor(max_workers=min(8, len(config.ns))) as pool:
            list(pool.map(model.distribution, config.ns))
    else:
        # iid laws build incrementally off a shared cache; keep it serial
        for n in config.ns:
            model.distribution(n)

    reports = {}
    nonuniform_name = "scan_be" if config.r == 0 else "scan_edgeworth"
    reports[nonuniform_name] = scan_nonuniform(
        model, config.m, config.r, config.ns, grid_max=config.grid_max
    )
    reports["scan_transport"] = scan_transport(
        model, config.ps, config.ns, r=config.r, m=config.m
    )
    reports["scan_moments"] = scan_moments(model, config.qs, config.r, config.ns)
    if len(config.ns) >= 4:
        reports["scan_stationary"] = scan_stationarity(model, config.m, config.ns)
    if model.kind == "chain":
        reports["couple"] = scan_coupling(model, config.ns, p=2, target=config.target)
    reports["assumptions"] = scan_assumptions(model, config.ns, m=config.m)

    os.makedirs(outdir, exist_ok=True)
    ext = "json" if config.fmt == "json" else "csv"
    files = []
    for name, rep in reports.items():
        header, rows = rep.rows()
        path = os.path.join(outdir, "%s.%s" % (name, ext))
        write_table(path, header, rows, meta={"summary": report_summary(name, rep)}, fmt=config.fmt)
        files.append(path)
    failures = sum(1 for name, rep in reports.items() if report_failed(name, rep))
    exit_code = 0 if failures == 0 else 1

    manifest = os.path.join(outdir, "manifest.txt")
    lines = [
        "# scenario manifest",
        "package = edgekit %s" % __version__,
        "numpy = %s" % np.__version__,
        "scipy = %s" % scipy.__version__,
        "model = %s" % config.model,
        "model_name = %s" % model.name,
        "m = %d" % config.m,
        "r = %d" % config.r,
        "n = %s" % ",".join(str(n) for n in config.ns),
        "p = %s" % ",".join(str(p) for p in config.ps),
        "q = %s" % ",".join(str(q) for q in config.qs),
        "target = %s" % ("auto" if config.target is None else format_real(config.target)),
        "seed = %d" % config.seed,
        "grid_max = %s" % format_real(config.grid_max),
        "format = %s" % config.fmt,
    ]
    for name, rep in reports.items():
        lines.append("%s = %s" % (name, report_summary(name, rep)))
    lines.append("failures = %d" % failures)
    lines.append("exit = %d" % exit_code)
    with open(manifest, "w", encoding="utf-8", newline="") as fh:
        fh.write("\n".join(lines) + "\n")
    files.insert(0, manifest)

    return ScenarioRun(
        config=replace(config, out=outdir),
        model_name=model.name,
        reports=reports,
        files=tuple(files),
        failures=failures,
        exit_code=exit_code,
    )


def load_scenario(source):
    """Config from a preset name or a file path."""
    if source in _PRESETS:
        return parse_scenario_text(_PRESETS[source], source="preset:%s" % source)
    if os.path.exists(source):
        return parse_scenario_file(source)
    raise ScenarioError(
        "scenario %r is neither a file nor a preset; presets: %s"
        % (source, ", ".join(scenario_presets()))
    )
