"""Command line runner: `conegap <experiment> --config <path> [--out DIR] [--seed N] [--figures]`.

The configuration is an INI file. Section and key names are flattened to
dotted keys (`[sec6] n_steps = 100000` becomes `sec6.n_steps`), and values are
Python literals (ints, floats, complex numbers, lists, None). Each run writes
`<experiment>.csv` and `<experiment>_summary.json` into the output directory.
Exit status: 0 when every assertion passes, 1 on an assertion failure, 2 on a
configuration error.
"""

import argparse
import ast
import configparser
import csv
import json
import math
import sys
from pathlib import Path

from .errors import ConegapError, ConfigError
from .experiments import RUNNERS

EXPERIMENTS = tuple(RUNNERS)

# Defaults per experiment; keys absent here are rejected as unknown.
DEFAULTS = {
    "exterior-check": {
        "exterior.pairs": 50, "exterior.matrices": 100, "exterior.tensors": 200,
        "exterior.n_values": [4, 5, 6], "exterior.samples": 64,
    },
    "metrics": {
        "metrics.pairs": 500, "metrics.n_values": [4, 6, 8], "metrics.p_values": [1, 2, 3],
    },
    "gauge": {
        "gauge.pairs": 200, "gauge.n_values": [3, 4, 6], "gauge.p_values": [1, 2],
        "gauge.a_inner": 0.5, "gauge.a_outer": 1.0, "gauge.distance_pairs": 100,
        "gauge.starts": 16, "gauge.iterations": 200,
        "gauge.contraction_instances": 50, "gauge.contraction_pairs": 100,
        "gauge.subspace_checks": 10,
    },
    "spectral-gap": {
        "spectral.matrix": [[5, 0, 0, 0], [0, 4, 0, 0], [0, 0, 1, 0], [0, 0, 0, 0.5]],
        "spectral.p": 2, "spectral.a": 1.0, "spectral.random_instances": 30,
        "spectral.bracket_instances": 50, "spectral.decay_terms": 30,
    },
    "lyapunov": {
        "lyapunov.t_values": [0, 0.3, 0.5j], "lyapunov.orders": [1, 2],
        "lyapunov.n_steps": 100_000, "lyapunov.burn_in": 1000,
    },
    "sec6": {
        "sec6.n_steps": 100_000, "sec6.burn_in": 1000, "sec6.t_grid": [0.2 + 0.1j],
        "sec6.radius": 0.2, "sec6.n_circle": 12, "sec6.agreement_t": [0, 0.3, 0.5j],
        "sec6.closed_form_samples": 1_000_000, "sec6.mapping_samples": 100_000,
        "sec6.mapping_t_grid": [0, 0.5, -0.5, 0.5j, -0.5j, 0.9, 0.9j, -0.9, -0.9j, 0.6 + 0.6j],
    },
}

POSITIVE_INTS = {
    "exterior.pairs", "exterior.matrices", "exterior.tensors", "exterior.samples",
    "metrics.pairs", "gauge.pairs", "gauge.distance_pairs", "gauge.starts", "gauge.iterations",
    "gauge.contraction_instances", "gauge.contraction_pairs", "spectral.p",
    "spectral.bracket_instances", "spectral.decay_terms", "sec6.n_circle",
    "sec6.closed_form_samples", "sec6.mapping_samples",
}
STEP_KEYS = {"lyapunov.n_steps", "sec6.n_steps"}


def parse_value(text):
    try:
        return ast.literal_eval(text.strip())
    except (ValueError, SyntaxError):
        return text.strip()


def load_config(path):
    """Read an INI file into a flat {"section.key": value} map."""
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return {f"{section}.{key}": parse_value(value)
            for section in parser.sections() for key, value in parser.items(section)}


def validate(config, experiment=None):
    """Findings that would stop the run; an empty list means the run can start.

    `config` is a flat dotted map. `experiment` may also be given in the map
    as `run.experiment`.
    """
    findings = []
    experiment = experiment or config.get("run.experiment")
    if experiment not in DEFAULTS:
        return [f"run.experiment: unknown experiment {experiment!r}; expected one of {list(EXPERIMENTS)}"]
    if config.get("run.seed") is None:
        findings.append("run.seed: seed required")
    elif not isinstance(config["run.seed"], int) or isinstance(config["run.seed"], bool) \
            or not 0 <= config["run.seed"] < 2 ** 64:
        findings.append("run.seed: must be an integer in [0, 2^64)")
    if config.get("run.output_path") in (None, ""):
        findings.append("run.output_path: output path required")
    known = set(DEFAULTS[experiment]) | {"run.seed", "run.output_path", "run.experiment"}
    for key in sorted(config):
        if key not in known:
            findings.append(f"{key}: unknown key for experiment {experiment}")
    params = {**DEFAULTS[experiment], **{k: v for k, v in config.items() if k in known}}
    for key in sorted(POSITIVE_INTS & params.keys()):
        if not isinstance(params[key], int) or isinstance(params[key], bool) or params[key] < 1:
            findings.append(f"{key}: must be a positive integer")
    for key in sorted(STEP_KEYS & params.keys()):
        if not isinstance(params[key], int) or params[key] < 100:
            findings.append(f"{key}: must be an integer >= 100")
    if experiment == "gauge":
        a_in, a_out = params["gauge.a_inner"], params["gauge.a_outer"]
        if not all(isinstance(x, (int, float)) for x in (a_in, a_out)) or not 0 <= a_in < a_out:
            findings.append("gauge.a_inner: diameter_bound requires 0 <= a_inner < a_outer "
                            f"(got a_inner={a_in!r}, a_outer={a_out!r})")
    if experiment == "sec6":
        r = params["sec6.radius"]
        if not isinstance(r, (int, float)) or not r > 0:
            findings.append("sec6.radius: must be positive")
        else:
            for t in params["sec6.t_grid"]:
                if abs(complex(t)) + r >= 1:
                    findings.append(f"sec6.t_grid: disk around {t!r} of radius {r} leaves the unit disk")
        if isinstance(params["sec6.n_circle"], int) and params["sec6.n_circle"] < 8:
            findings.append("sec6.n_circle: must be >= 8")
    if experiment == "lyapunov":
        if not set(params["lyapunov.orders"]) <= {1, 2}:
            findings.append("lyapunov.orders: gauge estimator supports orders 1 and 2")
    return findings


def resolve(config, experiment):
    """Validated parameter map with defaults filled in; raises ConfigError otherwise."""
    findings = validate(config, experiment)
    if findings:
        raise ConfigError("; ".join(findings))
    return {**DEFAULTS[experiment], **config, "run.experiment": experiment}


# --------------------------------------------------------------- output


def format_cell(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return "%.12g" % value
    if isinstance(value, complex):
        return "%.12g%+.12gj" % (value.real, value.imag)
    if hasattr(value, "item"):        # numpy scalar
        return format_cell(value.item())
    return str(value)


def jsonable(value):
    """Convert to JSON-safe values: non-finite floats and complex numbers become strings."""
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if hasattr(value, "tolist"):
        return jsonable(value.tolist())
    if isinstance(value, bool) or value is None or isinstance(value, (int, str)):
        return value
    if isinstance(value, float):
        return value if math.isfinite(value) else repr(value)
    if isinstance(value, complex):
        return format_cell(value)
    return str(value)


def write_outputs(out_dir, experiment, params, result):
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / f"{experiment}.csv"
    with open(csv_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(result.header)
        for row in result.rows:
            writer.writerow([format_cell(v) for v in row])
    summary = {
        "experiment": experiment,
        "inputs": {k: v for k, v in params.items() if k != "run.output_path"},
        "seed": params["run.seed"],
        "assertions": {a.name: {"passed": bool(a.passed), "flag_only": a.flag_only, **a.detail}
                       for a in result.assertions},
        "passed": result.passed,
        "results": result.summary,
    }
    json_path = out_dir / f"{experiment}_summary.json"
    with open(json_path, "w", encoding="utf-8") as fh:
        json.dump(jsonable(summary), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return csv_path, json_path


def run(experiment, config, out=None, seed=None, figures=False):
    """Run one experiment; returns (result, csv_path, json_path)."""
    config = dict(config)
    if seed is not None:
        config["run.seed"] = seed
    if out is not None:
        config["run.output_path"] = str(out)
    config.pop("run.experiment", None)
    params = resolve(config, experiment)
    result = RUNNERS[experiment](params)
    paths = write_outputs(params["run.output_path"], experiment, params, result)
    if figures:
        from .plotting import render_figures
        render_figures(experiment, result, params["run.output_path"])
    return (result, *paths)


def build_parser():
    parser = argparse.ArgumentParser(prog="conegap", description=__doc__.splitlines()[0])
    parser.add_argument("experiment", choices=EXPERIMENTS)
    parser.add_argument("--config", required=True, help="INI configuration file")
    parser.add_argument("--out", help="output directory (overrides run.output_path)")
    parser.add_argument("--seed", type=int, help="seed override (overrides run.seed)")
    parser.add_argument("--figures", action="store_true", help="also render PNG figures")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config)
        if config.get("run.experiment", args.experiment) != args.experiment:
            raise ConfigError(f"run.experiment: config is for {config['run.experiment']!r}, "
                              f"not {args.experiment!r}")
        result, csv_path, json_path = run(args.experiment, config, args.out, args.seed, args.figures)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ConegapError as exc:
        print(f"run failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    for a in result.assertions:
        status = "PASS" if a.passed else ("FLAG" if a.flag_only else "FAIL")
        print(f"{status} {args.experiment}:{a.name}")
    print(f"wrote {csv_path} and {json_path}")
    return 0 if result.passed else 1


if __name__ == "__main__":
    sys.exit(main())
