"""Command-line surface: estimation runs, verification, CSV artifacts.

Commands map one-to-one onto library features: ``estimate`` fits an
impulse response from a CSV dataset, ``verify`` runs the invariant suite,
and ``sample`` / ``expand`` / ``norm`` / ``tridiag`` emit plain-CSV
artifacts for external plotting.

Determinism contract: identical config plus seed produces byte-identical
artifacts.  Files therefore never contain wall-clock times; timings go to
stdout.  Every artifact header records a 12-hex digest of the effective
config, so changing any setting changes the recorded hash.

Exit codes: 0 success, 1 computation or check failure, 2 input error.

The numeric stack is imported lazily inside ``main`` so the
``DCKERNEL_THREADS`` environment variable can cap BLAS/OpenMP pools
before numpy first loads.
"""

from __future__ import annotations

import argparse
import copy
import csv
import hashlib
import io
import json
import os
import sys
import tempfile
import time

from .errors import ConfigError

__all__ = ["main", "default_config", "merged_config", "config_hash"]

_FLOAT_FMT = ".17g"

_THREAD_VARS = (
    "OMP_NUM_THREADS",
    "OPENBLAS_NUM_THREADS",
    "MKL_NUM_THREADS",
    "NUMEXPR_NUM_THREADS",
)


def _pin_threads():
    wanted = os.environ.get("DCKERNEL_THREADS")
    if not wanted:
        return
    if not wanted.isdigit() or int(wanted) < 1:
        raise ConfigError("DCKERNEL_THREADS must be a positive integer")
    for var in _THREAD_VARS:
        os.environ.setdefault(var, wanted)


_DEFAULT_CONFIG = {
    "kernel": {"variant": "tc", "alpha": None, "beta": 0.5, "rho": None},
    "quadrature": {
        "panels": 512,
        "nodes": 8,
        "grading_ratio": 0.7,
        "graded_panels": 64,
        "rel_tol": 1e-8,
        "max_extensions": 100,
    },
    "estimation": {
        "gamma": None,
        "gamma_grid": None,
        "noise_variance": 0.0,
        "eval_points": 200,
        "eval_end": None,
        "input": {
            "kind": "data",
            "amplitude": 1.0,
            "amplitudes": None,
            "rates": None,
        },
    },
    "sampling": {
        "seed": 0,
        "count": 100,
        "construction": "cumulative",
        "grid": {"start": 0.1, "stop": 3.0, "num": 25},
    },
    "expand": {"truncation": 1000, "grid_points": 100},
    "norm": {"gamma": 1.0, "truncation": None},
    "tridiag": {"grid": {"start": 0.1, "stop": 3.0, "num": 10}},
    "verify": {"seed": 2026, "sections": None, "mc_count": 100000},
    "io": {"out_dir": "."},
}


def default_config() -> dict:
    return copy.deepcopy(_DEFAULT_CONFIG)


def _merge_into(base: dict, override: dict, path: str) -> None:
    for key, value in override.items():
        here = f"{path}{key}"
        if key not in base:
            raise ConfigError(f"unknown config key: {here}")
        if isinstance(base[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(f"config key {here} must be an object")
            _merge_into(base[key], value, f"{here}.")
        else:
            if isinstance(value, dict):
                raise ConfigError(f"config key {here} must not be an object")
            base[key] = value


def merged_config(user: dict | None) -> dict:
    cfg = default_config()
    if user is not None:
        if not isinstance(user, dict):
            raise ConfigError("config root must be a JSON object")
        _merge_into(cfg, user, "")
    return cfg


def config_hash(cfg: dict) -> str:
    canonical = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()[:12]


def _load_config(path: str | None) -> dict:
    if path is None:
        return merged_config(None)
    try:
        with open(path, encoding="utf-8") as fh:
            user = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    return merged_config(user)


def _fmt(value) -> str:
    return format(float(value), _FLOAT_FMT)


def _write_atomic(path: str, text: str) -> None:
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".dckernel_tmp_")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv_text(command: str, cfg_hash: str, columns, rows) -> str:
    buf = io.StringIO()
    buf.write(f"# dckernel {command} config={cfg_hash}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow(row)
    return buf.getvalue()


def _json_text(payload: dict) -> str:
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def _build_kernel(cfg: dict):
    from . import kernels

    block = cfg["kernel"]
    variant = block["variant"]
    needed = {
        "ss": {"alpha"},
        "tc": {"beta"},
        "dc": {"alpha", "beta"},
        "spline1": set(),
        "spline2": set(),
        "genspline1": {"rho"},
    }
    if variant not in needed:
        raise ConfigError(f"unknown kernel.variant: {variant!r}")
    want = needed[variant]
    defaults = _DEFAULT_CONFIG["kernel"]
    # a hyperparameter still sitting at its default is treated as unset,
    # so switching variant does not force nulling the shipped beta
    given = {
        k
        for k in ("alpha", "beta", "rho")
        if block[k] is not None and (k in want or block[k] != defaults[k])
    }
    if given != want:
        raise ConfigError(
            f"kernel.variant {variant!r} needs exactly {sorted(want) or 'no'} "
            f"hyperparameters, got {sorted(given) or 'none'}"
        )
    if variant == "ss":
        return kernels.ss(alpha=block["alpha"])
    if variant == "tc":
        return kernels.tc(beta=block["beta"])
    if variant == "dc":
        return kernels.dc(alpha=block["alpha"], beta=block["beta"])
    if variant == "spline1":
        return kernels.spline1()
    if variant == "spline2":
        return kernels.spline2()
    return kernels.genspline1(rho=block["rho"])


def _build_quadrature(cfg: dict):
    from .quadrature import QuadratureConfig

    return QuadratureConfig(**cfg["quadrature"])


def _linspace_grid(block: dict):
    import numpy as np

    from .grids import halfline_grid

    num = block["num"]
    if int(num) != num or num < 1:
        raise ConfigError("grid num must be a positive integer")
    return halfline_grid(np.linspace(block["start"], block["stop"], int(num)))


def _read_dataset_csv(path: str):
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            raw = list(csv.reader(fh))
    except OSError as exc:
        raise ConfigError(f"cannot read data file: {exc}") from exc
    rows = [(ln, row) for ln, row in enumerate(raw, start=1) if row]
    if not rows:
        raise ConfigError("data file is empty")
    header_line, header = rows[0]
    header = [c.strip().lower() for c in header]
    if header not in (["time", "y"], ["time", "y", "u"]):
        raise ConfigError(
            f"line {header_line}: expected header 'time,y' or 'time,y,u'"
        )
    times, outputs, inputs = [], [], []
    for ln, row in rows[1:]:
        if len(row) != len(header):
            raise ConfigError(
                f"line {ln}: expected {len(header)} columns, got {len(row)}"
            )
        try:
            vals = [float(cell) for cell in row]
        except ValueError as exc:
            raise ConfigError(f"line {ln}: non-numeric value ({exc})") from exc
        if times and vals[0] <= times[-1]:
            raise ConfigError(f"line {ln}: time must increase strictly")
        times.append(vals[0])
        outputs.append(vals[1])
        if len(header) == 3:
            inputs.append(vals[2])
    if not times:
        raise ConfigError("data file has a header but no rows")
    return times, outputs, (inputs if inputs else None)


def _build_input(cfg: dict, times, u_column):
    from . import estimator as est

    block = cfg["estimation"]["input"]
    kind = block["kind"]
    if kind == "impulse":
        return est.ImpulseInput()
    if kind == "step":
        return est.StepInput(block["amplitude"])
    if kind == "expsum":
        if block["amplitudes"] is None or block["rates"] is None:
            raise ConfigError(
                "estimation.input.kind 'expsum' needs amplitudes and rates"
            )
        return est.ExpSumInput(block["amplitudes"], block["rates"])
    if kind == "data":
        if u_column is None:
            raise ConfigError(
                "estimation.input.kind 'data' needs a 'u' column in the data file"
            )
        return est.ZohInput(times, u_column)
    raise ConfigError(f"unknown estimation.input.kind: {kind!r}")


def _cmd_estimate(cfg: dict, args) -> int:
    import numpy as np

    from . import estimator as est

    if args.data is None:
        raise ConfigError("estimate needs --data pointing at a CSV file")
    times, outputs, u_column = _read_dataset_csv(args.data)
    spec = _build_kernel(cfg)
    signal = _build_input(cfg, times, u_column)
    quad = est.ESTIMATOR_QUADRATURE
    dataset = est.Dataset(
        np.array(times), np.array(outputs), signal, cfg["estimation"]["noise_variance"]
    )
    gamma_cfg = cfg["estimation"]["gamma"]
    grid_cfg = cfg["estimation"]["gamma_grid"]
    if gamma_cfg is not None and grid_cfg is not None:
        raise ConfigError("set estimation.gamma or estimation.gamma_grid, not both")
    search = None
    if grid_cfg is not None:
        search = est.grid_search_gamma(spec, dataset, grid_cfg, quad)
        gamma_cfg = search.best_gamma
    fit = est.estimate(spec, dataset, gamma_cfg, quad)

    end = cfg["estimation"]["eval_end"]
    end = float(times[-1]) if end is None else float(end)
    num = cfg["estimation"]["eval_points"]
    if int(num) != num or num < 2:
        raise ConfigError("estimation.eval_points must be an integer >= 2")
    eval_grid = np.linspace(0.0, end, int(num))
    g_hat = est.reconstruct(fit, eval_grid)
    cfg_hash = config_hash(cfg)
    csv_rows = [(_fmt(t), _fmt(g)) for t, g in zip(eval_grid, g_hat)]
    _write_atomic(
        os.path.join(args.out, "estimate.csv"),
        _csv_text("estimate", cfg_hash, ("time", "g_hat"), csv_rows),
    )

    fitted = fit.fitted_outputs()
    residuals = dataset.outputs - fitted
    spread = float(np.linalg.norm(dataset.outputs - dataset.outputs.mean()))
    if spread > 0.0:
        fit_percent = 100.0 * (1.0 - float(np.linalg.norm(residuals)) / spread)
    else:
        fit_percent = 0.0
    report = {
        "config_hash": cfg_hash,
        "gamma": fit.gamma,
        "coefficients": [float(c) for c in fit.coefficients],
        "residuals": [float(r) for r in residuals],
        "fit_percent": fit_percent,
        "gamma_search": None
        if search is None
        else {
            "gammas": [float(g) for g in search.gammas],
            "holdout_scores": [float(s) for s in search.scores],
            "best_gamma": search.best_gamma,
        },
    }
    _write_atomic(os.path.join(args.out, "report.json"), _json_text(report))
    if args.verbose:
        print(f"estimate: gamma={fit.gamma:g} fit={fit_percent:.3f}%")
    return 0


def _cmd_verify(cfg: dict, args) -> int:
    from . import verification

    seed = cfg["verify"]["seed"]
    if int(seed) != seed or seed < 0:
        raise ConfigError("verify.seed must be a nonnegative integer")
    sections = cfg["verify"]["sections"]
    if sections is not None:
        known = {name for name, _ in verification.SECTIONS}
        unknown = [s for s in sections if s not in known]
        if unknown:
            raise ConfigError(f"unknown verify.sections entries: {unknown}")
    started = time.perf_counter()
    report = []
    for name, runner in verification.SECTIONS:
        if sections is not None and name not in sections:
            continue
        t0 = time.perf_counter()
        checks = runner(int(seed))
        elapsed = time.perf_counter() - t0
        report.append((name, checks))
        for check in checks:
            print(check.line())
        print(f"section {name}: {len(checks)} checks in {elapsed:.2f}s")
    total = time.perf_counter() - started
    passed = verification.suite_passed(report)
    payload = {
        "config_hash": config_hash(cfg),
        "seed": int(seed),
        "passed": passed,
        "sections": [
            {
                "name": name,
                "checks": [
                    {
                        "name": c.name,
                        "measured": c.measured,
                        "threshold": c.threshold,
                        "comparison": c.comparison,
                        "passed": c.passed,
                        "details": c.details,
                    }
                    for c in checks
                ],
            }
            for name, checks in report
        ],
    }
    _write_atomic(os.path.join(args.out, "verify_report.json"), _json_text(payload))
    print(f"verify: {'PASS' if passed else 'FAIL'} in {total:.2f}s")
    return 0 if passed else 1


def _cmd_sample(cfg: dict, args) -> int:
    from . import maxent

    spec = _build_kernel(cfg)
    if spec.variant not in ("tc", "dc"):
        raise ConfigError("sample needs a half-line kernel (tc or dc)")
    block = cfg["sampling"]
    seed = block["seed"]
    count = block["count"]
    if int(count) != count or count < 0:
        raise ConfigError("sampling.count must be a nonnegative integer")
    grid = _linspace_grid(block["grid"])
    if block["construction"] == "cumulative":
        sampler = maxent.sample_dc_process
    elif block["construction"] == "recursion":
        sampler = maxent.sample_dc_markov
    else:
        raise ConfigError(
            f"unknown sampling.construction: {block['construction']!r}"
        )
    samples = sampler(grid, spec, int(seed), int(count))
    rows = [
        (str(draw), _fmt(t), _fmt(value))
        for draw, sample in enumerate(samples)
        for t, value in zip(grid.points, sample.values)
    ]
    _write_atomic(
        os.path.join(args.out, "samples.csv"),
        _csv_text("sample", config_hash(cfg), ("draw", "time", "value"), rows),
    )
    if args.verbose:
        print(f"sample: {count} draws on {grid.n} points")
    return 0


def _cmd_expand(cfg: dict, args) -> int:
    import numpy as np

    from . import kernels, mercer

    spec = _build_kernel(cfg)
    if spec.variant not in ("spline1", "genspline1"):
        raise ConfigError("expand supports unit-interval kernels only")
    block = cfg["expand"]
    truncation = block["truncation"]
    if int(truncation) != truncation or truncation < 1:
        raise ConfigError("expand.truncation must be a positive integer")
    num = block["grid_points"]
    if int(num) != num or num < 1:
        raise ConfigError("expand.grid_points must be a positive integer")
    system = mercer.EigenSystem(spec, truncation=int(truncation))
    pts = (np.arange(int(num)) + 1.0) / float(num)
    partial = mercer.expansion_grid(system, pts, pts)
    exact = kernels.eval_kernel(spec, pts[:, None], pts[None, :])
    error = np.abs(partial - exact)
    rows = [
        (str(i), str(j), _fmt(pts[i]), _fmt(pts[j]), _fmt(partial[i, j]),
         _fmt(exact[i, j]), _fmt(error[i, j]))
        for i in range(int(num))
        for j in range(int(num))
    ]
    _write_atomic(
        os.path.join(args.out, "expansion.csv"),
        _csv_text(
            "expand",
            config_hash(cfg),
            ("row", "col", "x", "y", "truncated", "exact", "abs_error"),
            rows,
        ),
    )
    if args.verbose:
        print(f"expand: sup error {float(error.max()):.6e} at {truncation} terms")
    return 0


def _cmd_norm(cfg: dict, args) -> int:
    import numpy as np

    from . import kernels, mercer, rkhs

    spec = _build_kernel(cfg)
    if spec.variant not in ("tc", "dc"):
        raise ConfigError("norm needs a half-line kernel (tc or dc)")
    gamma = float(cfg["norm"]["gamma"])
    verdict = rkhs.membership_necessary_check(gamma, spec)
    if verdict is rkhs.MembershipVerdict.FAILS_NECESSARY:
        raise ConfigError(
            f"exp(-{gamma:g} t) decays too slowly to have a finite norm here"
        )
    quad = _build_quadrature(cfg)
    handle = rkhs.FunctionHandle(
        func=lambda t: np.exp(-gamma * t),
        deriv=lambda t: -gamma * np.exp(-gamma * t),
        decay_hint=gamma,
    )
    quad_value = rkhs.dc_norm_integral(handle, spec, quad)
    alpha, beta, rho = kernels.stable_params(spec)
    closed = (
        2.0 * beta * (rho - gamma / (2.0 * beta)) ** 2
        / (2.0 * gamma - (4.0 * rho + 2.0) * beta)
    )
    truncation = cfg["norm"]["truncation"]
    if truncation is None:
        series_text = ""
    else:
        if int(truncation) != truncation or truncation < 1:
            raise ConfigError("norm.truncation must be a positive integer")
        system = mercer.EigenSystem(spec, truncation=int(truncation))
        series_value, _ = rkhs.dc_norm_series(handle, system, quad=quad)
        series_text = _fmt(series_value)
    rows = [(_fmt(gamma), _fmt(quad_value), series_text, _fmt(closed))]
    _write_atomic(
        os.path.join(args.out, "norm.csv"),
        _csv_text(
            "norm",
            config_hash(cfg),
            ("gamma", "norm_sq_quadrature", "norm_sq_series", "norm_sq_closed_form"),
            rows,
        ),
    )
    if args.verbose:
        print(f"norm: quadrature {quad_value:.12g}, closed form {closed:.12g}")
    return 0


def _cmd_tridiag(cfg: dict, args) -> int:
    import numpy as np

    from . import kernelmat

    spec = _build_kernel(cfg)
    if spec.variant not in ("tc", "dc"):
        raise ConfigError("tridiag needs a half-line kernel (tc or dc)")
    grid = _linspace_grid(cfg["tridiag"]["grid"])
    inverse = kernelmat.tridiagonal_inverse(spec, grid)
    gram = kernelmat.assemble(spec, grid).values
    residual = float(np.max(np.abs(gram @ inverse - np.eye(grid.n))))
    cfg_hash = config_hash(cfg)
    rows = [
        (str(i), str(j), _fmt(gram[i, j]), _fmt(inverse[i, j]))
        for i in range(grid.n)
        for j in range(grid.n)
    ]
    _write_atomic(
        os.path.join(args.out, "tridiag.csv"),
        _csv_text(
            "tridiag",
            cfg_hash,
            ("row", "col", "kernel_value", "inverse_value"),
            rows,
        ),
    )
    # how far a generic dense inversion strays from the tridiagonal band,
    # as heatmap-free summary numbers
    dense = np.linalg.inv(gram)
    off_rel = kernelmat.max_off_tridiagonal(dense) / float(np.max(np.abs(dense)))
    _write_atomic(
        os.path.join(args.out, "tridiag_offband.csv"),
        _csv_text(
            "tridiag",
            cfg_hash,
            ("dense_offband_rel", "identity_residual"),
            [(_fmt(off_rel), _fmt(residual))],
        ),
    )
    if args.verbose:
        print(f"tridiag: identity residual {residual:.3e}")
    return 0


_COMMANDS = {
    "estimate": _cmd_estimate,
    "verify": _cmd_verify,
    "sample": _cmd_sample,
    "expand": _cmd_expand,
    "norm": _cmd_norm,
    "tridiag": _cmd_tridiag,
}


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dckernel",
        description="Stable kernel toolkit: estimation, verification, artifacts.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("estimate", "fit an impulse response from a CSV dataset"),
        ("verify", "run the invariant suite and write a report"),
        ("sample", "draw trajectories of the kernel's process"),
        ("expand", "tabulate a truncated eigen-expansion against the kernel"),
        ("norm", "compute the norm of an exponential in the kernel space"),
        ("tridiag", "tabulate the tridiagonal inverse of a kernel matrix"),
    ):
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("--config", help="JSON config merged over the defaults")
        cmd.add_argument("--data", help="input CSV (estimate only)")
        cmd.add_argument("--out", default=".", help="output directory")
        cmd.add_argument(
            "--seed", type=int, help="override sampling.seed and verify.seed"
        )
        cmd.add_argument("--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        _pin_threads()
        cfg = _load_config(args.config)
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError("--seed must be nonnegative")
            cfg["sampling"]["seed"] = args.seed
            cfg["verify"]["seed"] = args.seed
        _build_kernel(cfg)  # every command validates the shared blocks up front
        _build_quadrature(cfg)
        os.makedirs(args.out, exist_ok=True)
        return _COMMANDS[args.command](cfg, args)
    except (ValueError, TypeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except RuntimeError as exc:
        print(f"failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
