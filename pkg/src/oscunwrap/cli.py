"""Command-line front end: parameter sweeps, bound tables, lemma verification,
and single-shot decode traces.

Exit codes: 0 success, 2 config error, 3 code/matrix-file error, 4 decoder
budget abort, 5 lemma-check failure.
"""

from __future__ import annotations

import argparse
import os
import sys
import tempfile

import numpy as np

from .bounds import bound_report, run_lemma_checks
from .code import OscillatorCode, _parse_kv_lines, code_from_fields
from .errors import (
    BudgetExceeded,
    ConfigError,
    NotSymplectic,
    OscUnwrapError,
    SearchBudgetExceeded,
)
from .montecarlo import ExperimentSpec, _transform_matrix, build_problem, estimate_psucc
from .unwrap import map_estimate, modulo_reduce

EXIT_CONFIG = 2
EXIT_CODE_FILE = 3
EXIT_BUDGET = 4
EXIT_LEMMA = 5

SCHEMA_LINE = "# osc-unwrap v1"

SWEEP_HEADER = (
    "sigma,eps,trials,successes,p_hat,ci_low,ci_high,"
    "theorem_bound,corollary_bound,schur_bound,sq_u,seed"
)
BOUNDS_HEADER = (
    "sigma,eps,theorem_bound,corollary_bound,schur_bound,"
    "lambda_min_sigma,lambda_min_schur,sq_u"
)


def _fmt(x: float) -> str:
    """Shortest round-trip decimal representation."""
    return repr(float(x))


def _parse_float_list(value: str, key: str) -> list[float]:
    parts = [p for p in value.replace(",", " ").split() if p]
    if not parts:
        raise ConfigError(f"{key} must be a non-empty list")
    try:
        out = [float(p) for p in parts]
    except ValueError as exc:
        raise ConfigError(f"{key}: {exc}") from exc
    if any(v <= 0 for v in out):
        raise ConfigError(f"{key} entries must be positive")
    return out


def load_config(path: str) -> dict[str, str]:
    try:
        with open(path) as fh:
            return _parse_kv_lines(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc


def _build_code(fields: dict[str, str], base_dir: str) -> OscillatorCode:
    return code_from_fields(fields, base_dir=base_dir)


def _require(fields: dict[str, str], key: str) -> str:
    if key not in fields:
        raise ConfigError(f"missing required config field {key!r}")
    return fields[key]


def _atomic_write(path: str, lines: list[str]) -> None:
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".osc-unwrap-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write("\n".join(lines) + "\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def run_sweep(code, fields, seed: int, out_path: str, threads: int) -> int:
    sigma_grid = _parse_float_list(_require(fields, "sigma_grid"), "sigma_grid")
    eps_grid = _parse_float_list(_require(fields, "eps_grid"), "eps_grid")
    try:
        trials = int(_require(fields, "trials"))
    except ValueError as exc:
        raise ConfigError(f"trials must be an integer: {exc}") from exc

    lines = [SCHEMA_LINE, SWEEP_HEADER]
    for sigma in sigma_grid:
        spec = ExperimentSpec(
            code=code, sigma=sigma, eps_list=tuple(eps_grid),
            trials=trials, master_seed=seed,
        )
        try:
            report = estimate_psucc(spec, threads=threads)
        except SearchBudgetExceeded as exc:
            print(f"error: decoder budget abort at sigma={sigma}: {exc}", file=sys.stderr)
            return EXIT_BUDGET
        for rec in report.records:
            br = bound_report(code, sigma, rec.eps)
            lines.append(
                ",".join(
                    [
                        _fmt(sigma), _fmt(rec.eps), str(rec.trials),
                        str(rec.successes), _fmt(rec.p_hat),
                        _fmt(rec.ci_low), _fmt(rec.ci_high),
                        _fmt(br.theorem_bound), _fmt(br.corollary_bound),
                        _fmt(br.schur_bound), _fmt(br.sq_u), str(seed),
                    ]
                )
            )
    _atomic_write(out_path, lines)
    return 0


def run_bounds(code, fields, out_path: str) -> int:
    sigma_grid = _parse_float_list(_require(fields, "sigma_grid"), "sigma_grid")
    eps_grid = _parse_float_list(_require(fields, "eps_grid"), "eps_grid")
    lines = [SCHEMA_LINE, BOUNDS_HEADER]
    for sigma in sigma_grid:
        for eps in eps_grid:
            br = bound_report(code, sigma, eps)
            lines.append(
                ",".join(
                    [
                        _fmt(sigma), _fmt(eps), _fmt(br.theorem_bound),
                        _fmt(br.corollary_bound), _fmt(br.schur_bound),
                        _fmt(br.lambda_min_sigma), _fmt(br.lambda_min_schur),
                        _fmt(br.sq_u),
                    ]
                )
            )
    _atomic_write(out_path, lines)
    return 0


def run_verify_lemmas(seed: int, out_stream=None) -> int:
    out = out_stream or sys.stdout
    results = run_lemma_checks(seed)
    failed = 0
    for r in results:
        print(r.line(), file=out)
        failed += r.failures
    if failed:
        print(f"FAIL: {failed} lemma-check failure(s)", file=out)
        return EXIT_LEMMA
    print("all lemma checks passed", file=out)
    return 0


def run_decode_one(code, fields, out_stream=None) -> int:
    out = out_stream or sys.stdout
    xi_raw = _require(fields, "xi")
    parts = [p for p in xi_raw.replace(",", " ").split() if p]
    try:
        xi = np.array([float(p) for p in parts])
    except ValueError as exc:
        raise ConfigError(f"xi: {exc}") from exc
    if xi.shape != (code.dim,):
        print(
            f"error: xi has length {len(xi)}, code expects {code.dim}",
            file=sys.stderr,
        )
        return EXIT_CODE_FILE
    try:
        sigma = float(_require(fields, "sigma"))
    except ValueError as exc:
        raise ConfigError(f"sigma must be a float: {exc}") from exc

    problem = build_problem(code, sigma)
    x = _transform_matrix(code) @ xi
    ka = code.logical_dim
    syndrome = modulo_reduce(x[ka:], code.delta)
    result = map_estimate(problem, syndrome)
    logical = x[:ka] - result.x_hat[:ka]

    def vec(v):
        return "(" + ", ".join(f"{float(e):.12g}" for e in v) + ")"

    print(f"syndrome: {vec(syndrome)}", file=out)
    print(f"shift b: {vec(result.b)}", file=out)
    print(f"x_hat: {vec(result.x_hat)}", file=out)
    print(f"objective: {result.objective:.12g}", file=out)
    print(f"tie: {result.tie}", file=out)
    print(f"logical error: {vec(logical)}", file=out)
    print(f"logical norm: {float(np.linalg.norm(logical)):.12g}", file=out)
    return 0


def _resolve_threads(arg_value: int | None) -> int:
    if arg_value is not None:
        return max(arg_value, 1)
    env = os.environ.get("OSC_UNWRAP_THREADS")
    if env:
        try:
            return max(int(env), 1)
        except ValueError as exc:
            raise ConfigError(f"OSC_UNWRAP_THREADS: {exc}") from exc
    return 1


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="osc-unwrap",
        description="Monte-Carlo decoding experiments and bound verification "
        "for modulo-reduced Gaussian estimation.",
    )
    parser.add_argument("--config", help="path to key-value config file")
    parser.add_argument(
        "--mode",
        choices=["sweep", "bounds", "verify-lemmas", "decode-one"],
        help="run mode (overrides config)",
    )
    parser.add_argument("--seed", type=int, help="master seed (overrides config)")
    parser.add_argument("--out", help="output path (overrides config)")
    parser.add_argument("--threads", type=int, help="worker count")
    args = parser.parse_args(argv)

    try:
        threads = _resolve_threads(args.threads)
        fields = load_config(args.config) if args.config else {}
        mode = args.mode or fields.get("mode")
        if mode not in {"sweep", "bounds", "verify-lemmas", "decode-one"}:
            raise ConfigError(f"mode must be given via --mode or config, got {mode!r}")

        seed = args.seed
        if seed is None and "seed" in fields:
            try:
                seed = int(fields["seed"])
            except ValueError as exc:
                raise ConfigError(f"seed must be an integer: {exc}") from exc
        if seed is None:
            seed = 0

        if mode == "verify-lemmas":
            return run_verify_lemmas(seed)

        base_dir = os.path.dirname(args.config) if args.config else ""
        try:
            code = _build_code(fields, base_dir)
        except (ConfigError, NotSymplectic, OSError, ValueError) as exc:
            print(f"error: cannot build code: {exc}", file=sys.stderr)
            return EXIT_CODE_FILE

        if mode == "decode-one":
            return run_decode_one(code, fields)

        out_path = args.out or fields.get("output")
        if not out_path:
            raise ConfigError("output path required via --out or config 'output'")
        if mode == "sweep":
            return run_sweep(code, fields, seed, out_path, threads)
        return run_bounds(code, fields, out_path)

    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SearchBudgetExceeded, BudgetExceeded) as exc:
        print(f"error: decoder budget: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except OscUnwrapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CODE_FILE


if __name__ == "__main__":
    sys.exit(main())
