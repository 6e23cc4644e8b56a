"""Batch command-line interface: one job per invocation, JSON in and out.

Every run writes a single JSON document

    {command, inputs_echo, result, diagnostics: {eps, radius, iterations}}

to --output or standard output.  Exit codes: 0 success, 2 input error,
3 numerical failure; errors are reported as {error, field, message}.
Complex numbers are always [re, im] pairs, matrices row-major, and all
floats are printed at 17 significant digits so the document is
byte-deterministic and round-trips doubles exactly.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field

import numpy as np

from . import verify as verify_checks
from .engine import (
    EPS_FLOOR,
    ThetaPoint,
    theta,
    truncation_radius,
)
from .distribution import DiscreteGaussian
from .errors import (
    DegenerateSample,
    DivisorHit,
    IndeterminatePoint,
    NoConvergence,
    NonPositiveDefinite,
    NotPD,
    NotUnimodular,
    NoZeroFound,
    RankDeficientInput,
    SingularDivisorPoint,
    ThetaGaussError,
    ToleranceUnreachable,
    TooFewSamples,
)
from .fitting import CanonicalPoint, MomentData, fit, fit_from_sample
from .geometry import cubic_coefficients, identifiability_probe, kummer_quartic_fit, statistical_map, verify_cubic
from .multiindex import moment_map_indices
from .sampler import RNG_ALGORITHM, SamplerConfig, draw, support_radius

COMMANDS = (
    "theta",
    "pmf",
    "moments",
    "entropy",
    "fit",
    "sample",
    "verify",
    "map",
    "cubic",
    "kummer",
    "probe",
)

_NUMERICAL_ERRORS = (
    DivisorHit,
    NoConvergence,
    ToleranceUnreachable,
    NoZeroFound,
    SingularDivisorPoint,
    IndeterminatePoint,
    TooFewSamples,
    DegenerateSample,
    RankDeficientInput,
)

_INPUT_ERRORS = (NonPositiveDefinite, NotPD, NotUnimodular)


class InputError(Exception):
    def __init__(self, field_name: str, message: str):
        super().__init__(message)
        self.field = field_name


@dataclass
class JobConfig:
    command: str
    params_file: str | None = None
    tol: float = 1e-9
    seed: int = 0
    output: str | None = None
    mu: object = None
    sigma: object = None
    count: int | None = None
    d: int = 2
    trials: int = 200
    params: dict = field(default_factory=dict)


# -- deterministic JSON output ------------------------------------------------


def _dump(obj, out: list):
    if obj is None:
        out.append("null")
    elif obj is True:
        out.append("true")
    elif obj is False:
        out.append("false")
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(format(float(obj), ".17g"))
    elif isinstance(obj, dict):
        out.append("{")
        for i, (k, v) in enumerate(obj.items()):
            if i:
                out.append(", ")
            out.append(json.dumps(str(k)))
            out.append(": ")
            _dump(v, out)
        out.append("}")
    elif isinstance(obj, (list, tuple, np.ndarray)):
        out.append("[")
        for i, v in enumerate(list(obj)):
            if i:
                out.append(", ")
            _dump(v, out)
        out.append("]")
    else:
        raise TypeError(f"cannot serialize {type(obj)}")


def dumps(obj) -> str:
    """JSON text with floats at 17 significant digits, insertion-ordered."""
    out: list[str] = []
    _dump(obj, out)
    return "".join(out)


def _pair(z) -> list:
    z = complex(z)
    return [float(z.real), float(z.imag)]


def _pairs_vector(v) -> list:
    return [_pair(z) for z in np.atleast_1d(v)]


def _pairs_matrix(M) -> list:
    return [[_pair(z) for z in row] for row in np.atleast_2d(M)]


# -- input parsing -------------------------------------------------------------


def _as_complex_scalar(value, field_name: str) -> complex:
    if (
        not isinstance(value, (list, tuple))
        or len(value) != 2
        or not all(isinstance(x, (int, float)) for x in value)
    ):
        raise InputError(field_name, "complex numbers must be [re, im] pairs")
    return complex(value[0], value[1])


def _parse_u(value, g: int) -> np.ndarray:
    if not isinstance(value, list) or len(value) != g:
        raise InputError("u", f"u must be a list of {g} [re, im] pairs")
    return np.array([_as_complex_scalar(z, "u") for z in value])


def _parse_B(value, g: int) -> np.ndarray:
    if not isinstance(value, list) or len(value) != g:
        raise InputError("B", f"B must be a {g}x{g} row-major matrix of [re, im] pairs")
    B = np.empty((g, g), dtype=complex)
    for i, row in enumerate(value):
        if not isinstance(row, list) or len(row) != g:
            raise InputError("B", f"B must be a {g}x{g} row-major matrix of [re, im] pairs")
        for j, z in enumerate(row):
            B[i, j] = _as_complex_scalar(z, "B")
    if not np.array_equal(B, B.T):
        raise InputError("B", "B must be symmetric: B[i][j] == B[j][i]")
    return B


_ALLOWED_KEYS = {
    "theta": {"g", "u", "B"},
    "pmf": {"g", "u", "B", "n"},
    "moments": {"g", "u", "B"},
    "entropy": {"g", "u", "B"},
    "map": {"g", "u", "B"},
    "cubic": {"g", "u", "B"},
    "kummer": {"g", "B"},
    "probe": {"g", "B"},
    "sample": {"g", "u", "B"},
    "fit": {"mu", "sigma", "data"},
    "verify": set(),
}


def _load_params_file(path: str, command: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except FileNotFoundError:
        raise InputError("params_file", f"cannot open {path}")
    except json.JSONDecodeError as exc:
        raise InputError("params_file", f"invalid JSON: {exc}")
    if not isinstance(raw, dict):
        raise InputError("params_file", "parameter file must hold a JSON object")
    allowed = _ALLOWED_KEYS[command]
    unknown = set(raw) - allowed
    if unknown:
        raise InputError(
            sorted(unknown)[0],
            f"unknown key(s) {sorted(unknown)} for command {command!r}; "
            f"allowed: {sorted(allowed)}",
        )
    return raw


def _require_theta_params(cfg: JobConfig) -> tuple[np.ndarray, np.ndarray]:
    raw = cfg.params
    if "g" not in raw or not isinstance(raw["g"], int) or raw["g"] < 1:
        raise InputError("g", "g must be a positive integer")
    g = raw["g"]
    if "B" not in raw:
        raise InputError("B", "B is required")
    B = _parse_B(raw["B"], g)
    if "u" in raw:
        u = _parse_u(raw["u"], g)
    else:
        u = np.zeros(g, dtype=complex)
    return u, B


def _require_real(u, B):
    if np.max(np.abs(u.imag)) > 1e-12:
        raise InputError("u", "this command requires real parameters")
    if np.max(np.abs(B.imag)) > 1e-12:
        raise InputError("B", "this command requires real parameters")
    return u.real, B.real


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InputError("argv", message)


def parse_config(argv) -> JobConfig:
    """Validate flags and the params file into a JobConfig."""
    parser = _Parser(prog="thetagauss", add_help=True)
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--params", dest="params_file")
    parser.add_argument("--mu")
    parser.add_argument("--sigma")
    parser.add_argument("--count", type=int)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--tol", type=float, default=1e-9)
    parser.add_argument("--d", type=int, default=2)
    parser.add_argument("--trials", type=int, default=200)
    parser.add_argument("--output")
    ns = parser.parse_args(argv)

    cfg = JobConfig(
        command=ns.command,
        params_file=ns.params_file,
        tol=ns.tol,
        seed=ns.seed,
        output=ns.output,
        count=ns.count,
        d=ns.d,
        trials=ns.trials,
    )
    if cfg.tol <= 0:
        raise InputError("tol", "tol must be positive")
    if ns.mu is not None:
        try:
            cfg.mu = json.loads(ns.mu)
        except json.JSONDecodeError:
            raise InputError("mu", "--mu must be a JSON array")
    if ns.sigma is not None:
        try:
            cfg.sigma = json.loads(ns.sigma)
        except json.JSONDecodeError:
            raise InputError("sigma", "--sigma must be a JSON matrix")
    if cfg.params_file is not None:
        cfg.params = _load_params_file(cfg.params_file, cfg.command)
    if cfg.command == "fit":
        if cfg.mu is None and "mu" in cfg.params:
            cfg.mu = cfg.params["mu"]
        if cfg.sigma is None and "sigma" in cfg.params:
            cfg.sigma = cfg.params["sigma"]
        if ("mu" in cfg.params) != ("sigma" in cfg.params) and "data" not in cfg.params:
            raise InputError("sigma", "fit needs both mu and sigma (or data)")
    elif cfg.command in ("theta", "pmf", "moments", "entropy", "map", "cubic", "sample", "kummer", "probe"):
        if not cfg.params:
            raise InputError("params_file", f"{cfg.command} requires --params")
    return cfg


# -- command execution ----------------------------------------------------------


def _diag(eps=None, radius=None, iterations=None) -> dict:
    return {"eps": eps, "radius": radius, "iterations": iterations}


def _run_theta(cfg: JobConfig):
    u, B = _require_theta_params(cfg)
    eps = max(EPS_FLOOR, cfg.tol)
    p = ThetaPoint(u, B)
    budget = truncation_radius(p.B, p.u, None, eps)
    value = theta(p, eps)
    echo = {"g": p.g, "u": _pairs_vector(u), "B": _pairs_matrix(B), "tol": cfg.tol}
    return {"theta": _pair(value)}, echo, _diag(eps=eps, radius=budget.radius)


def _run_pmf(cfg: JobConfig):
    u, B = _require_theta_params(cfg)
    if "n" not in cfg.params:
        raise InputError("n", "pmf requires the lattice point n")
    n = cfg.params["n"]
    if not isinstance(n, list) or not all(isinstance(x, int) for x in n):
        raise InputError("n", "n must be a list of integers")
    eps = max(EPS_FLOOR, cfg.tol)
    d = DiscreteGaussian(u, B, eps)
    budget = truncation_radius(d.point.B, d.point.u, None, eps)
    value = d.pmf(n)
    echo = {
        "g": d.g,
        "u": _pairs_vector(u),
        "B": _pairs_matrix(B),
        "n": [int(x) for x in n],
        "tol": cfg.tol,
    }
    return {"pmf": _pair(value)}, echo, _diag(eps=eps, radius=budget.radius)


def _run_moments(cfg: JobConfig):
    u, B = _require_theta_params(cfg)
    eps = max(EPS_FLOOR, cfg.tol)
    d = DiscreteGaussian(u, B, eps)
    a = [0] * d.g
    a[0] = 2
    budget = truncation_radius(d.point.B, d.point.u, tuple(a), eps)
    mean, cov = d.mean_cov()
    echo = {"g": d.g, "u": _pairs_vector(u), "B": _pairs_matrix(B), "tol": cfg.tol}
    result = {"mean": _pairs_vector(mean), "covariance": _pairs_matrix(cov)}
    return result, echo, _diag(eps=eps, radius=budget.radius)


def _run_entropy(cfg: JobConfig):
    u, B = _require_theta_params(cfg)
    eps = max(EPS_FLOOR, cfg.tol)
    d = DiscreteGaussian(u, B, eps)
    budget = truncation_radius(d.point.B, d.point.u, None, eps)
    value = d.entropy()
    echo = {"g": d.g, "u": _pairs_vector(u), "B": _pairs_matrix(B), "tol": cfg.tol}
    result = {"entropy": _pair(value), "branch": "principal"}
    return result, echo, _diag(eps=eps, radius=budget.radius)


def _run_fit(cfg: JobConfig):
    if "data" in cfg.params:
        data = cfg.params["data"]
        report = fit_from_sample(data, tol=cfg.tol)
        echo = {"data": data, "tol": cfg.tol}
    else:
        if cfg.mu is None or cfg.sigma is None:
            raise InputError("mu", "fit requires --mu and --sigma (or a data file)")
        try:
            target = MomentData(np.asarray(cfg.mu, dtype=float), np.asarray(cfg.sigma, dtype=float))
        except (TypeError, ValueError) as exc:
            raise InputError("sigma", f"invalid moment target: {exc}")
        report = fit(target, tol=cfg.tol)
        echo = {
            "mu": [float(x) for x in target.mu],
            "sigma": [[float(x) for x in row] for row in target.sigma],
            "tol": cfg.tol,
        }
    result = {
        "u": [float(x) for x in report.params.u],
        "B": [[float(x) for x in row] for row in report.params.B],
        "grad_norm": report.grad_norm,
        "objective": report.objective,
        "converged": report.converged,
    }
    return result, echo, _diag(eps=1e-4 * cfg.tol, iterations=report.iterations)


def _run_sample(cfg: JobConfig):
    u, B = _require_theta_params(cfg)
    u, B = _require_real(u, B)
    if cfg.count is None or cfg.count < 1:
        raise InputError("count", "sample requires --count >= 1")
    p = CanonicalPoint(u, B)
    scfg = SamplerConfig(tail_eps=min(cfg.tol, 1e-6), seed=cfg.seed)
    radius = support_radius(p, scfg.tail_eps)
    sample = draw(p, cfg.count, scfg)
    echo = {
        "g": p.g,
        "u": [float(x) for x in u],
        "B": [[float(x) for x in row] for row in B],
        "count": cfg.count,
        "seed": cfg.seed,
    }
    result = {
        "draws": [[int(x) for x in row] for row in sample],
        "rng": RNG_ALGORITHM,
        "tail_eps": scfg.tail_eps,
    }
    return result, echo, _diag(eps=scfg.tail_eps, radius=radius)


def _run_verify(cfg: JobConfig):
    checks = verify_checks.run_all(seed=cfg.seed)
    all_passed = all(c["passed"] for c in checks)
    result = {"checks": checks, "all_passed": all_passed}
    if not all_passed:
        raise _VerifyFailed(result)
    return result, {"seed": cfg.seed}, _diag()


class _VerifyFailed(ThetaGaussError):
    def __init__(self, result):
        super().__init__("one or more verify checks failed")
        self.result = result


def _run_map(cfg: JobConfig):
    u, B = _require_theta_params(cfg)
    if cfg.d < 2:
        raise InputError("d", "map degree must be at least 2")
    eps = max(EPS_FLOOR, cfg.tol)
    point = ThetaPoint(u, B)
    pt = statistical_map(cfg.d, point, eps)
    labels = moment_map_indices(point.g, cfg.d)
    echo = {
        "g": point.g,
        "u": _pairs_vector(u),
        "B": _pairs_matrix(B),
        "d": cfg.d,
        "tol": cfg.tol,
    }
    result = {
        "degree": cfg.d,
        "indices": [list(a) for a in labels],
        "coordinates": _pairs_vector(pt.coords),
    }
    return result, echo, _diag(eps=eps)


def _run_cubic(cfg: JobConfig):
    u, B = _require_theta_params(cfg)
    if B.shape != (1, 1):
        raise InputError("g", "cubic is a g = 1 command")
    eps = max(EPS_FLOOR, cfg.tol)
    coef = cubic_coefficients(B, eps)
    echo = {"g": 1, "B": _pairs_matrix(B), "tol": cfg.tol}
    result = {
        "e1": _pair(coef.e1),
        "e2": _pair(coef.e2),
        "e3": _pair(coef.e3),
        "a": _pair(coef.a),
        "b": _pair(coef.b),
        "c": _pair(coef.c),
    }
    if "u" in cfg.params:
        echo["u"] = _pairs_vector(u)
        res = verify_cubic(complex(u[0]), complex(B[0, 0]), eps)
        result["residuals"] = {
            "r_cubic": res.r_cubic,
            "r_quartic": res.r_quartic,
            "r_det": res.r_det,
        }
    return result, echo, _diag(eps=eps)


def _run_kummer(cfg: JobConfig):
    _, B = _require_theta_params(cfg)
    if B.shape != (2, 2):
        raise InputError("g", "kummer is a g = 2 command")
    count = cfg.count if cfg.count is not None else 60
    if count < 36:
        raise InputError("count", "kummer needs at least 36 points")
    rng = np.random.Generator(np.random.Philox(cfg.seed))
    points = []
    while len(points) < count:
        x = rng.uniform(0.0, 1.0, 2)
        y = rng.uniform(0.0, 1.0, 2)
        u = 1j * x + B @ y
        if abs(theta(ThetaPoint(u, B), 1e-10)) < 0.2:
            continue
        points.append(statistical_map(2, ThetaPoint(u, B), 1e-13))
    fit_result = kummer_quartic_fit(B, points)
    echo = {"g": 2, "B": _pairs_matrix(B), "count": count, "seed": cfg.seed}
    result = {
        "residual": fit_result.residual,
        "second_smallest": float(fit_result.singular_values[-2]),
        "coefficients": _pairs_vector(fit_result.coeffs),
        "points_used": len(points),
    }
    return result, echo, _diag(eps=1e-13)


def _run_probe(cfg: JobConfig):
    _, B = _require_theta_params(cfg)
    report = identifiability_probe(B, trials=cfg.trials, seed=cfg.seed)
    echo = {"g": B.shape[0], "B": _pairs_matrix(B), "trials": cfg.trials, "seed": cfg.seed}
    result = {
        "trials": report.trials,
        "collisions": report.collisions,
        "min_separation": report.min_separation,
    }
    return result, echo, _diag(eps=1e-12)


_HANDLERS = {
    "theta": _run_theta,
    "pmf": _run_pmf,
    "moments": _run_moments,
    "entropy": _run_entropy,
    "fit": _run_fit,
    "sample": _run_sample,
    "verify": _run_verify,
    "map": _run_map,
    "cubic": _run_cubic,
    "kummer": _run_kummer,
    "probe": _run_probe,
}


def _write(cfg_output, text: str):
    if cfg_output:
        with open(cfg_output, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        sys.stdout.write(text + "\n")


def execute(cfg: JobConfig) -> int:
    """Run the configured job and write its JSON document; returns the exit
    code (0 success, 2 input error, 3 numerical failure)."""
    try:
        result, echo, diagnostics = _HANDLERS[cfg.command](cfg)
    except InputError as exc:
        doc = {"error": "InputError", "field": exc.field, "message": str(exc)}
        _write(cfg.output, dumps(doc))
        return 2
    except _INPUT_ERRORS as exc:
        doc = {"error": type(exc).__name__, "field": None, "message": str(exc)}
        _write(cfg.output, dumps(doc))
        return 2
    except ValueError as exc:
        doc = {"error": "InputError", "field": None, "message": str(exc)}
        _write(cfg.output, dumps(doc))
        return 2
    except _VerifyFailed as exc:
        doc = {
            "command": cfg.command,
            "inputs_echo": {"seed": cfg.seed},
            "result": exc.result,
            "diagnostics": _diag(),
        }
        _write(cfg.output, dumps(doc))
        return 3
    except _NUMERICAL_ERRORS as exc:
        doc = {"error": type(exc).__name__, "field": None, "message": str(exc)}
        _write(cfg.output, dumps(doc))
        return 3
    doc = {
        "command": cfg.command,
        "inputs_echo": echo,
        "result": result,
        "diagnostics": diagnostics,
    }
    _write(cfg.output, dumps(doc))
    return 0


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        cfg = parse_config(argv)
    except InputError as exc:
        sys.stdout.write(
            dumps({"error": "InputError", "field": exc.field, "message": str(exc)}) + "\n"
        )
        return 2
    return execute(cfg)


if __name__ == "__main__":
    sys.exit(main())
