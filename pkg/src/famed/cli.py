"""Command line front end: ``famed check|solve|asymptotics|report``.

Exit codes: 0 FAMED(l,m), 2 FAMED(l) only, 3 not FAMED, 1 input error,
4 continuation breakdown, 5 a ``report --verify`` re-check failed.
"""

from __future__ import annotations

import hashlib
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from pathlib import Path

import click
import numpy as np

from .errors import BranchJump, ContinuationBreakdown, FamedError, NotFamed
from .famed_check import check_all, load_input, verify_certificate
from .geometry import DEFAULT_RADIUS, deform_path, gluing_residual, holonomy, solve_structure, volume
from .nz_data import Flattening, nz_pair_for, solve_strong_flattening
from .one_loop import one_loop_invariant
from .triangulation_core import OrderedTriangulation, serialize

EXIT_LM, EXIT_INPUT, EXIT_L, EXIT_NOT, EXIT_CONT, EXIT_VERIFY = 0, 1, 2, 3, 4, 5

DEFAULT_TOL = {"residual": 1e-10, "volume": 1e-9, "tau": 1e-8, "slope": 1e-9}


def tolerances() -> dict[str, float]:
    """Defaults, overridden by FAMED_TOL ("1e-8" for all, or "residual=1e-8,tau=1e-6")."""
    tol = dict(DEFAULT_TOL)
    raw = os.environ.get("FAMED_TOL", "").strip()
    if not raw:
        return tol
    try:
        if "=" not in raw:
            return {k: float(raw) for k in tol}
        for part in raw.split(","):
            k, v = part.split("=")
            if k.strip() not in tol:
                raise KeyError(k)
            tol[k.strip()] = float(v)
    except (KeyError, ValueError) as exc:
        raise click.UsageError(f"bad FAMED_TOL {raw!r}: {exc}") from exc
    return tol


def _c(z) -> list[float]:
    z = complex(z)
    return [z.real, z.imag]


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2)


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise click.FileError(path, str(exc)) from exc


def _fail(code: int, exc: Exception):
    click.echo(_dump({"error": type(exc).__name__, "message": str(exc)}))
    sys.exit(code)


def _verdict(cert) -> int:
    return EXIT_LM if cert.famed_lm else (EXIT_L if cert.famed_l else EXIT_NOT)


def _triangulation(text: str) -> OrderedTriangulation:
    data = load_input(text)
    if not isinstance(data, OrderedTriangulation):
        raise NotFamed("matrix-level input carries no triangulation to solve")
    return data


def _complex(ctx, param, value):
    if value is None:
        return None
    try:
        return complex(value.replace(" ", "").replace("i", "j"))
    except ValueError:
        raise click.BadParameter(f"not a complex number: {value!r}")


# -- check ----------------------------------------------------------------------

def _check_text(text: str) -> tuple[int, dict]:
    try:
        data = load_input(text)
        cert, _ = check_all(data)
    except FamedError as exc:
        return EXIT_INPUT, {"error": type(exc).__name__, "message": str(exc)}
    return _verdict(cert), cert.to_json()


def _check_file(path: str) -> tuple[str, int, dict]:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        return path, EXIT_INPUT, {"error": "OSError", "message": str(exc)}
    return (path, *_check_text(text))


class _Group(click.Group):
    """Usage errors exit with 1; click's default 2 would read as FAMED(l)."""

    def main(self, args=None, prog_name=None, **extra):
        extra.pop("standalone_mode", None)
        try:
            rv = super().main(args, prog_name, standalone_mode=False, **extra)
        except click.ClickException as exc:
            exc.show()
            sys.exit(EXIT_INPUT)
        except click.Abort:
            sys.exit(EXIT_INPUT)
        sys.exit(rv if isinstance(rv, int) else 0)


@click.group(cls=_Group)
def main():
    """FAMED checks, gluing solutions and asymptotics for ordered triangulations."""


@main.command()
@click.argument("path", required=False, default="-")
@click.option("--batch", "batch", type=click.Path(exists=True, file_okay=False), default=None,
              help="Check every *.json file in a directory, one JSON line per file.")
@click.option("--jobs", type=int, default=None, help="Worker processes for --batch.")
def check(path, batch, jobs):
    """Decide the FAMED conditions and print the certificate."""
    tol = tolerances()
    if batch:
        files = sorted(str(p) for p in Path(batch).glob("*.json"))
        worst = EXIT_LM
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for name, code, payload in pool.map(_check_file, files):
                click.echo(json.dumps({"file": Path(name).name, "exit": code, "result": payload},
                                      sort_keys=True))
                if code == EXIT_INPUT:
                    worst = EXIT_INPUT
        sys.exit(worst)
    code, payload = _check_text(_read(path))
    if code != EXIT_INPUT:
        payload["tolerances"] = tol
    click.echo(_dump(payload))
    sys.exit(code)


# -- solve ----------------------------------------------------------------------

def _flattening(T) -> Flattening:
    F = solve_strong_flattening(T, 1)
    return F[0] if isinstance(F, list) else F


def _geometry(T, S, curve, param, residual) -> dict:
    F = _flattening(T)
    taus = {c: one_loop_invariant(T, S, F, c).tau for c in ("l", "m")}
    return {
        "curve": curve,
        "parameter": _c(param),
        "shapes": [_c(z) for z in S.z],
        "flags": S.geometric_flags(),
        "residual": float(residual),
        "volume": volume(S),
        "holonomy": {"meridian": _c(holonomy(S, T.meridian)), "longitude": _c(holonomy(S, T.longitude))},
        "flattening": {"f": list(F.f), "fp": list(F.fp), "fpp": list(F.fpp)},
        "tau": {c: {"value": _c(t), "modulus": abs(t)} for c, t in taus.items()},
    }


def solve_report(T, curve="l", value=0j, radius=DEFAULT_RADIUS, steps=20) -> dict:
    if value == 0:
        cs = solve_structure(T, 0.0, curve)
        return _geometry(T, cs.shapes, curve, 0, cs.residual)
    path = deform_path(T, curve, value, steps=steps, radius=radius)
    S = path.samples[-1]
    P = nz_pair_for(T, T.longitude if curve == "l" else T.meridian)
    r = float(np.max(np.abs(gluing_residual(P, S.y, value))))
    out = _geometry(T, S, curve, value, r)
    out["path_steps"] = len(path) - 1
    return out


@main.command()
@click.argument("path", required=False, default="-")
@click.option("--xi", callback=_complex, default=None, help="Longitude parameter (cone deformation).")
@click.option("--wm", callback=_complex, default=None, help="Meridian log-holonomy target.")
@click.option("--curve", type=click.Choice(["l", "m"]), default=None)
@click.option("--radius", type=float, default=DEFAULT_RADIUS, show_default=True)
@click.option("--steps", type=int, default=20, show_default=True)
def solve(path, xi, wm, curve, radius, steps):
    """Solve the gluing equations; print shapes, volume, holonomies and tau."""
    tol = tolerances()
    if curve is None:
        curve = "m" if wm is not None else "l"
    value = (wm if curve == "m" else xi) or 0j
    try:
        T = _triangulation(_read(path))
        out = solve_report(T, curve, value, radius, steps)
    except (ContinuationBreakdown, BranchJump) as exc:
        _fail(EXIT_CONT, exc)
    except NotFamed as exc:
        _fail(EXIT_NOT, exc)
    except FamedError as exc:
        _fail(EXIT_INPUT, exc)
    out["tolerances"] = tol
    click.echo(_dump(out))


# -- asymptotics ------------------------------------------------------------------

def _hbars(ctx, param, value: str):
    try:
        return [float(Fraction(v.strip())) for v in value.split(",") if v.strip()]
    except (ValueError, ZeroDivisionError):
        raise click.BadParameter(f"bad hbar list {value!r}")


def asymptotics_report(T, mode="Z", hbars=None, w=0j, step=0.3) -> dict:
    from .asymptotics import DEFAULT_HBARS, QuadratureSpec, jones_fit, nz_decay_rate, partition_fit
    from .potential import build_context

    hbars = list(DEFAULT_HBARS if hbars is None else hbars)
    ctx = build_context(T)
    spec = QuadratureSpec(step=step)
    if mode == "Z":
        fit = partition_fit(ctx, ctx.alpha0, hbars, spec)
    else:
        fit = jones_fit(ctx, w, hbars, spec)
    out = {"mode": mode, "fit": fit.to_json(), "quadrature_step": step}
    vol = volume(solve_structure(T).shapes)
    out["volume"] = vol
    if mode == "J":
        out["w"] = _c(w)
        ref = nz_decay_rate(T, w) if w != 0 else -vol
        out["reference_rate"] = ref
    else:
        ref = -vol
    out["relative_error"] = abs(fit.slope - ref) / abs(ref)
    return out


def _tsv(out: dict) -> str:
    f = out["fit"]
    rows = ["hbar\tlog_modulus\tscaled"]
    rows += [f"{h!r}\t{v!r}\t{s!r}" for h, v, s in zip(f["hbar"], f["log_modulus"], f["scaled"])]
    return "\n".join(rows) + "\n"


@main.command()
@click.argument("path", required=False, default="-")
@click.option("--mode", type=click.Choice(["Z", "J"]), default="Z", show_default=True)
@click.option("--hbar-list", "hbars", callback=_hbars, default="1/8,1/12,1/16,1/24,1/32", show_default=True)
@click.option("--w", callback=_complex, default="0", show_default=True, help="Meridian parameter for --mode J.")
@click.option("--step", type=float, default=0.3, show_default=True, help="Lattice step in units of sqrt(hbar).")
@click.option("--tsv", type=click.Path(dir_okay=False, writable=True), default=None, help="Write the sample table here.")
def asymptotics(path, mode, hbars, w, step, tsv):
    """Fit 2 pi hbar log|Z| (or the Jones function) as hbar -> 0."""
    tol = tolerances()
    try:
        T = _triangulation(_read(path))
        out = asymptotics_report(T, mode, hbars, w, step)
    except NotFamed as exc:
        _fail(EXIT_NOT, exc)
    except (ContinuationBreakdown, BranchJump) as exc:
        _fail(EXIT_CONT, exc)
    except FamedError as exc:
        _fail(EXIT_INPUT, exc)
    out["tolerances"] = tol
    if tsv:
        Path(tsv).write_text(_tsv(out))
    click.echo(_dump(out))


# -- report -----------------------------------------------------------------------

def build_report(text: str, with_asymptotics: bool = False, timings: bool = False) -> tuple[int, dict]:
    clock = {}
    t0 = time.perf_counter()
    data = load_input(text)
    if isinstance(data, OrderedTriangulation):
        canon = serialize(data)
        embedded = json.loads(canon)
    else:
        embedded = json.loads(text)
        canon = json.dumps(embedded, sort_keys=True)
    rep = {
        "input": embedded,
        "digest": hashlib.sha256(canon.encode()).hexdigest(),
        "tolerances": tolerances(),
    }
    cert, _ = check_all(data)
    rep["certificate"] = cert.to_json()
    clock["check"] = time.perf_counter() - t0
    if isinstance(data, OrderedTriangulation):
        t0 = time.perf_counter()
        rep["structure"] = solve_report(data)
        clock["solve"] = time.perf_counter() - t0
        if with_asymptotics and cert.famed_l:
            t0 = time.perf_counter()
            rep["asymptotics"] = {"Z": asymptotics_report(data, "Z"), "J": asymptotics_report(data, "J")}
            clock["asymptotics"] = time.perf_counter() - t0
    if timings:
        rep["timings"] = clock
    return _verdict(cert), rep


def verify_report(rep: dict) -> dict[str, bool]:
    """Re-check a stored report from its embedded input and witnesses."""
    from .asymptotics import volume_slope_fit
    from .geometry import ShapeAssignment

    tol = rep.get("tolerances", DEFAULT_TOL)
    text = json.dumps(rep["input"])
    data = load_input(text)
    checks = {}
    canon = serialize(data) if isinstance(data, OrderedTriangulation) else json.dumps(rep["input"], sort_keys=True)
    checks["digest"] = hashlib.sha256(canon.encode()).hexdigest() == rep["digest"]
    checks["certificate"] = bool(verify_certificate(data, rep["certificate"]))
    st = rep.get("structure")
    if st is not None:
        T = data
        S = ShapeAssignment(np.array([complex(a, b) for a, b in st["shapes"]]))
        P = nz_pair_for(T, T.longitude if st["curve"] == "l" else T.meridian)
        r = float(np.max(np.abs(gluing_residual(P, S.y, complex(*st["parameter"])))))
        checks["gluing_residual"] = r < tol["residual"]
        checks["volume"] = abs(volume(S) - st["volume"]) < tol["volume"]
        F = Flattening(*(tuple(st["flattening"][k]) for k in ("f", "fp", "fpp")))
        ok = True
        for c, entry in st["tau"].items():
            t = one_loop_invariant(T, S, F, c).tau
            ok &= abs(abs(t) - entry["modulus"]) < tol["tau"] * max(1.0, entry["modulus"])
        checks["tau"] = bool(ok)
    for key, a in rep.get("asymptotics", {}).items():
        f = a["fit"]
        refit = volume_slope_fit(list(zip(f["hbar"], f["log_modulus"])), f["power"])
        checks[f"slope_{key}"] = abs(refit.slope - f["slope"]) < tol["slope"]
    return checks


@main.command()
@click.argument("path", required=False, default="-")
@click.option("--verify", "verify", is_flag=True, help="Treat PATH as a stored report and re-check it.")
@click.option("--with-asymptotics", is_flag=True, help="Include Z and J fits (slow).")
@click.option("--timings", is_flag=True, help="Add wall-clock timings (breaks byte-identical output).")
def report(path, verify, with_asymptotics, timings):
    """Full run report: digest, certificate, structure, 1-loop and optional fits."""
    text = _read(path)
    if verify:
        try:
            checks = verify_report(json.loads(text))
        except (FamedError, KeyError, TypeError, ValueError) as exc:
            _fail(EXIT_INPUT, exc)
        ok = all(checks.values())
        click.echo(_dump({"checks": checks, "verified": ok}))
        sys.exit(EXIT_LM if ok else EXIT_VERIFY)
    try:
        code, rep = build_report(text, with_asymptotics, timings)
    except (ContinuationBreakdown, BranchJump) as exc:
        _fail(EXIT_CONT, exc)
    except FamedError as exc:
        _fail(EXIT_INPUT, exc)
    click.echo(_dump(rep))
    sys.exit(code)


if __name__ == "__main__":
    main()
