"""Command line interface.

Every command writes JSON (the source of truth) and, where it makes sense,
a CSV projection into ``--output-dir``.  Each JSON file carries
``"schema": 1``, the echoed configuration, the potential fingerprint, the
basis windows and the library version.

Exit codes: 0 success, 1 failed acceptance criteria (``validate``),
2 configuration error, 3 numerical failure (partial results are still
written with ``"status": "partial"``).
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, acceptance, bands, magic, traces
from . import multiplicity as mult_mod
from .errors import FlatMagicError
from .lattice import DUAL_LENGTH
from .operators import ACCEPT_RADIUS, QUICK_RADIUS, chiral_windows, window
from .lattice import LAMBDA_STAR
from .potential import TrigPolynomial, bm_potential_U, load_potential, validate_U

SCHEMA = 1
EXIT_OK, EXIT_FAILED, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3

log = logging.getLogger("flatmagic")


class ConfigError(ValueError):
    pass


def parse_complex(text: str) -> complex:
    """``"1+0.5i"``, ``"1+0.5j"``, ``"2"`` or ``"-i"`` as a complex number."""
    s = str(text).strip().replace(" ", "").replace("i", "j")
    if s in ("j", "+j"):
        return 1j
    if s == "-j":
        return -1j
    try:
        return complex(s)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a complex number: {text!r}") from exc


def _c(z: complex) -> dict:
    return {"re": float(np.real(z)), "im": float(np.imag(z))}


@dataclass
class RunConfig:
    command: str
    model: str = "scalar"
    potential: str = "builtin-bm"
    radii: list[float] = field(default_factory=lambda: [r / DUAL_LENGTH for r in magic.DEFAULT_RADII])
    k: complex = 1j
    k2: complex = 1 + 0.5j
    max_abs_alpha: float | None = None
    flat_tol: float = bands.FLAT_TOL
    cluster_tol: float = magic.CLUSTER_TOL
    contour_tol: float = mult_mod.CONTOUR_TOL
    output_format: str = "json"
    output_dir: str = "."
    seed: int = 0
    workers: int = 1
    extra: dict = field(default_factory=dict)

    def validate(self) -> None:
        if self.model not in ("scalar", "chiral"):
            raise ConfigError(f"unknown model {self.model!r}")
        if self.potential != "builtin-bm" and not Path(self.potential).is_file():
            raise ConfigError(f"potential file {self.potential!r} not found")
        if any(r <= 0 for r in self.radii):
            raise ConfigError("radii must be positive")
        if self.command == "magic" and len(self.radii) < 2:
            raise ConfigError("the radius ladder needs at least two radii")
        if self.max_abs_alpha is not None and self.max_abs_alpha <= 0:
            raise ConfigError("--max-abs-alpha must be positive")
        for name in ("flat_tol", "cluster_tol", "contour_tol"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        if self.output_format not in ("json", "csv"):
            raise ConfigError(f"unknown output format {self.output_format!r}")
        if self.workers < 1:
            raise ConfigError("--workers must be at least 1")

    def echo(self) -> dict:
        out = asdict(self)
        for key in ("k", "k2"):
            z = out.pop(key)
            out[f"{key}_re"], out[f"{key}_im"] = float(z.real), float(z.imag)
        extra = out.pop("extra")
        out.update({k: _jsonable(v) for k, v in extra.items()})
        return out

    def load_U(self) -> TrigPolynomial:
        if self.potential == "builtin-bm":
            return bm_potential_U()
        U = load_potential(self.potential)
        if len(U):
            validate_U(U)
        return U


def _jsonable(v):
    if isinstance(v, complex):
        return _c(v)
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


def _envelope(cfg: RunConfig, U: TrigPolynomial, status: str, windows, body: dict) -> dict:
    return {
        "schema": SCHEMA,
        "version": __version__,
        "command": cfg.command,
        "status": status,
        "config": cfg.echo(),
        "potential_fingerprint": U.fingerprint(),
        "windows": windows,
        **body,
    }


def _write_json(cfg: RunConfig, name: str, payload: dict) -> Path:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / name
    path.write_text(json.dumps(payload, indent=2, sort_keys=False, allow_nan=False,
                               default=_json_default) + "\n")
    log.info("wrote %s", path)
    return path


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, complex):
        return _c(obj)
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _clean(x):
    """Replace non-finite floats (not valid JSON) by None, recursively."""
    if isinstance(x, float) and not np.isfinite(x):
        return None
    if isinstance(x, dict):
        return {k: _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    return x


def _window_desc(model: str, radius: float, k: complex) -> list[dict]:
    if model == "scalar":
        return [window(LAMBDA_STAR, radius, k).describe()]
    return [w.describe() for w in chiral_windows(radius, k)]


def cmd_magic(cfg: RunConfig) -> int:
    U = cfg.load_U()
    radii = [r * DUAL_LENGTH for r in cfg.radii]
    status, code, cands, error = "complete", EXIT_OK, [], None
    try:
        cands = magic.find_magics(cfg.model, cfg.k, cfg.k2, radii, cfg.max_abs_alpha, U,
                                  workers=cfg.workers)
    except FlatMagicError as exc:
        status, code, error = "partial", EXIT_NUMERIC, f"{type(exc).__name__}: {exc}"
    cands = sorted(cands, key=lambda c: (c.alpha.real, c.alpha.imag))
    spacings = magic.real_magic_spacings(cands)
    body = {
        "magics": [c.to_dict() for c in cands],
        "spacings": [{"alpha": float(a), "gap": float(g)} for a, g in spacings],
    }
    if error:
        body["error"] = error
    windows = _window_desc(cfg.model, max(radii), cfg.k) if len(U) else []
    _write_json(cfg, "magics.json", _clean(_envelope(cfg, U, status, windows, body)))
    if cfg.output_format == "csv":
        path = Path(cfg.output_dir) / "magics.csv"
        with path.open("w", newline="") as fh:
            fields = list(body["magics"][0]) if body["magics"] else list(
                magic.MagicCandidate(0j, 0j, magic.Model.SCALAR, 0.0, 0j).to_dict())
            writer = csv.DictWriter(fh, fieldnames=fields)
            writer.writeheader()
            writer.writerows(body["magics"])
    print(f"{len(cands)} candidates, {sum(c.converged for c in cands)} converged; "
          f"real spacings: {', '.join(f'{g:.4f}' for _, g in spacings) or 'none'}")
    return code


def _kset(args) -> bands.KSet:
    if args.grid:
        return bands.grid(args.grid)
    if args.waypoints:
        return bands.path(args.waypoints, args.samples)
    return bands.default_path(args.samples)


def cmd_bands(cfg: RunConfig, args) -> int:
    U = cfg.load_U()
    kset = _kset(args)
    radius = args.radius * DUAL_LENGTH
    sweep = bands.band_sweep(args.alpha, kset, args.n_bands, radius, cfg.model, U, cfg.workers)
    scale = bands.band_scale(args.alpha, cfg.model, U)
    top = float(sweep.lowest.max())
    body = {
        "bands": sweep.to_dict(),
        "scale": scale,
        "scale_definition": ("|alpha|^2 ||V_hat||_2 + (4 pi / sqrt 3)^2" if cfg.model == "scalar"
                             else "|alpha| ||U_hat||_2 + 4 pi / sqrt 3"),
        "lowest_band_sup": top,
        "flat": top < cfg.flat_tol * scale,
    }
    _write_json(cfg, "bands.json", _envelope(cfg, U, "complete", sweep.windows, body))
    path = Path(cfg.output_dir) / "bands.csv"
    with path.open("w", newline="") as fh:
        sweep.write_csv(fh)
    print(f"lowest band in [{sweep.lowest.min():.6g}, {top:.6g}], "
          f"sup / scale = {top / scale:.3g} ({'flat' if body['flat'] else 'not flat'})")
    return EXIT_OK


def cmd_mult(cfg: RunConfig, args) -> int:
    U = cfg.load_U()
    radius = args.radius * DUAL_LENGTH
    if cfg.model == "scalar":
        from .operators import scalar_V
        family = mult_mod.scalar_family(args.alpha, V=scalar_V(U), radius=radius)
    else:
        family = mult_mod.chiral_family(args.alpha, U=U, radius=radius)
    results, status, code = [], "complete", EXIT_OK
    for k in args.k or [cfg.k]:
        try:
            res = mult_mod.multiplicity(family, k, args.contour_radius,
                                        contour_tol=cfg.contour_tol, workers=cfg.workers)
            results.append(res.to_dict())
            print(f"k = {k}: m = {res.to_dict()['m']}")
        except FlatMagicError as exc:
            status, code = "partial", EXIT_NUMERIC
            results.append({"k_re": k.real, "k_im": k.imag, "error": f"{type(exc).__name__}: {exc}"})
            print(f"k = {k}: {type(exc).__name__}: {exc}")
    windows = [w.describe() for w in family.windows]
    _write_json(cfg, "mult.json", _clean(_envelope(cfg, U, status, windows, {"results": results})))
    return code


def cmd_traces(cfg: RunConfig, args) -> int:
    U = cfg.load_U()
    radius = args.radius * DUAL_LENGTH
    out, probes = [], []
    for p in args.p:
        for k in (cfg.k, cfg.k2):
            lat = traces.trace_power_lattice(cfg.model, k, p, radius, U)
            eig = traces.trace_power_eig(cfg.model, k, p, radius, U)
            rel = abs(lat.value - eig.value) / max(abs(eig.value), np.finfo(float).tiny)
            out.append({"lattice": lat.to_dict(), "eigen": eig.to_dict(), "relative_difference": rel})
            print(f"p = {p}, k = {k}: lattice {lat.value:.10g}, eigen {eig.value:.10g}, rel diff {rel:.2e}")
        finding = traces.probe_finding(out[-2]["lattice"]["value_re"], max_den=args.max_den)
        probes.append({"p": p, **finding.to_dict()})
        print(f"p = {p}: tr / (pi/sqrt3) = {finding.ratio:.10g}, best fraction {finding.fraction}")
    windows = _window_desc(cfg.model, radius, cfg.k) if len(U) else []
    body = {"traces": out, "probes": probes}
    _write_json(cfg, "traces.json", _clean(_envelope(cfg, U, "complete", windows, body)))
    return EXIT_OK


def cmd_spacing(cfg: RunConfig, args) -> int:
    data = json.loads(Path(args.input).read_text())
    cands = [magic.MagicCandidate(complex(m["alpha_re"], m["alpha_im"]),
                                  complex(m["lambda_re"], m["lambda_im"]),
                                  magic.Model(data["config"]["model"]), m["radius"], 0j,
                                  m["multiplicity"], converged=m["converged"])
             for m in data["magics"]]
    sp = magic.real_magic_spacings(cands, converged_only=not args.all)
    for a, g in sp:
        print(f"{a:.6f} -> +{g:.6f}")
    U = cfg.load_U()
    body = {"source": str(args.input), "spacings": [{"alpha": a, "gap": g} for a, g in sp]}
    _write_json(cfg, "spacings.json", _envelope(cfg, U, "complete", [], body))
    return EXIT_OK


def cmd_validate(cfg: RunConfig, args) -> int:
    results = acceptance.run_all(quick=args.quick)
    U = bm_potential_U()
    body = {"criteria": [r.to_dict() for r in results], "quick": args.quick}
    failed = [r.number for r in results if not r.passed]
    status = "complete" if not failed else "failed"
    _write_json(cfg, "validate.json", _clean(_envelope(cfg, U, status, [], body)))
    print("all criteria passed" if not failed else f"failed criteria: {failed}")
    return EXIT_OK if not failed else EXIT_FAILED


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--model", choices=["scalar", "chiral"], default="scalar")
    pot = common.add_mutually_exclusive_group()
    pot.add_argument("--builtin-bm", action="store_true", help="use the built-in BM potential (default)")
    pot.add_argument("--potential", type=str, help="potential file (lines 'm n re im')")
    common.add_argument("--k", type=parse_complex, action="append",
                        help="quasimomentum, e.g. 1j or 0.3+0.55i (mult accepts several)")
    common.add_argument("--k2", type=parse_complex, default=1 + 0.5j)
    common.add_argument("--output-dir", default=".")
    common.add_argument("--format", dest="output_format", choices=["json", "csv"], default="json")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    common.add_argument("--flat-tol", type=float, default=bands.FLAT_TOL)
    common.add_argument("--cluster-tol", type=float, default=magic.CLUSTER_TOL)
    common.add_argument("--contour-tol", type=float, default=mult_mod.CONTOUR_TOL)
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="flatmagic", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("magic", parents=[common], help="magic parameters from T_k spectra")
    p.add_argument("--radii", type=float, nargs="+",
                   default=[r / DUAL_LENGTH for r in magic.DEFAULT_RADII],
                   help="truncation radii in units of 4 pi / sqrt 3")
    p.add_argument("--max-abs-alpha", type=float, default=None)

    p = sub.add_parser("bands", parents=[common], help="band sweep along a path or over a grid")
    p.add_argument("--alpha", type=parse_complex, required=True)
    p.add_argument("--grid", type=int, default=0, help="n x n grid instead of a path")
    p.add_argument("--waypoints", type=parse_complex, nargs="+")
    p.add_argument("--samples", type=int, default=48, help="samples per path segment")
    p.add_argument("--n-bands", type=int, default=4)
    p.add_argument("--radius", type=float, default=QUICK_RADIUS / DUAL_LENGTH)

    p = sub.add_parser("mult", parents=[common], help="Gohberg-Sigal multiplicities")
    p.add_argument("--alpha", type=parse_complex, required=True)
    p.add_argument("--radius", type=float, default=QUICK_RADIUS / DUAL_LENGTH)
    p.add_argument("--contour-radius", type=float, default=None)

    p = sub.add_parser("traces", parents=[common], help="tr T_k^p by loop sums and eigenvalues")
    p.add_argument("--p", type=int, nargs="+", default=[2])
    p.add_argument("--radius", type=float, default=ACCEPT_RADIUS / DUAL_LENGTH)
    p.add_argument("--max-den", type=int, default=1000)

    p = sub.add_parser("spacing", parents=[common], help="real spacings from a magics.json file")
    p.add_argument("--input", required=True)
    p.add_argument("--all", action="store_true", help="include unconverged candidates")

    p = sub.add_parser("validate", parents=[common], help="run the acceptance criteria")
    p.add_argument("--quick", action="store_true")
    return parser


def _config(args) -> RunConfig:
    ks = args.k or []
    cfg = RunConfig(
        command=args.command,
        model=args.model,
        potential=args.potential or "builtin-bm",
        k=ks[0] if ks else 1j,
        k2=args.k2,
        flat_tol=args.flat_tol,
        cluster_tol=args.cluster_tol,
        contour_tol=args.contour_tol,
        output_format=args.output_format,
        output_dir=args.output_dir,
        seed=args.seed,
        workers=args.workers,
    )
    if args.command == "magic":
        cfg.radii = list(args.radii)
        cfg.max_abs_alpha = args.max_abs_alpha
    skip = set(asdict(cfg)) | {"command", "k", "potential", "builtin_bm", "verbose", "radii",
                                "max_abs_alpha", "output_format"}
    cfg.extra = {k: v for k, v in vars(args).items() if k not in skip}
    if args.command == "mult":
        cfg.extra["k_list"] = ks
    return cfg


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    np.random.seed(args.seed)
    try:
        cfg = _config(args)
        cfg.validate()
        if args.command == "magic":
            return cmd_magic(cfg)
        if args.command == "bands":
            if args.grid < 0 or args.samples < 1 or args.n_bands < 1 or args.radius <= 0:
                raise ConfigError("grid, samples, n-bands and radius must be positive")
            return cmd_bands(cfg, args)
        if args.command == "mult":
            return cmd_mult(cfg, args)
        if args.command == "traces":
            if any(p < 1 or p > traces.MAX_POWER for p in args.p):
                raise ConfigError(f"--p must be between 1 and {traces.MAX_POWER}")
            return cmd_traces(cfg, args)
        if args.command == "spacing":
            return cmd_spacing(cfg, args)
        return cmd_validate(cfg, args)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FlatMagicError as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
