"""Command-line frontend for the package.

Subcommands map one-to-one onto the library surface:

  scar-verify   eigenstate check of a scar (per-site residuals + exact ED)
  dispersion    transverse spin-wave dispersion over the Brillouin zone
  contrast-sw   spin-wave contrast for any of the three helix families
  contrast-ed   exact contrast on a small periodic ring
  ll-evolve     classical Landau-Lifshitz trajectory of a detuned scar
  phase-scan    two-sided stability classification over a (kappa, lambda) grid
  rates         asymptotic decay rates of the detuned transverse helix

File-writing subcommands emit CSV plus a JSON sidecar echoing the full
parameter record, so any run can be reproduced from its artifacts alone and
identical configs produce byte-identical outputs. Angles accept pi-rational
strings ("pi/3", "2pi/5") as well as decimals. Exit codes: 0 success,
1 numeric failure, 2 usage error. XYZSCAR_WORKERS sets the default process
count for phase-scan.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import re
import sys
from pathlib import Path

import numpy as np

from . import bogoliubov as bg
from . import ed_oracle, lattice_classical, rotframe, spinwave
from .scars import (
    EXACT_RESIDUAL_TOL,
    ScarParams,
    XYZCouplings,
    gz_condition_residuals,
    parent_couplings,
    scar_texture,
)

_ANGLE_RE = re.compile(r"^([+-]?\d*\.?\d*)\s*\*?\s*pi\s*(?:/\s*(\d*\.?\d+))?$")


class UsageError(ValueError):
    """Invalid flag combination; maps to exit code 2 like argparse errors."""


def parse_angle(text: str) -> float:
    """Angle as a decimal ("0.785") or a pi-rational string ("pi/4", "2pi/5")."""
    s = str(text).strip().lower()
    match = _ANGLE_RE.match(s)
    if match:
        coeff_text = match.group(1)
        if coeff_text in ("", "+"):
            coeff = 1.0
        elif coeff_text == "-":
            coeff = -1.0
        else:
            coeff = float(coeff_text)
        denom = float(match.group(2)) if match.group(2) else 1.0
        return coeff * math.pi / denom
    try:
        return float(s)
    except ValueError:
        raise ValueError(f"cannot parse angle {text!r}; use a decimal or 'pi/3' style")


def parse_int_range(text: str) -> list[int]:
    """Integer list from "7", "7,10,20" or an inclusive "7:80" range."""
    s = str(text).strip()
    if ":" in s:
        lo, hi = s.split(":", 1)
        lo_i, hi_i = int(lo), int(hi)
        if hi_i < lo_i:
            raise ValueError(f"empty range {text!r}")
        return list(range(lo_i, hi_i + 1))
    return [int(part) for part in s.split(",")]


def parse_float_grid(text: str) -> list[float]:
    """Float list from "0.8", "0.2,0.5" or a "min:max:count" grid."""
    s = str(text).strip()
    if ":" in s:
        parts = s.split(":")
        if len(parts) != 3:
            raise ValueError(f"grid {text!r} must be min:max:count")
        lo, hi, count = float(parts[0]), float(parts[1]), int(parts[2])
        if count < 1:
            raise ValueError(f"grid {text!r} needs at least one point")
        return [float(v) for v in np.linspace(lo, hi, count)]
    return [float(part) for part in s.split(",")]


def _default_workers() -> int:
    return int(os.environ.get("XYZSCAR_WORKERS", "1"))


def _out_path(args, name: str) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out / name


def _params_record(args) -> dict:
    record = {}
    for key, value in sorted(vars(args).items()):
        if key == "func":
            continue
        if isinstance(value, Path):
            value = str(value)
        record[key] = value
    return record


def _write_sidecar(csv_path: Path, kind: str, args) -> None:
    sidecar = {"kind": kind, "params": _params_record(args)}
    csv_path.with_suffix(".json").write_text(json.dumps(sidecar, indent=2, sort_keys=True))


def _write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_cell(value) for value in row) + "\n")


def _cell(value) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _scar_params(args) -> ScarParams:
    if (args.M is None) == (args.q is None):
        raise UsageError("give exactly one of --M or --q")
    if args.M is not None:
        return ScarParams.commensurate(
            args.kappa, args.M, args.L, gamma=args.gamma, S=args.S, phi=args.phi
        )
    return ScarParams(
        kappa=args.kappa, q=args.q, gamma=args.gamma, L=args.L, S=args.S, phi=args.phi
    )


def cmd_scar_verify(args) -> int:
    p = _scar_params(args)
    parent = parent_couplings(p.kappa, p.q)
    J = XYZCouplings(
        Jx=parent.Jx if args.Jx is None else args.Jx,
        Jy=parent.Jy if args.Jy is None else args.Jy,
        Jz=parent.Jz if args.Jz is None else args.Jz,
    )
    texture = scar_texture(p)
    r1, r2 = gz_condition_residuals(texture, J)
    print("site  r1            r2")
    for j in range(p.L):
        print(f"{j:4d}  {r1[j]:.6e}  {r2[j]:.6e}")
    ok = bool(max(r1.max(), r2.max()) <= EXACT_RESIDUAL_TOL)

    dim = (int(round(2 * p.S)) + 1) ** p.L
    if dim <= ed_oracle.DIMENSION_CAP:
        try:
            exact = ed_oracle.eigenstate_residual(p, J=J)
        except ValueError as exc:
            print(f"exact residual skipped: {exc}")
        else:
            print(f"exact eigenstate residual: {exact:.6e} (dimension {dim})")
            ok = ok and exact <= EXACT_RESIDUAL_TOL
    else:
        print(
            f"exact residual skipped: dimension {dim} exceeds cap "
            f"{ed_oracle.DIMENSION_CAP}"
        )
    print("PASS" if ok else "FAIL")
    return 0 if ok else 1


def cmd_dispersion(args) -> int:
    k = (np.arange(args.n_k) + 0.5) * (2.0 * math.pi / args.n_k) - math.pi
    disp = bg.transverse_dispersion(k, args.q, args.theta, args.dJz, S=args.S)
    path = _out_path(args, "dispersion.csv")
    _write_csv(
        path,
        ["k", "omega_re", "omega_im", "wtilde_re", "wtilde_im"],
        zip(k, disp.omega_sw.real, disp.omega_sw.imag, disp.w_tilde.real, disp.w_tilde.imag),
    )
    _write_sidecar(path, "dispersion", args)
    print(f"wrote {path}")
    return 0


def cmd_contrast_sw(args) -> int:
    theta = None
    if args.family == "transverse":
        if args.theta is None or args.q is None:
            raise UsageError("transverse family needs --theta and --q")
        theta = args.theta
        omega = -2.0 * args.S * math.cos(theta) * args.dJz
        frame = rotframe.frame_transverse(theta, args.q, omega, args.L, dJz=args.dJz)
    else:
        if args.kappa is None or args.M is None:
            raise UsageError(f"{args.family} family needs --kappa and --M")
        from .elliptic import complete_K

        q = 4.0 * args.M * complete_K(args.kappa) / args.L
        if args.family == "gtsh":
            frame = rotframe.frame_gtsh(args.kappa, q, args.L, dJz=args.dJz)
        else:
            frame = rotframe.frame_glsh(args.kappa, q, args.L, dJx=args.dJx)
    coeffs = spinwave.sw_coefficients(frame, args.S)
    series = spinwave.contrast_sw(
        coeffs, args.S, dt=args.dt, T=args.T, n_samples=args.n_samples, theta=theta
    )
    path = _out_path(args, "contrast_sw.csv")
    series.save_csv(path, params=_params_record(args))
    print(f"wrote {path}")
    return 0


def cmd_contrast_ed(args) -> int:
    if (args.gamma is None) == (args.theta is None):
        raise UsageError("give exactly one of --gamma or --theta")
    gamma = args.gamma if args.gamma is not None else math.cos(args.theta)
    p = ScarParams.commensurate(
        args.kappa, args.M, args.L, gamma=gamma, S=args.S, phi=args.phi
    )
    series = ed_oracle.contrast_exact(
        p,
        args.delta,
        T=args.T,
        n_samples=args.n_samples,
        family=args.family,
        theta=args.theta,
    )
    path = _out_path(args, "contrast_ed.csv")
    series.save_csv(path, params=_params_record(args))
    print(f"wrote {path}")
    return 0


def cmd_ll_evolve(args) -> int:
    p = ScarParams.commensurate(
        args.kappa, args.M, args.L, gamma=args.gamma, S=args.S, phi=args.phi
    )
    J = parent_couplings(p.kappa, p.q).detuned(dJx=args.dJx, dJz=args.dJz)
    trajectory = lattice_classical.ll_evolve(
        scar_texture(p), J, S=args.S, dt=args.dt, T=args.T, max_samples=args.max_samples
    )
    texture_path = _out_path(args, "ll_trajectory.csv")
    energy_path = _out_path(args, "ll_energy.csv")
    trajectory.save_csv(texture_path, energy_path)
    _write_sidecar(texture_path, "classical_trajectory", args)
    print(f"wrote {texture_path}")
    print(f"wrote {energy_path}")
    return 0


def cmd_phase_scan(args) -> int:
    records = bg.phase_scan(
        args.kappa,
        args.lambdas,
        delta=args.dJ,
        family=args.family,
        S=args.S,
        n_k=args.n_k,
        workers=args.workers,
    )
    path = _out_path(args, "phase_scan.csv")
    _write_csv(
        path,
        ["kappa", "lambda", "q", "class", "lyap_minus", "lyap_plus"],
        (
            [r["kappa"], r["lambda"], r["q"], r["class"], r["lyap_minus"], r["lyap_plus"]]
            for r in records
        ),
    )
    _write_sidecar(path, "phase_scan", args)
    counts: dict[str, int] = {}
    for r in records:
        counts[r["class"]] = counts.get(r["class"], 0) + 1
    summary = "  ".join(f"{cls}: {n}" for cls, n in sorted(counts.items()))
    print(f"{len(records)} cells  {summary}")
    print(f"wrote {path}")
    return 0


def cmd_rates(args) -> int:
    result = bg.rates(args.q, args.theta, args.dJz, S=args.S)
    print(f"branch = {result.branch}")
    for name in ("gamma1", "gamma2_exact", "gamma2_perturbative"):
        value = getattr(result, name)
        if value is not None:
            print(f"{name} = {value:.3e}")
    path = _out_path(args, "rates.csv")
    row = [
        result.branch,
        _nan_if_none(result.gamma1),
        _nan_if_none(result.gamma2_exact),
        _nan_if_none(result.gamma2_perturbative),
    ]
    _write_csv(path, ["branch", "gamma1", "gamma2_exact", "gamma2_perturbative"], [row])
    _write_sidecar(path, "rates", args)
    print(f"wrote {path}")
    return 0


def _nan_if_none(value):
    return float("nan") if value is None else value


def _add_out(sub) -> None:
    sub.add_argument("--out", default=".", help="output directory (default: .)")


def _add_scar_geometry(sub, require_gamma=True, require_M=True) -> None:
    sub.add_argument("--kappa", type=float, required=True, help="elliptic modulus in [0, 1)")
    sub.add_argument("--M", type=int, required=require_M, help="winding number (q = 4MK/L)")
    sub.add_argument("--L", type=int, required=True, help="ring size")
    if require_gamma:
        sub.add_argument("--gamma", type=float, required=True, help="texture parameter in [0, 1]")
    sub.add_argument("--S", type=float, default=1.0, help="spin per site (default 1)")
    sub.add_argument("--phi", type=parse_angle, default=0.0, help="texture phase offset")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="xyzscar",
        description="Scarred XYZ chains: textures, stability theory, exact checks.",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    sub = subparsers.add_parser("scar-verify", help="check a scar against its parent ring")
    _add_scar_geometry(sub, require_M=False)
    sub.add_argument("--q", type=parse_angle, help="wavenumber (alternative to --M)")
    sub.add_argument("--Jx", type=float, help="override parent Jx")
    sub.add_argument("--Jy", type=float, help="override parent Jy")
    sub.add_argument("--Jz", type=float, help="override parent Jz")
    sub.set_defaults(func=cmd_scar_verify)

    sub = subparsers.add_parser("dispersion", help="transverse helix spin-wave dispersion")
    sub.add_argument("--q", type=parse_angle, required=True)
    sub.add_argument("--theta", type=parse_angle, required=True)
    sub.add_argument("--dJz", type=float, required=True)
    sub.add_argument("--S", type=float, default=1.0)
    sub.add_argument("--n-k", type=int, default=512, help="momentum points (default 512)")
    _add_out(sub)
    sub.set_defaults(func=cmd_dispersion)

    sub = subparsers.add_parser("contrast-sw", help="spin-wave contrast of a detuned helix")
    sub.add_argument("--family", choices=("transverse", "gtsh", "glsh"), required=True)
    sub.add_argument("--theta", type=parse_angle, help="transverse polar angle")
    sub.add_argument("--q", type=parse_angle, help="transverse wavenumber")
    sub.add_argument("--kappa", type=float, help="elliptic modulus (gtsh/glsh)")
    sub.add_argument("--M", type=int, help="winding number (gtsh/glsh)")
    sub.add_argument("--L", type=int, required=True)
    sub.add_argument("--dJz", type=float, default=0.0)
    sub.add_argument("--dJx", type=float, default=0.0)
    sub.add_argument("--S", type=float, default=1.0)
    sub.add_argument("--T", type=float, default=30.0)
    sub.add_argument("--dt", type=float, default=None)
    sub.add_argument("--n-samples", type=int, default=301)
    _add_out(sub)
    sub.set_defaults(func=cmd_contrast_sw)

    sub = subparsers.add_parser("contrast-ed", help="exact small-ring contrast")
    _add_scar_geometry(sub, require_gamma=False)
    sub.add_argument("--gamma", type=float, help="texture parameter (or give --theta)")
    sub.add_argument("--theta", type=parse_angle, help="transverse polar angle (gamma = cos theta)")
    sub.add_argument("--delta", type=float, required=True, help="coupling detuning")
    sub.add_argument("--family", choices=("transverse", "gtsh", "glsh"), default=None)
    sub.add_argument("--T", type=float, default=10.0)
    sub.add_argument("--n-samples", type=int, default=201)
    _add_out(sub)
    sub.set_defaults(func=cmd_contrast_ed)

    sub = subparsers.add_parser("ll-evolve", help="classical trajectory of a detuned scar")
    _add_scar_geometry(sub)
    sub.add_argument("--dJx", type=float, default=0.0)
    sub.add_argument("--dJz", type=float, default=0.0)
    sub.add_argument("--T", type=float, default=10.0)
    sub.add_argument("--dt", type=float, default=None)
    sub.add_argument("--max-samples", type=int, default=1001)
    _add_out(sub)
    sub.set_defaults(func=cmd_ll_evolve)

    sub = subparsers.add_parser("phase-scan", help="two-sided stability classification grid")
    sub.add_argument("--family", choices=("gtsh", "glsh"), default="glsh")
    sub.add_argument("--lambda", dest="lambdas", type=parse_int_range, required=True,
                     help="unit cells per winding: '7', '7,10' or '7:80'")
    sub.add_argument("--kappa", type=parse_float_grid, default="0.2:0.96:20",
                     help="kappa grid: '0.8', '0.2,0.5' or 'min:max:count'")
    sub.add_argument("--dJ", type=float, default=0.01)
    sub.add_argument("--S", type=float, default=1.0)
    sub.add_argument("--n-k", type=int, default=400)
    sub.add_argument("--workers", type=int, default=_default_workers(),
                     help="process count (default from XYZSCAR_WORKERS or 1)")
    _add_out(sub)
    sub.set_defaults(func=cmd_phase_scan)

    sub = subparsers.add_parser("rates", help="asymptotic decay rates, transverse helix")
    sub.add_argument("--q", type=parse_angle, required=True)
    sub.add_argument("--theta", type=parse_angle, required=True)
    sub.add_argument("--dJz", type=float, required=True)
    sub.add_argument("--S", type=float, default=1.0)
    _add_out(sub)
    sub.set_defaults(func=cmd_rates)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        context = getattr(exc, "filename", None)
        print(f"error: {context or ''}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
