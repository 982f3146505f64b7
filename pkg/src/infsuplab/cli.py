"""Command-line front end: refinement studies and eps-sweeps emitting CSV.

Output is deterministic for a fixed configuration and seed: rows are
buffered and emitted in a canonical sort order, numbers are formatted to
12 significant digits, lines end with LF.  A level that is merely flagged
(degenerate or singular) is recorded in the status column and the run
continues; the exit status is nonzero only if a computation fails outright.
"""

from __future__ import annotations

import argparse
import sys as _sys
from dataclasses import dataclass, field

import numpy as np

from . import infsup
from .fem.fields import FIELD_REGISTRY
from .fem.system import ELEMENT_PAIRS, build_stokes_system
from .meshkit import build_structured_mesh

DEFAULT_LEVELS = (4, 8, 16, 32)
DEFAULT_EPS = infsup.EPS_GRID
DEFAULT_FIELDS = ("divfree", "generic")
ELEMENT_ORDER = tuple(sorted(ELEMENT_PAIRS))
VARIANTS = ("l2", "h1")


@dataclass
class StudyConfig:
    elements: tuple
    pattern: str
    levels: tuple
    eps_grid: tuple = ()
    fields: tuple = ()
    out: str | None = None
    seed: int = 42

    def __post_init__(self):
        for e in self.elements:
            if e not in ELEMENT_PAIRS:
                raise ValueError(f"unknown element {e!r}; choose from {ELEMENT_ORDER}")
        if list(self.levels) != sorted(self.levels):
            raise ValueError("levels must be ascending")
        if any(n < 2 for n in self.levels):
            raise ValueError("levels must be >= 2")
        if any(eps <= 0 for eps in self.eps_grid):
            raise ValueError("all eps values must be positive")
        for f in self.fields:
            if f not in FIELD_REGISTRY and f != "discrete":
                known = sorted(FIELD_REGISTRY) + ["discrete"]
                raise ValueError(f"unknown field {f!r}; choose from {known}")


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.12g}"
    return str(value)


def _write_csv(header, rows, out):
    text = "\n".join([",".join(header)] + [",".join(_fmt(v) for v in row) for row in rows])
    text += "\n"
    if out is None:
        _sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


class _StudyState:
    """Caches assembled systems per (element, n) and tracks hard failures."""

    def __init__(self, config):
        self.config = config
        self.systems = {}
        self.failed = False

    def system(self, element, n):
        key = (element, n)
        if key not in self.systems:
            mesh = build_structured_mesh(n, self.config.pattern)
            self.systems[key] = build_stokes_system(mesh, element)
        return self.systems[key]


def cmd_constants(config: StudyConfig):
    header = ["element", "pattern", "n", "h", "beta_lbb", "c_glbb", "c_inv_v", "c_inv_p", "status"]
    state = _StudyState(config)
    rows = []
    for element in config.elements:
        for n in config.levels:
            row = [element, config.pattern, n]
            try:
                sys_ = state.system(element, n)
                beta, _ = infsup.lbb_constant(sys_)
                c_glbb, _ = infsup.glbb_constant(sys_)
                c_inv_v, c_inv_p = infsup.inverse_constants(sys_)
                row += [sys_.metrics.h_max, beta, c_glbb, c_inv_v, c_inv_p, "ok"]
            except (infsup.DegenerateLevelError, infsup.FortinSingularError) as exc:
                row += [None, None, None, None, None, f"flagged: {exc}"]
            except Exception as exc:  # failure recorded, run continues
                state.failed = True
                row += [None, None, None, None, None, f"error: {exc}"]
            rows.append(row)
    rows.sort(key=lambda r: (r[0], r[1], r[2]))
    _write_csv(header, rows, config.out)
    return 1 if state.failed else 0


def cmd_eps_sweep(config: StudyConfig):
    if not config.eps_grid:
        raise ValueError("eps-sweep requires a nonempty eps grid")
    header = ["element", "n", "eps", "c_eps", "status"]
    state = _StudyState(config)
    rows = []
    for element in config.elements:
        for n in config.levels:
            for eps in config.eps_grid:
                row = [element, n, float(eps)]
                try:
                    c_eps, _ = infsup.weighted_constant(state.system(element, n), eps)
                    row += [c_eps, "ok"]
                except infsup.DegenerateLevelError as exc:
                    row += [None, f"flagged: {exc}"]
                except Exception as exc:
                    state.failed = True
                    row += [None, f"error: {exc}"]
                rows.append(row)
    rows.sort(key=lambda r: (r[0], r[1], r[2]))
    _write_csv(header, rows, config.out)
    return 1 if state.failed else 0


def _discrete_input(sys_, rng):
    return rng.standard_normal(sys_.Xh.dim_free)


def cmd_fortin_study(config: StudyConfig):
    if not config.fields:
        raise ValueError("fortin study requires a nonempty field selection")
    header = [
        "element",
        "n",
        "field",
        "variant",
        "l2_error",
        "fl2_ratio",
        "fh1_ratio",
        "orthogonality_residual",
        "idempotence_gap",
        "status",
    ]
    state = _StudyState(config)
    rows = []
    for element in config.elements:
        for n in config.levels:
            for field_name in config.fields:
                for variant in VARIANTS:
                    row = [element, n, field_name, variant]
                    try:
                        rows.append(row + _fortin_cell(state, element, n, field_name, variant))
                        continue
                    except infsup.FortinSingularError as exc:
                        row += [None, None, None, None, None, f"flagged: {exc}"]
                    except Exception as exc:
                        state.failed = True
                        row += [None, None, None, None, None, f"error: {exc}"]
                    rows.append(row)
    rows.sort(key=lambda r: (r[0], r[1], r[2], r[3]))
    _write_csv(header, rows, config.out)
    return 1 if state.failed else 0


def _fortin_cell(state, element, n, field_name, variant):
    sys_ = state.system(element, n)
    h = sys_.metrics.h_max
    kkt = infsup._fortin_kkt(sys_, variant)
    if field_name == "discrete":
        rng = np.random.default_rng((state.config.seed, n, ELEMENT_ORDER.index(element)))
        u = _discrete_input(sys_, rng)
        result = infsup.fortin_discrete(sys_, u, variant, kkt=kkt)
        diag = infsup.fortin_diagnostics(sys_, u, result, kkt=kkt)
        h1sq = float(u @ (sys_.Mv @ u)) + float(u @ (sys_.A @ u))
        in_h1 = np.sqrt(max(h1sq, 0.0))
        z = result.z
        z_h1 = np.sqrt(max(float(z @ (sys_.Mv @ z)) + float(z @ (sys_.A @ z)), 0.0))
    else:
        fld = FIELD_REGISTRY[field_name]()
        project = infsup.fortin_l2 if variant == "l2" else infsup.fortin_h1
        result = project(sys_, fld, kkt=kkt)
        diag = infsup.fortin_diagnostics(sys_, fld, result, kkt=kkt)
        err = infsup.field_error_norms(sys_.Xh, sys_.Xh.embed(result.z), fld)
        in_h1 = np.sqrt(err["field_l2"] ** 2 + err["field_h1semi"] ** 2)
        z = result.z
        z_h1 = np.sqrt(max(float(z @ (sys_.Mv @ z)) + float(z @ (sys_.A @ z)), 0.0))
    fl2 = diag["l2_error"] / (h * in_h1) if in_h1 > 0 else 0.0
    fh1 = z_h1 / in_h1 if in_h1 > 0 else 0.0
    return [
        diag["l2_error"],
        fl2,
        fh1,
        diag["orthogonality_residual"],
        diag["idempotence_gap"],
        "ok",
    ]


def _parse_list(text, cast):
    return tuple(cast(part) for part in text.split(",") if part)


def _add_common(parser, with_eps=False, with_fields=False):
    parser.add_argument(
        "--elements",
        default=",".join(ELEMENT_ORDER),
        help=f"comma-separated element pairs from {ELEMENT_ORDER}",
    )
    parser.add_argument("--pattern", default="diagonal", choices=("diagonal", "crisscross"))
    parser.add_argument(
        "--levels",
        default=",".join(str(n) for n in DEFAULT_LEVELS),
        help="ascending comma-separated subdivision counts",
    )
    if with_eps:
        parser.add_argument(
            "--eps",
            default=",".join(f"{e:g}" for e in DEFAULT_EPS),
            help="comma-separated positive weights; add 1e-6,1e3 as limit probes",
        )
    if with_fields:
        parser.add_argument(
            "--fields",
            default=",".join(DEFAULT_FIELDS),
            help="comma-separated test fields (divfree, generic, discrete)",
        )
    parser.add_argument("--out", default=None, help="output CSV path (default: stdout)")
    parser.add_argument("--seed", type=int, default=42, help="seed for random probe vectors")


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="infsuplab",
        description="Stability constants and Fortin projections of mixed Stokes pairs",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    p_const = sub.add_parser("constants", help="inf-sup and inverse constants per level")
    _add_common(p_const)
    p_eps = sub.add_parser("eps-sweep", help="weighted inf-sup constants over an eps grid")
    _add_common(p_eps, with_eps=True)
    p_fortin = sub.add_parser("fortin", help="Fortin projector study per field and variant")
    _add_common(p_fortin, with_fields=True)
    args = parser.parse_args(argv)

    kwargs = dict(
        elements=_parse_list(args.elements, str),
        pattern=args.pattern,
        levels=_parse_list(args.levels, int),
        out=args.out,
        seed=args.seed,
    )
    if args.command == "constants":
        return cmd_constants(StudyConfig(**kwargs))
    if args.command == "eps-sweep":
        return cmd_eps_sweep(StudyConfig(eps_grid=_parse_list(args.eps, float), **kwargs))
    return cmd_fortin_study(StudyConfig(fields=_parse_list(args.fields, str), **kwargs))


if __name__ == "__main__":
    raise SystemExit(main())
