"""Configuration-driven command line for the cloaking experiments.

Exit codes: 0 success, 1 a monotonicity or slope assertion failed,
2 configuration error, 3 solver or geometry error. Every run writes a
manifest JSON with the config hash, package versions, and per-step
runtimes into its output directory; nothing is written elsewhere.
"""

import argparse
import dataclasses
import hashlib
import sys
import time
from importlib import metadata
from pathlib import Path

import numpy as np
import scipy

from .analysis import (ALUMINIUM_DENSITY, CLOAK_FAMILIES, DESK_H,
                       STEEL_DENSITY, AnalysisError, inclusion_shape,
                       run_contrast_sweep, run_convergence_study,
                       run_defect_size_sweep, run_layered_comparison,
                       run_nearcloak_sweep)
from .fem import CoefficientField, FemError, solve_transmission
from .layered import (RealizabilityError, build_layered_cloak,
                      symmetrize_cosserat)
from .materials import ConvexityError, IsotropicMaterial, isotropic_tensor
from .mesh import GeometrySpec, MeshError, build_mesh
from .output import (ensure_dir, write_boundary_trace, write_csv,
                     write_field_csv, write_json, write_vtk)
from .transform import cosserat_cloak_polar, willis_cloak_polar

EXPERIMENTS = ("profile", "layers", "solve", "contrast-sweep",
               "defect-sweep", "nearcloak", "layered-compare", "convergence")


class ConfigError(ValueError):
    """Invalid configuration key or value; message names the key."""


@dataclasses.dataclass(frozen=True)
class RunConfig:
    """Complete, serializable description of one experiment run."""

    experiment: str
    out: str | None = None
    h: float = DESK_H
    order: int = 2
    shape: str = "ellipse"
    a: float = 1.0
    b: float | None = None
    direction: str = "soft"
    eta_list: tuple | None = None
    radii: tuple = (1.0, 0.1, 0.01)
    contrast_lam: float = 1e2
    contrast_mu: float = 1e2
    family: str = "cosserat"
    epsilon: float = 0.2
    epsilons: tuple = (0.4, 0.3, 0.2, 0.1)
    n_list: tuple = (10, 20, 40)
    layers_n: int = 20
    omega: float = 0.0
    background_lam: float = 1.5e11
    background_mu: float = 7.5e10
    inclusion_lam: float = 5.1e10
    inclusion_mu: float = 2.6e10
    density_background: float = STEEL_DENSITY
    density_inclusion: float = ALUMINIUM_DENSITY
    outer_radius: float = 10.0
    threads: int = 1
    seed: int = 0

    def background(self):
        return _material("background", self.background_lam,
                         self.background_mu)

    def inclusion(self):
        return _material("inclusion", self.inclusion_lam, self.inclusion_mu)

    def validate(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"experiment: unknown value "
                              f"{self.experiment!r}")
        if not self.h > 0.0:
            raise ConfigError(f"h: must be positive, got {self.h!r}")
        if self.order not in (1, 2):
            raise ConfigError(f"order: must be 1 or 2, got {self.order!r}")
        if self.shape not in ("ellipse", "rectangle"):
            raise ConfigError(f"shape: unknown value {self.shape!r}")
        if self.direction not in ("soft", "hard"):
            raise ConfigError(f"direction: unknown value "
                              f"{self.direction!r}")
        if self.family not in CLOAK_FAMILIES:
            raise ConfigError(f"family: unknown value {self.family!r}")
        for key in ("radii", "epsilons", "n_list"):
            if not getattr(self, key):
                raise ConfigError(f"{key}: list must be nonempty")
        if self.eta_list is not None and not self.eta_list:
            raise ConfigError("eta_list: list must be nonempty")
        for name, value in [("epsilon", self.epsilon)] + [
                ("epsilons", e) for e in self.epsilons]:
            if not 0.0 < value < 1.0:
                raise ConfigError(f"{name}: must lie in (0, 1), "
                                  f"got {value!r}")
        if self.threads < 1:
            raise ConfigError(f"threads: must be >= 1, got {self.threads!r}")
        if self.layers_n < 2 or self.layers_n % 2:
            raise ConfigError(f"layers_n: must be even and >= 2, "
                              f"got {self.layers_n!r}")
        if not self.a > 0.0:
            raise ConfigError(f"a: must be positive, got {self.a!r}")
        if self.b is not None and not self.b > 0.0:
            raise ConfigError(f"b: must be positive, got {self.b!r}")
        if not self.outer_radius > 0.0:
            raise ConfigError(f"outer_radius: must be positive, "
                              f"got {self.outer_radius!r}")
        for rho in (self.density_background, self.density_inclusion):
            if not rho > 0.0:
                raise ConfigError(f"density: must be positive, got {rho!r}")
        self.background()
        self.inclusion()
        _material("contrast", self.contrast_lam * self.background_lam,
                  self.contrast_mu * self.background_mu)
        return self


def _material(key, lam, mu):
    try:
        return IsotropicMaterial(lam, mu)
    except ConvexityError as exc:
        raise ConfigError(f"{key}: {exc}") from None


# ---------------------------------------------------------------------------
# flat key = value serialization
# ---------------------------------------------------------------------------

_FIELDS = {f.name: f for f in dataclasses.fields(RunConfig)}
_FLOAT_TUPLES = ("eta_list", "radii", "epsilons")
_INT_TUPLES = ("n_list",)
_INTS = ("order", "layers_n", "threads", "seed")
_STRINGS = ("experiment", "out", "shape", "direction", "family")


def _format_value(value):
    if isinstance(value, tuple):
        return ", ".join(_format_value(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def serialize_config(config):
    """Flat diff-friendly text; omitted keys mean unset defaults."""
    lines = []
    for name in _FIELDS:
        value = getattr(config, name)
        if value is None:
            continue
        lines.append(f"{name} = {_format_value(value)}")
    return "\n".join(lines) + "\n"


def config_hash(config):
    return hashlib.sha256(serialize_config(config).encode()).hexdigest()


def _coerce(name, raw):
    if not isinstance(raw, str):
        return raw
    raw = raw.strip()
    try:
        if name in _STRINGS:
            return raw
        if name in _INTS:
            return int(raw)
        if name in _FLOAT_TUPLES:
            return tuple(float(tok) for tok in raw.split(",") if tok.strip())
        if name in _INT_TUPLES:
            return tuple(int(tok) for tok in raw.split(",") if tok.strip())
        return float(raw)
    except ValueError:
        raise ConfigError(f"{name}: cannot parse value {raw!r}") from None


def parse_config(path=None, overrides=None):
    """RunConfig from an optional flat key-value file plus overrides.

    File syntax: one `key = value` per line, '#' starts a comment,
    lists are comma separated. Override values win over file values.
    Unknown keys are rejected with the offending key named.
    """
    data = {}
    if path is not None:
        text = Path(path).read_text(encoding="utf-8")
        for lineno, line in enumerate(text.splitlines(), start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, raw = (part.strip() for part in line.split("=", 1))
            if key not in _FIELDS:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            data[key] = _coerce(key, raw)
    for key, value in (overrides or {}).items():
        if key not in _FIELDS:
            raise ConfigError(f"unknown key {key!r}")
        if value is not None:
            data[key] = _coerce(key, value)
    if "experiment" not in data:
        raise ConfigError("experiment: missing (pick a subcommand or set "
                          "the key in the config file)")
    return RunConfig(**data).validate()


# ---------------------------------------------------------------------------
# experiment execution
# ---------------------------------------------------------------------------


def _profile_rows(config):
    bg = config.background()
    if config.family == "layered":
        cloak = build_layered_cloak(config.layers_n, config.epsilon, bg)
        rows = [(0.5 * (ring.r_inner + ring.r_outer), ring.material.lam,
                 ring.material.mu) for ring in cloak.layers]
        return ["rprime [-]", "lam [N m^-2]", "mu [N m^-2]"], rows
    radii = np.linspace(1.0, 2.0, 101)
    if config.family == "willis":
        rows = []
        for rp in radii:
            w = willis_cloak_polar(config.epsilon, float(rp), bg)
            d3m = max(abs(v) for v in w.d3.values())
            s3m = max(abs(v) for v in w.s3.values())
            rows.append((float(rp), w.c4_rrrr, w.c4_thththth, w.c4_rrthth,
                         w.c4_shear, d3m, s3m, w.b2_rr, w.b2_thth))
        return ["rprime [-]", "rrrr [N m^-2]", "thththth [N m^-2]",
                "rrthth [N m^-2]", "shear [N m^-2]", "d3_max [N m^-3]",
                "s3_max [N m^-3]", "b2_rr [N m^-4]",
                "b2_thth [N m^-4]"], rows
    maker = (cosserat_cloak_polar if config.family == "cosserat"
             else symmetrize_cosserat)
    rows = []
    for rp in radii:
        prof = maker(config.epsilon, float(rp), bg)
        rows.append((float(rp), prof.rrrr, prof.thththth, prof.rrthth,
                     prof.ththrr, prof.rththr, prof.thrrth, prof.rthrth,
                     prof.thrthr))
    return ["rprime [-]", "rrrr [N m^-2]", "thththth [N m^-2]",
            "rrthth [N m^-2]", "ththrr [N m^-2]", "rththr [N m^-2]",
            "thrrth [N m^-2]", "rthrth [N m^-2]",
            "thrthr [N m^-2]"], rows


def _run_profile(config, out_dir):
    columns, rows = _profile_rows(config)
    write_csv(str(Path(out_dir) / "profile.csv"), columns, rows)
    return 0


def _run_layers(config, out_dir):
    cloak = build_layered_cloak(config.layers_n, config.epsilon,
                                config.background())
    rows = [(j, ring.r_inner, ring.r_outer, ring.material.lam,
             ring.material.mu, cloak.pair_residuals[j // 2])
            for j, ring in enumerate(cloak.layers)]
    write_csv(str(Path(out_dir) / "layers.csv"),
              ["ring [-]", "r_inner [-]", "r_outer [-]", "lam [N m^-2]",
               "mu [N m^-2]", "pair_residual [-]"], rows)
    write_json(str(Path(out_dir) / "layers_report.json"), cloak.report())
    return 0


def _run_solve(config, out_dir):
    spec = GeometrySpec(outer_radius=config.outer_radius,
                        inclusion=inclusion_shape(config.shape, config.a,
                                                  config.b),
                        h=config.h)
    mesh = build_mesh(spec)
    coeff = CoefficientField({
        "background": isotropic_tensor(config.background()),
        "inclusion": isotropic_tensor(config.inclusion())})

    def datum(pts):
        return np.asarray(pts, dtype=float)

    u = solve_transmission(mesh, coeff, ("dirichlet", datum), config.order)
    out = Path(out_dir)
    write_vtk(str(out / "field.vtk"), u)
    write_field_csv(str(out / "field.csv"), u)
    write_boundary_trace(str(out / "boundary_trace.csv"), u, "outer")
    return 0


def run(config):
    """Execute the configured experiment; returns the exit status."""
    config.validate()
    out_dir = config.out or f"{config.experiment}-out"
    ensure_dir(out_dir)
    steps = {}
    status = 0
    started = time.perf_counter()

    if config.experiment == "contrast-sweep":
        densities = {"background": config.density_background,
                     "inclusion": config.density_inclusion}
        res = run_contrast_sweep(
            direction=config.direction, shape=config.shape, a=config.a,
            b=config.b, eta_list=config.eta_list, h=config.h,
            order=config.order, background=config.background(),
            inclusion_base=config.inclusion(), omega=config.omega,
            densities=densities, out_dir=out_dir, workers=config.threads)
        status = 0 if res.extras["slope_ok"] else 1
    elif config.experiment == "defect-sweep":
        res = run_defect_size_sweep(
            radii=config.radii,
            contrast=(config.contrast_lam, config.contrast_mu), h=config.h,
            order=config.order, background=config.background(),
            out_dir=out_dir, workers=config.threads)
        status = 0 if res.extras["slope_ok"] else 1
    elif config.experiment == "nearcloak":
        res = run_nearcloak_sweep(
            family=config.family, epsilons=config.epsilons,
            background=config.background(), inclusion=config.inclusion(),
            h=config.h, order=config.order, layers_n=config.layers_n,
            out_dir=out_dir, assert_monotone=False, workers=config.threads)
        status = 0 if res.extras["monotone"] else 1
    elif config.experiment == "layered-compare":
        res = run_layered_comparison(
            n_list=config.n_list, epsilon=config.epsilon,
            background=config.background(), inclusion=config.inclusion(),
            h=config.h, order=config.order, out_dir=out_dir,
            assert_monotone=False)
        status = 0 if res.extras["monotone"] else 1
    elif config.experiment == "convergence":
        run_convergence_study(out_dir=out_dir)
    elif config.experiment == "profile":
        status = _run_profile(config, out_dir)
    elif config.experiment == "layers":
        status = _run_layers(config, out_dir)
    else:
        status = _run_solve(config, out_dir)
    steps[config.experiment] = time.perf_counter() - started

    manifest = {
        "config_hash": config_hash(config),
        "config": serialize_config(config).splitlines(),
        "experiment": config.experiment,
        "exit_status": status,
        "package_version": _package_version(),
        "numpy_version": np.__version__,
        "scipy_version": scipy.__version__,
        "step_seconds": steps,
    }
    write_json(str(Path(out_dir) / "manifest.json"), manifest)
    return status


def _package_version():
    try:
        return metadata.version("elascloak")
    except metadata.PackageNotFoundError:
        return "unknown"


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

_FLAGS = (
    ("--config", dict(dest="config", metavar="PATH",
                      help="flat key = value configuration file")),
    ("--out", dict(dest="out", metavar="DIR", help="output directory")),
    ("--h", dict(dest="h", metavar="H", help="target mesh size in meters")),
    ("--order", dict(dest="order", metavar="P",
                     help="element order, 1 or 2")),
    ("--epsilon", dict(dest="epsilon", metavar="EPS",
                       help="regularization width in (0, 1)")),
    ("--eta-list", dict(dest="eta_list", metavar="LIST",
                        help="comma-separated contrast scalings")),
    ("--shape", dict(dest="shape", metavar="NAME",
                     help="inclusion shape: ellipse or rectangle")),
    ("--a", dict(dest="a", metavar="A",
                 help="semi-axis (ellipse) or first side (rectangle)")),
    ("--b", dict(dest="b", metavar="B",
                 help="second axis/side; defaults keep area pi")),
    ("--omega", dict(dest="omega", metavar="W",
                     help="angular frequency in rad/s; 0 is static")),
    ("--family", dict(dest="family", metavar="NAME",
                      help="cloak family: cosserat, symmetrized, layered, "
                           "willis")),
    ("--layers-n", dict(dest="layers_n", metavar="N",
                        help="ring count for the layered family")),
    ("--threads", dict(dest="threads", metavar="T",
                       help="concurrent sweep-point solves")),
    ("--direction", dict(dest="direction", metavar="DIR",
                         help="contrast direction: soft or hard")),
    ("--epsilons", dict(dest="epsilons", metavar="LIST",
                        help="comma-separated widths for the sweep")),
    ("--radii", dict(dest="radii", metavar="LIST",
                     help="comma-separated defect radii")),
    ("--n-list", dict(dest="n_list", metavar="LIST",
                      help="comma-separated layer counts")),
    ("--seed", dict(dest="seed", metavar="S",
                    help="recorded in the manifest for provenance")),
)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="elascloak",
        description="Elastic-cloaking experiments: transformation cloaks, "
                    "contrast sweeps, and their file artifacts.")
    sub = parser.add_subparsers(dest="experiment", required=True)
    for name in EXPERIMENTS:
        p = sub.add_parser(name, help=f"run the {name} experiment")
        for flag, kwargs in _FLAGS:
            p.add_argument(flag, **kwargs)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    overrides = {name: getattr(args, name)
                 for name in _FIELDS if hasattr(args, name)}
    overrides["experiment"] = args.experiment
    try:
        config = parse_config(args.config, overrides)
        return run(config)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except (AnalysisError, FemError, MeshError, RealizabilityError,
            ConvexityError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
