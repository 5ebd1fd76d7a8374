"""Command-line front end.

Subcommands:

  simulate     Monte-Carlo ensemble; writes fidelity, summary, trajectory,
               schedule and Wigner CSVs plus rendered figures.
  sweep        fidelity versus intervention count, with a logistic fit.
  filter       closed-form prediction of the averaged output field.
  check-group  decoupling residuals of a control group on ladder monomials.

Configuration is a flat key = value file with dotted keys (see REGISTRY);
--set overrides individual entries and --preset loads a bundled example.
Every run directory gets a manifest.json describing inputs and outputs.

Exit codes: 0 success, 2 configuration problem, 3 simulation failure,
4 output I/O failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from .engine import (
    GridSpec,
    InitialStateSpec,
    ProtocolSpec,
    SimConfig,
    SimulationError,
    logistic_fit,
    run_ensemble,
    sweep_interventions,
)
from .filters import (
    DegenerateFilterError,
    IdentityFilter,
    SegmentKernel,
    SwitchingFunction,
    convolve,
    gaussian_filter,
    sigma_matrix,
    squeeze_average,
)
from .fock import MixtureComponent, TruncationLeakError
from .noise import NoiseConfig, cpp_covariance, sample_trajectory, write_trajectories_csv
from .protocol import cyclic_group, gaussian_group, group_average_residual, parity_group, squeeze_set, write_schedule_csv
from .wigner import wigner_of_state, write_field_csv

EXIT_CONFIG = 2
EXIT_SIMULATION = 3
EXIT_IO = 4


class ConfigError(Exception):
    """A configuration file or override could not be used."""


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("true", "yes", "on", "1"):
        return True
    if low in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _parse_complex(text: str) -> complex:
    try:
        return complex(text.replace(" ", ""))
    except ValueError:
        raise ValueError(f"expected a complex number like 1+0.5j, got {text!r}")


def _parse_int_list(text: str) -> list[int]:
    try:
        return [int(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise ValueError(f"expected comma-separated integers, got {text!r}")


def _parse_components(text: str) -> tuple[MixtureComponent, ...]:
    """weight,center,width groups separated by semicolons."""
    comps = []
    for group in text.split(";"):
        parts = [p.strip() for p in group.split(",")]
        if len(parts) != 3:
            raise ValueError(
                f"each mixture component needs weight,center,width; got {group!r}"
            )
        comps.append(
            MixtureComponent(float(parts[0]), _parse_complex(parts[1]), float(parts[2]))
        )
    return tuple(comps)


# every recognized key with its converter; anything else is rejected
REGISTRY = {
    "noise.kind": str,
    "noise.segments": int,
    "noise.eta": float,
    "noise.sigma_disp": float,
    "noise.sigma_sqz": float,
    "noise.seed": int,
    "noise.static": _parse_bool,
    "noise.degree": int,
    "protocol.kind": str,
    "protocol.interventions": int,
    "protocol.m": int,
    "run.trajectories": int,
    "run.fock_dim": int,
    "run.leak_threshold": float,
    "run.threads": int,
    "run.wigner": _parse_bool,
    "grid.extent": float,
    "grid.points": int,
    "initial.kind": str,
    "initial.alpha": _parse_complex,
    "initial.components": _parse_components,
    "sweep.n_values": _parse_int_list,
    "sweep.trajectories": int,
}


def parse_config_text(text: str, source: str = "<config>") -> dict:
    """Flat dotted-key config parser; rejects unknown keys by name."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected key = value, got {raw!r}")
        key, _, val = line.partition("=")
        key = key.strip()
        val = val.strip()
        if key not in REGISTRY:
            raise ConfigError(f"{source}:{lineno}: unknown configuration key {key!r}")
        try:
            values[key] = REGISTRY[key](val)
        except ValueError as err:
            raise ConfigError(f"{source}:{lineno}: bad value for {key}: {err}")
    return values


def load_preset(name: str) -> dict:
    pkg = resources.files("cvecho") / "configs"
    candidate = pkg / f"{name}.cfg"
    if not candidate.is_file():
        available = sorted(p.name[:-4] for p in pkg.iterdir() if p.name.endswith(".cfg"))
        raise ConfigError(f"no preset named {name!r}; available: {', '.join(available)}")
    return parse_config_text(candidate.read_text(), source=f"preset {name}")


def resolve_config(args) -> dict:
    """Layer preset, config file and --set overrides, in that order."""
    values = {}
    if getattr(args, "preset", None):
        values.update(load_preset(args.preset))
    if getattr(args, "config", None):
        path = Path(args.config)
        try:
            text = path.read_text()
        except OSError as err:
            raise ConfigError(f"cannot read config file {path}: {err}")
        values.update(parse_config_text(text, source=str(path)))
    for item in getattr(args, "set", None) or []:
        values.update(parse_config_text(item, source="--set"))
    return values


def build_sim_config(values: dict) -> SimConfig:
    if "noise.kind" not in values:
        raise ConfigError("noise.kind is required (displacement, squeezing, combined)")
    try:
        noise = NoiseConfig(
            kind=values["noise.kind"],
            segments=values.get("noise.segments", 10),
            eta=values.get("noise.eta", 0.2),
            sigma_disp=values.get("noise.sigma_disp", 0.0),
            sigma_sqz=values.get("noise.sigma_sqz", 0.0),
            seed=values.get("noise.seed", 0),
            static=values.get("noise.static", False),
            degree=values.get("noise.degree", 1),
        )
        protocol = ProtocolSpec(
            kind=values.get("protocol.kind", "none"),
            interventions=values.get("protocol.interventions"),
            m=values.get("protocol.m", 2),
        )
        initial = InitialStateSpec(
            kind=values.get("initial.kind", "vacuum"),
            alpha=values.get("initial.alpha", 0j),
            components=values.get("initial.components", ()),
        )
        return SimConfig(
            noise=noise,
            protocol=protocol,
            trajectories=values.get("run.trajectories", 100),
            fock_dim=values.get("run.fock_dim", 60),
            leak_threshold=values.get("run.leak_threshold", 1e-6),
            grid=GridSpec(
                extent=values.get("grid.extent", 5.0),
                points=values.get("grid.points", 101),
            ),
            initial=initial,
            compute_wigner=values.get("run.wigner", True),
            threads=values.get("run.threads", 1),
        )
    except ValueError as err:
        raise ConfigError(str(err))


def _jsonable(value):
    if isinstance(value, (bool, int, float, str)) or value is None:
        return value
    if isinstance(value, complex):
        return str(value)
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, MixtureComponent):
        return {"weight": value.weight, "center": str(value.center), "width": value.width}
    return str(value)


@dataclass
class RunManifest:
    """Sidecar JSON describing a run; written before work starts, then
    finalized with the outcome so interrupted runs are recognizable."""

    path: Path
    data: dict = field(default_factory=dict)

    @classmethod
    def start(cls, outdir: Path, command: str, values: dict) -> "RunManifest":
        manifest = cls(outdir / "manifest.json")
        manifest.data = {
            "schema_version": 1,
            "command": command,
            "package_version": __version__,
            "started": _now(),
            "finished": None,
            "status": "running",
            "config": {k: _jsonable(v) for k, v in sorted(values.items())},
            "outputs": [],
        }
        manifest.write()
        return manifest

    def write(self):
        self.path.write_text(json.dumps(self.data, indent=2) + "\n")

    def finish(self, status: str, outputs: list[str] | None = None, **extra):
        self.data["status"] = status
        self.data["finished"] = _now()
        if outputs is not None:
            self.data["outputs"] = sorted(outputs)
        self.data.update(extra)
        self.write()


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _prepare_outdir(path_str: str) -> Path:
    outdir = Path(path_str)
    outdir.mkdir(parents=True, exist_ok=True)
    return outdir


def write_fidelity_csv(result, path) -> None:
    segments = result.fidelity.shape[1] - 1
    with open(path, "w") as fh:
        fh.write("traj_id,segment,ell,fidelity\n")
        for tid in range(result.fidelity.shape[0]):
            for k in range(segments + 1):
                ell = k / segments if segments else 0.0
                fh.write(f"{tid},{k},{ell!r},{float(result.fidelity[tid, k])!r}\n")


def write_summary_csv(rows, path) -> None:
    """rows of (n_interventions, mean_final_fidelity, stderr)."""
    with open(path, "w") as fh:
        fh.write("n_interventions,mean_final_fidelity,stderr\n")
        for n, mean, err in rows:
            fh.write(f"{n},{float(mean)!r},{float(err)!r}\n")


def cmd_simulate(args) -> int:
    values = resolve_config(args)
    config = build_sim_config(values)
    outdir = _prepare_outdir(args.out)
    manifest = RunManifest.start(outdir, "simulate", values)
    try:
        result = run_ensemble(config)
    except (SimulationError, TruncationLeakError) as err:
        manifest.finish("failed", error=str(err))
        print(f"simulation failed: {err}", file=sys.stderr)
        return EXIT_SIMULATION

    outputs = []

    def emit(name, writer):
        writer(outdir / name)
        outputs.append(name)

    emit("fidelity.csv", lambda p: write_fidelity_csv(result, p))
    n_int = result.schedule.interventions if result.schedule is not None else 0
    emit(
        "summary.csv",
        lambda p: write_summary_csv(
            [(n_int, result.mean_final_fidelity, result.stderr_final)], p
        ),
    )
    emit("trajectories.csv", lambda p: write_trajectories_csv(result.noise_trajectories, p))
    if result.schedule is not None:
        emit("schedule.csv", lambda p: write_schedule_csv(result.schedule, p))
    if result.wigner_initial is not None:
        emit("wigner_initial.csv", lambda p: write_field_csv(result.wigner_initial, result.grid, p))
        emit("wigner_final.csv", lambda p: write_field_csv(result.wigner_final, result.grid, p))
    if not args.no_figures:
        from . import report

        emit("fidelity.png", lambda p: report.fidelity_figure(result, p))
        if result.wigner_initial is not None:
            emit(
                "wigner.png",
                lambda p: report.wigner_pair_figure(
                    result.wigner_initial, result.wigner_final, result.grid, p
                ),
            )

    manifest.finish(
        "completed",
        outputs=outputs + ["manifest.json"],
        mean_final_fidelity=result.mean_final_fidelity,
        stderr_final_fidelity=result.stderr_final,
        max_guard_band_population=result.max_leak,
        elapsed_seconds=result.elapsed_seconds,
    )
    print(
        f"{config.trajectories} trajectories, {config.noise.segments} segments: "
        f"mean final fidelity {result.mean_final_fidelity:.4f} "
        f"+- {result.stderr_final:.4f} (outputs in {outdir})"
    )
    return 0


def cmd_sweep(args) -> int:
    values = resolve_config(args)
    config = build_sim_config(values)
    n_values = values.get("sweep.n_values")
    if not n_values:
        raise ConfigError("sweep.n_values is required for the sweep command")
    outdir = _prepare_outdir(args.out)
    manifest = RunManifest.start(outdir, "sweep", values)
    try:
        sweep = sweep_interventions(config, n_values, values.get("sweep.trajectories"))
    except (SimulationError, TruncationLeakError) as err:
        manifest.finish("failed", error=str(err))
        print(f"sweep failed: {err}", file=sys.stderr)
        return EXIT_SIMULATION

    fit = logistic_fit(sweep.n_values, sweep.mean_final)
    outputs = ["summary.csv"]
    write_summary_csv(sweep.rows(), outdir / "summary.csv")
    if not args.no_figures:
        from . import report

        report.sweep_figure(sweep, outdir / "sweep.png", fit)
        outputs.append("sweep.png")
    manifest.finish(
        "completed",
        outputs=outputs + ["manifest.json"],
        logistic_fit={
            "floor": fit.floor,
            "ceiling": fit.ceiling,
            "midpoint": fit.midpoint,
            "width": fit.width,
            "converged": fit.converged,
        },
    )
    for n, mean, err in sweep.rows():
        print(f"n={n:4d}: mean final fidelity {mean:.4f} +- {err:.4f}")
    return 0


def cmd_filter(args) -> int:
    values = resolve_config(args)
    config = build_sim_config(values)
    noise = config.noise
    if config.protocol.kind == "none":
        raise ConfigError("the filter prediction needs a decoupling protocol")
    if noise.kind == "combined":
        raise ConfigError(
            "combined schedules rotate displacement noise through complex "
            "phases; no scalar filter prediction exists, use simulate instead"
        )
    outdir = _prepare_outdir(args.out)
    manifest = RunManifest.start(outdir, "filter", values)
    space = config.space()
    grid = config.grid.build()
    rho0 = config.initial.build(space)
    field_in = wigner_of_state(rho0, grid)
    delta_ell = 1.0 / noise.segments

    try:
        schedule = config.protocol.build_schedule(noise.segments)
        predicted = field_in
        sigma = None
        if noise.has_displacement:
            switching = SwitchingFunction.from_schedule(schedule, "displacement", delta_ell)
            kernel = SegmentKernel.from_alpha_covariance(cpp_covariance(noise), delta_ell)
            sigma = sigma_matrix(switching, kernel)
            if np.allclose(sigma, 0.0, atol=1e-15):
                filt = IdentityFilter()
            else:
                filt = gaussian_filter(sigma, grid)
            predicted = convolve(filt, predicted, grid)
        if noise.has_squeeze:
            gammas = np.array(
                [
                    schedule.effective_squeeze(sample_trajectory(noise, t).zs).real
                    for t in range(config.trajectories)
                ]
            )
            predicted = squeeze_average(predicted, grid, gammas)
    except (DegenerateFilterError, SimulationError) as err:
        manifest.finish("failed", error=str(err))
        print(f"filter prediction failed: {err}", file=sys.stderr)
        return EXIT_SIMULATION

    outputs = ["filter_input.csv", "filter_predicted.csv"]
    write_field_csv(field_in, grid, outdir / "filter_input.csv")
    write_field_csv(predicted, grid, outdir / "filter_predicted.csv")
    if not args.no_figures:
        from . import report

        report.wigner_pair_figure(field_in, predicted, grid, outdir / "filter.png")
        outputs.append("filter.png")
    manifest.finish(
        "completed",
        outputs=outputs + ["manifest.json"],
        sigma=None if sigma is None else [[float(v) for v in row] for row in sigma],
    )
    if sigma is not None:
        print(
            f"residual kick covariance: xx={sigma[0, 0]:.6g} "
            f"pp={sigma[1, 1]:.6g} xp={sigma[0, 1]:.6g}"
        )
    print(f"prediction written to {outdir}")
    return 0


GROUPS = {
    "parity": parity_group,
    "squeeze": squeeze_set,
    "gaussian": gaussian_group,
}


def cmd_check_group(args) -> int:
    if args.group in GROUPS:
        group = GROUPS[args.group]()
    elif args.group == "cyclic":
        group = cyclic_group(args.m)
    else:
        raise ConfigError(
            f"unknown group {args.group!r}; choose from "
            f"{', '.join(sorted(GROUPS))}, cyclic"
        )
    from .fock import FockSpace

    space = FockSpace(dim=args.dim, leak_threshold=1.0)
    a = space.annihilation
    print(f"group {group.name} ({len(group.elements)} elements), dim {args.dim}")
    print("degree  residual      decoupled")
    mono = np.eye(space.dim, dtype=complex)
    for p in range(1, args.max_degree + 1):
        mono = mono @ a
        probe = mono / np.max(np.abs(mono))
        residual = group_average_residual(group, probe, space)
        flag = "yes" if residual < 1e-12 else "no"
        print(f"{p:6d}  {residual:.6e}  {flag}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cvecho",
        description="simulate continuous-variable state transfer through "
        "random-unitary noise, with decoupling protocols and filter predictions",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, needs_out=True):
        p.add_argument("--config", help="path to a key = value configuration file")
        p.add_argument("--preset", help="name of a bundled configuration")
        p.add_argument(
            "--set",
            action="append",
            metavar="KEY=VALUE",
            help="override one configuration entry (repeatable)",
        )
        if needs_out:
            p.add_argument("--out", required=True, help="output directory")
            p.add_argument(
                "--no-figures", action="store_true", help="skip figure rendering"
            )

    sim = sub.add_parser("simulate", help="run a Monte-Carlo ensemble")
    add_common(sim)
    sim.set_defaults(func=cmd_simulate)

    swp = sub.add_parser("sweep", help="fidelity versus intervention count")
    add_common(swp)
    swp.set_defaults(func=cmd_sweep)

    flt = sub.add_parser("filter", help="predict the averaged output field")
    add_common(flt)
    flt.set_defaults(func=cmd_filter)

    chk = sub.add_parser("check-group", help="decoupling residuals of a control group")
    chk.add_argument("--group", required=True, help="parity, squeeze, gaussian or cyclic")
    chk.add_argument("--m", type=int, default=2, help="order parameter for cyclic")
    chk.add_argument("--max-degree", type=int, default=6, help="highest ladder power probed")
    chk.add_argument("--dim", type=int, default=40, help="space dimension")
    chk.set_defaults(func=cmd_check_group)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as err:
        print(f"configuration error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as err:
        print(f"I/O error: {err}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
