"""Command-line front end.

Usage::

    python3 -m nanofiber --config run.json --out results/ [--format csv|json] [--verbose]

The configuration is a flat JSON object.  ``command`` selects the task and
every other key is a parameter of that command.  Dimensional parameters are
strings with a unit (``"780 nm"``, ``"3 mW"``, ``"2 mrad"``); quantities
whose unit is outside that grammar are plain SI numbers and their key names
the unit (``c3_J_m3``, ``frequency_per_m``).  Unknown keys are rejected.

Exit status: 0 success, 2 configuration error, 3 physics-domain error,
4 internal failure.  Nothing is written unless the whole run succeeds.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigError, DomainError
from .export import Table, render_csv, render_json, write_artifacts
from .units import parse_quantity

log = logging.getLogger("nanofiber")

EXIT_OK, EXIT_CONFIG, EXIT_DOMAIN, EXIT_INTERNAL = 0, 2, 3, 4

# kind: ("q", unit) quantity string, "float", "int", "str", "bool"
_FIBER = {
    "radius": (("q", "m"), None),
    "wavelength": (("q", "m"), None),
    "n_core": ("float", 1.4537),
    "n_clad": ("float", 1.0),
}
_ATOM = {
    "atom_wavelength": (("q", "m"), "780.241209686 nm"),
    "gamma0_per_s": ("float", 2 * math.pi * 6.0666e6),
    "atom_mass_kg": ("float", 86.909180527 * 1.66053906892e-27),
}
_TAPER = {
    "initial_radius": (("q", "m"), "62.5 um"),
    "linear_angle": (("q", "rad"), "2 mrad"),
    "handoff_radius": (("q", "m"), "6 um"),
    "waist_radius": (("q", "m"), "250 nm"),
    "waist_length": (("q", "m"), "5 mm"),
    "hot_zone_width": (("q", "m"), "1 mm"),
    "pull_velocity_m_s": ("float", 50e-6),  # per motor
}

SCHEMAS = {
    "modes": {**_FIBER, "l_max": ("int", 2)},
    "fields": {
        **_FIBER,
        "mode": ("str", "HE11"),
        "polarization": ("str", "quasilinear"),
        "power": (("q", "W"), "1 W"),
        "half_width": (("q", "m"), None),
        "grid_points": ("int", 41),
        "z": (("q", "m"), "0 m"),
    },
    "neff-curve": {
        "wavelength": (("q", "m"), None),
        "n_core": ("float", 1.4537),
        "n_clad": ("float", 1.0),
        "v_min": ("float", 0.5),
        "v_max": ("float", 5.0),
        "samples": ("int", 100),
        "l_max": ("int", 2),
    },
    "coupling-sweep": {
        **_ATOM,
        "n_core": ("float", 1.4537),
        "n_clad": ("float", 1.0),
        "radius_min": (("q", "m"), "100 nm"),
        "radius_max": (("q", "m"), "400 nm"),
        "radius_points": ("int", 20),
        "distance_min": (("q", "m"), "0 m"),
        "distance_max": (("q", "m"), "500 nm"),
        "distance_points": ("int", 20),
        "orientation": ("str", "radial"),
        "radiative_factor": ("float", 1.0),
    },
    "trap": {
        **_ATOM,
        "radius": (("q", "m"), "250 nm"),
        "n_core": ("float", 1.4537),
        "n_clad": ("float", 1.0),
        "red_wavelength": (("q", "m"), "1064 nm"),
        "red_power": (("q", "W"), "3 mW"),
        "red_n_core": ("float", None),
        "blue_wavelength": (("q", "m"), "750 nm"),
        "blue_power": (("q", "W"), "6.5 mW"),
        "blue_n_core": ("float", None),
        "blue_azimuth": (("q", "rad"), "1.5707963267948966 rad"),
        "c3_J_m3": ("float", None),
        "d_min": (("q", "m"), "30 nm"),
        "d_max": (("q", "m"), "800 nm"),
        "n_r": ("int", 80),
        "n_phi": ("int", 36),
        "n_z": ("int", 24),
    },
    "pull-plan": dict(_TAPER),
    "simulate-pull": {
        **_TAPER,
        "probe_pair": ("str", None),
        "probe_wavelength": (("q", "m"), "795 nm"),
        "n_core": ("float", 1.4533),
        "eta": ("float", 0.1),
        "probe_radius_min": (("q", "m"), None),
        "probe_radius_max": (("q", "m"), None),
        "sample_spacing": (("q", "m"), "0.25 um"),
    },
    "spectrogram": {
        "input": ("str", None),
        "window_width": (("q", "m"), None),
        "hop": (("q", "m"), None),
        "ridges": ("int", 1),
    },
    "radius-extract": {
        "frequency_per_m": ("float", None),
        "pair": ("str", "HE11:TM01"),
        "wavelength": (("q", "m"), None),
        "n_core": ("float", 1.4533),
        "n_clad": ("float", 1.0),
        "search_min": (("q", "m"), None),
        "search_max": (("q", "m"), None),
    },
}
_RESERVED = {"command", "output_dir"}


def parse_config(raw: dict) -> tuple[str, dict, str | None]:
    """Validate a decoded config; returns ``(command, params, output_dir)``."""
    if not isinstance(raw, dict):
        raise ConfigError("configuration must be a JSON object")
    cmd = raw.get("command")
    if cmd not in SCHEMAS:
        raise ConfigError(f"unknown or missing command {cmd!r}; choose from {sorted(SCHEMAS)}")
    schema = SCHEMAS[cmd]
    unknown = sorted(set(raw) - set(schema) - _RESERVED)
    if unknown:
        raise ConfigError(f"unknown key(s) for {cmd}: {', '.join(unknown)}")
    params = {}
    for key, (kind, default) in schema.items():
        value = raw.get(key, default)
        if value is None:
            if key in raw or _required(cmd, key):
                raise ConfigError(f"missing required key {key!r}")
            params[key] = None
            continue
        params[key] = _coerce(key, kind, value)
    out = raw.get("output_dir")
    if out is not None and not isinstance(out, str):
        raise ConfigError("output_dir must be a string")
    return cmd, params, out


_OPTIONAL = {"red_n_core", "blue_n_core", "probe_pair", "probe_radius_min", "probe_radius_max"}


def _required(cmd, key):
    return key not in _OPTIONAL


def _coerce(key, kind, value):
    if isinstance(kind, tuple):
        return parse_quantity(value, kind[1], key)
    if kind == "float":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{key}: expected a number, got {value!r}")
        return float(value)
    if kind == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{key}: expected an integer, got {value!r}")
        return value
    if kind == "str":
        if not isinstance(value, str):
            raise ConfigError(f"{key}: expected a string, got {value!r}")
        return value
    raise AssertionError(kind)


# -- commands ---------------------------------------------------------------------


def _fiber(p, **over):
    from .modes import FiberSpec

    kw = {"radius_a": p["radius"], "n_core": p["n_core"], "n_clad": p["n_clad"], "wavelength": p["wavelength"]}
    kw.update(over)
    return FiberSpec(**kw)


def _atom(p, orientation=(1.0, 0.0, 0.0)):
    from .coupling import AtomSpec

    return AtomSpec(
        transition_wavelength=p["atom_wavelength"],
        gamma0_free=p["gamma0_per_s"],
        dipole_orientation=orientation,
        mass=p["atom_mass_kg"],
    )


def _pair(text):
    from .modes import ModeId

    parts = text.split(":")
    if len(parts) != 2:
        raise ConfigError(f"mode pair must look like 'HE11:TM01', got {text!r}")
    try:
        return tuple(ModeId.parse(s.strip()) for s in parts)
    except DomainError as e:
        raise ConfigError(str(e)) from None


def run_modes(p):
    from .modes import solve_modes, v_number

    fib = _fiber(p)
    sols = [s for s in solve_modes(fib, p["l_max"]) if s.mode.rotation == 1]
    t = Table(
        {
            "mode [-]": [s.mode.label for s in sols],
            "family [-]": [s.mode.family for s in sols],
            "l [-]": [s.mode.l for s in sols],
            "m [-]": [s.mode.m for s in sols],
            "n_eff [-]": [s.n_eff for s in sols],
            "beta [1/m]": [s.beta for s in sols],
            "u [-]": [s.u for s in sols],
            "w [-]": [s.w for s in sols],
        }
    )
    return {"modes": t}, {"V": v_number(fib), "guided_modes": len(sols)}


def run_fields(p):
    from .fields import evaluate_fields, intensity, quasilinear
    from .modes import ModeId, solve_mode

    fib = _fiber(p)
    mode = ModeId.parse(p["mode"])
    plus = solve_mode(fib, mode, p["power"])
    if p["polarization"] == "quasilinear":
        if mode.l == 0:
            raise DomainError("TE/TM modes have no quasilinear form; use polarization 'circular'")
        ev = quasilinear(plus, plus.rotated(-1))
    elif p["polarization"] == "circular":
        ev = lambda r, phi, z: evaluate_fields(plus, r, phi, z)  # noqa: E731
    else:
        raise ConfigError("polarization must be 'quasilinear' or 'circular'")
    hw = p["half_width"]
    n = p["grid_points"]
    if n < 2:
        raise ConfigError("grid_points must be at least 2")
    ax = np.linspace(-hw, hw, n)
    X, Y = np.meshgrid(ax, ax, indexing="xy")
    R, PHI = np.hypot(X, Y), np.arctan2(Y, X)
    f = ev(R.ravel(), PHI.ravel(), p["z"])
    E, H = f.cartesian()
    e2 = np.sum(np.abs(E) ** 2, axis=0)
    surf = ev(np.full(72, fib.radius_a), np.linspace(0, 2 * math.pi, 72, endpoint=False), p["z"])
    i_surf = float(np.max(intensity(surf.e_squared)))
    i = intensity(e2)
    cols = {"x [m]": X.ravel(), "y [m]": Y.ravel(), "z [m]": np.full(X.size, p["z"])}
    for name, v in (("E", E), ("H", H)):
        for c, comp in zip("xyz", v):
            unit = "V/m" if name == "E" else "A/m"
            cols[f"Re {name}{c} [{unit}]"] = comp.real
            cols[f"Im {name}{c} [{unit}]"] = comp.imag
    cols["|E|^2 [V^2/m^2]"] = e2
    cols["I_over_peak [-]"] = i / i.max()
    cols["I_over_surface [-]"] = i / i_surf
    return {"fields": Table(cols)}, {"mode": mode.label, "surface_peak_intensity_W_m2": i_surf}


def run_neff_curve(p):
    from .modes import FiberSpec, neff_curve

    tpl = FiberSpec(1e-6, p["n_core"], p["n_clad"], p["wavelength"])
    rows = neff_curve(tpl, (p["v_min"], p["v_max"]), p["samples"], p["l_max"])
    t = Table({"V [-]": [r[0] for r in rows], "mode [-]": [r[1].label for r in rows], "n_eff [-]": [r[2] for r in rows]})
    return {"neff_curve": t}, {"rows": len(rows)}


def run_coupling_sweep(p):
    from .coupling import coupling_sweep
    from .modes import FiberSpec

    o = p["orientation"]
    axes = {"radial": (1.0, 0.0, 0.0), "azimuthal": (0.0, 1.0, 0.0), "axial": (0.0, 0.0, 1.0)}
    if o in axes:
        orient = axes[o]
    elif o in ("isotropic", "aligned"):
        orient = o
    else:
        raise ConfigError("orientation must be radial, azimuthal, axial, isotropic or aligned")
    atom = _atom(p, orient)
    tpl = FiberSpec(1e-6, p["n_core"], p["n_clad"], atom.transition_wavelength)
    radii = np.linspace(p["radius_min"], p["radius_max"], p["radius_points"])
    dists = np.linspace(p["distance_min"], p["distance_max"], p["distance_points"])
    # the surface itself is excluded: the atom must sit outside the glass
    dists = np.where(dists <= 0, 1e-12, dists)
    rows = coupling_sweep(tpl, atom, radii, dists, ("scaled", p["radiative_factor"]))
    t = Table(
        {
            "radius [m]": [r[0] for r in rows],
            "distance [m]": [r[1] for r in rows],
            "alpha [-]": [r[2].alpha_enh for r in rows],
            "beta_c [-]": [r[2].beta_c for r in rows],
            "C1 [-]": [r[2].C1 for r in rows],
            "purcell [-]": [r[2].purcell for r in rows],
            "gamma1D [rad/s]": [r[2].gamma1D for r in rows],
            "gamma1D/2pi [MHz]": [r[2].gamma1D / (2 * math.pi) / 1e6 for r in rows],
            "od_single [-]": [r[2].od_single for r in rows],
        }
    )
    return {"coupling_sweep": t}, {"points": len(rows), "orientation": o}


def run_trap(p):
    from .modes import FiberSpec
    from .trap import RUNNING_WAVE, STANDING_WAVE, GridSpec, TrapBeam, TrapConfig, to_microkelvin, total_potential

    atom = _atom(p)
    fib = FiberSpec(p["radius"], p["n_core"], p["n_clad"], atom.transition_wavelength)
    red = TrapBeam(p["red_wavelength"], p["red_power"], 0.0, STANDING_WAVE, p["red_n_core"])
    blue = TrapBeam(p["blue_wavelength"], p["blue_power"], p["blue_azimuth"], RUNNING_WAVE, p["blue_n_core"])
    cfg = TrapConfig(fib, atom, red, blue, p["c3_J_m3"])
    grid = GridSpec(p["d_min"], p["d_max"], p["n_r"], p["n_phi"], p["n_z"])
    prof = total_potential(cfg, grid)
    R, P, Z = np.meshgrid(prof.r, prof.phi, prof.z, indexing="ij")
    c = prof.components
    t = Table(
        {
            "r [m]": R.ravel(),
            "phi [rad]": P.ravel(),
            "z [m]": Z.ravel(),
            "U_red [uK]": to_microkelvin(c["red"]).ravel(),
            "U_blue [uK]": to_microkelvin(c["blue"]).ravel(),
            "U_vdw [uK]": to_microkelvin(c["vdw"]).ravel(),
            "U_total [uK]": prof.U_microkelvin.ravel(),
        }
    )
    summary = prof.summary()
    summary["c3_J_m3"] = p["c3_J_m3"]
    summary["trap_frequencies_kHz"] = [w / (2 * math.pi) / 1e3 for w in prof.trap_frequencies]
    return {"trap_profile": t, "trap_summary": summary}, {"depth_uK": prof.depth}


def _target(p):
    from .taper import TaperProfile

    return TaperProfile(
        p["initial_radius"], p["linear_angle"], p["handoff_radius"], p["waist_radius"], p["waist_length"]
    )


def run_pull_plan(p):
    from .taper import plan_pull

    tg = _target(p)
    plan = plan_pull(tg, p["hot_zone_width"], p["pull_velocity_m_s"])
    z = np.linspace(0, tg.half_length * 1.05, 2001)
    prof = Table({"z [m]": z, "r [m]": tg.radius(z)})
    return {"pull_plan": plan.as_dict(), "target_profile": prof}, {"steps": len(plan.steps)}


def run_simulate_pull(p):
    from .modes import FiberSpec
    from .taper import DeltaBetaTable, plan_pull, simulate_pull, transmission_signal

    tg = _target(p)
    plan = plan_pull(tg, p["hot_zone_width"], p["pull_velocity_m_s"])
    sim = simulate_pull(plan, tg.initial_radius)
    z, r = sim.samples()
    out = {"simulated_profile": Table({"z [m]": z, "r [m]": r})}
    info = {
        "steps": len(plan.steps),
        "elongation_m": sim.elongation,
        "volume_relative_change": sim.volume / sim.initial_volume - 1,
        "max_relative_radius_error": float(np.max(np.abs(r / tg.radius(z) - 1))),
    }
    if p["probe_pair"]:
        lo = p["probe_radius_min"] or tg.waist_radius
        hi = p["probe_radius_max"] or tg.initial_radius
        tpl = FiberSpec(tg.waist_radius, p["n_core"], 1.0, p["probe_wavelength"])
        table = DeltaBetaTable(tpl, _pair(p["probe_pair"]), (lo, hi))
        sig = transmission_signal(plan, tg.initial_radius, table, p["eta"], p["sample_spacing"])
        out["transmission"] = Table(
            {"elongation [m]": sig.elongation, "transmission [-]": sig.transmission, "hot_radius [m]": sig.hot_radius}
        )
        info["transmission_samples"] = len(sig.elongation)
    return out, info


def _read_signal(path):
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"input file {path!r} does not exist")
    try:
        data = np.genfromtxt(p, delimiter=",", names=True, dtype=float)
    except ValueError as e:
        raise ConfigError(f"cannot read {path!r}: {e}") from None
    names = data.dtype.names or ()
    if len(names) < 2:
        raise ConfigError("input CSV needs an elongation column and a value column")
    x, y = np.asarray(data[names[0]]), np.asarray(data[names[1]])
    if x.size < 2:
        raise ConfigError("input signal has fewer than two samples")
    dx = np.diff(x)
    if not np.allclose(dx, dx[0], rtol=1e-6, atol=0):
        raise ConfigError("input signal must be uniformly sampled")
    return x, y


def run_spectrogram(p):
    from .spectra import extract_ridges, spectrogram

    x, y = _read_signal(p["input"])
    spec = spectrogram(y, float(x[1] - x[0]), p["window_width"], p["hop"], start=float(x[0]))
    C, F = np.meshgrid(spec.window_centers, spec.frequency_bins, indexing="ij")
    out = {
        "spectrogram": Table(
            {"center [m]": C.ravel(), "frequency [1/m]": F.ravel(), "psd [m]": spec.psd.ravel()}
        )
    }
    ridges = extract_ridges(spec, p["ridges"])
    cols = {"center [m]": spec.window_centers}
    for i, r in enumerate(ridges):
        cols[f"ridge{i} frequency [1/m]"] = r.frequency
        cols[f"ridge{i} amplitude [m]"] = r.amplitude
    out["ridges"] = Table(cols)
    return out, {"windows": len(spec.window_centers), "ridges": len(ridges), "bin_width_per_m": spec.bin_width}


def run_radius_extract(p):
    from .modes import FiberSpec
    from .spectra import radius_from_beat

    pair = _pair(p["pair"])
    tpl = FiberSpec(p["search_min"], p["n_core"], p["n_clad"], p["wavelength"])
    a = radius_from_beat(p["frequency_per_m"], pair, tpl, (p["search_min"], p["search_max"]))
    res = {"radius_m": a, "pair": p["pair"], "frequency_per_m": p["frequency_per_m"]}
    return {"radius": res}, res


RUNNERS = {
    "modes": run_modes,
    "fields": run_fields,
    "neff-curve": run_neff_curve,
    "coupling-sweep": run_coupling_sweep,
    "trap": run_trap,
    "pull-plan": run_pull_plan,
    "simulate-pull": run_simulate_pull,
    "spectrogram": run_spectrogram,
    "radius-extract": run_radius_extract,
}


def _render(outputs: dict, fmt: str) -> dict:
    files = {}
    for name, obj in outputs.items():
        if isinstance(obj, Table) and fmt == "csv":
            files[f"{name}.csv"] = render_csv(obj)
        else:
            files[f"{name}.json"] = render_json(obj)
    return files


def run(raw_config: dict, out_dir=None, fmt: str = "csv") -> tuple[int, dict]:
    """Execute one configuration; returns ``(exit status, info)``.

    Artifacts are written only after the command finished successfully.
    """
    try:
        cmd, params, cfg_out = parse_config(raw_config)
        if fmt not in ("csv", "json"):
            raise ConfigError("format must be csv or json")
        target = out_dir or cfg_out or "out"
        outputs, info = RUNNERS[cmd](params)
        files = _render(outputs, fmt)
        write_artifacts(target, files, {"command": cmd, "version": __version__})
        log.info("%s: wrote %d file(s) to %s", cmd, len(files) + 1, target)
        return EXIT_OK, info
    except ConfigError as e:
        log.error("configuration error: %s", e)
        return EXIT_CONFIG, {"error": str(e)}
    except DomainError as e:
        log.error("domain error: %s", e)
        return EXIT_DOMAIN, {"error": str(e)}
    except Exception as e:  # noqa: BLE001
        log.exception("internal failure")
        return EXIT_INTERNAL, {"error": repr(e)}


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="nanofiber", description="Optical nanofiber numerical workbench")
    ap.add_argument("--config", required=True, help="JSON run configuration")
    ap.add_argument("--out", help="output directory (overrides output_dir in the config)")
    ap.add_argument("--format", choices=("csv", "json"), default="csv", help="table format")
    ap.add_argument("--verbose", action="store_true", help="log progress to stderr")
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        raw = json.loads(Path(args.config).read_text())
    except (OSError, json.JSONDecodeError) as e:
        log.error("configuration error: %s", e)
        return EXIT_CONFIG
    status, info = run(raw, args.out, args.format)
    if args.verbose and status == EXIT_OK:
        print(json.dumps(info, sort_keys=True, default=str), file=sys.stderr)
    return status


if __name__ == "__main__":
    sys.exit(main())
