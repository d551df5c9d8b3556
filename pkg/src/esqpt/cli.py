"""Command-line front end: ``esqpt <subcommand> --config run.json --out results/``.

A run reads one JSON document, validates it, computes, and writes CSV/JSON
outputs plus ``manifest.json``.  Exit status 2 signals an invalid
configuration and 1 a failed computation.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import sys
import time
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from . import io as eio
from . import lattice as lat
from . import quench as qn
from . import semiclassics as sc
from . import spectral as sp
from . import thermo as th
from . import tunneling as tn
from .models import (BoseHubbardChain, CustomPotential, ExtendedDicke, Lipkin,
                     QuasispinBasis, build, build_quasispin_ops, converge_dicke_cutoff,
                     model_from_dict, split_lambda)

SUBCOMMANDS = ("spectrum", "density", "peres", "flow", "semiclassics", "quench", "thermo",
               "lattice", "tunnel")


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# schema

_NUM = {"type": "number"}
_POS = {"type": "number", "exclusiveMinimum": 0}
_INT = {"type": "integer", "minimum": 0}
_POS_INT = {"type": "integer", "minimum": 1}


def _obj(props: dict, required=()) -> dict:
    return {"type": "object", "properties": props, "required": list(required),
            "additionalProperties": False}


_GRID = _obj({"e_min": _NUM, "e_max": _NUM, "n_points": {"type": "integer", "minimum": 2}},
             ["e_min", "e_max", "n_points"])
_KERNEL = _obj({"kind": {"enum": ["gaussian", "cauchy"]}, "width": _POS}, ["kind", "width"])
_BLOCK = {"enum": ["+", "-", None]}

MODEL_SCHEMA = {"oneOf": [
    _obj({"kind": {"const": "lipkin"}, "N": _POS_INT, "lam": _NUM, "chi": _NUM},
         ["kind", "N", "lam"]),
    _obj({"kind": {"const": "dicke"}, "N": _POS_INT, "omega": _POS, "omega0": _POS,
          "lam": _NUM, "delta": {"type": "number", "minimum": 0, "maximum": 1},
          "n_max": {"type": ["integer", "null"], "minimum": 0}},
         ["kind", "N", "omega", "omega0", "lam"]),
    _obj({"kind": {"const": "tc_block"}, "N": _POS_INT, "omega": _POS, "omega0": _POS,
          "lam": _NUM, "M": _INT}, ["kind", "N", "omega", "omega0", "lam", "M"]),
    _obj({"kind": {"const": "bh_two_site"}, "N": _POS_INT, "eps_plus": _NUM,
          "eps_minus": _NUM, "tau": _NUM, "U": _NUM},
         ["kind", "N", "eps_plus", "eps_minus", "tau", "U"]),
    _obj({"kind": {"const": "bh_chain"}, "n_sites": _POS_INT, "n_bosons": _INT, "eps": _NUM,
          "tau": {"type": "number", "minimum": 0}, "U": _NUM},
         ["kind", "n_sites", "n_bosons", "eps", "tau", "U"]),
    _obj({"kind": {"const": "custom"}, "f": _POS_INT, "mass": _POS,
          "terms": {"type": "array", "items": {
              "type": "array", "prefixItems": [{"type": "array", "items": _INT}, _NUM],
              "minItems": 2, "maxItems": 2}}},
         ["kind", "f", "terms"]),
]}

_POTENTIAL = {"oneOf": [
    _obj({"kind": {"const": "square"}, "height": _POS, "width": _POS, "mass": _POS},
         ["kind", "height", "width"]),
    _obj({"kind": {"const": "eckart"}, "height": _POS, "width": _POS, "mass": _POS},
         ["kind", "height", "width"]),
    _obj({"kind": {"const": "double_barrier"},
          "coefficients": {"type": "array", "items": _NUM, "minItems": 3, "maxItems": 3},
          "mass": _POS}, ["kind"]),
]}

ANALYSIS_SCHEMAS = {
    "spectrum": _obj({"block": _BLOCK}),
    "density": _obj({"block": _BLOCK, "kernel": _KERNEL, "grid": _GRID}),
    "peres": _obj({"block": _BLOCK, "observable": {"enum": ["Jz", "Jx", "H", "dH"]},
                   "kernel": _KERNEL, "grid": _GRID}, ["observable"]),
    "flow": _obj({"block": _BLOCK, "lam_min": _NUM, "lam_max": _NUM,
                  "n_lam": {"type": "integer", "minimum": 3}, "kernel": _KERNEL,
                  "grid": _GRID}, ["lam_min", "lam_max", "n_lam", "kernel", "grid"]),
    "semiclassics": _obj({"n_seeds": _POS_INT, "e_max": _NUM,
                          "weyl": _obj({"grid": _GRID, "n_samples": _POS_INT,
                                        "chunk": _POS_INT}, ["grid", "n_samples"])}),
    "quench": _obj({"lam_in": _NUM, "lam_fi": _NUM, "state_index": _INT, "block": _BLOCK,
                    "t_max": _POS, "n_times": {"type": "integer", "minimum": 2},
                    "kernel": _KERNEL}, ["lam_in", "lam_fi"]),
    "thermo": _obj({"t_min": _POS, "t_max": _POS, "n_temperatures": {"type": "integer",
                                                                       "minimum": 1},
                    "block": _BLOCK,
                    "weyl": _obj({"grid": _GRID, "n_samples": _POS_INT, "chunk": _POS_INT},
                                 ["grid", "n_samples"])},
                   ["t_min", "t_max", "n_temperatures"]),
    "lattice": _obj({"grid": _GRID, "n_k": _POS_INT, "n_samples": _POS_INT,
                     "particle_numbers": {"type": "array", "items": _INT}}, ["grid"]),
    "tunnel": _obj({"potential": _POTENTIAL, "e_min": _POS, "e_max": _POS,
                    "n_energies": {"type": "integer", "minimum": 3},
                    "eps": {"type": "number", "minimum": 0}},
                   ["potential", "e_min", "e_max", "n_energies"]),
}


def config_schema(subcommand: str) -> dict:
    props = {"model": MODEL_SCHEMA, "analysis": ANALYSIS_SCHEMAS[subcommand],
             "seed": {"type": "integer", "minimum": 0, "maximum": 2 ** 64 - 1},
             "threads": _POS_INT}
    required = ["analysis"] if subcommand == "tunnel" else ["model", "analysis"]
    return {"type": "object", "properties": props, "required": required,
            "additionalProperties": False}


def _locate(text: str, path) -> int:
    """Line number of the deepest key of ``path`` that appears in the text."""
    line, pos = 1, 0
    for key in path:
        if not isinstance(key, str):
            continue
        hit = text.find(f'"{key}"', pos)
        if hit < 0:
            break
        pos = hit
        line = text.count("\n", 0, hit) + 1
    return line


def load_config(path: Path, subcommand: str, seed_override: int | None = None) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config ({exc.strerror})") from exc
    try:
        config = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}: invalid JSON: {exc.msg}") from exc
    if seed_override is not None and isinstance(config, dict):
        config["seed"] = seed_override
    validator = jsonschema.Draft202012Validator(config_schema(subcommand))
    errors = sorted(validator.iter_errors(config), key=lambda e: list(e.absolute_path))
    if errors:
        err = jsonschema.exceptions.best_match(errors)
        where = _locate(text, list(err.absolute_path))
        loc = "/".join(str(p) for p in err.absolute_path) or "<root>"
        raise ConfigError(f"{path}:{where}: {loc}: {err.message}")
    analysis = config["analysis"]
    needs_seed = "weyl" in analysis or (subcommand == "lattice" and "n_samples" in analysis)
    if needs_seed and "seed" not in config:
        key = "weyl" if "weyl" in analysis else "n_samples"
        raise ConfigError(f"{path}:{_locate(text, ['analysis', key])}: "
                          "Monte-Carlo analysis requires a top-level 'seed'")
    if "model" in config:
        try:
            config["_spec"] = model_from_dict(config["model"])
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"{path}:{_locate(text, ['model'])}: model: {exc}") from exc
    return config


# ---------------------------------------------------------------------------
# runners


def _grid(cfg: dict) -> np.ndarray:
    return np.linspace(cfg["e_min"], cfg["e_max"], cfg["n_points"])


def _kernel(cfg: dict | None):
    return sp.SmoothingKernel(cfg["kind"], cfg["width"]) if cfg else None


def _spectrum(spec, block):
    return sp.diagonalize(build(spec, block), spec, getattr(spec, "lam", None))


def run_spectrum(config, out: Path, ctx) -> list[Path]:
    bundle = _spectrum(config["_spec"], config["analysis"].get("block"))
    return [eio.write_csv(out / "spectrum.csv",
                          {"index": np.arange(bundle.dim), "E": bundle.eigenvalues})]


def run_density(config, out: Path, ctx) -> list[Path]:
    a = config["analysis"]
    levels = sp.eigenvalues(build(config["_spec"], a.get("block")))
    kernel = _kernel(a.get("kernel")) or sp.default_kernel(levels)
    grid = _grid(a["grid"]) if "grid" in a else sp.energy_grid(levels, kernel)
    curve = sp.smoothed_level_density(levels, kernel, grid)
    ctx["derived"]["kernel_width"] = kernel.width
    return [eio.write_csv(out / "density.csv", {"E": curve.energies, "rho": curve.values,
                                                "drho_dE": curve.derivative(1)})]


def _observable(spec, name: str, block):
    if name == "H":
        return build(spec, block)
    if name == "dH":
        return split_lambda(spec, block)[1]
    if not isinstance(spec, Lipkin) or block is not None:
        raise ValueError(f"observable {name} is available for full Lipkin spaces only")
    ops = build_quasispin_ops(QuasispinBasis.from_size(spec.N))
    return ops[name]


def run_peres(config, out: Path, ctx) -> list[Path]:
    a = config["analysis"]
    spec = config["_spec"]
    bundle = _spectrum(spec, a.get("block"))
    obs = _observable(spec, a["observable"], a.get("block"))
    lattice = sp.peres_lattice(bundle, obs, a["observable"])
    paths = [eio.write_csv(out / "peres.csv", {"E": lattice.energies,
                                               "A": lattice.expectations})]
    kernel = _kernel(a.get("kernel")) or sp.default_kernel(bundle.eigenvalues)
    grid = _grid(a["grid"]) if "grid" in a else sp.energy_grid(bundle.eigenvalues, kernel)
    dens = sp.observable_density(bundle, obs, kernel, grid)
    rho = sp.smoothed_level_density(bundle, kernel, grid)
    paths.append(eio.write_csv(out / "observable_density.csv",
                               {"E": grid, "A_density": dens.values, "rho": rho.values}))
    ctx["derived"]["kernel_width"] = kernel.width
    return paths


def run_flow(config, out: Path, ctx) -> list[Path]:
    a = config["analysis"]
    spec = config["_spec"]
    H0, V = split_lambda(spec, a.get("block"))
    lams = np.linspace(a["lam_min"], a["lam_max"], a["n_lam"])
    levels, slopes = [], []
    for lam in lams:
        bundle = sp.diagonalize(H0 + lam * V)
        levels.append(bundle.eigenvalues)
        slopes.append(sp.level_slopes(bundle, V))
    res = sp.smoothed_flow(lams, levels, slopes, _kernel(a["kernel"]), _grid(a["grid"]))
    L, E = np.meshgrid(lams, res.energies, indexing="ij")
    ctx["derived"]["continuity_residual"] = sp.continuity_residual(res)
    return [eio.write_csv(out / "flow.csv", {"lam": L.ravel(), "E": E.ravel(),
                                             "rho": res.density.ravel(),
                                             "flow": res.flow.ravel(),
                                             "rate": res.rate.ravel()})]


def run_semiclassics(config, out: Path, ctx) -> list[Path]:
    a = config["analysis"]
    spec = config["_spec"]
    systems = sc.classical_limit(spec, a.get("e_max", 2.0))
    points = sc.find_stationary_points(systems, n_seeds=a.get("n_seeds", 200),
                                       seed=config.get("seed", 0))
    f = systems[0].f
    report = []
    for p in points:
        entry = p.to_dict()
        pred = sc.classify(p, f)
        entry["prediction"] = {"order": pred.order, "shape": pred.shape, "sign": pred.sign}
        report.append(entry)
    paths = [eio.write_json(out / "stationary_points.json", {"f": f, "points": report})]
    if "weyl" in a:
        w = a["weyl"]
        curve = sc.weyl_density(systems[0],
                                _grid(w["grid"]), w["n_samples"], config["seed"],
                                chunk=w.get("chunk", 1_000_000), threads=ctx["threads"])
        paths.append(eio.write_csv(out / "weyl.csv", {"E": curve.energies, "rho": curve.values,
                                                      "rho_err": curve.meta["error"]}))
    return paths


def run_quench(config, out: Path, ctx) -> list[Path]:
    a = config["analysis"]
    setup = qn.QuenchSetup.from_model(config["_spec"], a["lam_in"], a["lam_fi"],
                                      a.get("state_index", 0), a.get("block"))
    ov, W = qn.strength_function(setup, _kernel(a.get("kernel")))
    times = np.linspace(0.0, a.get("t_max", 50.0), a.get("n_times", 1001))
    P = qn.survival_probability(ov, times)
    moments = qn.quench_moments(setup)
    summary = {"participation_ratio": ov.participation_ratio,
               "long_time_average": qn.long_time_average(ov), **moments}
    ctx["derived"]["kernel_width"] = W.kernel.width
    return [eio.write_csv(out / "survival.csv", {"t": times, "P": P}),
            eio.write_csv(out / "strength.csv", {"E": W.energies, "W": W.values}),
            eio.write_json(out / "quench_summary.json", summary)]


def run_thermo(config, out: Path, ctx) -> list[Path]:
    a = config["analysis"]
    spec = config["_spec"]
    temps = np.linspace(a["t_min"], a["t_max"], a["n_temperatures"])
    if isinstance(spec, CustomPotential):
        if "weyl" not in a:
            raise ValueError("custom potentials need a 'weyl' density block")
        w = a["weyl"]
        source = sc.weyl_density(sc.classical_standard(spec), _grid(w["grid"]), w["n_samples"],
                                 config["seed"], chunk=w.get("chunk", 1_000_000),
                                 threads=ctx["threads"])
    else:
        source = sp.eigenvalues(build(spec, a.get("block")))
    states = th.canonical(source, temps)
    paths = [eio.write_csv(out / "canonical.csv", {
        "T": temps, "E": [s.mean_energy for s in states],
        "C": [s.heat_capacity for s in states], "S": [s.entropy for s in states],
        "F": [s.free_energy for s in states]})]
    if isinstance(source, sp.DensityCurve):
        micro = th.microcanonical(source, temps)
        paths.append(eio.write_csv(out / "microcanonical.csv", {
            "E": micro.energies, "T_micro": micro.temperature, "C_micro": micro.heat_capacity}))
        rows_t, rows_e, rows_b = [], [], []
        for b, chain in enumerate(th.connect_branches(micro.branches,
                                                      10 * source.spacing)):
            for T, E in chain:
                rows_t.append(T)
                rows_e.append(E)
                rows_b.append(b)
        paths.append(eio.write_csv(out / "caloric_branches.csv",
                                   {"branch": np.array(rows_b, dtype=int), "T": rows_t,
                                    "E": rows_e}))
    return paths


def run_lattice(config, out: Path, ctx) -> list[Path]:
    a = config["analysis"]
    spec = config["_spec"]
    if not isinstance(spec, BoseHubbardChain):
        raise ValueError("lattice analysis needs a bh_chain model")
    disp = lat.DispersionSpec(spec.eps, spec.tau, spec.n_bosons)
    paths = []
    if spec.n_bosons > 0:
        curve = lat.dos_from_dispersion(disp, _grid(a["grid"]), n_k=a.get("n_k"),
                                        n_samples=a.get("n_samples", 10_000_000),
                                        seed=config.get("seed", 0))
        paths.append(eio.write_csv(out / "dos.csv", {"E": curve.energies, "dos": curve.values}))
    reports = lat.finite_chain_bands(spec, a.get("particle_numbers"))
    paths.append(eio.write_json(out / "bands.json",
                                {str(n): r.to_dict() for n, r in reports.items()}))
    return paths


def _potential(cfg: dict):
    kind = cfg["kind"]
    mass = cfg.get("mass", 1.0)
    if kind == "square":
        return tn.square_barrier(cfg["height"], cfg["width"], mass)
    if kind == "eckart":
        return tn.eckart_barrier(cfg["height"], cfg["width"], mass)
    return tn.double_barrier(tuple(cfg.get("coefficients", tn.DOUBLE_BARRIER_COEFFICIENTS)),
                             cfg.get("mass", 25.0))


def run_tunnel(config, out: Path, ctx) -> list[Path]:
    a = config["analysis"]
    pot = _potential(a["potential"])
    energies = np.linspace(a["e_min"], a["e_max"], a["n_energies"])
    res = tn.transmit(pot, energies, eps=a.get("eps", 0.0))
    delay, _ = tn.complex_time_delay(res)
    w = tn.wkb_times(pot, energies)
    return [eio.write_csv(out / "tunnel.csv", {
        "E": energies, "Re_beta": res.beta.real, "Im_beta": res.beta.imag,
        "abs_beta2": res.transmission, "Phi_re": res.phase.real, "Phi_im": res.phase.imag,
        "Re_dt": delay.real, "Im_dt": delay.imag,
        "t_plus_minus_t0": w["t_plus_minus_t_zero"], "t_minus": w["t_minus"]})]


RUNNERS = {name: globals()[f"run_{name}"] for name in SUBCOMMANDS}


def _public_config(config: dict) -> dict:
    return {k: v for k, v in config.items() if not k.startswith("_")}


def run(subcommand: str, config_path: Path, out_dir: Path, threads: int = 1,
        seed: int | None = None) -> int:
    try:
        config = load_config(config_path, subcommand, seed)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    ctx = {"threads": config.get("threads", threads) if threads == 1 else threads,
           "derived": {}}
    start = time.perf_counter()
    try:
        spec = config.get("_spec")
        # the classical analysis never builds the boson space
        if isinstance(spec, ExtendedDicke) and subcommand != "semiclassics":
            if spec.n_max is None:
                # fix the cutoff once so every build in the run shares it
                n_max, _ = converge_dicke_cutoff(spec, config["analysis"].get("block"),
                                                 spec.N + 1)
                config["_spec"] = dataclasses.replace(spec, n_max=n_max)
            ctx["derived"]["n_max"] = config["_spec"].n_max
        outputs = RUNNERS[subcommand](config, out_dir, ctx)
    except Exception as exc:  # any module failure maps to exit status 1
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    eio.write_manifest(out_dir, _public_config(config), __version__,
                       time.perf_counter() - start, ctx["derived"], outputs)
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="esqpt", description=__doc__.splitlines()[0])
    parser.add_argument("subcommand", choices=SUBCOMMANDS)
    parser.add_argument("--config", required=True, type=Path)
    parser.add_argument("--out", required=True, type=Path)
    parser.add_argument("--threads", type=int, default=1)
    parser.add_argument("--seed", type=int, default=None)
    args = parser.parse_args(argv)
    if args.threads < 1:
        parser.error("--threads must be positive")
    return run(args.subcommand, args.config, args.out, args.threads, args.seed)


if __name__ == "__main__":
    sys.exit(main())
