"""Configuration, orchestration and serialization for every computation.

Every command reads a JSON config, validates it fully before any
computation, and writes CSV tables (17 significant digits, so reruns of an
identical config are byte-identical) plus a JSON manifest with the config
hash and diagnostics.  Exit codes: 0 success, 2 schema error,
3 convergence error, 4 numeric error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import atomarray, dynamics, spectral
from .errors import (ConvergenceError, DiracBathError, RangeError, SchemaError)
from .lattice import ANISOTROPIC, MIZOGUCHI, LatticeModel

COMMANDS = ("bands", "dos", "selfenergy", "boundstate", "dynamics",
            "radiation", "array-bands", "classify")

_MODEL_KEYS = {"variant", "J1", "J2", "beta1", "beta2",
               "d", "beta", "lambda_a", "Gamma_a"}
_GRID_KEYS = {"N1", "N2"}
_KPATH_KEYS = {"points", "samples_per_segment", "waypoints"}
_EMITTER_KEYS = {"positions", "delta", "g"}
_NUMERIC_KEYS = {"n_bins", "dt", "t_max", "eta", "cutoff_shells",
                 "snapshot_times", "e_min", "e_max", "n_points", "E_BS",
                 "sublattice", "z_imag", "sector", "k_star", "window",
                 "certify_every", "initial"}
_OUTPUT_KEYS = {"directory", "format"}

NUMERIC_DEFAULTS = {
    "n_bins": 400, "dt": None, "t_max": 50.0, "eta": 1e-6,
    "cutoff_shells": 60, "snapshot_times": [], "e_min": -4.0, "e_max": 4.0,
    "n_points": 801, "E_BS": None, "sublattice": "A", "z_imag": 1e-6,
    "sector": "out-of-plane", "k_star": None, "window": 0.1,
    "certify_every": 0, "initial": "first",
}


def _fmt(x) -> str:
    """17-significant-digit text, round-trip exact for float64."""
    return f"{float(x):.17g}"


def _reject_unknown(section, mapping, allowed):
    for key in mapping:
        if key not in allowed:
            raise SchemaError(f"unknown key {section}.{key}")


def _require(cond, message, exc=RangeError):
    if not cond:
        raise exc(message)


class RunConfig:
    """Validated, defaults-resolved run description."""

    def __init__(self, command, model, grid, kpath, emitters, numeric, output):
        self.command = command
        self.model = model
        self.grid = grid
        self.kpath = kpath
        self.emitters = emitters
        self.numeric = numeric
        self.output = output

    def resolved(self) -> dict:
        out = {"command": self.command, "model": self.model,
               "numeric": self.numeric, "output": self.output}
        if self.grid:
            out["grid"] = self.grid
        if self.kpath:
            out["kpath"] = self.kpath
        if self.emitters:
            out["emitters"] = self.emitters
        return out


def parse_config(text: str) -> RunConfig:
    """Parse and validate a JSON config document; resolve all defaults."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise SchemaError(f"config is not valid JSON: {e}") from None
    if not isinstance(doc, dict):
        raise SchemaError("config root must be an object")
    _reject_unknown("", doc, {"command", "model", "grid", "kpath",
                              "emitters", "numeric", "output"})

    command = doc.get("command")
    if command not in COMMANDS:
        raise SchemaError(f"command must be one of {COMMANDS}, got {command!r}")

    model_doc = doc.get("model")
    if not isinstance(model_doc, dict):
        raise SchemaError("model section is required")
    _reject_unknown("model", model_doc, _MODEL_KEYS)
    is_array = (command == "array-bands"
                or ("variant" not in model_doc
                    and ("d" in model_doc or "beta" in model_doc)))
    if is_array:
        model = {
            "d": float(model_doc.get("d", 0.15)),
            "beta": float(model_doc.get("beta", 1.0)),
            "lambda_a": float(model_doc.get("lambda_a", 1.0)),
            "Gamma_a": float(model_doc.get("Gamma_a", 1.0)),
        }
        _require(model["d"] > 0, f"model.d must be positive, got {model['d']}")
        _require(model["beta"] > 0, f"model.beta must be positive, got {model['beta']}")
    else:
        variant = model_doc.get("variant", ANISOTROPIC)
        if variant not in (ANISOTROPIC, MIZOGUCHI):
            raise SchemaError(f"model.variant must be {ANISOTROPIC} or {MIZOGUCHI}")
        model = {
            "variant": variant,
            "J1": float(model_doc.get("J1", 1.0)),
            "J2": float(model_doc.get("J2", 0.0)),
            "beta1": float(model_doc.get("beta1", 1.0)),
            "beta2": float(model_doc.get("beta2", 1.0)),
        }
        _require(model["J1"] > 0, f"model.J1 must be positive, got {model['J1']}")
        _require(model["beta1"] > 0, f"model.beta1 must be positive, got {model['beta1']}")
        if variant == MIZOGUCHI and (model["beta1"] != 1.0 or model["beta2"] != 1.0):
            raise SchemaError("model.beta1/beta2 must be absent or 1 for Mizoguchi")

    grid = None
    if "grid" in doc:
        _reject_unknown("grid", doc["grid"], _GRID_KEYS)
        grid = {"N1": int(doc["grid"].get("N1", 512)),
                "N2": int(doc["grid"].get("N2", 512))}
    elif not is_array:
        grid = {"N1": 512, "N2": 512}
    if grid:
        _require(grid["N1"] >= 1 and grid["N2"] >= 1,
                 f"grid sizes must be >= 1, got {grid}")

    kpath = None
    if "kpath" in doc:
        _reject_unknown("kpath", doc["kpath"], _KPATH_KEYS)
        kpath = dict(doc["kpath"])
        kpath.setdefault("samples_per_segment", 40)
        _require(int(kpath["samples_per_segment"]) >= 2,
                 "kpath.samples_per_segment must be >= 2")
    elif command == "array-bands":
        kpath = {"points": "G K M G", "samples_per_segment": 40}
    elif command == "bands":
        kpath = {"waypoints": [[0.0, 0.0], [2.0943951023931953, -2.0943951023931953],
                               [3.141592653589793, 0.0], [0.0, 0.0]],
                 "samples_per_segment": 40}

    emitters = None
    if "emitters" in doc:
        _reject_unknown("emitters", doc["emitters"], _EMITTER_KEYS)
        e = doc["emitters"]
        emitters = {
            "positions": [[int(p[0]), int(p[1]), str(p[2])]
                          for p in e.get("positions", [[0, 0, "A"]])],
            "delta": float(e.get("delta", 0.0)),
            "g": float(e.get("g", 0.1)),
        }
        _require(emitters["g"] >= 0, f"emitters.g must be >= 0, got {emitters['g']}")
        for p in emitters["positions"]:
            if p[2] not in ("A", "B"):
                raise RangeError(f"emitters.positions sublattice must be A or B, got {p[2]}")
    elif command in ("dynamics", "radiation"):
        emitters = {"positions": [[0, 0, "A"]], "delta": 0.0, "g": 0.1}

    numeric = dict(NUMERIC_DEFAULTS)
    if "numeric" in doc:
        _reject_unknown("numeric", doc["numeric"], _NUMERIC_KEYS)
        numeric.update(doc["numeric"])
    _require(int(numeric["n_bins"]) >= 2, "numeric.n_bins must be >= 2")
    _require(int(numeric["cutoff_shells"]) >= 8, "numeric.cutoff_shells must be >= 8")
    if numeric["dt"] is not None:
        _require(float(numeric["dt"]) > 0, "numeric.dt must be positive")
    _require(numeric["sublattice"] in ("A", "B"), "numeric.sublattice must be A or B")

    output = {"directory": ".", "format": "csv"}
    if "output" in doc:
        _reject_unknown("output", doc["output"], _OUTPUT_KEYS)
        output.update(doc["output"])
    if output["format"] != "csv":
        raise SchemaError(f"output.format must be 'csv', got {output['format']!r}")

    return RunConfig(command, model, grid, kpath, emitters, numeric, output)


def _lattice_model(cfg: RunConfig) -> LatticeModel:
    m = cfg.model
    return LatticeModel(variant=m["variant"], J1=m["J1"], J2=m["J2"],
                        beta1=m["beta1"], beta2=m["beta2"])


def _array_model(cfg: RunConfig) -> atomarray.ArrayModel:
    m = cfg.model
    return atomarray.ArrayModel(d=m["d"], beta=m["beta"],
                                lambda_a=m["lambda_a"], Gamma_a=m["Gamma_a"])


def _band_grid(cfg: RunConfig) -> spectral.BandGrid:
    return spectral.BandGrid(_lattice_model(cfg), cfg.grid["N1"], cfg.grid["N2"])


def _csv(files: dict, name: str, header, rows):
    """Stage one CSV table; files are written only after the command succeeds."""
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(x) if isinstance(x, float) else str(x)
                              for x in row))
    files[name] = "\n".join(lines) + "\n"


def _walk_segments(waypoints, per_segment):
    pts = []
    wp = [np.asarray(w, dtype=float) for w in waypoints]
    for a, b in zip(wp[:-1], wp[1:]):
        for t in np.linspace(0.0, 1.0, per_segment, endpoint=False):
            pts.append(a + (b - a) * t)
    pts.append(wp[-1])
    return pts


def _run_bands(cfg, files, diag):
    model = _lattice_model(cfg)
    from .lattice import pauli_components
    pts = _walk_segments(cfg.kpath["waypoints"],
                         int(cfg.kpath["samples_per_segment"]))
    rows = []
    for i, k in enumerate(pts):
        hI, hx, hy, hz = pauli_components(model, k[0], k[1])
        w = float(np.sqrt(hx * hx + hy * hy + hz * hz))
        rows.append((i, float(k[0]), float(k[1]), float(hI) - w, float(hI) + w))
    _csv(files, "bands.csv",
         ["index", "k1", "k2", "omega_l_over_J1", "omega_u_over_J1"], rows)


def _run_dos(cfg, files, diag):
    grid = _band_grid(cfg)
    hist = spectral.density_of_states(grid, int(cfg.numeric["n_bins"]))
    rows = [(float(c), float(v)) for c, v in zip(hist.centers, hist.counts)]
    _csv(files, "dos.csv", ["E_over_J1", "D"], rows)
    diag["normalization"] = 2.0
    diag["zero_modes_on_grid"] = grid.n_zero_modes


def _run_selfenergy(cfg, files, diag):
    grid = _band_grid(cfg)
    g = cfg.emitters["g"] if cfg.emitters else 0.1
    es = np.linspace(float(cfg.numeric["e_min"]), float(cfg.numeric["e_max"]),
                     int(cfg.numeric["n_points"]))
    eta = float(cfg.numeric["eta"])
    rows = []
    for e in es:
        s = spectral.self_energy(grid, complex(e, eta), g,
                                 cfg.numeric["sublattice"])
        rows.append((float(e), s.real, s.imag))
    _csv(files, "selfenergy.csv",
         ["E_over_J1", "re_sigma_over_J1", "im_sigma_over_J1"], rows)
    diag["eta"] = eta


def _run_boundstate(cfg, files, diag):
    grid = _band_grid(cfg)
    e = cfg.emitters or {"delta": 0.0, "g": 0.1}
    if cfg.numeric["E_BS"] is not None:
        ebs = float(cfg.numeric["E_BS"])
    else:
        ebs = spectral.bound_state_energy(grid, e["delta"], e["g"])
    eta = float(cfg.numeric["eta"])
    bs = spectral.bound_state_wavefunction(grid, ebs, cfg.numeric["sublattice"],
                                           e["g"], eta=eta)
    rows = []
    for i in range(grid.N1):
        for j in range(grid.N2):
            rows.append((i, j, float(np.abs(bs.C_a[i, j])),
                         float(np.abs(bs.C_b[i, j]))))
    _csv(files, "boundstate.csv", ["n1", "n2", "abs_C_a", "abs_C_b"], rows)
    diag["E_BS_over_J1"] = ebs
    diag["R0"] = bs.R0


def _dynamics_record(cfg):
    grid = _band_grid(cfg)
    e = cfg.emitters
    emit = dynamics.EmitterConfig(
        positions=tuple((p[0], p[1], p[2]) for p in e["positions"]),
        delta=e["delta"], g=e["g"])
    dt = cfg.numeric["dt"]
    return grid, dynamics.evolve(
        grid, emit, float(cfg.numeric["t_max"]),
        dt=None if dt is None else float(dt),
        snapshot_times=list(cfg.numeric["snapshot_times"]),
        initial=str(cfg.numeric["initial"]))


def _run_dynamics(cfg, files, diag):
    _, rec = _dynamics_record(cfg)
    n_e = rec.C_e.shape[1]
    header = ["t_J1"]
    for j in range(n_e):
        header += [f"re_Ce_{j}", f"im_Ce_{j}", f"pop_{j}"]
    rows = []
    for i, t in enumerate(rec.times):
        row = [float(t)]
        for j in range(n_e):
            c = rec.C_e[i, j]
            row += [float(c.real), float(c.imag), float(abs(c) ** 2)]
        rows.append(tuple(row))
    _csv(files, "emitter.csv", header, rows)
    diag["norm_drift"] = rec.norm_drift


def _run_radiation(cfg, files, diag):
    if not cfg.numeric["snapshot_times"]:
        raise RangeError("numeric.snapshot_times must be non-empty for radiation")
    grid, rec = _dynamics_record(cfg)
    p1 = np.fft.fftfreq(grid.N1, 1.0 / grid.N1).astype(int)
    p2 = np.fft.fftfreq(grid.N2, 1.0 / grid.N2).astype(int)
    for idx, (t, Ca, Cb) in enumerate(rec.snapshots):
        rows = []
        Ia, Ib = np.abs(Ca) ** 2, np.abs(Cb) ** 2
        for i in range(grid.N1):
            for j in range(grid.N2):
                rows.append((int(p1[i]), int(p2[j]),
                             float(Ia[i, j]), float(Ib[i, j])))
        _csv(files, f"snapshot_{idx}.csv",
             ["n1", "n2", "pop_a", "pop_b"], rows)
        diag.setdefault("snapshot_times", []).append(float(t))
    diag["norm_drift"] = rec.norm_drift


def _run_array_bands(cfg, files, diag):
    model = _array_model(cfg)
    path, labels = atomarray.high_symmetry_path(
        model, cfg.kpath.get("points", "G K M G"),
        int(cfg.kpath["samples_per_segment"]))
    pts = atomarray.array_band_structure(
        model, path, int(cfg.numeric["cutoff_shells"]),
        certify_every=int(cfg.numeric["certify_every"]))
    rows = []
    for p in pts:
        for b in range(6):
            rows.append((p.k[0], p.k[1], b, float(p.omegas[b]),
                         float(p.gammas[b]), float(p.polarization_weights[b, 0])))
    _csv(files, "bands.csv",
         ["kx", "ky", "band", "omega_over_Gamma", "gamma_over_Gamma", "z_weight"],
         rows)
    diag["path_labels"] = [[int(i), str(nm)] for i, nm in labels]
    diag["cutoff_shells"] = int(cfg.numeric["cutoff_shells"])


def _run_classify(cfg, files, diag):
    numeric = cfg.numeric
    if "variant" in cfg.model:
        model = _lattice_model(cfg)
        pair = atomarray.lattice_band_pair(model)
        from .lattice import dirac_points
        if numeric["k_star"] is not None:
            k_star = np.asarray(numeric["k_star"], dtype=float)
        else:
            pts = dirac_points(model)
            if not pts:
                raise RangeError("no touching point; provide numeric.k_star")
            k_star = np.asarray(pts[0])
        d1 = np.array([1.0, 1.0]) / np.sqrt(2)
        d2 = np.array([1.0, -1.0]) / np.sqrt(2)
        window = float(numeric["window"])
    else:
        model = _array_model(cfg)
        shells = int(numeric["cutoff_shells"])
        sector = numeric["sector"]
        if numeric["k_star"] is None:
            raise RangeError("numeric.k_star is required for array models")
        k_star = np.asarray(numeric["k_star"], dtype=float)
        idx = [2, 5] if sector == "out-of-plane" else [0, 1, 3, 4]
        take = (0, 1) if sector == "out-of-plane" else (2, 3)

        def pair(k):
            M = atomarray.bloch_matrix(model, k, shells)
            w = np.sort(np.linalg.eigvals(M[np.ix_(idx, idx)]).real)
            return float(w[take[0]]), float(w[take[1]])

        d1 = np.array([1.0, 0.0])
        d2 = np.array([0.0, 1.0])
        window = float(numeric["window"]) * np.linalg.norm(
            model.special_points()["M"]) * 2.0
    report = atomarray.classify_crossing(pair, k_star, d1, d2, window)
    _csv(files, "classify.csv",
         ["kind", "exponent_1", "exponent_2", "tilt_ratio", "gap_at_kstar"],
         [(report.kind.value, float(report.exponents[0]),
           float(report.exponents[1]), float(report.tilt_ratio),
           float(report.gap_at_kstar))])
    diag["kind"] = report.kind.value


_RUNNERS = {
    "bands": _run_bands, "dos": _run_dos, "selfenergy": _run_selfenergy,
    "boundstate": _run_boundstate, "dynamics": _run_dynamics,
    "radiation": _run_radiation, "array-bands": _run_array_bands,
    "classify": _run_classify,
}


def run(config: RunConfig, out_dir=None) -> int:
    """Execute a validated config; write artifacts + manifest; return exit code."""
    outdir = Path(out_dir or config.output["directory"])
    outdir.mkdir(parents=True, exist_ok=True)
    resolved = config.resolved()
    cfg_text = json.dumps(resolved, sort_keys=True)
    manifest = {
        "command": config.command,
        "config_sha256": hashlib.sha256(cfg_text.encode()).hexdigest(),
    }
    (outdir / "resolved_config.json").write_text(
        json.dumps(resolved, sort_keys=True, indent=1) + "\n")
    diag = {}
    files = {}
    t0 = time.perf_counter()
    try:
        _RUNNERS[config.command](config, files, diag)
    except (SchemaError, RangeError) as e:
        manifest.update(status="error", error=str(e))
        _write_manifest(outdir, manifest)
        print(f"error: {e}", file=sys.stderr)
        return 2
    except ConvergenceError as e:
        manifest.update(status="error", error=str(e))
        _write_manifest(outdir, manifest)
        print(f"error: {e}", file=sys.stderr)
        return 3
    except (DiracBathError, FloatingPointError, np.linalg.LinAlgError) as e:
        manifest.update(status="error", error=str(e))
        _write_manifest(outdir, manifest)
        print(f"error: {e}", file=sys.stderr)
        return 4
    for name, text in files.items():
        (outdir / name).write_text(text)
    manifest.update(status="ok", wall_time_s=time.perf_counter() - t0,
                    diagnostics=diag)
    _write_manifest(outdir, manifest)
    return 0


def _write_manifest(outdir, manifest):
    (outdir / "manifest.json").write_text(
        json.dumps(manifest, sort_keys=True, indent=1) + "\n")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="diracbath",
        description="Emitters in anisotropic/tilted Dirac photonic lattices")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, help="JSON config file")
    parser.add_argument("--out", default=None, help="output directory")
    parser.add_argument("--threads", type=int, default=None,
                        help="cap worker threads (results are unchanged)")
    args = parser.parse_args(argv)

    if args.threads is not None:
        try:
            from threadpoolctl import threadpool_limits
            threadpool_limits(args.threads)
        except ImportError:
            pass  # kernels are serial; the cap is advisory

    try:
        config = parse_config(Path(args.config).read_text())
    except (SchemaError, RangeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    if config.command != args.command:
        print(f"error: config command {config.command!r} does not match "
              f"CLI command {args.command!r}", file=sys.stderr)
        return 2
    return run(config, args.out)


if __name__ == "__main__":
    sys.exit(main())
