"""Command-line entry point and scenario orchestration.

Subcommands: selftest | stationary | evolve | fit | compare-profile |
scenario. Runs are parameterized by a JSON config file (or a named
preset); every output directory receives a manifest with the config echo,
its hash, and the package version, sufficient to re-run the scenario.
The output root can be overridden with the DS1_OUT environment variable.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, fourier
from .evolution import (
    EvolutionConfig,
    EvolutionRecord,
    evolve,
    read_checkpoint,
    read_record_csv,
)
from .fitting import (
    Classification,
    FitError,
    NormKind,
    UndeterminedError,
    classify,
    compare_profile,
    compare_rate_laws,
    fit_blowup,
)
from .grid import (
    ComplexField,
    RealField,
    Representation,
    fft2_scaled,
    inverse,
    make_grid,
    refine_peak,
    to_real,
    trig_interpolate,
)
from .operators import Axis, antiderivative_raw, apply_B, erf_eval
from .reference import (
    InitialDataKind,
    InitialDataSpec,
    build_initial_data,
    dromion2_b_exact,
    dromion2_squared,
    dromion_radiating,
)
from .snapshot import read_snapshot, write_snapshot
from .stationary import NewtonConfig, localization_fit, newton_solve


# -- configuration ------------------------------------------------------------------

@dataclass(frozen=True)
class TwoPhaseConfig:
    enabled: bool = False
    phase1_fraction: float = 0.9  # restart point as a fraction of the estimated t*
    refine_factor: int = 10  # phase-2 time-step refinement
    overshoot: float = 1.1  # phase-2 horizon as a multiple of the estimated t*


@dataclass(frozen=True)
class RunConfig:
    scenario: str
    n_xi: int
    n_eta: int
    l_xi: float
    l_eta: float
    initial: InitialDataSpec
    evolution: EvolutionConfig | None = None
    newton: NewtonConfig = field(default_factory=NewtonConfig)
    two_phase: TwoPhaseConfig = field(default_factory=TwoPhaseConfig)
    out_dir: str = "runs"

    def grid(self):
        return make_grid(self.n_xi, self.n_eta, self.l_xi, self.l_eta)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["initial"]["kind"] = self.initial.kind.value
        return d

    @staticmethod
    def from_dict(d: dict) -> "RunConfig":
        d = dict(d)
        init = dict(d.pop("initial"))
        init["kind"] = InitialDataKind(init["kind"])
        ev = d.pop("evolution", None)
        if ev is not None:
            ev = dict(ev)
            ev["snapshot_times"] = tuple(ev.get("snapshot_times", ()))
            ev = EvolutionConfig(**ev)
        nw = NewtonConfig(**d.pop("newton", {}))
        tp = TwoPhaseConfig(**d.pop("two_phase", {}))
        return RunConfig(initial=InitialDataSpec(**init), evolution=ev, newton=nw, two_phase=tp, **d)

    def canonical_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    @property
    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()


def load_config(path: str | Path) -> RunConfig:
    return RunConfig.from_dict(json.loads(Path(path).read_text()))


def save_config(cfg: RunConfig, path: str | Path) -> None:
    Path(path).write_text(json.dumps(cfg.to_dict(), sort_keys=True, indent=2) + "\n")


def resolve_out_dir(cfg: RunConfig, override: str | None) -> Path:
    root = override or os.environ.get("DS1_OUT") or cfg.out_dir
    return Path(root) / cfg.scenario


def write_manifest(out: Path, cfg: RunConfig, extra: dict) -> None:
    manifest = {
        "scenario": cfg.scenario,
        "config": cfg.to_dict(),
        "config_hash": cfg.config_hash,
        "version": __version__,
        "fft_backend": fourier.BACKEND,
        "fft_workers": fourier.WORKERS,
    }
    manifest.update(extra)
    (out / "manifest.json").write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n")


# -- presets --------------------------------------------------------------------------

def _paper_grid_20() -> dict:
    return dict(n_xi=1024, n_eta=1024, l_xi=20.0, l_eta=20.0)


def _paper_grid_10() -> dict:
    return dict(n_xi=1024, n_eta=1024, l_xi=10.0, l_eta=10.0)


def make_presets() -> dict[str, RunConfig]:
    """All scenario presets from the studied parameter set."""
    ids = InitialDataSpec
    k = InitialDataKind
    presets = {
        "selftest": RunConfig(
            scenario="selftest", n_xi=512, n_eta=512, l_xi=10.0, l_eta=10.0,
            initial=ids(k.GAUSSIAN, 1.0),
        ),
        "stationary": RunConfig(
            scenario="stationary", **_paper_grid_20(),
            initial=ids(k.SCALED_DROMION_RADIATING, 6.0),
        ),
        "qorbit": RunConfig(
            scenario="qorbit", **_paper_grid_20(),
            initial=ids(k.MU_TIMES_Q, 1.0),
            evolution=EvolutionConfig(
                t_max=1.0, n_steps=1000, record_every=1,
                snapshot_times=tuple(np.linspace(0.1, 1.0, 10)),
            ),
        ),
        "drom09": RunConfig(
            scenario="drom09", **_paper_grid_20(),
            initial=ids(k.MU_TIMES_Q, 0.9),
            evolution=EvolutionConfig(t_max=5.0, n_steps=5000, record_every=1,
                                      snapshot_times=(5.0,)),
        ),
        "dromgauss": RunConfig(
            scenario="dromgauss", **_paper_grid_20(),
            initial=ids(k.Q_MINUS_GAUSSIAN, 0.1),
            evolution=EvolutionConfig(t_max=5.0, n_steps=5000, record_every=1,
                                      snapshot_times=(5.0,)),
        ),
        "gauss3": RunConfig(
            scenario="gauss3", **_paper_grid_10(),
            initial=ids(k.GAUSSIAN, 3.0),
            evolution=EvolutionConfig(t_max=1.0, n_steps=1000, record_every=1,
                                      snapshot_times=(1.0,)),
        ),
        "gauss45": RunConfig(
            scenario="gauss45", **_paper_grid_10(),
            initial=ids(k.GAUSSIAN, 4.5),
            evolution=EvolutionConfig(t_max=0.3, n_steps=3000, record_every=1,
                                      checkpoint_every=100),
            two_phase=TwoPhaseConfig(enabled=True, refine_factor=10, overshoot=1.1),
        ),
        "drom11": RunConfig(
            scenario="drom11", n_xi=4096, n_eta=4096, l_xi=20.0, l_eta=20.0,
            initial=ids(k.MU_TIMES_Q, 1.1),
            evolution=EvolutionConfig(t_max=1.5, n_steps=15000, record_every=1,
                                      checkpoint_every=500),
            two_phase=TwoPhaseConfig(enabled=True, refine_factor=10, overshoot=1.05),
        ),
        # reduced fast gate for the 1.1Q blow-up: same physics, smaller domain,
        # 2^10 modes; exponent tolerance is widened accordingly in acceptance
        "drom11_ci": RunConfig(
            scenario="drom11_ci", **_paper_grid_10(),
            initial=ids(k.MU_TIMES_Q, 1.1),
            evolution=EvolutionConfig(t_max=1.5, n_steps=7500, record_every=1,
                                      checkpoint_every=250),
            two_phase=TwoPhaseConfig(enabled=True, refine_factor=10, overshoot=1.05),
        ),
    }
    return presets


PRESETS = make_presets()


# -- shared pieces ----------------------------------------------------------------------

def _progress(label: str):
    state = {"last": 0.0}

    def cb(n, total):
        now = time.monotonic()
        if now - state["last"] > 30.0 or n == total:
            state["last"] = now
            print(f"  [{label}] step {n}/{total}", flush=True)

    return cb


def solve_stationary(cfg: RunConfig, out: Path, quiet: bool = False) -> tuple[RealField, dict]:
    """Newton-solve Q on the run grid; write snapshot and manifest data."""
    grid = cfg.grid()
    q0 = RealField(grid, 6.0 * dromion_radiating(grid).values)
    t0 = time.monotonic()
    result = newton_solve(q0, 1.0, cfg.newton)
    slope, slope_resid = localization_fit(result.Q)
    sym = float(np.max(np.abs(result.Q.values - result.Q.values.T))) if grid.n_xi == grid.n_eta else None
    info = {
        "M_Q": result.mass,
        "residual": result.residual_history[-1],
        "residual_history": result.residual_history,
        "gmres_iterations": result.gmres_iterations,
        "tail_defect": result.tail_defect,
        "max_Q": float(result.Q.values.max()),
        "symmetry_defect": sym,
        "localization_slope": slope,
        "localization_fit_residual": slope_resid,
        "solve_seconds": time.monotonic() - t0,
    }
    out.mkdir(parents=True, exist_ok=True)
    write_snapshot(out / "Q.ds1f", result.Q.as_complex(), 0.0)
    if not quiet:
        print(f"  M_Q={result.mass:.8f} residual={info['residual']:.2e} "
              f"sym={sym if sym is None else f'{sym:.1e}'} slope={slope:.3f}")
    return result.Q, info


def load_q(path: Path) -> RealField:
    f, _t = read_snapshot(path)
    if f.representation is Representation.FOURIER:
        f = inverse(f)
    return to_real(f)


def estimate_t_star(record: EvolutionRecord) -> float:
    """Blow-up time estimate from a coarse run (sup-norm fit, abort-time fallback)."""
    try:
        return fit_blowup(record, NormKind.LINF_PSI).t_star
    except (FitError, ValueError):
        return record.times[-1] / 0.9


def run_two_phase(
    cfg: RunConfig, psi0: ComplexField, out: Path, quiet: bool = False
) -> tuple[EvolutionRecord, Path]:
    """Coarse run to the loss of accuracy, then a refined run from a
    checkpoint near 0.9 of the estimated blow-up time, integrating past it.

    Returns the phase-2 record and its directory (the fit input).
    """
    ev = cfg.evolution
    p1 = out / "phase1"
    rec1 = evolve(psi0, ev, out_dir=p1, config_hash=cfg.config_hash,
                  progress=None if quiet else _progress("phase1"))
    t_star = estimate_t_star(rec1)
    if not quiet:
        print(f"  phase1: termination={rec1.termination.value} at t={rec1.times[-1]:.4f}, "
              f"t* estimate {t_star:.4f}")

    target = cfg.two_phase.phase1_fraction * t_star
    ckpts = sorted(p1.glob("checkpoint_*.ds1f"))
    if not ckpts:
        raise RuntimeError("two-phase run requires checkpoint_every in the evolution config")
    best = None
    for path in ckpts:
        ck = read_checkpoint(path)
        if best is None or abs(ck.time - target) < abs(best.time - target):
            best = ck
    if not quiet:
        print(f"  phase2 from checkpoint t={best.time:.4f} (target {target:.4f})")

    dt2 = ev.dt / cfg.two_phase.refine_factor
    t_end = cfg.two_phase.overshoot * t_star
    n2 = max(int(round((t_end - best.time) / dt2)), 100)
    ev2 = EvolutionConfig(
        t_max=best.time + n2 * dt2,
        n_steps=n2,
        record_every=ev.record_every,
        snapshot_times=(),
        delta_abort=ev.delta_abort,
        checkpoint_every=None,
        t_start=best.time,
    )
    p2 = out / "phase2"
    state = ComplexField(best.grid, Representation.FOURIER, best.u_hat)
    rec2 = evolve(state, ev2, out_dir=p2, config_hash=cfg.config_hash,
                  progress=None if quiet else _progress("phase2"))
    if not quiet:
        print(f"  phase2: termination={rec2.termination.value} at t={rec2.times[-1]:.4f}")
    return rec2, p2


def fit_record(record: EvolutionRecord, out: Path | None = None) -> dict:
    """Classification plus blow-up fits (when applicable), JSON-ready."""
    try:
        cls = classify(record)
    except UndeterminedError as exc:
        return {"classification": "undetermined", "detail": str(exc)}
    result = {"classification": cls.value}
    if cls is Classification.BLOW_UP_SUSPECTED:
        for kind, name in ((NormKind.LINF_PSI, "linf"), (NormKind.L2_GRAD_XI, "grad")):
            report = fit_blowup(record, kind)
            result[name] = report.as_dict()
        t_star = result["linf"]["t_star"]
        t = np.asarray(record.times)
        keep = np.asarray(record.delta) <= -3.0
        result["rate_law"] = compare_rate_laws(
            t[keep], np.asarray(record.linf_psi)[keep], t_star
        )
    if out is not None:
        (out / "fits.json").write_text(json.dumps(result, sort_keys=True, indent=2) + "\n")
    return result


def profile_against_q(snapshot_path: Path, q_path: Path, out: Path | None = None) -> dict:
    """Profile comparison of a near-blow-up snapshot with the rescaled Q."""
    f, t_snap = read_snapshot(snapshot_path)
    if f.representation is Representation.FOURIER:
        f = inverse(f)
    q = load_q(q_path)
    comp = compare_profile(f, q)
    result = comp.as_dict()
    result["time"] = t_snap
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        (out / "profile.json").write_text(json.dumps(result, sort_keys=True, indent=2) + "\n")
        # residual field for figure rendering
        g = f.grid
        absv = np.abs(f.values)
        xi0, eta0 = refine_peak(g, absv)
        coeffs = fft2_scaled(q.grid, q.values.astype(np.complex128))
        scaled = trig_interpolate(
            q.grid, coeffs, (g.xi - xi0) / comp.L, (g.eta - eta0) / comp.L
        ).real / comp.L
        resid = ComplexField(g, Representation.PHYSICAL, (absv - scaled).astype(np.complex128))
        write_snapshot(out / "profile_residual.ds1f", resid, t_snap)
    return result


# -- commands -----------------------------------------------------------------------------

def cmd_selftest(args) -> int:
    """Operator accuracy battery: the two 1D antiderivative tests and the 2D
    nonlocal-operator test, each against closed forms."""
    import warnings

    warnings.simplefilter("ignore")
    n = args.n
    rows = []

    g1 = make_grid(n, 8, 10.0, 1.0)
    xi = g1.xi
    f = np.exp(-((xi + 1.0) ** 2))[:, None] * np.ones((1, 8))
    got = antiderivative_raw(g1, f.astype(complex), Axis.XI, check=False).real
    exact = (np.sqrt(np.pi) / 2.0) * erf_eval(xi + 1.0)
    rows.append(("gaussian -> erf", float(np.max(np.abs(got - exact[:, None])))))

    f2 = (np.sinh(xi + 1.0) / np.cosh(xi + 1.0) ** 2)[:, None] * np.ones((1, 8))
    got2 = antiderivative_raw(g1, f2.astype(complex), Axis.XI, check=False).real
    exact2 = -1.0 / np.cosh(xi + 1.0)
    rows.append(("sinh/cosh^2 -> -sech", float(np.max(np.abs(got2 - exact2[:, None])))))

    g2 = make_grid(n, n, 10.0, 10.0)
    bf = apply_B(dromion2_squared(g2))
    rows.append(("B on dromion2", float(np.max(np.abs(bf.values - dromion2_b_exact(g2).values)))))

    status = 0
    for name, err in rows:
        ok = err <= 1e-13
        status |= 0 if ok else 1
        print(f"{'PASS' if ok else 'FAIL'}  {name:24s} max error {err:.3e}")
    return status


def _config_from_args(args) -> RunConfig:
    if args.config:
        cfg = load_config(args.config)
    elif args.preset:
        if args.preset not in PRESETS:
            print(f"unknown preset {args.preset!r}; available: {', '.join(sorted(PRESETS))}",
                  file=sys.stderr)
            raise SystemExit(2)
        cfg = PRESETS[args.preset]
    else:
        print("one of --config or --preset is required", file=sys.stderr)
        raise SystemExit(2)
    return cfg


def cmd_stationary(args) -> int:
    cfg = _config_from_args(args)
    out = resolve_out_dir(cfg, args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_config(cfg, out / "config.json")
    _, info = solve_stationary(cfg, out)
    write_manifest(out, cfg, {"stationary": info})
    return 0


def _initial_state(cfg: RunConfig, out: Path, quiet: bool = False) -> ComplexField:
    grid = cfg.grid()
    q = None
    if cfg.initial.kind in (InitialDataKind.MU_TIMES_Q, InitialDataKind.Q_MINUS_GAUSSIAN):
        q_path = out / "Q.ds1f"
        if q_path.exists():
            q = load_q(q_path)
        else:
            q, info = solve_stationary(cfg, out, quiet=quiet)
            write_manifest(out, cfg, {"stationary": info})
    return build_initial_data(cfg.initial, grid, q)


def cmd_evolve(args) -> int:
    cfg = _config_from_args(args)
    if cfg.evolution is None:
        print("config has no evolution section", file=sys.stderr)
        return 2
    out = resolve_out_dir(cfg, args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_config(cfg, out / "config.json")

    if args.resume:
        ckpts = sorted(out.glob("checkpoint_*.ds1f"))
        if not ckpts:
            print("no checkpoint to resume from", file=sys.stderr)
            return 1
        ck = read_checkpoint(ckpts[-1])
        record = evolve(None, cfg.evolution, out_dir=out, config_hash=cfg.config_hash,
                        resume_from=ck, progress=_progress(cfg.scenario))
    else:
        psi0 = _initial_state(cfg, out)
        record = evolve(psi0, cfg.evolution, out_dir=out, config_hash=cfg.config_hash,
                        progress=_progress(cfg.scenario))
    write_manifest(out, cfg, {"termination": record.termination.value,
                              "t_final": record.times[-1]})
    print(f"termination={record.termination.value} t={record.times[-1]:.5f}")
    return 0


def cmd_fit(args) -> int:
    record = read_record_csv(args.record)
    out = Path(args.record).parent
    result = fit_record(record, out)
    print(json.dumps(result, sort_keys=True, indent=2))
    return 0 if result.get("classification") != "undetermined" else 1


def cmd_compare_profile(args) -> int:
    out = Path(args.snapshot).parent
    result = profile_against_q(Path(args.snapshot), Path(args.q), out)
    print(json.dumps(result, sort_keys=True, indent=2))
    return 0


def run_scenario(name: str, out_root: str | None = None, quiet: bool = False) -> dict:
    """End-to-end execution of a named preset; returns the summary dict."""
    if name not in PRESETS:
        raise ValueError(f"unknown scenario {name!r}; available: {', '.join(sorted(PRESETS))}")
    cfg = PRESETS[name]
    out = resolve_out_dir(cfg, out_root)
    out.mkdir(parents=True, exist_ok=True)
    save_config(cfg, out / "config.json")
    summary: dict = {"scenario": name}

    if name == "selftest":
        ns = argparse.Namespace(n=512)
        summary["selftest_status"] = cmd_selftest(ns)
        write_manifest(out, cfg, summary)
        return summary

    if name == "stationary":
        _, info = solve_stationary(cfg, out, quiet=quiet)
        summary["stationary"] = info
        write_manifest(out, cfg, summary)
        return summary

    psi0 = _initial_state(cfg, out, quiet=quiet)

    if cfg.two_phase.enabled:
        record, fit_dir = run_two_phase(cfg, psi0, out, quiet=quiet)
    else:
        record = evolve(psi0, cfg.evolution, out_dir=out, config_hash=cfg.config_hash,
                        progress=None if quiet else _progress(name))
        fit_dir = out
    summary["termination"] = record.termination.value
    summary["t_final"] = record.times[-1]

    fits = fit_record(record, fit_dir)
    summary["fits"] = fits

    if fits.get("classification") == Classification.BLOW_UP_SUSPECTED.value:
        last_good = fit_dir / "last_good.ds1f"
        q_path = out / "Q.ds1f"
        if not q_path.exists():
            # Gaussian blow-up scenarios still compare against Q: solve it on demand
            _, info = solve_stationary(cfg, out, quiet=quiet)
            summary["stationary"] = info
        if last_good.exists():
            summary["profile"] = profile_against_q(last_good, q_path, fit_dir)

    if name == "qorbit":
        summary["orbit"] = _qorbit_errors(out, cfg)

    write_manifest(out, cfg, summary)
    return summary


def _qorbit_errors(out: Path, cfg: RunConfig) -> dict:
    """Orbit-accuracy table: snapshots versus Q e^{it}."""
    q = load_q(out / "Q.ds1f").values
    errs = {}
    for path in sorted(out.glob("snap_*.ds1f")):
        f, t = read_snapshot(path)
        if f.representation is Representation.FOURIER:
            f = inverse(f)
        errs[f"{t:.3f}"] = float(np.max(np.abs(f.values - q * np.exp(1j * t))))
    return {"max_error": max(errs.values()) if errs else None, "by_time": errs}


def cmd_scenario(args) -> int:
    names = args.names
    if args.jobs > 1 and len(names) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            futures = {pool.submit(run_scenario, n, args.out, True): n for n in names}
            status = 0
            for fut, n in futures.items():
                try:
                    summary = fut.result()
                    print(f"[{n}] done: {summary.get('termination', 'ok')}")
                except Exception as exc:  # noqa: BLE001
                    print(f"[{n}] FAILED: {exc}", file=sys.stderr)
                    status = 1
            return status
    status = 0
    for n in names:
        try:
            summary = run_scenario(n, args.out)
            print(f"[{n}] done")
        except Exception as exc:  # noqa: BLE001
            print(f"[{n}] FAILED: {exc}", file=sys.stderr)
            status = 1
    return status


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="ds1", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("selftest", help="operator accuracy battery")
    p.add_argument("--n", type=int, default=512, help="modes per direction (power of two)")
    p.set_defaults(func=cmd_selftest)

    for name, fn in (("stationary", cmd_stationary), ("evolve", cmd_evolve)):
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON config path")
        p.add_argument("--preset", help="named preset")
        p.add_argument("--out", help="output root (overrides config and DS1_OUT)")
        if name == "evolve":
            p.add_argument("--resume", action="store_true",
                           help="resume from the latest checkpoint in the output dir")
        p.set_defaults(func=fn)

    p = sub.add_parser("fit", help="classify a norms.csv record and fit blow-up exponents")
    p.add_argument("record", help="path to norms.csv")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("compare-profile", help="compare a snapshot against rescaled Q")
    p.add_argument("snapshot")
    p.add_argument("q", help="path to the Q snapshot")
    p.set_defaults(func=cmd_compare_profile)

    p = sub.add_parser("scenario", help="run named scenario presets end to end")
    p.add_argument("names", nargs="+", choices=sorted(PRESETS))
    p.add_argument("--out", help="output root")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_scenario)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
