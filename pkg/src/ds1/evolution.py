"""Time evolution of the spectrally discretized system.

After Fourier collocation the equation becomes the stiff split ODE system

    d/dt u = L u + N(u),   L = -2 i (k_xi^2 + k_eta^2),
    N(u) = i F[ B(|psi|^2) psi ],   psi = F^{-1} u,

with diagonal L. Steps are taken with a fourth-order exponential
integrator (ETDRK4): the diagonal linear flow is applied exactly through
exp(L dt), the nonlinearity through the standard four-stage phi-function
combination. Coefficients use the phi_k power series below |z| = 1/2 and
the closed forms elsewhere.

The integrator state lives in the raw FFT layout (no quadrature scale, no
center-origin phase); both factors cancel in every right-hand-side term,
and the package-convention coefficients are materialized only when a
snapshot or checkpoint is written. Accuracy is controlled by relative mass
conservation, Delta = log10|1 - m/m0|; runs abort once Delta exceeds the
configured threshold (default -3), the discard rule applied near blow-up.
"""

from __future__ import annotations

import enum
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import fourier
from .grid import (
    ComplexField,
    Representation,
    SpectralGrid,
    fft2_scaled,
    ifft2_scaled,
    quadrature,
)
from .operators import apply_b_real
from .snapshot import read_snapshot, write_snapshot


class Termination(enum.Enum):
    COMPLETED = "completed"
    DELTA_ABORT = "delta_abort"
    RESOLUTION_LOST = "resolution_lost"


@dataclass(frozen=True)
class EvolutionConfig:
    t_max: float
    n_steps: int
    record_every: int = 1
    snapshot_times: tuple[float, ...] = ()
    delta_abort: float = -3.0
    checkpoint_every: int | None = None
    t_start: float = 0.0  # phase-2 blow-up runs start from a checkpoint time
    # spectral-tail abort: near a collapse the core can fall through the grid
    # while the mass stays conserved, so the drift diagnostic alone reacts
    # too late; stop once the coefficient tail carries this fraction of the
    # peak (None disables)
    tail_abort: float | None = 1e-5

    def __post_init__(self) -> None:
        if self.t_max <= self.t_start:
            raise ValueError("t_max must exceed t_start")
        if self.n_steps < 1 or self.record_every < 1:
            raise ValueError("n_steps and record_every must be >= 1")
        if self.delta_abort >= 0:
            raise ValueError("delta_abort must be negative")
        object.__setattr__(self, "snapshot_times", tuple(self.snapshot_times))

    @property
    def dt(self) -> float:
        return (self.t_max - self.t_start) / self.n_steps


@dataclass
class EvolutionRecord:
    times: list[float] = field(default_factory=list)
    linf_psi: list[float] = field(default_factory=list)
    l2_psi_sq: list[float] = field(default_factory=list)
    l2_grad_xi: list[float] = field(default_factory=list)
    l2_grad_eta: list[float] = field(default_factory=list)
    energy: list[float] = field(default_factory=list)
    delta: list[float] = field(default_factory=list)
    snapshots: list[tuple[float, str]] = field(default_factory=list)
    termination: Termination = Termination.COMPLETED

    def as_arrays(self) -> dict[str, np.ndarray]:
        return {
            "t": np.asarray(self.times),
            "linf": np.asarray(self.linf_psi),
            "mass": np.asarray(self.l2_psi_sq),
            "l2gradxi": np.asarray(self.l2_grad_xi),
            "l2gradeta": np.asarray(self.l2_grad_eta),
            "energy": np.asarray(self.energy),
            "delta": np.asarray(self.delta),
        }


# -- right-hand side ------------------------------------------------------------

def linear_symbol(grid: SpectralGrid) -> np.ndarray:
    return -2j * grid.k2


def _nonlinear_native(grid: SpectralGrid, u: np.ndarray) -> np.ndarray:
    """F[B(|psi|^2) psi] in raw FFT layout (the i factor is folded into the
    integrator coefficients; rhs_split restores it for the public contract)."""
    psi = fourier.ifft2(u)
    w = psi.real**2 + psi.imag**2
    b = apply_b_real(grid, w)
    return fourier.fft2(b * psi)


def rhs_split(Psi_hat: ComplexField) -> tuple[np.ndarray, ComplexField]:
    """(diagonal linear symbol, nonlinear term N evaluated at Psi_hat)."""
    assert Psi_hat.representation is Representation.FOURIER
    g = Psi_hat.grid
    n_native = _nonlinear_native(g, Psi_hat.values * g.phase_inv)
    return linear_symbol(g), ComplexField(g, Representation.FOURIER, 1j * g.phase_fwd * n_native)


# -- conserved quantities --------------------------------------------------------

def mass(Psi: ComplexField) -> float:
    """Grid quadrature of |Psi|^2 (via Parseval for spectral input)."""
    g = Psi.grid
    if Psi.representation is Representation.PHYSICAL:
        v = Psi.values
        return float(quadrature(g, v.real**2 + v.imag**2))
    s = float(np.sum(np.abs(Psi.values) ** 2))
    return s / ((2.0 * np.pi) ** 2 * g.l_xi * g.l_eta)


def energy(Psi: ComplexField) -> float:
    """Conserved energy matching the trivial-boundary antiderivatives:

    integral |Psi_xi|^2 + |Psi_eta|^2
      + (1/4) (deta^{-1}|Psi|^2 dxi|Psi|^2 + dxi^{-1}|Psi|^2 deta|Psi|^2).
    """
    g = Psi.grid
    if Psi.representation is Representation.PHYSICAL:
        psi = Psi.values
        u = fft2_scaled(g, psi)
    else:
        u = Psi.values
        psi = ifft2_scaled(g, u)
    grad = float(np.sum(g.k2 * np.abs(u) ** 2)) / ((2.0 * np.pi) ** 2 * g.l_xi * g.l_eta)
    w = psi.real**2 + psi.imag**2
    wx, we, ax, ae = _energy_fields(g, w)
    cross = quadrature(g, ae * wx + ax * we)
    return grad + 0.25 * float(cross)


def _energy_fields(grid: SpectralGrid, w: np.ndarray):
    """(dxi w, deta w, dxi^{-1} w, deta^{-1} w) for real w via one rfft2."""
    from .operators import _b_kernel

    ker = _b_kernel(grid)
    wn = fourier.rfft2(w)
    shape = grid.shape
    wx = fourier.irfft2(ker.ik_xi[:, None] * wn, shape)
    we = fourier.irfft2(ker.ik_eta[None, :] * wn, shape)

    t = ker.inv_xi[:, None] * wn
    t -= ker.gauss_xi_p[:, None] * wn[0, :][None, :]
    t[0, :] = -fourier.rfft(grid.xi @ w)
    ax = fourier.irfft2(t, shape)
    ax += np.outer(ker.erf_xi_half, grid.h_xi * w.sum(axis=0))

    t = wn * ker.inv_eta[None, :]
    t -= wn[:, 0][:, None] * ker.gauss_eta_p[None, :]
    t[:, 0] = -fourier.fft(w @ grid.eta)
    ae = fourier.irfft2(t, shape)
    ae += np.outer(grid.h_eta * w.sum(axis=1), ker.erf_eta_half)
    return wx, we, ax, ae


# -- composite RK4 stepper ----------------------------------------------------------

SLOW_THRESHOLD = 1.0  # |L| dt below which a mode counts as slow


class CompositeRk4:
    """Fourth-order composite step for the stiff split system.

    Modes with |L| dt <= threshold ("slow", in practice everything carrying
    physical amplitude at sane step sizes) advance with the classical RK4
    applied to the full right-hand side L u + N(u); on the orbit of a
    stationary state the two terms nearly cancel, and full-RHS RK4 tracks
    the slow combined dynamics orders of magnitude more accurately than
    schemes that quadrature N against the stiff linear flow. The stiff tail
    (amplitudes at the resolution floor) advances with the integrating-
    factor RK4, whose exponential treatment of L is exact and unitary, so
    no CFL-type restriction arises. Both branches share the same four
    nonlinear stage evaluations, evaluated on blended stage states; the
    nonlinearity's i factor is folded into the stage coefficients.
    """

    def __init__(self, grid: SpectralGrid, dt: float, slow_threshold: float = SLOW_THRESHOLD):
        if dt <= 0:
            raise ValueError("dt must be positive")
        self.grid = grid
        self.dt = dt
        z = dt * linear_symbol(grid)
        slow = (np.abs(z) <= slow_threshold).astype(np.float64)
        fast = 1.0 - slow
        e_full = np.exp(z)
        e_half = np.exp(z / 2.0)
        idt = 1j * dt

        self.slow = slow
        self.zs_half = 0.5 * slow * z
        self.zs = slow * z
        # stage-state propagators: (1 + z/2) resp. exp(z/2) applied to u
        self.cu_half = slow * (1.0 + 0.5 * z) + fast * e_half
        self.cu_mid = slow + fast * e_half
        self.cu_end = slow + fast * e_full
        self.wn_half = 0.5 * idt * (slow + fast * e_half)
        self.wn_end = idt * (slow + fast * e_half)
        # final combination weights
        self.c_n1 = (idt / 6.0) * (slow + fast * e_full)
        self.c_n23 = (idt / 3.0) * (slow + fast * e_half)
        self.c_n4 = idt / 6.0

    def step(self, u: np.ndarray) -> np.ndarray:
        g = self.grid
        n1 = _nonlinear_native(g, u)
        s2 = self.cu_half * u + self.wn_half * n1
        n2 = _nonlinear_native(g, s2)
        s3 = self.cu_mid * u + self.zs_half * s2 + 0.5j * self.dt * n2
        n3 = _nonlinear_native(g, s3)
        s4 = self.cu_end * u + self.zs * s3 + self.wn_end * n3
        n4 = _nonlinear_native(g, s4)
        out = self.cu_end * u + (self.zs / 6.0) * (u + 2.0 * (s2 + s3) + s4)
        out += self.c_n1 * n1 + self.c_n23 * (n2 + n3) + self.c_n4 * n4
        return out


def step(Psi_hat: ComplexField, dt: float) -> ComplexField:
    """Advance one time step (coefficients cached per grid and dt)."""
    assert Psi_hat.representation is Representation.FOURIER
    g = Psi_hat.grid
    stepper = _stepper_cache(g, dt)
    u = stepper.step(Psi_hat.values * g.phase_inv)
    return ComplexField(g, Representation.FOURIER, u * g.phase_fwd)


_STEPPERS: dict[tuple[SpectralGrid, float], CompositeRk4] = {}


def _stepper_cache(grid: SpectralGrid, dt: float) -> CompositeRk4:
    key = (grid, dt)
    if key not in _STEPPERS:
        if len(_STEPPERS) > 8:
            _STEPPERS.clear()
        _STEPPERS[key] = CompositeRk4(grid, dt)
    return _STEPPERS[key]


# -- checkpoints -------------------------------------------------------------------

_CKPT_MAGIC = b"DS1C"
_CKPT_NATIVE_MAGIC = b"DS1N"


def write_checkpoint(
    path: str | Path,
    grid: SpectralGrid,
    u_hat: np.ndarray,
    step_index: int,
    config_hash: str,
    record: EvolutionRecord,
    time: float,
    u_native: np.ndarray | None = None,
) -> None:
    """Snapshot block, then step index + config hash + the record so far.

    u_hat is in the package spectral convention (as read back by
    read_snapshot). When the integrator's raw-layout state is supplied it is
    appended verbatim so a resumed run is bit-identical (the convention
    conversion is a float multiply and does not round-trip exactly).
    """
    write_snapshot(path, ComplexField(grid, Representation.FOURIER, u_hat), time)
    with open(path, "ab") as fh:
        hash_bytes = config_hash.encode()
        fh.write(_CKPT_MAGIC)
        fh.write(struct.pack("<QH", step_index, len(hash_bytes)))
        fh.write(hash_bytes)
        arrays = record.as_arrays()
        fh.write(struct.pack("<Q", len(record.times)))
        for name in ("t", "linf", "mass", "l2gradxi", "l2gradeta", "energy", "delta"):
            fh.write(np.asarray(arrays[name], dtype="<f8").tobytes())
        fh.write(struct.pack("<Q", len(record.snapshots)))
        for t_snap, ref in record.snapshots:
            ref_b = ref.encode()
            fh.write(struct.pack("<dH", t_snap, len(ref_b)))
            fh.write(ref_b)
        if u_native is not None:
            fh.write(_CKPT_NATIVE_MAGIC)
            fh.write(np.ascontiguousarray(u_native, dtype="<c16").tobytes())


@dataclass
class Checkpoint:
    grid: SpectralGrid
    u_hat: np.ndarray  # package spectral convention
    step_index: int
    config_hash: str
    record: EvolutionRecord
    time: float
    u_native: np.ndarray | None = None


def read_checkpoint(path: str | Path) -> Checkpoint:
    from .snapshot import _HEADER

    field_, time = read_snapshot(path)
    count = field_.grid.n_xi * field_.grid.n_eta
    with open(path, "rb") as fh:
        fh.seek(_HEADER.size + 16 * count)
        magic = fh.read(4)
        if magic != _CKPT_MAGIC:
            raise ValueError(f"{path}: not a checkpoint (trailer magic {magic!r})")
        step_index, hash_len = struct.unpack("<QH", fh.read(10))
        config_hash = fh.read(hash_len).decode()
        (n_rows,) = struct.unpack("<Q", fh.read(8))
        record = EvolutionRecord()
        cols = []
        for _ in range(7):
            cols.append(np.frombuffer(fh.read(8 * n_rows), dtype="<f8").tolist())
        (record.times, record.linf_psi, record.l2_psi_sq, record.l2_grad_xi,
         record.l2_grad_eta, record.energy, record.delta) = cols
        (n_snaps,) = struct.unpack("<Q", fh.read(8))
        for _ in range(n_snaps):
            t_snap, ref_len = struct.unpack("<dH", fh.read(10))
            record.snapshots.append((t_snap, fh.read(ref_len).decode()))
        u_native = None
        if fh.read(4) == _CKPT_NATIVE_MAGIC:
            data = np.fromfile(fh, dtype="<c16", count=count)
            if data.size == count:
                u_native = data.reshape(field_.grid.shape)
    return Checkpoint(
        field_.grid, field_.values, step_index, config_hash, record, time, u_native
    )


# -- the evolution loop --------------------------------------------------------------

def evolve(
    Psi0: ComplexField | None,
    cfg: EvolutionConfig,
    out_dir: str | Path | None = None,
    config_hash: str = "",
    resume_from: Checkpoint | None = None,
    progress=None,
) -> EvolutionRecord:
    """Uniform-step integration with norm recording.

    Records every cfg.record_every steps (always including step 0 and the
    final step); aborts with termination DELTA_ABORT once the mass-drift
    diagnostic exceeds cfg.delta_abort, or RESOLUTION_LOST on non-finite
    values. Snapshots, checkpoints, and the norms.csv series are written
    when out_dir is given. Resuming from a checkpoint reproduces an
    uninterrupted run bitwise.
    """
    if resume_from is not None:
        if config_hash and resume_from.config_hash and config_hash != resume_from.config_hash:
            raise ValueError(
                f"checkpoint config hash {resume_from.config_hash[:12]} does not match "
                f"run config {config_hash[:12]}"
            )
        grid = resume_from.grid
        if resume_from.u_native is not None:
            u = resume_from.u_native.copy()
        else:
            u = resume_from.u_hat * grid.phase_inv
        record = resume_from.record
        start_step = resume_from.step_index
        m0 = record.l2_psi_sq[0] if record.l2_psi_sq else _native_mass(grid, u)
    else:
        assert Psi0 is not None, "either Psi0 or resume_from is required"
        grid = Psi0.grid
        if Psi0.representation is Representation.PHYSICAL:
            u = fourier.fft2(Psi0.values)
        else:
            u = Psi0.values * grid.phase_inv
        record = EvolutionRecord()
        start_step = 0
        m0 = _native_mass(grid, u)

    out_path = Path(out_dir) if out_dir is not None else None
    if out_path is not None:
        out_path.mkdir(parents=True, exist_ok=True)

    dt = cfg.dt
    stepper = _stepper_cache(grid, dt)
    t_eps = 1e-12 * (cfg.t_max - cfg.t_start)
    t_of = lambda step: cfg.t_start + step * dt  # noqa: E731
    pending_snaps = sorted(t for t in cfg.snapshot_times if t >= t_of(start_step) - t_eps)
    parseval = (grid.h_xi * grid.h_eta) ** 2 / ((2.0 * np.pi) ** 2 * grid.l_xi * grid.l_eta)
    last_good: tuple[float, np.ndarray] | None = None

    def record_state(step_index: int) -> tuple[float, float]:
        """Append one row of norms; returns (mass-drift diagnostic, tail defect)."""
        nonlocal last_good
        psi = fourier.ifft2(u)
        m = float(quadrature(grid, psi.real**2 + psi.imag**2))
        drift = abs(1.0 - m / m0)
        delta = math.log10(drift) if drift > 0 else -math.inf
        record.times.append(t_of(step_index))
        record.linf_psi.append(float(np.max(np.abs(psi))))
        record.l2_psi_sq.append(m)
        absu2 = u.real**2 + u.imag**2
        record.l2_grad_xi.append(float(np.sqrt(np.sum(grid.k_xi[:, None] ** 2 * absu2) * parseval)))
        record.l2_grad_eta.append(float(np.sqrt(np.sum(grid.k_eta[None, :] ** 2 * absu2) * parseval)))
        record.energy.append(energy(ComplexField(grid, Representation.PHYSICAL, psi)))
        record.delta.append(delta)
        tail = math.sqrt(float(np.max(absu2[grid.tail_mask])) / max(float(np.max(absu2)), 1e-300))
        if delta <= -3.0 and out_path is not None:
            last_good = (t_of(step_index), u)  # stepping rebinds u, no copy needed
        return delta, tail

    def maybe_snapshot(step_index: int) -> None:
        nonlocal pending_snaps
        t = t_of(step_index)
        due = [s for s in pending_snaps if t >= s - t_eps]
        if due and out_path is not None:
            name = f"snap_{step_index:08d}.ds1f"
            write_snapshot(
                out_path / name, ComplexField(grid, Representation.FOURIER, u * grid.phase_fwd), t
            )
            record.snapshots.append((t, name))
        pending_snaps = [s for s in pending_snaps if s not in due]

    if start_step == 0:
        record_state(0)
        maybe_snapshot(0)

    final = Termination.COMPLETED
    for n in range(start_step + 1, cfg.n_steps + 1):
        u = stepper.step(u)
        if n % cfg.record_every == 0 or n == cfg.n_steps:
            if not math.isfinite(float(np.max(np.abs(u.real)))):
                final = Termination.RESOLUTION_LOST
                break
            delta, tail = record_state(n)
            maybe_snapshot(n)
            if delta > cfg.delta_abort:
                final = Termination.DELTA_ABORT
                break
            if cfg.tail_abort is not None and tail > cfg.tail_abort:
                final = Termination.RESOLUTION_LOST
                break
        if (
            cfg.checkpoint_every
            and out_path is not None
            and n % cfg.checkpoint_every == 0
        ):
            write_checkpoint(
                out_path / f"checkpoint_{n:08d}.ds1f",
                grid, u * grid.phase_fwd, n, config_hash, record, t_of(n),
                u_native=u,
            )
        if progress is not None:
            progress(n, cfg.n_steps)

    record.termination = final
    if out_path is not None:
        if last_good is not None:
            t_g, u_g = last_good
            write_snapshot(
                out_path / "last_good.ds1f",
                ComplexField(grid, Representation.FOURIER, u_g * grid.phase_fwd),
                t_g,
            )
        write_record_csv(out_path / "norms.csv", record)
    return record


def _native_mass(grid: SpectralGrid, u: np.ndarray) -> float:
    psi = fourier.ifft2(u)
    return float(quadrature(grid, psi.real**2 + psi.imag**2))


# -- record serialization --------------------------------------------------------------

CSV_HEADER = "t,linf,mass,l2gradxi,l2gradeta,energy,delta"


def write_record_csv(path: str | Path, record: EvolutionRecord) -> None:
    lines = [CSV_HEADER]
    for row in zip(
        record.times,
        record.linf_psi,
        record.l2_psi_sq,
        record.l2_grad_xi,
        record.l2_grad_eta,
        record.energy,
        record.delta,
    ):
        lines.append(",".join("%.17g" % x for x in row))
    Path(path).write_text("\n".join(lines) + "\n")


def read_record_csv(path: str | Path) -> EvolutionRecord:
    text = Path(path).read_text().strip().split("\n")
    if not text or text[0].strip() != CSV_HEADER:
        raise ValueError(f"{path}: unexpected CSV header {text[0]!r}")
    record = EvolutionRecord()
    for line in text[1:]:
        t, linf, m, gx, ge, en, de = (float(x) for x in line.split(","))
        record.times.append(t)
        record.linf_psi.append(linf)
        record.l2_psi_sq.append(m)
        record.l2_grad_xi.append(gx)
        record.l2_grad_eta.append(ge)
        record.energy.append(en)
        record.delta.append(de)
    return record
