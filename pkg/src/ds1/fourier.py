"""FFT backend shim.

All transforms in the package go through these helpers so the backend can
be swapped globally. Two backends are supported:

* ``scipy`` — scipy.fft (pocketfft), always available.
* ``torch`` — torch.fft, noticeably faster on multi-core CPUs.

Selection: environment variable ``DS1_FFT_BACKEND`` in {auto, scipy, torch},
default ``auto`` (torch when importable, scipy otherwise). Worker/thread
count comes from ``DS1_FFT_WORKERS`` (default: all CPUs). For a fixed
backend and worker count both libraries are bitwise deterministic.
"""

from __future__ import annotations

import os

import numpy as np
import scipy.fft as _sfft

try:
    # OpenBLAS spin-waiting workers starve the FFT threads on small machines
    # (measured 20-50x slowdowns when BLAS calls interleave with transforms);
    # the package's own BLAS needs are light, so pin it to one thread.
    import threadpoolctl

    threadpoolctl.threadpool_limits(1, "blas")
except ImportError:  # pragma: no cover
    pass


def _pick_backend() -> str:
    choice = os.environ.get("DS1_FFT_BACKEND", "auto").lower()
    if choice not in ("auto", "scipy", "torch"):
        raise ValueError(f"DS1_FFT_BACKEND must be auto|scipy|torch, got {choice!r}")
    if choice in ("auto", "torch"):
        try:
            import torch  # noqa: F401

            return "torch"
        except ImportError:
            if choice == "torch":
                raise
    return "scipy"


BACKEND = _pick_backend()
WORKERS = int(os.environ.get("DS1_FFT_WORKERS", os.cpu_count() or 1))

if BACKEND == "torch":
    import torch as _torch

    _torch.set_num_threads(WORKERS)

    def fft2(a: np.ndarray) -> np.ndarray:
        return _torch.fft.fft2(_torch.from_numpy(np.ascontiguousarray(a))).numpy()

    def ifft2(a: np.ndarray) -> np.ndarray:
        return _torch.fft.ifft2(_torch.from_numpy(np.ascontiguousarray(a))).numpy()

    def fft(a: np.ndarray, axis: int = -1) -> np.ndarray:
        return _torch.fft.fft(_torch.from_numpy(np.ascontiguousarray(a)), dim=axis).numpy()

    def ifft(a: np.ndarray, axis: int = -1) -> np.ndarray:
        return _torch.fft.ifft(_torch.from_numpy(np.ascontiguousarray(a)), dim=axis).numpy()

    def rfft2(a: np.ndarray) -> np.ndarray:
        return _torch.fft.rfft2(_torch.from_numpy(np.ascontiguousarray(a))).numpy()

    def irfft2(a: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
        return _torch.fft.irfft2(_torch.from_numpy(np.ascontiguousarray(a)), s=shape).numpy()

    def rfft(a: np.ndarray) -> np.ndarray:
        return _torch.fft.rfft(_torch.from_numpy(np.ascontiguousarray(a))).numpy()

    def irfft(a: np.ndarray, n: int) -> np.ndarray:
        return _torch.fft.irfft(_torch.from_numpy(np.ascontiguousarray(a)), n=n).numpy()

else:

    def fft2(a: np.ndarray) -> np.ndarray:
        return _sfft.fft2(a, workers=WORKERS)

    def ifft2(a: np.ndarray) -> np.ndarray:
        return _sfft.ifft2(a, workers=WORKERS)

    def fft(a: np.ndarray, axis: int = -1) -> np.ndarray:
        return _sfft.fft(a, axis=axis, workers=WORKERS)

    def ifft(a: np.ndarray, axis: int = -1) -> np.ndarray:
        return _sfft.ifft(a, axis=axis, workers=WORKERS)

    def rfft2(a: np.ndarray) -> np.ndarray:
        return _sfft.rfft2(a, workers=WORKERS)

    def irfft2(a: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
        return _sfft.irfft2(a, s=shape, workers=WORKERS)

    def rfft(a: np.ndarray) -> np.ndarray:
        return _sfft.rfft(a)

    def irfft(a: np.ndarray, n: int) -> np.ndarray:
        return _sfft.irfft(a, n=n)
