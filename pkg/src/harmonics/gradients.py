"""Generalized gradients from sampled harmonics by spectral inversion."""

from dataclasses import dataclass, field
from math import factorial
from pathlib import Path
from typing import Any, Dict, List, NamedTuple, Optional, Protocol, Tuple

import numpy as np
import pandas as pd
from scipy.interpolate import CubicSpline

from src.common.errors import DataError
from src.common.hashing import sha256_arrays
from src.common.io_utils import load_json, load_numeric_csv, save_json, save_numeric_csv, sidecar_path
from src.common.logging import get_logger
from src.harmonics.bessel import bessel_i_derivative
from src.harmonics.harmonic_set import HarmonicSet, check_uniform_grid

logger = get_logger(__name__)

# endpoint magnitude relative to the series maximum above which a warning is logged
ENDPOINT_DECAY_RTOL = 1e-10
# below this |R k| the Bessel ratio is replaced by its small-argument limit
SMALL_ARGUMENT = 1e-4
REALITY_RTOL = 1e-12

KINDS = ("s", "c")


class GradientKey(NamedTuple):
    """Identifies one generalized gradient series C_{m,kind}^[order]."""

    m: int
    kind: str  # "s" normal, "c" skew
    order: int

    def shifted(self, extra: int) -> "GradientKey":
        return GradientKey(self.m, self.kind, self.order + extra)

    @property
    def label(self) -> str:
        return f"C{self.m}_{self.kind}_{self.order}"


class GradientProfile(Protocol):
    """Exact gradient values at arbitrary z, for every derivative order."""

    def evaluate(self, key: GradientKey, z) -> np.ndarray: ...

    def keys(self) -> List[Tuple[int, str]]: ...


@dataclass(frozen=True)
class GradientTable:
    """
    C_{m,s}^[n](z_k) and C_{m,c}^[n](z_k) for n = 0..nd on a shared grid.

    ``normal[m]`` and ``skew[m]`` are arrays of shape (nd+1, N). A harmonic missing
    from one kind reads as exactly zero. ``profile``, when present, evaluates the
    same gradients exactly off the grid.
    """

    z: np.ndarray
    nd: int
    normal: Dict[int, np.ndarray] = field(default_factory=dict)
    skew: Dict[int, np.ndarray] = field(default_factory=dict)
    radius: Optional[float] = None
    profile: Optional[GradientProfile] = None
    provenance: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.nd < 0:
            raise ValueError(f"ND must be >= 0, got {self.nd}")
        n = len(self.z)
        for series in (self.normal, self.skew):
            for m, arr in series.items():
                if arr.shape != (self.nd + 1, n):
                    raise ValueError(f"gradient block for m={m} has shape {arr.shape}, expected {(self.nd + 1, n)}")

    @property
    def dz(self) -> float:
        return float((self.z[-1] - self.z[0]) / (len(self.z) - 1))

    @property
    def harmonics(self) -> List[int]:
        return sorted(set(self.normal) | set(self.skew))

    def present(self) -> List[Tuple[int, str]]:
        """(m, kind) pairs carried by the table, in canonical order."""
        pairs = [(m, "s") for m in self.normal] + [(m, "c") for m in self.skew]
        return sorted(pairs)

    def is_empty(self) -> bool:
        return not self.normal and not self.skew

    def has(self, key: GradientKey) -> bool:
        block = (self.normal if key.kind == "s" else self.skew).get(key.m)
        return block is not None and 0 <= key.order <= self.nd

    def series(self, key: GradientKey) -> np.ndarray:
        """Samples of one gradient; zeros for a harmonic the table does not carry."""
        block = (self.normal if key.kind == "s" else self.skew).get(key.m)
        if block is None:
            return np.zeros(len(self.z))
        if not 0 <= key.order <= self.nd:
            raise KeyError(f"{key.label} outside table orders 0..{self.nd}")
        return block[key.order]

    def derivative_series(self, key: GradientKey, extra: int) -> Tuple[np.ndarray, bool]:
        """
        Samples of d^extra/dz^extra C^[order].

        Returns the stored order+extra series when the table carries it
        (structural=True), else spline derivatives of the highest stored order.
        """
        target = key.shifted(extra)
        if target.order <= self.nd:
            return self.series(target), True
        base = key.shifted(self.nd - key.order)
        spline = CubicSpline(self.z, self.series(base), bc_type="not-a-knot")
        return spline.derivative(target.order - self.nd)(self.z), False

    def fingerprint(self) -> str:
        """sha256 of the grid and every stored block, in present() order."""
        blocks = [(self.normal if kind == "s" else self.skew)[m] for m, kind in self.present()]
        return sha256_arrays([self.z, *blocks])

    def to_frame(self) -> pd.DataFrame:
        columns: Dict[str, np.ndarray] = {"z": self.z}
        for m, kind in self.present():
            for n in range(self.nd + 1):
                key = GradientKey(m, kind, n)
                columns[key.label] = self.series(key)
        return pd.DataFrame(columns)


def spectral_factor(m: int, n: int, k: np.ndarray, radius: float) -> np.ndarray:
    """i^n k^(m+n-1) / (2^m m! I_m'(R k)), with the k -> 0 limit taken analytically."""
    k = np.asarray(k, dtype=float)
    x = radius * k
    out = np.zeros(k.shape, dtype=complex)
    norm = 2.0**m * factorial(m)
    phase = 1j**n

    small = np.abs(x) < SMALL_ARGUMENT
    big = ~small
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        ratio = np.power(k[big], m + n - 1) / bessel_i_derivative(m, x[big])
    out[big] = phase * np.nan_to_num(ratio, nan=0.0, posinf=0.0, neginf=0.0) / norm
    out[small] = phase * 2.0 * factorial(m - 1) * (2.0 / radius) ** (m - 1) * np.power(k[small], n) / norm
    return out


def _warn_endpoint_decay(label: str, samples: np.ndarray) -> None:
    peak = np.max(np.abs(samples))
    if peak == 0:
        return
    edge = max(abs(samples[0]), abs(samples[-1]))
    if edge > ENDPOINT_DECAY_RTOL * peak:
        logger.warning(
            f"{label} does not decay at the grid ends ({edge / peak:.2e} of max); "
            f"pad the harmonics before inverting"
        )


def compute_gradients(hs: HarmonicSet, nd: int) -> GradientTable:
    """
    Invert sampled harmonics into generalized gradients up to derivative order ``nd``.

    Normal gradients come from B_m, skew gradients from A_m. The transform is the
    periodic DFT on the (padded) grid with wavenumbers 2*pi*j/(N dz).
    """
    if nd < 0:
        raise ValueError(f"ND must be >= 0, got {nd}")
    if hs.is_empty():
        raise ValueError("harmonic set is empty")

    z = hs.z
    n_points = len(z)
    k = 2.0 * np.pi * np.fft.fftfreq(n_points, d=hs.dz)
    nyquist = n_points // 2 if n_points % 2 == 0 else None

    def invert(m: int, samples: np.ndarray, label: str) -> np.ndarray:
        _warn_endpoint_decay(label, samples)
        spectrum = np.fft.fft(samples)
        block = np.empty((nd + 1, n_points))
        for n in range(nd + 1):
            factor = spectral_factor(m, n, k, hs.radius)
            if nyquist is not None:
                # the Nyquist bin of a real signal has no odd-derivative counterpart
                factor[nyquist] = factor[nyquist].real
            values = np.fft.ifft(spectrum * factor)
            peak = np.max(np.abs(values))
            residue = np.max(np.abs(values.imag))
            if peak > 0 and residue > REALITY_RTOL * peak:
                logger.warning(f"{label} order {n}: imaginary residue {residue / peak:.2e} of max")
            block[n] = values.real
        return block

    normal = {m: invert(m, s, f"B{m}") for m, s in hs.normal.items()}
    skew = {m: invert(m, s, f"A{m}") for m, s in hs.skew.items()}

    logger.info(f"Computed gradients for harmonics {hs.orders} up to ND={nd} on N={n_points} points")
    return GradientTable(
        z=z.copy(),
        nd=nd,
        normal=normal,
        skew=skew,
        radius=hs.radius,
        provenance={"source": "spectral", "harmonics": hs.orders, "nd": nd, "units": hs.units},
    )


def harmonic_weight(m: int, ell: int) -> float:
    """Coefficient of R^(2l+m-1) C^[2l] in the harmonic of order m at radius R."""
    return (-1) ** ell * factorial(m) * (2 * ell + m) / (4**ell * factorial(ell) * factorial(ell + m))


def forward_harmonic(gt: GradientTable, m: int, kind: str = "s", radius: Optional[float] = None) -> np.ndarray:
    """
    Radial field harmonic B_m (kind "s") or A_m (kind "c") at ``radius`` from the
    gradient series, truncated at the table's ND.
    """
    radius = radius if radius is not None else gt.radius
    if radius is None:
        raise ValueError("radius required: the table carries none")
    total = np.zeros(len(gt.z))
    for ell in range(gt.nd // 2 + 1):
        total += harmonic_weight(m, ell) * radius ** (2 * ell + m - 1) * gt.series(GradientKey(m, kind, 2 * ell))
    return total


def save_gradients(gt: GradientTable, path: Path | str) -> Path:
    """Write the ``z,C<m>_s_<n>,C<m>_c_<n>,...`` dump and its JSON sidecar."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    save_numeric_csv(gt.to_frame(), path)
    save_json(
        {
            "nd": gt.nd,
            "radius_of_analysis": gt.radius,
            "present": [[m, kind] for m, kind in gt.present()],
            "sha256": gt.fingerprint(),
            "provenance": gt.provenance,
        },
        sidecar_path(path),
    )
    return path


def load_gradients(path: Path | str) -> GradientTable:
    """Read a gradient dump written by save_gradients."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Gradient dump not found: {path}")
    meta = load_json(sidecar_path(path))
    nd = int(meta["nd"])
    present = [(int(m), str(kind)) for m, kind in meta["present"]]
    required = ["z"] + [GradientKey(m, kind, n).label for m, kind in present for n in range(nd + 1)]
    df = load_numeric_csv(path, required)
    z = df["z"].to_numpy(dtype=float)
    check_uniform_grid(z)

    normal: Dict[int, np.ndarray] = {}
    skew: Dict[int, np.ndarray] = {}
    for m, kind in present:
        block = np.vstack([df[GradientKey(m, kind, n).label].to_numpy(dtype=float) for n in range(nd + 1)])
        (normal if kind == "s" else skew)[m] = block

    gt = GradientTable(
        z=z,
        nd=nd,
        normal=normal,
        skew=skew,
        radius=meta.get("radius_of_analysis"),
        provenance=dict(meta.get("provenance", {}), loaded_from=path.name),
    )
    expected = meta.get("sha256")
    if expected is not None and gt.fingerprint() != expected:
        raise DataError(f"gradient dump {path.name} does not match the fingerprint in its sidecar")
    return gt
