"""Multi-element tracking with checkpointed diagnostics and loss detection."""

import time
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from src.common.errors import FixedPointError, StepLengthMismatchError
from src.common.logging import get_logger
from src.dynamics.hamiltonian import energy_components
from src.dynamics.state import ParticleState
from src.integrators.runge_kutta import Stepper
from src.integrators.spec import IntegratorSpec, make_stepper
from src.sampling.field import EvaluationCounter, Field
from src.tracker.lattice import Lattice

logger = get_logger(__name__)

SPAN_RTOL = 1e-9
POLICY_KINDS = ("step", "element", "exit", "decimate")
TRACK_COLUMNS = ["Z", "X", "Y", "Px", "Py", "KX", "KY"]


@dataclass(frozen=True)
class CheckpointPolicy:
    """
    When diagnostics are recorded: after every step, at every element exit,
    only at the lattice exit, or at every ``every``-th element exit.

    The initial state is always recorded.
    """

    kind: str = "element"
    every: int = 1

    def __post_init__(self):
        if self.kind not in POLICY_KINDS:
            raise ValueError(f"unknown checkpoint policy '{self.kind}', expected one of {POLICY_KINDS}")
        if self.every < 1:
            raise ValueError(f"decimation must be >= 1, got {self.every}")

    @classmethod
    def parse(cls, text: str) -> "CheckpointPolicy":
        """'step', 'element', 'exit' or 'decimate:N'."""
        kind, _, every = text.strip().lower().partition(":")
        if kind == "decimate":
            if not every:
                raise ValueError("decimate policy needs a count, e.g. 'decimate:10'")
            return cls(kind, int(every))
        if every:
            raise ValueError(f"policy '{kind}' takes no argument")
        return cls(kind)

    def at_element_exit(self, index: int, n_elements: int) -> bool:
        if index == n_elements - 1:
            return True
        if self.kind == "element":
            return True
        if self.kind == "decimate":
            return (index + 1) % self.every == 0
        return False


@dataclass
class TrackRecord:
    method: str
    step: float
    Z: List[float] = field(default_factory=list)
    element: List[int] = field(default_factory=list)
    states: List[np.ndarray] = field(default_factory=list)
    KX: List[float] = field(default_factory=list)
    KY: List[float] = field(default_factory=list)
    max_abs_x: float = 0.0
    max_abs_y: float = 0.0
    # per-element max |X|, |Y| over every step, independent of the checkpoint policy
    element_max_x: List[float] = field(default_factory=list)
    element_max_y: List[float] = field(default_factory=list)
    exit_state: Optional[ParticleState] = None
    lost: bool = False
    loss_z: Optional[float] = None
    loss_element: Optional[int] = None
    n_steps: int = 0
    wall_clock: float = 0.0
    counters: Dict[str, Any] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.Z)

    def add(self, Z: float, element: int, y: np.ndarray, kx: float, ky: float) -> None:
        self.Z.append(Z)
        self.element.append(element)
        self.states.append(np.array(y, dtype=float))
        self.KX.append(kx)
        self.KY.append(ky)

    def to_frame(self, with_element: bool = False) -> pd.DataFrame:
        states = np.array(self.states).reshape(-1, 4)
        df = pd.DataFrame(
            {
                "Z": self.Z,
                "X": states[:, 0],
                "Y": states[:, 1],
                "Px": states[:, 2],
                "Py": states[:, 3],
                "KX": self.KX,
                "KY": self.KY,
            }
        )
        if with_element:
            df.insert(1, "element", self.element)
        return df

    def summary(self) -> Dict[str, Any]:
        exit_state = None
        if self.exit_state is not None:
            s = self.exit_state
            exit_state = {"X": s.X, "Y": s.Y, "Px": s.Px, "Py": s.Py}
        return {
            "method": self.method,
            "step": self.step,
            "n_steps": self.n_steps,
            "n_checkpoints": len(self),
            "max_abs_x": self.max_abs_x,
            "max_abs_y": self.max_abs_y,
            "exit_state": exit_state,
            "lost": self.lost,
            "loss_z": self.loss_z,
            "loss_element": self.loss_element,
            "wall_clock": self.wall_clock,
            "counters": dict(self.counters),
        }


def steps_per_element(span: float, h: float) -> int:
    """
    Raises:
        StepLengthMismatchError: span is not an integer multiple of h
    """
    n = int(round(span / h))
    if n < 1 or abs(n * h - span) > SPAN_RTOL * span:
        raise StepLengthMismatchError(f"element span {span:.12g} is not an integer multiple of step {h:.12g}")
    return n


def _energy(f: Field, y: np.ndarray, Z: float, delta0: float) -> Tuple[float, float]:
    pv = f.values(y[0], y[1], Z, with_z_derivative=False)
    e = energy_components(ParticleState.from_array(y, Z, delta0), pv)
    return e.K_X, e.K_Y


class _FieldCache:
    """One field per (table, polarity), all sharing a counter; one stepper per field."""

    def __init__(self, spec: IntegratorSpec, counter: EvaluationCounter, delta0: float):
        self.spec = spec
        self.counter = counter
        self.delta0 = delta0
        self._base: Dict[int, Field] = {}
        self._entries: Dict[Tuple[int, float], Tuple[Field, Stepper]] = {}

    def get(self, element) -> Tuple[Field, Stepper]:
        key = (id(element.table), element.polarity)
        if key not in self._entries:
            base = self._base.get(id(element.table))
            if base is None:
                base = Field.from_table(
                    element.table,
                    mode=self.spec.z_source,
                    with_aux=self.spec.needs_aux,
                    counter=self.counter,
                    strict_nodes=self.spec.on_grid,
                )
                self._base[id(element.table)] = base
            f = base.with_polarity(element.polarity)
            self._entries[key] = (f, make_stepper(self.spec, f, self.delta0))
        return self._entries[key]

    def out_of_range(self) -> int:
        return sum(f.source.out_of_range for f in self._base.values())


def track(
    lat: Lattice,
    s0: ParticleState,
    spec: IntegratorSpec,
    checkpoints: CheckpointPolicy | str = "element",
    counter: Optional[EvaluationCounter] = None,
) -> TrackRecord:
    """
    Carry ``s0`` through every element of ``lat`` with the one-step map of ``spec``.

    The transverse state passes unchanged between elements; Z restarts at each
    element's first grid point. A non-finite state, or a fixed-point solve that
    diverges, ends the run with ``lost`` set.

    Raises:
        StepLengthMismatchError: an element span is not a multiple of the step
        FixedPointError: stage iteration stalled with a finite residual
    """
    if isinstance(checkpoints, str):
        checkpoints = CheckpointPolicy.parse(checkpoints)
    counter = counter if counter is not None else EvaluationCounter()
    n_steps = [steps_per_element(e.span, spec.step) for e in lat]
    offsets = lat.offsets
    cache = _FieldCache(spec, counter, s0.delta0)
    h = spec.step
    delta0 = s0.delta0

    record = TrackRecord(method=spec.method, step=h)
    y = s0.as_array()
    f0, _ = cache.get(lat[0])
    kx, ky = _energy(f0, y, lat[0].z_start, delta0)
    record.add(0.0, 0, y, kx, ky)
    record.max_abs_x, record.max_abs_y = float(abs(y[0])), float(abs(y[1]))

    start = time.perf_counter()
    with np.errstate(over="ignore", invalid="ignore"):
        for index, element in enumerate(lat):
            f, step = cache.get(element)
            z0 = element.z_start
            ex, ey = abs(y[0]), abs(y[1])
            for k in range(n_steps[index]):
                Z = z0 + k * h
                try:
                    y_next = step(y, Z, h)
                except FixedPointError as exc:
                    if np.isfinite(exc.residual):
                        raise
                    y_next = np.full(4, np.nan)
                record.n_steps += 1
                if not np.all(np.isfinite(y_next)):
                    record.lost = True
                    record.loss_z = float(offsets[index] + (k + 1) * h)
                    record.loss_element = index
                    break
                y = y_next
                ex, ey = max(ex, abs(y[0])), max(ey, abs(y[1]))
                if checkpoints.kind == "step" and k < n_steps[index] - 1:
                    Z_local = z0 + (k + 1) * h
                    kx, ky = _energy(f, y, Z_local, delta0)
                    record.add(float(offsets[index] + (k + 1) * h), index, y, kx, ky)
            record.element_max_x.append(float(ex))
            record.element_max_y.append(float(ey))
            record.max_abs_x = max(record.max_abs_x, float(ex))
            record.max_abs_y = max(record.max_abs_y, float(ey))
            if record.lost:
                break
            if checkpoints.kind == "step" or checkpoints.at_element_exit(index, len(lat)):
                Z_local = z0 + n_steps[index] * h
                kx, ky = _energy(f, y, Z_local, delta0)
                record.add(float(offsets[index] + element.span), index, y, kx, ky)
    record.wall_clock = time.perf_counter() - start

    if record.lost:
        logger.warning(
            f"{spec.method} h={h:g}: particle lost in element {record.loss_element} at Z={record.loss_z:.6g}; "
            f"record truncated after {len(record)} checkpoints"
        )
    else:
        record.exit_state = ParticleState.from_array(y, lat.total_span, delta0)
    record.counters = {**counter.snapshot(), "out_of_range": cache.out_of_range()}
    logger.debug(f"{spec.method} h={h:g}: {record.n_steps} steps in {record.wall_clock:.3f}s")
    return record
