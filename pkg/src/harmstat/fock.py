"""Two-mode Fock space organised by the conserved quanta E = n1 + N*nN.

A state is stored as one dense amplitude vector per block E; entry ``m`` of
block ``E`` is the Fock pair ``(n1, nN) = (E - N*m, m)``. The interaction
Hamiltonian never couples different blocks.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, MemoryBoundError

DEFAULT_TAIL_TOL = 1e-12
MAX_BLOCK_DIM = 4096


def _check_amplitude(alpha, name="alpha"):
    alpha = complex(alpha)
    if not (math.isfinite(alpha.real) and math.isfinite(alpha.imag)):
        raise ValueError(f"{name} must be finite, got {alpha!r}")
    return alpha


@dataclass(frozen=True)
class ModelSpec:
    """Harmonic order ``order`` (N) and coupling ``coupling`` (g, with hbar = 1)."""

    order: int = 2
    coupling: float = 1.0

    def __post_init__(self):
        if int(self.order) != self.order or self.order < 1:
            raise ConfigError(f"order must be an integer >= 1, got {self.order!r}", "model.order")
        if not (self.coupling > 0 and math.isfinite(self.coupling)):
            raise ConfigError(f"coupling must be > 0, got {self.coupling!r}", "model.coupling")
        object.__setattr__(self, "order", int(self.order))
        object.__setattr__(self, "coupling", float(self.coupling))


@dataclass(frozen=True)
class CoherentInput:
    """Product of coherent states |alpha1> (fundamental) and |alphaN> (harmonic)."""

    alpha1: complex
    alphaN: complex
    model: ModelSpec = field(default_factory=ModelSpec)

    def __post_init__(self):
        object.__setattr__(self, "alpha1", _check_amplitude(self.alpha1, "alpha1"))
        object.__setattr__(self, "alphaN", _check_amplitude(self.alphaN, "alphaN"))

    @property
    def r1(self):
        return abs(self.alpha1)

    @property
    def rN(self):
        return abs(self.alphaN)

    @property
    def phi1(self):
        return cmath.phase(self.alpha1)

    @property
    def phiN(self):
        return cmath.phase(self.alphaN)

    @property
    def theta(self):
        """Input phase mismatch N*phi1 - phiN, wrapped to (-pi, pi]."""
        th = self.model.order * self.phi1 - self.phiN
        return math.atan2(math.sin(th), math.cos(th))

    @classmethod
    def net(cls, model, r, phase=0.0):
        """No-energy-transfer input: |alpha1| = N r, |alphaN| = r, theta = 0."""
        n = model.order
        return cls(n * r * cmath.exp(1j * phase), r * cmath.exp(1j * n * phase), model)


def coherent_amplitudes(alpha, cutoff):
    """Fock amplitudes c_n = exp(-|alpha|^2/2) alpha^n / sqrt(n!) for n = 0..cutoff.

    Uses the recurrence c_{n+1} = c_n alpha / sqrt(n + 1); switches to the
    same recurrence in log-magnitude form when exp(-|alpha|^2/2) would
    underflow.
    """
    alpha = _check_amplitude(alpha)
    if cutoff < 0:
        raise ValueError("cutoff must be >= 0")
    n = np.arange(1, cutoff + 1)
    mean = abs(alpha) ** 2
    if mean < 1400.0:
        factors = np.empty(cutoff + 1, dtype=complex)
        factors[0] = math.exp(-0.5 * mean)
        factors[1:] = alpha / np.sqrt(n)
        return np.cumprod(factors)
    logmag = np.concatenate(([-0.5 * mean], math.log(abs(alpha)) - 0.5 * np.log(n)))
    phase = np.arange(cutoff + 1) * cmath.phase(alpha)
    return np.exp(np.cumsum(logmag)) * np.exp(1j * phase)


def poisson_cutoff(mean, tail_tol):
    """Smallest n with Poisson(mean) upper-tail mass P(X > n) below ``tail_tol``."""
    if mean == 0:
        return 0
    hi = int(mean + 20.0 * math.sqrt(mean) + 40)
    w = np.abs(coherent_amplitudes(math.sqrt(mean), hi)) ** 2
    tail = np.cumsum(w[::-1])[::-1]  # tail[n] = P(X >= n), summed small-to-large
    above = np.append(tail[1:], 0.0)  # P(X > n)
    return int(np.argmax(above < tail_tol))


def choose_cutoffs(inp, tail_tol=DEFAULT_TAIL_TOL):
    """Per-mode cutoffs (cutoff1, cutoffN, cutoffE) bounding each discarded tail."""
    if not 0 < tail_tol < 1:
        raise ValueError("tail_tol must lie in (0, 1)")
    c1 = poisson_cutoff(abs(inp.alpha1) ** 2, tail_tol)
    cn = poisson_cutoff(abs(inp.alphaN) ** 2, tail_tol)
    return c1, cn, c1 + inp.model.order * cn


@dataclass(frozen=True, eq=False)
class TwoModeFockState:
    """Block-structured two-mode pure state.

    ``blocks`` maps E to a read-only complex vector over m = nN = 0..E//N.
    Blocks absent from the mapping carry zero amplitude.
    """

    model: ModelSpec
    blocks: dict
    cutoffE: int
    cutoffs: tuple = (0, 0)

    def __post_init__(self):
        n = self.model.order
        frozen = {}
        for E in sorted(self.blocks):
            v = np.array(self.blocks[E], dtype=complex)
            if v.shape != (E // n + 1,):
                raise ValueError(f"block E={E} must have length {E // n + 1}, got {v.shape}")
            v.setflags(write=False)
            frozen[int(E)] = v
        object.__setattr__(self, "blocks", frozen)

    def norm(self):
        return math.sqrt(math.fsum(float(np.vdot(v, v).real) for v in self.blocks.values()))

    def block_weights(self):
        return {E: float(np.vdot(v, v).real) for E, v in self.blocks.items()}

    def occupations(self, E):
        """(n1, nN) integer vectors for the entries of block E."""
        m = np.arange(E // self.model.order + 1)
        return E - self.model.order * m, m

    @property
    def dims(self):
        """Single-mode Fock dimensions (mode 1, mode N) spanned by the stored blocks."""
        emax = max(self.blocks) if self.blocks else 0
        return emax + 1, emax // self.model.order + 1

    def as_matrix(self):
        """Dense coefficient matrix C[n1, nN]."""
        d1, dn = self.dims
        c = np.zeros((d1, dn), dtype=complex)
        for E, v in self.blocks.items():
            n1, m = self.occupations(E)
            c[n1, m] = v
        return c

    def with_blocks(self, blocks):
        return TwoModeFockState(self.model, blocks, self.cutoffE, self.cutoffs)


def prepare_product_state(inp, tail_tol=DEFAULT_TAIL_TOL, max_block_dim=MAX_BLOCK_DIM):
    """Truncated, renormalised product coherent state |alpha1>|alphaN> in block form.

    Blocks whose weight falls below ``1e-6 * tail_tol`` are dropped before
    renormalisation.
    """
    n = inp.model.order
    cut1, cutn, cut_e = choose_cutoffs(inp, tail_tol)
    if cut_e // n + 1 > max_block_dim:
        raise MemoryBoundError(
            f"largest block dimension {cut_e // n + 1} exceeds bound {max_block_dim}",
            required={"cutoff1": cut1, "cutoffN": cutn, "cutoffE": cut_e, "max_block_dim": cut_e // n + 1},
        )
    c1 = coherent_amplitudes(inp.alpha1, cut1)
    cn = coherent_amplitudes(inp.alphaN, cutn)
    floor = 1e-6 * tail_tol
    blocks = {}
    for E in range(cut_e + 1):
        m = np.arange(E // n + 1)
        n1 = E - n * m
        valid = (n1 <= cut1) & (m <= cutn)
        if not valid.any():
            continue
        v = np.zeros(m.size, dtype=complex)
        v[valid] = c1[n1[valid]] * cn[m[valid]]
        if np.vdot(v, v).real >= floor:
            blocks[E] = v
    total = math.sqrt(math.fsum(float(np.vdot(v, v).real) for v in blocks.values()))
    blocks = {E: v / total for E, v in blocks.items()}
    return TwoModeFockState(inp.model, blocks, cut_e, (cut1, cutn))
