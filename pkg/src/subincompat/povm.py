"""POVMs, assemblages and the operations performed on them: truncation to
subspaces, binarisation, coarse-graining, depolarising noise, classical
post-processing."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from . import linalg

ELEMENT_PSD_TOL = 1e-9
NORMALISATION_TOL = 1e-9
ZERO_ELEMENT_TOL = 1e-12


@dataclass(eq=False)
class Povm:
    """Outcome-indexed PSD operators summing to the identity."""

    dim: int
    elements: list[np.ndarray]

    def __post_init__(self):
        self.elements = [linalg.check_hermitian(e) for e in self.elements]
        for k, e in enumerate(self.elements):
            if e.shape[0] != self.dim:
                raise ValueError(f"element {k} has dimension {e.shape[0]} != {self.dim}")
            if linalg.min_eigenvalue(e) < -ELEMENT_PSD_TOL:
                raise ValueError(f"element {k} is not PSD (min eig {linalg.min_eigenvalue(e):.2e})")
        dev = np.abs(sum(self.elements) - np.eye(self.dim)).max()
        if dev > NORMALISATION_TOL:
            raise ValueError(f"elements sum to identity only within {dev:.2e}")

    @property
    def n_outcomes(self) -> int:
        return len(self.elements)

    def is_zero_element(self, k: int) -> bool:
        return np.abs(self.elements[k]).max() < ZERO_ELEMENT_TOL


@dataclass(eq=False)
class Assemblage:
    """A finite family of POVMs on one Hilbert space (settings x)."""

    dim: int
    measurements: list[Povm]

    def __post_init__(self):
        for x, m in enumerate(self.measurements):
            if m.dim != self.dim:
                raise ValueError(f"measurement {x} dimension {m.dim} != {self.dim}")

    @property
    def n_settings(self) -> int:
        return len(self.measurements)

    def outcome_counts(self) -> tuple[int, ...]:
        return tuple(m.n_outcomes for m in self.measurements)


@dataclass(eq=False)
class ParentPovm:
    """POVM over joint outcome labels \\vec a, one index per setting."""

    dim: int
    outcome_labels: list[tuple[int, ...]]
    elements: list[np.ndarray]
    outcome_counts: tuple[int, ...] = field(default=())

    def __post_init__(self):
        if len(self.outcome_labels) != len(self.elements):
            raise ValueError("labels/elements length mismatch")
        Povm(self.dim, self.elements)  # povm invariants
        if not self.outcome_counts:
            n = len(self.outcome_labels[0])
            self.outcome_counts = tuple(
                1 + max(lab[x] for lab in self.outcome_labels) for x in range(n)
            )

    def marginal(self, x: int) -> Povm:
        """Sum over all-but-one label index; reproduces measurement x."""
        els = [np.zeros((self.dim, self.dim), dtype=complex) for _ in range(self.outcome_counts[x])]
        for lab, g in zip(self.outcome_labels, self.elements):
            els[lab[x]] += g
        return Povm(self.dim, els)


def validate(measurements, dim: int | None = None) -> dict:
    """Diagnostic report for raw measurement data; never raises.

    measurements: an Assemblage, a Povm, or a list of lists of matrices.
    Returns per-element minimum eigenvalues, Hermiticity deviations and
    per-measurement normalisation residuals.
    """
    if isinstance(measurements, Assemblage):
        raw = [m.elements for m in measurements.measurements]
        dim = measurements.dim
    elif isinstance(measurements, Povm):
        raw = [measurements.elements]
        dim = measurements.dim
    else:
        raw = [[np.asarray(e, dtype=complex) for e in m] for m in measurements]
        dim = dim or raw[0][0].shape[0]
    report: dict = {"dim": dim, "measurements": []}
    ok = True
    for mx in raw:
        entry = {"min_eigenvalues": [], "hermiticity": [], "normalisation_residual": None}
        total = np.zeros((dim, dim), dtype=complex)
        for e in mx:
            herm = float(np.abs(e - e.conj().T).max())
            entry["hermiticity"].append(herm)
            he = linalg.hermitianize(e)
            mev = linalg.min_eigenvalue(he)
            entry["min_eigenvalues"].append(mev)
            total += he
            if herm > linalg.HERM_TOL or mev < -ELEMENT_PSD_TOL:
                ok = False
        resid = float(np.abs(total - np.eye(dim)).max())
        entry["normalisation_residual"] = resid
        if resid > NORMALISATION_TOL:
            ok = False
        report["measurements"].append(entry)
    report["valid"] = ok
    return report


def truncate(a: Assemblage, p: linalg.Projector) -> Assemblage:
    """Conjugate every element by the projector and re-read on its range.

    Output lives in dimension p.rank, expressed in the orthonormal basis
    p.basis; per measurement the truncated elements again sum to the
    subspace identity.  Zero elements are retained with their labels.
    """
    if p.dim != a.dim:
        raise ValueError(f"projector dimension {p.dim} != assemblage dimension {a.dim}")
    if p.rank < 1:
        raise ValueError("projector has rank 0")
    b = p.basis
    out = []
    for m in a.measurements:
        els = [linalg.hermitianize(b.conj().T @ e @ b) for e in m.elements]
        out.append(Povm(p.rank, els))
    return Assemblage(p.rank, out)


def binarisations(m: Povm) -> list[tuple[tuple[int, ...], Povm]]:
    """All two-outcome coarse-grainings (S, complement), S ∋ outcome 0.

    One entry per complementary pair of nonempty proper subsets; the stored
    subset is the one containing the smallest outcome index.  A k-outcome
    POVM has 2^(k-1) - 1 binarisations.
    """
    k = m.n_outcomes
    if k < 2:
        return []
    out = []
    for r in range(0, k - 1):
        for rest in itertools.combinations(range(1, k), r):
            subset = (0,) + rest
            e = sum(m.elements[i] for i in subset)
            out.append((subset, Povm(m.dim, [e, np.eye(m.dim) - e])))
    return out


def coarse_grain(m: Povm, partition) -> Povm:
    """Merge outcomes by summing over the cells of a partition."""
    cells = [tuple(c) for c in partition]
    seen = sorted(i for c in cells for i in c)
    if seen != list(range(m.n_outcomes)):
        raise ValueError(f"partition {cells} does not cover outcomes 0..{m.n_outcomes - 1} exactly once")
    els = [sum(m.elements[i] for i in c) for c in cells]
    return Povm(m.dim, els)


def depolarise(a: Assemblage, eta: float) -> Assemblage:
    """Mix every element with tr(E) * identity / d at weight 1 - eta."""
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"eta must lie in [0, 1], got {eta}")
    d = a.dim
    eye = np.eye(d)
    out = []
    for m in a.measurements:
        els = [eta * e + (1 - eta) * (np.trace(e).real / d) * eye for e in m.elements]
        out.append(Povm(d, els))
    return Assemblage(d, out)


def post_process(parent: Povm | ParentPovm, kernels) -> Assemblage:
    """Classical post-processing M_{a|x} = sum_λ p(a|x,λ) G_λ.

    kernels: one (n_outcomes, n_labels) array per setting; every column must
    be a probability distribution over a.
    """
    gs = parent.elements
    d = parent.dim
    out = []
    for x, ker in enumerate(kernels):
        k = np.asarray(ker, dtype=float)
        if k.shape[1] != len(gs):
            raise ValueError(f"kernel {x} has {k.shape[1]} labels, parent has {len(gs)}")
        if np.abs(k.sum(axis=0) - 1.0).max() > 1e-10 or k.min() < -1e-12:
            raise ValueError(f"kernel {x} columns are not probability distributions")
        els = [sum(k[a, l] * gs[l] for l in range(len(gs))) for a in range(k.shape[0])]
        out.append(Povm(d, els))
    return Assemblage(d, out)


def from_basis(vectors) -> Povm:
    """Rank-one PVM from an orthonormal basis."""
    vs = [np.asarray(v, dtype=complex).ravel() for v in vectors]
    d = vs[0].size
    if len(vs) != d:
        raise ValueError(f"need {d} vectors for a basis, got {len(vs)}")
    gram = np.array([[np.vdot(u, v) for v in vs] for u in vs])
    if np.abs(gram - np.eye(d)).max() > 1e-10:
        raise ValueError("vectors are not orthonormal")
    return Povm(d, [np.outer(v, v.conj()) for v in vs])


def random_povm(d: int, n_outcomes: int, rng: np.random.Generator) -> Povm:
    """Random POVM: Ginibre blocks G_i = W_i W_i† renormalised by S^(-1/2)."""
    gs = []
    for _ in range(n_outcomes):
        w = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        gs.append(w @ w.conj().T)
    s = sum(gs)
    vals, vecs = np.linalg.eigh(s)
    isq = vecs @ np.diag(1.0 / np.sqrt(vals)) @ vecs.conj().T
    return Povm(d, [linalg.hermitianize(isq @ g @ isq) for g in gs])
