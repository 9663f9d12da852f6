"""Supersample model and the exact / Monte-Carlo engines for CMI variants.

The central object is a ghost-sample array ("supersample") of shape n x 2
together with a selector bitstring s in {0,1}^n that picks one point per
row; ``select`` returns the chosen half, and the complement selector yields
the other half.  An algorithm enters as an :class:`AlgorithmKernel`: an
explicit, deterministic map from an n-point dataset to a finite output
distribution.  That representation makes the conditional law of the output
given the selector available in full, so the selection information

    I(A(z_s); S),   S uniform on {0,1}^n

can be computed exactly by enumerating the 2^n selectors.  On top of that
single primitive the module builds:

* ``cmi_exact_fixed``        -- exact value for one fixed supersample;
* ``cmi_distributional``     -- expectation over supersamples, exact by full
  enumeration of a finite point distribution or by Monte Carlo with a 95%
  normal-approximation confidence interval;
* ``cmi_distribution_free``  -- a max over caller-supplied candidate
  supersamples, flagged as a lower bound on the true supremum;
* ``ucmi_fixed``             -- the worst case over *all* selector laws,
  which equals the capacity of the channel s -> A(z_s) and is solved by
  Blahut-Arimoto with a monotone lower-bound bracket;
* ``ecmi_fixed``             -- the evaluated variant, where outputs are
  first pushed through a loss table over all 2n supersample points;
* ``compose_pair`` / ``compose_adaptive`` / ``postprocess`` -- kernel
  combinators matching the composition and data-processing behavior of the
  quantities above.

Kernels are immutable and the engines hold no shared mutable state.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Iterator, Mapping, Sequence

import numpy as np

from ._seeding import derive_seed
from .info_core import LOG2, FiniteDistribution, Nats

#: exact selector enumeration refuses beyond this many selectors.
SELECTOR_CAP = 2**20

#: exact supersample enumeration refuses beyond this many supersamples.
ENUMERATION_CAP = 10**7

#: 95% two-sided normal quantile used for every confidence interval.
Z_95 = 1.959963984540054


class ExactEnumerationError(ValueError):
    """Raised when an exact computation would exceed its enumeration cap.

    Callers should fall back to Monte Carlo explicitly; the engines never
    downgrade on their own.
    """


class ConvergenceError(RuntimeError):
    """Blahut-Arimoto failed to close its capacity bracket in time."""

    def __init__(self, message: str, bracket: tuple[float, float]):
        super().__init__(message)
        self.bracket = bracket


# ---------------------------------------------------------------------------
# supersamples and selectors
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Supersample:
    """An n x 2 array of data points; column 0/1 of row i are the two
    candidates for training position i."""

    grid: tuple[tuple[Any, Any], ...]

    def __post_init__(self) -> None:
        rows = tuple(tuple(row) for row in self.grid)
        if len(rows) < 1:
            raise ValueError("supersample needs at least one row")
        if any(len(row) != 2 for row in rows):
            raise ValueError("every supersample row must have exactly 2 entries")
        object.__setattr__(self, "grid", rows)

    @property
    def n(self) -> int:
        return len(self.grid)

    def points(self) -> tuple[Any, ...]:
        """All 2n points, row-major."""
        return tuple(p for row in self.grid for p in row)

    def to_json_obj(self) -> list:
        return [list(row) for row in self.grid]

    @classmethod
    def from_json_obj(cls, obj: Sequence[Sequence[Any]]) -> "Supersample":
        return cls(tuple((row[0], row[1]) for row in obj))


@dataclass(frozen=True)
class Selector:
    """A bitstring s in {0,1}^n choosing one point per supersample row."""

    bits: tuple[int, ...]

    def __post_init__(self) -> None:
        bits = tuple(int(b) for b in self.bits)
        if any(b not in (0, 1) for b in bits):
            raise ValueError(f"selector bits must be 0/1, got {bits!r}")
        object.__setattr__(self, "bits", bits)

    @property
    def n(self) -> int:
        return len(self.bits)

    def complement(self) -> "Selector":
        return Selector(tuple(1 - b for b in self.bits))

    @classmethod
    def from_int(cls, value: int, n: int) -> "Selector":
        return cls(tuple((value >> i) & 1 for i in range(n)))


def all_selectors(n: int) -> Iterator[Selector]:
    for v in range(2**n):
        yield Selector.from_int(v, n)


def select(supersample: Supersample, selector: Selector) -> tuple[Any, ...]:
    """The dataset indexed by the selector: entry i is grid[i][bits[i]]."""
    if selector.n != supersample.n:
        raise ValueError(
            f"selector length {selector.n} != supersample rows {supersample.n}"
        )
    return tuple(row[b] for row, b in zip(supersample.grid, selector.bits))


# ---------------------------------------------------------------------------
# algorithm kernels
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AlgorithmKernel:
    """An algorithm as an explicit map dataset -> finite output distribution.

    ``evaluate`` must be deterministic *as a map to distributions*: the same
    dataset always yields the identical table.  ``output_universe`` is the
    label set W when it is finite and known; ``None`` means the reachable
    output set is discovered per supersample (necessary e.g. for learners
    whose outputs are data-dependent real thresholds).  ``deterministic``
    marks kernels whose distributions are all point masses, which unlocks an
    entropy-only fast path in the exact engine.
    """

    evaluate: Callable[[tuple[Any, ...]], FiniteDistribution]
    output_universe: tuple[Any, ...] | None = None
    deterministic: bool = False
    name: str = ""
    certificate: Any = None
    # label-valued shortcut for deterministic kernels; engines use it to skip
    # building a point-mass table per dataset
    raw_map: Callable[[tuple[Any, ...]], Any] | None = None

    def __call__(self, dataset: tuple[Any, ...]) -> FiniteDistribution:
        dist = self.evaluate(tuple(dataset))
        if self.output_universe is not None:
            allowed = set(self.output_universe)
            stray = [lab for lab in dist.support() if lab not in allowed]
            if stray:
                raise ValueError(f"kernel output outside universe: {stray[:3]!r}")
        return dist

    @classmethod
    def deterministic_map(
        cls,
        fn: Callable[[tuple[Any, ...]], Any],
        output_universe: tuple[Any, ...] | None = None,
        name: str = "",
        certificate: Any = None,
    ) -> "AlgorithmKernel":
        """Wrap a deterministic dataset -> label function as a kernel."""
        return cls(
            evaluate=lambda ds: FiniteDistribution.point_mass(fn(ds)),
            output_universe=output_universe,
            deterministic=True,
            name=name,
            certificate=certificate,
            raw_map=fn,
        )

    @classmethod
    def constant(cls, label: Any = "w0") -> "AlgorithmKernel":
        return cls.deterministic_map(lambda ds: label, output_universe=(label,), name="constant")

    @classmethod
    def reveal_all(cls) -> "AlgorithmKernel":
        """Outputs its entire input dataset; the canonical maximal-CMI kernel."""
        return cls.deterministic_map(lambda ds: ds, name="reveal-all")


@dataclass(frozen=True)
class CmiEstimate:
    """A CMI-family value in nats with its estimation metadata.

    ``method`` is ``"exact"`` (ci_halfwidth must be 0) or ``"monte-carlo"``.
    ``lower_bound`` marks candidate-maximum results that only bound a
    supremum from below; it is advisory and not serialized.
    """

    value: float
    method: str
    ci_halfwidth: float = 0.0
    trials: int = 0
    seed: int | None = None
    lower_bound: bool = False
    fingerprint: str | None = None

    def __post_init__(self) -> None:
        if self.method not in ("exact", "monte-carlo"):
            raise ValueError(f"unknown method {self.method!r}")
        if self.method == "exact" and self.ci_halfwidth != 0.0:
            raise ValueError("exact estimates carry no confidence interval")
        if self.ci_halfwidth < 0.0:
            raise ValueError("negative ci_halfwidth")
        object.__setattr__(self, "value", float(Nats(self.value, slop=1e-9)))

    def to_json_obj(self) -> dict:
        return {
            "value_nats": self.value,
            "method": self.method,
            "ci": self.ci_halfwidth,
            "trials": self.trials,
            "seed": self.seed,
        }

    @classmethod
    def from_json_obj(cls, obj: Mapping[str, Any]) -> "CmiEstimate":
        return cls(
            value=obj["value_nats"],
            method=obj["method"],
            ci_halfwidth=obj["ci"],
            trials=obj["trials"],
            seed=obj["seed"],
        )


@dataclass(frozen=True)
class SupersampleSampler:
    """Draws supersamples distributed as D^{n x 2} from a derived seed.

    When ``point_distribution`` is set, D has known finite support and exact
    full enumeration over supp(D)^{2n} is available to the engines.
    """

    n: int
    draw_fn: Callable[[int], Supersample]
    point_distribution: FiniteDistribution | None = None

    def draw(self, seed: int) -> Supersample:
        ss = self.draw_fn(seed)
        if ss.n != self.n:
            raise ValueError(f"draw produced {ss.n} rows, expected {self.n}")
        return ss

    @classmethod
    def from_distribution(cls, dist: FiniteDistribution, n: int) -> "SupersampleSampler":
        labels = dist.labels()
        masses = np.array([dist.mass(lab) for lab in labels], dtype=float)
        masses = masses / masses.sum()

        def draw(seed: int) -> Supersample:
            rng = np.random.default_rng(seed)
            idx = rng.choice(len(labels), size=(n, 2), p=masses)
            return Supersample(tuple((labels[i], labels[j]) for i, j in idx))

        return cls(n=n, draw_fn=draw, point_distribution=dist)

    @classmethod
    def from_draw_fn(cls, fn: Callable[[int], Supersample], n: int) -> "SupersampleSampler":
        return cls(n=n, draw_fn=fn, point_distribution=None)


# ---------------------------------------------------------------------------
# exact engine
# ---------------------------------------------------------------------------


def _check_selector_cap(n: int, cap: int = SELECTOR_CAP) -> None:
    if 2**n > cap:
        raise ExactEnumerationError(
            f"2^{n} selector states exceed the cap of {cap}; "
            "too large for exact computation, use Monte Carlo over selectors "
            "or a structure-specific evaluator"
        )


def channel_matrix(
    supersample: Supersample, kernel: AlgorithmKernel
) -> tuple[np.ndarray, list[Any]]:
    """Conditional law P(w | s) as a dense 2^n x |W_reachable| matrix.

    Rows are selectors in integer order; columns are output labels in first
    encountered order (deterministic because selectors are enumerated in a
    fixed order).
    """
    n = supersample.n
    _check_selector_cap(n)
    columns: dict[Any, int] = {}
    rows: list[list[tuple[int, float]]] = []
    for sel in all_selectors(n):
        dist = kernel(select(supersample, sel))
        entries = []
        for label, mass in dist.atoms:
            if mass <= 0.0:
                continue
            if label not in columns:
                columns[label] = len(columns)
            entries.append((columns[label], mass))
        rows.append(entries)
    mat = np.zeros((2**n, len(columns)))
    for i, entries in enumerate(rows):
        for j, mass in entries:
            mat[i, j] = mass
    return mat, list(columns)


def mi_uniform_input(conditional: np.ndarray) -> float:
    """I(input; output) for a row-stochastic matrix with uniform input."""
    rows = conditional.shape[0]
    marginal = conditional.mean(axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.log(conditional) - np.log(marginal)[None, :]
        terms = np.where(conditional > 0.0, conditional * ratio, 0.0)
    return float(terms.sum() / rows)


def _entropy_of_counts(counts: Iterable[int], total: int) -> float:
    acc = 0.0
    for c in counts:
        if c > 0:
            p = c / total
            acc -= p * math.log(p)
    return acc


def cmi_exact_fixed(
    supersample: Supersample,
    kernel: AlgorithmKernel,
    *,
    selector_cap: int = SELECTOR_CAP,
) -> CmiEstimate:
    """Exact selection information I(A(z_s); S) for one fixed supersample.

    Enumerates all 2^n selectors.  For deterministic kernels this reduces to
    the entropy of the output under a uniform selector; in general it is the
    mutual information of the explicit joint built from the kernel's
    distribution tables.
    """
    n = supersample.n
    _check_selector_cap(n, selector_cap)
    if kernel.deterministic:
        fetch = kernel.raw_map or (lambda ds: kernel(ds).point_label())
        counts: dict[Any, int] = {}
        grid = supersample.grid
        for v in range(2**n):
            ds = tuple(grid[i][(v >> i) & 1] for i in range(n))
            label = fetch(ds)
            counts[label] = counts.get(label, 0) + 1
        value = _entropy_of_counts(counts.values(), 2**n)
        reachable = len(counts)
    else:
        mat, outputs = channel_matrix(supersample, kernel)
        value = mi_uniform_input(mat)
        reachable = len(outputs)
    _validate_cmi_value(value, n, reachable)
    return CmiEstimate(value=value, method="exact")


def _validate_cmi_value(value: float, n: int, reachable: int) -> None:
    if value < -1e-9:
        raise RuntimeError(f"negative selection information {value!r}")
    if value > n * LOG2 + 1e-9:
        raise RuntimeError(f"selection information {value!r} exceeds n log 2")
    if reachable >= 1 and value > math.log(max(reachable, 1)) + 1e-10:
        raise RuntimeError(
            f"selection information {value!r} exceeds log of {reachable} reachable outputs"
        )


def monte_carlo_mean(
    evaluator: Callable[[Supersample], float],
    sampler: SupersampleSampler,
    trials: int,
    seed: int,
) -> tuple[float, float, np.ndarray]:
    """Average an exact per-supersample evaluator over sampled supersamples.

    Returns (mean, 95% CI halfwidth, per-trial values).  Trial t draws with
    seed ``derive_seed(seed, t)`` so the result is independent of scheduling.
    """
    values = np.empty(trials)
    for t in range(trials):
        values[t] = evaluator(sampler.draw(derive_seed(seed, t)))
    mean = float(values.mean())
    sd = float(values.std(ddof=1)) if trials > 1 else 0.0
    return mean, Z_95 * sd / math.sqrt(trials), values


def cmi_distributional(
    kernel: AlgorithmKernel,
    sampler: SupersampleSampler,
    mode: str = "exact",
    trials: int = 1000,
    seed: int = 0,
    *,
    evaluator: Callable[[Supersample], float] | None = None,
) -> CmiEstimate:
    """CMI with respect to a distribution: E over supersamples of the exact
    per-supersample selection information.

    ``mode="exact"`` enumerates every supersample in supp(D)^{2n} (available
    only when the sampler carries a finite point distribution and the term
    count fits the cap).  ``mode="mc"`` averages exact inner values over
    sampled supersamples and reports a 95% confidence interval.

    ``evaluator`` optionally replaces the generic exact inner engine with a
    structure-specific exact evaluator (it must return the same number); the
    generic engine is the default.
    """
    inner = evaluator or (lambda ss: float(cmi_exact_fixed(ss, kernel).value))
    n = sampler.n
    if mode == "exact":
        dist = sampler.point_distribution
        if dist is None:
            raise ExactEnumerationError(
                "exact distributional CMI needs a finite point distribution"
            )
        support = [(lab, m) for lab, m in dist.atoms if m > 0.0]
        terms = len(support) ** (2 * n)
        if terms > ENUMERATION_CAP:
            raise ExactEnumerationError(
                f"{len(support)}^{2 * n} supersamples exceed the cap of "
                f"{ENUMERATION_CAP}; exact mode infeasible"
            )
        total = 0.0
        for combo in itertools.product(support, repeat=2 * n):
            weight = 1.0
            for _, m in combo:
                weight *= m
            rows = tuple((combo[2 * i][0], combo[2 * i + 1][0]) for i in range(n))
            total += weight * inner(Supersample(rows))
        value = total
        return CmiEstimate(value=value, method="exact")
    if mode == "mc":
        if trials < 10:
            raise ValueError(f"Monte Carlo needs at least 10 trials, got {trials}")
        mean, ci, _ = monte_carlo_mean(inner, sampler, trials, seed)
        return CmiEstimate(
            value=mean, method="monte-carlo", ci_halfwidth=ci, trials=trials, seed=seed
        )
    raise ValueError(f"unknown mode {mode!r}; expected 'exact' or 'mc'")


def cmi_distribution_free(
    kernel: AlgorithmKernel, candidates: Sequence[Supersample]
) -> CmiEstimate:
    """Max of the exact selection information over candidate supersamples.

    This is a *lower* bound on the distribution-free supremum (the true sup
    ranges over all supersamples); the result is flagged accordingly and is
    monotone in the candidate set.
    """
    if not candidates:
        raise ValueError("candidate set is empty")
    best = max(float(cmi_exact_fixed(ss, kernel).value) for ss in candidates)
    return CmiEstimate(value=best, method="exact", lower_bound=True)


# ---------------------------------------------------------------------------
# Blahut-Arimoto and universal CMI
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BlahutArimotoResult:
    capacity: float
    input_distribution: np.ndarray
    iterations: int
    bracket: tuple[float, float]
    lower_bounds: tuple[float, ...] = field(repr=False, default=())


def blahut_arimoto(
    channel: np.ndarray, tol: float = 1e-9, max_iters: int = 200_000
) -> BlahutArimotoResult:
    """Capacity of a discrete memoryless channel (rows = inputs, stochastic).

    Alternating maximization from the uniform input with the multiplicative
    update r(x) <- r(x) e^{D_x} / Z, where D_x = KL(p(.|x) || q_r).  At every
    iterate sum_x r(x) D_x <= C <= max_x D_x; iteration stops once the
    bracket is within ``tol``.  The per-iteration lower bounds are monotone
    nondecreasing and the returned capacity is the final lower bound.
    """
    mat = np.asarray(channel, dtype=float)
    if mat.ndim != 2 or mat.shape[0] < 1 or mat.shape[1] < 1:
        raise ValueError(f"channel must be a nonempty 2-D matrix, got {mat.shape}")
    if np.any(mat < -1e-12):
        raise ValueError("channel has negative entries")
    row_sums = mat.sum(axis=1)
    if np.any(np.abs(row_sums - 1.0) > 1e-9):
        raise ValueError("channel rows must each sum to 1")
    mat = np.clip(mat, 0.0, None) / row_sums[:, None]

    m = mat.shape[0]
    if m == 1:
        return BlahutArimotoResult(0.0, np.ones(1), 0, (0.0, 0.0), (0.0,))

    log_mat = np.where(mat > 0.0, np.log(np.where(mat > 0.0, mat, 1.0)), 0.0)
    r = np.full(m, 1.0 / m)
    lower_bounds: list[float] = []
    bracket = (0.0, math.inf)
    for iteration in range(1, max_iters + 1):
        q = r @ mat
        with np.errstate(divide="ignore"):
            log_q = np.where(q > 0.0, np.log(np.where(q > 0.0, q, 1.0)), 0.0)
        # D_x = sum_y p(y|x) (log p(y|x) - log q(y)); p=0 terms vanish.
        d = np.einsum("xy,xy->x", mat, np.where(mat > 0.0, log_mat - log_q[None, :], 0.0))
        lower = float(r @ d)
        upper = float(d.max())
        lower_bounds.append(lower)
        bracket = (lower, upper)
        if upper - lower <= tol:
            return BlahutArimotoResult(
                capacity=max(lower, 0.0),
                input_distribution=r,
                iterations=iteration,
                bracket=bracket,
                lower_bounds=tuple(lower_bounds),
            )
        shifted = d - d.max()
        r = r * np.exp(shifted)
        r = r / r.sum()
    raise ConvergenceError(
        f"capacity bracket {bracket} still wider than {tol} after {max_iters} iterations",
        bracket,
    )


def ucmi_fixed(
    supersample: Supersample,
    kernel: AlgorithmKernel,
    tol: float = 1e-9,
    max_iters: int = 200_000,
) -> CmiEstimate:
    """Universal CMI for one fixed supersample: the supremum of I(A(z_S); S)
    over arbitrary selector laws, i.e. the capacity of the channel
    s -> A(z_s), computed by Blahut-Arimoto.

    The first Blahut-Arimoto lower bound is exactly the uniform-selector
    value, so the result always dominates ``cmi_exact_fixed`` up to ``tol``.
    """
    mat, outputs = channel_matrix(supersample, kernel)
    result = blahut_arimoto(mat, tol=tol, max_iters=max_iters)
    _validate_cmi_value(result.capacity, supersample.n, len(outputs))
    return CmiEstimate(value=result.capacity, method="exact")


# ---------------------------------------------------------------------------
# evaluated CMI
# ---------------------------------------------------------------------------


def ecmi_fixed(
    supersample: Supersample,
    kernel: AlgorithmKernel,
    loss: Any,
) -> CmiEstimate:
    """Evaluated CMI: selection information of the loss profile of the output.

    Each output w is replaced by its evaluation vector
    ``(loss(w, z[i][j]))`` over all 2n supersample points, outputs with
    identical vectors are merged, and the exact mutual information against a
    uniform selector is returned.  By data processing this never exceeds
    ``cmi_exact_fixed`` (the merge is a deterministic coarsening).  Losses
    must produce exactly representable values, since merging uses exact
    equality of vectors.

    ``loss`` is either a callable ``(w, point) -> value`` or an object with
    an ``eval`` attribute of that shape.
    """
    loss_eval = getattr(loss, "eval", loss)
    if not callable(loss_eval):
        raise TypeError("loss must be callable or carry a callable .eval")
    mat, outputs = channel_matrix(supersample, kernel)
    points = supersample.points()
    groups: dict[tuple, list[int]] = {}
    for j, w in enumerate(outputs):
        vec = tuple(loss_eval(w, pt) for pt in points)
        groups.setdefault(vec, []).append(j)
    merged = np.zeros((mat.shape[0], len(groups)))
    for k, cols in enumerate(groups.values()):
        merged[:, k] = mat[:, cols].sum(axis=1)
    value = mi_uniform_input(merged)
    _validate_cmi_value(value, supersample.n, len(groups))
    return CmiEstimate(value=value, method="exact")


# ---------------------------------------------------------------------------
# kernel combinators
# ---------------------------------------------------------------------------


def compose_pair(a1: AlgorithmKernel, a2: AlgorithmKernel) -> AlgorithmKernel:
    """Non-adaptive composition: run both kernels on the same dataset with
    independent randomness; outputs are (w1, w2) pairs under the product
    law.  Selection information is subadditive under this composition."""

    def evaluate(ds: tuple[Any, ...]) -> FiniteDistribution:
        d1, d2 = a1(ds), a2(ds)
        atoms = []
        for l1, m1 in d1.atoms:
            if m1 <= 0.0:
                continue
            for l2, m2 in d2.atoms:
                if m2 <= 0.0:
                    continue
                atoms.append(((l1, l2), m1 * m2))
        return FiniteDistribution(tuple(atoms))

    universe = None
    if a1.output_universe is not None and a2.output_universe is not None:
        universe = tuple(itertools.product(a1.output_universe, a2.output_universe))
    return AlgorithmKernel(
        evaluate=evaluate,
        output_universe=universe,
        deterministic=a1.deterministic and a2.deterministic,
        name=f"({a1.name}x{a2.name})",
    )


def compose_adaptive(
    a1: AlgorithmKernel, family: Callable[[Any], AlgorithmKernel] | Mapping[Any, AlgorithmKernel]
) -> AlgorithmKernel:
    """Adaptive composition: feed A1's output w1 into the kernel family and
    release only the second stage's output, A2(z, A1(z))."""
    pick = family if callable(family) else family.__getitem__

    def evaluate(ds: tuple[Any, ...]) -> FiniteDistribution:
        first = a1(ds)
        acc: dict[Any, float] = {}
        for w1, m1 in first.atoms:
            if m1 <= 0.0:
                continue
            second = pick(w1)(ds)
            for w2, m2 in second.atoms:
                if m2 <= 0.0:
                    continue
                acc[w2] = acc.get(w2, 0.0) + m1 * m2
        return FiniteDistribution.from_dict(acc)

    return AlgorithmKernel(evaluate=evaluate, name=f"adaptive({a1.name})")


def postprocess(
    kernel: AlgorithmKernel,
    mapping: Mapping[Any, FiniteDistribution | Mapping[Any, float]],
) -> AlgorithmKernel:
    """Push kernel outputs through a row-stochastic map W -> W'.

    Every row of ``mapping`` must itself be a distribution (rows that do not
    sum to 1 are rejected by construction).  Selection information never
    increases under postprocessing.
    """
    rows: dict[Any, FiniteDistribution] = {}
    for w, row in mapping.items():
        rows[w] = row if isinstance(row, FiniteDistribution) else FiniteDistribution.from_dict(row)

    def evaluate(ds: tuple[Any, ...]) -> FiniteDistribution:
        dist = kernel(ds)
        acc: dict[Any, float] = {}
        for w, m in dist.atoms:
            if m <= 0.0:
                continue
            if w not in rows:
                raise KeyError(f"postprocessing map does not cover output {w!r}")
            for w2, m2 in rows[w].atoms:
                if m2 > 0.0:
                    acc[w2] = acc.get(w2, 0.0) + m * m2
        return FiniteDistribution.from_dict(acc)

    universe = tuple(
        dict.fromkeys(lab for row in rows.values() for lab in row.labels())
    )
    return AlgorithmKernel(evaluate=evaluate, output_universe=universe, name=f"post({kernel.name})")
