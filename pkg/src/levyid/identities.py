"""Companion constructions and distributional identity checks.

Two identities are verified for every time-indexed family, both tied to a
pin time a > 0 on the working grid:

* tilting: size-biasing the law of psi by psi(a)/E psi(a) adds an
  independent single-jump companion process to psi;
* decomposition: psi splits into two independent pieces, the part built
  from jumps invisible at a (the conditional law given psi(a) = 0) plus
  the part built from jumps alive at a.

Both checks compare weighted empirical Laplace functionals over a panel.
"""

from __future__ import annotations

import numpy as np

from .core import (
    ConvSpec,
    ExpDecayKernel,
    IndicatorKernel,
    JumpLawSpec,
    LevyFunctionalPanel,
    Path,
    PoissonSpec,
    PowerCutoffKernel,
    ProcessSpec,
    SatoSpec,
    TabulatedKernel,
    TemperedStableSpec,
    TimeGrid,
    WeightedEnsemble,
    mean_function,
)
from .processes import sample_ensemble, sample_paths, values_at
from .randkit import (
    RngStream,
    sample_gamma,
    sample_size_biased_jump,
    sample_uniform,
)
from .statlab import (
    IdentityReport,
    build_identity_report,
    weighted_laplace_panel,
)

# substream tags; fixed so reports are reproducible from one master stream
_TAG_LHS = 1
_TAG_RHS_BASE = 2
_TAG_RHS_ADD = 3
_TAG_BOOT_LHS = 11
_TAG_BOOT_RHS = 12


def _kernel_reach(gen, kernel, a: float, n: int) -> np.ndarray:
    """Draw u on [0, a] with density f(u)/I(a); the response age of the
    size-biased jump."""
    total = kernel.integral(a)
    if total <= 0:
        raise ValueError("kernel mass I(a) vanishes; no jump is visible at a")
    if isinstance(kernel, IndicatorKernel):
        return gen.uniform(0.0, min(a, kernel.length), n)
    if isinstance(kernel, ExpDecayKernel):
        c = kernel.decay
        u = gen.random(n)
        return -np.log1p(u * np.expm1(-c * a)) / c
    if isinstance(kernel, PowerCutoffKernel):
        # rejection from uniform with envelope f(0) = 1
        b = min(a, kernel.length)
        out = np.empty(n)
        pending = np.arange(n)
        while pending.size:
            cand = gen.uniform(0.0, b, pending.size)
            acc = gen.random(pending.size) <= (1.0 + cand) ** (-kernel.power)
            out[pending[acc]] = cand[acc]
            pending = pending[~acc]
        return out
    if isinstance(kernel, TabulatedKernel):
        return _tabulated_reach(gen, kernel, a, n)
    raise TypeError(f"no reach sampler for {type(kernel).__name__}")


def _tabulated_reach(gen, kernel: TabulatedKernel, a: float, n: int) -> np.ndarray:
    # exact inverse CDF of the piecewise-linear density truncated to [0, a]
    ks = np.asarray(kernel.knots)
    vs = np.asarray(kernel.values)
    b = min(a, kernel.support_end)
    keep = ks < b
    ks = np.concatenate([ks[keep], [b]])
    vs = np.concatenate([vs[keep], [float(kernel(b))]])
    seg = 0.5 * (vs[1:] + vs[:-1]) * np.diff(ks)
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    q = gen.random(n) * cum[-1]
    i = np.clip(np.searchsorted(cum, q, side="right") - 1, 0, len(seg) - 1)
    r = q - cum[i]
    d = np.diff(ks)[i]
    f0 = vs[i]
    slope = (vs[i + 1] - f0) / d
    flat = np.abs(slope) < 1e-14
    safe_slope = np.where(flat, 1.0, slope)
    h_lin = r / np.maximum(f0, 1e-300)
    h_quad = (-f0 + np.sqrt(np.maximum(f0**2 + 2.0 * safe_slope * r, 0.0))) / safe_slope
    h = np.where(flat, h_lin, h_quad)
    return ks[i] + np.minimum(h, d)


def companion_values(rng: RngStream, spec: ProcessSpec, a: float, points, n: int) -> np.ndarray:
    """Realizations of the single-jump companion added under tilting at a."""
    if a <= 0:
        raise ValueError("pin time a must be positive")
    pts = np.asarray(points, dtype=float)
    if isinstance(spec, PoissonSpec):
        u = sample_uniform(rng.substream(1), n)
        return (pts[None, :] >= (a * u)[:, None]).astype(float)
    if isinstance(spec, TemperedStableSpec):
        u = sample_uniform(rng.substream(1), n)
        g = sample_gamma(rng.substream(2), 1.0 - spec.alpha, 1.0, n)
        return g[:, None] * (pts[None, :] >= (a * u)[:, None])
    if isinstance(spec, SatoSpec):
        u = sample_uniform(rng.substream(1), n)
        v = sample_size_biased_jump(rng.substream(2), spec.bdlp.law, n)
        birth = a * u ** (1.0 / spec.H)
        scale = a**spec.H * u * v
        return scale[:, None] * (pts[None, :] >= birth[:, None])
    if isinstance(spec, ConvSpec):
        gen = rng.substream(1).generator
        reach = _kernel_reach(gen, spec.kernel, a, n)
        loc = a - reach
        law = spec.z.law if isinstance(spec.z, JumpLawSpec) else spec.z
        v = sample_size_biased_jump(rng.substream(2), law, n)
        return v[:, None] * spec.kernel(pts[None, :] - loc[:, None])
    raise TypeError(f"no companion construction for {type(spec).__name__}")


def visible_values(rng: RngStream, spec: ProcessSpec, a: float, points, n: int) -> np.ndarray:
    """The component of psi carried by jumps alive at a.

    For the cumulative families this is a fresh path frozen at a; for
    moving averages it keeps exactly the driver jumps whose kernel response
    has not died out by a.
    """
    if a <= 0:
        raise ValueError("pin time a must be positive")
    pts = np.asarray(points, dtype=float)
    if isinstance(spec, (PoissonSpec, TemperedStableSpec, SatoSpec)):
        return values_at(rng, spec, np.minimum(pts, a), n)
    if isinstance(spec, ConvSpec):
        from .processes import _conv_values

        return _conv_values(rng, spec, pts, n, jump_filter=lambda s: spec.kernel(a - s) > 0)
    raise TypeError(f"no decomposition for {type(spec).__name__}")


def hidden_values(rng: RngStream, spec: ProcessSpec, a: float, points, n: int) -> np.ndarray:
    """The law of psi conditioned to vanish at a.

    Cumulative families restart after a (psi(t or a) - psi(a) on one fresh
    realization); moving averages keep the driver jumps dead at a.
    """
    if a <= 0:
        raise ValueError("pin time a must be positive")
    pts = np.asarray(points, dtype=float)
    if isinstance(spec, (PoissonSpec, TemperedStableSpec, SatoSpec)):
        aug = np.concatenate([np.maximum(pts, a), [a]])
        vals = values_at(rng, spec, aug, n)
        return vals[:, :-1] - vals[:, -1:]
    if isinstance(spec, ConvSpec):
        from .processes import _conv_values

        return _conv_values(rng, spec, pts, n, jump_filter=lambda s: spec.kernel(a - s) <= 0)
    raise TypeError(f"no decomposition for {type(spec).__name__}")


def sample_tilt_companion(rng: RngStream, spec: ProcessSpec, a: float, grid: TimeGrid) -> Path:
    """One realization of the tilting companion on the grid."""
    return Path(grid, tuple(companion_values(rng, spec, a, grid.points, 1)[0]))


def sample_visible_component(rng: RngStream, spec: ProcessSpec, a: float, grid: TimeGrid) -> Path:
    """One realization of the component alive at a."""
    return Path(grid, tuple(visible_values(rng, spec, a, grid.points, 1)[0]))


def sample_hidden_component(rng: RngStream, spec: ProcessSpec, a: float, grid: TimeGrid) -> Path:
    """One realization of the conditional law given psi(a) = 0."""
    return Path(grid, tuple(hidden_values(rng, spec, a, grid.points, 1)[0]))


def tilted_ensemble(
    rng: RngStream, spec: ProcessSpec, a: float, grid: TimeGrid, n: int, workers: int = 1
) -> WeightedEnsemble:
    """psi-paths weighted by psi(a) / E psi(a); the exact analytic normalizer
    keeps the weights mean-one."""
    ia = int(grid.index_of([a])[0])
    mean_a = mean_function(spec, a)
    if mean_a <= 0:
        raise ValueError("E psi(a) must be positive to tilt at a")
    values = sample_paths(rng, spec, grid, n, workers)
    weights = values[:, ia] / mean_a
    return WeightedEnsemble(grid, values, weights)


def verify_tilting_identity(
    rng: RngStream,
    spec: ProcessSpec,
    a: float,
    grid: TimeGrid,
    panel: LevyFunctionalPanel,
    n: int,
    z_crit: float = 3.0,
    b: int = 500,
    workers: int = 1,
) -> IdentityReport:
    """Size-biased psi against psi + companion, on independent streams."""
    lhs_ens = tilted_ensemble(rng.substream(_TAG_LHS), spec, a, grid, n, workers)
    base = sample_paths(rng.substream(_TAG_RHS_BASE), spec, grid, n, workers)
    add = sample_ensemble(
        lambda stream, m: companion_values(stream, spec, a, grid.points, m),
        rng.substream(_TAG_RHS_ADD),
        n,
        workers,
    )
    rhs_ens = WeightedEnsemble(grid, base + add)
    lhs, lhs_se = weighted_laplace_panel(lhs_ens, panel, b, rng.substream(_TAG_BOOT_LHS))
    rhs, rhs_se = weighted_laplace_panel(rhs_ens, panel, b, rng.substream(_TAG_BOOT_RHS))
    return build_identity_report(
        "tilting", panel, lhs, rhs, lhs_se, rhs_se, z_crit, n
    )


def verify_decomposition_identity(
    rng: RngStream,
    spec: ProcessSpec,
    a: float,
    grid: TimeGrid,
    panel: LevyFunctionalPanel,
    n: int,
    z_crit: float = 3.0,
    b: int = 500,
    workers: int = 1,
) -> IdentityReport:
    """psi against hidden + visible components drawn independently."""
    grid.index_of([a])  # the pin must sit on the working grid
    lhs_vals = sample_paths(rng.substream(_TAG_LHS), spec, grid, n, workers)
    hid = sample_ensemble(
        lambda stream, m: hidden_values(stream, spec, a, grid.points, m),
        rng.substream(_TAG_RHS_BASE),
        n,
        workers,
    )
    vis = sample_ensemble(
        lambda stream, m: visible_values(stream, spec, a, grid.points, m),
        rng.substream(_TAG_RHS_ADD),
        n,
        workers,
    )
    lhs_ens = WeightedEnsemble(grid, lhs_vals)
    rhs_ens = WeightedEnsemble(grid, hid + vis)
    lhs, lhs_se = weighted_laplace_panel(lhs_ens, panel, b, rng.substream(_TAG_BOOT_LHS))
    rhs, rhs_se = weighted_laplace_panel(rhs_ens, panel, b, rng.substream(_TAG_BOOT_RHS))
    return build_identity_report(
        "decomposition", panel, lhs, rhs, lhs_se, rhs_se, z_crit, n
    )
