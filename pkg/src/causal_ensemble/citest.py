"""Conditional-independence tests backing the constraint-based learners.

Two tests cover the column types the pipeline produces: partial-correlation
Fisher z for anything numeric, and a stratified G-squared for all-binary
queries. ``auto_test`` picks between them from column kinds, so callers
never mix a discrete test with a continuous conditioning variable.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np
from scipy import stats

from .matrix import FeatureMatrix

MAX_STATISTIC = 1e8  # cap for degenerate |rho| -> 1


class CiTestError(ValueError):
    pass


@dataclass(frozen=True)
class CiResult:
    statistic: float
    p_value: float
    dof: int  # conditioning-adjusted dof (g2) or effective n (fisher z)
    low_power: bool = False

    def independent_at(self, alpha: float) -> bool:
        """Independence decision; a low-power test abstains to 'independent'."""
        if self.low_power:
            return True
        return self.p_value >= alpha


def fisher_z(data: FeatureMatrix, x: str, y: str, z: frozenset[str] | set[str] = frozenset()) -> CiResult:
    """Partial-correlation z test of x _||_ y given z.

    The partial correlation comes from inverting the correlation submatrix
    over {x, y} | z; the statistic sqrt(n - |z| - 3) * atanh(rho) is compared
    to a standard normal.
    """
    z = sorted(z)
    if x == y or x in z or y in z:
        raise CiTestError("x, y and z must be disjoint")
    n = data.n_rows
    if n <= len(z) + 3:
        raise CiTestError(f"need n > |z| + 3, got n={n}, |z|={len(z)}")
    cols = [x, y] + list(z)
    block = data.columns(cols)
    sd = block.std(axis=0)
    constant = [cols[j] for j in range(len(cols)) if sd[j] == 0]
    if constant:
        raise CiTestError(f"constant column(s) {constant} in test set")
    corr = np.corrcoef(block, rowvar=False)
    if len(z) == 0:
        rho = corr[0, 1]
    else:
        try:
            precision = np.linalg.inv(corr)
        except np.linalg.LinAlgError:
            raise CiTestError(f"singular correlation matrix over {cols}") from None
        denom = precision[0, 0] * precision[1, 1]
        if denom <= 0 or not np.isfinite(denom):
            raise CiTestError(f"singular correlation matrix over {cols}")
        rho = -precision[0, 1] / np.sqrt(denom)
    rho = float(np.clip(rho, -1.0, 1.0))
    scale = np.sqrt(n - len(z) - 3)
    if abs(rho) >= 1.0:
        statistic = MAX_STATISTIC if rho > 0 else -MAX_STATISTIC
    else:
        statistic = float(np.clip(scale * np.arctanh(rho), -MAX_STATISTIC, MAX_STATISTIC))
    p_value = float(2.0 * stats.norm.sf(abs(statistic)))
    return CiResult(statistic, p_value, dof=n - len(z) - 3)


def g_squared(data: FeatureMatrix, x: str, y: str, z: frozenset[str] | set[str] = frozenset()) -> CiResult:
    """Stratified G-squared test for binary x _||_ y given binary z.

    Each observed stratum of z contributes a 2x2 likelihood-ratio term and
    (levels_x - 1)(levels_y - 1) degrees of freedom; strata where x or y is
    constant are skipped with the dof reduced accordingly. Heuristically
    low-powered tests (n < 10 * dof) are flagged and abstain to independence.
    """
    z = sorted(z)
    if x == y or x in z or y in z:
        raise CiTestError("x, y and z must be disjoint")
    for col in [x, y] + list(z):
        if data.kind_of(col) != "binary":
            raise CiTestError(f"g_squared requires binary columns, {col!r} is not")
    xv = data.column(x).astype(int)
    yv = data.column(y).astype(int)
    n = data.n_rows

    if z:
        zvals = data.columns(z).astype(int)
        # stratum id by binary encoding
        weights = 1 << np.arange(len(z))
        strata = zvals @ weights
    else:
        strata = np.zeros(n, dtype=int)

    g2 = 0.0
    dof = 0
    for s in np.unique(strata):
        mask = strata == s
        xs, ys = xv[mask], yv[mask]
        table = np.zeros((2, 2))
        for a, b in product((0, 1), (0, 1)):
            table[a, b] = np.count_nonzero((xs == a) & (ys == b))
        rows = table.sum(axis=1)
        cols_ = table.sum(axis=0)
        levels_x = np.count_nonzero(rows)
        levels_y = np.count_nonzero(cols_)
        if levels_x < 2 or levels_y < 2:
            continue  # degenerate stratum: contributes neither G2 nor dof
        total = table.sum()
        expected = np.outer(rows, cols_) / total
        with np.errstate(divide="ignore", invalid="ignore"):
            terms = np.where(table > 0, table * np.log(table / expected), 0.0)
        g2 += 2.0 * terms.sum()
        dof += (levels_x - 1) * (levels_y - 1)

    if dof == 0:
        return CiResult(0.0, 1.0, dof=0, low_power=True)
    p_value = float(stats.chi2.sf(g2, dof))
    return CiResult(float(g2), p_value, dof=dof, low_power=n < 10 * dof)


def auto_test(data: FeatureMatrix, x: str, y: str, z: frozenset[str] | set[str] = frozenset()) -> CiResult:
    """g_squared when every involved column is binary, fisher_z otherwise."""
    involved = [x, y] + sorted(z)
    if all(data.kind_of(c) == "binary" for c in involved):
        return g_squared(data, x, y, z)
    return fisher_z(data, x, y, z)
