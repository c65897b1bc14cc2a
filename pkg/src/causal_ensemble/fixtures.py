"""Illustrative code lists and reference counts shipped with the package.

Real deployments swap in their own dictionaries; these small sets exist so
the pipeline runs end to end out of the box and so arithmetic checks have
stable inputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .matrix import FeatureMatrix

# Hydrocodone cough/cold formulations whose fills are ignored when
# computing opioid coverage (configurable; illustrative subset).
COUGH_COLD_HYDROCODONE_CODES = frozenset(
    {
        "hydrocodone-homatropine",
        "hydrocodone-chlorpheniramine",
        "hydrocodone-guaifenesin",
        "hydrocodone-pseudoephedrine",
    }
)

# Cancer-history exclusion codes (illustrative ICD-9 subset).
CANCER_HISTORY_CODES = frozenset({"162.9", "174.9", "185", "V10.3", "V10.11"})

# Opioid poisoning / adverse-event codes marking the outcome (illustrative).
OVERDOSE_CODES = frozenset({"965.00", "965.01", "965.02", "965.09", "E850.0", "E850.1", "E850.2"})

# Small comorbidity vocabulary for demos and tests.
DEMO_CODE_VOCABULARY = (
    "250.00",  # diabetes mellitus
    "428.0",   # congestive heart failure
    "401.9",   # hypertension
    "311",     # depressive disorder
)


@dataclass(frozen=True)
class CrossTab:
    """2x2 outcome-by-treatment counts."""

    treated_cases: int
    treated_total: int
    control_cases: int
    control_total: int

    @property
    def n(self) -> int:
        return self.treated_total + self.control_total

    @property
    def cases(self) -> int:
        return self.treated_cases + self.control_cases


# Reference counts for a co-prescribing cohort: overdose cases among
# opioid+benzodiazepine users vs opioid-only users. Used by the regression
# and attributable-fraction arithmetic checks.
COPRESCRIBING_CROSSTAB = CrossTab(
    treated_cases=63,
    treated_total=5_488,
    control_cases=118,
    control_total=53_507,
)


def crosstab_matrix(ct: CrossTab = COPRESCRIBING_CROSSTAB) -> FeatureMatrix:
    """Expand 2x2 counts into a two-column treatment/outcome FeatureMatrix."""
    treatment = np.concatenate([np.ones(ct.treated_total), np.zeros(ct.control_total)])
    outcome = np.concatenate(
        [
            np.ones(ct.treated_cases),
            np.zeros(ct.treated_total - ct.treated_cases),
            np.ones(ct.control_cases),
            np.zeros(ct.control_total - ct.control_cases),
        ]
    )
    return FeatureMatrix(
        ["concurrent_rx", "overdose"],
        ["binary", "binary"],
        np.column_stack([treatment, outcome]),
        treatment_col="concurrent_rx",
        outcome_col="overdose",
    )
