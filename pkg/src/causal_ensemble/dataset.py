"""Claims-style records to analysis-ready feature rows.

The ingestion path is: read one event per CSV line, group into per-patient
records, apply the cohort filters, then emit one feature row per eligible
patient-year. The treatment column flags concurrent opioid/benzodiazepine
prescription coverage (at least one shared day in the year); the outcome
column flags an overdose-coded emergency or inpatient event.

Conventions the source data does not pin down, chosen here:

* a prescription for ``days_supply`` d filled on day t covers [t, t+d-1],
  so a single shared day already counts as overlap;
* the pre-treatment spending window runs Jan 1 through the first opioid
  fill date inclusive (denominator never below one day);
* age is computed as year minus birth year.
"""

from __future__ import annotations

import csv
import datetime as dt
import logging
from collections import defaultdict
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import fixtures
from .matrix import FeatureMatrix

logger = logging.getLogger(__name__)

EVENT_KINDS = ("rx_opioid", "rx_benzo", "rx_other", "inpatient", "outpatient", "er_visit")
RX_KINDS = ("rx_opioid", "rx_benzo", "rx_other")
SPENDING_KINDS = ("rx_opioid", "rx_benzo", "rx_other", "inpatient", "outpatient")
CSV_COLUMNS = ("patient_id", "birth_year", "sex", "date", "kind", "code", "days_supply", "spend")

CONTINUOUS_FEATURES = ("age", "sex", "visit_count", "daily_mme", "daily_spending")
TREATMENT_COL = "concurrent_rx"
OUTCOME_COL = "overdose"


class ClaimsError(ValueError):
    pass


@dataclass(frozen=True)
class Event:
    date: dt.date
    kind: str
    code: str
    days_supply: int = 0
    spend: float = 0.0

    def __post_init__(self):
        if self.kind not in EVENT_KINDS:
            raise ClaimsError(f"unknown event kind {self.kind!r}")
        if self.days_supply < 0:
            raise ClaimsError("days_supply must be >= 0")
        if self.kind not in RX_KINDS and self.days_supply != 0:
            raise ClaimsError(f"non-rx event {self.kind!r} has days_supply {self.days_supply}")
        if self.spend < 0:
            raise ClaimsError("spend must be >= 0")

    def interval(self) -> tuple[dt.date, dt.date] | None:
        """Coverage interval of an rx event; None when it covers no days."""
        if self.kind not in RX_KINDS or self.days_supply < 1:
            return None
        return (self.date, self.date + dt.timedelta(days=self.days_supply - 1))


@dataclass(frozen=True)
class ClaimsRecord:
    patient_id: str
    birth_year: int
    sex: str
    events: tuple[Event, ...] = ()

    def __post_init__(self):
        if self.sex not in ("M", "F"):
            raise ClaimsError(f"sex must be M or F, got {self.sex!r}")
        object.__setattr__(self, "events", tuple(self.events))

    def events_in_year(self, year: int) -> list[Event]:
        return [e for e in self.events if e.date.year == year]


@dataclass(frozen=True)
class CohortConfig:
    min_age: int = 18
    max_age: int = 64
    exclude_codes: frozenset[str] = field(default_factory=lambda: fixtures.CANCER_HISTORY_CODES)
    require_opioid_rx: bool = True
    study_years: tuple[int, int] = (2001, 2013)

    def __post_init__(self):
        if self.min_age > self.max_age:
            raise ClaimsError(f"min_age {self.min_age} > max_age {self.max_age}")
        if self.study_years[0] > self.study_years[1]:
            raise ClaimsError("study_years must be (first, last) with first <= last")
        object.__setattr__(self, "exclude_codes", frozenset(self.exclude_codes))

    def years(self) -> range:
        return range(self.study_years[0], self.study_years[1] + 1)

    def age_in(self, year: int, birth_year: int) -> int:
        return year - birth_year

    def age_ok(self, year: int, birth_year: int) -> bool:
        return self.min_age <= self.age_in(year, birth_year) <= self.max_age


# -- CSV ingestion ----------------------------------------------------------


def read_claims_csv(path: str | Path) -> tuple[list[ClaimsRecord], list[str]]:
    """Parse the one-event-per-line claims CSV.

    Returns (records, diagnostics). A row with a malformed date or a missing
    numeric field invalidates that patient's whole record: silently keeping a
    partial event history would bias every downstream count.
    """
    path = Path(path)
    by_patient: dict[str, dict] = {}
    bad_patients: dict[str, list[str]] = defaultdict(list)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != list(CSV_COLUMNS):
            raise ClaimsError(f"expected header {','.join(CSV_COLUMNS)} in {path}")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != len(CSV_COLUMNS):
                raise ClaimsError(f"{path}:{lineno}: expected {len(CSV_COLUMNS)} fields")
            pid = row[0].strip()
            try:
                event, birth_year, sex = _parse_event_row(row)
            except ClaimsError as exc:
                bad_patients[pid].append(f"{path.name}:{lineno}: {exc}")
                continue
            slot = by_patient.setdefault(pid, {"birth_year": birth_year, "sex": sex, "events": []})
            if slot["birth_year"] != birth_year or slot["sex"] != sex:
                bad_patients[pid].append(f"{path.name}:{lineno}: inconsistent demographics")
                continue
            slot["events"].append(event)

    diagnostics = [msg for msgs in bad_patients.values() for msg in msgs]
    records = [
        ClaimsRecord(pid, slot["birth_year"], slot["sex"], tuple(slot["events"]))
        for pid, slot in by_patient.items()
        if pid not in bad_patients
    ]
    records.sort(key=lambda r: r.patient_id)
    return records, diagnostics


def _parse_event_row(row: Sequence[str]) -> tuple[Event, int, str]:
    _, birth_year_s, sex, date_s, kind, code, days_supply_s, spend_s = (c.strip() for c in row)
    for label, cell in (("birth_year", birth_year_s), ("days_supply", days_supply_s), ("spend", spend_s)):
        if cell == "":
            raise ClaimsError(f"missing numeric field {label}")
    try:
        date = dt.date.fromisoformat(date_s)
    except ValueError:
        raise ClaimsError(f"malformed date {date_s!r}") from None
    try:
        birth_year = int(birth_year_s)
        days_supply = int(days_supply_s)
        spend = float(spend_s)
    except ValueError as exc:
        raise ClaimsError(f"bad numeric field: {exc}") from None
    event = Event(date=date, kind=kind, code=code, days_supply=days_supply, spend=spend)
    if sex not in ("M", "F"):
        raise ClaimsError(f"sex must be M or F, got {sex!r}")
    return event, birth_year, sex


# -- cohort restriction ------------------------------------------------------


def build_cohort(records: Iterable[ClaimsRecord], cfg: CohortConfig) -> list[ClaimsRecord]:
    """Keep exactly the patients passing all restriction filters.

    The filters are independent predicates of each record (no exclusion
    code; some in-window event year at an eligible age; at least one
    opioid fill in the window), so their order cannot change the result
    and reapplication is a no-op.
    """
    kept = []
    for record in records:
        if _has_excluded_code(record, cfg) or not _age_eligible(record, cfg):
            continue
        if cfg.require_opioid_rx and not _has_opioid_rx(record, cfg):
            continue
        kept.append(record)
    return kept


def _has_excluded_code(record: ClaimsRecord, cfg: CohortConfig) -> bool:
    return any(e.code in cfg.exclude_codes for e in record.events)


def _age_eligible(record: ClaimsRecord, cfg: CohortConfig) -> bool:
    return any(
        e.date.year in cfg.years() and cfg.age_ok(e.date.year, record.birth_year)
        for e in record.events
    )


def _has_opioid_rx(record: ClaimsRecord, cfg: CohortConfig) -> bool:
    return any(e.kind == "rx_opioid" and e.date.year in cfg.years() for e in record.events)


# -- feature computation -----------------------------------------------------


def overlap_days(a: tuple[dt.date, dt.date], b: tuple[dt.date, dt.date]) -> int:
    """Days in the intersection of two inclusive day intervals (0 if disjoint)."""
    for start, end in (a, b):
        if start > end:
            raise ClaimsError(f"inverted interval [{start}, {end}]")
    start = max(a[0], b[0])
    end = min(a[1], b[1])
    return max(0, (end - start).days + 1)


def concurrency_flag(events: Sequence[Event], cough_cold_codes: frozenset[str] | None = None) -> int:
    """1 iff some opioid coverage day falls inside benzodiazepine coverage.

    Expects the events of a single patient-year. Opioid fills whose code is
    on the cough/cold list cast no coverage before the overlap test.
    """
    if cough_cold_codes is None:
        cough_cold_codes = fixtures.COUGH_COLD_HYDROCODONE_CODES
    years = {e.date.year for e in events}
    if len(years) > 1:
        raise ClaimsError(f"events span multiple calendar years: {sorted(years)}")
    opioid = [
        iv
        for e in events
        if e.kind == "rx_opioid" and e.code not in cough_cold_codes and (iv := e.interval())
    ]
    benzo = [iv for e in events if e.kind == "rx_benzo" and (iv := e.interval())]
    for a in opioid:
        for b in benzo:
            if overlap_days(a, b) >= 1:
                return 1
    return 0


def daily_spending(events: Sequence[Event], first_opioid_date: dt.date) -> float:
    """Mean daily spend from Jan 1 up to (excluding) the first opioid fill.

    Claims dated on or after the fill date do not count; the denominator is
    the day count Jan 1 .. fill date inclusive, so a Jan 1 fill divides by 1.
    """
    jan1 = dt.date(first_opioid_date.year, 1, 1)
    total = sum(
        e.spend
        for e in events
        if e.kind in SPENDING_KINDS and e.date < first_opioid_date and e.date.year == first_opioid_date.year
    )
    days = (first_opioid_date - jan1).days + 1
    return total / days


def _days_in_year(year: int) -> int:
    return (dt.date(year, 12, 31) - dt.date(year, 1, 1)).days + 1


def to_feature_matrix(
    cohort: Sequence[ClaimsRecord],
    code_vocabulary: Sequence[str],
    cfg: CohortConfig | None = None,
    cough_cold_codes: frozenset[str] | None = None,
    overdose_codes: frozenset[str] | None = None,
) -> FeatureMatrix:
    """One row per eligible patient-year of the cohort.

    Emits a binary indicator column per vocabulary code, the five derived
    continuous columns, the concurrency treatment flag and the overdose
    outcome flag. Codes seen in the data but absent from the vocabulary are
    ignored; the total is logged. The ``daily_mme`` column is opioid supply
    days per calendar day, a stand-in intensity measure: the event schema
    carries no drug strength.
    """
    cfg = cfg or CohortConfig()
    if cough_cold_codes is None:
        cough_cold_codes = fixtures.COUGH_COLD_HYDROCODONE_CODES
    if overdose_codes is None:
        overdose_codes = fixtures.OVERDOSE_CODES
    vocabulary = list(code_vocabulary)
    if len(set(vocabulary)) != len(vocabulary):
        raise ClaimsError("duplicate codes in vocabulary")
    clash = set(vocabulary) & (set(CONTINUOUS_FEATURES) | {TREATMENT_COL, OUTCOME_COL})
    if clash:
        raise ClaimsError(f"vocabulary codes collide with feature names: {sorted(clash)}")
    vocab_index = {code: j for j, code in enumerate(vocabulary)}

    rows: list[list[float]] = []
    unknown_codes = 0
    for record in cohort:
        for year in cfg.years():
            events = record.events_in_year(year)
            opioid_fills = [e for e in events if e.kind == "rx_opioid"]
            if not opioid_fills or not cfg.age_ok(year, record.birth_year):
                continue
            code_flags = [0.0] * len(vocabulary)
            for e in events:
                j = vocab_index.get(e.code)
                if j is None:
                    unknown_codes += 1
                else:
                    code_flags[j] = 1.0
            first_fill = min(e.date for e in opioid_fills)
            supply_days = sum(e.days_supply for e in opioid_fills)
            visit_count = sum(1 for e in events if e.kind in ("inpatient", "outpatient", "er_visit"))
            overdose = float(
                any(e.kind in ("er_visit", "inpatient") and e.code in overdose_codes for e in events)
            )
            rows.append(
                code_flags
                + [
                    float(cfg.age_in(year, record.birth_year)),
                    1.0 if record.sex == "F" else 0.0,
                    float(visit_count),
                    supply_days / _days_in_year(year),
                    daily_spending(events, first_fill),
                    float(concurrency_flag(events, cough_cold_codes)),
                    overdose,
                ]
            )
    if unknown_codes:
        logger.info("ignored %d event codes absent from the vocabulary", unknown_codes)

    names = vocabulary + list(CONTINUOUS_FEATURES) + [TREATMENT_COL, OUTCOME_COL]
    kinds = (
        ["binary"] * len(vocabulary)
        + ["continuous"] * len(CONTINUOUS_FEATURES)
        + ["binary", "binary"]
    )
    values = np.array(rows, dtype=float) if rows else np.empty((0, len(names)))
    return FeatureMatrix(names, kinds, values, treatment_col=TREATMENT_COL, outcome_col=OUTCOME_COL)
