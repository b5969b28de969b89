"""CSV ingestion and export of connectome datasets.

Edge file columns: ``subject,region_a,region_b,count,mean_length`` with
``mean_length`` empty when ``count`` is 0. Unlisted edges have count 0.
Covariate file columns: ``subject`` followed by the covariates in model
order, e.g. ``mci,ad,male,age``. Errors report the 1-based file line
(the header is line 1).
"""

from __future__ import annotations

import logging
from collections.abc import Sequence
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd

from graphon_connectome.artifacts import atomic_open
from graphon_connectome.exceptions import DatasetError, RegionMismatchError
from graphon_connectome.models import ConnectomeDataset

logger = logging.getLogger(__name__)

EDGE_COLUMNS = ("subject", "region_a", "region_b", "count", "mean_length")
AGE_COLUMN = "age"


def _read(path: Path, required: Sequence[str]) -> pd.DataFrame:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"input file not found: {path}")
    try:
        frame = pd.read_csv(
            path, dtype=str, keep_default_na=False, skipinitialspace=True
        )
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as exc:
        raise DatasetError(f"cannot parse {path}: {exc}") from exc
    frame.columns = [c.strip() for c in frame.columns]
    missing = [c for c in required if c not in frame.columns]
    if missing:
        raise DatasetError(f"{path} is missing columns {missing}", line=1)
    return frame


def _number(raw: str, what: str, line: int, subject: str | None = None) -> float:
    try:
        value = float(raw)
    except ValueError:
        raise DatasetError(
            f"{what} {raw!r} is not a number", line=line, subject=subject
        ) from None
    if not np.isfinite(value):
        raise DatasetError(f"{what} must be finite", line=line, subject=subject)
    return value


def read_covariates(
    path: Path, age_center: float | None = None
) -> tuple[list[str], list[str], np.ndarray, float]:
    """Subject ids, covariate names, covariate rows and the age centre removed.

    The age column is centred at its sample mean unless ``age_center`` is given.
    """
    frame = _read(path, ["subject"])
    names = [c for c in frame.columns if c != "subject"]
    subjects: list[str] = []
    rows = np.empty((len(frame), len(names)))
    for idx, record in enumerate(frame.itertuples(index=False)):
        line = idx + 2
        values = dict(zip(frame.columns, record))
        subject = values["subject"].strip()
        if not subject:
            raise DatasetError("empty subject identifier", line=line)
        if subject in subjects:
            raise DatasetError("duplicate subject", line=line, subject=subject)
        subjects.append(subject)
        for l, name in enumerate(names):
            raw = values[name].strip()
            if raw == "":
                raise DatasetError(
                    f"missing value for covariate {name}", line=line, subject=subject
                )
            rows[idx, l] = _number(raw, f"covariate {name}", line, subject)
    center = 0.0
    if AGE_COLUMN in names:
        col = names.index(AGE_COLUMN)
        if age_center is not None:
            center = age_center
        elif len(rows):
            center = float(rows[:, col].mean())
        rows[:, col] -= center
    return subjects, names, rows, center


def load_dataset(
    edges_path: Path,
    covariates_path: Path,
    *,
    self_edges: bool = False,
    region_names: Sequence[str] | None = None,
    age_center: float | None = None,
) -> ConnectomeDataset:
    """Read the edge and covariate CSVs into a validated dataset.

    Regions are ordered by first appearance in the edge file unless
    ``region_names`` fixes the order (as for held-out data of a fitted run).
    """
    subjects, cov_names, covariates, center = read_covariates(
        covariates_path, age_center
    )
    edges = _read(edges_path, EDGE_COLUMNS)
    position = {s: i for i, s in enumerate(subjects)}

    if region_names is None:
        regions = list(
            dict.fromkeys(
                r.strip()
                for pair in zip(edges["region_a"], edges["region_b"])
                for r in pair
            )
        )
    else:
        regions = list(region_names)
        unknown = sorted(
            (set(edges["region_a"].str.strip()) | set(edges["region_b"].str.strip()))
            - set(regions)
        )
        if unknown:
            raise RegionMismatchError(
                f"regions {unknown} are not in the fitted region set"
            )
    index = {r: j for j, r in enumerate(regions)}
    J = len(regions)
    rows, cols = np.triu_indices(J, k=0 if self_edges else 1)
    column = {(int(a), int(b)): e for e, (a, b) in enumerate(zip(rows, cols))}

    counts = np.zeros((len(subjects), rows.size), dtype=np.int64)
    lengths = np.full((len(subjects), rows.size), np.nan)
    seen: set[tuple[int, int]] = set()
    for idx, record in enumerate(edges.itertuples(index=False)):
        line = idx + 2
        values = dict(zip(edges.columns, record))
        subject = values["subject"].strip()
        a, b = values["region_a"].strip(), values["region_b"].strip()
        context: dict[str, Any] = {"line": line, "subject": subject, "edge": (a, b)}
        if subject not in position:
            raise DatasetError("subject has no covariate row", line=line, subject=subject)
        j, k = sorted((index[a], index[b]))
        if j == k and not self_edges:
            raise DatasetError("self-edge given but self edges are disabled", **context)
        i, e = position[subject], column[(j, k)]
        if (i, e) in seen:
            raise DatasetError("duplicate edge row", **context)
        seen.add((i, e))
        count = _number(values["count"].strip(), "count", line, subject)
        if count < 0 or count != int(count):
            raise DatasetError("count must be a non-negative integer", **context)
        raw_length = values["mean_length"].strip()
        if count == 0 and raw_length:
            raise DatasetError("mean length given for edge with zero count", **context)
        if count >= 1:
            if not raw_length:
                raise DatasetError("mean length missing for connected edge", **context)
            length = _number(raw_length, "mean length", line, subject)
            if length <= 0:
                raise DatasetError("mean length must be positive", **context)
            lengths[i, e] = length
        counts[i, e] = int(count)

    data = ConnectomeDataset(
        subject_ids=subjects,
        region_names=regions,
        covariate_names=cov_names,
        counts=counts,
        lengths=lengths,
        covariates=covariates,
        self_edges=self_edges,
        age_center=center,
    )
    logger.info(
        "Loaded dataset",
        extra={
            "subjects": data.n,
            "regions": data.J,
            "edges": data.E,
            "path": str(edges_path),
        },
    )
    return data


def write_dataset(
    data: ConnectomeDataset, edges_path: Path, covariates_path: Path
) -> None:
    """Write the two ingestion CSVs; ages are written on their original scale."""
    covariates = data.covariates.copy()
    if AGE_COLUMN in data.covariate_names:
        covariates[:, data.covariate_names.index(AGE_COLUMN)] += data.age_center
    cov_frame = pd.DataFrame(covariates, columns=data.covariate_names)
    cov_frame.insert(0, "subject", data.subject_ids)

    n, E = data.counts.shape
    region_a = np.array(data.region_names, dtype=object)[data.rows]
    region_b = np.array(data.region_names, dtype=object)[data.cols]
    edge_frame = pd.DataFrame(
        {
            "subject": np.repeat(np.array(data.subject_ids, dtype=object), E),
            "region_a": np.tile(region_a, n),
            "region_b": np.tile(region_b, n),
            "count": data.counts.reshape(-1),
            "mean_length": data.lengths.reshape(-1),
        }
    )
    with atomic_open(Path(covariates_path)) as handle:
        cov_frame.to_csv(handle, index=False, float_format="%.17g")
    with atomic_open(Path(edges_path)) as handle:
        edge_frame.to_csv(handle, index=False, float_format="%.17g", na_rep="")
