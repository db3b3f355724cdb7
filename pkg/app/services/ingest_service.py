# app/services/ingest_service.py

import os
from typing import List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from app.constants.algorithm_constants import RATING_THRESHOLD, SYMMETRY_TOLERANCE
from app.core.exceptions import IngestError, ParameterError
from app.services.objective_service import SimilarityMatrix
from app.utils.logger_service import logger

METADATA_COLUMNS = ("id", "genres", "year", "rating")


class MovieMetadata(NamedTuple):
    ids: List[str]
    groups: List[Tuple[str, ...]]
    years: List[Optional[int]]
    ratings: List[Optional[float]]


def _read_csv(path: str, **kwargs) -> pd.DataFrame:
    if not os.path.isfile(path):
        raise IngestError(path, "file not found")
    try:
        return pd.read_csv(path, **kwargs)
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as error:
        raise IngestError(path, f"unreadable CSV ({error})") from error


def ingest_features(path: str) -> Tuple[List[str], np.ndarray]:
    """Rows of `label, x1, x2, ...`; an optional header row is skipped"""
    frame = _read_csv(path, header = None, dtype = str, skipinitialspace = True)
    if frame.shape[1] < 2:
        raise IngestError(path, "expected a label column followed by feature columns")

    values = frame.iloc[:, 1:].apply(pd.to_numeric, errors = "coerce")
    if len(frame) > 0 and values.iloc[0].isna().all() and frame.iloc[0, 1:].notna().all():
        frame, values = frame.iloc[1:], values.iloc[1:]

    bad_rows = values.index[values.isna().any(axis = 1)].tolist()
    if bad_rows:
        raise IngestError(path, f"ragged or non-numeric feature rows at lines {[row + 1 for row in bad_rows]}")

    labels = frame.iloc[:, 0].astype(str).str.strip().tolist()
    duplicates = sorted({label for label in labels if labels.count(label) > 1})
    if duplicates:
        raise IngestError(path, f"duplicate labels {duplicates}")

    vectors = values.to_numpy(dtype = float)
    zero_rows = np.flatnonzero(np.linalg.norm(vectors, axis = 1) == 0.0)
    if zero_rows.size:
        raise IngestError(path, f"zero feature vector for labels {[labels[row] for row in zero_rows]}")

    logger.info(f"✅ Loaded {len(labels)} feature vectors of dimension {vectors.shape[1]} from {path}")
    return labels, vectors


def ingest_similarity(path: str) -> SimilarityMatrix:
    """Dense n×n CSV without header; symmetric within tolerance, clamped to [0, 1]"""
    frame = _read_csv(path, header = None)
    matrix = frame.apply(pd.to_numeric, errors = "coerce").to_numpy(dtype = float)
    if np.isnan(matrix).any():
        raise IngestError(path, "non-numeric or missing similarity entries")
    if matrix.shape[0] != matrix.shape[1]:
        raise IngestError(path, f"similarity matrix must be square, got {matrix.shape}")

    asymmetry = float(np.max(np.abs(matrix - matrix.T))) if matrix.size else 0.0
    if asymmetry > SYMMETRY_TOLERANCE:
        raise IngestError(path, f"similarity matrix is not symmetric (max deviation {asymmetry:.3g})")

    outside = (matrix < 0.0) | (matrix > 1.0)
    if outside.any():
        logger.warning(f"⚠️ Clamped {int(outside.sum())} similarity entries into [0, 1] in {path}")
        matrix = np.clip(matrix, 0.0, 1.0)

    try:
        return SimilarityMatrix(matrix)
    except ParameterError as error:
        raise IngestError(path, str(error)) from error


def _optional(value: object, cast: type) -> Optional[object]:
    if value is None or (isinstance(value, float) and np.isnan(value)):
        return None
    return cast(value)


def ingest_metadata(path: str) -> MovieMetadata:
    """CSV with columns id, genres (';'-separated), year, rating"""
    frame = _read_csv(path, dtype = {"id": str, "genres": str}, skipinitialspace = True)
    frame.columns = [str(column).strip().lower() for column in frame.columns]
    missing = [column for column in ("id", "genres") if column not in frame.columns]
    if missing:
        raise IngestError(path, f"missing columns {missing}")

    for column in ("year", "rating"):
        if column not in frame.columns:
            frame[column] = np.nan
        frame[column] = pd.to_numeric(frame[column], errors = "coerce")

    ids = frame["id"].astype(str).str.strip().tolist()
    groups = [
        tuple(label.strip() for label in str(cell).split(";") if label.strip()) if isinstance(cell, str) else ()
        for cell in frame["genres"]
    ]
    years = [_optional(year, int) for year in frame["year"]]
    ratings = [_optional(rating, float) for rating in frame["rating"]]

    logger.info(f"✅ Loaded metadata for {len(ids)} elements from {path}")
    return MovieMetadata(ids, groups, years, ratings)


def rating_costs(
    ratings: Sequence[Optional[float]],
    threshold: float = RATING_THRESHOLD,
    source: str = "metadata",
) -> np.ndarray:
    """Knapsack coefficients max(r_e - threshold, 0)"""
    missing = [index for index, rating in enumerate(ratings) if rating is None]
    if missing:
        raise IngestError(source, f"rating knapsack requested but ratings are missing for elements {missing}")
    return np.maximum(np.asarray(ratings, dtype = float) - threshold, 0.0)
