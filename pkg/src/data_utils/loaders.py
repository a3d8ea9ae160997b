"""
Module for handling experiment I/O.

This module loads JSON experiment configurations and reads and writes
result tables as CSV or JSON, handling directory path construction and
directory creation automatically.
"""

import json
import logging
import math
import os
from typing import Any, Dict, List

import pandas as pd

from src.config.config import CSV_SEPARATOR, FLOAT_FORMAT, OUTPUT_FORMATS

logger = logging.getLogger(__name__)


def load_config(directory: List[str], filename: str) -> Dict[str, Any]:
    """
    Loads a JSON experiment configuration from a constructed directory path.

    Args:
        directory (List[str]): Path components (e.g., ["configs"]).
        filename (str): The name of the file to load (e.g., "suite.json").

    Returns:
        Dict[str, Any]: The parsed document.

    Raises:
        FileNotFoundError: If the combined path does not exist.
        ValueError: If the file is not a JSON object.
    """
    file_path = os.path.join(*directory, filename)

    if not os.path.exists(file_path):
        message = f"The file {filename} does not exist in {directory}"
        raise FileNotFoundError(message)

    with open(file_path, encoding="utf8") as handle:
        try:
            document = json.load(handle)
        except json.JSONDecodeError as e:
            raise ValueError(f"Invalid JSON in {file_path}: {e}") from e

    if not isinstance(document, dict):
        raise ValueError(f"Config {file_path} must hold a JSON object")

    logger.debug(f"Loaded config {file_path} with keys {sorted(document)}")
    return document


def load_table(directory: List[str], filename: str) -> pd.DataFrame:
    """
    Loads a result table written by save_table.

    CSV floats are parsed with round-trip precision; JSON files are read as
    a list of records.

    Args:
        directory (List[str]): Path components.
        filename (str): File name ending in .csv or .json.

    Returns:
        pd.DataFrame: The table.

    Raises:
        FileNotFoundError: If the combined path does not exist.
    """
    file_path = os.path.join(*directory, filename)

    if not os.path.exists(file_path):
        message = f"The file {filename} does not exist in {directory}"
        raise FileNotFoundError(message)

    if filename.endswith(".json"):
        with open(file_path, encoding="utf8") as handle:
            return pd.DataFrame.from_records(json.load(handle))

    return pd.read_csv(
        file_path, sep=CSV_SEPARATOR, float_precision="round_trip", low_memory=False
    )


def _json_value(value: Any) -> Any:
    if hasattr(value, "item"):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return None if math.isnan(value) else str(value)
    return value


def save_table(
    directory: List[str],
    filename: str,
    df: pd.DataFrame,
    file_format: str = "csv",
) -> str:
    """
    Saves a result table as CSV or JSON in a specified directory.

    CSV floats are written with 17 significant digits and a fixed line
    terminator so identical tables give identical bytes. JSON is a list of
    records with the same field names; NaN becomes null.

    Args:
        directory (List[str]): Path components where the file is saved.
        filename (str): The name of the file (e.g., "convergence.csv").
        df (pd.DataFrame): The table to export.
        file_format (str): "csv" or "json".

    Returns:
        str: The path written.

    Example:
        save_table(["results"], "verify.csv", table)
    """
    if file_format not in OUTPUT_FORMATS:
        raise ValueError(
            f"Unknown output format '{file_format}'. Expected one of {OUTPUT_FORMATS}"
        )

    directory_path = os.path.join(*directory) if directory else "."
    if not os.path.exists(directory_path):
        os.makedirs(directory_path)

    file_path = os.path.join(directory_path, filename)

    if file_format == "csv":
        df.to_csv(
            file_path,
            index=False,
            sep=CSV_SEPARATOR,
            float_format=FLOAT_FORMAT,
            na_rep="nan",
            lineterminator="\n",
        )
    else:
        records = [
            {column: _json_value(value) for column, value in row.items()}
            for row in df.to_dict(orient="records")
        ]
        with open(file_path, "w", encoding="utf8", newline="\n") as handle:
            json.dump(records, handle, indent=2)
            handle.write("\n")

    logger.debug(f"Wrote {len(df)} rows to {file_path}")
    return file_path


def save_json(directory: List[str], filename: str, document: Dict[str, Any]) -> str:
    """
    Saves a JSON document (e.g. a sweep summary) in a specified directory.

    Args:
        directory (List[str]): Path components.
        filename (str): The name of the file.
        document (Dict[str, Any]): JSON-serialisable content.

    Returns:
        str: The path written.
    """
    directory_path = os.path.join(*directory) if directory else "."
    if not os.path.exists(directory_path):
        os.makedirs(directory_path)

    file_path = os.path.join(directory_path, filename)
    with open(file_path, "w", encoding="utf8", newline="\n") as handle:
        json.dump(document, handle, indent=2, sort_keys=True)
        handle.write("\n")
    return file_path
