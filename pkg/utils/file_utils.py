"""
File system utilities for report, trace and capture output
"""

import os
import shutil
import time
from pathlib import Path

from utils.errors import ReportWriteError


def ensure_parent_dir(file_path: str) -> Path:
    """Create the directory that will hold file_path; returns the path"""
    path = Path(file_path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise ReportWriteError(f"Cannot create directory for {file_path}: {e}")
    if path.is_dir():
        raise ReportWriteError(f"Output path is a directory: {file_path}")
    return path


def create_backup(file_path: str) -> str:
    """Copy an existing output file aside before it is overwritten"""
    if not os.path.exists(file_path):
        raise ReportWriteError(f"File does not exist: {file_path}")

    backup_path = f"{file_path}.backup"
    if os.path.exists(backup_path):
        backup_path = f"{file_path}.backup.{int(time.time())}"

    try:
        shutil.copy2(file_path, backup_path)
    except OSError as e:
        raise ReportWriteError(f"Failed to create backup: {e}")
    return backup_path


def with_suffix_stem(file_path: str, suffix: str) -> str:
    """trace.csv + 'baseline' -> trace-baseline.csv"""
    path = Path(file_path)
    return str(path.with_name(f"{path.stem}-{suffix}{path.suffix}"))
