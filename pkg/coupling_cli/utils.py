import hashlib
import logging
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Callable, Iterable, List, TypeVar

import numpy as np
import pandas as pd

from coupling_cli import config


T = TypeVar('T')
R = TypeVar('R')

LOG_FORMAT = '%(levelname)s %(name)s: %(message)s'


class CouplingCliException(Exception):
    pass


class CouplingCliIoException(CouplingCliException):
    def __init__(self, path, message):
        super().__init__(f'{path}: {message}')
        self.path = Path(path)


def configure_logging(verbose: bool) -> None:
    handler = logging.StreamHandler()
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    root_logger = logging.getLogger()
    root_logger.handlers[:] = [handler]
    root_logger.setLevel(logging.DEBUG if verbose else logging.INFO)


def file_digest(path) -> str:
    hasher = hashlib.sha256()
    try:
        with open(path, 'rb') as input_file:
            for chunk in iter(lambda: input_file.read(1 << 16), b''):
                hasher.update(chunk)
    except OSError as e:
        raise CouplingCliIoException(path, e.strerror or str(e))
    return hasher.hexdigest()


def derive_rng(seed: int, *key: int) -> np.random.Generator:
    """
    Every random stream of a run comes from the same seed; `key` tells the streams apart
    (stage, year index, region index...), so a stream never depends on which thread consumes it first.
    """
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(int(k) for k in key)))


def parallel_map(function: Callable[[T], R], items: Iterable[T], threads: int) -> List[R]:
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [function(item) for item in items]

    with ThreadPoolExecutor(max_workers=threads) as executor:
        return list(executor.map(function, items))


def read_csv(path, **kwargs) -> pd.DataFrame:
    try:
        return pd.read_csv(path, encoding='utf-8', keep_default_na=False, **kwargs)
    except OSError as e:
        raise CouplingCliIoException(path, e.strerror or str(e))
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise CouplingCliIoException(path, f'cannot parse CSV ({e})')


def write_csv(frame: pd.DataFrame, path, float_format=config.csv_float_format) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(path, index=False, float_format=float_format, na_rep='',
                     lineterminator=config.csv_line_terminator, encoding='utf-8')
    except OSError as e:
        raise CouplingCliIoException(path, e.strerror or str(e))
    return path
