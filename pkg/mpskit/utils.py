import os
import time
from typing import List
import numpy as np
from mpskit.numbertype import Bits


def int_to_bits(row: int, n: int) -> Bits:
  """Bits of a truth-table row index, X_1 is the most significant bit."""
  return tuple((row >> (n - 1 - i)) & 1 for i in range(n))


def bits_to_int(bits: Bits) -> int:
  row = 0
  for b in bits:
    row = (row << 1) | (int(b) & 1)
  return row


def all_rows(n: int) -> np.ndarray:
  """Matrix of all 2^n boolean inputs in ascending row order, shape (2^n, n)."""
  rows = np.arange(2**n, dtype=np.int64)
  shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
  return ((rows[:, None] >> shifts[None, :]) & 1).astype(np.int64)


def worker_count() -> int:
  """Number of worker threads, capped by MPSKIT_THREADS when set."""
  available = os.cpu_count() or 1
  cap = os.environ.get("MPSKIT_THREADS")
  if cap is None or cap.strip() == "":
    return available
  try:
    cap = int(cap)
  except ValueError:
    return available
  return max(1, min(cap, available))


def chunk_ranges(total: int, chunk: int) -> List[range]:
  """Split range(total) into consecutive ranges of at most chunk items.

  The split depends only on total and chunk, never on the worker count, so
  anything keyed by chunk index stays deterministic.
  """
  return [range(start, min(start + chunk, total))
          for start in range(0, total, chunk)]


class Timer(object):
  """Context manager recording elapsed wall time in seconds."""

  def __enter__(self):
    self.start = time.time()
    self.elapsed = 0.0
    return self

  def __exit__(self, *exc):
    self.elapsed = time.time() - self.start
    return False
