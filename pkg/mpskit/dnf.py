"""Disjunctive normal forms and their minimization.

A term is an n-tuple of Literal values, one per variable. Minimization is
Quine-McCluskey over bitmask cubes followed by an exact (Petrick) cover for
small arities and a greedy cover above.
"""
import enum
import logging
from typing import FrozenSet
from typing import List
from typing import Sequence
from typing import Set
from typing import Tuple
import numpy as np
from mpskit.boolexpr import And
from mpskit.boolexpr import BoolExpr
from mpskit.boolexpr import Const
from mpskit.boolexpr import Not
from mpskit.boolexpr import Or
from mpskit.boolexpr import TruthTable
from mpskit.boolexpr import Var
from mpskit.errors import ShapeError
from mpskit.utils import all_rows
from mpskit.utils import int_to_bits
from mpskit.utils import Timer

logger = logging.getLogger(__name__)

# Above this arity the cover is chosen greedily.
EXACT_COVER_ARITY = 10
# Petrick expansion gives up (and falls back to greedy) past this many products.
PETRICK_PRODUCT_LIMIT = 256


class Literal(enum.IntEnum):
  NEG = 0
  POS = 1
  DONT_CARE = 2


Term = Tuple[Literal, ...]
# (value, mask): mask bits are don't-care positions, value bits are zero there.
Cube = Tuple[int, int]


class Dnf(object):
  """An OR of AND-terms over X1..Xn.

  Parameters
  ----------
  arity: int
    Number of variables n.
  terms: list of sequences
    Each term holds n literals (Literal or 0/1/2).
  minimized: bool
    Only minimized forms may contain DONT_CARE literals.
  """

  def __init__(self, arity: int, terms: Sequence[Sequence[int]],
               minimized: bool = False):
    if arity < 1:
      raise ShapeError("arity must be >= 1, got %d" % arity)
    checked = []
    seen = set()
    for term in terms:
      if len(term) != arity:
        raise ShapeError("term %s has %d literals, expected %d" %
                         (tuple(term), len(term), arity))
      term = tuple(Literal(int(v)) for v in term)
      if Literal.DONT_CARE in term and not minimized:
        raise ShapeError("don't-care literals are only allowed after minimization")
      if term in seen:
        raise ShapeError("duplicate term %s" % term_to_string(term))
      seen.add(term)
      checked.append(term)
    self.arity = arity
    self.terms: List[Term] = checked
    self.minimized = minimized

  @property
  def m(self) -> int:
    return len(self.terms)

  def __len__(self):
    return len(self.terms)

  def __eq__(self, other):
    if not isinstance(other, Dnf):
      return NotImplemented
    return self.arity == other.arity and self.terms == other.terms

  def __repr__(self):
    return "Dnf(n=%d, m=%d, %s)" % (self.arity, self.m, self)

  def __str__(self):
    if not self.terms:
      return "0"
    return " | ".join(term_to_string(t) for t in self.terms)

  def evaluate(self, bits) -> int:
    for term in self.terms:
      if all(lit == Literal.DONT_CARE or int(b) == int(lit)
             for lit, b in zip(term, bits)):
        return 1
    return 0

  def evaluate_many(self, rows: np.ndarray) -> np.ndarray:
    out = np.zeros(len(rows), dtype=bool)
    for term in self.terms:
      hit = np.ones(len(rows), dtype=bool)
      for i, lit in enumerate(term):
        if lit != Literal.DONT_CARE:
          hit &= rows[:, i] == int(lit)
      out |= hit
    return out

  def expand(self) -> TruthTable:
    """The truth table the DNF denotes."""
    values = self.evaluate_many(all_rows(self.arity))
    return TruthTable(self.arity, values.astype(np.uint8))

  def true_rows(self) -> List[int]:
    return self.expand().true_rows()

  def to_expr(self) -> BoolExpr:
    if not self.terms:
      return Const(0)
    terms = [_term_expr(term) for term in self.terms]
    return terms[0] if len(terms) == 1 else Or(*terms)


def term_to_string(term: Term) -> str:
  literals = []
  for i, lit in enumerate(term):
    if lit == Literal.POS:
      literals.append("X%d" % (i + 1))
    elif lit == Literal.NEG:
      literals.append("!X%d" % (i + 1))
  if not literals:
    return "1"
  return " & ".join(literals)


def _term_expr(term: Term) -> BoolExpr:
  literals = []
  for i, lit in enumerate(term):
    if lit == Literal.DONT_CARE:
      continue
    literals.append(Var(i + 1) if lit == Literal.POS else Not(Var(i + 1)))
  if not literals:
    return Const(1)
  return literals[0] if len(literals) == 1 else And(*literals)


def to_dnf(t: TruthTable) -> Dnf:
  """One Pos/Neg minterm per true row, in ascending row order."""
  terms = [int_to_bits(r, t.arity) for r in t.true_rows()]
  return Dnf(t.arity, terms)


def cube_to_term(cube: Cube, n: int) -> Term:
  value, mask = cube
  term = []
  for i in range(n):
    bit = 1 << (n - 1 - i)
    if mask & bit:
      term.append(Literal.DONT_CARE)
    else:
      term.append(Literal.POS if value & bit else Literal.NEG)
  return tuple(term)


def prime_implicants(n: int, on: Sequence[int]) -> List[Cube]:
  """All prime implicants of the on-set, by iterated pairwise merging."""
  level: Set[Cube] = set((r, 0) for r in on)
  primes: Set[Cube] = set()
  while level:
    used: Set[Cube] = set()
    merged: Set[Cube] = set()
    for value, mask in level:
      for b in range(n):
        bit = 1 << b
        if mask & bit or value & bit:
          continue
        partner = (value | bit, mask)
        if partner in level:
          merged.add((value, mask | bit))
          used.add((value, mask))
          used.add(partner)
    primes |= level - used
    level = merged
  return sorted(primes)


def _covers(cube: Cube, rows: np.ndarray) -> np.ndarray:
  value, mask = cube
  return (rows & ~mask) == value


def _literal_count(cube: Cube, n: int) -> int:
  return n - bin(cube[1]).count("1")


def _greedy_cover(n: int, primes: List[Cube], coverage: np.ndarray,
                  chosen: Set[int]) -> Set[int]:
  chosen = set(chosen)
  uncovered = ~np.any(coverage[sorted(chosen)], axis=0) if chosen else \
      np.ones(coverage.shape[1], dtype=bool)
  while uncovered.any():
    gains = (coverage & uncovered).sum(axis=1)
    best = max(range(len(primes)),
               key=lambda i: (gains[i], -_literal_count(primes[i], n), -i))
    chosen.add(best)
    uncovered &= ~coverage[best]
  return chosen


def _petrick(n: int, primes: List[Cube], coverage: np.ndarray,
             chosen: Set[int]):
  """Exact minimum cover of the columns not covered by chosen, or None."""
  if chosen:
    remaining = np.flatnonzero(~np.any(coverage[sorted(chosen)], axis=0))
  else:
    remaining = np.arange(coverage.shape[1])
  products: Set[FrozenSet[int]] = {frozenset()}
  for col in remaining:
    options = [int(i) for i in np.flatnonzero(coverage[:, col])]
    expanded = set()
    for p in products:
      if any(i in p for i in options):
        expanded.add(p)
      else:
        for i in options:
          expanded.add(p | {i})
    # absorption: drop any product that contains a smaller one
    by_size = sorted(expanded, key=len)
    products = set()
    for p in by_size:
      if not any(q <= p for q in products):
        products.add(p)
    if len(products) > PETRICK_PRODUCT_LIMIT:
      return None

  def cost(p):
    return (len(p), sum(_literal_count(primes[i], n) for i in p), sorted(p))

  best = min(products, key=cost)
  return set(chosen) | set(best)


def minimize(d: Dnf) -> Dnf:
  """A prime-implicant cover of the same true set, with m' <= m.

  Uses an exact Petrick cover up to EXACT_COVER_ARITY variables and a greedy
  cover above.
  """
  n = d.arity
  with Timer() as timer:
    on = d.true_rows()
    if not on:
      return Dnf(n, [], minimized=True)
    primes = prime_implicants(n, on)
    rows = np.array(on, dtype=np.int64)
    coverage = np.stack([_covers(p, rows) for p in primes])
    essential = set()
    for col in range(len(on)):
      covering = np.flatnonzero(coverage[:, col])
      if len(covering) == 1:
        essential.add(int(covering[0]))
    chosen = None
    if n <= EXACT_COVER_ARITY:
      chosen = _petrick(n, primes, coverage, essential)
      if chosen is None:
        logger.info("Exact cover exceeded %d products, using greedy cover",
                    PETRICK_PRODUCT_LIMIT)
    if chosen is None:
      chosen = _greedy_cover(n, primes, coverage, essential)
    cubes = sorted(primes[i] for i in chosen)
    terms = [cube_to_term(c, n) for c in cubes]
    if len(terms) > d.m:
      # only possible for an input that already used don't-cares
      return d
  logger.info("Minimized DNF from m=%d to m=%d terms in %.4f sec",
              d.m, len(terms), timer.elapsed)
  return Dnf(n, terms, minimized=True)


def term_to_cube(term: Term) -> Cube:
  n = len(term)
  value = 0
  mask = 0
  for i, lit in enumerate(term):
    bit = 1 << (n - 1 - i)
    if lit == Literal.DONT_CARE:
      mask |= bit
    elif lit == Literal.POS:
      value |= bit
  return value, mask


def _intersects(a: Cube, b: Cube) -> bool:
  return ((a[0] ^ b[0]) & ~a[1] & ~b[1]) == 0


def sharp(a: Cube, b: Cube, n: int) -> List[Cube]:
  """Disjoint cubes covering a minus b."""
  if not _intersects(a, b):
    return [a]
  pieces = []
  value, mask = a
  for i in range(n):
    bit = 1 << (n - 1 - i)
    if mask & bit and not b[1] & bit:
      b_value = b[0] & bit
      pieces.append((value | (bit ^ b_value), mask & ~bit))
      value |= b_value
      mask &= ~bit
  return pieces


def disjoint_cover(d: Dnf) -> Dnf:
  """An equivalent DNF whose terms cover pairwise disjoint rows.

  A compiled MPS sums its terms, so overlapping implicants would be counted
  twice. Terms already disjoint from every earlier term are kept as is, and
  the result never has more terms than d has true rows.
  """
  n = d.arity
  if not any(Literal.DONT_CARE in t for t in d.terms):
    return d
  cubes = [term_to_cube(t) for t in d.terms]
  out: List[Cube] = []
  for j, cube in enumerate(cubes):
    pieces = [cube]
    for earlier in cubes[:j]:
      pieces = [p for piece in pieces for p in sharp(piece, earlier, n)]
      if not pieces:
        break
    out.extend(pieces)
  return Dnf(n, [cube_to_term(c, n) for c in out], minimized=True)
