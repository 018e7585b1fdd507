"""Boolean expressions and truth tables.

Grammar (precedence NOT > AND > OR; AND and OR chains form flat n-ary nodes):

  expr   := term (OR term)*
  term   := factor (AND factor)*
  factor := NOT factor | atom
  atom   := VAR | CONST | '(' expr ')'

VAR is X1, X2, ... (case-insensitive), CONST is 0 or 1. NOT is one of NOT, !,
~, U+00AC; AND is one of AND, &, *, U+2227; OR is one of OR, |, +, U+2228.
Parse errors carry the byte offset into the UTF-8 encoding of the text.
"""
import logging
import re
from typing import List
from typing import Optional
import numpy as np
import sympy
from mpskit.errors import ParseError
from mpskit.errors import ShapeError
from mpskit.errors import SizeError
from mpskit.utils import all_rows
from mpskit.utils import bits_to_int

logger = logging.getLogger(__name__)

MAX_ARITY = 24
# Deepest run of nested parentheses and NOT prefixes the parser accepts.
MAX_NESTING = 100


class BoolExpr(object):
  """Abstract AST node."""

  def evaluate(self, bits) -> int:
    """Value on one assignment; bits[i - 1] is the value of Xi."""
    raise NotImplementedError

  def evaluate_many(self, rows: np.ndarray) -> np.ndarray:
    """Values on every row of a (B, n) 0/1 matrix, as a bool vector."""
    raise NotImplementedError

  def max_var(self) -> int:
    raise NotImplementedError

  def to_sympy(self):
    """The equivalent sympy.logic expression over symbols X1..Xn."""
    raise NotImplementedError


class Var(BoolExpr):

  def __init__(self, index: int):
    if index < 1:
      raise ShapeError("variable index must be >= 1, got %d" % index)
    self.index = index

  def evaluate(self, bits) -> int:
    return int(bits[self.index - 1]) & 1

  def evaluate_many(self, rows):
    return rows[:, self.index - 1] != 0

  def max_var(self):
    return self.index

  def to_sympy(self):
    return sympy.Symbol("X%d" % self.index)

  def __eq__(self, other):
    return isinstance(other, Var) and other.index == self.index

  def __hash__(self):
    return hash(("var", self.index))

  def __str__(self):
    return "X%d" % self.index


class Const(BoolExpr):

  def __init__(self, value: int):
    self.value = 1 if value else 0

  def evaluate(self, bits):
    return self.value

  def evaluate_many(self, rows):
    return np.full(len(rows), bool(self.value))

  def max_var(self):
    return 0

  def to_sympy(self):
    return sympy.true if self.value else sympy.false

  def __eq__(self, other):
    return isinstance(other, Const) and other.value == self.value

  def __hash__(self):
    return hash(("const", self.value))

  def __str__(self):
    return str(self.value)


class Not(BoolExpr):

  def __init__(self, operand: BoolExpr):
    self.operand = operand

  def evaluate(self, bits):
    return 1 - self.operand.evaluate(bits)

  def evaluate_many(self, rows):
    return ~self.operand.evaluate_many(rows)

  def max_var(self):
    return self.operand.max_var()

  def to_sympy(self):
    return sympy.Not(self.operand.to_sympy())

  def __eq__(self, other):
    return isinstance(other, Not) and other.operand == self.operand

  def __hash__(self):
    return hash(("not", self.operand))

  def __str__(self):
    if isinstance(self.operand, (Var, Const, Not)):
      return "!%s" % self.operand
    return "!(%s)" % self.operand


class _Nary(BoolExpr):
  """A chain of operands under one associative operator.

  Operands of the same type are spliced in, so the chain is flat.
  """
  symbol = None

  def __init__(self, *operands: BoolExpr):
    if not operands:
      raise ShapeError("%s needs at least one operand" % type(self).__name__)
    flat = []
    for e in operands:
      if type(e) is type(self):
        flat.extend(e.operands)
      else:
        flat.append(e)
    self.operands = tuple(flat)

  def max_var(self):
    return max(e.max_var() for e in self.operands)

  def __eq__(self, other):
    return type(other) is type(self) and other.operands == self.operands

  def __hash__(self):
    return hash((self.symbol, self.operands))

  def _operand_str(self, e: BoolExpr) -> str:
    if isinstance(e, Or) and not isinstance(self, Or):
      return "(%s)" % e
    return str(e)

  def __str__(self):
    return (" %s " % self.symbol).join(self._operand_str(e) for e in self.operands)


class And(_Nary):
  symbol = "&"

  def evaluate(self, bits):
    for e in self.operands:
      if not e.evaluate(bits):
        return 0
    return 1

  def evaluate_many(self, rows):
    out = np.ones(len(rows), dtype=bool)
    for e in self.operands:
      out &= e.evaluate_many(rows)
    return out

  def to_sympy(self):
    return sympy.And(*[e.to_sympy() for e in self.operands])


class Or(_Nary):
  symbol = "|"

  def evaluate(self, bits):
    for e in self.operands:
      if e.evaluate(bits):
        return 1
    return 0

  def evaluate_many(self, rows):
    out = np.zeros(len(rows), dtype=bool)
    for e in self.operands:
      out |= e.evaluate_many(rows)
    return out

  def to_sympy(self):
    return sympy.Or(*[e.to_sympy() for e in self.operands])


_NOT = ("NOT", "!", "~", "¬")
_AND = ("AND", "&", "*", "∧")
_OR = ("OR", "|", "+", "∨")

_TOKEN_RE = re.compile(r"""
    (?P<ws>\s+)
  | (?P<var>[Xx][0-9]+)
  | (?P<word>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<const>[0-9]+)
  | (?P<op>[!~&*|+()¬∧∨])
""", re.VERBOSE)


class Token(object):

  def __init__(self, kind: str, text: str, offset: int):
    self.kind = kind
    self.text = text
    self.offset = offset

  def __repr__(self):
    return "Token(%s, %r, %d)" % (self.kind, self.text, self.offset)


def tokenize(text: str) -> List[Token]:
  """Splits text into tokens. Offsets are byte offsets into UTF-8."""
  tokens = []
  pos = 0
  byte = 0
  while pos < len(text):
    match = _TOKEN_RE.match(text, pos)
    if match is None:
      raise ParseError("unknown token %r" % text[pos], byte)
    lexeme = match.group(0)
    kind = match.lastgroup
    if kind == "word":
      upper = lexeme.upper()
      if upper in _NOT:
        kind = "not"
      elif upper in _AND:
        kind = "and"
      elif upper in _OR:
        kind = "or"
      else:
        raise ParseError("unknown token %r" % lexeme, byte)
    elif kind == "op":
      if lexeme in _NOT:
        kind = "not"
      elif lexeme in _AND:
        kind = "and"
      elif lexeme in _OR:
        kind = "or"
      else:
        kind = lexeme
    elif kind == "const" and lexeme not in ("0", "1"):
      raise ParseError("constant must be 0 or 1, got %r" % lexeme, byte)
    if kind != "ws":
      tokens.append(Token(kind, lexeme, byte))
    pos = match.end()
    byte += len(lexeme.encode("utf-8"))
  tokens.append(Token("end", "", byte))
  return tokens


class Parser(object):
  """Recursive descent parser over the token list.

  Parentheses and NOT prefixes nest at most MAX_NESTING deep.
  """

  def __init__(self, text: str):
    self.tokens = tokenize(text)
    self.pos = 0
    self.depth = 0

  def peek(self) -> Token:
    return self.tokens[self.pos]

  def advance(self) -> Token:
    token = self.tokens[self.pos]
    self.pos += 1
    return token

  def descend(self, token: Token):
    self.depth += 1
    if self.depth > MAX_NESTING:
      raise ParseError("nesting deeper than %d" % MAX_NESTING, token.offset)

  def parse(self) -> BoolExpr:
    if self.peek().kind == "end":
      raise ParseError("empty expression", self.peek().offset)
    e = self.expr()
    token = self.peek()
    if token.kind != "end":
      raise ParseError("unexpected %r" % token.text, token.offset)
    return e

  def expr(self) -> BoolExpr:
    terms = [self.term()]
    while self.peek().kind == "or":
      self.advance()
      terms.append(self.term())
    return terms[0] if len(terms) == 1 else Or(*terms)

  def term(self) -> BoolExpr:
    factors = [self.factor()]
    while self.peek().kind == "and":
      self.advance()
      factors.append(self.factor())
    return factors[0] if len(factors) == 1 else And(*factors)

  def factor(self) -> BoolExpr:
    if self.peek().kind == "not":
      self.descend(self.advance())
      e = Not(self.factor())
      self.depth -= 1
      return e
    return self.atom()

  def atom(self) -> BoolExpr:
    token = self.advance()
    if token.kind == "var":
      index = int(token.text[1:])
      if index == 0:
        raise ParseError("variable index 0", token.offset)
      return Var(index)
    if token.kind == "const":
      return Const(int(token.text))
    if token.kind == "(":
      self.descend(token)
      e = self.expr()
      closing = self.advance()
      if closing.kind != ")":
        raise ParseError("expected ')'", closing.offset)
      self.depth -= 1
      return e
    if token.kind == "end":
      raise ParseError("unexpected end of expression", token.offset)
    raise ParseError("unexpected %r" % token.text, token.offset)


def parse_expr(text: str) -> BoolExpr:
  """Parses a boolean expression.

  Parameters
  ----------
  text: str
    Expression in the grammar documented at module level.

  Returns
  -------
  The AST. Raises ParseError with the byte offset of the offending token.
  """
  return Parser(text).parse()


def _check_arity(n: int):
  if n < 1:
    raise ShapeError("arity must be >= 1, got %d" % n)
  if n > MAX_ARITY:
    raise SizeError("truth table arity", n, MAX_ARITY)


class TruthTable(object):
  """A boolean function f: {0,1}^n -> {0,1}.

  outputs[r] is f on the row whose bits are r written with X1 as the most
  significant bit.
  """

  def __init__(self, arity: int, outputs):
    _check_arity(arity)
    outputs = np.asarray(outputs).reshape(-1)
    if len(outputs) != 2**arity:
      raise ShapeError("table of arity %d needs %d outputs, got %d" %
                       (arity, 2**arity, len(outputs)))
    if not np.all((outputs == 0) | (outputs == 1)):
      raise ShapeError("truth table outputs must be 0 or 1")
    outputs = outputs.astype(np.uint8)
    outputs.flags.writeable = False
    self.arity = arity
    self.outputs = outputs

  def __len__(self):
    return len(self.outputs)

  def __getitem__(self, row) -> int:
    if isinstance(row, (tuple, list)):
      row = bits_to_int(row)
    return int(self.outputs[row])

  def __eq__(self, other):
    if not isinstance(other, TruthTable):
      return NotImplemented
    return other.arity == self.arity and bool(np.all(other.outputs == self.outputs))

  def __hash__(self):
    return hash((self.arity, self.outputs.tobytes()))

  def __repr__(self):
    return "TruthTable(n=%d, %s)" % (self.arity, self.to_hex())

  def true_rows(self) -> List[int]:
    """Row indices with output 1, ascending."""
    return [int(r) for r in np.flatnonzero(self.outputs)]

  def popcount(self) -> int:
    return int(self.outputs.sum())

  def to_hex(self) -> str:
    """Packed form: row r is bit r of the integer (row 0 least significant)."""
    value = 0
    for r in reversed(range(len(self.outputs))):
      value = (value << 1) | int(self.outputs[r])
    width = max(1, (len(self.outputs) + 3) // 4)
    return format(value, "0%dx" % width)

  @classmethod
  def from_hex(cls, arity: int, text: str) -> "TruthTable":
    _check_arity(arity)
    text = text.strip().lower()
    if text.startswith("0x"):
      text = text[2:]
    try:
      value = int(text, 16)
    except ValueError:
      raise ShapeError("invalid packed truth table %r" % text)
    if value >> (2**arity):
      raise ShapeError("packed truth table has bits beyond row %d" % (2**arity - 1))
    outputs = [(value >> r) & 1 for r in range(2**arity)]
    return cls(arity, outputs)

  @classmethod
  def from_function(cls, arity: int, f) -> "TruthTable":
    """Tabulates a python predicate taking a tuple of bits."""
    _check_arity(arity)
    rows = all_rows(arity)
    return cls(arity, [1 if f(tuple(int(b) for b in row)) else 0 for row in rows])

  @classmethod
  def random(cls, arity: int, seed=None) -> "TruthTable":
    _check_arity(arity)
    rng = np.random.default_rng(seed)
    return cls(arity, rng.integers(0, 2, size=2**arity))


def table_from_expr(e: BoolExpr, n: Optional[int] = None) -> TruthTable:
  """Evaluates e exhaustively on all 2^n rows.

  n defaults to the largest variable index (at least 1).
  """
  needed = e.max_var()
  if n is None:
    n = max(1, needed)
  if n > MAX_ARITY:
    raise SizeError("truth table arity", n, MAX_ARITY)
  if n < needed:
    raise ShapeError("arity %d is smaller than variable index %d" % (n, needed))
  _check_arity(n)
  values = e.evaluate_many(all_rows(n))
  logger.debug("Tabulated %s over %d rows", e, 2**n)
  return TruthTable(n, values.astype(np.uint8))


def parse_table(text: str) -> TruthTable:
  """Reads a truth-table document.

  The first non-empty line is "n=<arity>". It is followed either by 2^n lines
  "<bits> <output>" (bits written X1 first, rows in any order, each exactly
  once) or by a single packed hex string. Lines starting with '#' are ignored.
  """
  lines = []
  byte = 0
  for raw in text.splitlines(True):
    stripped = raw.strip()
    if stripped and not stripped.startswith("#"):
      lines.append((stripped, byte))
    byte += len(raw.encode("utf-8"))
  if not lines:
    raise ParseError("empty truth table", 0)
  header, offset = lines[0]
  match = re.fullmatch(r"n\s*=\s*([0-9]+)", header)
  if match is None:
    raise ParseError("expected header 'n=<arity>'", offset)
  n = int(match.group(1))
  _check_arity(n)
  body = lines[1:]
  if len(body) == 1 and len(body[0][0].split()) == 1:
    return TruthTable.from_hex(n, body[0][0])
  if len(body) != 2**n:
    raise ParseError("expected %d rows, got %d" % (2**n, len(body)),
                     body[-1][1] if body else offset)
  outputs = [None] * (2**n)
  for line, line_offset in body:
    parts = line.split()
    if len(parts) != 2 or len(parts[0]) != n or not re.fullmatch(r"[01]+", parts[0]) \
        or parts[1] not in ("0", "1"):
      raise ParseError("malformed row %r" % line, line_offset)
    row = int(parts[0], 2)
    if outputs[row] is not None:
      raise ParseError("duplicate row %s" % parts[0], line_offset)
    outputs[row] = int(parts[1])
  return TruthTable(n, outputs)


def format_table(t: TruthTable, packed: bool = False) -> str:
  """Inverse of parse_table."""
  lines = ["n=%d" % t.arity]
  if packed:
    lines.append(t.to_hex())
  else:
    for r, bit in enumerate(t.outputs):
      lines.append("%s %d" % (format(r, "0%db" % t.arity), bit))
  return "\n".join(lines) + "\n"


def expr_from_minterms(n: int, rows: List[int]) -> BoolExpr:
  """Sum-of-minterms expression for the given true rows (Const(0) if none)."""
  terms = []
  for r in rows:
    literals = []
    for i in range(n):
      bit = (r >> (n - 1 - i)) & 1
      literals.append(Var(i + 1) if bit else Not(Var(i + 1)))
    terms.append(literals[0] if n == 1 else And(*literals))
  if not terms:
    return Const(0)
  return terms[0] if len(terms) == 1 else Or(*terms)


def random_expr(n: int, depth: int, rng: np.random.Generator) -> BoolExpr:
  """A random AST over X1..Xn of at most the given depth."""
  if depth <= 0 or rng.random() < 0.25:
    return Var(int(rng.integers(1, n + 1)))
  choice = int(rng.integers(0, 3))
  if choice == 0:
    return Not(random_expr(n, depth - 1, rng))
  if choice == 1:
    return And(random_expr(n, depth - 1, rng), random_expr(n, depth - 1, rng))
  return Or(random_expr(n, depth - 1, rng), random_expr(n, depth - 1, rng))

