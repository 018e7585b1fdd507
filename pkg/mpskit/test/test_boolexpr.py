import unittest
import numpy as np
import sympy
from mpskit.boolexpr import And
from mpskit.boolexpr import Const
from mpskit.boolexpr import Not
from mpskit.boolexpr import Or
from mpskit.boolexpr import TruthTable
from mpskit.boolexpr import MAX_NESTING
from mpskit.boolexpr import Var
from mpskit.boolexpr import expr_from_minterms
from mpskit.boolexpr import format_table
from mpskit.boolexpr import parse_expr
from mpskit.boolexpr import parse_table
from mpskit.boolexpr import random_expr
from mpskit.boolexpr import table_from_expr
from mpskit.errors import ParseError
from mpskit.errors import ShapeError
from mpskit.errors import SizeError
from mpskit.utils import all_rows

OR3 = [0, 1, 1, 1, 1, 1, 1, 1]
PARITY3 = [0, 1, 1, 0, 1, 0, 0, 1]
THRESHOLD32 = [0, 0, 0, 1, 0, 1, 1, 1]


def recursive_eval(e, bits):
  """Independent evaluator working on the sympy rendering."""
  env = {sympy.Symbol("X%d" % (i + 1)): bool(b) for i, b in enumerate(bits)}
  return int(bool(e.to_sympy().subs(env)))


class TestBoolExpr(unittest.TestCase):
  """
  Tests of the expression parser and truth tables.
  """

  def test_parse_and_evaluate(self):
    """X1 & !X2 on (1, 0) is true."""
    e = parse_expr("X1 & !X2")
    assert e == And(Var(1), Not(Var(2)))
    assert e.evaluate((1, 0)) == 1
    assert e.evaluate((1, 1)) == 0

  def test_precedence(self):
    """NOT binds tighter than AND, AND tighter than OR."""
    assert parse_expr("X1 | X2 & X3") == Or(Var(1), And(Var(2), Var(3)))
    assert parse_expr("!X1 & X2") == And(Not(Var(1)), Var(2))
    assert parse_expr("X1 | X2 | X3") == Or(Or(Var(1), Var(2)), Var(3))

  def test_alternative_syntax(self):
    """Keywords, sum-of-terms notation and constants."""
    a = table_from_expr(parse_expr("x1 and not X2 or X3"))
    b = table_from_expr(parse_expr("X1 * ~X2 + X3"))
    c = table_from_expr(parse_expr("X1 ∧ ¬X2 ∨ X3"))
    assert a == b == c
    assert parse_expr("1") == Const(1)

  def test_or_table(self):
    """The 3-input OR on all 8 rows."""
    t = table_from_expr(parse_expr("X1 | X2 | X3"))
    np.testing.assert_array_equal(t.outputs, OR3)

  def test_parity_and_threshold_tables(self):
    """Sum-of-minterms parity and majority expressions."""
    parity = parse_expr("X1&!X2&!X3 | !X1&X2&!X3 | !X1&!X2&X3 | X1&X2&X3")
    np.testing.assert_array_equal(table_from_expr(parity).outputs, PARITY3)
    majority = parse_expr("X1&X2 | X1&X3 | X2&X3")
    np.testing.assert_array_equal(table_from_expr(majority).outputs, THRESHOLD32)

  def test_against_enumeration(self):
    """(X1 & X2) | X3 against row by row evaluation of the AST."""
    e = parse_expr("(X1 & X2) | X3")
    t = table_from_expr(e)
    expected = [e.evaluate(row) for row in all_rows(3)]
    np.testing.assert_array_equal(t.outputs, expected)

  def test_random_against_sympy(self):
    """Random 4-variable ASTs match an independent evaluator."""
    rng = np.random.default_rng(17)
    for _ in range(10):
      e = random_expr(4, 4, rng)
      t = table_from_expr(e, 4)
      for r, row in enumerate(all_rows(4)):
        assert t[r] == recursive_eval(e, row)

  def test_not_table(self):
    """Not(X1) with n=1."""
    np.testing.assert_array_equal(table_from_expr(Not(Var(1)), 1).outputs, [1, 0])

  def test_parse_errors_carry_offsets(self):
    """Errors report the byte offset of the offending token."""
    with self.assertRaises(ParseError) as ctx:
      parse_expr("X1 & & X2")
    assert ctx.exception.offset == 5
    with self.assertRaises(ParseError) as ctx:
      parse_expr("¬X1 & X0")
    # ¬ is two bytes in UTF-8
    assert ctx.exception.offset == 7
    with self.assertRaises(ParseError):
      parse_expr("(X1 | X2")
    with self.assertRaises(ParseError):
      parse_expr("")
    with self.assertRaises(ParseError):
      parse_expr("X1 ^ X2")

  def test_long_chains(self):
    """Chains of 1500 literals parse into one flat node and evaluate."""
    e = parse_expr(" | ".join("X%d" % (i % 3 + 1) for i in range(1500)))
    assert isinstance(e, Or)
    assert len(e.operands) == 1500
    np.testing.assert_array_equal(table_from_expr(e).outputs, OR3)
    conj = parse_expr(" & ".join(["!X2"] * 1500))
    assert conj.evaluate((1, 0)) == 1
    np.testing.assert_array_equal(table_from_expr(conj, 2).outputs, [1, 0, 1, 0])
    assert parse_expr(str(conj)) == conj

  def test_nesting_limit(self):
    """Parentheses and NOT prefixes nest at most MAX_NESTING deep."""
    e = parse_expr("(" * MAX_NESTING + "X1" + ")" * MAX_NESTING)
    assert e == Var(1)
    deep = MAX_NESTING + 1
    with self.assertRaises(ParseError) as ctx:
      parse_expr("(" * deep + "X1" + ")" * deep)
    assert ctx.exception.offset == MAX_NESTING
    with self.assertRaises(ParseError) as ctx:
      parse_expr("!" * deep + "X1")
    assert ctx.exception.offset == MAX_NESTING
    assert parse_expr("!" * MAX_NESTING + "X1").evaluate((1,)) == 1

  def test_arity_limits(self):
    """Arity must be positive and at most 24."""
    with self.assertRaises(SizeError):
      table_from_expr(parse_expr("X25"))
    with self.assertRaises(ShapeError):
      table_from_expr(parse_expr("X3"), 2)

  def test_table_files(self):
    """Row and packed hex formats both parse."""
    t = TruthTable(3, PARITY3)
    assert parse_table(format_table(t)) == t
    assert parse_table(format_table(t, packed=True)) == t
    assert t.to_hex() == "96"
    assert parse_table("n=2\n# and\n11 1\n00 0\n01 0\n10 0\n") == TruthTable(2, [0, 0, 0, 1])

  def test_table_file_errors(self):
    """Malformed table files raise ParseError."""
    with self.assertRaises(ParseError):
      parse_table("arity 2\n")
    with self.assertRaises(ParseError):
      parse_table("n=2\n00 0\n00 1\n10 0\n11 1\n")
    with self.assertRaises(ParseError) as ctx:
      parse_table("n=1\n0 0\n1 2\n")
    assert ctx.exception.offset == 8

  def test_minterm_expression(self):
    """A sum of minterms reproduces the true rows."""
    e = expr_from_minterms(3, [1, 6])
    assert table_from_expr(e, 3).true_rows() == [1, 6]
    assert expr_from_minterms(3, []) == Const(0)
