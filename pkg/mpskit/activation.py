"""Scale-invariant sigmoids.

Two forms carry the tunable constant C:

  ReciprocalShift:  sigma(z) = 1 / (C + e^z),   C > 0, decreasing, 1/C -> 0
  ScaledLogistic:   sigma(z) = C / (1 + e^-z),  C != 0, 0 -> C

Multiplying either by k > 0 is again a member of the family after
reparameterizing C and shifting z, which is what scale_via_C relies on.
"""
import dataclasses
import enum
from typing import Dict
from typing import Tuple
import numpy as np
from mpskit.errors import IncompatibleActivationError
from mpskit.errors import NumericError

# exp is only evaluated for |z| <= Z_CLAMP; beyond it the limit values are used.
Z_CLAMP = 700.0


class SigmoidForm(enum.Enum):
  RECIPROCAL_SHIFT = "reciprocal_shift"
  SCALED_LOGISTIC = "scaled_logistic"


class Orientation(enum.Enum):
  INCREASING = "increasing"
  DECREASING = "decreasing"


@dataclasses.dataclass(frozen=True)
class ScaleInvariantSigmoid(object):
  form: SigmoidForm
  C: float

  def __post_init__(self):
    object.__setattr__(self, "form", SigmoidForm(self.form))
    object.__setattr__(self, "C", float(self.C))
    if not np.isfinite(self.C):
      raise NumericError("sigmoid constant must be finite")
    if self.form is SigmoidForm.RECIPROCAL_SHIFT and self.C <= 0:
      raise IncompatibleActivationError(
          "reciprocal shift sigmoid requires C > 0, got %r" % self.C)
    if self.C == 0:
      raise IncompatibleActivationError("sigmoid constant must be nonzero")

  @classmethod
  def reciprocal_shift(cls, C: float = 1.0) -> "ScaleInvariantSigmoid":
    return cls(SigmoidForm.RECIPROCAL_SHIFT, C)

  @classmethod
  def scaled_logistic(cls, C: float = 1.0) -> "ScaleInvariantSigmoid":
    return cls(SigmoidForm.SCALED_LOGISTIC, C)

  @property
  def orientation(self) -> Orientation:
    if self.form is SigmoidForm.RECIPROCAL_SHIFT:
      return Orientation.DECREASING
    return Orientation.INCREASING if self.C > 0 else Orientation.DECREASING

  @property
  def limits(self) -> Tuple[float, float]:
    """(limit at -inf, limit at +inf)."""
    if self.form is SigmoidForm.RECIPROCAL_SHIFT:
      return 1.0 / self.C, 0.0
    return 0.0, self.C

  def __call__(self, z):
    z = np.asarray(z, dtype=float)
    low, high = self.limits
    clamped = np.clip(z, -Z_CLAMP, Z_CLAMP)
    if self.form is SigmoidForm.RECIPROCAL_SHIFT:
      out = 1.0 / (self.C + np.exp(clamped))
    else:
      out = self.C / (1.0 + np.exp(-clamped))
    out = np.where(z > Z_CLAMP, high, out)
    out = np.where(z < -Z_CLAMP, low, out)
    return out

  def derivative(self, z):
    """d sigma / dz, with the same clamping (zero beyond it)."""
    z = np.asarray(z, dtype=float)
    clamped = np.clip(z, -Z_CLAMP, Z_CLAMP)
    if self.form is SigmoidForm.RECIPROCAL_SHIFT:
      e = np.exp(clamped)
      out = -e / (self.C + e)**2
    else:
      e = np.exp(-clamped)
      out = self.C * e / (1.0 + e)**2
    return np.where(np.abs(z) > Z_CLAMP, 0.0, out)

  def to_dict(self) -> Dict:
    return {"form": self.form.value, "C": self.C,
            "orientation": self.orientation.value}

  @classmethod
  def from_dict(cls, d: Dict) -> "ScaleInvariantSigmoid":
    sigma = cls(SigmoidForm(d["form"]), d["C"])
    if "orientation" in d and Orientation(d["orientation"]) is not sigma.orientation:
      raise IncompatibleActivationError(
          "orientation %s does not match %s" % (d["orientation"], sigma))
    return sigma


def sigmoid_from_name(name: str, C: float = 1.0) -> ScaleInvariantSigmoid:
  aliases = {
      "reciprocal_shift": SigmoidForm.RECIPROCAL_SHIFT,
      "reciprocal": SigmoidForm.RECIPROCAL_SHIFT,
      "scaled_logistic": SigmoidForm.SCALED_LOGISTIC,
      "logistic": SigmoidForm.SCALED_LOGISTIC,
  }
  if name not in aliases:
    raise IncompatibleActivationError("unknown sigmoid %r" % (name,))
  return ScaleInvariantSigmoid(aliases[name], C)
