"""JSON documents for Mps, ActivatedMps and FlatNetwork values.

Every document carries {"format": "mpskit", "version": 1, "type": ...}.
Site data is the row-major (label, phys, left, right) entry list. Integer
tensors are written as JSON integers of any size so they round-trip bit
exactly; floats are written with full precision.
"""
import json
from typing import Dict
from typing import List
from typing import Optional
from typing import Sequence
from typing import Union
import numpy as np
from mpskit.activation import ScaleInvariantSigmoid
from mpskit.algebra import ActivatedMps
from mpskit.errors import ParseError
from mpskit.errors import ShapeError
from mpskit.feature_maps import FeatureMap
from mpskit.feature_maps import feature_map_from_dict
from mpskit.flatten import FlatNetwork
from mpskit.mps import Boundary
from mpskit.mps import Mps
from mpskit.mps import SiteTensor
from mpskit.numbertype import is_integer_array

FORMAT = "mpskit"
VERSION = 1
TYPE_MPS = "mps"
TYPE_ACTIVATED = "activated_mps"
TYPE_FLAT = "flat_network"

_INT64_MAX = 2**63 - 1


def _entries(a: np.ndarray):
  """(dtype name, flat list of python numbers)."""
  if is_integer_array(a):
    return "int", [int(v) for v in a.reshape(-1)]
  return "float", [float(v) for v in a.reshape(-1)]


def _array(data: Sequence, dtype: str, shape) -> np.ndarray:
  size = int(np.prod(shape))
  if len(data) != size:
    raise ShapeError("expected %d entries for shape %s, got %d" %
                     (size, tuple(shape), len(data)))
  if dtype == "int":
    if any(not isinstance(v, int) or isinstance(v, bool) for v in data):
      raise ShapeError("integer data holds non-integer entries")
    if all(abs(v) <= _INT64_MAX for v in data):
      return np.array(data, dtype=np.int64).reshape(shape)
    out = np.empty(size, dtype=object)
    out[:] = data
    return out.reshape(shape)
  if dtype == "float":
    return np.array(data, dtype=float).reshape(shape)
  raise ShapeError("unknown dtype %r" % (dtype,))


def _site_to_dict(site: SiteTensor) -> Dict:
  dtype, data = _entries(site.tensor)
  return {
      "left_bond": site.left_bond,
      "phys_dim": site.phys_dim,
      "right_bond": site.right_bond,
      "label_dim": site.label_dim,
      "dtype": dtype,
      "data": data,
  }


def _site_from_dict(d: Dict) -> SiteTensor:
  try:
    shape = (max(d["label_dim"], 1), d["phys_dim"], d["left_bond"], d["right_bond"])
    a = _array(d["data"], d.get("dtype", "float"), shape)
  except KeyError as e:
    raise ShapeError("site is missing field %s" % e) from e
  return SiteTensor(a if d["label_dim"] else a[0])


def _header(kind: str) -> Dict:
  return {"format": FORMAT, "version": VERSION, "type": kind}


def _fms_to_list(fms: Optional[Sequence[FeatureMap]]):
  return None if fms is None else [fm.to_dict() for fm in fms]


def feature_maps_from_dict(d: Dict) -> Optional[List[FeatureMap]]:
  fms = d.get("feature_maps")
  if fms is None:
    return None
  return [feature_map_from_dict(f) for f in fms]


def mps_to_dict(mps: Mps, fms: Optional[Sequence[FeatureMap]] = None) -> Dict:
  out = _header(TYPE_MPS)
  out.update({
      "boundary": mps.boundary.value,
      "label_site": mps.label_site,
      "sites": [_site_to_dict(s) for s in mps.sites],
      "feature_maps": _fms_to_list(fms),
  })
  return out


def mps_from_dict(d: Dict) -> Mps:
  if "sites" not in d:
    raise ShapeError("document has no sites")
  sites = [_site_from_dict(s) for s in d["sites"]]
  return Mps(sites, boundary=Boundary(d.get("boundary", "open")),
             label_site=d.get("label_site"))


def activated_to_dict(a: ActivatedMps) -> Dict:
  out = mps_to_dict(a.core, a.fms)
  out["type"] = TYPE_ACTIVATED
  out["sigma"] = None if a.sigma is None else a.sigma.to_dict()
  out["out_weights"] = [float(w) for w in a.out_weights]
  return out


def _sigma_from_dict(d: Dict) -> Optional[ScaleInvariantSigmoid]:
  sigma = d.get("sigma")
  return None if sigma is None else ScaleInvariantSigmoid.from_dict(sigma)


def activated_from_dict(d: Dict) -> ActivatedMps:
  fms = feature_maps_from_dict(d)
  if fms is None:
    raise ShapeError("an activated MPS document needs feature maps")
  return ActivatedMps(mps_from_dict(d), d.get("out_weights", []), _sigma_from_dict(d),
                      fms)


def flat_to_dict(f: FlatNetwork) -> Dict:
  dtype, data = _entries(f.weights)
  out = _header(TYPE_FLAT)
  out.update({
      "phys_dims": list(f.phys_dims),
      "hidden_dim": f.hidden_dim,
      "kernel": [list(index) for index in f.kernel],
      "dtype": dtype,
      "weights": data,
      "feature_maps": _fms_to_list(f.fms),
      "activated": f.activated,
      "sigma": None if f.sigma is None else f.sigma.to_dict(),
      "out_weights": None if f.out_weights is None else [float(w) for w in f.out_weights],
  })
  return out


def flat_from_dict(d: Dict) -> FlatNetwork:
  try:
    phys_dims = list(d["phys_dims"])
    shape = (d["hidden_dim"], int(np.prod(phys_dims)))
    weights = _array(d["weights"], d.get("dtype", "float"), shape)
  except KeyError as e:
    raise ShapeError("flat network is missing field %s" % e) from e
  fms = feature_maps_from_dict(d)
  if fms is None:
    raise ShapeError("a flat network document needs feature maps")
  return FlatNetwork(weights, phys_dims, fms, _sigma_from_dict(d), d.get("out_weights"),
                     activated=bool(d.get("activated", False)))


def to_dict(obj: Union[Mps, ActivatedMps, FlatNetwork],
            fms: Optional[Sequence[FeatureMap]] = None) -> Dict:
  if isinstance(obj, ActivatedMps):
    return activated_to_dict(obj)
  if isinstance(obj, FlatNetwork):
    return flat_to_dict(obj)
  if isinstance(obj, Mps):
    return mps_to_dict(obj, fms)
  raise TypeError("cannot serialize %r" % (obj,))


def from_dict(d: Dict) -> Union[Mps, ActivatedMps, FlatNetwork]:
  if not isinstance(d, dict) or d.get("format") != FORMAT:
    raise ShapeError("not an %s document" % FORMAT)
  if d.get("version") != VERSION:
    raise ShapeError("unsupported version %r" % (d.get("version"),))
  kind = d.get("type")
  if kind == TYPE_MPS:
    return mps_from_dict(d)
  if kind == TYPE_ACTIVATED:
    return activated_from_dict(d)
  if kind == TYPE_FLAT:
    return flat_from_dict(d)
  raise ShapeError("unknown document type %r" % (kind,))


def dumps(obj, fms: Optional[Sequence[FeatureMap]] = None) -> str:
  return json.dumps(to_dict(obj, fms), indent=1) + "\n"


def parse_document(text: str) -> Dict:
  """The JSON object in text; syntax errors carry their byte offset."""
  try:
    return json.loads(text)
  except json.JSONDecodeError as e:
    offset = len(text[:e.pos].encode("utf-8"))
    raise ParseError("invalid document: %s" % e.msg, offset) from e


def loads(text: str):
  return from_dict(parse_document(text))


def save(path: str, obj, fms: Optional[Sequence[FeatureMap]] = None):
  with open(path, "w", encoding="utf-8") as f:
    f.write(dumps(obj, fms))


def load_document(path: str) -> Dict:
  with open(path, encoding="utf-8") as f:
    return parse_document(f.read())


def load(path: str):
  return from_dict(load_document(path))
