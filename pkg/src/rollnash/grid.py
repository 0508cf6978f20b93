"""Cartesian state grids, value tables, triangle-stencil interpolation and
the RGVT1 table file format.

RGVT1 layout: one ASCII header line

    RGVT1 kind=<upper|lower|nash> m=<int> dt=<float> alo=<float> ahi=<float> blo=<float> bhi=<float> na=<int> nb=<int>

then ``na * nb`` little-endian float64 values, row-major (alpha index outer).
Floats in the header use ``repr`` so they round-trip exactly.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from pathlib import Path

import numba
import numpy as np

MAGIC = "RGVT1"
_HEADER_KEYS = ("kind", "m", "dt", "alo", "ahi", "blo", "bhi", "na", "nb")


class TableFormatError(ValueError):
    """Malformed or incompatible value-table file."""


class ValueKind(str, enum.Enum):
    UPPER = "upper"
    LOWER = "lower"
    NASH = "nash"


@dataclass(frozen=True)
class GridSpec:
    alpha_lo: float = -1.0
    alpha_hi: float = 1.0
    beta_lo: float = -1.0
    beta_hi: float = 1.0
    n_alpha: int = 257
    n_beta: int = 257

    def __post_init__(self):
        if not (self.alpha_lo < self.alpha_hi and self.beta_lo < self.beta_hi):
            raise ValueError("grid bounds must satisfy lo < hi on both axes")
        if self.n_alpha < 2 or self.n_beta < 2:
            raise ValueError("grid needs at least 2 points per axis")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_alpha, self.n_beta)

    def alphas(self) -> np.ndarray:
        i = np.arange(self.n_alpha)
        return self.alpha_lo + (self.alpha_hi - self.alpha_lo) / (self.n_alpha - 1) * i

    def betas(self) -> np.ndarray:
        j = np.arange(self.n_beta)
        return self.beta_lo + (self.beta_hi - self.beta_lo) / (self.n_beta - 1) * j

    def states(self) -> np.ndarray:
        """All grid points, shape ``(n_alpha, n_beta, 2)``."""
        aa, bb = np.meshgrid(self.alphas(), self.betas(), indexing="ij")
        return np.stack([aa, bb], axis=-1)

    def clamp(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        return np.stack(
            [np.clip(x[..., 0], self.alpha_lo, self.alpha_hi), np.clip(x[..., 1], self.beta_lo, self.beta_hi)],
            axis=-1,
        )

    def contains(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        return (
            (x[..., 0] >= self.alpha_lo)
            & (x[..., 0] <= self.alpha_hi)
            & (x[..., 1] >= self.beta_lo)
            & (x[..., 1] <= self.beta_hi)
        )


def state_of_index(spec: GridSpec, i_alpha: int, i_beta: int) -> np.ndarray:
    if not (0 <= i_alpha < spec.n_alpha and 0 <= i_beta < spec.n_beta):
        raise IndexError(f"grid index ({i_alpha}, {i_beta}) outside {spec.shape}")
    return np.array(
        [
            spec.alpha_lo + (spec.alpha_hi - spec.alpha_lo) / (spec.n_alpha - 1) * i_alpha,
            spec.beta_lo + (spec.beta_hi - spec.beta_lo) / (spec.n_beta - 1) * i_beta,
        ]
    )


def _nearest_axis(u: np.ndarray, n: int) -> np.ndarray:
    # Ties (u exactly half-way) go to the lower index.
    return np.clip(np.ceil(u - 0.5), 0, n - 1).astype(np.intp)


def nearest_index(spec: GridSpec, x) -> tuple[np.ndarray, np.ndarray]:
    """Index of the grid point nearest to the clamped query."""
    x = spec.clamp(x)
    ua = (x[..., 0] - spec.alpha_lo) / (spec.alpha_hi - spec.alpha_lo) * (spec.n_alpha - 1)
    ub = (x[..., 1] - spec.beta_lo) / (spec.beta_hi - spec.beta_lo) * (spec.n_beta - 1)
    return _nearest_axis(ua, spec.n_alpha), _nearest_axis(ub, spec.n_beta)


@dataclass(frozen=True, eq=False)
class ValueTable:
    spec: GridSpec
    values: np.ndarray
    kind: ValueKind = ValueKind.NASH
    m: int = 0
    dt: float = 0.0

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64, order="C")
        if values.shape != self.spec.shape:
            raise ValueError(f"values shape {values.shape} does not match grid {self.spec.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("value table contains non-finite entries")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "kind", ValueKind(self.kind))

    @classmethod
    def zeros(cls, spec: GridSpec, kind=ValueKind.NASH, dt: float = 0.0) -> "ValueTable":
        return cls(spec, np.zeros(spec.shape), kind, 0, dt)

    @classmethod
    def from_function(cls, spec: GridSpec, fn, kind=ValueKind.NASH, m: int = 0, dt: float = 0.0) -> "ValueTable":
        """Tabulate ``fn(alpha, beta)`` (broadcasting) on the grid."""
        s = spec.states()
        return cls(spec, fn(s[..., 0], s[..., 1]), kind, m, dt)

    def __eq__(self, other):
        if not isinstance(other, ValueTable):
            return NotImplemented
        return (
            self.spec == other.spec
            and self.kind == other.kind
            and self.m == other.m
            and self.dt == other.dt
            and self.values.tobytes() == other.values.tobytes()
        )

    def __call__(self, x):
        return interpolate(self, x)


@numba.njit(cache=True)
def _interp_kernel(values, alo, ahi, blo, bhi, qa, qb, out):
    na, nb = values.shape
    ha = (ahi - alo) / (na - 1)
    hb = (bhi - blo) / (nb - 1)
    for k in range(qa.size):
        a0 = min(max(qa[k], alo), ahi)
        b0 = min(max(qb[k], blo), bhi)
        # Nearest node; exact half-way ties go to the lower index.
        i1 = int(np.ceil((a0 - alo) / (ahi - alo) * (na - 1) - 0.5))
        j1 = int(np.ceil((b0 - blo) / (bhi - blo) * (nb - 1) - 0.5))
        i1 = min(max(i1, 0), na - 1)
        j1 = min(max(j1, 0), nb - 1)
        a1 = alo + ha * i1
        b1 = blo + hb * j1
        i2 = i1 + 1 if a0 > a1 else i1 - 1
        if i2 > na - 1:
            i2 = i1 - 1
        elif i2 < 0:
            i2 = i1 + 1
        j3 = j1 + 1 if b0 > b1 else j1 - 1
        if j3 > nb - 1:
            j3 = j1 - 1
        elif j3 < 0:
            j3 = j1 + 1
        v1 = values[i1, j1]
        da = (alo + ha * i2) - a1
        db = (blo + hb * j3) - b1
        out[k] = (values[i2, j1] - v1) / da * (a0 - a1) + (values[i1, j3] - v1) / db * (b0 - b1) + v1


def interpolate(table: ValueTable, x):
    """Linear interpolation on the right-triangle cell around the nearest node.

    The query is clamped to the domain. With ``x1`` the nearest node and
    ``x2``/``x3`` its neighbours along alpha/beta on the side of the query,

        V0 = (V2 - V1) / da * (a0 - a1) + (V3 - V1) / db * (b0 - b1) + V1

    where ``da = a2 - a1`` and ``db = b3 - b1``. On the last node of an axis
    the neighbour is taken inward, making ``da`` or ``db`` negative.
    Returns a float for a single state, an array otherwise.
    """
    spec = table.spec
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1:] != (2,):
        raise ValueError(f"query must have 2 components on the last axis, got shape {x.shape}")
    qa = np.ascontiguousarray(x[..., 0]).ravel()
    qb = np.ascontiguousarray(x[..., 1]).ravel()
    out = np.empty(qa.size)
    _interp_kernel(table.values, spec.alpha_lo, spec.alpha_hi, spec.beta_lo, spec.beta_hi, qa, qb, out)
    if x.ndim == 1:
        return float(out[0])
    return out.reshape(x.shape[:-1])


def _fmt(v: float) -> str:
    return repr(float(v))


def save_table(table: ValueTable, path) -> None:
    s = table.spec
    header = (
        f"{MAGIC} kind={table.kind.value} m={int(table.m)} dt={_fmt(table.dt)} "
        f"alo={_fmt(s.alpha_lo)} ahi={_fmt(s.alpha_hi)} blo={_fmt(s.beta_lo)} bhi={_fmt(s.beta_hi)} "
        f"na={s.n_alpha} nb={s.n_beta}\n"
    )
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        fh.write(table.values.astype("<f8").tobytes(order="C"))


def _parse_field(fields: dict, key: str, conv):
    if key not in fields:
        raise TableFormatError(f"missing header field '{key}'")
    try:
        return conv(fields[key])
    except ValueError:
        raise TableFormatError(f"bad value for header field '{key}': {fields[key]!r}") from None


def load_table(path) -> ValueTable:
    data = Path(path).read_bytes()
    nl = data.find(b"\n")
    if nl < 0:
        raise TableFormatError("missing header line")
    try:
        tokens = data[:nl].decode("ascii").split()
    except UnicodeDecodeError:
        raise TableFormatError("header is not ASCII") from None
    if not tokens or tokens[0] != MAGIC:
        got = tokens[0] if tokens else ""
        if got.startswith("RGVT"):
            raise TableFormatError(f"unsupported format version {got!r}")
        raise TableFormatError(f"not an {MAGIC} file (magic {got!r})")
    fields = {}
    for tok in tokens[1:]:
        key, sep, val = tok.partition("=")
        if not sep:
            raise TableFormatError(f"malformed header field {tok!r}")
        if key not in _HEADER_KEYS:
            raise TableFormatError(f"unknown header field '{key}'")
        fields[key] = val
    kind = _parse_field(fields, "kind", ValueKind)
    m = _parse_field(fields, "m", int)
    dt = _parse_field(fields, "dt", float)
    bounds = [_parse_field(fields, k, float) for k in ("alo", "ahi", "blo", "bhi")]
    na = _parse_field(fields, "na", int)
    nb = _parse_field(fields, "nb", int)
    try:
        spec = GridSpec(*bounds, na, nb)
    except ValueError as exc:
        raise TableFormatError(f"invalid grid in header: {exc}") from None
    payload = data[nl + 1 :]
    if len(payload) % 8:
        raise TableFormatError(f"payload of {len(payload)} bytes is not a whole number of float64 values")
    count = len(payload) // 8
    if count != na * nb:
        raise TableFormatError(f"dimension mismatch: header says {na}x{nb}={na * nb} values, file has {count}")
    values = np.frombuffer(payload, dtype="<f8").reshape(na, nb).astype(np.float64)
    try:
        return ValueTable(spec, values, kind, m, dt)
    except ValueError as exc:
        raise TableFormatError(str(exc)) from None


def export_csv(table: ValueTable, path) -> None:
    """Write ``alpha,beta,value`` rows, row-major, with round-trip float text."""
    s = table.spec.states()
    with open(path, "w", encoding="ascii") as fh:
        fh.write("alpha,beta,value\n")
        for ia in range(table.spec.n_alpha):
            for ib in range(table.spec.n_beta):
                a, b = s[ia, ib]
                fh.write(f"{_fmt(a)},{_fmt(b)},{_fmt(table.values[ia, ib])}\n")


def read_csv_values(path, spec: GridSpec) -> np.ndarray:
    """Inverse of :func:`export_csv` for the value column."""
    raw = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if raw.shape[0] != spec.n_alpha * spec.n_beta:
        raise TableFormatError(f"expected {spec.n_alpha * spec.n_beta} rows, got {raw.shape[0]}")
    return raw[:, 2].reshape(spec.shape)
