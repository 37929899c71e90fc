"""
Data models for the region bound toolkit
"""

from enum import Enum
from fractions import Fraction
from bisect import bisect_right
from typing import Annotated, Any, Callable, Dict, Iterable, List, Optional, Tuple
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    PlainSerializer,
    PlainValidator,
    ValidationError,
    field_serializer,
    field_validator,
    model_validator,
)

from errors import DomainError, UsageError


def parse_rational(value: Any) -> Fraction:
    """Accept ints, Fractions and "num/den" strings; floats are not exact and are refused"""
    if isinstance(value, (bool, float)):
        raise ValueError(f"not an exact rational: {value!r}")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    raise ValueError(f"not an exact rational: {value!r}")


Rational = Annotated[
    Fraction,
    PlainValidator(parse_rational),
    PlainSerializer(lambda q: str(q), return_type=str),
]


def _trim(values: Iterable[int]) -> Tuple[int, ...]:
    entries = list(values)
    while entries and entries[-1] == 0:
        entries.pop()
    return tuple(entries)


class Histogram(BaseModel):
    """Finitely supported count vector; entry i counts regions with value i"""

    model_config = ConfigDict(frozen=True)

    entries: Tuple[int, ...] = ()

    @field_validator("entries", mode="before")
    @classmethod
    def _canonical(cls, value: Any) -> Tuple[int, ...]:
        counts = []
        for entry in value:
            if isinstance(entry, (bool, float)):
                raise ValueError(f"histogram entries must be integers, got {entry!r}")
            count = int(entry)
            if count < 0:
                raise ValueError(f"histogram entries must be non-negative, got {count}")
            counts.append(count)
        return _trim(counts)

    @field_serializer("entries")
    def _decimal_strings(self, entries: Tuple[int, ...]) -> List[str]:
        return [str(entry) for entry in entries]

    @classmethod
    def of(cls, values: Iterable[int]) -> "Histogram":
        """Build from trusted non-negative ints without re-validation"""
        return cls.model_construct(entries=_trim(values))

    @classmethod
    def zero(cls) -> "Histogram":
        return cls.model_construct(entries=())

    @classmethod
    def basis(cls, index: int, count: int = 1) -> "Histogram":
        """count * e_index"""
        if index < 0:
            raise DomainError(f"basis index must be non-negative, got {index}")
        if count < 0:
            raise DomainError(f"basis count must be non-negative, got {count}")
        return cls.of([0] * index + [count])

    @classmethod
    def from_counts(cls, counts: Dict[int, int]) -> "Histogram":
        if not counts:
            return cls.zero()
        values = [0] * (max(counts) + 1)
        for index, count in counts.items():
            values[index] += count
        return cls(entries=values)

    @property
    def size(self) -> int:
        return len(self.entries)

    def __getitem__(self, index: int) -> int:
        if index < 0:
            raise IndexError(index)
        return self.entries[index] if index < len(self.entries) else 0

    def norm(self) -> int:
        return sum(self.entries)

    def suffix_sums(self) -> List[int]:
        """sums[J] = sum of entries at indices >= J, for J < size"""
        sums = [0] * len(self.entries)
        running = 0
        for index in range(len(self.entries) - 1, -1, -1):
            running += self.entries[index]
            sums[index] = running
        return sums

    def __add__(self, other: "Histogram") -> "Histogram":
        if not isinstance(other, Histogram):
            return NotImplemented
        size = max(len(self.entries), len(other.entries))
        return Histogram.of(self[i] + other[i] for i in range(size))

    def __mul__(self, factor: int) -> "Histogram":
        if isinstance(factor, bool) or not isinstance(factor, int):
            return NotImplemented
        if factor < 0:
            raise DomainError(f"histograms only scale by non-negative integers, got {factor}")
        return Histogram.of(entry * factor for entry in self.entries)

    __rmul__ = __mul__

    def __str__(self) -> str:
        terms = []
        for index, count in enumerate(self.entries):
            if count:
                terms.append(f"e{index}" if count == 1 else f"{count}e{index}")
        return "+".join(terms) if terms else "0"


class FamilyStatus(str, Enum):
    PROVEN = "proven"
    CONJECTURED = "conjectured"
    EMPIRICAL = "empirical"  # sampled lower-bound estimate, never a claimed upper bound


class GammaFamily(BaseModel):
    """Named generator of layer-wise bound histograms gamma_{p0,p1}"""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    name: str
    status: FamilyStatus = FamilyStatus.PROVEN
    generator: Callable[[int, int], Histogram] = Field(exclude=True)

    @property
    def conjectured(self) -> bool:
        return self.status is FamilyStatus.CONJECTURED

    def histogram(self, p0: int, p1: int) -> Histogram:
        """gamma_{p0,p1} with p0 > p1 folded to p1 and gamma_{0,p1} = e_{p1}"""
        if p1 < 1 or p0 < 0:
            raise DomainError(f"family {self.name} is defined for p0 >= 0, p1 >= 1; got ({p0}, {p1})")
        if p0 == 0:
            return Histogram.basis(p1)
        return self.generator(min(p0, p1), p1)


class SubnetGammaFamily(BaseModel):
    """Bound histograms for a block of consecutive layers with the given widths"""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    name: str
    topology: Tuple[int, ...] = Field(min_length=1)
    status: FamilyStatus = FamilyStatus.PROVEN
    generator: Callable[[int], Histogram] = Field(exclude=True)

    @field_validator("topology")
    @classmethod
    def _positive_widths(cls, topology: Tuple[int, ...]) -> Tuple[int, ...]:
        if any(width < 1 for width in topology):
            raise ValueError(f"widths must be positive, got {topology}")
        return topology

    @property
    def first_width(self) -> int:
        return self.topology[0]

    def histogram(self, p0: int) -> Histogram:
        if p0 < 0:
            raise DomainError(f"input dimension must be non-negative, got {p0}")
        return self.generator(min(p0, self.first_width))


class Architecture(BaseModel):
    """Input dimension n0 followed by hidden widths n1..nL"""

    model_config = ConfigDict(frozen=True)

    n0: int = Field(ge=1)
    widths: Tuple[int, ...] = Field(min_length=1)

    @field_validator("widths")
    @classmethod
    def _positive_widths(cls, widths: Tuple[int, ...]) -> Tuple[int, ...]:
        if any(width < 1 for width in widths):
            raise ValueError(f"widths must be positive, got {widths}")
        return widths

    @classmethod
    def parse(cls, text: str) -> "Architecture":
        """Parse "n0xn1x...xnL", e.g. "3x6x6" """
        parts = [part.strip() for part in text.lower().split("x")]
        if len(parts) < 2 or not all(part.isdigit() for part in parts):
            raise UsageError(f"architecture must look like n0xn1x...xnL, got {text!r}")
        try:
            return cls(n0=int(parts[0]), widths=tuple(int(part) for part in parts[1:]))
        except ValidationError as e:
            raise UsageError(f"invalid architecture {text!r}: {e.errors()[0]['msg']}")

    @property
    def depth(self) -> int:
        return len(self.widths)

    @property
    def constant_width(self) -> Optional[int]:
        return self.widths[0] if len(set(self.widths)) == 1 else None

    def __str__(self) -> str:
        return "x".join(str(n) for n in (self.n0, *self.widths))


class SubnetworkPartition(BaseModel):
    """Layer boundaries 0 = r0 < r1 < ... < rm = L"""

    model_config = ConfigDict(frozen=True)

    boundaries: Tuple[int, ...] = Field(min_length=2)

    @field_validator("boundaries")
    @classmethod
    def _strictly_increasing(cls, boundaries: Tuple[int, ...]) -> Tuple[int, ...]:
        if boundaries[0] != 0:
            raise ValueError("partition must start at 0")
        if any(a >= b for a, b in zip(boundaries, boundaries[1:])):
            raise ValueError(f"partition boundaries must be strictly increasing, got {boundaries}")
        return boundaries

    @classmethod
    def parse(cls, text: str) -> "SubnetworkPartition":
        """Parse comma separated boundaries, e.g. "0,2,4" """
        try:
            return cls(boundaries=tuple(int(part) for part in text.split(",")))
        except (ValueError, ValidationError) as e:
            raise UsageError(f"invalid partition {text!r}: {e}")

    @classmethod
    def singletons(cls, depth: int) -> "SubnetworkPartition":
        return cls(boundaries=tuple(range(depth + 1)))

    def blocks(self, arch: Architecture) -> List[Tuple[int, ...]]:
        """Widths of each block; the last boundary must equal the depth"""
        if self.boundaries[-1] != arch.depth:
            raise UsageError(
                f"partition ends at {self.boundaries[-1]} but {arch} has {arch.depth} layers"
            )
        return [arch.widths[a:b] for a, b in zip(self.boundaries, self.boundaries[1:])]


class BoundMatrix(BaseModel):
    """(p1+1)x(p1+1) matrix whose column j is cl_j(gamma_{j,p1}) (0-based)"""

    model_config = ConfigDict(frozen=True)

    family: str
    p1: int = Field(ge=1)
    cells: Tuple[Tuple[int, ...], ...]

    @model_validator(mode="after")
    def _square_non_negative(self) -> "BoundMatrix":
        dim = self.p1 + 1
        if len(self.cells) != dim or any(len(row) != dim for row in self.cells):
            raise ValueError(f"bound matrix for p1={self.p1} must be {dim}x{dim}")
        if any(cell < 0 for row in self.cells for cell in row):
            raise ValueError("bound matrix cells must be non-negative")
        return self

    @field_serializer("cells")
    def _decimal_strings(self, cells: Tuple[Tuple[int, ...], ...]) -> List[List[str]]:
        return [[str(cell) for cell in row] for row in cells]

    @property
    def dim(self) -> int:
        return self.p1 + 1

    @property
    def diagonal(self) -> List[int]:
        return [self.cells[i][i] for i in range(self.dim)]

    def column(self, j: int) -> Histogram:
        return Histogram.of(row[j] for row in self.cells)

    def is_upper_triangular(self) -> bool:
        return all(self.cells[i][j] == 0 for i in range(self.dim) for j in range(i))


class Violation(BaseModel):
    """One failed bound-condition check"""
    p0: int
    p1: int
    condition: str  # "lower-bound", "monotonicity" or "support"
    detail: str


class ValidationReport(BaseModel):
    family: str
    p1_max: int
    checked: int = 0
    violations: List[Violation] = Field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


class SignVector(BaseModel):
    """Activation pattern s in {0,1}^p1"""

    model_config = ConfigDict(frozen=True)

    bits: Tuple[int, ...]

    @field_validator("bits")
    @classmethod
    def _binary(cls, bits: Tuple[int, ...]) -> Tuple[int, ...]:
        if any(bit not in (0, 1) for bit in bits):
            raise ValueError(f"sign vector entries must be 0 or 1, got {bits}")
        return bits

    @classmethod
    def from_mask(cls, mask: int, length: int) -> "SignVector":
        return cls.model_construct(bits=tuple((mask >> i) & 1 for i in range(length)))

    @property
    def mask(self) -> int:
        return sum(bit << i for i, bit in enumerate(self.bits))

    @property
    def ones(self) -> int:
        return sum(self.bits)


class Cell(BaseModel):
    """Nonempty open cell of a line arrangement with an interior witness"""

    model_config = ConfigDict(frozen=True)

    sign: SignVector
    witness: Tuple[Rational, Rational]


class OrientedArrangement1D(BaseModel):
    """Points t1 < ... < tp on a line; orientation +1 means active to the right"""

    model_config = ConfigDict(frozen=True)

    points: Tuple[Rational, ...] = ()
    orientations: Tuple[int, ...] = ()

    @model_validator(mode="after")
    def _ordered_and_signed(self) -> "OrientedArrangement1D":
        if len(self.points) != len(self.orientations):
            raise ValueError("one orientation per point is required")
        if any(a >= b for a, b in zip(self.points, self.points[1:])):
            raise ValueError("points must be strictly increasing")
        if any(sigma not in (-1, 1) for sigma in self.orientations):
            raise ValueError("orientations must be +1 or -1")
        return self


Line = Tuple[Rational, Rational, Rational]


class OrientedArrangement2D(BaseModel):
    """Lines (a, b, c); line i is active on a*x + b*y + c > 0"""

    model_config = ConfigDict(frozen=True)

    lines: Tuple[Line, ...] = ()

    @property
    def size(self) -> int:
        return len(self.lines)

    def flipped(self, mask: int) -> "OrientedArrangement2D":
        """Reverse the orientation of every line whose bit is set in mask"""
        lines = tuple(
            (-a, -b, -c) if (mask >> i) & 1 else (a, b, c)
            for i, (a, b, c) in enumerate(self.lines)
        )
        return OrientedArrangement2D.model_construct(lines=lines)


class DenseLayer(BaseModel):
    """Affine map x -> W x + b followed by ReLU"""

    model_config = ConfigDict(frozen=True)

    weights: Tuple[Tuple[Rational, ...], ...] = Field(min_length=1)
    biases: Tuple[Rational, ...] = Field(min_length=1)

    @model_validator(mode="after")
    def _consistent_shape(self) -> "DenseLayer":
        if len(self.weights) != len(self.biases):
            raise ValueError("one bias per weight row is required")
        if len({len(row) for row in self.weights}) != 1 or not self.weights[0]:
            raise ValueError("weight rows must share one positive length")
        return self

    @property
    def input_dim(self) -> int:
        return len(self.weights[0])

    @property
    def width(self) -> int:
        return len(self.biases)


class ReLUNetwork(BaseModel):
    model_config = ConfigDict(frozen=True)

    layers: Tuple[DenseLayer, ...] = Field(min_length=1)

    @model_validator(mode="after")
    def _chained(self) -> "ReLUNetwork":
        for previous, layer in zip(self.layers, self.layers[1:]):
            if layer.input_dim != previous.width:
                raise ValueError(
                    f"layer expects input dimension {layer.input_dim}, previous width is {previous.width}"
                )
        return self

    @property
    def input_dim(self) -> int:
        return self.layers[0].input_dim

    @property
    def widths(self) -> Tuple[int, ...]:
        return tuple(layer.width for layer in self.layers)


class PiecewiseLinearPath(BaseModel):
    """Continuous piecewise affine map R -> R^n; piece k lives between breakpoints k-1 and k"""

    model_config = ConfigDict(frozen=True)

    breakpoints: Tuple[Rational, ...] = ()
    slopes: Tuple[Tuple[Rational, ...], ...]
    intercepts: Tuple[Tuple[Rational, ...], ...]

    @model_validator(mode="after")
    def _one_map_per_piece(self) -> "PiecewiseLinearPath":
        pieces = len(self.breakpoints) + 1
        if len(self.slopes) != pieces or len(self.intercepts) != pieces:
            raise ValueError(f"{len(self.breakpoints)} breakpoints need {pieces} affine pieces")
        return self

    def value(self, x: Fraction) -> Tuple[Fraction, ...]:
        piece = bisect_right(self.breakpoints, x)
        return tuple(s * x + t for s, t in zip(self.slopes[piece], self.intercepts[piece]))


Pattern = Tuple[Tuple[int, ...], ...]


class RegionCount(BaseModel):
    """Attained activation patterns of a network with one-dimensional input"""
    count: int
    layer_histograms: List[Histogram] = Field(default_factory=list)
    patterns: List[Pattern] = Field(default_factory=list)
    output: Optional[PiecewiseLinearPath] = None


class Counterexample(BaseModel):
    """Replayable record of a histogram that escapes the conjectured bound"""
    p1: int
    seed: int
    trial: int
    arrangement: OrientedArrangement2D
    histogram: Histogram
    bound: Histogram


class TauSearchResult(BaseModel):
    p1: int
    trials: int
    seed: int
    join: Histogram
    counterexample: Optional[Counterexample] = None


class BoundResult(BaseModel):
    bound: int
    family: str
    conjectured: bool
    per_layer_histograms: List[Histogram] = Field(default_factory=list)
    architecture: str

    @field_serializer("bound")
    def _decimal_string(self, bound: int) -> str:
        return str(bound)


class CheckResult(BaseModel):
    name: str
    passed: bool
    detail: str = ""


class VerificationLedger(BaseModel):
    suite: str
    checks: List[CheckResult] = Field(default_factory=list)
    artifacts: List[str] = Field(default_factory=list)

    @property
    def failed(self) -> List[CheckResult]:
        return [check for check in self.checks if not check.passed]


class Command(str, Enum):
    BOUND = "bound"
    COMPARE = "compare"
    VERIFY = "verify"
    TAU = "tau"
    MATRIX = "matrix"
    ORACLE = "oracle"


class OutputFormat(str, Enum):
    TEXT = "text"
    JSON = "json"
    CSV = "csv"


class RunConfig(BaseModel):
    """One CLI invocation after flag parsing and settings fallback"""
    command: Command
    arch: Optional[str] = None
    family: str = "star"
    partition: Optional[str] = None
    seed: int = 0
    trials: int = 200
    output_format: OutputFormat = OutputFormat.TEXT
    allow_conjecture: bool = False
    p0: Optional[int] = None
    p1: Optional[int] = None
    suite: str = "all"
    action: Optional[str] = None
    input_path: Optional[str] = None
    sigma: Optional[str] = None
    out_dir: str = "artifacts"
