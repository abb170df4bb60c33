from typing import Any, Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator

from app.config import settings

SUBCOMMANDS = (
    "spectra", "surface", "rmax", "packconst", "zerosets", "bisect", "laplace", "localize",
    "weyl", "linking", "gehring", "ff", "tubes", "waist", "systole",
)
FORMATS = ("json", "csv", "svg", "xlsx")


def _split(value, sep=","):
    if isinstance(value, str):
        return [v.strip() for v in value.split(sep) if v.strip()]
    return value


class RunConfig(BaseModel):
    """Configuracion de una corrida; las claves desconocidas se rechazan."""

    model_config = ConfigDict(extra="forbid")

    subcommand: Literal[SUBCOMMANDS]  # type: ignore[valid-type]

    # Espacio modelo
    space: Literal["interval", "circle", "torus", "hextorus", "box", "sphere"] = "circle"
    length: float = 1.0
    dim: int = 2
    basis: Optional[List[List[float]]] = None
    sides: Optional[List[float]] = None

    # Parametros enteros
    n: Optional[int] = None
    n_list: Optional[List[int]] = None
    m: Optional[int] = None
    m_list: Optional[List[int]] = None
    k: Optional[int] = None
    samples: Optional[int] = None
    landmarks: Optional[int] = None
    mcmc_steps: Optional[int] = None
    restarts: Optional[int] = None
    iterations: Optional[int] = None
    multistart: Optional[int] = None

    # Espectros
    quotient: bool = False
    pairs: Optional[List[Tuple[int, int]]] = None
    grid: Optional[List[float]] = None
    tracked_dim: int = Field(default=1, ge=0, le=1)
    eps_factor: float = Field(default=settings.EPS_FACTOR, gt=0)
    rho_floor: float = Field(default=settings.SPECTRUM_RHO_FLOOR, ge=0, lt=1)

    # Laplaciano
    arcs: Optional[List[float]] = None
    squares: Optional[int] = None
    e_range: Optional[List[float]] = None

    # Curvas y desigualdades
    function: str = "sinx"
    w: Optional[str] = None
    wprime: Optional[str] = None
    curve: Optional[str] = None
    y: Optional[str] = None
    r_factor: float = 2.0
    delta: Optional[List[float]] = None
    ambient: Literal["sphere", "r3"] = "sphere"

    # Salida
    seed: int = Field(default=settings.DEFAULT_SEED, ge=0, lt=2 ** 64)
    out: str = "out"
    formats: List[Literal[FORMATS]] = ["json", "csv"]  # type: ignore[valid-type]

    @field_validator("n_list", "m_list", "sides", "grid", "arcs", "e_range", "delta", "formats", mode="before")
    @classmethod
    def _lista(cls, v):
        return _split(v)

    @field_validator("basis", mode="before")
    @classmethod
    def _matriz(cls, v):
        if isinstance(v, str):
            return [_split(fila) for fila in v.split(";") if fila.strip()]
        return v

    @field_validator("pairs", mode="before")
    @classmethod
    def _pares(cls, v):
        if isinstance(v, str):
            return [tuple(int(x) for x in p.split("-")) for p in _split(v)]
        return v


class Provenance(BaseModel):
    artifact_version: str = settings.ARTIFACT_VERSION
    seed: int
    wall_time_s: float


class Report(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    config: Dict[str, Any]
    results: Dict[str, Any]
    passed: Optional[bool] = None
    provenance: Provenance
    # DataFrames por nombre; se escriben como CSV/xlsx, no van al JSON
    tables: Dict[str, Any] = Field(default_factory=dict, exclude=True)
