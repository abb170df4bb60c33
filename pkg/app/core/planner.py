import logging
import time

from app.core.errors import InequalityViolation
from app.models.schemas import Provenance, Report, RunConfig
from app.services.experiments import EXPERIMENTS
from app.services.exporter import emit, to_plain

logger = logging.getLogger(__name__)


def run(config: RunConfig, write: bool = True) -> Report:
    """
    Punto único de entrada al laboratorio: corre el experimento del subcomando,
    escribe el reporte y levanta InequalityViolation si una verificacion fallo.
    """
    inicio = time.perf_counter()
    resultado = EXPERIMENTS[config.subcommand](config)
    report = Report(
        config=config.model_dump(mode="json"),
        results=to_plain(resultado.results),
        passed=resultado.passed,
        provenance=Provenance(seed=config.seed, wall_time_s=time.perf_counter() - inicio),
        tables=resultado.tables,
    )
    if write:
        emit(report, config.formats, config.out)
    if resultado.passed is False:
        raise InequalityViolation(f"La verificacion de '{config.subcommand}' fallo", report)
    return report
