"""
Superficie de linea de comandos: un subcomando por experimento. Las opciones
pueden venir de un archivo plano clave=valor (--config); los flags lo pisan.
"""
import argparse
import logging
from pathlib import Path

from pydantic import ValidationError

from app.config import settings
from app.core.errors import InequalityViolation, InvalidInputError, PackSpectraError
from app.core.planner import run
from app.models.schemas import SUBCOMMANDS, RunConfig

logger = logging.getLogger(__name__)

# nombre del campo -> (flag, kwargs de argparse)
OPTIONS = {
    "space": ("--space", {"help": "interval | circle | torus | hextorus | box | sphere"}),
    "length": ("--len", {"type": float, "help": "longitud L (circulo, intervalo, lado del toro)"}),
    "dim": ("--dim", {"type": int}),
    "basis": ("--basis", {"help": "filas separadas por ';', p.ej. '1,0;0.5,0.866'"}),
    "sides": ("--sides", {"help": "lados de la caja, separados por coma"}),
    "n": ("--n", {"type": int, "help": "cantidad de puntos / bolas"}),
    "n_list": ("--n-list", {"help": "lista de N separada por coma"}),
    "m": ("--m", {"type": int, "help": "resolucion de grilla / vertices"}),
    "m_list": ("--m-list", {"help": "grillas para refinamiento"}),
    "k": ("--k", {"type": int}),
    "samples": ("--samples", {"type": int}),
    "landmarks": ("--landmarks", {"type": int}),
    "mcmc_steps": ("--mcmc-steps", {"type": int}),
    "restarts": ("--restarts", {"type": int}),
    "iterations": ("--iterations", {"type": int}),
    "multistart": ("--multistart", {"type": int}),
    "quotient": ("--quotient", {"action": "store_true", "help": "configuraciones no ordenadas"}),
    "pairs": ("--pairs", {"help": "pares de indices, p.ej. '0-1,1-2'"}),
    "grid": ("--grid", {"help": "desde,hasta,cantidad"}),
    "tracked_dim": ("--tracked-dim", {"type": int}),
    "eps_factor": ("--eps-factor", {"type": float}),
    "rho_floor": ("--rho-floor", {"type": float}),
    "arcs": ("--arcs", {"help": "longitudes de arcos que suman L"}),
    "squares": ("--squares", {"type": int}),
    "e_range": ("--e-range", {"help": "desde,hasta"}),
    "function": ("--function", {"help": "sinx | sinx_siny | cosx_cosy | const"}),
    "w": ("--w", {"help": "archivo de poligonales"}),
    "wprime": ("--wprime", {"help": "archivo de poligonales"}),
    "curve": ("--curve", {"help": "hopf | torus_link | axis"}),
    "y": ("--y", {"help": "archivo de poligonales"}),
    "r_factor": ("--r-factor", {"type": float}),
    "delta": ("--delta", {"help": "valores de delta separados por coma"}),
    "ambient": ("--ambient", {"help": "sphere | r3"}),
}

ESPACIO = ["space", "length", "dim", "basis", "sides"]
PRESUPUESTO = ["restarts", "iterations"]
ESPECTRO = ["samples", "landmarks", "mcmc_steps", "eps_factor", "rho_floor"]

SUBCOMMAND_OPTIONS = {
    "spectra": ESPACIO + ["n", "quotient"] + ESPECTRO,
    "surface": ESPACIO + ["n", "pairs", "grid", "tracked_dim"] + ESPECTRO,
    "rmax": ESPACIO + ["n"] + PRESUPUESTO,
    "packconst": ESPACIO + ["n_list"] + PRESUPUESTO,
    "zerosets": ESPACIO + ["function", "m", "m_list"],
    "bisect": ESPACIO + ["n", "n_list", "m", "multistart"] + PRESUPUESTO,
    "laplace": ESPACIO + ["m", "k"],
    "localize": ESPACIO + ["m", "n", "arcs", "squares"] + PRESUPUESTO,
    "weyl": ESPACIO + ["m", "e_range"],
    "linking": ["w", "wprime", "curve", "m"],
    "gehring": ["w", "wprime", "curve", "m"],
    "ff": ["y", "n", "r_factor"],
    "tubes": ["y", "delta", "samples", "ambient", "m"],
    "waist": ["restarts", "m"],
    "systole": ESPACIO,
}

ALIASES = {"len": "length"}

HELP = {
    "spectra": "espectro de empaque (barcode de persistencia)",
    "surface": "superficie espectral sobre energias de pares",
    "rmax": "radio maximo de empaque r_max(X;N)",
    "packconst": "constante asintotica de empaque",
    "zerosets": "longitud de conjuntos de ceros en el 2-toro",
    "bisect": "funciones que bisecan bolas y escalamiento N^(1/n)",
    "laplace": "autovalores del laplaciano por diferencias finitas",
    "localize": "cota de localizacion por particiones",
    "weyl": "ajuste de la ley de Weyl",
    "linking": "numero de enlace y grado del mapa de Gauss",
    "gehring": "desigualdad de Gehring",
    "ff": "proyeccion de Federer-Fleming",
    "tubes": "volumen de tubos y delta-Minkowski",
    "waist": "cota superior de la cintura de S^2 por barridos",
    "systole": "sistole y cociente de Loewner de un toro plano",
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InvalidInputError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="packspectra", description="Laboratorio de espectros de empaque")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for nombre in SUBCOMMANDS:
        p = sub.add_parser(nombre, help=HELP[nombre])
        p.add_argument("--config", help="archivo clave=valor", default=argparse.SUPPRESS)
        p.add_argument("--seed", type=int, default=argparse.SUPPRESS)
        p.add_argument("--out", default=argparse.SUPPRESS, help="directorio de salida")
        p.add_argument("--formats", default=argparse.SUPPRESS, help="json,csv,svg,xlsx")
        for campo in SUBCOMMAND_OPTIONS[nombre]:
            flag, kwargs = OPTIONS[campo]
            p.add_argument(flag, dest=campo, default=argparse.SUPPRESS, **kwargs)
    return parser


def read_config_file(path) -> dict:
    """Archivo plano: una clave=valor por linea, '#' comenta."""
    try:
        lineas = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as e:
        raise InvalidInputError(f"No se pudo leer la configuracion {path}: {e}")
    valores = {}
    for nro, linea in enumerate(lineas, start=1):
        limpia = linea.split("#", 1)[0].strip()
        if not limpia:
            continue
        if "=" not in limpia:
            raise InvalidInputError(f"{path}:{nro}: se esperaba clave=valor")
        clave, valor = (x.strip() for x in limpia.split("=", 1))
        clave = clave.replace("-", "_")
        valores[ALIASES.get(clave, clave)] = valor
    return valores


def load_config(args: argparse.Namespace) -> RunConfig:
    flags = vars(args).copy()
    valores = read_config_file(flags.pop("config")) if "config" in flags else {}
    valores.update(flags)
    try:
        return RunConfig(**valores)
    except ValidationError as e:
        raise InvalidInputError(f"Configuracion invalida: {e}")


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        config = load_config(args)
        logger.info("Corriendo %s con semilla %d (%d hilos)", config.subcommand, config.seed, settings.THREADS)
        report = run(config)
    except InequalityViolation as e:
        logger.error("%s", e)
        return e.exit_code
    except PackSpectraError as e:
        logger.error("Entrada invalida: %s", e)
        return e.exit_code
    except Exception:
        logger.exception("Fallo inesperado")
        return 1
    print(report.model_dump_json(indent=2))
    return 0
