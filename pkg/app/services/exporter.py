import logging
import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
# ids fijos en el SVG
matplotlib.rcParams["svg.hashsalt"] = "packspectra"
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402

from app.config import settings  # noqa: E402
from app.core.errors import InvalidInputError  # noqa: E402
from app.models.schemas import Report  # noqa: E402

logger = logging.getLogger(__name__)

# Sin fecha ni herramienta en el SVG: dos corridas iguales dan el mismo archivo
SVG_METADATA = {"Date": None, "Creator": None}


def to_plain(obj):
    """Convierte escalares y arreglos de numpy a tipos JSON nativos."""
    if isinstance(obj, dict):
        return {str(k): to_plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_plain(obj.tolist())
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def _destino(out_dir) -> Path:
    carpeta = Path(out_dir)
    try:
        carpeta.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise InvalidInputError(f"No se puede crear el directorio de salida {carpeta}: {e}")
    return carpeta


def _escribir(path: Path, texto: str) -> Path:
    try:
        path.write_text(texto, encoding="utf-8", newline="\n")
    except OSError as e:
        raise InvalidInputError(f"No se puede escribir {path}: {e}")
    return path


# =========================
# FORMATOS
# =========================
def write_json(report: Report, carpeta: Path) -> Path:
    return _escribir(carpeta / "report.json", report.model_dump_json(indent=2) + "\n")


def write_csv(report: Report, carpeta: Path) -> list:
    rutas = []
    for nombre, df in report.tables.items():
        texto = df.to_csv(index=False, float_format=settings.CSV_FLOAT_FORMAT, lineterminator="\n")
        rutas.append(_escribir(carpeta / f"{nombre}.csv", texto))
    return rutas


def write_xlsx(report: Report, carpeta: Path) -> Path:
    destino = carpeta / "report.xlsx"
    hojas = report.tables or {"results": pd.DataFrame([{"key": k, "value": str(v)} for k, v in report.results.items()])}
    # las barras esenciales mueren en inf
    with pd.ExcelWriter(destino, engine="xlsxwriter",
                        engine_kwargs={"options": {"nan_inf_to_errors": True}}) as writer:
        workbook = writer.book
        # Formato de cabecera
        header_fmt = workbook.add_format({'bold': True, 'bg_color': '#D9E1F2', 'border': 1})
        for nombre, df in hojas.items():
            hoja = nombre[:31]
            df.to_excel(writer, sheet_name=hoja, index=False)
            worksheet = writer.sheets[hoja]
            for col_num, value in enumerate(df.columns.values):
                worksheet.write(0, col_num, value, header_fmt)
                worksheet.set_column(col_num, col_num, 16)
    return destino


# =========================
# GRAFICOS
# =========================
def plot_barcode(df: pd.DataFrame, path: Path) -> Path:
    fig, ax = plt.subplots(figsize=(7, 1 + 0.12 * max(len(df), 1)))
    if len(df):
        finitos = df.loc[np.isfinite(df["death"]), "death"]
        tope = max(float(finitos.max()) if len(finitos) else float(df["birth"].max()), float(df["birth"].max()))
        colores = {0: "tab:blue", 1: "tab:red", 2: "tab:green"}
        for y, (d, b, m) in enumerate(df[["dim", "birth", "death"]].itertuples(index=False)):
            fin = m if math.isfinite(m) else tope
            ax.plot([b, fin], [y, y], color=colores.get(int(d), "k"), lw=2)
            if not math.isfinite(m):
                ax.plot([fin], [y], marker=">", color=colores.get(int(d), "k"))
    ax.set_xlabel("energia (-rho)")
    ax.set_yticks([])
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata=SVG_METADATA)
    plt.close(fig)
    return path


def plot_surface(df: pd.DataFrame, path: Path) -> Path:
    ejes = [c for c in df.columns if c.startswith("e_")]
    fig, ax = plt.subplots(figsize=(5, 5))
    if len(ejes) >= 2:
        tabla = df.groupby(ejes[:2])["vanishes"].any().unstack()
        ax.imshow(tabla.to_numpy(dtype=float).T, origin="lower", cmap="Greys", aspect="auto",
                  extent=[tabla.index.min(), tabla.index.max(), tabla.columns.min(), tabla.columns.max()])
        ax.set_xlabel(ejes[0])
        ax.set_ylabel(ejes[1])
    else:
        ax.step(df[ejes[0]], df["vanishes"].astype(float), where="mid")
        ax.set_xlabel(ejes[0])
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata=SVG_METADATA)
    plt.close(fig)
    return path


def plot_loglog(df: pd.DataFrame, path: Path) -> Path:
    """Primera columna contra la segunda en escala log-log, con la recta ajustada."""
    x, y = df.columns[0], df.columns[1]
    datos = df[(df[x] > 0) & (df[y] > 0)]
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.loglog(datos[x], datos[y], "o")
    if len(datos) >= 2:
        pendiente, intercepto = np.polyfit(np.log(datos[x]), np.log(datos[y]), 1)
        xs = np.geomspace(datos[x].min(), datos[x].max(), 50)
        ax.loglog(xs, np.exp(intercepto) * xs ** pendiente, "-", label=f"pendiente {pendiente:.3f}")
        ax.legend()
    ax.set_xlabel(x)
    ax.set_ylabel(y)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata=SVG_METADATA)
    plt.close(fig)
    return path


PLOTS = {"barcode": plot_barcode, "surface": plot_surface, "scaling": plot_loglog}


def write_svg(report: Report, carpeta: Path) -> list:
    return [PLOTS[nombre](df, carpeta / f"{nombre}.svg") for nombre, df in report.tables.items() if nombre in PLOTS]


# =========================
# PUNTO DE SALIDA
# =========================
def emit(report: Report, formats, out_dir) -> list:
    """Escribe el reporte en los formatos pedidos; la escritura es secuencial."""
    carpeta = _destino(out_dir)
    rutas = []
    for fmt in formats:
        if fmt == "json":
            rutas.append(write_json(report, carpeta))
        elif fmt == "csv":
            rutas += write_csv(report, carpeta)
        elif fmt == "svg":
            rutas += write_svg(report, carpeta)
        elif fmt == "xlsx":
            rutas.append(write_xlsx(report, carpeta))
        else:
            raise InvalidInputError(f"Formato desconocido: {fmt}")
    logger.info("Reporte escrito en %s (%d archivos)", carpeta, len(rutas))
    return rutas
