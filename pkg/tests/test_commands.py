import json

import pytest

from app.api.commands import build_parser, load_config, main, read_config_file
from app.core.errors import InequalityViolation, InvalidInputError
from app.core.planner import run
from app.models.schemas import RunConfig


def parsear(argv):
    return load_config(build_parser().parse_args(argv))


# =========================
# CONFIGURACION
# =========================
def test_flags_build_a_config():
    cfg = parsear(["surface", "--space", "circle", "--n", "2", "--pairs", "0-1", "--grid", "1,4,8", "--seed", "7"])
    assert cfg.subcommand == "surface"
    assert cfg.pairs == [(0, 1)]
    assert cfg.grid == [1.0, 4.0, 8.0]
    assert cfg.seed == 7


def test_config_file_with_comments_and_aliases(tmp_path):
    archivo = tmp_path / "corrida.cfg"
    archivo.write_text("# toro hexagonal\nspace = hextorus\nlen = 2.0  # lado\nmcmc-steps=10\n", encoding="utf-8")
    assert read_config_file(archivo) == {"space": "hextorus", "length": "2.0", "mcmc_steps": "10"}


def test_flags_override_config_file(tmp_path):
    archivo = tmp_path / "corrida.cfg"
    archivo.write_text("space = circle\nlen = 2.0\n", encoding="utf-8")
    cfg = parsear(["laplace", "--config", str(archivo), "--len", "3.0"])
    assert cfg.space == "circle"
    assert cfg.length == 3.0


def test_unknown_key_rejected(tmp_path):
    archivo = tmp_path / "corrida.cfg"
    archivo.write_text("space = circle\ncolor = rojo\n", encoding="utf-8")
    with pytest.raises(InvalidInputError):
        parsear(["laplace", "--config", str(archivo)])


def test_malformed_config_line_rejected(tmp_path):
    archivo = tmp_path / "corrida.cfg"
    archivo.write_text("space circle\n", encoding="utf-8")
    with pytest.raises(InvalidInputError):
        read_config_file(archivo)


def test_unknown_flag_and_subcommand_rejected():
    with pytest.raises(InvalidInputError):
        parsear(["laplace", "--arcs", "0.5,0.5"])
    with pytest.raises(InvalidInputError):
        parsear(["vuelo"])


def test_config_validation():
    with pytest.raises(ValueError):
        RunConfig(subcommand="laplace", formats="pdf")
    with pytest.raises(ValueError):
        RunConfig(subcommand="laplace", seed=-1)
    with pytest.raises(ValueError):
        RunConfig(subcommand="surface", tracked_dim=2)
    with pytest.raises(ValueError):
        RunConfig(subcommand="spectra", rho_floor=1.0)
    cfg = RunConfig(subcommand="systole", basis="1,0;0.5,0.8")
    assert cfg.basis == [[1.0, 0.0], [0.5, 0.8]]


# =========================
# CODIGOS DE SALIDA
# =========================
def test_exit_zero_writes_report(tmp_path, capsys):
    out = tmp_path / "hex"
    assert main(["systole", "--space", "hextorus", "--out", str(out), "--formats", "json"]) == 0
    impreso = json.loads(capsys.readouterr().out)
    guardado = json.loads((out / "report.json").read_text(encoding="utf-8"))
    assert impreso["passed"] is True
    assert guardado["results"]["loewner_ratio"] == impreso["results"]["loewner_ratio"]


def test_echoed_config_reproduces_the_run(tmp_path, capsys):
    argv = ["laplace", "--space", "circle", "--m", "64", "--k", "5", "--seed", "3", "--out", str(tmp_path)]
    assert main(argv) == 0
    eco = json.loads(capsys.readouterr().out)["config"]
    assert RunConfig(**eco) == parsear(argv)


def test_exit_one_on_invalid_input(tmp_path):
    assert main(["systole", "--space", "circle", "--out", str(tmp_path)]) == 1
    assert main(["laplace", "--m", "8", "--k", "5", "--space", "circle", "--out", str(tmp_path)]) == 1
    assert main(["vuelo"]) == 1


def test_exit_two_on_failed_check(tmp_path):
    # pocos autovalores en un rango bajo: el exponente se aleja de 1/2
    out = tmp_path / "weyl"
    argv = ["weyl", "--space", "circle", "--m", "256", "--e-range", "10,500", "--out", str(out)]
    assert main(argv) == 2
    # el reporte se escribe igual
    assert json.loads((out / "report.json").read_text(encoding="utf-8"))["passed"] is False


def test_failed_check_carries_the_report():
    cfg = RunConfig(subcommand="weyl", space="circle", m=256, e_range=[10.0, 500.0])
    with pytest.raises(InequalityViolation) as info:
        run(cfg, write=False)
    assert info.value.exit_code == 2
    assert info.value.report.results["expected_exponent"] == 0.5


# =========================
# DETERMINISMO
# =========================
def test_csv_is_byte_identical_across_runs(tmp_path):
    for carpeta in ("a", "b"):
        cfg = RunConfig(subcommand="rmax", space="circle", n=4, restarts=2, iterations=40, seed=11,
                        out=str(tmp_path / carpeta), formats=["csv"])
        run(cfg)
    for nombre in ("packing.csv", "trace.csv"):
        assert (tmp_path / "a" / nombre).read_bytes() == (tmp_path / "b" / nombre).read_bytes()


def test_results_do_not_depend_on_thread_count(monkeypatch):
    from app.config import settings

    cfg = RunConfig(subcommand="rmax", space="circle", n=5, restarts=3, iterations=40, seed=5)
    monkeypatch.setattr(settings, "THREADS", 1)
    uno = run(cfg, write=False).results
    monkeypatch.setattr(settings, "THREADS", 3)
    tres = run(cfg, write=False).results
    assert uno == tres
