"""
Fixtures spécifiques pour les tests de la ligne de commande.
"""
import json
from pathlib import Path
from typing import Any, Callable, Dict, List, Tuple

import pytest

from flatcyl.cli import main


@pytest.fixture
def run_cli(tmp_path: Path) -> Callable[..., Tuple[int, Dict[str, Any]]]:
    """
    Lance une sous-commande avec --output-dir dans tmp_path.

    Usage:
        code, report = run_cli("classify", "--generators", "generators/z2i.txt")

    Returns:
        (code de sortie, rapport JSON ou {} s'il n'a pas été écrit)
    """
    def _run(command: str, *args: str) -> Tuple[int, Dict[str, Any]]:
        argv: List[str] = [command, *args, "--output-dir", str(tmp_path)]
        code = main(argv)
        report_path = tmp_path / f"{command}_report.json"
        report = json.loads(report_path.read_text(encoding="utf-8")) if report_path.exists() else {}
        return code, report

    return _run


@pytest.fixture
def write_generators(tmp_path: Path) -> Callable[[str], str]:
    """Écrit un fichier de générateurs temporaire et renvoie son chemin."""
    def _write(content: str) -> str:
        path = tmp_path / "generators.txt"
        path.write_text(content, encoding="utf-8")
        return str(path)

    return _write
