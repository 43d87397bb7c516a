"""
Tests de bout en bout des sous-commandes et des codes de sortie.
"""
from pathlib import Path

import numpy as np
import pytest

from flatcyl.cli import EXIT_CONFIG, EXIT_NUMERICAL, EXIT_OK, build_parser, main


class TestParser:
    """Options partagées par toutes les sous-commandes."""

    def test_strip_starts_accumulate(self):
        args = build_parser().parse_args([
            "strip", "--metric", "m.json", "--duration", "2",
            "--strip-start", "1", "1j", "--strip-start", "2.718", "1j",
        ])
        assert args.command == "strip"
        assert args.starts == [["1", "1j"], ["2.718", "1j"]]
        assert args.duration == 2.0

    def test_slit_flag(self):
        parser = build_parser()
        assert parser.parse_args(["develop", "--no-slit"]).slit is False
        assert parser.parse_args(["develop"]).slit is None

    def test_unknown_command(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args(["render"])


class TestCommands:
    """Une exécution par sous-commande représentative."""

    def test_classify_z2i(self, run_cli):
        code, report = run_cli("classify", "--generators", "generators/z2i.txt")
        assert code == EXIT_OK
        assert report["status"] == "ok"
        assert report["result"]["label"] == "Z2i"
        assert report["result"]["case_number"] == 7
        assert report["config"]["generators"] == "generators/z2i.txt"

    def test_curvature_of_hyperbolic_disc(self, run_cli, tmp_path: Path):
        # ============================================
        # WHEN : Job livré, répertoire de sortie surchargé
        # ============================================
        code, report = run_cli("curvature", "--config", "jobs/hyperbolic_curvature.json")

        # ============================================
        # THEN : Table x,y,K et statistiques autour de -1
        # ============================================
        assert code == EXIT_OK
        csv_path = tmp_path / "curvature.csv"
        assert csv_path.read_text(encoding="utf-8").splitlines()[0] == "x,y,K"
        table = np.loadtxt(csv_path, delimiter=",", skiprows=1)
        assert table.shape[1] == 3
        assert abs(report["result"]["mean"] + 1) < 2e-2, f"Mean curvature {report['result']['mean']}"
        print(f"✅ Curvature table with {table.shape[0]} row(s)")

    def test_equivariance_of_flat_annulus(self, run_cli):
        code, report = run_cli("equivariance", "--metric", "metrics/flat_annulus.json",
                               "--deck", "deck/rotate_fifth.txt")
        assert code == EXIT_OK
        (entry,) = report["result"]["maps"]
        assert entry["samples"] > 0
        assert entry["residual"] < 1e-10

    def test_beltrami_and_solve(self, run_cli, tmp_path: Path):
        code, report = run_cli("beltrami", "--tensor", "tensors/stretch_x2.csv")
        assert code == EXIT_OK
        assert report["result"]["dilation_sup"] == pytest.approx(0.6)
        assert report["result"]["bound"] == pytest.approx(1 / 3)

        code, report = run_cli("solve", "--tensor", "tensors/stretch_x2.csv")
        assert code == EXIT_OK
        assert report["result"]["min_jacobian"] > 0
        assert report["result"]["residual"] <= 1e-6
        assert (tmp_path / "map.csv").exists()
        assert (tmp_path / "density.csv").exists()

    def test_geodesic_on_flat_annulus(self, run_cli, tmp_path: Path):
        code, report = run_cli("geodesic", "--metric", "metrics/flat_annulus.json",
                               "--start", "1", "--direction", "1j", "--duration", "3", "--step", "0.01")
        assert code == EXIT_OK
        end = complex(*report["result"]["end"])
        assert abs(end - np.exp(3j)) < 1e-6
        assert report["result"]["exited"] is False
        assert (tmp_path / "geodesic.csv").exists()

    def test_count_torus(self, run_cli):
        code, report = run_cli("count", "--config", "jobs/torus_count.json")
        assert code == EXIT_OK
        assert report["result"]["bound"]["total"] == 48

    def test_count_reports_contradiction(self, run_cli):
        """r plus grand que le plus court vecteur : aucune direction, drapeau levé dans le rapport."""
        code, report = run_cli("count", "--config", "jobs/torus_count.json", "--radius", "10")
        assert code == EXIT_OK
        bound = report["result"]["bound"]
        assert bound["contradiction"] is True
        assert bound["directions"] == []
        assert bound["total"] == 1

    def test_pipeline_flat_annulus(self, run_cli, tmp_path: Path):
        """Couronne 1/|z| modulo la rotation d'un cinquième de tour : cas 5, une classe."""
        # ============================================
        # WHEN : Chaîne complète depuis le job livré
        # ============================================
        code, report = run_cli("pipeline", "--config", "jobs/flat_annulus_pipeline.json")

        # ============================================
        # THEN : Cylindre plat de circonférence 2 pi / 5
        # ============================================
        assert code == EXIT_OK, f"Pipeline failed: {report.get('error')}"
        result = report["result"]
        assert result["classification"]["case_number"] == 5
        assert result["classification"]["flat_cylinder"]["circumference"] == pytest.approx(2 * np.pi / 5, abs=1e-3)
        assert result["bound"]["total"] == 1
        assert result["surface_consistent"] is True
        assert (tmp_path / "developing_map.csv").exists()
        print(f"✅ Pipeline report: {result['classification']['label']}")

    def test_reruns_are_byte_identical(self, run_cli, tmp_path: Path):
        run_cli("count", "--config", "jobs/torus_count.json")
        first = (tmp_path / "count_report.json").read_bytes()
        run_cli("count", "--config", "jobs/torus_count.json")
        assert (tmp_path / "count_report.json").read_bytes() == first


class TestExitCodes:
    """0 succès, 1 configuration, 2 échec numérique."""

    def test_missing_required_input(self, run_cli):
        code, report = run_cli("classify")
        assert code == EXIT_CONFIG
        assert report == {}

    def test_missing_input_file(self, run_cli):
        code, _ = run_cli("classify", "--generators", "generators/absent.txt")
        assert code == EXIT_CONFIG

    def test_invalid_metric_definition(self, run_cli, tmp_path: Path):
        metric = tmp_path / "broken.json"
        metric.write_text('{"kind": "expression", "domain": {"kind": "disc", "radius": 1.0}}', encoding="utf-8")
        code, report = run_cli("curvature", "--metric", str(metric))
        assert code == EXIT_CONFIG
        assert report["status"] == "error"
        assert report["error"]["error"] == "JobConfigError"

    def test_numerical_failure(self, run_cli, write_generators):
        """Translations incommensurables : cas 4, aucune borne."""
        path = write_generators("trans 1 0\ntrans 1.4142135623730951 0\n")
        code, report = run_cli("count", "--generators", path, "--genus", "2")
        assert code == EXIT_NUMERICAL
        assert report["status"] == "error"
        assert report["error"]["error"] == "CaseNotCountable"
        assert report["error"]["module"] == "count"

    def test_relative_output_dir(self, tmp_path: Path, monkeypatch):
        monkeypatch.chdir(tmp_path)
        code = main(["classify", "--generators", "generators/torus.txt", "--output-dir", "reports"])
        assert code == EXIT_OK
        assert (tmp_path / "reports" / "classify_report.json").exists()

    def test_normalization_outside_grid(self, run_cli, tmp_path: Path):
        code, report = run_cli("solve", "--tensor", "tensors/stretch_x2.csv", "--normalize", "50,0")
        assert code == EXIT_NUMERICAL
        assert report["status"] == "error"
        assert report["error"]["error"] == "InvalidNormalization"
        assert report["error"]["module"] == "beltrami"
        assert not (tmp_path / "map.csv").exists()


class TestPartialOutputs:
    """Un job en échec ne laisse aucune table derrière lui."""

    def test_failed_pipeline_leaves_no_table(self, run_cli, tmp_path: Path):
        # ============================================
        # GIVEN : Translation qui ne préserve pas 1/|z|
        # ============================================
        deck = tmp_path / "translate.txt"
        deck.write_text("translate 0.1 0\n", encoding="utf-8")

        # ============================================
        # WHEN : La chaîne échoue après l'application développante
        # ============================================
        code, report = run_cli("pipeline", "--metric", "metrics/flat_annulus.json", "--deck", str(deck),
                               "--z0", "1.5", "--genus", "2")

        # ============================================
        # THEN : Rapport d'erreur seul
        # ============================================
        assert code == EXIT_NUMERICAL
        assert report["error"]["error"] == "NotEquivariant"
        assert report["error"]["module"] == "develop"
        leftovers = sorted(p.name for p in tmp_path.iterdir())
        assert leftovers == ["pipeline_report.json", "translate.txt"], f"Unexpected files: {leftovers}"
        print("✅ Failed pipeline wrote only its error report")

    def test_failed_develop_leaves_no_table(self, run_cli, tmp_path: Path):
        deck = tmp_path / "translate.txt"
        deck.write_text("translate 0.1 0\n", encoding="utf-8")
        code, _ = run_cli("develop", "--metric", "metrics/flat_annulus.json", "--deck", str(deck), "--z0", "1.5")
        assert code == EXIT_NUMERICAL
        assert not (tmp_path / "developing_map.csv").exists()

    def test_successful_run_keeps_no_staging_dir(self, run_cli, tmp_path: Path):
        code, _ = run_cli("solve", "--tensor", "tensors/stretch_x2.csv")
        assert code == EXIT_OK
        assert sorted(p.name for p in tmp_path.iterdir()) == ["density.csv", "map.csv", "solve_report.json"]
