"""
Script utilitaire pour lancer un job du pipeline de cylindres plats.

Ce script exécute une sous-commande de la CLI puis affiche un résumé du
rapport produit.

Usage:
    python tools/flatcyl_job.py pipeline --config data/jobs/flat_annulus_pipeline.json
    python tools/flatcyl_job.py classify --generators data/generators/z2i.txt
"""
import json
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from flatcyl.cli import EXIT_OK, build_parser, main  # noqa: E402
from flatcyl.config import Config  # noqa: E402
from flatcyl.loaders import input_loader  # noqa: E402


def print_summary(report_path: Path) -> None:
    """Affiche les champs principaux d'un rapport."""
    with open(report_path, "r", encoding="utf-8") as f:
        report = json.load(f)

    if report["status"] != "ok":
        error = report["error"]
        print(f"❌ {error['module']}.{error['error']}: {error['message']}")
        return

    result = report["result"]
    classification = result.get("classification", result if "case" in result else None)
    if classification is not None:
        print(f"  Case: {classification['case_number']} ({classification['label']})")
        print(f"  Confidence: {classification['confidence']}")
    if "bound" in result:
        bound = result["bound"]
        print(f"  Homotopy classes (per component): {bound['total']}")
        print(f"  Component multiplier: {bound['component_multiplier']}")
    for key in ("residual", "cr_residual", "speed_residual", "sup_norm", "alpha", "area"):
        if key in result:
            print(f"  {key}: {result[key]}")


def main_script():
    """Point d'entrée principal."""
    print("\n" + "=" * 60)
    print("Flat cylinder pipeline job")
    print("=" * 60 + "\n")

    argv = sys.argv[1:]
    if not argv:
        build_parser().print_help()
        sys.exit(1)

    args = build_parser().parse_args(argv)
    output_dir = args.output_dir
    if output_dir is None and args.config:
        config_path = input_loader.resolve(args.config)
        if config_path.exists():
            with open(config_path, "r", encoding="utf-8") as f:
                output_dir = json.load(f).get("output_dir")
    output_dir = Path(output_dir or Config.OUTPUT_DIR)

    print("Configuration:")
    print(f"  Command: {args.command}")
    print(f"  Output directory: {output_dir}")
    print()

    code = main(argv)

    report_path = output_dir / f"{args.command}_report.json"
    print("\n" + "=" * 60)
    print("✅ Job finished" if code == EXIT_OK else f"❌ Job failed (exit code {code})")
    print("=" * 60)
    if report_path.exists():
        print_summary(report_path)
    sys.exit(code)


if __name__ == "__main__":
    main_script()
