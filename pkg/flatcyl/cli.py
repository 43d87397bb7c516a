"""
Interface en ligne de commande du pipeline.

Chaque sous-commande charge ses entrées, exécute une étape (ou la chaîne
complète pour ``pipeline``) et écrit ses artefacts dans le répertoire de
sortie : tables CSV et un rapport JSON ``<commande>_report.json`` qui
reprend la configuration effective.

Codes de sortie : 0 succès, 1 configuration invalide, 2 échec numérique.
"""
import argparse
import logging
import os
import shutil
import tempfile
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional

import numpy as np
from marshmallow import ValidationError

from .beltrami import BeltramiField, recover_density, solve_beltrami, sup_norm_bound_check
from .config import Config
from .count import class_bound, complement_disc, rasterize_developed_image
from .develop import build_developing_map, pipeline_classify, pushforward, slit_region
from .errors import FlatCylinderError, JobConfigError
from .geodesy import (
    GeodesicState,
    bounded_distance_pair,
    certify_flat_strip,
    integrate_geodesic,
)
from .isogroup import classify
from .loaders import input_loader
from .metric_core import area, equivariance_residual, flat_locus
from .reports import (
    beltrami_table,
    bound_report,
    classification_report,
    curvature_table,
    density_table,
    developing_table,
    error_report,
    map_table,
    path_table,
    pushforward_report,
    strip_report,
    write_csv,
    write_json,
)
from .schemas import COMMANDS, JobConfigSchema

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICAL = 2

Job = Dict[str, Any]
Handler = Callable[[Job, Path], Dict[str, Any]]


# ============================================================================
# Étapes
# ============================================================================

def _density(job: Job):
    return input_loader.load_metric(job["metric"], job.get("grid_size"))


def _region(density, job: Job, locus=None) -> np.ndarray:
    """Composante plate contenant z0, fendue le long de l'axe réel négatif pour une couronne."""
    domain = density.domain
    locus = locus or flat_locus(density, job.get("flat_tol"))
    region = locus.component_at(domain, job["z0"])
    if job.get("slit", domain.kind == "annulus"):
        region = slit_region(domain, region)
    return region


def _strip(density, job: Job, out: Path) -> Dict[str, Any]:
    (z1, d1), (z2, d2) = job["starts"]
    step = job.get("step")
    gamma1 = integrate_geodesic(density, GeodesicState.unit(density, z1, d1), job["duration"], step)
    gamma2 = integrate_geodesic(density, GeodesicState.unit(density, z2, d2), job["duration"], step)
    write_csv(out / "gamma1.csv", *path_table(gamma1))
    write_csv(out / "gamma2.csv", *path_table(gamma2))
    pair = bounded_distance_pair(density, gamma1, gamma2, job.get("horizon"))
    strip = certify_flat_strip(density, gamma1, gamma2, job.get("flat_tol"), job.get("horizon"), pair)
    return strip_report(strip, pair, area(density, strip.region))


def run_curvature(job: Job, out: Path) -> Dict[str, Any]:
    header, columns = curvature_table(_density(job))
    write_csv(out / "curvature.csv", header, columns)
    K = columns[2]
    return {"nodes": int(K.size), "min": float(K.min()), "max": float(K.max()), "mean": float(K.mean())}


def run_equivariance(job: Job, out: Path) -> Dict[str, Any]:
    density = _density(job)
    domain = density.domain
    nodes = domain.nodes[domain.mask]
    residuals = []
    for M in input_loader.load_deck(job["deck"]):
        samples = nodes[domain.contains(M(nodes))]
        residuals.append({"samples": int(samples.size), "residual": equivariance_residual(density, M, samples)})
    return {"maps": residuals}


def run_beltrami(job: Job, out: Path) -> Dict[str, Any]:
    A = input_loader.load_tensor(job["tensor"])
    bound = sup_norm_bound_check(A)
    mu = BeltramiField.from_tensor(A)
    write_csv(out / "beltrami.csv", *beltrami_table(mu))
    return {"dilation_sup": bound.n, "bound": bound.bound, "sup_norm": mu.sup_norm}


def run_solve(job: Job, out: Path) -> Dict[str, Any]:
    A = input_loader.load_tensor(job["tensor"])
    mu = BeltramiField.from_tensor(A)
    normalization = tuple(job.get("normalize", [0j, 0j])) + (1 + 0j,)
    w = solve_beltrami(mu, normalization[:3], job.get("tolerance"), job.get("max_iters") or None)
    write_csv(out / "map.csv", *map_table(w))
    density = recover_density(A, w)
    write_csv(out / "density.csv", *density_table(density))
    return {
        "residual": w.residual,
        "iterations": w.iterations,
        "finite_difference_residual": w.finite_difference_residual(mu),
        "min_jacobian": float(np.min(w.jacobian[w.domain.mask])),
        "sup_norm": mu.sup_norm,
    }


def run_develop(job: Job, out: Path) -> Dict[str, Any]:
    density = _density(job)
    dev = build_developing_map(density, _region(density, job), job["z0"], path_tol=job.get("tolerance"))
    write_csv(out / "developing_map.csv", *developing_table(dev))
    result = {"nodes": int(dev.region.sum()), "cr_residual": dev.cr_residual, "z0": [dev.z0.real, dev.z0.imag]}
    if "deck" in job:
        result["pushforwards"] = [pushforward_report(pushforward(dev, M))
                                  for M in input_loader.load_deck(job["deck"])]
    return result


def run_geodesic(job: Job, out: Path) -> Dict[str, Any]:
    density = _density(job)
    start = GeodesicState.unit(density, job["start"], job["direction"])
    path = integrate_geodesic(density, start, job["duration"], job.get("step"), stop_at_boundary=True)
    write_csv(out / "geodesic.csv", *path_table(path))
    end = path.end.z
    return {
        "duration": path.duration,
        "exited": path.exited,
        "end": [end.real, end.imag],
        "speed_residual": path.speed_residual(density),
    }


def run_strip(job: Job, out: Path) -> Dict[str, Any]:
    return _strip(_density(job), job, out)


def run_classify(job: Job, out: Path) -> Dict[str, Any]:
    generators = input_loader.load_generators(job["generators"])
    return classification_report(classify(generators, job.get("word_bound")))


def run_count(job: Job, out: Path) -> Dict[str, Any]:
    generators = input_loader.load_generators(job["generators"])
    description = classify(generators, job.get("word_bound"))
    bound = class_bound(description, job["genus"], job.get("radius"))
    return {"classification": classification_report(description), "bound": bound_report(bound)}


def run_pipeline(job: Job, out: Path) -> Dict[str, Any]:
    """
    flat_locus -> certify_flat_strip -> build_developing_map -> pushforward
    -> classify -> class_bound, en un seul rapport.
    """
    density = _density(job)
    domain = density.domain
    locus = flat_locus(density, job.get("flat_tol"))
    result: Dict[str, Any] = {"flat_locus": {"nodes": int(locus.mask.sum()), "components": locus.count,
                                             "tol": locus.tol}}
    if "starts" in job:
        result["strip"] = _strip(density, job, out)

    region = _region(density, job, locus)
    dev = build_developing_map(density, region, job["z0"], path_tol=job.get("tolerance"))
    write_csv(out / "developing_map.csv", *developing_table(dev))
    deck = input_loader.load_deck(job["deck"])
    classified = pipeline_classify(density, region, deck, job["z0"], job.get("word_bound"), dev=dev)
    description = classified.description
    result["developing_map"] = {"nodes": int(region.sum()), "cr_residual": dev.cr_residual}
    result["pushforwards"] = [pushforward_report(p) for p in classified.pushforwards]
    result["classification"] = classification_report(description)
    result["surface_consistent"] = classified.surface_consistent

    if "flat_cylinder" in result["classification"] and "strip" in result:
        result["classification"]["flat_cylinder"]["strip_width"] = result["strip"]["alpha"]

    r = job.get("radius")
    if r is None and description.lattice is not None and description.lattice.rank == 2:
        spacing = float(np.nanmax(np.exp(density.log_grid[region]))) * domain.h
        mask, grid_spacing, origin = rasterize_developed_image(dev.values, description.lattice, spacing)
        r = complement_disc(mask, grid_spacing, origin).r
    result["bound"] = bound_report(class_bound(description, job["genus"], r))
    return result


HANDLERS: Dict[str, Handler] = {
    "curvature": run_curvature,
    "equivariance": run_equivariance,
    "beltrami": run_beltrami,
    "solve": run_solve,
    "develop": run_develop,
    "geodesic": run_geodesic,
    "strip": run_strip,
    "classify": run_classify,
    "count": run_count,
    "pipeline": run_pipeline,
}


# ============================================================================
# Exécution
# ============================================================================

def run(job: Job) -> int:
    """
    Exécute un job validé et écrit son rapport.

    Returns:
        Code de sortie (0, 1 ou 2)
    """
    command = job["command"]
    out = Path(job.get("output_dir") or Config.OUTPUT_DIR)
    effective = JobConfigSchema().dump(job)
    report_path = out / f"{command}_report.json"
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        logger.error(f"❌ [CLI] output directory {out} is not writable: {e}")
        return EXIT_CONFIG

    staging = Path(tempfile.mkdtemp(prefix=f".{command}-", dir=out))
    try:
        result = HANDLERS[command](job, staging)
        for artifact in sorted(staging.iterdir()):
            os.replace(artifact, out / artifact.name)
    except (FileNotFoundError, ValidationError, JobConfigError) as e:
        error = e if isinstance(e, JobConfigError) else JobConfigError(str(e))
        logger.error(f"❌ [CLI] {command}: {error}")
        write_json(report_path, {**error_report(command, error), "config": effective})
        return EXIT_CONFIG
    except FlatCylinderError as e:
        logger.error(f"❌ [CLI] {command} failed in {e.module}: {type(e).__name__}: {e}")
        write_json(report_path, {**error_report(command, e), "config": effective})
        return EXIT_NUMERICAL
    finally:
        shutil.rmtree(staging, ignore_errors=True)

    write_json(report_path, {"command": command, "status": "ok", "config": effective, "result": result})
    logger.info(f"✅ [CLI] {command} done")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    """Parseur à sous-commandes partageant les mêmes options."""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="Fichier JSON de configuration du job")
    common.add_argument("--output-dir", dest="output_dir")
    common.add_argument("--metric", help="Définition de métrique JSON")
    common.add_argument("--tensor", help="Champ de tenseurs CSV x,y,E,F,G")
    common.add_argument("--generators", help="Fichier de générateurs d'isométries")
    common.add_argument("--deck", help="Fichier de transformations de revêtement")
    common.add_argument("--grid-size", dest="grid_size", type=int)
    common.add_argument("--tolerance", type=float)
    common.add_argument("--max-iters", dest="max_iters", type=int)
    common.add_argument("--normalize", help="z0,w0 (ex. 0,0 ou 0.1+0.2j,0)")
    common.add_argument("--flat-tol", dest="flat_tol", type=float)
    common.add_argument("--step", type=float)
    common.add_argument("--duration", type=float)
    common.add_argument("--horizon", type=float)
    common.add_argument("--start", help="Point de départ complexe")
    common.add_argument("--direction", help="Direction initiale complexe")
    common.add_argument("--strip-start", dest="starts", nargs=2, action="append", metavar=("Z", "DIRECTION"))
    common.add_argument("--word-bound", dest="word_bound", type=int)
    common.add_argument("--z0", help="Point base de l'application développante")
    common.add_argument("--slit", action=argparse.BooleanOptionalAction, default=None)
    common.add_argument("--genus", type=int)
    common.add_argument("--radius", type=float, help="Rayon r d'un disque du complémentaire")

    parser = argparse.ArgumentParser(prog="flatcyl", description="Pipeline de cylindres plats")
    subparsers = parser.add_subparsers(dest="command", required=True)
    for command in COMMANDS:
        subparsers.add_parser(command, parents=[common])
    return parser


def _overrides(args: argparse.Namespace) -> Dict[str, Any]:
    overrides = {k: v for k, v in vars(args).items() if k != "config"}
    if args.normalize is not None:
        overrides["normalize"] = args.normalize.split(",")
    return overrides


def main(argv: Optional[List[str]] = None) -> int:
    """Point d'entrée : analyse les arguments, valide la configuration et lance le job."""
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=Config.LOG_LEVEL, format="%(levelname)s %(name)s: %(message)s")
    try:
        job = input_loader.load_job(args.config, _overrides(args))
    except JobConfigError as e:
        logger.error(f"❌ [CLI] {e}")
        return EXIT_CONFIG
    return run(job)
