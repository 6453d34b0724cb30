"""Pipeline stages. Each command reads and writes artifacts under the configured
output directory and returns a process exit code.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from ..core import mie
from ..core.geometry import BinaryImage, threshold
from ..core.metrics import aggregate, per_sample, relative_abs_error, shape_reports, summarize
from ..core.models import (
    FNN_WIDTHS, angular_mask, frequency_block_select, frequency_variant_widths, halfplane_widths, invert,
    kept_angles, predict, reconstruct, sample_diversity, train_aae, train_fnn, train_inn,
)
from ..core.materials import ELASTIC_PRESETS
from ..core.scatter import ScatteringSimulation, far_field_angles, mie_agreement_report
from ..core.shape_generator import ShapeGenerator
from ..errors import ConfigError, MissingArtifactError, ShapeMismatchError
from ..io import (
    RecordKind, build_manifest, load_checkpoint, load_manifest, read_farfield_csv, read_shard,
    save_checkpoint, save_manifest, sha256_file, write_json, write_matrix_csv, write_shard,
    write_table_csv,
)

log = logging.getLogger(__name__)

FAILURE_LIMIT = 0.01
ORACLE_LIMIT = 0.02
COMPARISON_SAMPLES = 10
SCS_KA = np.linspace(0.1, 10.0, 200)
EXIT_NUMERICAL = 4


def _require(path, hint):
    if not path.exists():
        raise MissingArtifactError(f"{path} not found; run `scatter-shape {hint}` first")
    return path


def _require_out(cfg):
    if not cfg.out.is_dir():
        raise ConfigError(f"output directory {cfg.out} does not exist")


def _load_shapes(cfg):
    return read_shard(_require(cfg.artifact("shapes"), "gen"), RecordKind.SHAPES)


def _load_farfields(cfg):
    return read_shard(_require(cfg.artifact("farfields"), "simulate"), RecordKind.FARFIELDS).astype(float)


def _load_manifest(cfg):
    return load_manifest(_require(cfg.artifact("manifest"), "gen"))


def _load_model(cfg, kind):
    return load_checkpoint(_require(cfg.artifact(kind), f"train {kind}"), kind)


def _split(manifest, name, farfields=None):
    """Indices of a split, dropping samples whose far field failed to simulate"""
    idx = manifest.indices(name)
    if farfields is not None:
        idx = idx[np.isfinite(farfields[idx]).all(axis=1)]
    return idx


def cmd_gen(cfg, progress=False):
    _require_out(cfg)
    images = ShapeGenerator(cfg.shape_config).generate(cfg.count, cfg.seed("shapes"))
    write_shard(images, RecordKind.SHAPES, cfg.artifact("shapes"), width=cfg.shape_config.grid ** 2)
    manifest = build_manifest(
        {"shapes": cfg.artifact("shapes").name, "farfields": cfg.artifact("farfields").name},
        cfg.seed("split"), cfg.ratios, count=cfg.count, solver=cfg.snapshot()["solver"],
    )
    save_manifest(manifest, cfg.artifact("manifest"))
    log.info("wrote %d shapes to %s (dataset %s)", cfg.count, cfg.artifact("shapes"), manifest.dataset_id)
    return 0


def _simulation(cfg, progress):
    return ScatteringSimulation({
        "background": cfg.background,
        "scatterer": cfg.scatterer,
        "solver": cfg.solver_config,
        "jobs": cfg.jobs,
        "progress": progress,
    })


def cmd_simulate(cfg, oracle=False, progress=False):
    """Far field of every shape; failed samples are stored as NaN rows and listed in a CSV"""
    shapes = _load_shapes(cfg)
    simulation = _simulation(cfg, progress)
    results = simulation.run(BinaryImage.from_vector(s, cfg.shape_config.domain_size) for s in shapes)
    write_shard(results, RecordKind.FARFIELDS, cfg.artifact("farfields"), width=simulation.width)
    write_table_csv(
        cfg.artifact("failures"),
        [{"index": i, "error": message} for i, message in simulation.failures],
        columns=["index", "error"],
    )
    status = 0
    if oracle:
        rows = mie_agreement_report(
            cfg.oracle_radii, cfg.frequency_list, cfg.background, cfg.scatterer,
            cfg.oracle_grid, cfg.shape_config.domain_size, cfg.solver_config,
        )
        write_table_csv(cfg.artifact("oracle"), rows, columns=["radius", "frequency", "relative_l2"])
        worst = max(row["relative_l2"] for row in rows)
        log.info("disk oracle: worst relative L2 deviation %.4f", worst)
        if worst > ORACLE_LIMIT:
            log.warning("disk oracle deviation %.4f exceeds %.2f", worst, ORACLE_LIMIT)
    if shapes.shape[0] and len(simulation.failures) > FAILURE_LIMIT * shapes.shape[0]:
        log.error("%d of %d samples failed to simulate", len(simulation.failures), shapes.shape[0])
        status = EXIT_NUMERICAL
    return status


def _checkpoint_meta(cfg, stage, data_path):
    return {"config": cfg.train_configs[stage].to_dict(), "data_hash": sha256_file(data_path)}


def cmd_train(cfg, stage, progress=False):
    if stage not in ("aae", "fnn", "inn"):
        raise ConfigError(f"unknown training stage {stage!r}")
    manifest = _load_manifest(cfg)
    shapes = _load_shapes(cfg)
    train_cfg = cfg.train_configs[stage]
    history_path = cfg.out / f"history_{stage}.csv"

    if stage == "aae":
        train, val = manifest.indices("train"), manifest.indices("val")
        model, history = train_aae(shapes[train], train_cfg, validation=shapes[val], progress=progress)
        data = cfg.artifact("shapes")
    else:
        farfields = _load_farfields(cfg)
        train, val = _split(manifest, "train", farfields), _split(manifest, "val", farfields)
        data = cfg.artifact("farfields")
        if stage == "fnn":
            model, history = train_fnn(
                shapes[train], farfields[train], train_cfg,
                validation=(shapes[val], farfields[val]), blocks=len(cfg.frequency_list),
                widths=(shapes.shape[1],) + FNN_WIDTHS[1:-1] + (farfields.shape[1],),
                progress=progress,
            )
        else:
            aae = _load_model(cfg, "aae")
            fnn = _load_model(cfg, "fnn")
            model, history = train_inn(
                farfields[train], aae, fnn, train_cfg, validation=farfields[val], progress=progress,
            )

    save_checkpoint(model, _checkpoint_meta(cfg, stage, data), cfg.artifact(stage))
    write_table_csv(history_path, history.rows, columns=list(history.columns))
    log.info("saved %s checkpoint to %s", stage, cfg.artifact(stage))
    return 0


def _inverse_metrics(inn, aae, fnn, shapes, farfields, split):
    """Shape and far-field reports for inverting each far field with z = μ"""
    _, generated = invert(inn, aae, farfields, mode="mean")
    binary = threshold(generated)
    reports = shape_reports(shapes, generated, split)
    predicted = predict(fnn, binary)
    reports["farfield_error"] = aggregate(
        per_sample(relative_abs_error, farfields, predicted), split, "farfield_error"
    )
    return reports, binary, predicted


def _write_reports(cfg, name, reports):
    columns = list(reports)
    rows = [
        {"sample": i, **{c: reports[c].values[i] for c in columns}}
        for i in range(reports[columns[0]].count)
    ]
    write_table_csv(cfg.out / f"eval_{name}.csv", rows, columns=["sample"] + columns)
    return {c: summarize(r) for c, r in reports.items()}


def cmd_eval(cfg, progress=False):
    manifest = _load_manifest(cfg)
    shapes = _load_shapes(cfg).astype(float)
    farfields = _load_farfields(cfg)
    aae, fnn, inn = (_load_model(cfg, kind) for kind in ("aae", "fnn", "inn"))
    if set(manifest.indices("test")) & set(manifest.indices("train")):
        raise ConfigError("test split overlaps the training split")
    test = _split(manifest, "test", farfields)
    if len(test) == 0:
        raise MissingArtifactError("test split is empty; generate a larger dataset")

    summary = {"dataset_id": manifest.dataset_id, "test_count": int(len(test))}
    summary["aae"] = _write_reports(cfg, "aae", shape_reports(shapes[test], reconstruct(aae, shapes[test]), "test"))
    summary["fnn"] = _write_reports(cfg, "fnn", {
        "relative_error": aggregate(
            per_sample(relative_abs_error, farfields[test], predict(fnn, shapes[test])), "test", "relative_error"
        ),
    })
    reports, _, predicted = _inverse_metrics(inn, aae, fnn, shapes[test], farfields[test], "test")
    summary["inn"] = _write_reports(cfg, "inn", reports)
    write_json(cfg.out / "eval_summary.json", summary)
    write_table_csv(cfg.out / "eval_inn_farfields.csv", _comparison_rows(
        cfg, test[:COMPARISON_SAMPLES], farfields[test[:COMPARISON_SAMPLES]], predicted[:COMPARISON_SAMPLES]
    ))
    log.info("test SSIM %.3f BCE %.3f far-field error %.3f",
             summary["inn"]["ssim"]["mean"], summary["inn"]["bce"]["mean"], summary["inn"]["farfield_error"]["mean"])
    return 0


def _comparison_rows(cfg, indices, targets, predictions):
    angles = np.degrees(far_field_angles(cfg.n_angles))
    rows = []
    for sample, target, prediction in zip(indices, targets, predictions):
        for j, (t, p) in enumerate(zip(target, prediction)):
            rows.append({
                "sample": int(sample),
                "frequency": cfg.frequency_list[j // cfg.n_angles],
                "angle_deg": float(angles[j % cfg.n_angles]),
                "target": float(t),
                "predicted": float(p),
            })
    return rows


def _train_variant(cfg, name, aae, shapes, farfields, manifest, blocks, fnn_widths, inn_widths, progress):
    """Train an FNN/INN pair on transformed far fields; returns test metric summaries"""
    train, val, test = (_split(manifest, s, farfields) for s in ("train", "val", "test"))
    fnn, _ = train_fnn(
        shapes[train], farfields[train], cfg.train_configs["fnn"], validation=(shapes[val], farfields[val]),
        blocks=blocks, widths=fnn_widths, progress=progress,
    )
    inn, _ = train_inn(farfields[train], aae, fnn, cfg.train_configs["inn"], validation=farfields[val],
                       widths=inn_widths, progress=progress)
    save_checkpoint(fnn, _checkpoint_meta(cfg, "fnn", cfg.artifact("farfields")), cfg.out / f"fnn_{name}.ckpt")
    save_checkpoint(inn, _checkpoint_meta(cfg, "inn", cfg.artifact("farfields")), cfg.out / f"inn_{name}.ckpt")
    reports, _, _ = _inverse_metrics(inn, aae, fnn, shapes[test], farfields[test], "test")
    return {name: r.mean for name, r in reports.items()}


def cmd_ablate_frequencies(cfg, progress=False):
    """INN variants fed the first k frequency blocks, k = 1..K"""
    manifest = _load_manifest(cfg)
    shapes = _load_shapes(cfg).astype(float)
    farfields = _load_farfields(cfg)
    aae = _load_model(cfg, "aae")
    ks = list(range(1, len(cfg.frequency_list) + 1))

    def run(k):
        fnn_widths, inn_widths = frequency_variant_widths(k)
        return k, _train_variant(
            cfg, f"k{k}", aae, shapes, frequency_block_select(farfields, k, cfg.n_angles), manifest,
            k, fnn_widths, inn_widths, progress,
        )

    with ThreadPoolExecutor(max_workers=max(1, cfg.jobs)) as executor:
        results = dict(executor.map(run, ks))
    rows = [{"k": k, "bce": results[k]["bce"], "ssim": results[k]["ssim"],
             "farfield_error": results[k]["farfield_error"]} for k in ks]
    write_table_csv(cfg.out / "ablate_frequencies.csv", rows, columns=["k", "bce", "ssim", "farfield_error"])
    for row in rows:
        log.info("k=%d: BCE %.4f SSIM %.4f", row["k"], row["bce"], row["ssim"])
    return 0


def cmd_halfplane(cfg, progress=False):
    """Compare inversion from a restricted angular range against the full range"""
    manifest = _load_manifest(cfg)
    shapes = _load_shapes(cfg).astype(float)
    farfields = _load_farfields(cfg)
    aae, fnn, inn = (_load_model(cfg, kind) for kind in ("aae", "fnn", "inn"))
    test = _split(manifest, "test", farfields)
    full, _, _ = _inverse_metrics(inn, aae, fnn, shapes[test], farfields[test], "test")

    lo, hi = cfg.halfplane
    keep = kept_angles(lo, hi, cfg.n_angles)
    if keep.all():
        masked = {name: r.mean for name, r in full.items()}
    else:
        masked_far = angular_mask(farfields, lo, hi, cfg.n_angles)
        fnn_widths, inn_widths = halfplane_widths(masked_far.shape[1])
        fnn_widths = (shapes.shape[1],) + fnn_widths[1:]
        masked = _train_variant(cfg, "halfplane", aae, shapes, masked_far, manifest,
                                len(cfg.frequency_list), fnn_widths, inn_widths, progress)
    width = int(keep.sum()) * len(cfg.frequency_list)
    rows = [
        {"variant": "full", "lo_deg": 0.0, "hi_deg": 360.0, "width": farfields.shape[1],
         **{name: r.mean for name, r in full.items()}},
        {"variant": "masked", "lo_deg": lo, "hi_deg": hi, "width": width, **masked},
    ]
    write_table_csv(cfg.out / "halfplane.csv", rows,
                    columns=["variant", "lo_deg", "hi_deg", "width", "ssim", "bce", "farfield_error"])
    log.info("half-plane SSIM %.4f vs full %.4f", masked["ssim"], rows[0]["ssim"])
    return 0


def cmd_mie(cfg, material=None, radius=0.5, progress=False):
    """Elastic-cylinder far fields at the configured frequencies and an SCS sweep"""
    _require_out(cfg)
    if material is not None and material not in ELASTIC_PRESETS:
        raise ConfigError(f"unknown elastic material {material!r}, expected one of {', '.join(ELASTIC_PRESETS)}")
    solid = ELASTIC_PRESETS[material] if material is not None else cfg.elastic
    name = material or "elastic"
    angles = far_field_angles(cfg.n_angles)
    rows = []
    for frequency in cfg.frequency_list:
        problem = mie.MieProblem(radius, frequency, cfg.background, solid)
        coeffs = mie.solve_coefficients_cramer(problem)
        amplitudes = mie.far_field_from_coefficients(coeffs, problem.k3, angles)
        rows.extend(
            {"frequency": frequency, "angle_deg": float(np.degrees(a)), "amplitude": float(v)}
            for a, v in zip(angles, amplitudes)
        )
    write_table_csv(cfg.out / f"mie_farfield_{name}.csv", rows, columns=["frequency", "angle_deg", "amplitude"])
    sweep = mie.sweep_scattering_cross_section(solid, cfg.background, SCS_KA, radius)
    write_table_csv(
        cfg.out / f"mie_scs_{name}.csv",
        [{"ka": ka, "scs": sigma, "scs_normalized": norm} for ka, sigma, norm in sweep],
        columns=["ka", "scs", "scs_normalized"],
    )
    return 0


def cmd_invert(cfg, farfield_path, mode="mean", samples=1, seed=None, progress=False):
    _require_out(cfg)
    farfield = read_farfield_csv(_require(Path(farfield_path), "simulate"))
    inn = _load_model(cfg, "inn")
    aae = _load_model(cfg, "aae")
    if farfield.size != inn.input_width:
        raise ShapeMismatchError(f"far field has {farfield.size} values, the inverse model expects {inn.input_width}")
    seed = cfg.seed("invert") if seed is None else seed
    z, image = invert(inn, aae, farfield, mode=mode, seed=seed)
    grid = int(round(np.sqrt(image.size)))
    write_matrix_csv(cfg.out / "invert_latent.csv", z)
    write_matrix_csv(cfg.out / "invert_image.csv", threshold(image).reshape(grid, grid))
    if cfg.artifact("fnn").exists():
        fnn = load_checkpoint(cfg.artifact("fnn"), "fnn")
        if fnn.output_width == farfield.size:
            predicted = predict(fnn, threshold(image))
            write_matrix_csv(cfg.out / "invert_farfield.csv", predicted)
            log.info("far-field reconstruction error %.4f", relative_abs_error(farfield, predicted))
    if samples > 1:
        images, diversity = sample_diversity(inn, aae, farfield, samples, seed)
        write_matrix_csv(cfg.out / "invert_samples.csv", images)
        log.info("%d sampled inversions, mean pairwise SSIM %.4f", samples, diversity)
    log.info("inverted shape covers %d pixels", int(threshold(image).sum()))
    return 0
