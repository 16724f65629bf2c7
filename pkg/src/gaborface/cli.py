"""End-to-end study pipeline and command-line entry point.

Stages (each reads the previous stage's files, enabling partial reruns):

  encode     images + grids -> per-image jet JSON
  matrices   jets/grids/ratings -> per-expresser pair matrices
  correlate  matrices -> per-expresser correlation results + summary table
  embed      matrices -> per-expresser nMDS configurations
  align      configurations -> Procrustes residuals (model vs semantic)
  plot       configurations -> SVG scatter plots
  study      all of the above
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import gabor, grid, nmds, rank_stats, ratings
from .errors import RuntimeFailure, ValidationError
from .similarity import CodedImage, PairMatrix, pairwise_matrix

FEAR_LABEL = "FE"
MIN_GROUP_SIZE = 3


@dataclass
class StudyOptions:
    dims: int = 2
    tolerance: float = nmds.DEFAULT_TOLERANCE
    max_iterations: int = nmds.DEFAULT_MAX_ITERATIONS
    seed: int = 0
    permutations: int | None = None
    scan_dims: int | None = None


@dataclass
class StudyConfig:
    image_dir: Path
    grid_dir: Path
    ratings_path: Path
    out_dir: Path
    expressers: dict  # image_id -> expresser_id
    labels: dict = field(default_factory=dict)  # image_id -> expression abbrev
    wavenumbers: tuple = gabor.DEFAULT_WAVENUMBERS
    orientations: tuple = gabor.DEFAULT_ORIENTATIONS
    sigma: float = gabor.DEFAULT_SIGMA
    options: StudyOptions = field(default_factory=StudyOptions)
    exclude_from_average: tuple = ()
    threads: int = 1

    @classmethod
    def from_file(cls, path):
        path = Path(path)
        try:
            doc = json.loads(path.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ValidationError(f"cannot read study config {path}: {exc}") from exc
        base = path.parent

        def resolve(key):
            if key not in doc:
                raise ValidationError(f"study config missing {key!r}")
            return (base / doc[key]).resolve()

        bank = doc.get("bank", {})
        opts = doc.get("options", {})
        options = StudyOptions(
            dims=int(opts.get("dims", 2)),
            tolerance=float(opts.get("tolerance", nmds.DEFAULT_TOLERANCE)),
            max_iterations=int(opts.get("max_iterations",
                                        nmds.DEFAULT_MAX_ITERATIONS)),
            seed=int(opts.get("seed", 0)),
            permutations=(int(opts["permutations"])
                          if opts.get("permutations") is not None else None),
            scan_dims=(int(opts["scan_dims"])
                       if opts.get("scan_dims") is not None else None),
        )
        return cls(
            image_dir=resolve("image_dir"),
            grid_dir=resolve("grid_dir"),
            ratings_path=resolve("ratings"),
            out_dir=resolve("out_dir"),
            expressers=dict(doc.get("expressers", {})),
            labels=dict(doc.get("labels", {})),
            wavenumbers=tuple(bank.get("wavenumbers", gabor.DEFAULT_WAVENUMBERS)),
            orientations=tuple(bank.get("orientations", gabor.DEFAULT_ORIENTATIONS)),
            sigma=float(bank.get("sigma", gabor.DEFAULT_SIGMA)),
            options=options,
            exclude_from_average=tuple(doc.get("exclude_from_average", ())),
        )

    def bank(self):
        return gabor.build_filter_bank(self.wavenumbers, self.orientations,
                                       self.sigma)

    def image_ids(self):
        return sorted(self.expressers)

    def groups(self):
        """expresser_id -> sorted image ids."""
        groups = {}
        for image_id in self.image_ids():
            groups.setdefault(self.expressers[image_id], []).append(image_id)
        return dict(sorted(groups.items()))

    def drop_fear(self):
        """Remove fear-labelled images and the fear rating column."""
        keep = {i: e for i, e in self.expressers.items()
                if self.labels.get(i) != FEAR_LABEL}
        self.expressers = keep


def _write_atomic(path, data):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    if isinstance(data, str):
        data = data.encode()
    tmp.write_bytes(data)
    os.replace(tmp, path)


def _json_bytes(doc):
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


# ---------------------------------------------------------------------------
# Stage: encode
# ---------------------------------------------------------------------------

def _load_placement(config, image_id, image):
    path = config.grid_dir / f"{image_id}.json"
    if not path.exists():
        raise ValidationError(f"no grid placement for image {image_id!r} "
                              f"(expected {path})")
    placement = grid.load_grid(path.read_text())
    if tuple(placement.source_size) != (image.width, image.height):
        placement = grid.rescale_placement(placement, (image.width, image.height))
    return placement


def _encode_one(config, bank, image_id):
    image_path = config.image_dir / f"{image_id}.pgm"
    if not image_path.exists():
        raise ValidationError(f"missing image file {image_path}")
    image = gabor.read_pgm(image_path)
    placement = _load_placement(config, image_id, image)
    points = [
        (node.name, node.x, node.y, gabor.compute_jet(image, bank, (node.x, node.y)))
        for node in placement.nodes
    ]
    doc = gabor.jet_document(image_id, bank, points)
    _write_atomic(config.out_dir / "jets" / f"{image_id}.json", _json_bytes(doc))


def run_encode(config):
    """Code every study image: one jet JSON per image, deterministic bytes."""
    bank = config.bank()
    ids = config.image_ids()
    # validate everything up front so a missing grid fails before any output
    for image_id in ids:
        image_path = config.image_dir / f"{image_id}.pgm"
        if not image_path.exists():
            raise ValidationError(f"missing image file {image_path}")
        if not (config.grid_dir / f"{image_id}.json").exists():
            raise ValidationError(f"no grid placement for image {image_id!r}")
    if config.threads > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            list(pool.map(lambda i: _encode_one(config, bank, i), ids))
    else:
        for image_id in ids:
            _encode_one(config, bank, image_id)
    return ids


# ---------------------------------------------------------------------------
# Stage: matrices
# ---------------------------------------------------------------------------

def _load_coded_image(config, bank, image_id):
    path = config.out_dir / "jets" / f"{image_id}.json"
    if not path.exists():
        raise ValidationError(f"missing jet file {path}; run the encode stage")
    loaded_id, loaded_bank, points = gabor.parse_jet_document(path.read_text())
    if loaded_bank.fingerprint() != bank.fingerprint():
        raise ValidationError(
            f"jet file {path} was coded with a different filter bank"
        )
    return CodedImage(loaded_id, tuple(jet for _, _, _, jet in points),
                      bank.fingerprint())


def _load_ratings_map(config):
    if not config.ratings_path.exists():
        raise ValidationError(f"missing ratings table {config.ratings_path}")
    vectors = ratings.load_ratings(config.ratings_path.read_text())
    return {v.image_id: v for v in vectors}


def _usable_groups(config):
    usable = {}
    for expresser, ids in config.groups().items():
        if len(ids) < MIN_GROUP_SIZE:
            warnings.warn(f"expresser {expresser!r} has only {len(ids)} images; "
                          "skipping (need >= 3)")
            continue
        usable[expresser] = ids
    return usable


def run_matrices(config):
    """Per expresser: Gabor similarity, geometry and semantic dissimilarity."""
    bank = config.bank()
    rating_map = _load_ratings_map(config)
    results = {}
    for expresser, ids in _usable_groups(config).items():
        missing = [i for i in ids if i not in rating_map]
        if missing:
            raise ValidationError(
                f"expresser {expresser!r}: no ratings for {missing}"
            )
        coded = [_load_coded_image(config, bank, i) for i in ids]
        shapes = []
        for image_id in ids:
            image_path = config.image_dir / f"{image_id}.pgm"
            image = gabor.read_pgm(image_path)
            placement = _load_placement(config, image_id, image)
            shapes.append((image_id, grid.geometry_vector(placement)))
        matrices = {
            "gabor": pairwise_matrix(coded, "gabor"),
            "geometry": pairwise_matrix(shapes, "geometry"),
            "semantic": ratings.semantic_matrix([rating_map[i] for i in ids]),
        }
        for name, matrix in matrices.items():
            stem = config.out_dir / "matrices" / f"{expresser}_{name}"
            _write_atomic(stem.with_suffix(".json"), matrix.to_json() + "\n")
            _write_atomic(stem.with_suffix(".csv"), matrix.to_csv())
        results[expresser] = matrices
    return results


def _load_matrix(config, expresser, name):
    path = config.out_dir / "matrices" / f"{expresser}_{name}.json"
    if not path.exists():
        raise ValidationError(f"missing matrix {path}; run the matrices stage")
    return PairMatrix.from_json(path.read_text())


# ---------------------------------------------------------------------------
# Stage: correlate
# ---------------------------------------------------------------------------

def run_correlate(config):
    """Rank-correlate model matrices against the semantic matrix, emit the
    per-expresser summary table."""
    rows = []
    failures = []
    for expresser in _usable_groups(config):
        try:
            semantic = _load_matrix(config, expresser, "semantic")
            results = {}
            for measure in ("gabor", "geometry"):
                model = _load_matrix(config, expresser, measure)
                result = rank_stats.correlate_model_with_ratings(
                    model, semantic,
                    permutations=config.options.permutations,
                    seed=config.options.seed,
                )
                results[measure] = result
                _write_atomic(
                    config.out_dir / "correlations" / f"{expresser}_{measure}.json",
                    result.to_json(expresser_id=expresser, measure=measure,
                                   seed=config.options.seed) + "\n",
                )
            rows.append((expresser, results["gabor"], results["geometry"]))
        except (ValidationError, RuntimeFailure) as exc:
            warnings.warn(f"expresser {expresser!r} failed: {exc}")
            failures.append(expresser)
    _write_summary(config, rows, failures)
    return rows


def _write_summary(config, rows, failures):
    averaged = [r for r in rows if r[0] not in config.exclude_from_average]
    csv_lines = ["expresser,gabor_rho,gabor_p,geometry_rho,geometry_p,n_pairs"]
    for expresser, gab, geo in rows:
        csv_lines.append(
            f"{expresser},{gab.rho!r},{gab.p_two_sided!r},"
            f"{geo.rho!r},{geo.p_two_sided!r},{gab.n}"
        )
    for expresser in failures:
        csv_lines.append(f"{expresser},failed,,,,")
    if averaged:
        avg_gabor = float(np.mean([r[1].rho for r in averaged]))
        avg_geo = float(np.mean([r[2].rho for r in averaged]))
        csv_lines.append(f"Average,{avg_gabor!r},,{avg_geo!r},,")
    _write_atomic(config.out_dir / "summary.csv", "\n".join(csv_lines) + "\n")

    width = max([len("Expresser")] + [len(r[0]) for r in rows] + [7])
    text = [f"{'Expresser':<{width}}  {'Gabor':>8}  {'Geometry':>8}"]
    for expresser, gab, geo in rows:
        text.append(f"{expresser:<{width}}  {gab.rho:8.3f}  {geo.rho:8.3f}")
    for expresser in failures:
        text.append(f"{expresser:<{width}}  {'failed':>8}  {'failed':>8}")
    if averaged:
        text.append(f"{'Average':<{width}}  {avg_gabor:8.3f}  {avg_geo:8.3f}")
    _write_atomic(config.out_dir / "summary.txt", "\n".join(text) + "\n")


# ---------------------------------------------------------------------------
# Stage: embed / align / plot
# ---------------------------------------------------------------------------

def _model_dissimilarity(matrix):
    """Similarity -> dissimilarity (1 - s) for embedding; rank-equivalent."""
    if matrix.kind == "dissimilarity":
        return matrix
    values = 1.0 - matrix.values
    np.fill_diagonal(values, 0.0)
    values = np.maximum(values, 0.0)
    values = (values + values.T) / 2.0
    return PairMatrix(matrix.item_ids, values, "dissimilarity")


def run_embed(config):
    """nMDS embedding of the Gabor and semantic matrices per expresser."""
    opts = config.options
    configs = {}
    for expresser in _usable_groups(config):
        for measure in ("gabor", "semantic"):
            matrix = _model_dissimilarity(_load_matrix(config, expresser, measure))
            d = min(opts.dims, len(matrix.item_ids) - 1)
            embedded = nmds.embed(matrix, d, max_iterations=opts.max_iterations,
                                  tolerance=opts.tolerance, seed=opts.seed)
            _write_atomic(
                config.out_dir / "embeddings" / f"{expresser}_{measure}.json",
                embedded.to_json(options={
                    "max_iterations": opts.max_iterations,
                    "tolerance": opts.tolerance,
                    "seed": opts.seed,
                }) + "\n",
            )
            configs[(expresser, measure)] = embedded
            if opts.scan_dims:
                rows = nmds.scan_dimensions(
                    matrix, min(opts.scan_dims, len(matrix.item_ids) - 1),
                    max_iterations=opts.max_iterations,
                    tolerance=opts.tolerance, seed=opts.seed)
                csv = "d,stress,rsq\n" + "".join(
                    f"{d_},{s!r},{r!r}\n" for d_, s, r in rows)
                _write_atomic(
                    config.out_dir / "embeddings" / f"{expresser}_{measure}_scan.csv",
                    csv,
                )
    return configs


def _load_configuration(config, expresser, measure):
    path = config.out_dir / "embeddings" / f"{expresser}_{measure}.json"
    if not path.exists():
        raise ValidationError(f"missing embedding {path}; run the embed stage")
    return nmds.Configuration.from_json(path.read_text())


def run_align(config):
    """Procrustes-align each Gabor configuration onto the semantic one."""
    residuals = {}
    for expresser in _usable_groups(config):
        source = _load_configuration(config, expresser, "gabor")
        target = _load_configuration(config, expresser, "semantic")
        aligned, residual = nmds.procrustes_align(source, target)
        _write_atomic(
            config.out_dir / "align" / f"{expresser}.json",
            aligned.to_json(residual=residual, target="semantic") + "\n",
        )
        residuals[expresser] = residual
    return residuals


def render_scatter(configuration, labels=None):
    """Render a 2-d configuration as a deterministic SVG scatter plot."""
    if configuration.d != 2:
        raise ValidationError(
            f"scatter plots need a 2-d configuration, got d={configuration.d}"
        )
    labels = labels or {}
    coords = configuration.coordinates
    size, margin = 640.0, 60.0
    span = float(np.max(np.abs(coords))) or 1.0
    scale = (size / 2.0 - margin) / span  # equal aspect on both axes

    def fmt(v):
        return f"{v:.6f}"

    def to_px(x, y):
        return size / 2.0 + x * scale, size / 2.0 - y * scale

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{int(size)}" '
        f'height="{int(size)}" viewBox="0 0 {int(size)} {int(size)}">',
        f'<rect width="{int(size)}" height="{int(size)}" fill="white"/>',
        f'<line x1="{fmt(margin)}" y1="{fmt(size / 2)}" x2="{fmt(size - margin)}" '
        f'y2="{fmt(size / 2)}" stroke="#cccccc"/>',
        f'<line x1="{fmt(size / 2)}" y1="{fmt(margin)}" x2="{fmt(size / 2)}" '
        f'y2="{fmt(size - margin)}" stroke="#cccccc"/>',
    ]
    for item_id, (x, y) in zip(configuration.item_ids, coords):
        px, py = to_px(x, y)
        label = labels.get(item_id, item_id)
        parts.append(f'<circle cx="{fmt(px)}" cy="{fmt(py)}" r="4" fill="#1f77b4"/>')
        parts.append(
            f'<text x="{fmt(px + 6)}" y="{fmt(py - 6)}" font-family="sans-serif" '
            f'font-size="12">{label}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def run_plot(config):
    """SVG scatter for every stored 2-d configuration."""
    written = []
    for expresser in _usable_groups(config):
        for measure in ("gabor", "semantic"):
            configuration = _load_configuration(config, expresser, measure)
            if configuration.d != 2:
                warnings.warn(f"{expresser}/{measure}: d={configuration.d}, "
                              "skipping plot")
                continue
            svg = render_scatter(configuration, config.labels)
            path = config.out_dir / "plots" / f"{expresser}_{measure}.svg"
            _write_atomic(path, svg)
            written.append(path)
    return written


def run_study(config):
    """Full pipeline: encode, matrices, correlate, embed, align, plot."""
    run_encode(config)
    run_matrices(config)
    rows = run_correlate(config)
    run_embed(config)
    run_align(config)
    run_plot(config)
    return rows


STAGES = {
    "encode": run_encode,
    "matrices": run_matrices,
    "correlate": run_correlate,
    "embed": run_embed,
    "align": run_align,
    "plot": run_plot,
    "study": run_study,
}


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="gaborface",
        description="Gabor-jet facial expression coding and analysis pipeline",
    )
    parser.add_argument("--config", required=True, help="study config JSON")
    parser.add_argument("--stage", choices=sorted(STAGES), default="study")
    parser.add_argument("--out", help="override the output directory")
    parser.add_argument("--seed", type=int, help="override the study seed")
    parser.add_argument("--threads", type=int, default=1)
    parser.add_argument("--exclude", default="",
                        help="comma-separated expressers excluded from averages")
    parser.add_argument("--no-fear", action="store_true",
                        help="drop fear-labelled images before analysis")
    args = parser.parse_args(argv)

    try:
        config = StudyConfig.from_file(args.config)
        if args.out:
            config.out_dir = Path(args.out).resolve()
        if args.seed is not None:
            config.options.seed = args.seed
        if args.threads:
            config.threads = max(1, args.threads)
        if args.exclude:
            config.exclude_from_average = tuple(
                e for e in args.exclude.split(",") if e
            )
        if args.no_fear:
            config.drop_fear()
        STAGES[args.stage](config)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (RuntimeFailure, OSError) as exc:
        print(f"failure: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
