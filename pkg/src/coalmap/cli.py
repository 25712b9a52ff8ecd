"""Command-line interface: classify, compare, assess, stats, synth.

Exit codes: 0 ok, 2 bad configuration, 3 I/O failure, 4 data invariant
violation. Failures print one ``coalmap: error <CODE>: <message>`` line to
stderr and remove any output files the command had already written.
"""
import argparse
import csv
import hashlib
import io
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .assessment import evaluate, metrics, read_polygons, stratified_sample
from .errors import CoalmapError, ConfigError, RasterIOError
from .indices import AcmiParams
from .pipeline import agreement, map_coal
from .postprocess import QaBitConfig
from .raster import (NODATA, ScaleOffset, band_config_from_dict, load_scene, read_geo,
                     read_mask, read_qa, write_index, write_mask, write_raster)
from .spectral_stats import (class_stats, jm_matrix, read_samples_csv, write_jm_csv,
                             write_stats_csv)
from .synth import generate_scene, read_layout

log = logging.getLogger("coalmap")

# Options that a --config file may supply; command-line values win.
CONFIG_KEYS = ("sensor", "bands", "scale", "offset", "nodata_dn", "params", "threshold",
               "qa", "qa_bits", "no_median_filter", "n_ec", "n_bg", "seed", "tile_rows", "jobs")

DEFAULTS = {"n_ec": 300, "n_bg": 450, "seed": 0, "qa_bits": "3,4", "jobs": 1}


class Outputs:
    """Track written files so a failed command can remove them."""

    def __init__(self):
        self.paths = []

    def add(self, path):
        if path is not None:
            self.paths.append(Path(path))
        return path

    def cleanup(self):
        for p in self.paths:
            try:
                p.unlink()
            except FileNotFoundError:
                pass


def sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _add_scene_options(p):
    g = p.add_argument_group("input scaling and band mapping")
    g.add_argument("--sensor", choices=["tm", "etm", "oli"], help="band-map preset")
    g.add_argument("--bands", help="explicit 1-based band indices for blue,green,red,nir,swir1,swir2")
    g.add_argument("--scale", type=float, help="reflectance = DN * scale + offset (default 2.75e-5)")
    g.add_argument("--offset", type=float, help="default -0.2")
    g.add_argument("--nodata-dn", type=int, dest="nodata_dn", help="DN sentinel for nodata (default 0)")


def _add_mapping_options(p):
    g = p.add_argument_group("mapping")
    g.add_argument("--params", help="JSON file of ACMI parameter overrides")
    g.add_argument("--threshold", type=float, help="ACMI decision threshold (default 0)")
    g.add_argument("--no-median-filter", action="store_true", default=None,
                   dest="no_median_filter", help="skip the 3x3 median filter")
    g.add_argument("--qa", help="QA_PIXEL raster; flagged pixels become nodata")
    g.add_argument("--qa-bits", dest="qa_bits",
                   help="cloud,shadow[,extra...] bit positions (default 3,4)")
    g.add_argument("--tile-rows", type=int, dest="tile_rows", help="rows per processing tile")
    g.add_argument("--jobs", type=int, help="worker threads (-1 for all cores)")


def _add_sampling_options(p):
    g = p.add_argument_group("accuracy sampling")
    g.add_argument("--n-ec", type=int, dest="n_ec", help="EC samples inside polygons (default 300)")
    g.add_argument("--n-bg", type=int, dest="n_bg", help="background samples (default 450)")
    g.add_argument("--seed", type=int, help="sampling seed (default 0)")


def build_parser():
    parser = argparse.ArgumentParser(prog="coalmap", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-v", "--verbose", action="count", default=0)
    common.add_argument("--config", help="JSON file supplying defaults for any option")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("classify", parents=[common], help="map exposed coal in a scene")
    p.add_argument("inputs", nargs="+", help="one multiband raster or one raster per band")
    p.add_argument("--index", choices=["acmi", "bci"], default="acmi")
    p.add_argument("--out", required=True, help="output mask (uint8: 0 non-EC, 1 EC, 255 nodata)")
    p.add_argument("--emit-index", dest="emit_index", help="also write the float32 ACMI raster")
    _add_scene_options(p)
    _add_mapping_options(p)

    p = sub.add_parser("compare", parents=[common], help="ACMI vs BCI with identical post-processing")
    p.add_argument("inputs", nargs="+")
    p.add_argument("--out-acmi", dest="out_acmi", required=True)
    p.add_argument("--out-bci", dest="out_bci", required=True)
    p.add_argument("--out-diff", dest="out_diff", required=True,
                   help="agreement raster: 0 neither, 1 ACMI only, 2 BCI only, 3 both, 255 nodata")
    p.add_argument("--truth", help="reference EC polygons (GeoJSON or pixel JSON)")
    p.add_argument("--report", help="JSON report path (requires --truth)")
    p.add_argument("--report-csv", dest="report_csv", help="CSV report path (requires --truth)")
    _add_scene_options(p)
    _add_mapping_options(p)
    _add_sampling_options(p)

    p = sub.add_parser("assess", parents=[common], help="accuracy of a mask against reference polygons")
    p.add_argument("--mask", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--out-json", dest="out_json")
    p.add_argument("--out-csv", dest="out_csv")
    _add_sampling_options(p)

    p = sub.add_parser("stats", parents=[common], help="class percentiles and pairwise JM separability")
    p.add_argument("--samples", required=True, help="CSV rows: class,blue,green,red,nir,swir1,swir2")
    p.add_argument("--out-stats", dest="out_stats", help="percentile table CSV (default stdout)")
    p.add_argument("--out-jm", dest="out_jm", help="JM matrix CSV (default stdout)")

    p = sub.add_parser("synth", parents=[common], help="generate a synthetic scene with ground truth")
    p.add_argument("--layout", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True, help="6-band scene raster")
    p.add_argument("--truth", required=True, help="ground-truth mask raster")
    p.add_argument("--polygons", help="write EC regions as pixel-space polygon JSON")
    p.add_argument("--float", action="store_true", dest="as_float",
                   help="write float32 reflectance instead of L2SP-scaled uint16 DNs")
    return parser


def _apply_config(args):
    if not args.config:
        cfg = {}
    else:
        try:
            cfg = json.loads(Path(args.config).read_text())
        except OSError as exc:
            raise RasterIOError(f"cannot read config {args.config}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {args.config} is not valid JSON: {exc}") from exc
        if not isinstance(cfg, dict):
            raise ConfigError("config must be a JSON object")
        unknown = set(cfg) - set(CONFIG_KEYS)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    for key in CONFIG_KEYS:
        if hasattr(args, key) and getattr(args, key) is None:
            setattr(args, key, cfg.get(key, DEFAULTS.get(key)))
    if getattr(args, "sensor", None) and getattr(args, "bands", None):
        raise ConfigError("give either --sensor or --bands, not both")


def _acmi_params(args):
    raw = args.params
    if raw is None:
        params = AcmiParams()
    elif isinstance(raw, dict):
        params = AcmiParams.from_dict(raw)
    else:
        try:
            params = AcmiParams.from_dict(json.loads(Path(raw).read_text()))
        except OSError as exc:
            raise RasterIOError(f"cannot read params {raw}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"params {raw} is not valid JSON: {exc}") from exc
    return params


def _scene(args):
    band_map, scale_offset = band_config_from_dict(
        {k: getattr(args, k) for k in ("sensor", "bands", "scale", "offset", "nodata_dn")})
    return load_scene(args.inputs, band_map, scale_offset)


def _mapping_kwargs(args, params):
    qa_cfg = QaBitConfig.from_list(args.qa_bits)
    return dict(params=params,
                threshold=params.classify_threshold if args.threshold is None else args.threshold,
                qa_band=read_qa(args.qa) if args.qa else None, qa_cfg=qa_cfg,
                median=not args.no_median_filter, tile_rows=args.tile_rows, n_jobs=args.jobs)


def _provenance(args, inputs, params=None):
    doc = {"coalmap_version": __version__, "command": args.command,
           "inputs": {str(p): sha256(p) for p in inputs}}
    options = {k: getattr(args, k) for k in CONFIG_KEYS if hasattr(args, k)}
    options.pop("params", None)
    doc["options"] = options
    if params is not None:
        doc["acmi_params"] = params.to_dict()
    return doc


def _report_rows(reports):
    rows = []
    for name, rep in reports.items():
        m = rep.matrix
        rows.append({"method": name,
                     "ua": f"{rep.ua:.2f}" if rep.ua_defined else "-",
                     "pa": f"{rep.pa:.2f}", "f1": f"{100 * rep.f1:.2f}", "oa": f"{rep.oa:.2f}",
                     "tp": m.tp, "fp": m.fp, "fn": m.fn, "tn": m.tn, "n_nodata": m.n_nodata})
    return rows


def _write_reports(reports, provenance, json_path, csv_path, out, stdout):
    doc = {"reports": {k: v.to_dict() for k, v in reports.items()}, "provenance": provenance}
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    buf = io.StringIO()
    rows = _report_rows(reports)
    w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    if json_path:
        Path(out.add(json_path)).write_text(text)
    if csv_path:
        Path(out.add(csv_path)).write_text(buf.getvalue())
    if not json_path and not csv_path:
        stdout.write(buf.getvalue())


def _sample(shape, geo_transform, truth_path, args):
    polygons = read_polygons(truth_path).to_pixel(geo_transform)
    return stratified_sample(shape, polygons, args.n_ec, args.n_bg, args.seed)


def cmd_classify(args, out, stdout):
    params = _acmi_params(args)
    scene = _scene(args)
    res = map_coal(scene, args.index, **_mapping_kwargs(args, params))
    write_mask(res.mask, out.add(args.out), scene.geo_transform, scene.crs_id)
    if args.emit_index:
        if res.index is None:
            raise ConfigError("--emit-index needs --index acmi; BCI has no continuous score")
        write_index(res.index, out.add(args.emit_index), scene.geo_transform, scene.crs_id)
    n_ec = int(res.mask.ec.sum())
    log.info("%s: %d EC pixels of %d", args.out, n_ec, res.mask.values.size)


def cmd_compare(args, out, stdout):
    if (args.report or args.report_csv) and not args.truth:
        raise ConfigError("--report/--report-csv need --truth")
    params = _acmi_params(args)
    scene = _scene(args)
    kwargs = _mapping_kwargs(args, params)
    masks = {m: map_coal(scene, m, **kwargs).mask for m in ("acmi", "bci")}
    geo = (scene.geo_transform, scene.crs_id)
    write_mask(masks["acmi"], out.add(args.out_acmi), *geo)
    write_mask(masks["bci"], out.add(args.out_bci), *geo)
    write_raster(out.add(args.out_diff), agreement(masks["acmi"], masks["bci"]), *geo,
                 nodata=NODATA)
    if args.truth:
        samples = _sample(scene.shape, scene.geo_transform, args.truth, args)
        reports = {m: metrics(evaluate(mask, samples)) for m, mask in masks.items()}
        prov = _provenance(args, list(args.inputs) + [args.truth], params)
        _write_reports(reports, prov, args.report, args.report_csv, out, stdout)


def cmd_assess(args, out, stdout):
    mask = read_mask(args.mask)
    geo_transform, _ = read_geo(args.mask)
    samples = _sample(mask.shape, geo_transform, args.truth, args)
    reports = {"mask": metrics(evaluate(mask, samples))}
    prov = _provenance(args, [args.mask, args.truth])
    _write_reports(reports, prov, args.out_json, args.out_csv, out, stdout)


def cmd_stats(args, out, stdout):
    sets = read_samples_csv(args.samples)
    stats = [class_stats(s) for s in sets]
    jm = jm_matrix(stats)
    write_stats_csv(stats, out.add(args.out_stats) or stdout)
    write_jm_csv(stats, jm, out.add(args.out_jm) or stdout)


def cmd_synth(args, out, stdout):
    layout, spectra = read_layout(args.layout, args.seed)
    scene, truth = generate_scene(layout, spectra)
    stack = np.stack(scene.bands)
    if args.as_float:
        write_raster(out.add(args.out), stack)
    else:
        dn = ScaleOffset().to_dn(stack)
        write_raster(out.add(args.out), np.clip(dn, 1, 65535).astype(np.uint16), nodata=0)
    write_mask(truth, out.add(args.truth))
    if args.polygons:
        doc = {"coordinate_space": "pixel", "polygons": layout.ec_polygons(spectra)}
        Path(out.add(args.polygons)).write_text(json.dumps(doc, indent=2) + "\n")


COMMANDS = {"classify": cmd_classify, "compare": cmd_compare, "assess": cmd_assess,
            "stats": cmd_stats, "synth": cmd_synth}


def run(argv=None, stdout=None, stderr=None):
    """Parse ``argv`` and execute; returns the process exit status."""
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s", stream=stderr)
    out = Outputs()
    try:
        _apply_config(args)
        COMMANDS[args.command](args, out, stdout)
    except CoalmapError as exc:
        out.cleanup()
        stderr.write(f"coalmap: error {exc.code}: {exc}\n")
        return exc.exit_code
    except OSError as exc:
        out.cleanup()
        stderr.write(f"coalmap: error {RasterIOError.code}: {exc}\n")
        return RasterIOError.exit_code
    except Exception:
        out.cleanup()
        raise
    return 0


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
