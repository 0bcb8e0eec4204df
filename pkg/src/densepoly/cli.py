"""Command line: gen-synth, polygonize, evaluate, losses.

Exit status is 0 on success, 1 for invalid input or settings and 2 for
file-system errors. Diagnostics go to stderr.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace

from . import io
from .config import ConfigError, PipelineConfig, load_config
from .losses import compute_components, distance_weights, finite_diff_grad_check, optimal_sigma, standard_losses, total_loss
from .metrics import evaluate
from .polygonize import polygonize
from .synth import corrupt, generate_scene, rasterize


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _config(args):
    cfg = PipelineConfig()
    if getattr(args, "config", None):
        cfg = load_config(args.config, cfg)
    return cfg


def _dump_json(path, obj):
    io.atomic_write(path, (json.dumps(obj, indent=2) + "\n").encode("utf-8"))


def cmd_gen_synth(args):
    cfg = _config(args)
    overrides = {
        "synth.seed": args.seed, "synth.width": args.width, "synth.height": args.height,
        "synth.target_density": args.density, "synth.noise_sigma": args.noise_sigma,
        "synth.blur_radius": args.blur,
    }
    cfg = cfg.with_overrides({k: v for k, v in overrides.items() if v is not None})
    sc = cfg.synth
    polys = generate_scene(sc)
    gt = rasterize(polys, sc)
    os.makedirs(args.out_dir, exist_ok=True)
    out = lambda name: os.path.join(args.out_dir, name)
    io.write_geojson(out("gt.geojson"), polys)
    io.write_raster(out("y_int.pmap"), gt.y_int)
    io.write_raster(out("y_edge.pmap"), gt.y_edge)
    io.write_raster(out("ff.ffld"), gt.ff_gt)
    if sc.noise_sigma > 0 or sc.blur_radius > 0:
        f_int, f_edge, ff = corrupt(gt, sc)
        io.write_raster(out("f_int.pmap"), f_int)
        io.write_raster(out("f_edge.pmap"), f_edge)
        io.write_raster(out("f_ff.ffld"), ff)
    print(f"{len(polys)} buildings written to {args.out_dir}", file=sys.stderr)


def cmd_polygonize(args):
    cfg = _config(args)
    overrides = {"polygonize.min_prob": args.min_prob, "polygonize.tol": args.tol}
    cfg = cfg.with_overrides({k: v for k, v in overrides.items() if v is not None})
    f_int = io.read_raster(args.interior)
    f_edge = io.read_raster(args.edge)
    ff = io.read_raster(args.framefield)
    if isinstance(f_int, io.FrameField) or isinstance(f_edge, io.FrameField):
        raise ValueError("--interior and --edge must be PMAP rasters")
    if not isinstance(ff, io.FrameField):
        raise ValueError("--framefield must be an FFLD raster")
    polys = polygonize(f_int, f_edge, ff, cfg.pipeline)
    io.write_geojson(args.out, polys)
    print(f"{len(polys)} polygons written to {args.out}", file=sys.stderr)


def cmd_evaluate(args):
    preds = io.read_geojson(args.pred)
    gts = io.read_geojson(args.gt)
    report = evaluate(preds, gts).as_dict()
    if args.report:
        _dump_json(args.report, report)
    keys = ["f1_50", "f1_75", "ap_50", "ap_75", "ar_50", "ar_75", "map", "mar"]
    print("  ".join(f"{k}={100 * report[k]:.1f}" for k in keys))


def cmd_losses(args):
    cfg = _config(args)
    lp = cfg.losses
    f_int = io.read_raster(args.pred_int)
    f_edge = io.read_raster(args.pred_edge)
    ff = io.read_raster(args.pred_ff)
    gt_polys = io.read_geojson(os.path.join(args.gt_dir, "gt.geojson"))
    y_int = io.read_raster(os.path.join(args.gt_dir, "y_int.pmap"))
    y_edge = io.read_raster(os.path.join(args.gt_dir, "y_edge.pmap"))
    h, w = y_int.shape
    # tangent angles are not stored; they follow from the polygons
    sc = replace(cfg.synth, width=w, height=h)
    gt = rasterize([p.ring for p in gt_polys], sc)
    weight = distance_weights(gt.labels, lp.w0, lp.sigma_w)
    lc = compute_components(f_int, f_edge, ff, y_int, y_edge, gt.tang, weight, lp.c, lp.clamp_eps,
                            lp.smooth_eps, lp.grad_eps)
    sigma = optimal_sigma(lc) if args.optimal_sigma else args.sigma
    report = {"components": lc.as_dict(), "sigma": sigma, "total": total_loss(lc, sigma)}
    if args.check_grad:
        # probes run on the top-left 8x8 window, where every loss is cheap to re-evaluate
        win = (slice(0, 8), slice(0, 8))
        losses = standard_losses(y_int[win], y_edge[win], gt.tang[win], weight[win], lp.c, lp.clamp_eps,
                                 lp.smooth_eps, lp.grad_eps)
        inputs = {"k0": ff.k0[win], "k1": ff.k1[win], "mask": f_int[win], "f_int": f_int[win],
                  "f_edge": f_edge[win]}
        checks = {}
        for loss in losses:
            pred = f_int[win] if loss.name.endswith("_int") else f_edge[win]
            res = finite_diff_grad_check(loss, {**inputs, "pred": pred}, step=1e-4)
            checks[loss.name] = {"max_rel_error": res.max_rel_error, "n_checked": res.n_checked,
                                 "skipped": len(res.skipped)}
        report["grad_check"] = checks
    if args.report:
        _dump_json(args.report, report)
    print(json.dumps(report, indent=2))


def build_parser():
    common = _Parser(add_help=False)
    common.add_argument("--threads", type=int, default=argparse.SUPPRESS,
                        help="worker threads (results never depend on it)")
    common.add_argument("--config", default=argparse.SUPPRESS, help="key=value configuration file")

    p = _Parser(prog="densepoly", description=__doc__.splitlines()[0], parents=[common])
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-synth", parents=[common], help="generate a synthetic scene")
    g.add_argument("--seed", type=int, default=None)
    g.add_argument("--width", type=int, default=None)
    g.add_argument("--height", type=int, default=None)
    g.add_argument("--density", type=float, default=None)
    g.add_argument("--noise-sigma", type=float, default=None)
    g.add_argument("--blur", type=float, default=None)
    g.add_argument("--out-dir", required=True)
    g.set_defaults(func=cmd_gen_synth)

    q = sub.add_parser("polygonize", parents=[common], help="rasters to polygons")
    q.add_argument("--interior", required=True)
    q.add_argument("--edge", required=True)
    q.add_argument("--framefield", required=True)
    q.add_argument("--min-prob", type=float, default=None)
    q.add_argument("--tol", type=float, default=None, help="RDP tolerance in px")
    q.add_argument("--out", required=True)
    q.set_defaults(func=cmd_polygonize)

    e = sub.add_parser("evaluate", parents=[common], help="score predictions against ground truth")
    e.add_argument("--pred", required=True)
    e.add_argument("--gt", required=True)
    e.add_argument("--report", default=None)
    e.set_defaults(func=cmd_evaluate)

    s = sub.add_parser("losses", parents=[common], help="loss components of a prediction triple")
    s.add_argument("--pred-int", required=True)
    s.add_argument("--pred-edge", required=True)
    s.add_argument("--pred-ff", required=True)
    s.add_argument("--gt-dir", required=True)
    sig = s.add_mutually_exclusive_group(required=True)
    sig.add_argument("--sigma", type=float)
    sig.add_argument("--optimal-sigma", action="store_true")
    s.add_argument("--check-grad", action="store_true")
    s.add_argument("--report", default=None)
    s.set_defaults(func=cmd_losses)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        threads = getattr(args, "threads", 1)
        if threads < 1:
            raise UsageError(f"--threads must be >= 1, got {threads}")
        if getattr(args, "sigma", None) is not None and not args.sigma > 0:
            raise UsageError(f"--sigma must be positive, got {args.sigma}")
        args.func(args)
    except (UsageError, ConfigError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except OSError as err:
        print(f"I/O error: {err}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
