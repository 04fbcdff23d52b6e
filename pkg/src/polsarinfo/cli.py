"""Command-line interface: ``polsarinfo <command> ...``."""
import argparse
import logging
import sys
from pathlib import Path

from . import __version__, kernels
from .classifiers import CLASSIFIERS, fit_classifier, predict
from .evaluation import confusion, metrics, metrics_csv
from .experiment import Palette, parse_methods, parse_windows, render_map, sweep
from .filters import FILTERS, apply_filter
from .fileio import (
    read_config,
    read_covariance_dir,
    read_labels,
    read_regions,
    write_covariance_dir,
    write_label_pgm,
)
from .modelio import load_model, save_model
from .raster import LabelMap, to_features
from .synth import default_scene_spec, generate_scene, read_scene_spec, with_seed, write_scene

log = logging.getLogger("polsarinfo")


def _shape(path):
    rows, cols, _ = read_config(path)
    return rows, cols


def cmd_simulate(args):
    spec = read_scene_spec(args.spec) if args.spec else default_scene_spec()
    if args.seed is not None:
        spec = with_seed(spec, args.seed)
    img, labels = generate_scene(spec)
    write_scene(args.out, spec, img, labels)
    log.info("wrote %dx%d scene (seed %d) to %s", spec.height, spec.width, spec.seed, args.out)


def cmd_filter(args):
    img = read_covariance_dir(args.inp)
    write_covariance_dir(apply_filter(args.method, img, args.window), args.out)


def cmd_train(args):
    img = read_covariance_dir(args.inp)
    regions = read_regions(args.regions, img.shape)
    model = fit_classifier(args.classifier, to_features(img), regions)
    save_model(model, args.model)


def cmd_classify(args):
    model = load_model(args.model)
    img = read_covariance_dir(args.inp)
    labels = LabelMap(predict(model, to_features(img)))
    if args.out_map:
        render_map(labels, args.out_map, Palette.default())
    if args.out_labels:
        write_label_pgm(labels, args.out_labels)


def cmd_evaluate(args):
    labels = read_labels(args.labels)
    regions = read_regions(args.regions, labels.shape)
    m = metrics(confusion(labels, regions), method=args.method, window=args.window)
    text = metrics_csv([m])
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_sweep(args):
    img = read_covariance_dir(args.inp)
    regions = read_regions(args.regions, img.shape)
    results = sweep(img, regions, parse_methods(args.methods), parse_windows(args.windows),
                    out_dir=args.out, workers=args.workers)
    for r in results:
        log.info("method %d w=%-2d F=%.4f kappa=%.4f", r.method, r.window, r.metrics.F,
                 r.metrics.kappa)


def build_parser():
    p = argparse.ArgumentParser(prog="polsarinfo", description=__doc__)
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="generate a synthetic scene directory")
    s.add_argument("--spec", help="scene spec file (default: built-in 5-class scene)")
    s.add_argument("--out", required=True)
    s.add_argument("--seed", type=int, help="override the spec's seed")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("filter", help="speckle-filter a covariance directory")
    s.add_argument("--method", required=True, choices=sorted(FILTERS))
    s.add_argument("--window", required=True, type=int)
    s.add_argument("--in", dest="inp", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_filter)

    s = sub.add_parser("train", help="fit a classifier on the training regions")
    s.add_argument("--classifier", required=True, choices=CLASSIFIERS)
    s.add_argument("--in", dest="inp", required=True)
    s.add_argument("--regions", required=True)
    s.add_argument("--model", required=True)
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("classify", help="predict every pixel with a saved model")
    s.add_argument("--model", required=True)
    s.add_argument("--in", dest="inp", required=True)
    s.add_argument("--out-map", help="thematic map (binary PPM)")
    s.add_argument("--out-labels", help="label raster (binary PGM)")
    s.set_defaults(func=cmd_classify)

    s = sub.add_parser("evaluate", help="score a label raster on the testing regions")
    s.add_argument("--labels", required=True, help="label PGM or scene directory")
    s.add_argument("--regions", required=True)
    s.add_argument("--out", help="metrics CSV (default: stdout)")
    s.add_argument("--method", default="", help="value for the CSV method column")
    s.add_argument("--window", type=int, default=0, help="value for the CSV window column")
    s.set_defaults(func=cmd_evaluate)

    s = sub.add_parser("sweep", help="run methods over a range of windows")
    s.add_argument("--in", dest="inp", required=True)
    s.add_argument("--regions", required=True)
    s.add_argument("--methods", default="1,2,3,4")
    s.add_argument("--windows", default="3:19:2")
    s.add_argument("--out", required=True)
    s.add_argument("--workers", type=int, default=1, help="concurrent sweep cells")
    s.set_defaults(func=cmd_sweep)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    log.debug("kernel backend: %s", kernels.BACKEND)
    try:
        args.func(args)
    except (ValueError, OSError, RuntimeError) as exc:
        print(f"polsarinfo {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
