"""Command-line front end.

Subcommands: synth, train, predict, eval, baseline, apps, gradcheck. Every
run that produces artifacts writes its fully resolved configuration as
run_config.json next to them, so results are reproducible from the artifact
directory alone.

Exit codes are stable: 0 success, 1 usage or configuration error, 2 data or
weight-format error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import applications, baselines, data, evaluation, model, training
from .errors import (
    ConfigError,
    ContractError,
    DataError,
    NumericError,
    ShapeError,
    WeightFormatError,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3


class _Parser(argparse.ArgumentParser):
    """argparse that exits with the package's usage code instead of 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _limit_threads():
    try:
        from threadpoolctl import threadpool_limits
    except ImportError:
        return None
    return threadpool_limits(limits=1)


def _write_run_config(out_dir, args):
    cfg = {k: v for k, v in vars(args).items() if k not in ("func",)}
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "run_config.json").write_text(json.dumps(cfg, indent=2, default=str) + "\n")


def _parse_mean(text):
    parts = [p for p in text.replace(",", " ").split() if p]
    if len(parts) != 3:
        raise ConfigError(f"--mean-rgb needs 3 comma-separated values, got {text!r}")
    try:
        return tuple(float(p) for p in parts)
    except ValueError:
        raise ConfigError(f"--mean-rgb values must be numbers, got {text!r}") from None


def _load_split(name):
    return data.SplitSpec(rule=name)


def _hyperparams(args):
    return training.Hyperparams(
        base_lr=args.base_lr,
        lr_power=args.lr_power,
        momentum=args.momentum,
        weight_decay=args.weight_decay,
        batch_size=args.batch_size,
        max_iter=args.iters,
        bias_lr_multiplier=args.bias_lr_mult,
        class_balance=args.class_balance,
    )


def _prepared_samples(samples, target_size, mean_rgb):
    return [data.preprocess(s, target_size, mean_rgb) for s in samples]


def _iter_image_files(folder):
    folder = Path(folder)
    if not folder.is_dir():
        raise DataError(f"not a directory: {folder}")
    files = sorted(p for p in folder.iterdir() if p.suffix.lower() in data.IMAGE_EXTENSIONS)
    if not files:
        raise DataError(f"no images found under {folder}")
    return files


def cmd_synth(args):
    samples = data.make_synthetic(args.n, args.size, args.seed, not args.no_flats)
    data.write_corpus(samples, args.out)
    _write_run_config(args.out, args)
    print(f"wrote {len(samples)} synthetic samples to {args.out}")
    return EXIT_OK


def cmd_train(args):
    train_set, _ = data.ingest(args.data_root, _load_split(args.split))
    if not train_set:
        raise DataError(f"split {args.split!r} leaves no training samples")
    stats = data.corpus_stats(train_set)
    print(f"training on {stats.n_images} images, positive fraction {stats.positive_fraction:.3f}")
    mean = _parse_mean(args.mean_rgb)
    prepared = _prepared_samples(train_set, args.target_size, mean)
    hp = _hyperparams(args)
    initial_net = None
    init = args.init
    if init == "pretrained":
        if not args.pretrained:
            raise ConfigError("--init pretrained requires --pretrained <container>")
        initial_net = model.build(args.config, args.width, init="scratch", seed=args.seed)
        loaded = model.load_pretrained(initial_net, args.pretrained)
        print(f"loaded pretrained layers: {', '.join(loaded) or 'none'}")
        init = "scratch"
    elif args.pretrained:
        raise ConfigError("--pretrained must be combined with --init pretrained")
    ctx = _limit_threads() if args.deterministic else None
    try:
        net, log = training.train(
            prepared, args.config, hp, width_multiplier=args.width,
            init=init, seed=args.seed, initial_net=initial_net,
        )
    finally:
        if ctx is not None:
            ctx.unregister()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    model.save_weights(net, out / "weights")
    log.to_csv(out / "train_log.csv")
    _write_run_config(out, args)
    final = f"final loss/pixel {log.rows[-1][3]:.6f}" if log.rows else "no iterations run"
    print(f"{final}; weights in {out / 'weights'}")
    return EXIT_OK


def cmd_predict(args):
    net = model.load_weights(args.weights, args.config, args.width)
    if args.float32:
        net = net.astype(np.float32)
    mean = _parse_mean(args.mean_rgb)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for path in _iter_image_files(args.images):
        image = data.read_image(path)
        orig_h, orig_w = image.shape[1:]
        sample = data.Sample(path.stem, image, np.zeros(image.shape[1:], dtype=np.uint8))
        prepared = data.preprocess(sample, args.target_size, mean)
        blur_map = model.forward(net, prepared.image[None])
        if blur_map.shape != (orig_h, orig_w) and not args.keep_network_size:
            blur_map = data.bilinear_resize(blur_map, orig_h, orig_w)
        data.write_map(out / f"{path.stem}.png", blur_map)
    _write_run_config(out, args)
    print(f"wrote maps to {out}")
    return EXIT_OK


def _paired_maps_gts(maps_dir, gt_dir):
    maps, gts, stems = [], [], []
    gt_dir = Path(gt_dir)
    unmatched = []
    for path in _iter_image_files(maps_dir):
        mask_path = None
        for ext in data.IMAGE_EXTENSIONS:
            cand = gt_dir / (path.stem + ext)
            if cand.is_file():
                mask_path = cand
                break
        if mask_path is None:
            unmatched.append(path.stem)
            continue
        maps.append(data.read_map(path))
        gts.append(data.read_mask(mask_path))
        stems.append(path.stem)
    if unmatched:
        shown = ", ".join(unmatched[:5])
        raise DataError(f"{len(unmatched)} maps lack ground truth (e.g. {shown})")
    return maps, gts, stems


def cmd_eval(args):
    maps, gts, stems = _paired_maps_gts(args.maps, args.gt)
    report, curve = evaluation.evaluate(maps, gts, args.n_thresholds)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    payload = report.to_dict()
    for row, stem in zip(payload["per_image"], stems):
        row["id"] = stem
    (out / "report.json").write_text(json.dumps(payload, indent=2) + "\n")
    curve.to_csv(out / "pr_curve.csv")
    _write_run_config(out, args)
    print(
        f"ODS {report.ods_f:.4f} (t={report.ods_threshold:.4f})  "
        f"OIS {report.ois_f:.4f}  AP {report.ap:.4f}"
    )
    return EXIT_OK


def cmd_baseline(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for path in _iter_image_files(args.images):
        image = data.read_image(path)
        if args.which == "gradstat":
            conf = baselines.gradient_stat_map(image, args.patch_size, args.stride)
        else:
            conf = baselines.spectral_slope_map(image, args.patch_size, args.stride)
        data.write_map(out / f"{path.stem}.png", conf)
    _write_run_config(out, args)
    print(f"wrote {args.which} maps to {out}")
    return EXIT_OK


def cmd_apps(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    map_files = _iter_image_files(args.maps)
    if args.which == "degree":
        rows = []
        for path in map_files:
            rows.append((applications.blur_degree(data.read_map(path)), path.stem))
        rows.sort()
        with open(out / "degrees.csv", "w") as fh:
            fh.write("id,blur_degree\n")
            for degree, stem in rows:
                fh.write(f"{stem},{degree!r}\n")
    elif args.which == "trimap":
        for path in map_files:
            tri = applications.trimap(data.read_map(path))
            data.write_gray(out / f"{path.stem}.png", applications.trimap_image(tri))
    else:  # magnify
        if not args.images:
            raise ConfigError("apps magnify requires --images")
        images_dir = Path(args.images)
        for path in map_files:
            img_path = None
            for ext in data.IMAGE_EXTENSIONS:
                cand = images_dir / (path.stem + ext)
                if cand.is_file():
                    img_path = cand
                    break
            if img_path is None:
                raise DataError(f"no source image for map {path.stem!r}")
            image = data.read_image(img_path)
            result = applications.magnify_blur(
                image, data.read_map(path), args.sigma, args.thresh
            )
            data.write_image(out / f"{path.stem}.png", np.clip(result, 0.0, 1.0))
    _write_run_config(out, args)
    print(f"wrote {args.which} outputs to {out}")
    return EXIT_OK


def cmd_gradcheck(args):
    if args.size % 16:
        raise ConfigError(f"--size must be divisible by 16, got {args.size}")
    rng = np.random.default_rng(args.seed)
    net = model.build(args.config, args.width, init="scratch", seed=args.seed)
    image = rng.uniform(-0.5, 0.5, size=(3, args.size, args.size))
    gt = (rng.uniform(size=(args.size, args.size)) < 0.5).astype(np.uint8)
    report = training.grad_check(
        net, image, gt, eps=args.eps, n_samples=args.samples, seed=args.seed
    )
    print(
        f"max rel err {report.max_rel_err:.3e} over {report.n_checked} coords "
        f"({report.n_skipped} skipped), worst {report.worst_param or 'n/a'}"
    )
    if report.max_rel_err > args.tol:
        raise NumericError(
            f"gradient check failed: {report.max_rel_err:.3e} > tol {args.tol:.1e}"
        )
    return EXIT_OK


def build_parser():
    parser = _Parser(prog="blurlab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("synth", help="generate a synthetic corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--n", type=int, default=8)
    p.add_argument("--size", type=int, default=64)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-flats", action="store_true")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="train a blur mapper")
    p.add_argument("--data-root", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--config", default="V")
    p.add_argument("--width", type=float, default=1.0)
    p.add_argument("--split", choices=("odd", "even", "all"), default="odd")
    p.add_argument("--iters", type=int, default=10000)
    p.add_argument("--batch-size", type=int, default=3)
    p.add_argument("--base-lr", type=float, default=2.0 ** -10)
    p.add_argument("--lr-power", type=float, default=0.9)
    p.add_argument("--momentum", type=float, default=0.9)
    p.add_argument("--weight-decay", type=float, default=5e-4)
    p.add_argument("--bias-lr-mult", type=float, default=2.0)
    p.add_argument("--class-balance", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--init", choices=("scratch", "zero", "pretrained"), default="scratch")
    p.add_argument("--pretrained", default=None, help="weight container for --init pretrained")
    p.add_argument("--target-size", type=int, default=384, help="0 keeps native size")
    p.add_argument("--mean-rgb",
                   default=",".join(str(v) for v in data.DEFAULT_MEAN_RGB))
    p.add_argument("--deterministic", action="store_true",
                   help="limit BLAS to one thread for bit-stable runs")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="run inference over a folder of images")
    p.add_argument("--images", required=True)
    p.add_argument("--weights", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--config", default="V")
    p.add_argument("--width", type=float, default=1.0)
    p.add_argument("--target-size", type=int, default=384, help="0 keeps native size")
    p.add_argument("--mean-rgb",
                   default=",".join(str(v) for v in data.DEFAULT_MEAN_RGB))
    p.add_argument("--float32", action="store_true", help="32-bit inference storage mode")
    p.add_argument("--keep-network-size", action="store_true",
                   help="write maps at network resolution instead of source size")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("eval", help="score maps against ground truth")
    p.add_argument("--maps", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--n-thresholds", type=int, default=evaluation.DEFAULT_N_THRESHOLDS)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("baseline", help="run a classical baseline")
    p.add_argument("--which", choices=("gradstat", "specslope"), required=True)
    p.add_argument("--images", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--patch-size", type=int, default=baselines.DEFAULT_PATCH_SIZE)
    p.add_argument("--stride", type=int, default=1)
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("apps", help="blur-map applications")
    p.add_argument("--which", choices=("degree", "trimap", "magnify"), required=True)
    p.add_argument("--maps", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--images", default=None, help="source images (magnify)")
    p.add_argument("--sigma", type=float, default=4.0)
    p.add_argument("--thresh", type=float, default=applications.DEFAULT_MAGNIFY_THRESHOLD)
    p.set_defaults(func=cmd_apps)

    p = sub.add_parser("gradcheck", help="finite-difference gradient audit")
    p.add_argument("--config", default="I")
    p.add_argument("--width", type=float, default=0.0625)
    p.add_argument("--size", type=int, default=16)
    p.add_argument("--samples", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--eps", type=float, default=1e-5)
    p.add_argument("--tol", type=float, default=1e-4)
    p.set_defaults(func=cmd_gradcheck)

    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except SystemExit as exc:  # argparse usage failure or --help
        return int(exc.code or 0)
    except (ConfigError,) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, ShapeError, WeightFormatError, ContractError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
