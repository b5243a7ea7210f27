"""``specrep`` command line: generate, train, embed, eval, distance, saliency.

Exit codes: 0 success, 2 usage error (bad flags, missing paths), 3 data
error (unreadable dataset or model file), 4 numerical failure (eigensolver
failure, training divergence).
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .graph import DatasetError, GraphCollection, load_tu_dataset, write_tu_dataset
from .heat import check_time_grid, default_time_grid, pairwise_gw_lower_bound
from .model import (ModelFormatError, TrainingDivergedError, load_model, save_model,
                    write_log_csv)
from .spectrum import DEFAULT_EIGS_K, DEFAULT_FULL_THRESHOLD, SpectrumError, graph_spectrum
from .synthetic import CorpusConfig, generate_training_corpus

EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4


class UsageError(Exception):
    pass


# ---------------------------------------------------------------- helpers

def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _seed(text):
    v = int(text)
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError(f"seed must fit in an unsigned 64-bit integer, got {text}")
    return v


def _float_list(text):
    return tuple(float(x) for x in text.split(","))


def _int_list(text):
    return tuple(int(x) for x in text.split(","))


def resolve_dataset(directory, name=None) -> tuple[Path, str]:
    """Locate TU files either directly in ``directory`` or in ``directory/name``.

    Without ``name`` the prefix of the only ``*_graph_labels.txt`` file in
    ``directory`` is used, falling back to the directory name.
    """
    directory = Path(directory)
    if not directory.is_dir():
        raise UsageError(f"dataset directory {directory} does not exist")
    if name is None:
        found = sorted(directory.glob("*_graph_labels.txt"))
        name = found[0].name[:-len("_graph_labels.txt")] if len(found) == 1 else directory.name
    if not (directory / f"{name}_A.txt").exists() and (directory / name).is_dir():
        directory = directory / name
    return directory, name


def _check_output(path, is_dir=False):
    path = Path(path)
    parent = path if is_dir and path.exists() else path.parent
    if path.exists() and is_dir != path.is_dir():
        raise UsageError(f"output {path} exists and is not a {'directory' if is_dir else 'file'}")
    if not parent.exists() and not is_dir:
        raise UsageError(f"output directory {parent} does not exist")
    probe = parent if parent.exists() else next(p for p in path.parents if p.exists())
    if not os.access(probe, os.W_OK):
        raise UsageError(f"output location {probe} is not writable")
    return path


def _check_input_file(path, what):
    if path is None:
        raise UsageError(f"--{what} is required")
    if not Path(path).is_file():
        raise UsageError(f"{what} file {path} does not exist")
    return Path(path)


def _manifest_path(out: Path, is_dir=False) -> Path:
    return out / "manifest.json" if is_dir else out.with_name(out.name + ".manifest.json")


def write_manifest(path, args, **extra) -> None:
    """Record the subcommand, every flag value and the package version, so
    a run can be repeated from its manifest alone."""
    flags = {k: (list(v) if isinstance(v, tuple) else v)
             for k, v in sorted(vars(args).items()) if k not in ("func", "verbose")}
    doc = {"command": args.command, "flags": flags, "version": __version__, **extra}
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")


def _corpus_config(args) -> CorpusConfig:
    base = CorpusConfig()
    return CorpusConfig(
        count=args.per_class, seed=args.seed,
        sizes=args.sizes or base.sizes, degrees=args.degrees or base.degrees,
        blocks=args.blocks or base.blocks,
        assortativity=args.assortativity if args.assortativity is not None else base.assortativity)


def _load(args) -> GraphCollection:
    directory, name = resolve_dataset(args.dataset, args.name)
    return load_tu_dataset(directory, name)


def _sgr_model(path, args):
    from .estimators import SGR
    p, h, _ = load_model(path)
    return SGR.from_params(p, h, eigs_k=args.eigs_k, full_threshold=args.full_threshold)


def _features(collection, args, model=None):
    from .evaluation import representation_features
    times = None if args.representation != "heat" else _time_grid(args)
    if args.representation == "sgr":
        if model is None:
            raise UsageError("--model is required for the sgr representation")
        if args.grid_size is not None and args.grid_size != model.grid_size:
            raise UsageError(f"model was trained on M={model.grid_size}, requested M={args.grid_size}")
        M = model.grid_size
    else:
        M = args.grid_size or 256
    return representation_features(collection, args.representation, model, M=M,
                                   eigs_k=args.eigs_k, full_threshold=args.full_threshold,
                                   times=times)


def _time_grid(args):
    if args.times is not None:
        return check_time_grid(args.times)
    return default_time_grid(args.time_points)


def _write_matrix(path, header, ids, rows):
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for gid, row in zip(ids, rows):
            fh.write(f"{gid}," + ",".join(repr(float(v)) for v in row) + "\n")


# ---------------------------------------------------------------- commands

def cmd_generate(args):
    out = _check_output(args.out, is_dir=True)
    config = _corpus_config(args)
    corpus = generate_training_corpus(config)
    write_tu_dataset(corpus, out, args.name or "SYNTH")
    config.save(out / "corpus_config.json")
    write_manifest(_manifest_path(out, True), args, corpus=config.to_dict())
    print(f"wrote {len(corpus)} graphs to {out}")


def cmd_train(args):
    from .estimators import SGR
    out = _check_output(args.model)
    log_path = _check_output(args.log) if args.log else out.with_suffix(".log.csv")
    collection = None
    if args.dataset is not None:
        directory, name = resolve_dataset(args.dataset, args.name)
        collection = load_tu_dataset(directory, name)
        if len(collection.classes) != 2:
            raise DatasetError(f"training corpus {name} must have exactly 2 classes "
                               f"(ER, SBM), found {len(collection.classes)}")
    corpus = _corpus_config(args)
    est = SGR(n_components=args.repr_dim, grid_size=args.grid_size or 256, corpus=corpus,
              learning_rate=args.lr, momentum=args.momentum, epochs=args.epochs,
              batch_size=args.batch_size, validation_fraction=args.val_fraction,
              eigs_k=args.eigs_k, full_threshold=args.full_threshold,
              random_state=args.seed, n_jobs=args.jobs)
    config = est.train_config()
    if collection is None:
        est.fit()
    else:
        est.fit(collection.graphs, collection.labels)
    save_model(est.params_, est.head_, out, config.fingerprint())
    write_log_csv(log_path, est.history_)
    write_manifest(_manifest_path(out), args, train_config=config.to_dict(),
                   log=str(log_path))
    final = est.history_[-1]
    print(f"final validation accuracy: {final.val_accuracy:.4f} "
          f"(epoch {final.epoch}, validation loss {final.val_loss:.4f})")


def cmd_embed(args):
    out = _check_output(args.out)
    model = None
    if args.representation == "sgr":
        model = _sgr_model(_check_input_file(args.model, "model"), args)
    collection = _load(args)
    X = _features(collection, args, model)
    _write_matrix(out, ["graph_id"] + [f"f{j}" for j in range(X.shape[1])],
                  range(len(X)), X)
    write_manifest(_manifest_path(out), args, rows=len(X), columns=X.shape[1])
    print(f"wrote {X.shape[0]} x {X.shape[1]} {args.representation} features to {out}")


def cmd_eval(args):
    from .evaluation import EvalConfig, evaluate_features
    out = _check_output(args.out) if args.out else None
    config = EvalConfig(representation=args.representation, train_fraction=args.train_fraction,
                        repeats=args.repeats, C=args.C, seed=args.seed,
                        standardize=args.standardize)
    model = None
    if args.representation == "sgr":
        model = _sgr_model(_check_input_file(args.model, "model"), args)
    collection = _load(args)
    if len(np.unique(collection.labels)) < 2:
        raise DatasetError(f"{collection.name}: evaluation needs at least two classes")
    X = _features(collection, args, model)
    report = evaluate_features(X, collection.labels, config, collection.name)
    print(report.summary())
    if out is not None:
        report.write_csv(out)
        with open(out.with_name(out.name + ".summary.json"), "w") as fh:
            fh.write(report.to_json() + "\n")
        write_manifest(_manifest_path(out), args, mean=report.mean, std=report.std)


def cmd_distance(args):
    out = _check_output(args.out)
    times = _time_grid(args)
    collection = _load(args)
    spectra = [graph_spectrum(g, args.eigs_k, args.full_threshold) for g in collection.graphs]
    D = pairwise_gw_lower_bound(spectra, times, args.grid_size or 256)
    _write_matrix(out, ["graph_id"] + [f"g{j}" for j in range(len(D))], range(len(D)), D)
    write_manifest(_manifest_path(out), args, graphs=len(D))
    print(f"wrote {len(D)} x {len(D)} distance matrix to {out}")


def cmd_saliency(args):
    from .estimators import spectra_features
    from .model import saliency
    out = _check_output(args.out)
    p, h, _ = load_model(_check_input_file(args.model, "model"))
    if args.grid_size is not None and args.grid_size != p.M:
        raise UsageError(f"model was trained on M={p.M}, requested M={args.grid_size}")
    config = _corpus_config(args)
    corpus = generate_training_corpus(config)
    X = spectra_features(corpus.graphs, p.M, args.eigs_k, args.full_threshold, args.jobs)
    S = saliency(p, h, X)
    grid = np.arange(1, p.M + 1) / p.M
    with open(out, "w") as fh:
        fh.write("class,x,mean_abs_grad\n")
        for label, cname in ((0, "ER"), (1, "SBM")):
            prof = S[corpus.labels == label].mean(axis=0)
            fh.writelines(f"{cname},{float(x)!r},{float(v)!r}\n" for x, v in zip(grid, prof))
    write_manifest(_manifest_path(out), args, corpus=config.to_dict())
    print(f"wrote saliency profiles over {len(X)} graphs to {out}")


# ---------------------------------------------------------------- parser

def _add_spectrum_flags(p, grid=True):
    if grid:
        p.add_argument("--grid-size", type=_positive_int, default=None, metavar="M",
                       help="resampling grid size (default 256, or the model's)")
    p.add_argument("--eigs-k", type=_positive_int, default=DEFAULT_EIGS_K, metavar="K",
                   help="eigenvalues per end for large graphs (default %(default)s)")
    p.add_argument("--full-threshold", type=_positive_int, default=DEFAULT_FULL_THRESHOLD,
                   help="largest graph solved densely (default %(default)s)")


def _add_dataset_flags(p, required=True):
    p.add_argument("--dataset", required=required, metavar="DIR",
                   help="directory holding TU-format files")
    p.add_argument("--name", default=None, help="file prefix (default: inferred from *_graph_labels.txt)")


def _add_corpus_flags(p, per_class_default):
    p.add_argument("--per-class", type=_positive_int, default=per_class_default, metavar="N",
                   help="graphs per class (default %(default)s)")
    p.add_argument("--sizes", type=_int_list, default=None, help="comma-separated vertex counts")
    p.add_argument("--degrees", type=_float_list, default=None,
                   help="comma-separated expected mean degrees")
    p.add_argument("--blocks", type=_int_list, default=None, help="comma-separated SBM block counts")
    p.add_argument("--assortativity", type=float, default=None, help="SBM p_in / p_out")


def _add_time_flags(p):
    p.add_argument("--times", type=_float_list, default=None,
                   help="comma-separated heat-trace times")
    p.add_argument("--time-points", type=_positive_int, default=64,
                   help="log-spaced times in [1e-2, 1e2] when --times is absent")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="specrep", description="Spectral graph representations: generate, train, embed, eval, distance, saliency.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a synthetic ER/SBM corpus in TU format")
    _add_corpus_flags(p, 1000)
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--out", required=True, metavar="DIR")
    p.add_argument("--name", default="SYNTH", help="file prefix (default %(default)s)")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("train", help="train the spectral representation")
    _add_dataset_flags(p, required=False)
    _add_corpus_flags(p, 1000)
    _add_spectrum_flags(p)
    p.add_argument("--repr-dim", type=_positive_int, default=256, metavar="N",
                   help="embedding dimension (default %(default)s)")
    p.add_argument("--lr", type=float, default=1e-2, help="SGD learning rate")
    p.add_argument("--momentum", type=float, default=0.9, help="SGD momentum")
    p.add_argument("--epochs", type=int, default=50, help="passes over the corpus")
    p.add_argument("--batch-size", type=_positive_int, default=32)
    p.add_argument("--val-fraction", type=float, default=0.2,
                   help="held-out share of the corpus")
    p.add_argument("--seed", type=_seed, default=0, help="corpus, split and init seed")
    p.add_argument("--jobs", type=int, default=None, help="parallel workers for spectra")
    p.add_argument("--model", required=True, metavar="FILE", help="output model file")
    p.add_argument("--log", default=None, help="per-epoch CSV (default: next to the model)")
    p.set_defaults(func=cmd_train)

    for name, func, help_ in (("embed", cmd_embed, "write one feature row per graph"),
                              ("eval", cmd_eval, "repeated-split logistic regression")):
        p = sub.add_parser(name, help=help_)
        _add_dataset_flags(p)
        _add_spectrum_flags(p)
        _add_time_flags(p)
        p.add_argument("--representation", choices=("sgr", "lambda", "heat"), default="sgr")
        p.add_argument("--model", default=None, metavar="FILE")
        p.set_defaults(func=func)
        if name == "embed":
            p.add_argument("--out", required=True, metavar="FILE")
        else:
            p.add_argument("--out", default=None, metavar="FILE", help="per-repeat CSV")
            p.add_argument("--repeats", type=_positive_int, default=100)
            p.add_argument("--train-fraction", type=float, default=0.8)
            p.add_argument("--C", type=float, default=1.0)
            p.add_argument("--standardize", action="store_true")
            p.add_argument("--seed", type=_seed, default=0)

    p = sub.add_parser("distance", help="pairwise heat-trace GW lower bound")
    _add_dataset_flags(p)
    _add_spectrum_flags(p)
    _add_time_flags(p)
    p.add_argument("--out", required=True, metavar="FILE")
    p.set_defaults(func=cmd_distance)

    p = sub.add_parser("saliency", help="class-averaged saliency profile of a model")
    _add_corpus_flags(p, 300)
    _add_spectrum_flags(p)
    p.add_argument("--model", required=True, metavar="FILE")
    p.add_argument("--seed", type=_seed, default=0, help="seed of the probe corpus")
    p.add_argument("--jobs", type=int, default=None)
    p.add_argument("--out", required=True, metavar="FILE")
    p.set_defaults(func=cmd_saliency)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"specrep {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DatasetError, ModelFormatError) as exc:
        print(f"specrep {args.command}: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except TrainingDivergedError as exc:
        print(f"specrep {args.command}: training diverged at epoch {exc.epoch}", file=sys.stderr)
        return EXIT_NUMERIC
    except (SpectrumError, FloatingPointError) as exc:
        print(f"specrep {args.command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        # configuration rejected by a constructor (bad fraction, time grid, ...)
        print(f"specrep {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return 0


if __name__ == "__main__":
    sys.exit(main())
