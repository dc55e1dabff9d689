"""Command-line entry point.

    zsoftmax <command> [--config FILE] [--key value ...] [command options]

Config files are flat ``key = value`` lines (``#`` starts a comment);
``--key value`` overrides on the command line win over the file.
Exit codes: 0 ok, 1 check failed, 2 usage/config error, 3 I/O or format error.
"""
import argparse
import json
import logging
import os
import sys
from dataclasses import fields

from . import gradcheck
from .data import SynthSpec, load_attributes, load_features, save_attributes, save_features, \
    synth_generate
from .evaluation import evaluate_gzsl, evaluate_zsl
from .exceptions import FormatError, InvalidParameterError, ParseError, ShapeError, \
    TrainingError
from .model import load_checkpoint, save_checkpoint
from .softlabel import build_table
from .sweep import best_row, sweep_q, sweep_tau, write_sweep_csv
from .train import TrainConfig, cross_validate, make_validation_split, train

logger = logging.getLogger("zsoftmax")

EXIT_OK, EXIT_CHECK, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3


class ConfigError(Exception):
    pass


def _parse_bool(text):
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _cast(field_type):
    return _parse_bool if field_type is bool else field_type


_TRAIN_TYPES = {f.name: f.type for f in fields(TrainConfig)}

KEYS = {name: _cast(t) for name, t in _TRAIN_TYPES.items()}
KEYS.update({k: str for k in ("attributes_path", "train_path", "test_seen_path",
                              "test_unseen_path", "out_dir", "checkpoint_path")})
KEYS.update({f"synth_{f.name}": _cast(f.type) for f in fields(SynthSpec)})

DEFAULTS = {"out_dir": "out"}


def parse_config_text(text, source="<config>"):
    """Parse ``key = value`` lines into a dict of typed values."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (p.strip() for p in line.split("=", 1))
        out[key] = _coerce(key, value, f"{source}:{lineno}")
    return out


def _coerce(key, value, where):
    if key not in KEYS:
        raise ConfigError(f"{where}: unknown key {key!r}")
    try:
        return KEYS[key](value)
    except ValueError as exc:
        raise ConfigError(f"{where}: bad value for {key!r}: {exc}") from None


def parse_overrides(tokens):
    out = {}
    it = iter(tokens)
    for tok in it:
        if not tok.startswith("--"):
            raise ConfigError(f"unexpected argument {tok!r}")
        key = tok[2:]
        if "=" in key:
            key, value = key.split("=", 1)
        else:
            value = next(it, None)
            if value is None:
                raise ConfigError(f"missing value for --{key}")
        key = key.replace("-", "_")
        out[key] = _coerce(key, value, "command line")
    return out


def load_config(path, overrides):
    cfg = dict(DEFAULTS)
    if path:
        try:
            with open(path, encoding="utf-8") as fh:
                cfg.update(parse_config_text(fh.read(), path))
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}") from None
    cfg.update(overrides)
    return cfg


def train_config(cfg):
    names = {f.name for f in fields(TrainConfig)}
    try:
        return TrainConfig(**{k: v for k, v in cfg.items() if k in names})
    except InvalidParameterError as exc:
        raise ConfigError(str(exc)) from None


def synth_spec(cfg):
    try:
        return SynthSpec(**{k[len("synth_"):]: v for k, v in cfg.items() if k.startswith("synth_")})
    except InvalidParameterError as exc:
        raise ConfigError(str(exc)) from None


def _path(cfg, key):
    path = cfg.get(key)
    if not path:
        raise ConfigError(f"missing required key {key!r}")
    if not os.path.exists(path):
        raise ConfigError(f"{key}: no such file {path!r}")
    return path


def _out(cfg, name):
    os.makedirs(cfg["out_dir"], exist_ok=True)
    return os.path.join(cfg["out_dir"], name)


def _checkpoint_path(cfg):
    if cfg.get("checkpoint_path"):
        return _path(cfg, "checkpoint_path")
    path = os.path.join(cfg["out_dir"], "model.zsfm")
    if not os.path.exists(path):
        raise ConfigError(f"no checkpoint at {path!r}; set checkpoint_path or run train")
    return path


def _load_split(cfg, attrs):
    sets = [load_features(_path(cfg, k)) for k in ("train_path", "test_seen_path",
                                                   "test_unseen_path")]
    for s in sets:
        if s.num_classes != attrs.num_classes:
            raise FormatError(f"feature file declares {s.num_classes} classes, attributes "
                              f"have {attrs.num_classes}")
    return sets


# -- commands --------------------------------------------------------------

def cmd_synth(cfg, args):
    spec = synth_spec(cfg)
    attrs, tr, ts, tu = synth_generate(spec)
    save_attributes(attrs, _out(cfg, "attributes.csv"))
    for name, s in (("train", tr), ("test_seen", ts), ("test_unseen", tu)):
        save_features(s, _out(cfg, f"{name}.zsfb"))
    logger.info("wrote synthetic benchmark (%d seen, %d unseen classes) to %s",
                attrs.num_seen, attrs.num_unseen, cfg["out_dir"])
    return EXIT_OK


def cmd_train(cfg, args):
    config = train_config(cfg)
    attrs = load_attributes(_path(cfg, "attributes_path"))
    train_set = load_features(_path(cfg, "train_path"))
    val = None
    if cfg.get("test_seen_path") and cfg.get("test_unseen_path") and args.track_test:
        val = (load_features(_path(cfg, "test_seen_path")),
               load_features(_path(cfg, "test_unseen_path")))
    params, history = train(config, attrs, train_set, val)
    save_checkpoint(params, _out(cfg, "model.zsfm"))
    history.to_csv(_out(cfg, "history.csv"))
    logger.info("trained %d epochs, final loss %.6f", len(history), history.loss[-1])
    return EXIT_OK


def cmd_eval(cfg, args):
    params = load_checkpoint(_checkpoint_path(cfg))
    test_seen = load_features(_path(cfg, "test_seen_path"))
    test_unseen = load_features(_path(cfg, "test_unseen_path"))
    for s in (test_seen, test_unseen):
        if s.dim_d != params.dim_d or s.num_classes != params.attrs.num_classes:
            raise FormatError(
                f"test data (d={s.dim_d}, C={s.num_classes}) does not match checkpoint "
                f"(d={params.dim_d}, C={params.attrs.num_classes})")
    record = evaluate_gzsl(params, test_seen, test_unseen).as_dict()
    if args.zsl:
        record["zsl_accuracy"] = evaluate_zsl(params, test_unseen)
    line = json.dumps(record)
    print(line)
    with open(_out(cfg, "metrics.jsonl"), "a", encoding="utf-8") as fh:
        fh.write(line + "\n")
    logger.info("A_S=%.4f A_U=%.4f A_H=%.4f", record["a_seen"], record["a_unseen"],
                record["a_harmonic"])
    return EXIT_OK


def _parse_values(text):
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"--values must be comma-separated numbers, got {text!r}") from None
    if not values:
        raise ConfigError("--values is empty")
    return values


def cmd_sweep(cfg, args):
    config = train_config(cfg)
    values = _parse_values(args.values)
    attrs = load_attributes(_path(cfg, "attributes_path"))
    data = _load_split(cfg, attrs)
    run = sweep_q if args.param == "q" else sweep_tau
    try:
        rows = run(config, attrs, data, values, repeats=args.repeats)
    except InvalidParameterError as exc:
        raise ConfigError(str(exc)) from None
    write_sweep_csv(rows, _out(cfg, f"sweep_{args.param}.csv"))
    best = best_row(rows)
    logger.info("best %s=%g: A_S=%.4f A_U=%.4f A_H=%.4f", args.param, best.value,
                best.metrics.a_seen, best.metrics.a_unseen, best.metrics.a_harmonic)
    return EXIT_OK


def cmd_gradcheck(cfg, args):
    seed = cfg.get("seed", 0)
    err = gradcheck.run(seed=seed, instances=args.instances,
                        perturb=1e-2 if args.inject_bug else 0.0)
    print(f"max_relative_error {err:.3e}")
    ok = err <= args.tolerance
    logger.info("gradient check %s (tolerance %.0e)", "passed" if ok else "FAILED",
                args.tolerance)
    return EXIT_OK if ok else EXIT_CHECK


def cmd_dump_softlabels(cfg, args):
    config = train_config(cfg)
    attrs = load_attributes(_path(cfg, "attributes_path"))
    table = build_table(attrs, config.softlabel_config)
    path = _out(cfg, "softlabels.csv")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(("class",) + attrs.class_names) + "\n")
        for name, row in zip(attrs.class_names, table):
            fh.write(",".join([name] + [repr(float(v)) for v in row]) + "\n")
    logger.info("wrote %d soft label rows to %s", len(table), path)
    return EXIT_OK


def _parse_grid(specs, base):
    axes = []
    for spec in specs:
        if "=" not in spec:
            raise ConfigError(f"--grid expects key=v1,v2,..., got {spec!r}")
        key, values = spec.split("=", 1)
        if key not in _TRAIN_TYPES:
            raise ConfigError(f"--grid: {key!r} is not a training parameter")
        axes.append([(key, _coerce(key, v, "--grid")) for v in values.split(",") if v])
    grid = [base]
    for axis in axes:
        grid = [c.replace(**{k: v}) for c in grid for k, v in axis]
    return grid


def cmd_cv(cfg, args):
    base = train_config(cfg)
    try:
        grid = _parse_grid(args.grid, base)
    except InvalidParameterError as exc:
        raise ConfigError(str(exc)) from None
    attrs = load_attributes(_path(cfg, "attributes_path"))
    train_set = load_features(_path(cfg, "train_path"))
    val_attrs, sub_train, val_seen, val_unseen = make_validation_split(
        attrs, train_set, args.val_unseen, seed=base.seed)
    best, results = cross_validate(grid, val_attrs, sub_train, (val_seen, val_unseen))
    with open(_out(cfg, "cv.jsonl"), "w", encoding="utf-8") as fh:
        for config, m in results:
            fh.write(json.dumps({"config": config.as_dict(), **m.as_dict()}) + "\n")
    print(json.dumps(best.as_dict()))
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="zsoftmax", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help):
        p = sub.add_parser(name, help=help)
        p.add_argument("-c", "--config", help="key = value config file")
        p.set_defaults(func=func)
        return p

    add("synth", cmd_synth, "write a synthetic benchmark")
    p = add("train", cmd_train, "train a model and write a checkpoint")
    p.add_argument("--track-test", action="store_true",
                   help="record test-set A_H per epoch in the history")
    p = add("eval", cmd_eval, "evaluate a checkpoint")
    p.add_argument("--zsl", action="store_true", help="also report unseen-only accuracy")
    p = add("sweep", cmd_sweep, "retrain across values of q or tau")
    p.add_argument("--param", choices=("q", "tau"), required=True)
    p.add_argument("--values", required=True)
    p.add_argument("--repeats", type=int, default=1,
                   help="average each point over this many seeds")
    p = add("gradcheck", cmd_gradcheck, "finite-difference gradient check")
    p.add_argument("--instances", type=int, default=20)
    p.add_argument("--tolerance", type=float, default=1e-4)
    p.add_argument("--inject-bug", action="store_true",
                   help="perturb the analytic gradient (negative control)")
    add("dump-softlabels", cmd_dump_softlabels, "write the soft label table")
    p = add("cv", cmd_cv, "grid search on a seen-class validation split")
    p.add_argument("--grid", action="append", default=[], metavar="KEY=V1,V2")
    p.add_argument("--val-unseen", type=int, default=None,
                   help="number of seen classes held out as pseudo-unseen")
    return parser


def main(argv=None):
    parser = build_parser()
    args, rest = parser.parse_known_args(argv)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(message)s"))
    logger.addHandler(handler)
    logger.setLevel(logging.DEBUG if args.verbose else logging.INFO)
    logger.propagate = False
    try:
        cfg = load_config(args.config, parse_overrides(rest))
        return args.func(cfg, args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ParseError, FormatError, ShapeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except InvalidParameterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except TrainingError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CHECK
    finally:
        logger.removeHandler(handler)


if __name__ == "__main__":
    sys.exit(main())
