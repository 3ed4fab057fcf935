"""Command-line interface.

Exit codes: 0 success, 1 usage error (nothing written), 2 runtime error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from contextlib import nullcontext
from pathlib import Path

import numpy as np

from .catalog import build_tf_set, rebuild_tf_set
from .checkpoint import CheckpointError, dumps, load_models, read_checkpoint
from .config import ConfigError, TrainingConfig, load_config
from .core import rollout, split_rng
from .diagnostics import mean_pairwise_jaccard, ngram_uniqueness
from .discriminator import MLPDiscriminator, OracleDiscriminator
from .experiments import GEN_LR, derived_rng, ball_data, init_generator, run_report, sequence_length_sweep
from .generator import MeanFieldGenerator
from .plot import PlotError, scatter_rows, scatter_svg
from .raster import IDX_IMAGES, GrayImage, IdxFormatError, images_to_array, load_idx, save_idx
from .synthetic import NullPredicate
from .training import adversarial_train, format_float

log = logging.getLogger("augseq")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


# --- data files ------------------------------------------------------------

def _is_idx_images(path: Path) -> bool:
    with open(path, "rb") as f:
        head = f.read(4)
    return len(head) == 4 and int.from_bytes(head, "big") == IDX_IMAGES


def read_points_csv(path):
    """Returns (X, labels or None, header, raw data lines).

    Coordinate columns are every column except an optional ``label``.
    """
    text = Path(path).read_text()
    lines = text.splitlines()
    if not lines:
        raise ValueError(f"{path} is empty")
    header = next(csv.reader([lines[0]]))
    lab = header.index("label") if "label" in header else None
    coords = [i for i in range(len(header)) if i != lab]
    if not coords:
        raise ValueError(f"{path} has no coordinate columns")
    body = [ln for ln in lines[1:] if ln.strip()]
    X = np.empty((len(body), len(coords)))
    labels = [] if lab is not None else None
    for r, row in enumerate(csv.reader(body)):
        if len(row) != len(header):
            raise ValueError(f"{path} line {r + 2}: expected {len(header)} fields, got {len(row)}")
        try:
            X[r] = [float(row[i]) for i in coords]
        except ValueError as e:
            raise ValueError(f"{path} line {r + 2}: {e}") from e
        if labels is not None:
            labels.append(row[lab])
    return X, labels, header, body


def _fmt(v: float) -> str:
    return repr(float(v))


def load_data(path):
    """CSV points or an IDX image file; returns (X, shape or None)."""
    path = Path(path)
    if _is_idx_images(path):
        images = load_idx(path)
        if not images:
            raise ValueError(f"{path} holds no images")
        return images_to_array(images), (images[0].height, images[0].width)
    return read_points_csv(path)[0], None


# --- commands ----------------------------------------------------------------

def cmd_gen_data(a):
    if a.count < 1:
        raise UsageError(f"--count must be >= 1, got {a.count}")
    X = ball_data(a.seed, a.count)
    out = Path(a.out)
    buf = io.StringIO()
    buf.write("x0,x1\n")
    for x, y in X:
        buf.write(f"{_fmt(x)},{_fmt(y)}\n")
    out.write_text(buf.getvalue())
    meta = {"world": a.world, "count": a.count, "seed": a.seed, "dim": 2, "radius": 1.0,
            "distribution": "uniform on the open disk"}
    Path(str(out) + ".json").write_text(dumps(meta) + "\n")


def _train_config(a) -> TrainingConfig:
    cfg = load_config(a.config) if a.config else TrainingConfig(gen_lr=GEN_LR[a.model])
    changes = {"model": a.model, "discriminator": a.disc, "tf_set": a.tf_set}
    if a.seed is not None:
        changes["seed"] = a.seed
    return cfg.replace(**changes)


def cmd_train(a):
    if a.tf_set.startswith("raster:") and a.disc == "oracle":
        raise UsageError("--disc oracle is only defined for the unit-ball world; use --disc mlp with raster TF sets")
    cfg = _train_config(a)
    X, shape = load_data(a.data)
    if a.tf_set.startswith("raster:"):
        if shape is None:
            raise ValueError("raster TF sets need IDX image data")
        reg = build_tf_set(a.tf_set, cfg.seed, shape=shape)
    else:
        reg = build_tf_set(a.tf_set, cfg.seed)
    X = reg.check_batch(X)
    gen = init_generator(cfg.model, reg.K, cfg)
    if cfg.discriminator == "oracle":
        disc = OracleDiscriminator()
    else:
        disc = MLPDiscriminator(X.shape[1], cfg.disc_hidden, rng=derived_rng(cfg.seed, 14))
    pred = NullPredicate() if shape is None else None
    out = Path(a.out)
    res = adversarial_train(gen, disc, reg, X, cfg, null_predicate=pred, out_dir=out)
    report, scatter = run_report(gen, reg, X, cfg, res, pred)
    report = {"data": {"path": str(a.data), "count": len(X), "dim": X.shape[1]}, **report}
    (out / "report.json").write_text(dumps(report) + "\n")
    if scatter:
        (out / "scatter.csv").write_text("x,y,tag\n" + "".join(f"{_fmt(x)},{_fmt(y)},{t}\n" for x, y, t in scatter))


def _load_checkpoint(path):
    ck = read_checkpoint(path)
    gen, disc, _ = load_models(ck)
    if "L" not in ck["generator"]:
        raise CheckpointError(f"checkpoint {path} does not record the sequence length")
    return ck, gen, int(ck["generator"]["L"])


def cmd_sample(a):
    if a.count < 0:
        raise UsageError(f"--count must be >= 0, got {a.count}")
    ck, gen, L = _load_checkpoint(a.checkpoint)
    names = ck["tf_names"]
    if a.count == 0:
        return
    seqs = gen.sample(derived_rng(a.seed, 40), L, a.count).seqs
    sys.stdout.write("".join(" ".join(names[t - 1] for t in s) + "\n" for s in seqs))


def cmd_augment(a):
    if a.copies < 0:
        raise UsageError(f"--copies must be >= 0, got {a.copies}")
    ck, gen, L = _load_checkpoint(a.checkpoint)
    reg = rebuild_tf_set(ck["tf_set"])
    if list(reg.names) != list(ck["tf_names"]):
        raise CheckpointError("rebuilt TF set does not match the checkpoint's TF names")
    s_rng, t_rng = split_rng(derived_rng(a.seed, 41), 2)
    if _is_idx_images(Path(a.data)):
        images = load_idx(a.data)
        X = reg.check_batch(images_to_array(images))
        out_images = []
        copies = _transformed_copies(gen, reg, X, L, a.copies, s_rng, t_rng)
        for i, im in enumerate(images):
            out_images.append(im)
            out_images.extend(GrayImage(im.height, im.width, c) for c in copies[i])
        save_idx(out_images, a.out)
        return
    X, labels, header, body = read_points_csv(a.data)
    if reg.dim is not None and X.shape[1] != reg.dim:
        raise ValueError(f"data has {X.shape[1]} coordinate columns, the TF set expects {reg.dim}")
    copies = _transformed_copies(gen, reg, X, L, a.copies, s_rng, t_rng)
    lab = header.index("label") if labels is not None else None
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    buf.write(Path(a.data).read_text().splitlines()[0] + "\n")
    for i, line in enumerate(body):
        buf.write(line + "\n")
        for c in copies[i]:
            vals = iter(_fmt(v) for v in c)
            w.writerow([labels[i] if j == lab else next(vals) for j in range(len(header))])
    Path(a.out).write_text(buf.getvalue())


def _transformed_copies(gen, reg, X, L, copies, s_rng, t_rng):
    """(N, copies, dim): each copy gets its own freshly sampled sequence."""
    if copies == 0 or len(X) == 0:
        return np.zeros((len(X), 0, X.shape[1]))
    rep = np.repeat(X, copies, axis=0)
    seqs = gen.sample(s_rng, L, len(rep)).seqs
    return rollout(reg, seqs, rep, t_rng)[:, -1].reshape(len(X), copies, X.shape[1])


def _seq_diag(seqs, K):
    L = seqs.shape[1]
    return {
        "mean_pairwise_jaccard": mean_pairwise_jaccard(seqs, K),
        "ngram_uniqueness": {str(n): ngram_uniqueness(seqs, n, K) for n in (1, 2, 3) if n <= L},
    }


def cmd_diag(a):
    if a.samples < 2:
        raise UsageError(f"--samples must be >= 2, got {a.samples}")
    ck, gen, L = _load_checkpoint(a.checkpoint)
    K = len(ck["tf_names"])
    l_rng, u_rng = split_rng(derived_rng(a.seed, 42), 2)
    learned = gen.sample(l_rng, L, a.samples).seqs
    uniform = MeanFieldGenerator(K).sample(u_rng, L, a.samples).seqs
    report = {"samples": a.samples, "L": L, "K": K, "seed": a.seed,
              "learned": _seq_diag(learned, K), "uniform": _seq_diag(uniform, K)}
    sys.stdout.write(dumps(report) + "\n")


def _parse_lengths(text: str):
    try:
        vals = [int(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise UsageError(f"--lengths must be comma-separated integers, got {text!r}") from None
    if not vals or min(vals) < 1:
        raise UsageError(f"--lengths needs at least one length >= 1, got {text!r}")
    return vals


def cmd_sweep_length(a):
    lengths = _parse_lengths(a.lengths)
    cfg = load_config(a.config) if a.config else TrainingConfig()
    if a.seed is not None:
        cfg = cfg.replace(seed=a.seed)
    tf_set = cfg.tf_set or "lossy"
    if tf_set.startswith("raster:"):
        raise ValueError("the length sweep runs on the unit-ball world; pick a ball TF set")
    rows = sequence_length_sweep(cfg, lengths, tf_set=tf_set)
    cols = ["L", "null_rate", "uniform_null_rate", "accuracy_learned", "accuracy_heuristic"]
    out = ",".join(cols) + "\n" + "".join(
        ",".join(str(r[c]) if c == "L" else format_float(r[c]) for c in cols) + "\n" for r in rows)
    sys.stdout.write(out)


def cmd_plot(a):
    try:
        report = json.loads(Path(a.report).read_text())
    except json.JSONDecodeError as e:
        raise PlotError(f"{a.report} is not valid JSON: {e}") from e
    Path(a.out).write_text(scatter_svg(scatter_rows(report)))


# --- parser ------------------------------------------------------------------

def _int(text):
    try:
        return int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="augseq", description="Learn TF-sequence augmentation policies.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen-data", help="sample an unlabeled synthetic dataset")
    g.add_argument("--world", choices=["ball"], default="ball")
    g.add_argument("--count", type=_int, required=True)
    g.add_argument("--seed", type=_int, default=0)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen_data)

    t = sub.add_parser("train", help="adversarially train a generator")
    t.add_argument("--config")
    t.add_argument("--tf-set", required=True)
    t.add_argument("--model", choices=["mf", "lstm"], default="mf")
    t.add_argument("--disc", choices=["oracle", "mlp"], default="oracle")
    t.add_argument("--data", required=True)
    t.add_argument("--out", required=True)
    t.add_argument("--seed", type=_int, help="overrides the config seed")
    t.set_defaults(func=cmd_train)

    s = sub.add_parser("sample", help="print sampled TF sequences")
    s.add_argument("--checkpoint", required=True)
    s.add_argument("--count", type=_int, required=True)
    s.add_argument("--seed", type=_int, default=0)
    s.set_defaults(func=cmd_sample)

    u = sub.add_parser("augment", help="write originals plus transformed copies")
    u.add_argument("--checkpoint", required=True)
    u.add_argument("--data", required=True)
    u.add_argument("--copies", type=_int, required=True)
    u.add_argument("--out", required=True)
    u.add_argument("--seed", type=_int, default=0)
    u.set_defaults(func=cmd_augment)

    d = sub.add_parser("diag", help="sequence diversity diagnostics")
    d.add_argument("--checkpoint", required=True)
    d.add_argument("--samples", type=_int, default=200)
    d.add_argument("--seed", type=_int, default=0)
    d.set_defaults(func=cmd_diag)

    w = sub.add_parser("sweep-length", help="train and evaluate across sequence lengths")
    w.add_argument("--config")
    w.add_argument("--lengths", required=True)
    w.add_argument("--seed", type=_int, help="overrides the config seed")
    w.set_defaults(func=cmd_sweep_length)

    q = sub.add_parser("plot", help="SVG scatter from a training report")
    q.add_argument("--report", required=True)
    q.add_argument("--out", required=True)
    q.set_defaults(func=cmd_plot)
    return p


def _validate_paths(a):
    """Input files must exist before any work starts."""
    for flag in ("data", "checkpoint", "report", "config"):
        v = getattr(a, flag, None)
        if v is not None and not Path(v).is_file():
            raise UsageError(f"--{flag}: no such file {v!r}")
    for flag in ("seed",):
        v = getattr(a, flag, None)
        if v is not None and v < 0:
            raise UsageError(f"--seed must be >= 0, got {v}")


def _thread_limit():
    raw = os.environ.get("AUGSEQ_THREADS")
    if not raw:
        return nullcontext()
    try:
        n = int(raw)
        if n < 1:
            raise ValueError
    except ValueError:
        raise UsageError(f"AUGSEQ_THREADS must be a positive integer, got {raw!r}") from None
    from threadpoolctl import threadpool_limits
    return threadpool_limits(limits=n)


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        a = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        _validate_paths(a)
        with _thread_limit():
            a.func(a)
    except UsageError as e:
        print(f"augseq {a.command}: error: {e}", file=sys.stderr)
        return 1
    except (OSError, ValueError, ConfigError, CheckpointError, IdxFormatError, PlotError) as e:
        print(f"augseq {a.command}: error: {e}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
