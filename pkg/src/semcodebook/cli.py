"""Command-line front end.

Subcommands: ``gen``, ``train``, ``simulate``, ``sweep``, ``compare`` and
``analyze``. Settings come from an optional ``--config`` file of
``key = value`` lines; command-line flags override the file. Relative
paths in a config file resolve against the file's directory, and
``mixture = <name>`` may name one of the shipped presets (see
``semcodebook.presets``).

Seeding: everything derives from ``seed`` (default 0). The training RNG
uses ``derive_seed(seed, "train")``, the channel uses
``derive_seed(seed, "channel", p)``, and a mixture spec without its own
``seed`` samples with ``derive_seed(seed, "mixture")``.

Exit status: 0 on success, 2 for invalid input, 3 for I/O failures.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import config as cfgmod
from .analytics import (
    select_k,
    sweep_row,
    total_semantic_distortion,
    train_per_k,
    validate_candidates,
)
from .channel import (
    ChannelSpec,
    SnrSpec,
    bits_per_index,
    confusion_matrix,
    index_error_probability,
    snr_to_flip_probability,
)
from .codebook import (
    Codebook,
    FeatureSet,
    empirical_entropy,
    nats_to_bits,
    quantize_batch,
    usage_frequencies,
)
from .formats import FormatError, read_codebook, read_features, write_codebook, write_features
from .losses import LossWeights, channel_loss, quantization_loss
from .mixture import MixtureSpec, generate_mixture
from .rng import derive_seed
from .simulation import LinkSimReport, simulate_link
from .training import TrainConfig, train_codebook

PRESET_DIR = Path(__file__).parent / "presets"

EXIT_OK, EXIT_INVALID, EXIT_IO = 0, 2, 3


class Settings:
    """Merged config-file and flag values with typed accessors."""

    def __init__(self, values: dict | None = None, base_dir: Path | None = None):
        self.values = dict(values or {})
        self.base_dir = base_dir or Path.cwd()
        self.path_keys: set[str] = set()

    def has(self, key: str) -> bool:
        return self.values.get(key) is not None

    def raw(self, key: str, default=None):
        v = self.values.get(key)
        return default if v is None else v

    def get_str(self, key: str, default=None):
        v = self.raw(key, default)
        return None if v is None else str(v)

    def get_int(self, key: str, default=None):
        v = self.raw(key, default)
        return None if v is None else int(v)

    def get_float(self, key: str, default=None):
        v = self.raw(key, default)
        return None if v is None else float(v)

    def path(self, key: str) -> Path | None:
        v = self.raw(key)
        if v is None:
            return None
        p = Path(str(v))
        if key in self.path_keys or p.is_absolute():
            return p
        return self.base_dir / p


# --- building blocks -------------------------------------------------------

def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _write_csv(path: Path, header, rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(x) for x in row])
    path.write_text(buf.getvalue())


def _write_json(path: Path, payload) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def resolve_mixture(s: Settings) -> Path:
    raw = s.get_str("mixture")
    p = s.path("mixture")
    if p.exists():
        return p
    preset = PRESET_DIR / f"{raw}.json"
    if preset.exists():
        return preset
    raise FileNotFoundError(f"mixture spec not found: {raw}")


def load_features(s: Settings) -> tuple[FeatureSet, dict, np.ndarray | None]:
    has_f, has_m = s.has("features"), s.has("mixture")
    if has_f == has_m:
        raise ValueError("give exactly one feature source: --features or --mixture")
    if has_f:
        path = s.path("features")
        return read_features(path), {"features": str(path.name)}, None
    spec = MixtureSpec.load(resolve_mixture(s))
    seed = spec.seed if spec.seed is not None else derive_seed(s.get_int("seed", 0), "mixture")
    Z, labels = generate_mixture(spec, seed=seed)
    return Z, {"mixture": spec.name, "mixture_seed": seed}, labels


def channel_from(s: Settings) -> tuple[ChannelSpec, dict]:
    info: dict = {}
    if s.has("snr_db"):
        if s.has("p"):
            raise ValueError("give either p or snr_db, not both")
        snr = SnrSpec(s.get_float("snr_db"), cfgmod.parse_modulation(s.get_str("mod", "64")),
                      s.get_str("fading", "awgn"))
        p = snr_to_flip_probability(snr)
        info = {"snr_db": snr.snr_db, "modulation": snr.modulation_order, "fading": snr.fading,
                "p_from_snr": p}
    else:
        p = s.get_float("p", 0.0)
    p_set = cfgmod.parse_p_set(s.get_str("p_set")) if s.has("p_set") else None
    ch = ChannelSpec(p, s.get_str("confusion", "uniform"), s.get_str("labeling", "natural"),
                     s.get_int("labeling_seed", 0), p_set)
    info.update({"p": ch.p, "confusion": ch.confusion, "labeling": ch.labeling})
    if p_set:
        info["p_set"] = [list(x) for x in p_set]
    return ch, info


def weights_from(s: Settings) -> LossWeights:
    return LossWeights(s.get_float("gamma", 0.1), s.get_float("omega", 0.1))


def train_config_from(s: Settings) -> TrainConfig:
    dead = s.raw("dead_threshold")
    return TrainConfig(
        epochs=s.get_int("epochs", 50),
        step_size=s.get_float("step_size", 0.5),
        batch_size=s.get_int("batch_size", 0),
        temperature=s.get_float("temperature", 1.0),
        seed=derive_seed(s.get_int("seed", 0), "train"),
        dead_threshold=None if dead in (None, "auto") else float(dead),
        init=s.get_str("init", "kmeans_pp"),
        update=s.get_str("update", "gradient"),
    )


def out_dir(s: Settings) -> Path:
    # relative to the working directory, never to the config file
    out = Path(s.get_str("out", "out"))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _channel_seed(s: Settings, p: float) -> int:
    return derive_seed(s.get_int("seed", 0), "channel", repr(float(p)))


def _report_dict(rep: LinkSimReport) -> dict:
    d = asdict(rep)
    lo, hi = rep.ci95()
    d["ci95_low"], d["ci95_high"] = lo, hi
    return d


# --- commands --------------------------------------------------------------

def run_gen(s: Settings) -> dict:
    if not s.has("mixture"):
        raise ValueError("gen needs --mixture")
    Z, source, labels = load_features(s)
    out = out_dir(s)
    write_features(out / "features.semf", Z)
    _write_csv(out / "labels.csv", ("index", "component"), enumerate(labels.tolist()))
    spec = MixtureSpec.load(resolve_mixture(s))
    payload = {"source": source, "M": Z.M, "N": Z.dim, "spec": spec.to_dict()}
    _write_json(out / "gen.json", payload)
    return payload


def run_train(s: Settings) -> dict:
    Z, source, _ = load_features(s)
    K = s.get_int("k", 256)
    ch, ch_info = channel_from(s)
    weights = weights_from(s)
    config = train_config_from(s)
    C, report = train_codebook(Z, K, weights, ch, config)
    C = C.as_float32()
    out = out_dir(s)
    write_codebook(out / "codebook.semc", C)
    (out / "train_report.csv").write_text(report.to_csv())
    S = quantize_batch(Z, C)
    stats = usage_frequencies(S)
    h = empirical_entropy(stats)
    final = {"quant_loss": quantization_loss(Z, C, S.indices), "entropy_nats": h,
             "entropy_bits": nats_to_bits(h), "channel_loss": channel_loss(C, stats, ch)}
    header = {"K": K, "gamma": weights.gamma, "omega": weights.omega, "N": Z.dim, "M": Z.M,
              "seed": s.get_int("seed", 0), "source": source, "channel": ch_info,
              "train": asdict(config)}
    (out / "train_report.json").write_text(report.to_json(config=header, final=final))
    return {"config": header, "final": final}


def run_simulate(s: Settings) -> LinkSimReport:
    if not s.has("codebook"):
        raise ValueError("simulate needs --codebook")
    C = read_codebook(s.path("codebook"))
    Z, source, _ = load_features(s)
    ch, ch_info = channel_from(s)
    trials = s.get_int("trials", 1000)
    rep = simulate_link(Z, C, ch, trials, _channel_seed(s, ch.p))
    out = out_dir(s)
    d = _report_dict(rep)
    _write_json(out / "link_report.json", {"report": d, "channel": ch_info, "source": source})
    keys = sorted(d)
    _write_csv(out / "link_report.csv", keys, [[d[k] for k in keys]])
    return rep


def run_sweep(s: Settings) -> dict:
    Z, source, _ = load_features(s)
    if not s.has("ks"):
        raise ValueError("sweep needs --ks")
    ks = validate_candidates(cfgmod.parse_int_list(s.get_str("ks")), Z.M)
    ch, ch_info = channel_from(s)
    lam = s.get_float("lambda", 0.0)
    if lam < 0:
        raise ValueError(f"lambda must be >= 0, got {lam}")
    books = train_per_k(Z, ks, weights_from(s), ch, train_config_from(s), s.get_int("workers", 1))
    books = {k: C.as_float32() for k, C in books.items()}
    rows = [sweep_row(Z, books[k], ch.p, lam) for k in ks]
    k_star = select_k(rows)
    out = out_dir(s)
    fields = ("K", "d_quant", "d_channel", "d_total", "rate_real", "rate_payload", "objective")
    _write_csv(out / "sweep.csv", fields, [[getattr(r, f) for f in fields] for r in rows])
    for k, C in books.items():
        write_codebook(out / f"codebook_K{k}.semc", C)
    payload = {"K_star": k_star, "lambda": lam, "channel": ch_info, "source": source,
               "rows": [asdict(r) for r in rows]}
    if s.has("ps"):
        ps = cfgmod.parse_float_list(s.get_str("ps"))
        grid = []
        for k in ks:
            for p in ps:
                r = sweep_row(Z, books[k], p, lam)
                grid.append([k, p, r.d_quant, r.d_channel, r.d_total, r.rate_real,
                             r.rate_payload, r.objective])
        _write_csv(out / "sweep_grid.csv", ("K", "p") + fields[1:], grid)
        payload["grid_rows"] = len(grid)
    _write_json(out / "sweep.json", payload)
    return payload


COMPARE_FIELDS = ("variant", "gamma", "omega", "p", "mse_mean", "mse_stderr", "ci95_low",
                  "ci95_high", "index_error_rate", "analytic_ds", "entropy_nats", "entropy_bits")


def run_compare(s: Settings) -> list[dict]:
    if not s.has("variants"):
        raise ValueError("compare needs --variants name:gamma:omega,...")
    variants = cfgmod.parse_variants(s.get_str("variants"))
    Z, source, _ = load_features(s)
    ch, ch_info = channel_from(s)
    ps = cfgmod.parse_float_list(s.get_str("ps")) if s.has("ps") else [ch.p]
    K = s.get_int("k", 256)
    trials = s.get_int("trials", 1000)
    config = train_config_from(s)
    out = out_dir(s)
    rows = []
    for name, gamma, omega in variants:
        C, _ = train_codebook(Z, K, LossWeights(gamma, omega), ch, config)
        C = C.as_float32()
        write_codebook(out / f"codebook_{name}.semc", C)
        for p in ps:
            rep = simulate_link(Z, C, ch.with_p(p), trials, _channel_seed(s, p))
            d = _report_dict(rep)
            d.update(variant=name, gamma=gamma, omega=omega)
            rows.append(d)
    _write_csv(out / "compare.csv", COMPARE_FIELDS, [[r[f] for f in COMPARE_FIELDS] for r in rows])
    _write_json(out / "compare.json", {"K": K, "trials": trials, "channel": ch_info,
                                       "source": source, "rows": rows})
    return rows


def run_analyze(s: Settings) -> dict:
    if not s.has("codebook"):
        raise ValueError("analyze needs --codebook")
    C = read_codebook(s.path("codebook"))
    Z, source, _ = load_features(s)
    ch, ch_info = channel_from(s)
    rep = total_semantic_distortion(Z, C, ch.p)
    stats = usage_frequencies(quantize_batch(Z, C))
    h = empirical_entropy(stats)
    L = bits_per_index(C.K)
    payload = {
        "distortion": asdict(rep),
        "L": L,
        "P_e": index_error_probability(L, ch.p),
        "entropy_nats": h,
        "entropy_bits": nats_to_bits(h),
        "max_entropy_nats": math.log(C.K),
        "usage": stats.frequencies.tolist(),
        "channel": ch_info,
        "source": source,
    }
    out = out_dir(s)
    _write_json(out / "analysis.json", payload)
    conf = confusion_matrix(ch, C.K)
    _write_csv(out / "confusion.csv", ["sent"] + [str(l) for l in range(C.K)],
               [[k] + row.tolist() for k, row in enumerate(conf)])
    return payload


COMMANDS = {
    "gen": (run_gen, "sample a Gaussian-mixture feature set"),
    "train": (run_train, "train a codebook"),
    "simulate": (run_simulate, "Monte Carlo link simulation of a codebook"),
    "sweep": (run_sweep, "codebook-size sweep: argmin D_S(K, p) + lambda R(K)"),
    "compare": (run_compare, "train loss variants and simulate each over a p grid"),
    "analyze": (run_analyze, "closed-form distortion report and confusion matrix"),
}

# flag -> settings key; every flag may also appear in the config file
_PATH_FLAGS = ("features", "mixture", "codebook", "out")
_FLAGS = {
    "--features": str, "--mixture": str, "--codebook": str, "--k": int,
    "--gamma": float, "--omega": float, "--p": float, "--snr-db": float, "--mod": str,
    "--fading": str, "--lambda": float, "--ks": str, "--ps": str, "--p-set": str,
    "--trials": int, "--seed": int, "--confusion": str, "--labeling": str,
    "--labeling-seed": int, "--out": str, "--epochs": int, "--step-size": float,
    "--batch-size": int, "--temperature": float, "--dead-threshold": str, "--init": str,
    "--update": str, "--variants": str, "--workers": int,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=str, default=None, help="key = value settings file")
    for flag, typ in _FLAGS.items():
        common.add_argument(flag, type=typ, default=None,
                            dest=cfgmod.normalize_key(flag.lstrip("-")))
    parser = argparse.ArgumentParser(prog="semcodebook", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        sub.add_parser(name, parents=[common], help=help_text)
    return parser


def settings_from_args(args: argparse.Namespace) -> Settings:
    values: dict = {}
    base = Path.cwd()
    if args.config:
        cfg_path = Path(args.config)
        values.update(cfgmod.load_config(cfg_path))
        base = cfg_path.resolve().parent
    if "modulation" in values and "mod" not in values:
        values["mod"] = values.pop("modulation")
    s = Settings(values, base)
    for flag in _FLAGS:
        key = cfgmod.normalize_key(flag.lstrip("-"))
        v = getattr(args, key)
        if v is not None:
            s.values[key] = v
            if key in _PATH_FLAGS:
                # flag paths are relative to the working directory
                s.path_keys.add(key)
    return s


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        s = settings_from_args(args)
        COMMANDS[args.command][0](s)
    except FormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, FloatingPointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
