"""Command-line entry point ``structembed``.

Commands: ``diagnose``, ``estimate``, ``sweep``, ``bench``, ``verify``.
Options come from defaults, then a flat ``key = value`` config file
(``--config``), then command-line flags. CSV goes to ``--output`` or stdout;
human-readable notes go to stderr.

Exit codes: 0 success, 1 verification failure, 2 usage error, 3 resource
cap, 4 data error.
"""

import argparse
import csv
import io
import math
import re
import sys

import numpy as np

from . import bounds, diagnostics, kernels, structured, transforms, verify
from .errors import DataError, InvalidArgument, ResourceLimit

DEFAULT_SEED = 0x5EED
EXIT_OK, EXIT_VERIFY, EXIT_USAGE, EXIT_CAP, EXIT_DATA = 0, 1, 2, 3, 4

ESTIMATE_HEADER = ["m", "family", "f", "pair_id", "estimate", "exact", "abs_error", "seed"]

DEFAULTS = {
    "family": None, "n": None, "m": None, "f": "identity", "dataset": None,
    "m_values": None, "reps": 10, "tau": 0.25, "eps": 0.01, "rho": 0.0,
    "seed": DEFAULT_SEED, "exact": False, "oracle": None, "output": None,
    "r": 1, "a": 2, "max_pairs": 10_000, "graph_export": None, "graph_rows": "0,1",
    "only": None, "perf_soft": False, "dense_cap": 1 << 28, "graph_cap": diagnostics.DEFAULT_GRAPH_CAP_N,
}


class UsageError(Exception):
    pass


def _int(text):
    return int(str(text), 0)


def _bool(text):
    s = str(text).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _int_list(text):
    items = [s for s in re.split(r"[,\s]+", str(text).strip()) if s]
    return [_int(s) for s in items]


def _str_list(text):
    return [s for s in re.split(r"[,\s]+", str(text).strip()) if s]


CONVERT = {
    "n": _int, "m": _int, "reps": _int, "seed": _int, "oracle": _int, "r": _int, "a": _int,
    "max_pairs": _int, "dense_cap": _int, "graph_cap": _int,
    "tau": float, "eps": float, "rho": float,
    "exact": _bool, "perf_soft": _bool, "m_values": _int_list,
}


def build_parser():
    p = argparse.ArgumentParser(prog="structembed", description=__doc__.split("\n\n")[0])
    p.add_argument("command", choices=["diagnose", "estimate", "sweep", "bench", "verify"])
    p.add_argument("--family", help="unstructured, circulant, skew_circulant, toeplitz, hankel, ldr "
                                    "(bench accepts a comma list)")
    p.add_argument("--n", type=_int, help="input dimension; rounded up to a power of two")
    p.add_argument("--m", type=_int, help="number of rows")
    p.add_argument("--f", help="identity, heaviside, relu, arccos<b>, sine, cosine, sincos")
    p.add_argument("--dataset", help="text file, one vector per line")
    p.add_argument("--m-values", dest="m_values", type=_int_list, help="comma-separated m list for sweep")
    p.add_argument("--reps", type=_int)
    p.add_argument("--tau", type=float)
    p.add_argument("--eps", type=float)
    p.add_argument("--rho", type=float, help="Lipschitz constant for the cor2 columns of sweep")
    p.add_argument("--seed", type=_int, help=f"64-bit seed (default {DEFAULT_SEED:#x})")
    p.add_argument("--exact", action="store_const", const=True, help="exact chromatic numbers")
    p.add_argument("--oracle", type=_int, metavar="TRIALS", help="add Monte-Carlo oracle columns")
    p.add_argument("--output", help="CSV destination (default stdout)")
    p.add_argument("--config", help="flat key = value file; flags override it")
    p.add_argument("--r", type=_int, help="ldr displacement rank")
    p.add_argument("--a", type=_int, help="ldr nonzeros per h-vector")
    p.add_argument("--max-pairs", dest="max_pairs", type=_int)
    p.add_argument("--graph-export", dest="graph_export", help="edge-list file for diagnose")
    p.add_argument("--graph-rows", dest="graph_rows", help="row pair for --graph-export, e.g. 0,1")
    p.add_argument("--graph-cap", dest="graph_cap", type=_int)
    p.add_argument("--dense-cap", dest="dense_cap", type=_int, help="entry cap for bench dense baseline")
    p.add_argument("--only", help="comma list of verify criteria (names or numbers)")
    p.add_argument("--perf-soft", dest="perf_soft", action="store_const", const=True,
                   help="report a failed performance criterion without failing")
    return p


def read_config(path):
    cfg = {}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"config line {lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in DEFAULTS:
            raise UsageError(f"config line {lineno}: unknown key {key!r}")
        try:
            cfg[key] = CONVERT.get(key, str)(value)
        except ValueError as exc:
            raise UsageError(f"config line {lineno}: {exc}") from exc
    return cfg


def resolve(args):
    cfg = dict(DEFAULTS)
    if args.config:
        cfg.update(read_config(args.config))
    for key in DEFAULTS:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    cfg["command"] = args.command
    return cfg


def read_dataset(path):
    """Rows of floats; blank lines and ``#`` comments are skipped."""
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise DataError(f"cannot read dataset {path}: {exc.strerror}") from exc
    rows, width = [], None
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            vals = [float(tok) for tok in re.split(r"[,\s]+", line) if tok]
        except ValueError as exc:
            raise DataError(f"malformed number ({exc})", line=lineno) from exc
        if not all(math.isfinite(v) for v in vals):
            raise DataError("non-finite value", line=lineno)
        if width is None:
            width = len(vals)
        elif len(vals) != width:
            raise DataError(f"expected {width} values, found {len(vals)}", line=lineno)
        rows.append(vals)
    if not rows:
        raise DataError("dataset contains no vectors")
    return np.array(rows, dtype=float)


def fmt(x):
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def write_csv(cfg, header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(x) for x in r])
    text = buf.getvalue()
    if cfg["output"]:
        with open(cfg["output"], "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def note(msg):
    print(msg, file=sys.stderr)


def _family(cfg):
    if not cfg["family"]:
        raise UsageError("--family is required")
    tag = cfg["family"]
    if tag == "ldr":
        return structured.StructuredFamily("ldr", cfg["r"], cfg["a"])
    return structured.StructuredFamily(tag)


def _effective_n(cfg, data_dim=None):
    n = cfg["n"]
    if n is None:
        if data_dim is None:
            raise UsageError("--n is required")
        n = data_dim
    if n < 1:
        raise UsageError("--n must be >= 1")
    if data_dim is not None and n < data_dim:
        raise UsageError(f"--n {n} is smaller than the dataset dimension {data_dim}")
    eff = transforms.next_pow2(n)
    note(f"effective n = {eff}" + (f" (rounded up from {n})" if eff != n else ""))
    return eff


def _require_m(cfg):
    if cfg["m"] is None:
        raise UsageError("--m is required")
    if cfg["m"] < 1:
        raise UsageError("--m must be >= 1")
    return cfg["m"]


def cmd_diagnose(cfg):
    fam = _family(cfg)
    n = _effective_n(cfg)
    m = _require_m(cfg)
    M = structured.build(fam, m, n, cfg["seed"])
    stats = diagnostics.model_stats(M, exact=cfg["exact"], graph_cap=cfg["graph_cap"])
    normalized = diagnostics.check_normalized(M)
    orthogonal = diagnostics.check_orthogonality(M)
    if cfg["graph_export"]:
        i1, i2 = _int_list(cfg["graph_rows"])[:2]
        G = diagnostics.coherence_graph(M, i1, i2, cap=cfg["graph_cap"])
        with open(cfg["graph_export"], "w", encoding="utf-8") as fh:
            fh.write(f"# coherence graph rows {i1},{i2}: {len(G.vertices)} vertices, {len(G.edges)} edges\n")
            fh.writelines(line + "\n" for line in G.edge_lines())
    header = ["family", "m", "n", "seed", "chi", "chi_is_exact", "mu", "mu_tilde", "normalized", "orthogonal"]
    write_csv(cfg, header, [[str(fam), m, n, cfg["seed"], stats.chi, stats.chi_is_exact,
                             stats.mu, stats.mu_tilde, normalized, orthogonal]])
    note(f"chi={stats.chi} ({'exact' if stats.chi_is_exact else 'greedy upper bound'}) "
         f"mu={stats.mu:.6g} mu_tilde={stats.mu_tilde:.6g} normalized={normalized} orthogonal={orthogonal}")
    return EXIT_OK


def _load(cfg):
    if not cfg["dataset"]:
        raise UsageError("--dataset is required")
    X = read_dataset(cfg["dataset"])
    if len(X) < 2:
        raise DataError("need at least two vectors for pair kernels")
    return X


def cmd_estimate(cfg):
    fam = _family(cfg)
    X = _load(cfg)
    n = _effective_n(cfg, X.shape[1])
    m = _require_m(cfg)
    f = kernels.as_nonlinearity(cfg["f"])
    pairs = kernels.all_pairs(len(X))
    if len(pairs) > cfg["max_pairs"]:
        raise ResourceLimit(f"{len(pairs)} pairs exceed --max-pairs {cfg['max_pairs']}")
    P = kernels.make_pipeline(fam, m, n, f, cfg["seed"])
    est = kernels.estimate_pairs(P, X, pairs)
    header = list(ESTIMATE_HEADER)
    if cfg["oracle"]:
        header += ["oracle_mean", "oracle_stderr"]
    rows = []
    for q, (i, j) in enumerate(pairs):
        exact = kernels.exact_kernel(f, X[i], X[j])
        row = [m, str(fam), str(f), f"{i}-{j}", float(est[q]), exact,
               None if exact is None else abs(float(est[q]) - exact), cfg["seed"]]
        if cfg["oracle"]:
            row += list(kernels.mc_oracle(f, X[i], X[j], cfg["oracle"], kernels.derive_seed(cfg["seed"], i, j)))
        rows.append(row)
    write_csv(cfg, header, rows)
    form = kernels.exact_form(f)
    note(f"exact kernel: {form}" if form else f"exact kernel: none available for {f}")
    return EXIT_OK


def cmd_sweep(cfg):
    fam = _family(cfg)
    if not cfg["m_values"]:
        raise UsageError("--m-values must list at least one m")
    X = _load(cfg)
    n = _effective_n(cfg, X.shape[1])
    f = kernels.as_nonlinearity(cfg["f"])
    rows = kernels.error_sweep(X, fam, f, cfg["m_values"], cfg["reps"], cfg["seed"],
                               max_pairs=cfg["max_pairs"], n=n)
    N, tau = len(X), cfg["tau"]
    header = ["m", "family", "f", "rmse", "max_abs_error", "reps", "seed",
              "cor1_threshold", "cor1_tail", "cor2_threshold", "cor2_tail", "tail_note"]
    out = []
    for r in rows:
        c1t = c1p = c2t = c2p = None
        if r.m >= 2:
            c1t, c1p = bounds.cor1_threshold(r.m, tau), bounds.cor1_tail(N, r.m, tau)
            if f.f_max:
                c2t = bounds.cor2_threshold(r.m, tau, f.f_max, cfg["rho"])
                c2p = bounds.cor2_tail(N, r.m, tau, f.f_max)
        out.append([r.m, r.family, r.f, r.rmse, r.max_abs_error, r.reps, cfg["seed"],
                    c1t, c1p, c2t, c2p, bounds.UP_TO_CONSTANT])
    write_csv(cfg, header, out)
    return EXIT_OK


def cmd_bench(cfg):
    tags = _str_list(cfg["family"] or "circulant,toeplitz,hankel")
    n = _effective_n(cfg)
    m = cfg["m"] or n
    reps = cfg["reps"]
    gen = transforms.rng(cfg["seed"], 0xBE)
    v = gen.standard_normal(n)
    v /= np.linalg.norm(v)
    rows = []
    for tag in tags:
        cfg_f = dict(cfg, family=tag)
        M = structured.build(_family(cfg_f), m, n, cfg["seed"])
        fast, slow = verify.time_matvec(M, v, reps, cfg["dense_cap"])
        if slow is None:
            note(f"warning: dense baseline for {tag} at {m}x{n} skipped (allocation or cap)")
        rows.append([tag, m, n, reps, fast, slow, None if slow is None else slow / fast])
    write_csv(cfg, ["family", "m", "n", "reps", "structured_median_s", "dense_median_s", "speedup"], rows)
    note(f"fast convolution path used for n >= {structured.FAST_PATH_MIN_N}")
    return EXIT_OK


def cmd_verify(cfg):
    only = _str_list(cfg["only"]) if cfg["only"] else None
    try:
        verify.select(only)
    except KeyError as exc:
        raise UsageError(str(exc.args[0])) from exc
    results = verify.run_all(only, seed=cfg["seed"], perf_soft=cfg["perf_soft"],
                             report=lambda r: print(r.line(), flush=True))
    if cfg["output"]:
        write_csv(cfg, ["number", "name", "passed", "soft", "seconds", "detail"],
                  [[r.number, r.name, r.passed, r.soft, r.seconds, r.detail] for r in results])
    failed = [r.name for r in results if not r.passed]
    if failed:
        print(f"FAILED: {', '.join(failed)}", flush=True)
        return EXIT_VERIFY
    print(f"all {len(results)} criteria passed", flush=True)
    return EXIT_OK


COMMANDS = {"diagnose": cmd_diagnose, "estimate": cmd_estimate, "sweep": cmd_sweep,
            "bench": cmd_bench, "verify": cmd_verify}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve(args)
        return COMMANDS[cfg["command"]](cfg)
    except (UsageError, InvalidArgument) as exc:
        parser.print_usage(sys.stderr)
        print(f"structembed: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ResourceLimit as exc:
        print(f"structembed: resource limit: {exc}", file=sys.stderr)
        return EXIT_CAP
    except DataError as exc:
        print(f"structembed: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
