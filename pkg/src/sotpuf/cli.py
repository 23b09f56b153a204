"""Command-line pipeline: simulate, post-process, measure, optimize, export.

Commands talk to each other through files only: packed bitmaps (bitio),
CSV tables, and JSON reports.  Every run writes a `<verb>_manifest.json`
carrying the schema version, the fully resolved configuration, the seed,
and a checksum per output file, so any run can be replayed from its
manifest alone.  All file writes are atomic.

Exit codes: 0 success, 2 configuration or input error, 3 infeasible
result (empty beta set, no common operating window).
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

import numpy as np

from . import array as arr
from . import bitio
from . import dualpulse as dp
from . import metrics
from . import postproc
from . import randomness as rnd
from .config import ConfigError, RunConfig, load_config, render_toml
from .device import VariationConfig, sample_population

SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3

_V1_STEP = 0.01          # phase-diagram V1 resolution (volts)
_BETA_STEP = 0.001       # phase-diagram beta resolution (volts)


# ---------------------------------------------------------------- helpers

def _population(cfg: RunConfig):
    return sample_population(
        VariationConfig(n_cells=cfg.array_size, cv=cfg.cv, seed=cfg.seed),
        cfg.device)


def _write_manifest(out: Path, verb: str, cfg: RunConfig,
                    outputs: list[Path], extra: dict | None = None) -> Path:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "command": verb,
        "seed": cfg.seed,
        "config": cfg.to_dict(),
        "outputs": [{"path": p.name, "sha256": bitio.file_sha256(p)}
                    for p in outputs],
    }
    if extra:
        doc.update(extra)
    path = out / f"{verb}_manifest.json"
    bitio.write_json(path, doc)
    return path


def _read_keys(in_dir: Path) -> list[tuple[str, np.ndarray]]:
    paths = sorted(in_dir.glob("key_*.pbm"))
    if not paths:
        raise ConfigError(f"no key_*.pbm bitmaps found in {in_dir}")
    return [(p.name, bitio.read_bitmap(p)) for p in paths]


def _address_features(n_rows: int) -> np.ndarray:
    """Row index -> binary address bits, MSB first; shape (n_rows, n_bits)."""
    n_bits = max(1, int(np.ceil(np.log2(max(n_rows, 2)))))
    idx = np.arange(n_rows, dtype=np.int64)
    shifts = np.arange(n_bits - 1, -1, -1)
    return ((idx[:, None] >> shifts[None, :]) & 1).astype(np.uint8)


def _write_attack_csv(path: Path, features: np.ndarray,
                      labels: np.ndarray) -> None:
    n_feat = features.shape[1]
    header = ",".join([f"a{i}" for i in range(n_feat)] + ["label"])
    body = "\n".join(
        ",".join(map(str, row)) + f",{int(lab)}"
        for row, lab in zip(features, labels))
    bitio.atomic_write(path, (header + "\n" + body + "\n").encode())


# ---------------------------------------------------------------- verbs

def cmd_reconfigure(cfg: RunConfig, args, out: Path) -> int:
    cells = _population(cfg)
    state = arr.init_array(cells, cfg.array_size, arr.POL_RESET, seed=cfg.seed)
    outputs: list[Path] = []
    hws: list[float] = []
    acc = np.zeros(cfg.array_size, dtype=np.int64)
    for r in range(cfg.runs):
        arr.reconfigure_dual(state, cfg.v1, cfg.beta, cfg.first_polarity,
                             cfg.pulse_width_s, cfg.temperature_c)
        path = out / f"key_{r:03d}.pbm"
        bitio.write_bitmap(path, state.bits)
        outputs.append(path)
        hws.append(metrics.hamming_weight(state.bits))
        acc += state.bits

    p = acc / cfg.runs
    map_path = out / "psw_map.csv"
    bitio.write_csv(map_path, ["cell", "p"],
                    ((i, float(v)) for i, v in enumerate(p)))
    outputs.append(map_path)

    mu, sigma = float(p.mean()), float(p.std())
    summary = out / "reconfigure_summary.txt"
    lines = [f"keys: {cfg.runs}  cells: {cfg.array_size}  "
             f"v1: {cfg.v1}  beta: {cfg.beta}  T: {cfg.temperature_c} C",
             f"switch map over {cfg.runs} runs: mu={mu:.4f} sigma={sigma:.4f}"]
    lines += [f"key_{r:03d} hw={h:.4f}" for r, h in enumerate(hws)]
    bitio.atomic_write(summary, ("\n".join(lines) + "\n").encode())
    outputs.append(summary)

    _write_manifest(out, "reconfigure", cfg, outputs,
                    {"per_key_hw": hws, "map_mu": mu, "map_sigma": sigma})
    print(f"wrote {cfg.runs} keys to {out}  "
          f"(hw {min(hws):.4f}..{max(hws):.4f}, map mu={mu:.4f} "
          f"sigma={sigma:.4f})")
    return EXIT_OK


def cmd_metrics(cfg: RunConfig, args, out: Path) -> int:
    named = _read_keys(Path(args.inputs))
    raw = [bits for _, bits in named]
    folded = [postproc.fold_and_segment(bits, cfg.xor_arity,
                                        cfg.response_width, source_tag=name)
              for name, bits in named]
    flat = [s.flat() for s in folded]
    pooled = postproc.ResponseSet(
        responses=np.vstack([s.responses for s in folded]),
        xor_arity=cfg.xor_arity, source_tag="pooled")

    fit = metrics.uniformity(pooled)
    report: dict = {
        "schema_version": SCHEMA_VERSION,
        "seed": cfg.seed,
        "n_keys": len(raw),
        "xor_arity": cfg.xor_arity,
        "response_width": cfg.response_width,
        "per_key_hw_raw": [metrics.hamming_weight(b) for b in raw],
        "per_key_hw_folded": [metrics.hamming_weight(f) for f in flat],
        "uniformity": {
            "mu": fit.mu, "sigma": fit.sigma, "n_bins": fit.n_bins,
            "n_samples": fit.n_samples,
            "ideal_sigma": metrics.ideal_hw_sigma(cfg.response_width),
        },
    }
    outputs = []
    hw_path = out / "response_hw.csv"
    bitio.write_csv(hw_path, ["response", "hw"],
                    ((i, float(h)) for i, h in
                     enumerate(pooled.hamming_weights())))
    outputs.append(hw_path)

    if len(raw) >= 2:
        hd = metrics.inter_reconfig_hd(flat)
        corr = metrics.correlation_matrix(flat)
        off = corr.off_diagonal()
        bound3 = 3.0 / np.sqrt(flat[0].size)
        report["inter_reconfig_hd"] = {
            "mean": hd.mean, "std": hd.std,
            "distance_from_half": hd.distance_from_half,
            "n_pairs": int(hd.values.size),
        }
        report["correlation"] = {
            "max_off_diagonal": corr.max_off_diagonal(),
            "bound_3sigma": float(bound3),
            "share_within_3sigma": float(np.mean(np.abs(off) <= bound3)),
            "degenerate_keys": int(corr.degenerate.sum()),
        }
        hd_path = out / "hd_pairs.csv"
        bitio.write_csv(hd_path, ["pair", "hd"],
                        ((i, float(v)) for i, v in enumerate(hd.values)))
        outputs.append(hd_path)
        corr_path = out / "correlation.csv"
        bitio.write_csv(corr_path,
                        [f"k{j}" for j in range(len(flat))],
                        ([float(v) for v in row] for row in corr.matrix))
        outputs.append(corr_path)

    acf_res = metrics.acf(flat[0], max_lag=args.max_lag)
    within = float(np.mean(np.abs(acf_res.values) <= acf_res.bound))
    report["acf"] = {"bound": acf_res.bound, "max_lag": args.max_lag,
                     "share_within_bound": within}
    acf_path = out / "acf.csv"
    bitio.write_csv(acf_path, ["lag", "value"],
                    ((int(l), float(v))
                     for l, v in zip(acf_res.lags, acf_res.values)))
    outputs.append(acf_path)

    p = np.mean(np.stack(raw), axis=0)
    report["psw_map"] = {"mu": float(p.mean()), "sigma": float(p.std()),
                         "n_trials": len(raw)}

    json_path = out / "metrics.json"
    bitio.write_json(json_path, report)
    outputs.append(json_path)

    lines = [f"keys: {len(raw)}  arity: {cfg.xor_arity}  "
             f"width: {cfg.response_width}",
             f"uniformity: mu={fit.mu:.4f} sigma={fit.sigma:.4f} "
             f"(ideal {report['uniformity']['ideal_sigma']:.4f})"]
    if "inter_reconfig_hd" in report:
        r = report["inter_reconfig_hd"]
        lines.append(f"inter-reconfig hd: mean={r['mean']:.4f} "
                     f"|mean-0.5|={r['distance_from_half']:.4f}")
        c = report["correlation"]
        lines.append(f"correlation: max |r|={c['max_off_diagonal']:.4f} "
                     f"share within 3/sqrt(n)={c['share_within_3sigma']:.3f}")
    lines.append(f"acf: share within bound={within:.3f}")
    summary = out / "metrics_summary.txt"
    bitio.atomic_write(summary, ("\n".join(lines) + "\n").encode())
    outputs.append(summary)

    _write_manifest(out, "metrics", cfg, outputs)
    print("\n".join(lines))
    return EXIT_OK


def cmd_nist(cfg: RunConfig, args, out: Path) -> int:
    length = args.sequence_length
    if args.reference:
        seqs = [rnd.reference_bits(length, seed=cfg.seed + i)
                for i in range(args.sequences)]
        source = f"reference rng, seeds {cfg.seed}..{cfg.seed + args.sequences - 1}"
    else:
        if not args.inputs:
            raise ConfigError("nist needs an input directory or --reference")
        named = _read_keys(Path(args.inputs))
        stream = np.concatenate(
            [postproc.xor_fold(bits, cfg.xor_arity) for _, bits in named])
        n_full = stream.size // length
        if n_full < 1:
            raise ConfigError(
                f"{stream.size} folded bits cannot fill one "
                f"{length}-bit sequence")
        n_seq = min(args.sequences, n_full)
        seqs = [stream[i * length:(i + 1) * length] for i in range(n_seq)]
        source = f"{args.inputs}, {len(named)} keys folded at arity {cfg.xor_arity}"

    rep = rnd.run_battery(seqs, alpha=args.alpha)
    rows_doc = []
    table = [f"{'test':28s} {'unif p':>8s} {'median p':>9s} "
             f"{'proportion':>10s} pass"]
    for row in rep.rows:
        med = float(np.median(row.p_values)) if row.p_values else float("nan")
        rows_doc.append({
            "name": row.name,
            "uniformity_p": row.uniformity_p,
            "median_p": med,
            "proportion": row.proportion,
            "threshold": row.threshold,
            "passed": row.passed,
            "skipped": row.skipped_count,
            "detail": row.detail,
        })
        table.append(f"{row.name:28s} {row.uniformity_p:8.4f} {med:9.4f} "
                     f"{row.proportion:10.3f} {'yes' if row.passed else 'NO'}"
                     f"{'  [' + row.detail + ']' if row.detail else ''}")
    table.append(f"sequences: {rep.n_sequences} x {length} bits  "
                 f"alpha: {rep.alpha}  all passed: "
                 f"{'yes' if rep.all_passed else 'NO'}")

    doc = {"schema_version": SCHEMA_VERSION, "seed": cfg.seed,
           "source": source, "alpha": rep.alpha,
           "n_sequences": rep.n_sequences, "sequence_length": length,
           "all_passed": rep.all_passed, "rows": rows_doc}
    json_path = out / "nist.json"
    bitio.write_json(json_path, doc)
    txt_path = out / "nist_table.txt"
    bitio.atomic_write(txt_path, ("\n".join(table) + "\n").encode())
    _write_manifest(out, "nist", cfg, [json_path, txt_path])
    print("\n".join(table))
    return EXIT_OK


def _measure_curves(cfg: RunConfig, cells, v_grid) -> dict[float, dp.WsrCurve]:
    return {
        t: dp.measure_wsr_curve(cells, cfg.array_size, v_grid,
                                pulse_width_s=cfg.pulse_width_s,
                                temperature_c=t, seed=cfg.seed + i)
        for i, t in enumerate(cfg.temperatures)
    }


def cmd_optimize(cfg: RunConfig, args, out: Path) -> int:
    if args.no_compensation:
        cfg = dataclasses.replace(
            cfg, device=dataclasses.replace(cfg.device, ron_tc=0.0))
    cells = _population(cfg)
    v_grid = np.round(np.arange(args.v_min, args.v_max + _V1_STEP / 2,
                                _V1_STEP), 10)
    curves = _measure_curves(cfg, cells, v_grid)
    outputs: list[Path] = []

    if args.single_pulse:
        windows = {t: dp.operation_window(c) for t, c in curves.items()}
        doc: dict = {"schema_version": SCHEMA_VERSION, "seed": cfg.seed,
                     "mode": "single-pulse", "windows": {}}
        common: dp.VoltageWindow | None = None
        feasible = True
        for t, w in windows.items():
            doc["windows"][str(t)] = None if w is None else [w.lo, w.hi]
            if w is None:
                feasible = False
            elif common is None:
                common = dp.VoltageWindow(w.lo, w.hi)
            else:
                got = dp.common_window(common, w)
                if got is None:
                    feasible = False
                else:
                    common = got
        doc["common_window"] = ([common.lo, common.hi]
                                if feasible and common else None)
        json_path = out / "optimize.json"
        bitio.write_json(json_path, doc)
        _write_manifest(out, "optimize", cfg, [json_path])
        if not feasible or common is None:
            print("single-pulse mode: no common operating window across "
                  f"temperatures {list(curves)}")
            return EXIT_INFEASIBLE
        print(f"single-pulse common window: [{common.lo:.3f}, "
              f"{common.hi:.3f}] V across {list(curves)}")
        return EXIT_OK

    models = {t: dp.fit_tangent(c) for t, c in curves.items()}
    t_ref = (cfg.temperature_c if cfg.temperature_c in models
             else list(models)[0])
    model = models[t_ref]
    sol = dp.solve_beta(model.k, validity_halfwidth=model.validity_halfwidth,
                        target=args.target)
    if not sol.valid:
        print(f"no feasible beta interval for fitted k={model.k:.3f}",
              file=sys.stderr)
        return EXIT_INFEASIBLE

    beta_used = args.beta if args.beta is not None else sol.optimal_beta
    beta_grid = np.round(np.arange(0.0, args.beta_max + _BETA_STEP / 2,
                                   _BETA_STEP), 10)
    phase = dp.phase_diagram(curves, beta_grid, v_grid)
    for t, grid in phase.per_temperature.items():
        path = out / f"phase_T{t:g}.csv"
        bitio.write_csv(path, ["beta"] + [f"{v:g}" for v in v_grid],
                        ([float(b)] + [int(x) for x in row]
                         for b, row in zip(beta_grid, grid)))
        outputs.append(path)
    overlap_path = out / "phase_overlap.csv"
    bitio.write_csv(overlap_path, ["beta"] + [f"{v:g}" for v in v_grid],
                    ([float(b)] + [int(x) for x in row]
                     for b, row in zip(beta_grid, phase.overlap)))
    outputs.append(overlap_path)

    i_beta = int(np.argmin(np.abs(beta_grid - beta_used)))
    row = phase.overlap[i_beta]
    common_v1 = ([float(v_grid[row].min()), float(v_grid[row].max())]
                 if row.any() else None)

    intervals = [{"lo": iv.lo, "hi": iv.hi, "lo_open": iv.lo_open,
                  "hi_open": iv.hi_open, "branch": iv.branch}
                 for iv in sol.intervals]
    doc = {
        "schema_version": SCHEMA_VERSION, "seed": cfg.seed,
        "mode": "dual-pulse",
        "fitted_k": {str(t): m.k for t, m in models.items()},
        "fit_temperature": t_ref,
        "beta_intervals": intervals,
        "optimal_beta": sol.optimal_beta,
        "beta_used": beta_used,
        "overlap_fraction": phase.overlap_fraction(),
        "common_v1_at_beta": common_v1,
        "point_check": {
            "beta": cfg.beta, "v1": cfg.v1,
            "feasible": dp.point_feasible(curves, cfg.beta, cfg.v1),
        },
    }
    json_path = out / "optimize.json"
    bitio.write_json(json_path, doc)
    outputs.append(json_path)
    _write_manifest(out, "optimize", cfg, outputs)

    pos = next((iv for iv in sol.intervals if iv.lo > 0), sol.intervals[0])
    print(f"fitted k at {t_ref:g} C: {model.k:.3f} 1/V")
    print(f"beta interval {'(' if pos.lo_open else '['}{pos.lo:.3f}, "
          f"{pos.hi:.3f}{')' if pos.hi_open else ']'} V, "
          f"optimal beta {sol.optimal_beta:.3f} V")
    if common_v1 is None:
        print(f"no common V1 window at beta={beta_used:.3f} across "
              f"{list(curves)}")
        return EXIT_INFEASIBLE
    print(f"common V1 window at beta={beta_used:.3f}: "
          f"[{common_v1[0]:.2f}, {common_v1[1]:.2f}] V across {list(curves)}")
    return EXIT_OK


def cmd_shmoo(cfg: RunConfig, args, out: Path) -> int:
    if args.no_compensation:
        cfg = dataclasses.replace(
            cfg, device=dataclasses.replace(cfg.device, ron_tc=0.0))
    cells = _population(cfg)
    v_grid = np.linspace(args.v_min, args.v_max, args.v_points)
    w_grid = np.geomspace(args.w_min, args.w_max, args.w_points)
    outputs: list[Path] = []
    contours: dict[str, list] = {}
    for t in cfg.temperatures:
        grid = arr.write_shmoo(cells, cfg.array_size, v_grid, w_grid,
                               temperature_c=t, seed=cfg.seed)
        path = out / f"shmoo_T{t:g}.csv"
        bitio.write_csv(path, ["v"] + [f"{w * 1e9:g}ns" for w in w_grid],
                        ([float(v)] + [float(x) for x in row]
                         for v, row in zip(v_grid, grid)))
        outputs.append(path)
        # V at WSR=0.5 per pulse width (inverse interpolation per column)
        v50 = []
        for j in range(w_grid.size):
            col = grid[:, j]
            v50.append(float(np.interp(0.5, col, v_grid))
                       if col[0] < 0.5 < col[-1] else float("nan"))
        contours[f"{t:g}"] = v50
    contour_path = out / "shmoo_v50.csv"
    bitio.write_csv(contour_path,
                    ["width_ns"] + [f"T{t}" for t in contours],
                    ([float(w * 1e9)] + [contours[t][j] for t in contours]
                     for j, w in enumerate(w_grid)))
    outputs.append(contour_path)
    _write_manifest(out, "shmoo", cfg, outputs,
                    {"v50_by_temperature": contours})
    print(f"wrote {len(cfg.temperatures)} shmoo grids to {out}")
    return EXIT_OK


def cmd_export_attack(cfg: RunConfig, args, out: Path) -> int:
    named = _read_keys(Path(args.inputs))

    raw_bits = named[0][1]
    raw_feat = _address_features(raw_bits.size)
    raw_path = out / "attack_raw.csv"
    _write_attack_csv(raw_path, raw_feat, raw_bits)

    folded = [postproc.fold_and_segment(bits, cfg.xor_arity,
                                        cfg.response_width).flat()
              for _, bits in named]
    xor_bits = np.concatenate(folded)
    xor_feat = _address_features(xor_bits.size)
    xor_path = out / "attack_xor.csv"
    _write_attack_csv(xor_path, xor_feat, xor_bits)

    meta = {
        "schema_version": SCHEMA_VERSION, "seed": cfg.seed,
        "raw": {"file": raw_path.name, "rows": int(raw_bits.size),
                "features": int(raw_feat.shape[1]),
                "source_keys": [named[0][0]],
                "hw": metrics.hamming_weight(raw_bits),
                "sha256": bitio.file_sha256(raw_path)},
        "xor": {"file": xor_path.name, "rows": int(xor_bits.size),
                "features": int(xor_feat.shape[1]),
                "source_keys": [n for n, _ in named],
                "xor_arity": cfg.xor_arity,
                "hw": metrics.hamming_weight(xor_bits),
                "sha256": bitio.file_sha256(xor_path)},
    }
    meta_path = out / "attack_meta.json"
    bitio.write_json(meta_path, meta)
    _write_manifest(out, "export-attack", cfg,
                    [raw_path, xor_path, meta_path])
    print(f"raw: {raw_bits.size} rows (hw {meta['raw']['hw']:.4f})  "
          f"xor: {xor_bits.size} rows (hw {meta['xor']['hw']:.4f})")
    return EXIT_OK


def cmd_report(cfg: RunConfig, args, out: Path) -> int:
    import json

    in_dir = Path(args.inputs) if args.inputs else out
    sections: list[str] = []

    def load(name: str):
        p = in_dir / name
        return json.loads(p.read_text()) if p.exists() else None

    recon = load("reconfigure_manifest.json")
    if recon:
        hws = recon.get("per_key_hw", [])
        sections.append(
            f"reconfigure: {len(hws)} keys, hw "
            f"{min(hws):.4f}..{max(hws):.4f}, map mu={recon['map_mu']:.4f} "
            f"sigma={recon['map_sigma']:.4f}")
    met = load("metrics.json")
    if met:
        u = met["uniformity"]
        line = (f"metrics: uniformity mu={u['mu']:.4f} sigma={u['sigma']:.4f}"
                f" (ideal {u['ideal_sigma']:.4f})")
        if "inter_reconfig_hd" in met:
            line += (f"; inter-reconfig hd {met['inter_reconfig_hd']['mean']:.4f}"
                     f"; max |r| {met['correlation']['max_off_diagonal']:.4f}")
        sections.append(line)
    nist = load("nist.json")
    if nist:
        worst = min(nist["rows"], key=lambda r: r["proportion"])
        sections.append(
            f"nist: {nist['n_sequences']} x {nist['sequence_length']} bits, "
            f"all passed: {'yes' if nist['all_passed'] else 'NO'} "
            f"(worst proportion {worst['proportion']:.2f} on {worst['name']})")
    opt = load("optimize.json")
    if opt and opt.get("mode") == "dual-pulse":
        iv = next((i for i in opt["beta_intervals"] if i["lo"] > 0),
                  opt["beta_intervals"][0] if opt["beta_intervals"] else None)
        if iv:
            sections.append(
                f"optimize: beta ({iv['lo']:.3f}, {iv['hi']:.3f}] V, "
                f"optimal {opt['optimal_beta']:.3f} V, overlap fraction "
                f"{opt['overlap_fraction']:.3f}")
    elif opt:
        cw = opt.get("common_window")
        sections.append("optimize (single-pulse): common window "
                        + (f"[{cw[0]:.3f}, {cw[1]:.3f}] V" if cw else "none"))
    attack = load("attack_meta.json")
    if attack:
        sections.append(
            f"attack export: raw {attack['raw']['rows']} rows "
            f"(hw {attack['raw']['hw']:.4f}), xor {attack['xor']['rows']} "
            f"rows (hw {attack['xor']['hw']:.4f})")

    if not sections:
        raise ConfigError(f"no report inputs found in {in_dir}")
    text = "\n".join(sections) + "\n"
    report_path = out / "report.txt"
    bitio.atomic_write(report_path, text.encode())
    _write_manifest(out, "report", cfg, [report_path])
    print(text, end="")
    return EXIT_OK


# ---------------------------------------------------------------- parser

def _common_flags() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False,
                                argument_default=argparse.SUPPRESS)
    p.add_argument("--config", type=Path, help="TOML config file")
    p.add_argument("--seed", type=int, help="override [run].seed")
    p.add_argument("--out", type=Path, help="output directory (default: out)")
    p.add_argument("--temperature", type=float,
                   help="override [run].temperature_c")
    p.add_argument("--beta", type=float, help="override [write].beta")
    p.add_argument("--xor-arity", dest="xor_arity", type=int,
                   help="override [postproc].xor_arity")
    return p


_DEFAULTS = {"config": None, "seed": None, "out": Path("out"),
             "temperature": None, "beta": None, "xor_arity": None,
             "print_config": False, "verb": None}


def build_parser() -> argparse.ArgumentParser:
    common = _common_flags()
    parser = argparse.ArgumentParser(
        prog="sotpuf", parents=[common],
        description="Reconfigurable-PUF array simulator and analysis toolkit")
    parser.add_argument("--print-config", action="store_true",
                        dest="print_config", default=argparse.SUPPRESS,
                        help="print the resolved configuration and exit")
    sub = parser.add_subparsers(dest="verb")

    sub.add_parser("reconfigure", parents=[common],
                   help="run dual-pulse reconfigurations, write key bitmaps"
                   ).add_argument("--runs", type=int, default=None,
                                  help="override [run].runs")

    p = sub.add_parser("metrics", parents=[common],
                       help="metric battery over exported key bitmaps")
    p.add_argument("inputs", help="directory containing key_*.pbm")
    p.add_argument("--max-lag", type=int, default=100)

    p = sub.add_parser("nist", parents=[common],
                       help="randomness battery on folded keys or reference RNG")
    p.add_argument("inputs", nargs="?", default=None,
                   help="directory containing key_*.pbm")
    p.add_argument("--reference", action="store_true",
                   help="use the seeded reference generator instead of files")
    p.add_argument("--sequences", type=int, default=10)
    p.add_argument("--sequence-length", dest="sequence_length", type=int,
                   default=100_000)
    p.add_argument("--alpha", type=float, default=rnd.ALPHA_DEFAULT)

    p = sub.add_parser("optimize", parents=[common],
                       help="fit tangent models, solve beta, map feasibility")
    p.add_argument("--single-pulse", action="store_true",
                   help="single-pulse windows + cross-temperature check")
    p.add_argument("--no-compensation", action="store_true",
                   help="zero the on-resistance temperature coefficient")
    p.add_argument("--target", choices=("upper", "center"), default="upper",
                   help="which point of the target window optimal beta hits")
    p.add_argument("--v-min", type=float, default=1.4)
    p.add_argument("--v-max", type=float, default=2.2)
    p.add_argument("--beta-max", type=float, default=0.3)

    p = sub.add_parser("shmoo", parents=[common],
                       help="WSR over voltage x pulse-width grids")
    p.add_argument("--no-compensation", action="store_true")
    p.add_argument("--v-min", type=float, default=1.4)
    p.add_argument("--v-max", type=float, default=2.2)
    p.add_argument("--v-points", type=int, default=41)
    p.add_argument("--w-min", type=float, default=5e-9)
    p.add_argument("--w-max", type=float, default=200e-9)
    p.add_argument("--w-points", type=int, default=13)

    p = sub.add_parser("export-attack", parents=[common],
                       help="CSV datasets (address bits -> response bit)")
    p.add_argument("inputs", help="directory containing key_*.pbm")

    p = sub.add_parser("report", parents=[common],
                       help="one-page text rollup of prior JSON artifacts")
    p.add_argument("inputs", nargs="?", default=None,
                   help="directory with earlier outputs (default: --out)")
    return parser


_VERBS = {
    "reconfigure": cmd_reconfigure,
    "metrics": cmd_metrics,
    "nist": cmd_nist,
    "optimize": cmd_optimize,
    "shmoo": cmd_shmoo,
    "export-attack": cmd_export_attack,
    "report": cmd_report,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    ns = vars(parser.parse_args(argv))
    merged = {**_DEFAULTS, **ns}

    try:
        cfg = load_config(merged["config"])
        overrides = {}
        if merged["seed"] is not None:
            overrides["seed"] = merged["seed"]
        if merged["temperature"] is not None:
            overrides["temperature_c"] = merged["temperature"]
        if merged["beta"] is not None:
            overrides["beta"] = merged["beta"]
        if merged["xor_arity"] is not None:
            overrides["xor_arity"] = merged["xor_arity"]
        if merged.get("runs") is not None:
            overrides["runs"] = merged["runs"]
        if overrides:
            cfg = dataclasses.replace(cfg, **overrides)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    if merged["print_config"]:
        print(render_toml(cfg), end="")
        return EXIT_OK

    verb = merged["verb"]
    if verb is None:
        parser.print_usage(sys.stderr)
        return EXIT_CONFIG

    out = Path(merged["out"])
    out.mkdir(parents=True, exist_ok=True)
    args = argparse.Namespace(**merged)
    try:
        return _VERBS[verb](cfg, args, out)
    except dp.InfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (ConfigError, bitio.FormatError, metrics.MetricError,
            dp.FitError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    raise SystemExit(main())
