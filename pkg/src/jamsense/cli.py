"""Command-line front end: scenario configs, experiment presets, CSV output.

Configs are strict JSON: unknown keys are rejected, every field is
validated, and the resolved configuration is echoed alongside the
results (`config_echo*.json`), so feeding an echo back reproduces the
metrics byte for byte.  Presets bundle the reference scenarios (policy
comparisons for the detection ratio, local versus super-decision
vectors for the success rate, and the wider 20-channel band).

Outputs per curve: `metrics*.csv` with columns
t,jdr_mean,jdr_std,tsr_mean,tsr_std; a key=value `summary.txt`;
`grid_awgn.csv` / `grid_rayleigh.csv` detection-probability tables; and
an optional `trace*.csv` with one row per node-step of replication 0.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from . import __version__
from .engine import (
    BatchResult,
    JAMMED,
    SKIPPED,
    SUCCESSFUL,
    SimConfig,
    run,
    run_batch,
)
from .fusion import Belief
from .network import Placement
from .policies import PolicyKind
from .sensing import (
    DetectionParams,
    FadingKind,
    FalseAlarmTable,
    build_awgn_grid,
    build_rayleigh_grid,
)


class ConfigError(ValueError):
    """Raised for malformed or invalid scenario configs."""


@dataclass(frozen=True)
class ExperimentPreset:
    """Named scenario bundle: shared deltas plus one curve per variant."""

    name: str
    description: str
    base: Dict
    curves: Tuple[Tuple[str, Dict], ...]


_POLICY_CURVES = (
    ("pseudo_random", {"policy": "pseudo_random"}),
    ("uniform", {"policy": "uniform"}),
    ("qlearning", {"policy": "qlearning"}),
)

PRESETS: Dict[str, ExperimentPreset] = {
    p.name: p
    for p in (
        ExperimentPreset(
            name="jdr-awgn",
            description="Detection-ratio comparison of the three policies, AWGN",
            base={"fading": "awgn"},
            curves=_POLICY_CURVES,
        ),
        ExperimentPreset(
            name="jdr-rayleigh",
            description="Detection-ratio comparison of the three policies, Rayleigh",
            base={"fading": "rayleigh"},
            curves=_POLICY_CURVES,
        ),
        ExperimentPreset(
            name="jdr-awgn-20ch",
            description="AWGN detection ratio with the band doubled to 20 channels",
            base={"fading": "awgn", "n_fb": 20},
            curves=_POLICY_CURVES,
        ),
        ExperimentPreset(
            name="tsr-local",
            description="Success rate using local decision vectors only, AWGN",
            base={"fading": "awgn", "use_super_decision": False},
            curves=_POLICY_CURVES,
        ),
        ExperimentPreset(
            name="tsr-super",
            description="Success rate using super-decision vectors, AWGN",
            base={"fading": "awgn", "use_super_decision": True},
            curves=_POLICY_CURVES,
        ),
    )
}


# ---------------------------------------------------------------------------
# Config <-> dict


_TOP_LEVEL_KEYS = {
    "seed", "n_wn", "n_fb", "horizon", "replications", "fading", "policy",
    "epsilon_n", "qlearning", "use_super_decision", "detection",
    "false_alarm", "placement", "jammer_bounds", "grid_lookup",
    "shared_draw", "global_cohort", "grid_snr_min_db", "grid_snr_max_db",
    "grid_snr_step_db", "grid_m_max",
}
_QLEARNING_KEYS = {"learning_rate", "discount", "epsilon"}
_DETECTION_KEYS = {"sigma2", "noncentrality", "threshold", "n_samples"}
_FALSE_ALARM_KEYS = {"awgn", "rayleigh"}
_PLACEMENT_KEYS = {
    "nodes", "jammer", "range_km", "d0_km", "path_loss_exponent",
    "jammer_power_db",
}


def _reject_unknown(mapping: Dict, allowed: set, where: str) -> None:
    for key in mapping:
        if key not in allowed:
            raise ConfigError(f"unknown key '{key}' in {where}")


def _fa_table(mapping: Dict, where: str) -> Dict[int, float]:
    out = {}
    for key, value in mapping.items():
        try:
            order = int(key)
        except (TypeError, ValueError):
            raise ConfigError(f"{where}: diversity order {key!r} is not an integer")
        out[order] = float(value)
    return out


def config_from_dict(data: Dict, where: str = "config") -> SimConfig:
    """Build and validate a SimConfig from a plain dict (strict keys)."""
    if not isinstance(data, dict):
        raise ConfigError(f"{where}: expected an object at the top level")
    _reject_unknown(data, _TOP_LEVEL_KEYS, where)
    kwargs: Dict = {}
    simple = {
        "seed": int, "n_wn": int, "n_fb": int, "horizon": int,
        "replications": int, "epsilon_n": float,
        "use_super_decision": bool, "grid_lookup": bool,
        "shared_draw": bool, "global_cohort": bool,
        "grid_snr_min_db": float, "grid_snr_max_db": float,
        "grid_snr_step_db": float, "grid_m_max": int,
    }
    for key, cast in simple.items():
        if key in data:
            try:
                kwargs[key] = cast(data[key])
            except (TypeError, ValueError):
                raise ConfigError(f"{where}.{key}: cannot interpret {data[key]!r}")
    if "fading" in data:
        try:
            kwargs["fading"] = FadingKind(data["fading"])
        except ValueError:
            raise ConfigError(
                f"{where}.fading: {data['fading']!r} is not one of "
                f"{[k.value for k in FadingKind]}"
            )
    if "policy" in data:
        try:
            kwargs["policy"] = PolicyKind(data["policy"])
        except ValueError:
            raise ConfigError(
                f"{where}.policy: {data['policy']!r} is not one of "
                f"{[k.value for k in PolicyKind]}"
            )
    if "qlearning" in data:
        sub = data["qlearning"]
        _reject_unknown(sub, _QLEARNING_KEYS, f"{where}.qlearning")
        if "learning_rate" in sub:
            kwargs["q_learning_rate"] = float(sub["learning_rate"])
        if "discount" in sub:
            kwargs["q_discount"] = float(sub["discount"])
        if "epsilon" in sub:
            kwargs["q_epsilon"] = float(sub["epsilon"])
    if "detection" in data:
        sub = data["detection"]
        _reject_unknown(sub, _DETECTION_KEYS, f"{where}.detection")
        try:
            kwargs["detection"] = DetectionParams(
                sigma2=float(sub.get("sigma2", 1.0)),
                noncentrality=float(sub.get("noncentrality", 2.0)),
                threshold=float(sub.get("threshold", 12.1)),
                n_samples=int(sub.get("n_samples", 10)),
            )
        except ValueError as exc:
            raise ConfigError(f"{where}.detection: {exc}")
    if "false_alarm" in data:
        sub = data["false_alarm"]
        _reject_unknown(sub, _FALSE_ALARM_KEYS, f"{where}.false_alarm")
        defaults = FalseAlarmTable.defaults()
        try:
            kwargs["false_alarm"] = FalseAlarmTable(
                awgn=_fa_table(sub["awgn"], f"{where}.false_alarm.awgn")
                if "awgn" in sub
                else defaults.awgn,
                rayleigh=_fa_table(sub["rayleigh"], f"{where}.false_alarm.rayleigh")
                if "rayleigh" in sub
                else defaults.rayleigh,
            )
        except ValueError as exc:
            raise ConfigError(f"{where}.false_alarm: {exc}")
    if "placement" in data:
        sub = data["placement"]
        _reject_unknown(sub, _PLACEMENT_KEYS, f"{where}.placement")
        if "nodes" not in sub:
            raise ConfigError(f"{where}.placement: 'nodes' is required")
        try:
            kwargs["placement"] = Placement(
                nodes=tuple((float(x), float(y)) for x, y in sub["nodes"]),
                jammer=tuple(sub.get("jammer", (0.0, 0.0))),
                range_km=float(sub.get("range_km", 0.45)),
                d0_km=float(sub.get("d0_km", 0.05)),
                path_loss_exponent=float(sub.get("path_loss_exponent", -2.3)),
                jammer_power_db=float(sub.get("jammer_power_db", 15.0)),
            )
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{where}.placement: {exc}")
    if "jammer_bounds" in data:
        bounds = data["jammer_bounds"]
        if not (isinstance(bounds, (list, tuple)) and len(bounds) == 2):
            raise ConfigError(f"{where}.jammer_bounds: expected [lo, hi]")
        kwargs["jammer_bounds"] = (float(bounds[0]), float(bounds[1]))

    config = SimConfig(**kwargs)
    try:
        config.validate()
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}")
    return config


def config_to_dict(config: SimConfig) -> Dict:
    """Full round-trippable echo of a config, placement resolved."""
    placement = config.resolved_placement()
    return {
        "seed": config.seed,
        "n_wn": config.n_wn,
        "n_fb": config.n_fb,
        "horizon": config.horizon,
        "replications": config.replications,
        "fading": config.fading.value,
        "policy": config.policy.value,
        "epsilon_n": config.epsilon_n,
        "qlearning": {
            "learning_rate": config.q_learning_rate,
            "discount": config.q_discount,
            "epsilon": config.q_epsilon,
        },
        "use_super_decision": config.use_super_decision,
        "detection": {
            "sigma2": config.detection.sigma2,
            "noncentrality": config.detection.noncentrality,
            "threshold": config.detection.threshold,
            "n_samples": config.detection.n_samples,
        },
        "false_alarm": {
            "awgn": {str(m): p for m, p in sorted(config.false_alarm.awgn.items())},
            "rayleigh": {
                str(m): p for m, p in sorted(config.false_alarm.rayleigh.items())
            },
        },
        "placement": {
            "nodes": [list(p) for p in placement.nodes],
            "jammer": list(placement.jammer),
            "range_km": placement.range_km,
            "d0_km": placement.d0_km,
            "path_loss_exponent": placement.path_loss_exponent,
            "jammer_power_db": placement.jammer_power_db,
        },
        "jammer_bounds": list(config.jammer_bounds),
        "grid_lookup": config.grid_lookup,
        "shared_draw": config.shared_draw,
        "global_cohort": config.global_cohort,
        "grid_snr_min_db": config.grid_snr_min_db,
        "grid_snr_max_db": config.grid_snr_max_db,
        "grid_snr_step_db": config.grid_snr_step_db,
        "grid_m_max": config.grid_m_max,
    }


def _no_duplicates(pairs):
    seen = set()
    out = {}
    for key, value in pairs:
        if key in seen:
            raise ConfigError(f"duplicate key '{key}'")
        seen.add(key)
        out[key] = value
    return out


def parse_config(path) -> SimConfig:
    """Load and validate a strict-JSON scenario config."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"{path}: no such config file")
    try:
        with open(path) as fh:
            data = json.load(fh, object_pairs_hook=_no_duplicates)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}")
    return config_from_dict(data, where=str(path))


# ---------------------------------------------------------------------------
# Artifact writers


_FLOAT_FMT = "{:.12g}"


def _write_metrics_csv(path: Path, batch: BatchResult) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "jdr_mean", "jdr_std", "tsr_mean", "tsr_std"])
        for t in range(len(batch.jdr_mean)):
            writer.writerow(
                [
                    t,
                    _FLOAT_FMT.format(batch.jdr_mean[t]),
                    _FLOAT_FMT.format(batch.jdr_std[t]),
                    _FLOAT_FMT.format(batch.tsr_mean[t]),
                    _FLOAT_FMT.format(batch.tsr_std[t]),
                ]
            )


_VERDICT_CHARS = {Belief.UNKNOWN: "U", Belief.VACANT: "V", Belief.OCCUPIED: "O"}
_OUTCOME_NAMES = {SKIPPED: "skipped", SUCCESSFUL: "successful", JAMMED: "jammed"}


def _write_trace_csv(path: Path, config: SimConfig) -> None:
    """Full node-step trace of replication 0 for the given config."""
    record = run(config, replication=0)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["t", "node", "action", "m", "tau", "transmit",
             "outcome", "decision", "super_decision"]
        )
        for t in range(len(record)):
            for i in range(config.n_wn):
                beliefs = "".join(
                    _VERDICT_CHARS[b] for b in record.decisions[t, i]
                )
                supers = (
                    ""
                    if record.supers is None
                    else "".join(_VERDICT_CHARS[b] for b in record.supers[t, i])
                )
                transmit = record.transmits[t, i]
                writer.writerow(
                    [
                        t,
                        i,
                        int(record.actions[t, i]),
                        int(record.cohorts[t, i]),
                        _VERDICT_CHARS[record.observations[t, i]],
                        "" if transmit < 0 else int(transmit),
                        _OUTCOME_NAMES[int(record.outcomes[t, i])],
                        beliefs,
                        supers,
                    ]
                )


def export_grid(config: SimConfig, out_dir) -> List[Path]:
    """Write the AWGN table and the Rayleigh m=1 column as CSV files."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    awgn = build_awgn_grid(
        config.detection,
        config.grid_snr_min_db,
        config.grid_snr_max_db,
        config.grid_snr_step_db,
        config.grid_m_max,
    )
    rayleigh = build_rayleigh_grid(
        config.detection,
        config.grid_snr_min_db,
        config.grid_snr_max_db,
        config.grid_snr_step_db,
    )
    awgn_path = out_dir / "grid_awgn.csv"
    rayleigh_path = out_dir / "grid_rayleigh.csv"
    awgn.to_csv(awgn_path)
    rayleigh.to_csv(rayleigh_path)
    return [awgn_path, rayleigh_path]


def _geometry_lines(prefix: str, config: SimConfig) -> List[str]:
    """Resolved-world echo: SNRs, neighbor edges, replication-0 chains."""
    from . import rng as rngmod
    from .jammers import init_chains
    from .network import build_neighbor_graph, snr_at_node

    placement = config.resolved_placement()
    graph = build_neighbor_graph(placement)
    snr_db = [
        10.0 * math.log10(snr_at_node(placement, i, config.detection.sigma2))
        for i in range(config.n_wn)
    ]
    run_seed = rngmod.derive_seed(config.seed, rngmod.REPLICATION, 0)
    chains = init_chains(config.n_fb, config.jammer_bounds, run_seed)
    return [
        f"{prefix}snr_db=" + ",".join(f"{s:.4f}" for s in snr_db),
        f"{prefix}edges=" + ";".join(f"{i}-{j}" for i, j in graph.edges()),
        f"{prefix}chains_rep0=" + ";".join(
            f"{c.stay_idle:.6f},{c.stay_active:.6f},{int(c.active)}"
            for c in chains
        ),
    ]


def _summary_lines(
    curves: Sequence[Tuple[str, SimConfig, BatchResult]]
) -> List[str]:
    lines = [f"version={__version__}"]
    for label, config, batch in curves:
        prefix = f"{label}." if label else ""
        lines.append(f"{prefix}policy={config.policy.value}")
        lines.append(f"{prefix}fading={config.fading.value}")
        lines.append(f"{prefix}n_wn={config.n_wn}")
        lines.append(f"{prefix}n_fb={config.n_fb}")
        lines.append(f"{prefix}horizon={config.horizon}")
        lines.append(f"{prefix}replications={config.replications}")
        lines.append(f"{prefix}seed={config.seed}")
        lines.append(f"{prefix}use_super_decision={config.use_super_decision}")
        lines.append(f"{prefix}jdr_final_mean={batch.jdr_final_mean:.6f}")
        lines.append(f"{prefix}jdr_final_se={batch.jdr_final_se():.6f}")
        lines.append(f"{prefix}tsr_final_mean={batch.tsr_final_mean:.6f}")
        lines.append(f"{prefix}tsr_final_se={batch.tsr_final_se():.6f}")
        lines.append(f"{prefix}jdr_defined={batch.jamming_occurred}")
        lines.append(f"{prefix}tsr_defined={batch.transmissions_attempted}")
        lines.extend(_geometry_lines(prefix, config))
    return lines


def run_experiment(
    curves: Sequence[Tuple[str, SimConfig]],
    out_dir,
    trace: bool = False,
    workers: int = 1,
) -> List[Path]:
    """Run every (label, config) curve and write all artifacts.

    Configs are validated before any file is created; on failure partway
    through, files written so far are removed.
    """
    for _, config in curves:
        config.validate()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: List[Path] = []
    results: List[Tuple[str, SimConfig, BatchResult]] = []
    try:
        for label, config in curves:
            batch = run_batch(config, workers=workers)
            results.append((label, config, batch))
            suffix = f"_{label}" if label else ""
            metrics_path = out_dir / f"metrics{suffix}.csv"
            _write_metrics_csv(metrics_path, batch)
            written.append(metrics_path)
            echo_path = out_dir / f"config_echo{suffix}.json"
            with open(echo_path, "w") as fh:
                json.dump(config_to_dict(config), fh, indent=2, sort_keys=True)
                fh.write("\n")
            written.append(echo_path)
            if trace:
                trace_path = out_dir / f"trace{suffix}.csv"
                _write_trace_csv(trace_path, config)
                written.append(trace_path)
        summary_path = out_dir / "summary.txt"
        with open(summary_path, "w") as fh:
            fh.write("\n".join(_summary_lines(results)) + "\n")
        written.append(summary_path)
        written.extend(export_grid(curves[0][1], out_dir))
    except BaseException:
        for path in written:
            try:
                path.unlink()
            except OSError:
                pass
        raise
    return written


# ---------------------------------------------------------------------------
# Argument parsing


def _apply_overrides(config: SimConfig, args: argparse.Namespace) -> SimConfig:
    updates: Dict = {}
    if args.seed is not None:
        updates["seed"] = args.seed
    if args.replications is not None:
        updates["replications"] = args.replications
    if args.n_fb is not None:
        updates["n_fb"] = args.n_fb
    if args.horizon is not None:
        updates["horizon"] = args.horizon
    if args.policy is not None:
        updates["policy"] = PolicyKind(args.policy)
    if args.fading is not None:
        updates["fading"] = FadingKind(args.fading)
    if args.super_decision is not None:
        updates["use_super_decision"] = args.super_decision == "on"
    if args.epsilon_n is not None:
        updates["epsilon_n"] = args.epsilon_n
    return dataclasses.replace(config, **updates) if updates else config


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="jamsense",
        description="Seeded simulator of collaborative spectrum sensing "
        "and jammer avoidance.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run a scenario or preset")
    src = run_p.add_mutually_exclusive_group()
    src.add_argument("--config", type=Path, help="strict-JSON scenario config")
    src.add_argument(
        "--preset", choices=sorted(PRESETS), help="named reference scenario"
    )
    run_p.add_argument("--out", type=Path, required=True, help="output directory")
    run_p.add_argument("--seed", type=int, default=None)
    run_p.add_argument("--replications", type=int, default=None)
    run_p.add_argument("--n-fb", type=int, default=None, dest="n_fb")
    run_p.add_argument("--horizon", type=int, default=None)
    run_p.add_argument(
        "--policy", choices=[k.value for k in PolicyKind], default=None
    )
    run_p.add_argument(
        "--fading", choices=[k.value for k in FadingKind], default=None
    )
    run_p.add_argument("--super-decision", choices=["on", "off"], default=None)
    run_p.add_argument("--epsilon-n", type=float, default=None, dest="epsilon_n")
    run_p.add_argument("--trace", action="store_true", help="write full node-step traces")
    run_p.add_argument("--workers", type=int, default=1)

    grid_p = sub.add_parser("export-grid", help="write the probability tables only")
    grid_p.add_argument("--config", type=Path, default=None)
    grid_p.add_argument("--out", type=Path, required=True)

    sub.add_parser("presets", help="list available presets")
    return parser


def _curves_for(args: argparse.Namespace) -> List[Tuple[str, SimConfig]]:
    if args.preset:
        preset = PRESETS[args.preset]
        curves = []
        for label, deltas in preset.curves:
            merged = dict(preset.base)
            merged.update(deltas)
            config = config_from_dict(merged, where=f"preset {preset.name}")
            curves.append((label, _apply_overrides(config, args)))
        return curves
    config = parse_config(args.config) if args.config else SimConfig()
    return [("", _apply_overrides(config, args))]


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "presets":
            for preset in PRESETS.values():
                print(f"{preset.name}: {preset.description}")
            return 0
        if args.command == "export-grid":
            config = parse_config(args.config) if args.config else SimConfig()
            for path in export_grid(config, args.out):
                print(f"wrote {path}")
            return 0
        curves = _curves_for(args)
        for _, config in curves:
            config.validate()
        written = run_experiment(
            curves, args.out, trace=args.trace, workers=args.workers
        )
        for path in written:
            print(f"wrote {path}")
        summary = Path(args.out) / "summary.txt"
        print(summary.read_text(), end="")
        return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
