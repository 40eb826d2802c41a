"""Command-line experiment runner.

Every experiment, presets included, is an :class:`ExperimentConfig` executed by
:func:`execute`.  Configs are JSON documents::

    {
      "prior":    {"name": "counter_inductive"},
      "povm":     {"name": "z_basis", "schedule": "fixed"},
      "outcomes": {"mode": "constant", "symbol": "0"},
      "iterations": 20,
      "target": "ket1",
      "resampling": {"enabled": false},
      "output": {"csv": "cip.csv", "json": "cip.json"}
    }

Outcome modes are ``constant`` (``symbol``), ``explicit`` (``labels``) and
``sampled`` (``true_state``, ``seed``).  States are named (``ket0``, ``ket1``,
``plus``, ``mixed``, ``mixed2``, ``max_entangled``) or given as
``{"re": [[...]], "im": [[...]]}``.  With a product POVM one iteration
measures one pair; a single-system ensemble then absorbs both outcomes of
the pair.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .infer import InferenceTrajectory, RunOptions, run_inference
from .measure import Povm, ZeroEvidence, born_probabilities, standard_povm
from .priors import (
    counter_inductive_prior,
    haar_pure_ensemble,
    hs_mixed_ensemble,
    plus_product_prior,
    two_qubit_pair_ensemble,
)
from .qalg import DensityOperator, ket0, ket1, max_entangled, maximally_mixed, plus, trace_distance

log = logging.getLogger(__name__)

DEFAULT_SEED = 42
CHECKPOINT_EVERY = 100
CSV_HEADER = ["iter", "outcome", "pred_prob", "td_target", "ess",
              "marg_00_re", "marg_01_re", "marg_01_im", "marg_11_re"]

EXIT_OK, EXIT_CONFIG, EXIT_ZERO_EVIDENCE, EXIT_IO = 0, 1, 2, 3

PRIORS = {
    "haar_pure": lambda n, s: haar_pure_ensemble(n, s),
    "plus_product": lambda n, s: plus_product_prior(),
    "counter_inductive": lambda n, s: counter_inductive_prior(),
    "hs_mixed": lambda n, s: hs_mixed_ensemble(n, s),
    "hs_pairwise": lambda n, s: two_qubit_pair_ensemble(n, s),
}
_SAMPLED_PRIORS = {"haar_pure", "hs_mixed", "hs_pairwise"}

NAMED_STATES = {
    "ket0": ket0,
    "ket1": ket1,
    "plus": plus,
    "mixed": maximally_mixed,
    "mixed2": lambda: maximally_mixed(2),
    "max_entangled": max_entangled,
}


class ConfigError(ValueError):
    def __init__(self, errors: list[str]):
        super().__init__("; ".join(errors))
        self.errors = errors


@dataclass(frozen=True)
class OutcomeStream:
    labels: tuple[str, ...]
    provenance: str


@dataclass
class ExperimentConfig:
    prior: dict
    povm: dict
    outcomes: dict
    iterations: int
    target: object
    output: dict
    resampling: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict, repr=False)

    def build_prior(self):
        p = self.prior
        return PRIORS[p["name"]](p.get("particles", 1), p.get("seed", DEFAULT_SEED))

    def build_povm(self) -> Povm:
        return standard_povm(self.povm["name"])

    def target_state(self) -> np.ndarray:
        return parse_state(self.target)


def parse_state(spec) -> np.ndarray:
    if isinstance(spec, str):
        if spec not in NAMED_STATES:
            raise ValueError(f"unknown state name {spec!r}")
        return NAMED_STATES[spec]().matrix
    if isinstance(spec, dict) and "re" in spec:
        m = np.asarray(spec["re"], float) + 1j * np.asarray(spec.get("im", 0.0), float)
        return DensityOperator(m).matrix
    raise ValueError(f"cannot interpret state {spec!r}")


def _is_seed(x) -> bool:
    return isinstance(x, int) and not isinstance(x, bool) and 0 <= x < 2**64


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate a JSON config, collecting every error found.

    Raises
    ------
    ConfigError
        Listing all problems, each prefixed by the offending field.
    """
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([f"syntax: {exc}"]) from None
    if not isinstance(raw, dict):
        raise ConfigError(["config: top level must be an object"])
    errors: list[str] = []
    for key in ("prior", "povm", "outcomes", "iterations", "target", "output"):
        if key not in raw:
            errors.append(f"{key}: missing")

    prior = raw.get("prior", {})
    if "prior" in raw:
        if not isinstance(prior, dict) or prior.get("name") not in PRIORS:
            name = prior.get("name") if isinstance(prior, dict) else prior
            errors.append(f"prior.name: unknown prior {name!r}; choose from {sorted(PRIORS)}")
        elif prior["name"] in _SAMPLED_PRIORS:
            n = prior.get("particles")
            if not isinstance(n, int) or isinstance(n, bool) or n < 1:
                errors.append("prior.particles: positive integer required")
            if not _is_seed(prior.get("seed")):
                errors.append("prior.seed: unsigned 64-bit integer required")

    povm_obj = None
    povm = raw.get("povm", {})
    if "povm" in raw:
        try:
            povm_obj = standard_povm(povm["name"])
        except (KeyError, TypeError, ValueError):
            errors.append(f"povm.name: unknown POVM {povm.get('name') if isinstance(povm, dict) else povm!r}")
        if isinstance(povm, dict) and povm.get("schedule", "fixed") != "fixed":
            errors.append("povm.schedule: only 'fixed' is supported")

    iters = raw.get("iterations")
    if "iterations" in raw and (not isinstance(iters, int) or isinstance(iters, bool) or iters < 1):
        errors.append(f"iterations: must be an integer >= 1, got {iters!r}")

    outcomes = raw.get("outcomes", {})
    if "outcomes" in raw:
        mode = outcomes.get("mode") if isinstance(outcomes, dict) else None
        if mode == "constant":
            if "symbol" not in outcomes:
                errors.append("outcomes.symbol: required for constant mode")
            elif povm_obj is not None and str(outcomes["symbol"]) not in povm_obj.labels:
                errors.append(f"outcomes.symbol: {outcomes['symbol']!r} is not an outcome of the POVM")
        elif mode == "explicit":
            labels = outcomes.get("labels")
            if not isinstance(labels, list):
                errors.append("outcomes.labels: list required for explicit mode")
            else:
                if povm_obj is not None:
                    bad = [x for x in labels if str(x) not in povm_obj.labels]
                    if bad:
                        errors.append(f"outcomes.labels: invalid labels {bad[:5]!r}")
                if isinstance(iters, int) and len(labels) < iters:
                    errors.append("outcomes.labels: fewer labels than iterations")
        elif mode == "sampled":
            if not _is_seed(outcomes.get("seed")):
                errors.append("outcomes.seed: unsigned 64-bit integer required")
            try:
                true = parse_state(outcomes.get("true_state"))
                if povm_obj is not None and true.shape[0] != povm_obj.dim:
                    errors.append("outcomes.true_state: dimension does not match the POVM")
            except ValueError as exc:
                errors.append(f"outcomes.true_state: {exc}")
        else:
            errors.append(f"outcomes.mode: must be constant, explicit or sampled, got {mode!r}")

    if "target" in raw:
        try:
            parse_state(raw["target"])
        except ValueError as exc:
            errors.append(f"target: {exc}")

    output = raw.get("output", {})
    if "output" in raw and (not isinstance(output, dict) or not {"csv", "json"} <= set(output)):
        errors.append("output: needs 'csv' and 'json' paths")

    res = raw.get("resampling", {}) or {}
    if not isinstance(res, dict):
        errors.append("resampling: must be an object")
        res = {}
    if "seed" in res and not _is_seed(res["seed"]):
        errors.append("resampling.seed: unsigned 64-bit integer required")
    if "shrink" in res and not (isinstance(res["shrink"], (int, float)) and 0 < res["shrink"] <= 1):
        errors.append("resampling.shrink: must lie in (0, 1]")
    if res.get("move", "liu_west") not in ("liu_west", "pcn"):
        errors.append("resampling.move: must be 'liu_west' or 'pcn'")

    if errors:
        raise ConfigError(errors)
    return ExperimentConfig(prior, povm, outcomes, iters, raw["target"], output, res, raw)


def sample_outcomes(true_state, povm: Povm, count: int, seed: int) -> OutcomeStream:
    """Draw i.i.d. outcome labels from the Born distribution of ``true_state``."""
    p = born_probabilities(true_state, povm)
    rng = np.random.default_rng(seed)
    idx = rng.choice(povm.num_outcomes, size=count, p=p / p.sum()) if count else []
    return OutcomeStream(tuple(povm.labels[i] for i in idx), f"sampled(seed={seed})")


def make_stream(cfg: ExperimentConfig, povm: Povm) -> OutcomeStream:
    o, n = cfg.outcomes, cfg.iterations
    if o["mode"] == "constant":
        return OutcomeStream((str(o["symbol"]),) * n, "constant")
    if o["mode"] == "explicit":
        return OutcomeStream(tuple(str(x) for x in o["labels"][:n]), "explicit")
    return sample_outcomes(parse_state(o["true_state"]), povm, n, o["seed"])


def run_config(cfg: ExperimentConfig) -> InferenceTrajectory:
    prior = cfg.build_prior()
    povm = cfg.build_povm()
    stream = make_stream(cfg, povm)
    res = cfg.resampling
    opts = RunOptions(
        target=cfg.target_state(),
        resample=bool(res.get("enabled", False)),
        ess_threshold=float(res.get("threshold", 0.5)),
        shrink=float(res.get("shrink", 0.98)),
        resample_seed=int(res.get("seed", DEFAULT_SEED)),
        move=res.get("move", "liu_west"),
        mcmc_steps=int(res.get("mcmc_steps", 5)),
        checkpoint_every=CHECKPOINT_EVERY,
    )
    return run_inference(prior, [povm.index(x) for x in stream.labels], povm, opts)


def _num(x) -> str:
    return repr(float(x))


def _cmat(m) -> dict:
    m = np.asarray(m)
    return {"re": m.real.tolist(), "im": m.imag.tolist()}


def trajectory_csv(traj: InferenceTrajectory) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in traj.records:
        m = r.marginal_1
        w.writerow([r.iteration, r.outcome, _num(r.pred_prob), _num(r.td_target),
                    "" if r.ess is None else _num(r.ess),
                    _num(m[0, 0].real), _num(m[0, 1].real), _num(m[0, 1].imag), _num(m[1, 1].real)])
    return buf.getvalue()


def trajectory_summary(traj: InferenceTrajectory, config_echo) -> dict:
    final = {"iterations": len(traj.records), "marginal_1": None, "marginal_2": None, "td_target": None}
    if traj.final_prior is not None:
        final["marginal_1"] = _cmat(traj.final_prior.state_at(1).matrix)
        final["marginal_2"] = _cmat(traj.final_prior.state_at(2).matrix)
    if traj.records:
        final["td_target"] = traj.records[-1].td_target
    checkpoints = [
        {"iter": r.iteration, "td_target": r.td_target, "marginal_2": _cmat(r.marginal_2)}
        for r in traj.checkpoints
    ]
    return {"config_echo": config_echo, "final": final, "checkpoints": checkpoints}


def emit_results(traj: InferenceTrajectory, csv_path, json_path, config_echo=None) -> None:
    """Write the CSV trajectory and JSON summary (UTF-8, LF line endings)."""
    summary = trajectory_summary(traj, config_echo)
    for path, text in ((csv_path, trajectory_csv(traj)),
                       (json_path, json.dumps(summary, indent=2, sort_keys=True) + "\n")):
        path = Path(path)
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            with open(path, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
        except OSError as exc:
            raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc


def execute(cfg: ExperimentConfig, out_dir=".") -> InferenceTrajectory:
    traj = run_config(cfg)
    out = Path(out_dir)
    emit_results(traj, out / cfg.output["csv"], out / cfg.output["json"], cfg.raw)
    return traj


# ------------------------------------------------------------------ presets


def three_priors_configs(m: int, particles: int = 100_000, seed: int = DEFAULT_SEED) -> list[ExperimentConfig]:
    """All-zero z-basis data against the Haar, plus-product and counter-inductive priors."""
    specs = [
        ("haar_pure", {"name": "haar_pure", "particles": particles, "seed": seed}, "ket0"),
        ("plus_product", {"name": "plus_product"}, "plus"),
        ("counter_inductive", {"name": "counter_inductive"}, "ket1"),
    ]
    out = []
    for tag, prior, target in specs:
        raw = {
            "prior": prior,
            "povm": {"name": "z_basis", "schedule": "fixed"},
            "outcomes": {"mode": "constant", "symbol": "0"},
            "iterations": m,
            "target": target,
            "output": {"csv": f"{tag}.csv", "json": f"{tag}.json"},
        }
        out.append(parse_config(json.dumps(raw)))
    return out


ENTANGLEMENT_POVM = "product(sic_qubit,sic_qubit)"


def entanglement_configs(pairs: int, particles: int, seed: int = DEFAULT_SEED) -> list[ExperimentConfig]:
    """Pairwise (entanglement-permitting) and single-system exchangeable priors on the same data."""
    common = {
        "povm": {"name": ENTANGLEMENT_POVM, "schedule": "fixed"},
        "outcomes": {"mode": "sampled", "true_state": "max_entangled", "seed": seed},
        "iterations": pairs,
    }
    pairwise = dict(common,
                    prior={"name": "hs_pairwise", "particles": particles, "seed": seed},
                    target="max_entangled",
                    resampling={"enabled": True, "threshold": 0.5, "move": "pcn", "seed": seed},
                    output={"csv": "pairwise.csv", "json": "pairwise.json"})
    single = dict(common,
                  prior={"name": "hs_mixed", "particles": particles, "seed": seed},
                  target="mixed",
                  output={"csv": "single.csv", "json": "single.json"})
    return [parse_config(json.dumps(pairwise)), parse_config(json.dumps(single))]


def entanglement_report(pairwise: InferenceTrajectory, single: InferenceTrajectory) -> dict:
    me = max_entangled().matrix
    mm = maximally_mixed().matrix
    mm2 = maximally_mixed(2).matrix
    return {
        "pairwise_td2_to_max_entangled": [
            {"iter": r.iteration, "td": trace_distance(r.marginal_2, me)} for r in pairwise.checkpoints
        ],
        "single_td1_to_mixed": [
            {"iter": r.iteration, "td": trace_distance(r.marginal_1, mm)} for r in single.checkpoints
        ],
        "single_td2_to_mixed2": [
            {"iter": r.iteration, "td": trace_distance(r.marginal_2, mm2)} for r in single.checkpoints
        ],
    }


def preset_three_priors(m: int, particles: int = 100_000, seed: int = DEFAULT_SEED, out_dir="."):
    trajs = {}
    for cfg in three_priors_configs(m, particles, seed):
        trajs[cfg.prior["name"]] = execute(cfg, out_dir)
    return trajs


def preset_entanglement(pairs: int, particles: int, seed: int = DEFAULT_SEED, out_dir="."):
    cfg_e, cfg_d = entanglement_configs(pairs, particles, seed)
    te, td = execute(cfg_e, out_dir), execute(cfg_d, out_dir)
    report = entanglement_report(te, td)
    path = Path(out_dir) / "entanglement_report.json"
    try:
        path.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc
    return te, td, report


# ---------------------------------------------------------------------- CLI


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="qbayes",
        description="Sequential quantum Bayesian inference experiments.",
        epilog=(f"Two-system marginals are checkpointed every {CHECKPOINT_EVERY} iterations; "
                f"default seeds are {DEFAULT_SEED}. Exit codes: 0 ok, 1 config error, "
                "2 prior excluded the data (zero evidence), 3 I/O error."),
    )
    sub = p.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run an experiment from a JSON config")
    run.add_argument("--config", required=True)
    run.add_argument("--out-dir", default=".")
    val = sub.add_parser("validate", help="check a config and list every error")
    val.add_argument("--config", required=True)
    pre = sub.add_parser("preset", help="canned experiments")
    psub = pre.add_subparsers(dest="preset", required=True)
    tp = psub.add_parser("three-priors", help="all-zero data against three priors",
                         epilog=f"default seed {DEFAULT_SEED}")
    tp.add_argument("--m", type=int, required=True)
    tp.add_argument("--particles", type=int, default=100_000)
    tp.add_argument("--seed", type=int, default=DEFAULT_SEED)
    tp.add_argument("--out-dir", default="results/three-priors")
    en = psub.add_parser("entanglement", help="maximally entangled data, pairwise vs single priors",
                         epilog=f"checkpoints every {CHECKPOINT_EVERY} pairs")
    en.add_argument("--pairs", type=int, required=True)
    en.add_argument("--particles", type=int, required=True)
    en.add_argument("--seed", type=int, required=True)
    en.add_argument("--out-dir", default="results/entanglement")
    return p


def _read(path: str) -> str:
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.command in ("run", "validate"):
            try:
                text = _read(args.config)
            except OSError as exc:
                print(f"error: cannot read {args.config}: {exc.strerror}", file=sys.stderr)
                return EXIT_IO
            cfg = parse_config(text)
            if args.command == "validate":
                print("config ok")
                return EXIT_OK
            execute(cfg, args.out_dir)
        elif args.preset == "three-priors":
            if args.m < 1 or args.particles < 1:
                raise ConfigError(["--m and --particles must be >= 1"])
            preset_three_priors(args.m, args.particles, args.seed, args.out_dir)
        else:
            if args.pairs < 1 or args.particles < 1:
                raise ConfigError(["--pairs and --particles must be >= 1"])
            preset_entanglement(args.pairs, args.particles, args.seed, args.out_dir)
    except ConfigError as exc:
        for e in exc.errors:
            print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except ZeroEvidence as exc:
        print(f"zero evidence at iteration {exc.iteration}: {exc}", file=sys.stderr)
        return EXIT_ZERO_EVIDENCE
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
