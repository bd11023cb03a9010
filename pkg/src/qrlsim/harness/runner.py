"""Turn a :class:`RunConfig` into a :class:`Report`."""
from __future__ import annotations

import math

import numpy as np

from .. import __version__
from ..errors import InvariantViolation
from ..noise import budget, trajectory_seed
from ..protocol import EnvironmentSchedule, build_protocol, default_states, run_session
from ..qstate import Statevector, from_amplitudes, random_state
from .branches import BranchTree, enumerate_branches
from .config import RunConfig
from .report import Report

NORM_CHECK = 1e-9


def state_rng(seed: int) -> np.random.Generator:
    """Generator for randomly drawn initial states (independent of sampling and noise streams)."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(2,)))


def initial_states(cfg: RunConfig, seed: int) -> tuple[Statevector, list[Statevector]]:
    """Agent and per-cycle environments for one shot."""
    variant, k = cfg.variant, cfg.variant.width
    rng = state_rng(seed)
    fixed = default_states(variant)

    if cfg.agent == "random" or (cfg.agent == "default" and fixed is None):
        agent = random_state(k, rng)
    elif cfg.agent == "default":
        agent = fixed[0]
    else:
        agent = from_amplitudes(cfg.agent)

    env = cfg.environment
    if env == "random" or (env == "default" and fixed is None):
        envs = [random_state(k, rng) for _ in range(cfg.cycles)]
    elif env == "default":
        envs = [fixed[1]] * cfg.cycles
    else:
        parsed = [from_amplitudes(a) for a in env]
        envs = parsed * cfg.cycles if len(parsed) == 1 else parsed
    return agent, envs


def _metadata(cfg: RunConfig, **summary) -> dict:
    return {
        "tool": "qrlsim",
        "tool_version": __version__,
        "master_seed": cfg.seed,
        "config": cfg.echo(),
        "summary": summary,
    }


def _check_state(state: Statevector, where: str) -> None:
    if abs(state.norm() - 1) > NORM_CHECK:
        raise InvariantViolation(f"{where}: state norm {state.norm():.15g} drifted from 1")


def run_sessions(cfg: RunConfig) -> Report:
    """``shots`` independent sessions of ``cycles`` cycles; one row per cycle."""
    noisy = cfg.mode == "noisy"
    rows = []
    rewards, fids = [], []
    for shot in range(cfg.shots):
        sub = trajectory_seed(cfg.seed, shot)
        agent, envs = initial_states(cfg, sub)
        session = run_session(
            cfg.variant,
            EnvironmentSchedule(envs),
            agent,
            sub,
            noise=cfg.noise if noisy else None,
            hardware=cfg.hardware,
        )
        for i, cyc in enumerate(session.cycles):
            _check_state(cyc.final_state, f"shot {shot} cycle {i}")
            rows.append(
                {
                    "cycle_index": i,
                    "variant": cfg.variant.value,
                    "reward_kind": cyc.reward_kind,
                    "reward_value": float(cyc.reward),
                    "branch_bits": cyc.record.branch_bits(),
                    "branch_probability": float(cyc.branch_probability),
                    "noisy": int(noisy),
                    "seed": sub,
                }
            )
            rewards.append(cyc.reward)
        if noisy:
            fids.append(session.session_fidelity)
    summary = {"mean_reward": math.fsum(rewards) / len(rewards)}
    if noisy:
        summary["mean_session_fidelity"] = math.fsum(fids) / len(fids)
        summary["budget_fidelity_after_cycles"] = budget(
            cfg.hardware, build_protocol(cfg.variant), cfg.noise
        ).fidelity_after(cfg.cycles)
    return Report(rows, _metadata(cfg, **summary))


def enumerate_config(cfg: RunConfig) -> tuple[BranchTree, Report]:
    """Branch tree of the first cycle for the configured initial states."""
    agent, envs = initial_states(cfg, cfg.seed)
    tree = enumerate_branches(build_protocol(cfg.variant), agent, envs[0])
    if abs(tree.total_probability - 1) > 1e-12:
        raise InvariantViolation(f"branch probabilities sum to {tree.total_probability!r}")
    rows = []
    for leaf in tree.leaves:
        if not leaf.reachable and not cfg.include_zero_branches:
            continue
        rows.append(
            {
                "cycle_index": 0,
                "variant": cfg.variant.value,
                "reward_kind": cfg.variant.reward_kind,
                "reward_value": None if leaf.reward is None else float(leaf.reward),
                "branch_bits": leaf.branch_bits(),
                "branch_probability": float(leaf.probability),
                "noisy": 0,
                "seed": cfg.seed,
            }
        )
    return tree, Report(rows, _metadata(cfg, expected_reward=tree.expected_reward()))


def execute(cfg: RunConfig) -> Report:
    if cfg.mode == "enumerate":
        return enumerate_config(cfg)[1]
    return run_sessions(cfg)


def histogram(report: Report, cycle_index: int = 0) -> dict[str, int]:
    """Counts of ``branch_bits`` among rows of one cycle index."""
    counts: dict[str, int] = {}
    for row in report.rows:
        if row["cycle_index"] == cycle_index:
            counts[row["branch_bits"]] = counts.get(row["branch_bits"], 0) + 1
    return counts

