"""Chain driver: sweep schedule, adaptation, checkpoints and multiple chains."""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np
from pydantic import BaseModel

from graphon_connectome.artifacts import atomic_open, write_text
from graphon_connectome.config import get_settings
from graphon_connectome.exceptions import ConfigError, EvaluationError, SamplerError
from graphon_connectome.glm import fit_outcome_models
from graphon_connectome.models import (
    DRAW_KEYS,
    ConnectomeDataset,
    Hyperparams,
    McmcRun,
    ModelState,
    Schedule,
    TraceRecord,
)
from graphon_connectome.models.run import empty_draws
from graphon_connectome.posterior import (
    COUNT,
    HMC_BLOCKS,
    LENGTH,
    PRESENCE,
    HmcBlock,
    log_posterior,
    model_design,
    predictor_arrays,
)

from .dp import cluster_count, dp_scale_update, update_alpha
from .gibbs import (
    albert_chib_draw,
    draw_zero_inflation,
    flip_indicators,
    gibbs_conjugate_normal_block,
    gibbs_random_effects,
    gibbs_sigma2,
)
from .hmc import adapt_step_size, hmc_update
from .telemetry import SamplerMetrics
from .types import ChainState, HmcConfig

logger = logging.getLogger(__name__)


class Checkpoint(BaseModel):
    """Resumable snapshot of one chain; kept draws live in a sibling npz file."""

    chain_state: ChainState
    trace: list[TraceRecord]
    hyper: Hyperparams
    schedule: Schedule


def hmc_blocks(hyper: Hyperparams) -> list[HmcBlock]:
    """HMC blocks in sweep order for the given model switches."""
    return [b for b in HMC_BLOCKS if b != "count_effects" or hyper.random_effects]


def chain_rng(seed: int, chain: int) -> np.random.Generator:
    """Independent stream of one chain, keyed by (seed, chain)."""
    return np.random.default_rng(np.random.SeedSequence([seed, chain]))


def degree_rank_latents(data: ConnectomeDataset) -> np.ndarray:
    """Node latents from the rank of total fibre count (sort-by-degree initialisation)."""
    totals = data.counts.sum(axis=0).astype(float)
    strength = np.bincount(data.rows, weights=totals, minlength=data.J) + np.bincount(
        data.cols, weights=totals, minlength=data.J
    )
    ranks = np.argsort(np.argsort(strength, kind="stable"), kind="stable")
    return (ranks + 0.5) / data.J


def initial_state(
    data: ConnectomeDataset, hyper: Hyperparams, rng: np.random.Generator
) -> ModelState:
    """Starting point: degree-rank xi, uniform delta, ML coefficients at those latents."""
    basis = hyper.basis()
    state = ModelState.zeros(basis, data.n, data.J, data.d, data.E)
    state = state.updated(
        xi=degree_rank_latents(data),
        delta=rng.uniform(0.05, 0.95, data.J),
        alpha=np.full(3, hyper.c1 / hyper.c2),
        inflation=data.observed.astype(np.int8),
    )
    state = flip_indicators(state, hyper, rng)
    if data.n == 0:
        return state
    design = model_design(state, data)
    fits = fit_outcome_models(data.counts, data.log_lengths, design, require_full_rank=False)
    theta, gamma = state.theta.copy(), state.gamma.copy()
    for t, fit in enumerate((fits.length, fits.presence, fits.count)):
        if not fit.failed:
            theta[t], gamma[t] = design.split(fit.coef)
        else:
            logger.info("ML initialisation failed, starting at zero", extra={"outcome": t})
    sigma2 = 1.0
    length = fits.length
    # saturated fits leave a zero residual scale
    if not length.failed and length.n_obs > fits.n_params and length.scale > 0:
        sigma2 = length.scale
    return state.updated(theta=theta, gamma=gamma, sigma2=float(sigma2))


def count_inverse_mass(
    state: ModelState, data: ConnectomeDataset, hyper: Hyperparams
) -> dict[str, np.ndarray]:
    """Inverse diagonal expected information plus prior precision of the count blocks."""
    design = model_design(state, data)
    lam = predictor_arrays(state, data, design)[COUNT]
    rate = state.inflation * np.exp(np.minimum(lam, 50.0))
    masses = {"count_coefficients": 1.0 / (design.diag_information(rate) + 1.0 / hyper.a**2)}
    if hyper.random_effects:
        masses["count_effects"] = 1.0 / (rate.sum(axis=1) + 1.0 / state.tau2[COUNT])
    return masses


class _DrawBuffer:
    def __init__(self, chain: int) -> None:
        self.chain = chain
        self.values: dict[str, list[np.ndarray]] = {k: [] for k in DRAW_KEYS}

    def append(self, state: ModelState, log_post: float) -> None:
        for key in DRAW_KEYS[:-2]:
            value = getattr(state, key)
            self.values[key].append(np.array(value))
        self.values["log_posterior"].append(np.array(log_post))
        self.values["chain"].append(np.array(self.chain))

    def __len__(self) -> int:
        return len(self.values["sigma2"])

    def arrays(self, state: ModelState) -> dict[str, np.ndarray]:
        if not len(self):
            return empty_draws(state.P, state.d, state.J, state.n)
        return {k: np.stack(v) for k, v in self.values.items()}

    def load(self, archive: dict[str, np.ndarray]) -> None:
        self.values = {k: list(np.asarray(archive[k])) for k in DRAW_KEYS}


class ChainRunner:
    """Runs one chain of the hybrid Gibbs / HMC sampler."""

    def __init__(
        self,
        data: ConnectomeDataset,
        hyper: Hyperparams,
        schedule: Schedule,
        cfg: HmcConfig | None = None,
        *,
        chain: int = 0,
        checkpoint_dir: Path | None = None,
        checkpoint_every: int | None = None,
    ) -> None:
        if hyper.K < 4:
            raise ConfigError(f"K must be at least 4, got {hyper.K}")
        self.data = data
        self.hyper = hyper
        self.schedule = schedule
        self.cfg = cfg or HmcConfig.from_settings()
        self.chain = chain
        self.checkpoint_dir = checkpoint_dir
        self.checkpoint_every = checkpoint_every or get_settings().checkpoint_every
        self.blocks = [b for b in hmc_blocks(hyper) if data.n or b != "count_effects"]
        self.metrics = SamplerMetrics()
        self.trace: list[TraceRecord] = []
        self.buffer = _DrawBuffer(chain)

    # Paths

    def _paths(self) -> tuple[Path, Path]:
        assert self.checkpoint_dir is not None
        return (
            self.checkpoint_dir / f"chain{self.chain}.json",
            self.checkpoint_dir / f"chain{self.chain}.npz",
        )

    # Entry points

    def start(self, init: ModelState | None = None) -> McmcRun:
        rng = chain_rng(self.schedule.seed, self.chain)
        state = init if init is not None else initial_state(self.data, self.hyper, rng)
        step_sizes = {b: self.cfg.step_size for b in self.blocks}
        inverse_mass = self._refresh_mass(state)
        for block in self.blocks:
            self.metrics.observe_step_size(block, 0, step_sizes[block])
        cs = ChainState(
            chain=self.chain,
            state=state,
            step_sizes=step_sizes,
            inverse_mass={k: v.tolist() for k, v in inverse_mass.items()},
            rng_state=rng.bit_generator.state,
        )
        return self._loop(cs, rng)

    def resume(self) -> McmcRun:
        json_path, npz_path = self._paths()
        checkpoint = Checkpoint.model_validate_json(json_path.read_text(encoding="utf-8"))
        if checkpoint.schedule != self.schedule or checkpoint.hyper != self.hyper:
            raise ConfigError("checkpoint was written with a different configuration")
        cs = checkpoint.chain_state
        self.trace = list(checkpoint.trace)
        with np.load(npz_path, allow_pickle=False) as archive:
            self.buffer.load({k: archive[k] for k in DRAW_KEYS})
        for block in self.blocks:
            self.metrics.window_proposals[block] = cs.window_proposed.get(block, 0)
            self.metrics.window_acceptances[block] = cs.window_accepted.get(block, 0)
            self.metrics.proposals[block] = cs.sampling_proposed.get(block, 0)
            self.metrics.acceptances[block] = cs.sampling_accepted.get(block, 0)
        logger.info(
            "resuming chain", extra={"chain": self.chain, "iteration": cs.iteration}
        )
        return self._loop(cs, cs.generator())

    # Internals

    def _refresh_mass(self, state: ModelState) -> dict[str, np.ndarray]:
        if not self.cfg.precondition or self.data.n == 0:
            return {}
        return count_inverse_mass(state, self.data, self.hyper)

    def _sweep(
        self,
        state: ModelState,
        rng: np.random.Generator,
        step_sizes: dict[str, float],
        inverse_mass: dict[str, np.ndarray],
    ) -> ModelState:
        data, hyper = self.data, self.hyper
        design = model_design(state, data)
        if data.n:
            preds = predictor_arrays(state, data, design)
            state = state.updated(inflation=draw_zero_inflation(state, data, rng, preds))
            augmented = albert_chib_draw(state.inflation == 1, preds[PRESENCE], rng)
        else:
            augmented = np.zeros((0, data.E))

        state = gibbs_conjugate_normal_block(LENGTH, state, data, hyper, rng, design=design)
        if hyper.random_effects and data.n:
            state = gibbs_random_effects(LENGTH, state, data, rng, design=design)
        state = gibbs_conjugate_normal_block(
            PRESENCE, state, data, hyper, rng, augmented=augmented, design=design
        )
        if hyper.random_effects and data.n:
            state = gibbs_random_effects(
                PRESENCE, state, data, rng, augmented=augmented, design=design
            )

        for block in self.blocks:
            state, result = hmc_update(
                block,
                state,
                data,
                hyper,
                self.cfg,
                rng,
                step_size=step_sizes[block],
                inverse_mass=inverse_mass.get(block),
            )
            self.metrics.observe_proposal(block, result.accepted, result.delta_h)
            if result.nonfinite:
                self.metrics.inc_nonfinite(block)

        state = flip_indicators(state, hyper, rng)
        if hyper.random_effects:
            alpha = state.alpha.copy()
            for t in (LENGTH, PRESENCE, COUNT):
                state = dp_scale_update(t, state, hyper, rng)
                k = cluster_count(state, t)
                self.metrics.observe_clusters(str(t), k)
                if data.n:
                    alpha[t] = update_alpha(float(alpha[t]), k, data.n, hyper, rng)
                else:
                    alpha[t] = rng.gamma(hyper.c1, 1.0 / hyper.c2)
            state = state.updated(alpha=alpha)
        state = state.updated(sigma2=gibbs_sigma2(state, data, hyper, rng))
        if data.n and not np.all(state.inflation[data.observed] == 1):
            raise SamplerError("inflation indicator is zero on a positive count")
        return state

    def _close_window(
        self,
        iteration: int,
        state: ModelState,
        step_sizes: dict[str, float],
        adapt: bool,
    ) -> None:
        burn_in = self.schedule.burn_in
        phase = "burn_in" if iteration <= burn_in else "sampling"
        log_post = log_posterior(state, self.data, self.hyper)
        for block in self.blocks:
            rate = self.metrics.window_acceptance(block)
            self.trace.append(
                TraceRecord(
                    chain=self.chain,
                    iteration=iteration,
                    block=block,
                    acceptance=rate,
                    step_size=step_sizes[block],
                    log_posterior=log_post if np.isfinite(log_post) else None,
                    phase=phase,
                )
            )
            if adapt:
                new_eps = adapt_step_size(
                    rate,
                    step_sizes[block],
                    self.cfg.target_accept_band,
                    shrink=self.cfg.shrink,
                    grow=self.cfg.grow,
                    iteration=iteration,
                    burn_in=burn_in,
                )
                if new_eps != step_sizes[block]:
                    logger.info(
                        "step size adapted",
                        extra={
                            "chain": self.chain,
                            "iteration": iteration,
                            "block": block,
                            "acceptance": rate,
                            "step_size": new_eps,
                        },
                    )
                step_sizes[block] = new_eps
                self.metrics.observe_step_size(block, iteration, new_eps)
            self.metrics.reset_window(block)

    def _loop(self, cs: ChainState, rng: np.random.Generator) -> McmcRun:
        schedule, cfg = self.schedule, self.cfg
        total = schedule.burn_in + schedule.samples
        state = cs.state
        step_sizes = dict(cs.step_sizes)
        inverse_mass = {k: np.asarray(v) for k, v in cs.inverse_mass.items()}
        iteration = cs.iteration

        while iteration < total:
            iteration += 1
            try:
                state = self._sweep(state, rng, step_sizes, inverse_mass)
            except EvaluationError as exc:
                raise SamplerError(str(exc), iteration=iteration) from exc
            logger.debug("sweep done", extra={"chain": self.chain, "iteration": iteration})

            in_burn_in = iteration <= schedule.burn_in
            adapt = in_burn_in and iteration % cfg.adapt_window == 0
            if iteration % cfg.adapt_window == 0 or iteration in (schedule.burn_in, total):
                self._close_window(iteration, state, step_sizes, adapt)
                if adapt:
                    inverse_mass = self._refresh_mass(state)
            if iteration == schedule.burn_in:
                self.metrics.reset_totals()
            if not in_burn_in and (iteration - schedule.burn_in) % schedule.thin == 0:
                self.buffer.append(state, log_posterior(state, self.data, self.hyper))
            if self.checkpoint_dir is not None and iteration % self.checkpoint_every == 0:
                self._write_checkpoint(
                    self._chain_state(iteration, state, step_sizes, inverse_mass, rng)
                )

        final = self._chain_state(iteration, state, step_sizes, inverse_mass, rng)
        if self.checkpoint_dir is not None:
            self._write_checkpoint(final)
        return self._result(final)

    def _chain_state(
        self,
        iteration: int,
        state: ModelState,
        step_sizes: dict[str, float],
        inverse_mass: dict[str, np.ndarray],
        rng: np.random.Generator,
    ) -> ChainState:
        burned = iteration > self.schedule.burn_in
        return ChainState(
            chain=self.chain,
            iteration=iteration,
            state=state,
            step_sizes=dict(step_sizes),
            inverse_mass={k: v.tolist() for k, v in inverse_mass.items()},
            window_accepted={b: self.metrics.window_acceptances.get(b, 0) for b in self.blocks},
            window_proposed={b: self.metrics.window_proposals.get(b, 0) for b in self.blocks},
            sampling_accepted={
                b: self.metrics.acceptances.get(b, 0) if burned else 0 for b in self.blocks
            },
            sampling_proposed={
                b: self.metrics.proposals.get(b, 0) if burned else 0 for b in self.blocks
            },
            rng_state=rng.bit_generator.state,
        )

    def _write_checkpoint(self, cs: ChainState) -> None:
        json_path, npz_path = self._paths()
        checkpoint = Checkpoint(
            chain_state=cs, trace=self.trace, hyper=self.hyper, schedule=self.schedule
        )
        with atomic_open(npz_path, "wb") as handle:
            np.savez_compressed(handle, **self.buffer.arrays(cs.state))
        write_text(json_path, checkpoint.model_dump_json())
        logger.info(
            "checkpoint written", extra={"chain": self.chain, "iteration": cs.iteration}
        )

    def _result(self, cs: ChainState) -> McmcRun:
        for block in self.blocks:
            stats = self.metrics.get_block_stats(block)
            logger.info(
                "block summary", extra={"chain": self.chain, "block": block, **stats}
            )
        acceptance = {
            b: (cs.sampling_accepted[b] / cs.sampling_proposed[b])
            if cs.sampling_proposed.get(b)
            else 0.0
            for b in self.blocks
        }
        return McmcRun(
            hyper=self.hyper,
            schedule=self.schedule,
            region_names=list(self.data.region_names),
            covariate_names=list(self.data.covariate_names),
            subject_ids=list(self.data.subject_ids),
            self_edges=self.data.self_edges,
            age_center=self.data.age_center,
            draws=self.buffer.arrays(cs.state),
            trace=self.trace,
            acceptance=acceptance,
            step_sizes=dict(cs.step_sizes),
            final_state=cs.state,
        )


def run_chain(
    data: ConnectomeDataset,
    hyper: Hyperparams,
    schedule: Schedule,
    cfg: HmcConfig | None = None,
    *,
    chain: int = 0,
    init: ModelState | None = None,
    checkpoint_dir: Path | None = None,
    checkpoint_every: int | None = None,
) -> McmcRun:
    """Run one chain; bit-identical for a fixed (seed, chain)."""
    runner = ChainRunner(
        data,
        hyper,
        schedule,
        cfg,
        chain=chain,
        checkpoint_dir=checkpoint_dir,
        checkpoint_every=checkpoint_every,
    )
    return runner.start(init)


def resume_chain(
    checkpoint_dir: Path,
    data: ConnectomeDataset,
    hyper: Hyperparams,
    schedule: Schedule,
    cfg: HmcConfig | None = None,
    *,
    chain: int = 0,
    checkpoint_every: int | None = None,
) -> McmcRun:
    """Continue a chain from its latest checkpoint."""
    runner = ChainRunner(
        data,
        hyper,
        schedule,
        cfg,
        chain=chain,
        checkpoint_dir=checkpoint_dir,
        checkpoint_every=checkpoint_every,
    )
    return runner.resume()


def _chain_job(
    args: tuple[ConnectomeDataset, Hyperparams, Schedule, HmcConfig | None, int, Path | None, bool]
) -> McmcRun:
    data, hyper, schedule, cfg, chain, checkpoint_dir, resume = args
    if resume and checkpoint_dir is not None and (checkpoint_dir / f"chain{chain}.json").exists():
        return resume_chain(checkpoint_dir, data, hyper, schedule, cfg, chain=chain)
    return run_chain(data, hyper, schedule, cfg, chain=chain, checkpoint_dir=checkpoint_dir)


def run_chains(
    data: ConnectomeDataset,
    hyper: Hyperparams,
    schedule: Schedule,
    cfg: HmcConfig | None = None,
    *,
    threads: int | None = None,
    checkpoint_dir: Path | None = None,
    resume: bool = False,
) -> McmcRun:
    """Run ``schedule.chains`` chains, in worker processes when threads > 1."""
    threads = threads or get_settings().threads
    jobs = [
        (data, hyper, schedule, cfg, c, checkpoint_dir, resume) for c in range(schedule.chains)
    ]
    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(threads, len(jobs))) as pool:
            runs = list(pool.map(_chain_job, jobs))
    else:
        runs = [_chain_job(job) for job in jobs]
    return McmcRun.combine(runs) if len(runs) > 1 else runs[0]
