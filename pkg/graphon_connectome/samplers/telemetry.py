"""In-process sampler metrics registry."""

from collections import defaultdict


class SamplerMetrics:
    """
    Simple in-process metrics client for tracking MCMC kernels.

    Holds per-block proposal counts, acceptances, energy errors and step-size
    history for one chain. Window counters feed step-size adaptation and the
    trace; totals feed the run summary.
    """

    def __init__(self) -> None:
        # Proposals and acceptances: block -> count
        self.proposals: dict[str, int] = defaultdict(int)
        self.acceptances: dict[str, int] = defaultdict(int)

        # Current adaptation window: block -> count
        self.window_proposals: dict[str, int] = defaultdict(int)
        self.window_acceptances: dict[str, int] = defaultdict(int)

        # Non-finite Hamiltonian rejections: block -> count
        self.nonfinite: dict[str, int] = defaultdict(int)

        # Absolute energy errors of finite proposals: block -> list
        self.energy_errors: dict[str, list[float]] = defaultdict(list)

        # Step sizes: block -> list of (iteration, step size)
        self.step_history: dict[str, list[tuple[int, float]]] = defaultdict(list)

        # DP cluster counts: outcome -> list of counts after each sweep
        self.cluster_counts: dict[str, list[int]] = defaultdict(list)

    def observe_proposal(self, block: str, accepted: bool, delta_h: float) -> None:
        """Record one HMC proposal."""
        self.proposals[block] += 1
        self.window_proposals[block] += 1
        if accepted:
            self.acceptances[block] += 1
            self.window_acceptances[block] += 1
        if delta_h == delta_h:
            self.energy_errors[block].append(abs(delta_h))

    def inc_nonfinite(self, block: str) -> None:
        """Increment the non-finite Hamiltonian counter for a block."""
        self.nonfinite[block] += 1

    def observe_step_size(self, block: str, iteration: int, step_size: float) -> None:
        """Record the step size in force from an iteration on."""
        self.step_history[block].append((iteration, step_size))

    def observe_clusters(self, outcome: str, count: int) -> None:
        """Record the number of occupied DP clusters after a sweep."""
        self.cluster_counts[outcome].append(count)

    def window_acceptance(self, block: str) -> float:
        """Acceptance rate over the current window; 0 when nothing was proposed."""
        proposed = self.window_proposals.get(block, 0)
        if proposed == 0:
            return 0.0
        return self.window_acceptances.get(block, 0) / proposed

    def reset_window(self, block: str) -> None:
        """Start a new adaptation window for a block."""
        self.window_proposals[block] = 0
        self.window_acceptances[block] = 0

    def get_block_stats(self, block: str) -> dict[str, float]:
        """Get proposal statistics for a block."""
        proposed = self.proposals.get(block, 0)
        errors = self.energy_errors.get(block, [])
        return {
            "proposals": proposed,
            "acceptances": self.acceptances.get(block, 0),
            "accept_rate": self.acceptances.get(block, 0) / proposed if proposed else 0.0,
            "nonfinite": self.nonfinite.get(block, 0),
            "mean_abs_delta_h": sum(errors) / len(errors) if errors else 0.0,
        }

    def reset_totals(self) -> None:
        """Zero proposal totals, keeping step-size history (end of burn-in)."""
        self.proposals.clear()
        self.acceptances.clear()
        self.nonfinite.clear()
        self.energy_errors.clear()
