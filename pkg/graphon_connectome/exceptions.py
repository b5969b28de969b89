"""Exceptions raised by the graphon connectome engine."""

from __future__ import annotations


class GraphonError(Exception):
    """Base exception for all engine errors."""

    pass


class ConfigError(GraphonError):
    """Raised when a configuration value is invalid."""

    pass


class KnotConfigError(ConfigError):
    """Raised when a B-spline knot vector is malformed."""

    pass


class SplineDomainError(GraphonError):
    """Raised when a basis is evaluated outside [0, 1]."""

    pass


class SymmetryError(GraphonError):
    """Raised when a coefficient matrix is not exactly symmetric."""

    pass


class DatasetError(GraphonError):
    """Raised when ingested data violates a dataset invariant."""

    def __init__(
        self,
        message: str,
        *,
        subject: str | None = None,
        edge: tuple[str, str] | None = None,
        line: int | None = None,
    ) -> None:
        context = []
        if line is not None:
            context.append(f"line {line}")
        if subject is not None:
            context.append(f"subject {subject}")
        if edge is not None:
            context.append(f"edge ({edge[0]}, {edge[1]})")
        full = f"{message} [{', '.join(context)}]" if context else message
        super().__init__(full)
        self.subject = subject
        self.edge = edge
        self.line = line


class EvaluationError(GraphonError):
    """Raised when a density or gradient cannot be evaluated."""

    def __init__(self, message: str, *, block: str | None = None) -> None:
        super().__init__(f"{message} (block={block})" if block else message)
        self.block = block


class SamplerError(GraphonError):
    """Raised when a sampler fails; carries the iteration it failed at."""

    def __init__(self, message: str, *, iteration: int | None = None) -> None:
        super().__init__(
            f"{message} (iteration={iteration})" if iteration is not None else message
        )
        self.iteration = iteration


class ConvergenceError(GraphonError):
    """Raised when an iterative solver does not converge."""

    pass


class SummaryError(GraphonError):
    """Raised when a posterior summary cannot be formed."""

    pass


class RegionMismatchError(GraphonError):
    """Raised when held-out data does not share the fitted region set."""

    pass
