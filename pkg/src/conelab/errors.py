"""Exception types raised by conelab."""


class ConelabError(Exception):
    """Base class for all conelab errors."""


class DomainError(ConelabError, ValueError):
    """A jet primitive was evaluated outside its domain (sqrt of a non-positive value, ...)."""


class JetOrderError(ConelabError, ValueError):
    """A computation asked for more derivative orders than a jet carries."""


class ChartError(ConelabError, ValueError):
    """A point or finite-difference stencil left the declared chart box."""


class LeftChart(ChartError):
    """An integrated curve exited the chart domain."""


class ChartSingularity(ChartError):
    """The chart parametrization is singular at the requested point."""


class DegenerateMetric(ConelabError, ArithmeticError):
    """|det g| fell below the degeneracy threshold."""


class DegenerateSlice(DegenerateMetric):
    """An assembled family slice metric g_s is singular."""


class BumpTooLarge(DegenerateMetric):
    """The compactly supported perturbation made the metric degenerate."""


class NearSingularLevel(ConelabError, ArithmeticError):
    """|g(2rX, 2rX)| dropped below the regular-locus threshold along a flow line."""


class BranchUndefined(ConelabError, ValueError):
    """The closed-form reparametrization has no branch for the given alpha_0."""


class InadmissibleShift(ConelabError, ValueError):
    """aT + b*g_hat is degenerate or has non-positive T(d_r, d_r) at a sample."""


class ConfigError(ConelabError, ValueError):
    """Invalid run configuration."""
