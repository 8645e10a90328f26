"""Exceptions raised by resource_action."""


class ResourceActionError(Exception):
    """Base class for all errors raised by this package."""

    pass


class DimensionError(ResourceActionError):
    """A matrix or vector has the wrong shape, or a product is too large for dense storage."""

    pass


class HermiticityError(ResourceActionError):
    """An operator that must be Hermitian is too far from its adjoint."""

    pass


class NumericalError(ResourceActionError):
    """
    A numerical kernel failed (e.g. the eigensolver did not converge).

    Attributes:
        norm (float): Frobenius norm of the offending input, for conditioning context.
    """

    def __init__(self, message, norm=None):
        super().__init__(message)
        self.norm = norm


class FactorizationError(ResourceActionError):
    """A Hilbert-space factorization does not match the operator, or a bipartition is degenerate."""

    pass


class BasisError(ResourceActionError):
    """A dephasing basis is incomplete, not orthogonal, or not made of rank-1 projectors."""

    pass


class SingularMetricError(ResourceActionError):
    """The pulled-back metric is not invertible at a parameter point."""

    pass


class GaugeInvarianceError(ResourceActionError):
    """
    A gauge transformation law was violated.

    Attributes:
        quantity (str): Which object failed ("gamma", "beta" or "g").
        difference (numpy.ndarray): Offending difference between computed and predicted values.
    """

    def __init__(self, message, quantity, difference):
        super().__init__(message)
        self.quantity = quantity
        self.difference = difference


class GridError(ResourceActionError):
    """A path grid is too small, has the wrong parity, or its endpoints are not pinned."""

    pass


class DegenerateSpeedError(ResourceActionError):
    """The K1 Lagrangian is evaluated at a rest point, where it is not differentiable."""

    pass


class ShootingError(ResourceActionError):
    """No shooting branch reached the target endpoint."""

    pass


class ConfigError(ResourceActionError):
    """
    A problem configuration is malformed.

    Attributes:
        field (str): Dotted path of the offending field, e.g. "boundary.lambda_B[1]".
    """

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}" if field else message)
        self.field = field
