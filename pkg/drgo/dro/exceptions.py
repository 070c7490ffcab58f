from ..exceptions import DrgoError, UsageError


class DroError(DrgoError):
    """Base error for nominal distributions, clustering, transport and group weights"""


class SinkhornConvergenceError(DroError):
    """Marginal violation still above tolerance after the iteration budget"""

    def __init__(self, residual: float, iterations: int):
        super().__init__(f"Sinkhorn did not converge after {iterations} iterations (marginal residual {residual:.3e})")
        self.residual = residual
        self.iterations = iterations


class InfeasibleRadiusError(DroError):
    """Even uniform group weights lie outside the transport ball"""

    def __init__(self, distance: float, radius: float):
        super().__init__(f"uniform weights are at distance {distance:.6g}, above radius {radius:.6g}")
        self.distance = distance
        self.radius = radius


class ClusteringError(DroError, UsageError):
    """More clusters requested than points, or fewer than one"""


class WeightDomainError(DroError, ValueError):
    """Weights or distributions outside the simplex, or a zero weight where a logarithm is needed"""


class NominalSelectionError(DroError, UsageError):
    """Centrality percentage out of range or nothing to select"""
