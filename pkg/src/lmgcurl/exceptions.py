"""Exception types raised by the package."""


class InvalidMeshError(ValueError):
    """Mesh data violates a structural invariant."""


class RefinementError(RuntimeError):
    """Bisection precondition violated or refinement closure did not terminate."""


class HierarchyError(RuntimeError):
    """Virtual refinement hierarchy is inconsistent with the forest."""


class InvalidElementError(ValueError):
    """Degenerate element passed to a local routine."""


class EvaluationError(ValueError):
    """A user callable produced non-finite values."""


class ConfigurationError(ValueError):
    """Invalid or missing problem configuration."""


class InvalidAssignmentError(ValueError):
    """Vertex-to-element assignment refers to a non-incident element."""
