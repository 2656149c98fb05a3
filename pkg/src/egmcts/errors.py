"""Exception types shared across the package."""


class EgmctsError(Exception):
    """Base class for all package errors."""


class OracleUnavailable(EgmctsError):
    """The expansion oracle cannot be reached (transport failure, not an empty result)."""

    def __init__(self, message: str, partial_outcome=None):
        super().__init__(message)
        self.partial_outcome = partial_outcome


class OracleRequestError(EgmctsError):
    """The oracle answered a request with an explicit error."""


class LengthMismatch(EgmctsError, ValueError):
    """A fingerprint or vector does not have the required length."""


class DimensionMismatch(EgmctsError, ValueError):
    """A network input does not match the expected dimensions."""


class GenerationExhausted(EgmctsError):
    """The instance generator ran out of attempts before producing enough targets."""


class AlreadyExpanded(EgmctsError):
    """attach_expansion was called on a node that already has children."""


class NoSelectableLeaf(EgmctsError):
    """Every frontier node is in a terminal status; the search is decided."""


class NotSolved(EgmctsError):
    """Route extraction was attempted on a tree whose root is not successful."""


class InconsistentTree(EgmctsError):
    """Tree statuses violate the AND/OR rules; indicates a propagation bug."""


class EmptyBatch(EgmctsError, ValueError):
    """A loss evaluation was requested on an empty batch."""


class EmptyDataset(EgmctsError, ValueError):
    """Training was requested on an empty dataset."""


class EmptyRoute(EgmctsError, ValueError):
    """Matching was requested against an empty route."""


class EmptySet(EgmctsError, ValueError):
    """A similarity statistic was requested over an empty item set."""


class MismatchedTargets(EgmctsError, ValueError):
    """Benchmark rows do not share a common target set."""


class UnknownNode(EgmctsError, KeyError):
    """A graph query referenced a node id that is not present."""


class CyclicGraph(EgmctsError):
    """The reaction graph contains a directed cycle; costs are undefined."""


class ConfigError(EgmctsError):
    """A run configuration file is missing, malformed, or references absent files."""
