"""
Error types shared by the services, the CLI and the HTTP app
"""


class RegionBoundError(Exception):
    """Base error; carries the CLI exit code and HTTP status it maps to"""

    exit_code = 3
    status_code = 422


class UsageError(RegionBoundError):
    """Malformed architecture, partition or other command input"""

    exit_code = 2
    status_code = 400


class DomainError(RegionBoundError, ValueError):
    """An operation was called outside its precondition"""


class PolicyError(RegionBoundError):
    """A conjectured or empirical family was used without the matching opt-in"""

    status_code = 403


class OracleCapError(DomainError):
    """Enumeration cap or breakpoint budget exceeded"""


class TopologyMismatchError(DomainError):
    """Subnetwork family topology does not match its architecture block"""


class PathMismatchError(RegionBoundError):
    """Histogram composition and matrix product disagree"""

    exit_code = 1
    status_code = 500
