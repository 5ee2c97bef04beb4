"""Exception types shared across the package."""


class RibbonError(Exception):
    pass


class ConstructionFailed(RibbonError):
    """No attempt produced a solvable system within the allowed budget."""


class InconsistentDuplicates(ConstructionFailed):
    """Two keys share a master hash code but demand different values."""


class VersionMismatch(RibbonError):
    """Stored structure uses an unknown format or derivation constants."""


class TruncatedFile(RibbonError):
    """Stored structure ends before its sections do."""
