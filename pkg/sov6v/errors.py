# sov6v/errors.py
"""Exception hierarchy shared by the library, the suites and the CLI."""


class Sov6vError(Exception):
    """Base class. ``value`` holds the measured quantity that tripped the check."""

    def __init__(self, message: str, value: float | complex | None = None):
        super().__init__(message)
        self.value = value


# -------- elliptic --------
class IndependenceViolation(Sov6vError):
    pass


class PoleOnLattice(Sov6vError):
    pass


class SingularCalibration(Sov6vError):
    pass


class UnknownVariant(Sov6vError):
    pass


# -------- representation space --------
class PoleAtHeight(Sov6vError):
    pass


class WindowOverflow(Sov6vError):
    pass


class RankDeficient(Sov6vError):
    pass


# -------- numerics --------
class NewtonDiverged(Sov6vError):
    pass


# -------- spectrum --------
class DegenerateSpectrum(Sov6vError):
    pass


class IncompleteEnumeration(Sov6vError):
    pass


class ZeroQPair(Sov6vError):
    pass


# -------- T-Q --------
class NoNullVector(Sov6vError):
    pass


class RootCountMismatch(Sov6vError):
    pass


class NotEntire(Sov6vError):
    pass


class ZeroReference(Sov6vError):
    pass


class BranchLost(Sov6vError):
    pass


class AdmissibilityFailure(Sov6vError):
    pass


# -------- form factors --------
class SingularPropagator(Sov6vError):
    pass


class ZeroEigenvalueAtInhomogeneity(Sov6vError):
    pass


class InvalidHeight(Sov6vError):
    pass


# -------- configuration --------
class ConfigError(Sov6vError):
    """Bad configuration document. ``path`` is the dotted field location."""

    def __init__(self, message: str, path: str = "", value=None):
        super().__init__(f"{path}: {message}" if path else message, value)
        self.path = path


class InvalidModel(ConfigError):
    pass
