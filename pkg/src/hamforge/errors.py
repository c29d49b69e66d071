"""Exception hierarchy shared by every hamforge module."""


class HamforgeError(Exception):
    """Base class for all library errors."""


# ingestion
class SchemaError(HamforgeError):
    pass


class DomainError(HamforgeError):
    pass


class ParityViolation(DomainError):
    pass


class BoundViolation(DomainError):
    pass


class HermiticityError(DomainError):
    pass


class DegenerateState(HamforgeError):
    pass


class DegenerateSpec(DomainError):
    pass


# circuit plumbing
class WidthMismatch(HamforgeError):
    pass


class NameCollision(HamforgeError):
    pass


class DimensionMismatch(HamforgeError):
    pass


class AncillaLeak(HamforgeError):
    def __init__(self, msg: str, leak: float):
        super().__init__(msg)
        self.leak = leak


# primitives
class PatternOverflow(HamforgeError):
    pass


class SparsityOverflow(HamforgeError):
    pass


class ZeroLeadingAmplitude(HamforgeError):
    pass


class NaNAngle(HamforgeError):
    pass


class ComplexResidual(HamforgeError):
    pass


# qsvt / evolution / ledger
class NonConvergence(HamforgeError):
    pass


class TractabilityError(DomainError):
    pass


class UnknownFormula(HamforgeError):
    pass
