"""
Exception hierarchy shared by every conekit module.

Each error carries a stable machine-readable ``code`` so the command line
front end can report it as ``{"error": code, "message": ...}``.
"""


class ConeKitError(Exception):
    """Base class for all conekit errors"""

    code = "error"

    def to_json(self):
        return {"error": self.code, "message": str(self)}


class MismatchedLattice(ConeKitError):
    code = "MismatchedLattice"


class NotUnimodular(ConeKitError):
    code = "NotUnimodular"


class WrongBPlus(ConeKitError):
    code = "WrongBPlus"


class HypothesisNotAsserted(ConeKitError):
    code = "HypothesisNotAsserted"


class KMismatch(ConeKitError):
    code = "KMismatch"


class UnknownModel(ConeKitError):
    code = "UnknownModel"


class SchemaError(ConeKitError):
    code = "SchemaError"


class InvariantViolation(ConeKitError):
    """A type invariant failed; ``invariant`` names which one"""

    code = "InvariantViolation"

    def __init__(self, invariant, message=""):
        self.invariant = invariant
        super().__init__(f"{invariant}: {message}" if message else invariant)

    def to_json(self):
        payload = super().to_json()
        payload["invariant"] = self.invariant
        return payload


class NotSquareZero(ConeKitError):
    code = "NotSquareZero"


class NoDualClass(ConeKitError):
    code = "NoDualClass"


class NotGood(ConeKitError):
    code = "NotGood"


class NonPositiveG(ConeKitError):
    code = "NonPositiveG"


class RhoOutOfRange(ConeKitError):
    code = "RhoOutOfRange"


class NonPositiveSquare(ConeKitError):
    code = "NonPositiveSquare"


class MatchingFailure(ConeKitError):
    code = "MatchingFailure"


class UnexpandableClass(ConeKitError):
    code = "UnexpandableClass"


class HypothesisNotEstablished(ConeKitError):
    code = "HypothesisNotEstablished"


class WitnessRejected(ConeKitError):
    code = "WitnessRejected"


class ClassExpressionError(ConeKitError):
    code = "ClassExpressionError"


class UsageError(ConeKitError):
    code = "UsageError"
