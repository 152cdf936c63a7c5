"""Exception hierarchy for sqpo.

Every exception carries a stable ``code`` used by the command-line frontend.
"""


class SqpoError(Exception):
    """Base class for all errors raised by this package."""

    code = "ERROR"


class DomainMismatch(SqpoError):
    code = "DOMAIN_MISMATCH"


class InvalidHomomorphism(SqpoError):
    code = "INVALID_HOMOMORPHISM"


class ParseError(SqpoError):
    code = "PARSE_ERROR"

    def __init__(self, message, position=None):
        super().__init__(message if position is None
                         else "%s (at position %s)" % (message, position))
        self.position = position


class SchemaError(SqpoError):
    code = "SCHEMA_ERROR"

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class IdCollision(SqpoError):
    code = "ID_COLLISION"


class InvalidSpan(SqpoError):
    code = "INVALID_SPAN"


class InvalidCospan(SqpoError):
    code = "INVALID_COSPAN"


class NotMono(SqpoError):
    code = "NOT_MONO"


class MediatorIllDefined(SqpoError):
    code = "MEDIATOR_ILL_DEFINED"


class NonCommutingSquare(SqpoError):
    code = "NON_COMMUTING_SQUARE"


class InvalidRule(SqpoError):
    code = "INVALID_RULE"


class InstanceMismatch(SqpoError):
    code = "INSTANCE_MISMATCH"


class NotReversible(SqpoError):
    code = "NOT_REVERSIBLE"


class CycleDetected(SqpoError):
    code = "CYCLE_DETECTED"


class CommutativityViolation(SqpoError):
    code = "COMMUTATIVITY_VIOLATION"


class RuleHomViolation(SqpoError):
    code = "RULE_HOM_VIOLATION"


class NotApplicable(SqpoError):
    code = "NOT_APPLICABLE"

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class PropagationConflict(SqpoError):
    code = "PROPAGATION_CONFLICT"


class InvalidState(SqpoError):
    code = "INVALID_STATE"


class NoMatch(SqpoError):
    code = "NO_MATCH"


class AmbiguousMatch(SqpoError):
    code = "AMBIGUOUS_MATCH"


class IndexOutOfRange(SqpoError):
    code = "INDEX_OUT_OF_RANGE"


class NameConflict(SqpoError):
    code = "NAME_CONFLICT"


class UnknownVersion(SqpoError):
    code = "UNKNOWN_VERSION"


class InvalidMergeSpec(SqpoError):
    code = "INVALID_MERGE_SPEC"


class StoreCorrupt(SqpoError):
    code = "STORE_CORRUPT"

    def __init__(self, message, path=None):
        super().__init__(message)
        self.path = path


class VersionMismatch(SqpoError):
    code = "VERSION_MISMATCH"
