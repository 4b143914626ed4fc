"""Exception hierarchy.

Every error raised on purpose by the package derives from :class:`TwinlabError`
and carries a short machine-readable ``code`` used by the CLI error JSON.
"""


class TwinlabError(Exception):
    code = "TwinlabError"

    def to_dict(self):
        return {"error": self.code, "message": str(self)}


# phase matching

class OutOfValidityWindow(TwinlabError, ValueError):
    code = "OutOfValidityWindow"


class NoPhaseMatch(TwinlabError, ValueError):
    code = "NoPhaseMatch"


class NoRootInRange(TwinlabError, ValueError):
    code = "NoRootInRange"


class NonPositiveMismatch(TwinlabError, ValueError):
    code = "NonPositiveMismatch"


# simulation

class OverlappingFilters(TwinlabError, ValueError):
    code = "OverlappingFilters"


class NonPositiveDuration(TwinlabError, ValueError):
    code = "NonPositiveDuration"


class UnknownChannel(TwinlabError, KeyError):
    code = "UnknownChannel"

    def __str__(self):
        return Exception.__str__(self)


# analysis

class EmptyChannel(TwinlabError, ValueError):
    code = "EmptyChannel"


class ZeroCoincidences(TwinlabError, ValueError):
    code = "ZeroCoincidences"


class ZeroDoubles(TwinlabError, ValueError):
    code = "ZeroDoubles"


class InsufficientPoints(TwinlabError, ValueError):
    code = "InsufficientPoints"


# files and configuration

class ParseError(TwinlabError, ValueError):
    code = "ParseError"

    def __init__(self, line, message):
        self.line = line
        self.message = message
        super().__init__(f"line {line}: {message}" if line is not None else message)

    def to_dict(self):
        return {"error": self.code, "message": self.message, "line": self.line}


class ValidationError(TwinlabError, ValueError):
    """Raised with *all* violations found, not only the first."""

    code = "ValidationError"

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))

    def to_dict(self):
        return {"error": self.code, "violations": self.violations}


class BadMagic(TwinlabError, ValueError):
    code = "BadMagic"


class UnsupportedVersion(TwinlabError, ValueError):
    code = "UnsupportedVersion"


class TruncatedRecord(TwinlabError, ValueError):
    code = "TruncatedRecord"

    def __init__(self, offset, message=None):
        self.offset = offset
        super().__init__(message or f"truncated record at byte offset {offset}")

    def to_dict(self):
        return {"error": self.code, "message": str(self), "offset": self.offset}


class UnsortedInput(TwinlabError, ValueError):
    code = "UnsortedInput"
