"""Exception types raised across the gdpx pipeline."""


class GdpxError(Exception):
    pass


# ---- ingestion -------------------------------------------------------------

class SchemaError(GdpxError):
    """Header row does not match the expected column list."""

    def __init__(self, expected, found):
        self.expected = list(expected)
        self.found = list(found)
        super().__init__(f"header mismatch: expected {self.expected}, found {self.found}")


class MalformedRow(GdpxError):
    def __init__(self, line, column, message=""):
        self.line = line
        self.column = column
        super().__init__(f"line {line}, column {column!r}: {message}".rstrip(": "))


class InvariantViolation(GdpxError):
    def __init__(self, ident, message=""):
        self.ident = ident
        super().__init__(f"{ident}: {message}".rstrip(": "))


class DuplicateKey(GdpxError):
    def __init__(self, key, line=None):
        self.key = key
        self.line = line
        where = f" (line {line})" if line is not None else ""
        super().__init__(f"duplicate key {key!r}{where}")


class ConfigError(GdpxError):
    pass


# ---- lifecycle / classification -------------------------------------------

class OrphanEvent(GdpxError):
    def __init__(self, gdp_key):
        self.gdp_key = gdp_key
        super().__init__(f"{gdp_key}: revision or cancel precedes any release")


class OverlapError(GdpxError):
    def __init__(self, airport, first, second):
        self.airport = airport
        self.keys = (first, second)
        super().__init__(f"{airport}: programs {first!r} and {second!r} overlap")


class OutOfWindow(GdpxError):
    def __init__(self, quarter):
        self.quarter = quarter
        super().__init__(f"quarter {quarter} outside program window")


class MissingEdct(GdpxError):
    def __init__(self, flight_id):
        self.flight_id = flight_id
        super().__init__(f"{flight_id}: restricted flight has no EDCT")


# ---- queueing / features ---------------------------------------------------

class UnderdefinedCapacity(GdpxError):
    def __init__(self, quarter):
        self.quarter = quarter
        super().__init__(f"no capacity for quarter {quarter} and no default rate")


class NoRestrictedFlights(GdpxError):
    """Per-RF excess is undefined; the total is attached as ``result``."""

    def __init__(self, result=None):
        self.result = result
        super().__init__("rf_count is 0, per-RF excess delay undefined")


class MissingQuarter(GdpxError):
    def __init__(self, airport, quarter):
        self.airport = airport
        self.quarter = quarter
        super().__init__(f"{airport}: no ARR RATE for quarter {quarter}")


# ---- regression ------------------------------------------------------------

class RankDeficient(GdpxError):
    pass


class NotConverged(GdpxError):
    def __init__(self, max_iter, partial=None):
        self.max_iter = max_iter
        self.partial = partial
        super().__init__(f"coordinate descent did not converge in {max_iter} sweeps")


class ZeroVarianceTarget(GdpxError):
    pass


class DegenerateScore(GdpxError):
    def __init__(self, score):
        self.score = score
        super().__init__(f"baseline R^2 = {score:.6g} <= 0, importance undefined")


# ---- orchestration ---------------------------------------------------------

class StageError(GdpxError):
    """A pipeline stage failed; ``stage`` is e.g. ``"ingest/quarters"``."""

    def __init__(self, stage, cause):
        self.stage = stage
        self.cause = cause
        super().__init__(f"[{stage}] {cause}")
