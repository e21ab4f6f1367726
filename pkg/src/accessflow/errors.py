"""Exception types shared across the package."""


class AccessFlowError(Exception):
    """Base class for all package errors."""


class MalformedRow(AccessFlowError):
    def __init__(self, path, line, reason):
        self.path = path
        self.line = line
        self.reason = reason
        super().__init__(f"{path}:{line}: {reason}")


class DuplicateId(AccessFlowError):
    def __init__(self, kind, id_):
        self.kind = kind
        self.id = id_
        super().__init__(f"duplicate {kind} id {id_!r}")


class DanglingReference(AccessFlowError):
    def __init__(self, kind, id_, ref):
        self.kind = kind
        self.id = id_
        self.ref = ref
        super().__init__(f"{kind} {id_!r} references unknown id {ref!r}")


class InvalidCoordinate(AccessFlowError):
    def __init__(self, id_, lat, lon):
        self.id = id_
        super().__init__(f"{id_!r}: coordinate ({lat}, {lon}) out of range")


class InvalidCap(AccessFlowError):
    def __init__(self, site_id, value):
        self.site_id = site_id
        super().__init__(f"medicaid cap for site {site_id!r} is {value}, not in [0, 1]")


class SolverError(AccessFlowError):
    """Numeric failure inside the assignment solver, with diagnostics."""

    def __init__(self, message, diagnostics=None):
        self.diagnostics = diagnostics or {}
        super().__init__(message)


class InvalidGrid(AccessFlowError):
    pass


class ConfigError(AccessFlowError):
    """Bad key, value, or syntax in a flat key = value configuration file."""


class ConstantColumn(AccessFlowError):
    def __init__(self, name):
        self.name = name
        super().__init__(f"covariate {name!r} is constant over usable rows")


class TooFewRows(AccessFlowError):
    def __init__(self, n_rows, needed):
        self.n_rows = n_rows
        self.needed = needed
        super().__init__(f"{n_rows} usable rows, need at least {needed}")


class SingularSystem(AccessFlowError):
    pass


class NotConverged(AccessFlowError):
    """Backfitting hit the iteration cap. Carries the last iterate."""

    def __init__(self, fit):
        self.fit = fit
        super().__init__(f"backfit did not converge in {fit.n_iterations} sweeps")


class BootstrapFailed(AccessFlowError):
    def __init__(self, n_ok, attempts):
        super().__init__(
            f"only {n_ok} bootstrap replicates succeeded after {attempts} attempts"
        )
