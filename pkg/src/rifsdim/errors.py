"""Exception hierarchy.

Every error carries a module-qualified ``code`` so the CLI can report it
uniformly and map it to an exit status.
"""


class RifsError(Exception):
    code = "rifs.error"
    exit_status = 1


# numeric-exact
class NonMonic(RifsError):
    code = "field.non_monic"


class NotIsolating(RifsError):
    code = "field.not_isolating"


class DivByZero(RifsError, ZeroDivisionError):
    code = "field.div_by_zero"


class FieldMismatch(RifsError):
    code = "field.mismatch"


# rifs-model
class StructuralError(RifsError):
    code = "model.structure"


class HullViolation(RifsError):
    code = "model.hull"


class NotEquicontractive(RifsError):
    code = "model.not_equicontractive"


class BudgetExceeded(RifsError):
    code = "model.budget"
    exit_status = 2


# ussc-spectrum
class BracketFailure(RifsError):
    code = "spectrum.bracket"


class OutOfRange(RifsError):
    code = "spectrum.out_of_range"


class FlatSegment(RifsError):
    code = "spectrum.flat_segment"

    def __init__(self, msg, q_interval=None):
        super().__init__(msg)
        self.q_interval = q_interval


# finite-type-graph
class FiniteTypeBudgetExceeded(BudgetExceeded):
    code = "graph.budget"


class NotAPath(RifsError):
    code = "graph.not_a_path"


class MultipleTerminalSccs(RifsError):
    code = "graph.multiple_terminal_sccs"


# lyapunov-mc
class NotRegular(RifsError):
    code = "lyapunov.not_regular"


class PreconditionError(RifsError):
    code = "lyapunov.precondition"


# commuting-analysis
class CapTooSmall(BudgetExceeded):
    code = "commuting.cap_too_small"


class ExplosionGuard(BudgetExceeded):
    code = "commuting.explosion"


class NotCommuting(RifsError):
    code = "commuting.not_commuting"
