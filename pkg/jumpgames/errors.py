"""Exception types shared by the jump game modules.

Every class carries the process exit code the command line uses for it.
"""


class JumpGameError(Exception):
    exit_code = 1


class ConfigError(JumpGameError, ValueError):
    exit_code = 3


class InvalidTopology(JumpGameError, ValueError):
    exit_code = 3


class InvalidInstance(JumpGameError, ValueError):
    exit_code = 3


class InvalidAssignment(JumpGameError, ValueError):
    exit_code = 3


class UnknownNode(JumpGameError, ValueError):
    exit_code = 3


class InvalidMove(JumpGameError, ValueError):
    exit_code = 3


class InfeasibleParameters(JumpGameError, ValueError):
    exit_code = 3


class FixtureMissing(JumpGameError):
    exit_code = 3


class DisconnectedTopology(JumpGameError, ValueError):
    exit_code = 3


class NotASpider(JumpGameError, ValueError):
    exit_code = 3


class UnclassifiedMove(JumpGameError, ValueError):
    """A move that matches no row of the spider potential tables."""
    exit_code = 3


class BudgetExceeded(JumpGameError):
    exit_code = 6

    def __init__(self, state_count, budget):
        super().__init__(f"{state_count} class states exceed the budget of {budget}")
        self.state_count = state_count
        self.budget = budget


class NotATree(JumpGameError):
    exit_code = 7


class StubbornPresent(JumpGameError):
    exit_code = 7


class TooManyAgents(JumpGameError):
    exit_code = 7


class InternalVerificationFailed(JumpGameError):
    exit_code = 8


class SuiteUsageError(JumpGameError):
    """No battery row matched the requested names."""
    exit_code = 2
