"""Exception hierarchy shared by all modules."""


class FinBisimError(Exception):
    """Base class for every error raised by finbisim."""


class SpecError(FinBisimError):
    """Malformed or inconsistent spec file.

    ``locator`` names the offending field (and line, when known).
    """

    def __init__(self, message, locator=None):
        self.locator = locator
        if locator:
            message = f"{locator}: {message}"
        super().__init__(message)


class NumericError(FinBisimError):
    """Eigenvalue failure, overflow, or similar floating point breakdown."""


class UnsupportedSpectrum(FinBisimError):
    """No similarity transform in the search grid certifies the norm bound."""


class NotSchurStable(FinBisimError):
    pass


class NotInvertible(FinBisimError):
    pass


class AlphabetTooSmall(FinBisimError):
    pass


class BudgetExceeded(FinBisimError):
    def __init__(self, k, tuples, budget):
        self.k, self.tuples, self.budget = k, tuples, budget
        super().__init__(
            f"depth k={k} needs {tuples} generating tuples, budget is {budget}"
        )


class NoSeparationWithinBudget(FinBisimError):
    def __init__(self, k_max, last_d=None, last_threshold=None):
        self.k_max = k_max
        self.last_d = last_d
        self.last_threshold = last_threshold
        super().__init__(
            f"no prefix split separated by kappa*l_k within k_max={k_max} "
            f"(last d={last_d}, last kappa*l_k={last_threshold}); the closure of "
            "the forced-response set may be connected, or k_max is too small"
        )


class NotWellDefined(FinBisimError):
    """Two states of one class reach different classes under the same letter."""

    def __init__(self, cls, letter, witnesses, targets):
        self.cls, self.letter = cls, letter
        self.witnesses, self.targets = witnesses, targets
        super().__init__(
            f"class {cls}, letter {letter}: successors of {witnesses[0]} and "
            f"{witnesses[1]} land in classes {targets[0]} and {targets[1]}"
        )


class UnclassifiableSuccessor(FinBisimError):
    def __init__(self, cls, letter, witness):
        self.cls, self.letter, self.witness = cls, letter, witness
        super().__init__(
            f"class {cls}, letter {letter}: successor of {witness} lies outside "
            "every class"
        )


class DigestMismatch(FinBisimError):
    pass
