"""Exception types raised by the solvers and checkers."""


class AuctionError(Exception):
    """Base class for every error raised by this package."""


class InvalidInstance(AuctionError, ValueError):
    """The instance violates a structural invariant.

    ``problems`` holds the individual messages produced by
    :func:`chinese_auction.model.validate_instance`.
    """

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems) or "invalid instance")


class DimensionMismatch(AuctionError, ValueError):
    pass


class NegativeInput(AuctionError, ValueError):
    pass


class AsymmetricValuations(AuctionError, ValueError):
    pass


class AllZeroValuations(AuctionError, ValueError):
    pass


class MultiTicketPlayer(AuctionError, ValueError):
    pass


class UnequalTicketWeights(AuctionError, ValueError):
    pass


class NotTwoItems(AuctionError, ValueError):
    pass


class WrongBudgetKind(AuctionError, ValueError):
    """A continuous-budget routine got discrete budgets or vice versa."""


class ExplosionGuard(AuctionError, RuntimeError):
    """An enumeration would exceed its configured size limit."""


class BestResponseNotAttained(AuctionError, RuntimeError):
    """A best response only exists as a supremum (zero mass on a valued item)."""

    def __init__(self, player, items):
        self.player = player
        self.items = tuple(items)
        super().__init__(
            f"best response of player {player} is not attained: items {list(self.items)} "
            "carry no opposing weight; add an auctioneer ticket to them"
        )
