"""Exceptions shared across modules."""


class ResourceLimit(RuntimeError):
    """A configured budget (candidates, nodes, partitions, time) ran out."""


BudgetExceeded = ResourceLimit
