"""
0/1 knapsack by dynamic programming

With one stage and one replica the savings problem is a knapsack: the
deadline is the capacity, private latencies are the weights and public
costs are the values. Used to cross-check the exact search.
"""

from typing import Dict, List, Sequence, Tuple

from src.errors import DomainError


def knapsack_01(weights: Sequence[float], values: Sequence[float], capacity: float) -> Tuple[float, List[int]]:
    """
    Best total value within `capacity`.

    Values of a chosen set are added in index order.

    Returns:
        (best value, chosen indices ascending)
    """
    if len(weights) != len(values):
        raise DomainError("weights and values differ in length")
    if any(w < 0 for w in weights) or capacity < 0:
        raise DomainError("weights and capacity must be non-negative")

    # total weight -> (value, chosen)
    states: Dict[float, Tuple[float, Tuple[int, ...]]] = {0.0: (0.0, ())}
    for index, (weight, value) in enumerate(zip(weights, values)):
        for used, (total, chosen) in list(states.items()):
            load = used + weight
            if load > capacity:
                continue
            candidate = total + value
            current = states.get(load)
            if current is None or candidate > current[0]:
                states[load] = (candidate, chosen + (index,))

    best_value, best_items = max(states.values(), key=lambda state: state[0])
    return best_value, list(best_items)
