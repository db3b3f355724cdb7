# app/utils/pair_queue.py

import heapq
from typing import List, Tuple

# (-gain, element, solution index, solution version, f(S + u))
PairEntry = Tuple[float, int, int, int, float]


class PairQueue:
    """Max-gain queue of element-solution pairs

    Pops follow (higher gain, lower element id, lower solution index). Stored
    gains may be stale upper bounds; `version` is the solution size at the
    time the gain was computed.
    """

    def __init__(self):
        self._heap: List[PairEntry] = []

    def push(self, gain: float, element: int, solution: int, version: int, new_value: float) -> None:
        heapq.heappush(self._heap, (-gain, element, solution, version, new_value))

    def pop(self) -> Tuple[float, int, int, int, float]:
        neg_gain, element, solution, version, new_value = heapq.heappop(self._heap)
        return -neg_gain, element, solution, version, new_value

    def __len__(self) -> int:
        return len(self._heap)

    def __bool__(self) -> bool:
        return bool(self._heap)
