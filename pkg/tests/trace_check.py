"""Replays a planner trace and checks the queue-order invariants.

Trace events are ``(op, heap_id, key_with_tick, state)``.  The checker keeps
its own copy of every queue (a max-heap with lazy deletion), so it does not
trust the engine's heap.
"""

import heapq
from collections import defaultdict


def _neg(key):
    return tuple(-x for x in key)


def queue_violations(trace, strategy, k_max=None):
    """Returns a list of human-readable violations (empty when all hold).

    Lexicographic pop: every popped key is the largest key in its queue.
    Retraction (longest-first): a key with ``k < k_max`` is popped only when
    no key with a larger ``k`` remains.
    """
    live = defaultdict(dict)   # heap_id -> {key: state}
    heaps = defaultdict(list)  # heap_id -> [negated key]
    bad = []
    for i, (op, hid, key, state) in enumerate(trace):
        q, h = live[hid], heaps[hid]
        if op == "push":
            if key in q:
                bad.append(f"event {i}: duplicate key {key}")
            q[key] = state
            heapq.heappush(h, _neg(key))
            continue
        if q.get(key, object()) != state:
            bad.append(f"event {i}: popped {key} that was never pushed")
            continue
        while _neg(h[0]) not in q:
            heapq.heappop(h)
        top = _neg(h[0])
        if key != top:
            bad.append(f"event {i}: popped {key} while {top} remained")
        if strategy == "longest-first" and k_max is not None and key[0] < k_max and top[0] > key[0]:
            bad.append(f"event {i}: retracted to k={key[0]} while k={top[0]} remained")
        del q[key]
    return bad
