"""Binary bitonic sorting networks over AND2/OR2/MAJ3.

In the binary domain a compare-exchange is an OR (the larger bit) and an AND
(the smaller bit).  Widths that are not powers of two are handled by padding
the bitonic sequence with virtual constants placed so that the padded
sequence stays cyclically bitonic; compare-exchanges against a constant fold
away, so no gates are emitted for the padding.  Width-3 sub-problems use the
dedicated three-input sorter (OR tree, MAJ3 median, AND tree).
"""
from __future__ import annotations

from typing import Optional, Sequence, Union

from .netlist import AND2, MAJ3, OR2, GateNetlist

DESCENDING = "descending"
ASCENDING = "ascending"

# a wire is either a node id or a virtual constant that never reaches the netlist
_ONE = "one"
_ZERO = "zero"
Wire = Union[int, str]


def _check_direction(direction: str) -> None:
    if direction not in (DESCENDING, ASCENDING):
        raise ValueError(f"direction must be {DESCENDING!r} or {ASCENDING!r}, got {direction!r}")


def _opposite(direction: str) -> str:
    return ASCENDING if direction == DESCENDING else DESCENDING


def compare_exchange(net: GateNetlist, a: Wire, b: Wire) -> tuple[Wire, Wire]:
    """Return ``(max, min)`` of two wires, folding virtual constants."""
    if a == _ONE or b == _ONE:
        return _ONE, (b if a == _ONE else a)
    if a == _ZERO or b == _ZERO:
        return (b if a == _ZERO else a), _ZERO
    return net.add(OR2, a, b), net.add(AND2, a, b)


def comparator_wires(net: GateNetlist, a: int, b: int, direction: str = DESCENDING) -> tuple[int, int]:
    hi, lo = compare_exchange(net, a, b)
    return (hi, lo) if direction == DESCENDING else (lo, hi)


def three_sort_wires(net: GateNetlist, a: int, b: int, c: int) -> tuple[int, int, int]:
    """Descending ``(max, median, min)`` of three bits."""
    hi = net.add(OR2, net.add(OR2, a, b), c)
    med = net.add(MAJ3, a, b, c)
    lo = net.add(AND2, net.add(AND2, a, b), c)
    return hi, med, lo


def _half_clean_merge(net: GateNetlist, wires: list[Wire]) -> list[Wire]:
    """Descending merge of a (cyclically) bitonic power-of-two sequence."""
    n = len(wires)
    if n <= 1:
        return wires
    half = n // 2
    top, bottom = [], []
    for a, b in zip(wires[:half], wires[half:]):
        hi, lo = compare_exchange(net, a, b)
        top.append(hi)
        bottom.append(lo)
    return _half_clean_merge(net, top) + _half_clean_merge(net, bottom)


def merge_wires(
    net: GateNetlist,
    wires: Sequence[int],
    direction: str = DESCENDING,
    first_run: str = DESCENDING,
) -> list[int]:
    """Merge two oppositely sorted runs (the split point may be anywhere).

    ``first_run`` names the order of the leading run.  A descending-then-
    ascending sequence (1s, 0s, 1s) is padded with virtual ones at the end and
    the padding is read off the top; the other shape is padded with zeros and
    the padding is read off the bottom.
    """
    _check_direction(direction)
    _check_direction(first_run)
    n = len(wires)
    if n <= 1:
        return list(wires)
    size = 1 << (n - 1).bit_length()
    pad = size - n
    if first_run == DESCENDING:
        merged = _half_clean_merge(net, list(wires) + [_ONE] * pad)[pad:]
    else:
        merged = _half_clean_merge(net, list(wires) + [_ZERO] * pad)[:n]
    assert all(isinstance(w, int) for w in merged)
    return merged if direction == DESCENDING else merged[::-1]


def sort_wires(net: GateNetlist, wires: Sequence[int], direction: str = DESCENDING) -> list[int]:
    """Bitonic sort: top ``ceil(n/2)`` descending, bottom ``floor(n/2)`` ascending, then merge."""
    _check_direction(direction)
    n = len(wires)
    if n <= 1:
        out = list(wires)
    elif n == 2:
        out = list(compare_exchange(net, wires[0], wires[1]))
    elif n == 3:
        out = list(three_sort_wires(net, *wires))
    else:
        split = (n + 1) // 2
        top = sort_wires(net, wires[:split], DESCENDING)
        bottom = sort_wires(net, wires[split:], ASCENDING)
        out = merge_wires(net, top + bottom, DESCENDING, first_run=DESCENDING)
    return out if direction == DESCENDING else out[::-1]


def _standalone(n_inputs: int, body) -> GateNetlist:
    net = GateNetlist()
    ins = [net.add_input(f"x{i}") for i in range(n_inputs)]
    net.outputs = list(body(net, ins))
    return net


def build_comparator(direction: str = DESCENDING) -> GateNetlist:
    _check_direction(direction)
    return _standalone(2, lambda net, ins: comparator_wires(net, ins[0], ins[1], direction))


def build_three_sorter() -> GateNetlist:
    return _standalone(3, lambda net, ins: three_sort_wires(net, *ins))


def build_bitonic_merger(n: int, direction: str = DESCENDING, first_run: Optional[str] = None) -> GateNetlist:
    """Merger for a concatenation of two oppositely sorted runs of total width ``n``.

    By default the leading run is descending and the trailing one ascending.
    """
    if n < 1:
        raise ValueError("merger width must be at least 1")
    first = DESCENDING if first_run is None else first_run
    return _standalone(n, lambda net, ins: merge_wires(net, ins, direction, first))


def build_bitonic_sorter(n: int, direction: str = DESCENDING) -> GateNetlist:
    if n < 1:
        raise ValueError("sorter width must be at least 1")
    return _standalone(n, lambda net, ins: sort_wires(net, ins, direction))


def power_of_two_comparators(n: int) -> int:
    """Comparator count ``(n/2) * k(k+1)/2`` of the classic bitonic sorter, ``n = 2**k``."""
    k = n.bit_length() - 1
    if n < 1 or 1 << k != n:
        raise ValueError("closed form holds for powers of two only")
    return (n // 2) * k * (k + 1) // 2
