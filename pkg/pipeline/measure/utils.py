"""
Measure Utilities

Map-id transform algebra. A transformed map is referenced by a suffix on its
base id: 'S' (identity), 'S^-1' (inverse), 'S^T' (transpose), 'S^-T'
(inverse-transpose). The four transforms form the Klein four-group.
"""

from typing import Tuple

from .models import TransformKind

_SUFFIX = {
    TransformKind.IDENTITY: "",
    TransformKind.INVERSE: "^-1",
    TransformKind.TRANSPOSE: "^T",
    TransformKind.INVERSE_TRANSPOSE: "^-T",
}

# (inverse bit, transpose bit)
_BITS = {
    TransformKind.IDENTITY: (0, 0),
    TransformKind.INVERSE: (1, 0),
    TransformKind.TRANSPOSE: (0, 1),
    TransformKind.INVERSE_TRANSPOSE: (1, 1),
}
_FROM_BITS = {bits: kind for kind, bits in _BITS.items()}


def split_map_id(map_id: str) -> Tuple[str, TransformKind]:
    """
    Split a map id into its base id and transform.

    Example:
        >>> split_map_id("S^-T")
        ('S', <TransformKind.INVERSE_TRANSPOSE: 'inverse-transpose'>)
    """
    for kind in (TransformKind.INVERSE_TRANSPOSE, TransformKind.INVERSE, TransformKind.TRANSPOSE):
        suffix = _SUFFIX[kind]
        if map_id.endswith(suffix):
            return map_id[: -len(suffix)], kind
    return map_id, TransformKind.IDENTITY


def compose_transforms(first: TransformKind, second: TransformKind) -> TransformKind:
    """Compose two transforms (the group is abelian, order does not matter)."""
    a, b = _BITS[first], _BITS[second]
    return _FROM_BITS[(a[0] ^ b[0], a[1] ^ b[1])]


def transform_map_id(map_id: str, kind: TransformKind) -> str:
    """Apply a transform to a (possibly already transformed) map id."""
    base, current = split_map_id(map_id)
    return base + _SUFFIX[compose_transforms(current, kind)]


def involves_transpose(kind: TransformKind) -> bool:
    """True for transpose and inverse-transpose."""
    return _BITS[kind][1] == 1


def involves_inverse(kind: TransformKind) -> bool:
    """True for inverse and inverse-transpose."""
    return _BITS[kind][0] == 1


def reverses_order(kind: TransformKind) -> bool:
    """True for inverse and transpose, the transforms that reverse the order of a composition."""
    bits = _BITS[kind]
    return (bits[0] ^ bits[1]) == 1
