from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterator, Union

import numpy as np

from ..corpus import format_links
from ..corpus.pharaoh import Link
from ..models import AlignmentMatrix


@dataclass(frozen=True)
class LinkSet:
    """Hard (source m, target n) links of one sentence pair."""

    links: FrozenSet[Link] = field(default_factory=frozenset)

    def __iter__(self) -> Iterator[Link]:
        return iter(sorted(self.links, key=lambda link: (link[1], link[0])))

    def __len__(self) -> int:
        return len(self.links)

    def __contains__(self, link) -> bool:
        return link in self.links

    def target_map(self) -> Dict[int, int]:
        return {n: m for m, n in self.links}

    def transposed(self) -> "LinkSet":
        return LinkSet(frozenset((n, m) for m, n in self.links))

    def to_pharaoh(self) -> str:
        return format_links(self.links)


def extract_one_to_one(matrix: Union[AlignmentMatrix, np.ndarray], exclude_eos: bool = False) -> LinkSet:
    """Link every target position to its highest-weight source position (ties to the smallest m).

    With exclude_eos the last row and column, the EOS positions, are dropped first.
    """
    weights = matrix.weights if isinstance(matrix, AlignmentMatrix) else np.asarray(matrix)
    if exclude_eos:
        weights = weights[:-1, :-1]
    return LinkSet(frozenset((int(np.argmax(weights[n])), n) for n in range(weights.shape[0])))
