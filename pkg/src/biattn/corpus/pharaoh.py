import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import FrozenSet, Iterable, List, Tuple, Union

from ..errors import CorpusError

Link = Tuple[int, int]

_LINK = re.compile(r"^(\d+)([-?])(\d+)$")


@dataclass(frozen=True)
class GoldAlignment:
    """Reference links (m, n) of one sentence pair, split into sure and possible-only."""

    sure: FrozenSet[Link] = field(default_factory=frozenset)
    possible: FrozenSet[Link] = field(default_factory=frozenset)

    @property
    def all_possible(self) -> FrozenSet[Link]:
        return self.sure | self.possible

    def transposed(self) -> "GoldAlignment":
        return GoldAlignment(
            sure=frozenset((n, m) for m, n in self.sure),
            possible=frozenset((n, m) for m, n in self.possible),
        )

    def within(self, source_len: int, target_len: int) -> bool:
        return all(0 <= m < source_len and 0 <= n < target_len for m, n in self.all_possible)

    @classmethod
    def from_string(cls, line: str) -> "GoldAlignment":
        """Parse 'm-n' (sure) and 'm?n' (possible) links."""
        sure, possible = set(), set()
        for item in line.split():
            match = _LINK.match(item)
            if not match:
                raise CorpusError(f"malformed alignment link {item!r}")
            link = (int(match.group(1)), int(match.group(3)))
            (sure if match.group(2) == "-" else possible).add(link)
        return cls(frozenset(sure), frozenset(possible - sure))

    def __str__(self) -> str:
        items = [(m, n, "-") for m, n in self.sure] + [(m, n, "?") for m, n in self.possible]
        return " ".join(f"{m}{mark}{n}" for m, n, mark in sorted(items))


def format_links(links: Iterable[Link]) -> str:
    """Pharaoh line for sure links, sorted by target then source position."""
    return " ".join(f"{m}-{n}" for m, n in sorted(links, key=lambda link: (link[1], link[0])))


def read_pharaoh(path: Union[str, Path]) -> List[GoldAlignment]:
    with open(path, encoding="utf-8") as handle:
        return [GoldAlignment.from_string(line) for line in handle]
