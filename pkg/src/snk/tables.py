"""Tabular report rendering: TSV with a header row, plus an aligned
human-readable variant. All cells are pre-formatted strings so TSV and
JSON outputs carry identical values.
"""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True)
class Table:
    header: tuple[str, ...]
    rows: tuple[tuple[str, ...], ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        for row in self.rows:
            if len(row) != len(self.header):
                raise ValueError(f"row width {len(row)} != header width {len(self.header)}")

    def to_tsv(self) -> str:
        lines = ["\t".join(self.header)]
        lines.extend("\t".join(row) for row in self.rows)
        return "\n".join(lines) + "\n"

    def to_aligned(self) -> str:
        widths = [len(h) for h in self.header]
        for row in self.rows:
            for i, cell in enumerate(row):
                widths[i] = max(widths[i], len(cell))
        def fmt(cells):
            return "  ".join(c.ljust(w) for c, w in zip(cells, widths)).rstrip()
        lines = [fmt(self.header), fmt("-" * w for w in widths)]
        lines.extend(fmt(row) for row in self.rows)
        return "\n".join(lines) + "\n"

    def to_records(self) -> list[dict[str, str]]:
        """Rows as header-keyed dicts (the JSON encoding of a table)."""
        return [dict(zip(self.header, row)) for row in self.rows]


def format_ratio(x: float) -> str:
    """Canonical 6-decimal rendering for ratios/percentages in reports."""
    return f"{x:.6f}".rstrip("0").rstrip(".") if x == x else "nan"
