"""Candidate-set enumeration.

Index sets are built either as prefixes (``nested``: the first s columns,
s = 1..k) or as all non-empty subsets (``subsets``: ordered by bitmask,
bit j meaning column j). Specs are ordered by the scalar-column set first
and by the score set second.
"""
from itertools import product
from typing import Literal

from plfsma.core.errors import ConfigurationError
from plfsma.schemas.candidate import CandidateSpec, max_score_count
from plfsma.schemas.design import CandidateSetId

Mode = Literal["nested", "subsets"]


def index_sets(count: int, mode: Mode) -> list[tuple[int, ...]]:
    if count < 1:
        raise ConfigurationError(f"need at least one column to enumerate, got {count}")
    if mode == "nested":
        return [tuple(range(s)) for s in range(1, count + 1)]
    if mode == "subsets":
        return [
            tuple(j for j in range(count) if mask >> j & 1) for mask in range(1, 2**count)
        ]
    raise ConfigurationError(f"unknown enumeration mode {mode!r}")


def candidate_grid(
    n_z: int, n_xi: int, z_mode: Mode = "subsets", xi_mode: Mode = "nested", bandwidth="auto"
) -> list[CandidateSpec]:
    """Cross every scalar-column set with every score set."""
    return [
        CandidateSpec(z_cols=z_cols, xi_cols=xi_cols, bandwidth=bandwidth)
        for z_cols, xi_cols in product(index_sets(n_z, z_mode), index_sets(n_xi, xi_mode))
    ]


_CANDIDATE_SETS = {
    CandidateSetId.M15A: dict(n_z=5, n_xi=3, z_mode="nested", xi_mode="nested"),
    CandidateSetId.M15B: dict(n_z=2, n_xi=5, z_mode="subsets", xi_mode="nested"),
    CandidateSetId.M21: dict(n_z=3, n_xi=2, z_mode="subsets", xi_mode="subsets"),
}


def enumerate_candidates(set_id: CandidateSetId | str) -> list[CandidateSpec]:
    """The simulation candidate sets: 15 nested, 15 with nested scores, 21 unrestricted."""
    if isinstance(set_id, str):
        set_id = CandidateSetId.parse(set_id)
    return candidate_grid(**_CANDIDATE_SETS[set_id])
