"""Hypothesis and n-best list types plus their JSON-lines file format.

One JSON object per line, schema version 1:

    {"schema_version": 1, "utt_id": "u1", "rank": 0, "ctc_score": -1.5,
     "las_score": null, "lm_score": null, "len": 3, "ids": "7 12 5",
     "text": "voice search"}

Unset scores are null. ``len`` counts subword tokens, excluding BOS/EOS.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional

from .errors import ContractError, DataFormatError

NBEST_SCHEMA_VERSION = 1


@dataclass
class Hypothesis:
    ids: List[int]
    ctc_score: Optional[float] = None
    las_score: Optional[float] = None
    lm_score: Optional[float] = None
    text: Optional[str] = None

    @property
    def len(self) -> int:
        return len(self.ids)

    def validate(self) -> None:
        for name in ("ctc_score", "las_score", "lm_score"):
            value = getattr(self, name)
            if value is not None and value > 1e-9:
                raise ContractError(f"{name}={value} is not a log-probability")


@dataclass
class NBestList:
    utt_id: str
    hypotheses: List[Hypothesis]
    source: str = "first_pass"  # first_pass | standalone | rescored

    def __len__(self) -> int:
        return len(self.hypotheses)

    def top(self) -> Hypothesis:
        if not self.hypotheses:
            raise ContractError(f"n-best list for {self.utt_id} is empty")
        return self.hypotheses[0]


def save_nbest(path, lists: List[NBestList]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        for nbest in lists:
            for rank, h in enumerate(nbest.hypotheses):
                record = {
                    "schema_version": NBEST_SCHEMA_VERSION,
                    "utt_id": nbest.utt_id,
                    "source": nbest.source,
                    "rank": rank,
                    "ctc_score": h.ctc_score,
                    "las_score": h.las_score,
                    "lm_score": h.lm_score,
                    "len": h.len,
                    "ids": " ".join(str(i) for i in h.ids),
                    "text": h.text,
                }
                fh.write(json.dumps(record, ensure_ascii=False) + "\n")


def load_nbest(path) -> List[NBestList]:
    lists: List[NBestList] = []
    current: Optional[NBestList] = None
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataFormatError(f"{path}:{line_no}: invalid JSON: {exc}") from None
            if record.get("schema_version") != NBEST_SCHEMA_VERSION:
                raise DataFormatError(
                    f"{path}:{line_no}: unsupported schema_version {record.get('schema_version')}"
                )
            h = Hypothesis(
                ids=[int(s) for s in record["ids"].split()] if record["ids"] else [],
                ctc_score=record["ctc_score"],
                las_score=record["las_score"],
                lm_score=record["lm_score"],
                text=record["text"],
            )
            if current is None or record["utt_id"] != current.utt_id:
                current = NBestList(utt_id=record["utt_id"], hypotheses=[],
                                    source=record.get("source", "first_pass"))
                lists.append(current)
            current.hypotheses.append(h)
    return lists
