# -*- coding: utf-8 -*-
"""
Evaluation Reports

A report is a list of per-class AP entries plus mAP summaries. It renders as
tab-separated text (one line per AP: setting, split, class id, AP) and as a
JSON summary document.
"""

import json
import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import pandas as pd

from ..errors import ValidationError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class APEntry:
    setting: str
    split: str
    class_id: int
    ap: float
    n_positives: int
    n_detections: int
    excluded: bool = False


def mean_ap(entries: Sequence[APEntry]) -> Optional[float]:
    """Mean over entries with positives that are not excluded; None when there are none."""
    values = [e.ap for e in entries if e.n_positives > 0 and not e.excluded]
    return math.fsum(values) / len(values) if values else None


@dataclass
class EvalReport:
    protocol: str
    entries: List[APEntry] = field(default_factory=list)
    summary: Dict[str, Dict[str, Optional[float]]] = field(default_factory=dict)
    metadata: Dict[str, Any] = field(default_factory=dict)

    def entries_for(self, setting: str, split: Optional[str] = None) -> List[APEntry]:
        return [e for e in self.entries if e.setting == setting and (split is None or e.split == split)]

    def ap(self, setting: str, class_id: int) -> float:
        for entry in self.entries:
            if entry.setting == setting and entry.class_id == class_id:
                return entry.ap
        raise KeyError(f"no AP for class {class_id} under '{setting}'")

    def mean(self, setting: str, split: str) -> Optional[float]:
        return self.summary.get(setting, {}).get(split)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([asdict(e) for e in self.entries],
                            columns=["setting", "split", "class_id", "ap", "n_positives", "n_detections", "excluded"])

    def lines(self) -> List[str]:
        lines = [f"{e.setting}\t{e.split}\t{e.class_id}\t{e.ap:.6f}" + ("\texcluded" if e.excluded else "")
                 for e in self.entries]
        for setting, splits in self.summary.items():
            for split, value in splits.items():
                text = "n/a" if value is None else f"{value:.6f}"
                lines.append(f"{setting}\t{split}\tmAP\t{text}")
        return lines

    def to_summary(self) -> Dict[str, Any]:
        without_positives = sorted({e.class_id for e in self.entries if e.n_positives == 0})
        return {
            "protocol": self.protocol,
            "mAP": self.summary,
            "n_classes": len({e.class_id for e in self.entries}),
            "classes_without_positives": without_positives,
            "positives": {str(e.class_id): e.n_positives for e in self.entries_for(self._first_setting())},
            **self.metadata,
        }

    def _first_setting(self) -> str:
        return self.entries[0].setting if self.entries else ""

    def write(self, report_path: Union[str, Path], summary_path: Optional[Union[str, Path]] = None) -> None:
        report_path = Path(report_path)
        summary_path = Path(summary_path) if summary_path else report_path.with_suffix(".summary.json")
        try:
            report_path.parent.mkdir(parents=True, exist_ok=True)
            report_path.write_text("\n".join(self.lines()) + "\n", encoding="utf-8")
            summary_path.write_text(json.dumps(self.to_summary(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
        except OSError as e:
            raise ValidationError(f"cannot write report to {report_path}: {e}") from e
        logger.info(f"Wrote report to {report_path} and summary to {summary_path}")
