"""Corpus layout ``root/<speaker>/<context>/<utterance>.wav`` and the split.

For each speaker the test context is the one with the fewest utterances
among those holding at least five; ties go to the smallest context id.
Everything is sorted explicitly so the index does not depend on
filesystem enumeration order.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

logger = logging.getLogger(__name__)

MIN_TEST_UTTERANCES = 5


class DatasetError(ValueError):
    pass


@dataclass
class SpeakerEntry:
    speaker_id: str
    contexts: dict[str, list[Path]]
    test_context: str

    @property
    def train_contexts(self) -> list[str]:
        return [c for c in self.contexts if c != self.test_context]


@dataclass
class DatasetIndex:
    root: Path
    speakers: dict[str, SpeakerEntry] = field(default_factory=dict)
    excluded: dict[str, str] = field(default_factory=dict)

    @property
    def speaker_ids(self) -> list[str]:
        return list(self.speakers)

    def train_items(self):
        """Yield ``(speaker, context, path)`` for every training utterance."""
        for sid, entry in self.speakers.items():
            for cid in entry.train_contexts:
                for path in entry.contexts[cid]:
                    yield sid, cid, path

    def test_items(self):
        for sid, entry in self.speakers.items():
            for path in entry.contexts[entry.test_context]:
                yield sid, entry.test_context, path


def select_test_context(sizes: dict[str, int]) -> str | None:
    eligible = [(n, cid) for cid, n in sizes.items() if n >= MIN_TEST_UTTERANCES]
    return min(eligible)[1] if eligible else None


def index_dataset(root, pattern: str = "*.wav") -> DatasetIndex:
    root = Path(root)
    if not root.is_dir():
        raise DatasetError(f"dataset root {root} is not a directory")
    index = DatasetIndex(root)
    for spk_dir in sorted(p for p in root.iterdir() if p.is_dir()):
        sid = spk_dir.name
        contexts = {}
        for ctx_dir in sorted(p for p in spk_dir.iterdir() if p.is_dir()):
            files = sorted(p for p in ctx_dir.glob(pattern) if p.is_file())
            if files:
                contexts[ctx_dir.name] = files
        if len(contexts) < 2:
            index.excluded[sid] = f"{len(contexts)} context(s); need at least 2"
            logger.warning("excluding speaker %s: fewer than 2 contexts", sid)
            continue
        test = select_test_context({c: len(f) for c, f in contexts.items()})
        if test is None:
            index.excluded[sid] = f"no context with >= {MIN_TEST_UTTERANCES} utterances"
            logger.warning("excluding speaker %s: no context with >= %d utterances",
                           sid, MIN_TEST_UTTERANCES)
            continue
        index.speakers[sid] = SpeakerEntry(sid, contexts, test)
    if not index.speakers:
        raise DatasetError(f"no usable speakers under {root}")
    return index
