import os
import sys

import numpy as np
import pytest
from hypothesis import settings, strategies as st

sys.path.insert(0, os.path.dirname(__file__))

from scdiar.types import Turn  # noqa: E402

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

SPEAKERS = ["A", "B", "C", "D"]


@st.composite
def turn_lists(draw, recording="rec1", speakers=SPEAKERS, max_turns=8, horizon_ms=20_000):
    n = draw(st.integers(0, max_turns))
    turns = []
    for _ in range(n):
        onset = draw(st.integers(0, horizon_ms))
        dur = draw(st.integers(1, 5_000))
        spk = draw(st.sampled_from(speakers))
        turns.append(Turn(recording, "1", spk, onset / 1000, dur / 1000))
    return turns


@st.composite
def timelines_ms(draw, max_items=6, horizon_ms=5_000):
    """Lists of (start, end) second pairs on the millisecond grid."""
    n = draw(st.integers(0, max_items))
    out = []
    for _ in range(n):
        a = draw(st.integers(0, horizon_ms))
        b = draw(st.integers(a + 1, horizon_ms + 1))
        out.append((a / 1000, b / 1000))
    return out


def random_turns(rng: np.random.Generator, n_speakers=3, max_turns=10, horizon_ms=30_000, recording="rec1", max_dur_ms=6_000):
    turns = []
    for _ in range(int(rng.integers(1, max_turns + 1))):
        onset = int(rng.integers(0, horizon_ms))
        dur = int(rng.integers(1, max_dur_ms))
        spk = f"s{int(rng.integers(n_speakers))}"
        turns.append(Turn(recording, "1", spk, onset / 1000, dur / 1000))
    return turns


# acceptance bookkeeping: test_acceptance records one line per criterion
ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def acceptance_record():
    def record(number: int, title: str, ok: bool, detail: str = ""):
        tag = "PASS" if ok else "FAIL"
        ACCEPTANCE_LINES.append(f"[{tag}] criterion {number:>2}: {title}" + (f" ({detail})" if detail else ""))
        print(ACCEPTANCE_LINES[-1])
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
