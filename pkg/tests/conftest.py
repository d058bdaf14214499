from __future__ import annotations

import math
from pathlib import Path

import pytest

from susydeco.potential import Channel, channel_pair, linear_model, quartic_model

ROOT = Path(__file__).resolve().parents[1]
CONFIGS = ROOT / "configs"
GOLDEN = Path(__file__).resolve().parent / "golden"


@pytest.fixture
def quartic():
    return quartic_model(0.5)


@pytest.fixture
def quartic_pair(quartic):
    return channel_pair(quartic)


@pytest.fixture
def linear():
    return linear_model(1.3)


def second_difference(f, x: float, h: float = 1e-5) -> float:
    return (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h)


SQRT_HALF = math.sqrt(0.5)
PLUS, MINUS = Channel.PLUS, Channel.MINUS


# --- acceptance reporting -----------------------------------------------------------

ACCEPTANCE_LINES: dict[int, str] = {}


def record_criterion(number: int, title: str, passed: bool, detail: str = "") -> None:
    status = "PASS" if passed else "FAIL"
    line = f"criterion {number}: {status}  {title}"
    if detail:
        line += f"  [{detail}]"
    ACCEPTANCE_LINES[number] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])
