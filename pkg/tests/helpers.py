"""
Instance builders and pinned reference values shared by the test modules
"""

import json
from pathlib import Path

import pytest

from ehcap.ehmodel import EnergyGrid, HarvestModel

GOLDEN_PATH = Path(__file__).with_name("golden_values.json")


def uniform_instance(gamma_q, ymax_q, quantum=1.0):
    """Uniform harvest on {0..ymax_q} quanta with its grid"""
    harvest = HarvestModel.uniform(ymax_q, quantum)
    return harvest, EnergyGrid(quantum, gamma_q, ymax_q)


class GoldenValues:
    """
    Numbers pinned from a validated run

    With record set, check() stores the computed value instead of comparing;
    a value that was never recorded skips the test.
    """

    def __init__(self, path=GOLDEN_PATH, record=False):
        self.path = Path(path)
        self.record = record
        self.values = json.loads(self.path.read_text()) if self.path.exists() else {}

    def check(self, name, value, tol):
        if self.record:
            self.values[name] = value
            self.path.write_text(json.dumps(self.values, indent=2, sort_keys=True) + "\n")
            return
        if name not in self.values:
            pytest.skip(f"{name} not recorded yet, run pytest --record-golden")
        assert value == pytest.approx(self.values[name], abs=tol)
