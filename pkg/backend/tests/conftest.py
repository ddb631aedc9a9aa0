"""Shared fixtures; puts backend/ on the import path like the app modules do."""
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent.parent))

from analysis.decimation import CicConfig
from analysis.filter_design import design_fir
from readout.modulator import ModulatorConfig
from sensor.membrane import MaterialParams, MembraneGeometry


@pytest.fixture
def geometry():
    return MembraneGeometry()


@pytest.fixture
def material():
    return MaterialParams()


@pytest.fixture
def voltage_modulator():
    return ModulatorConfig(input_mode="voltage")


@pytest.fixture
def capacitive_modulator():
    return ModulatorConfig(input_mode="capacitive")


@pytest.fixture(scope="session")
def cic():
    return CicConfig()


@pytest.fixture(scope="session")
def fir(cic):
    return design_fir(cic)
