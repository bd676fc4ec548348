"""Smoke test for the casimir_mag extension module.

Build and install first:  pip install -e crates/python --no-build-isolation
Then run:                 pytest python/smoke_test.py   (or python python/smoke_test.py)
"""

import math
import pathlib

import pytest

import casimir_mag as cm

NI_CFG = pathlib.Path(__file__).resolve().parent.parent / "materials" / "ni.cfg"


@pytest.fixture(scope="module")
def ni():
    return cm.load_materials(str(NI_CFG))["Ni"]


def test_special_functions():
    assert cm.polylog(3, 1.0) == pytest.approx(cm.zeta(3), abs=1e-15)
    assert cm.zeta(3) == pytest.approx(1.2020569031595942, rel=1e-15)


def test_material_file(ni):
    assert ni.mu0 == 110.0
    assert ni.plasma_wavelength == pytest.approx(2 * math.pi * 40e-9, rel=1e-12)


def test_threshold_near_34_um(ni):
    assert 33e-6 <= cm.positivity_threshold(ni) <= 35e-6


def test_representations_agree(ni):
    plasma = cm.Material("Ni", 2 * math.pi * 40e-9, mu0=110.0)
    m = cm.free_energy(plasma, 5e-6, 300.0)
    ap = cm.free_energy(plasma, 5e-6, 300.0, representation="abel-plana")
    assert m < 0
    assert abs(m - ap) <= 1e-8 * abs(m)


def test_series_tracks_numeric(ni):
    series = cm.thermal_correction_series(ni, 5e-6, 77.0)
    numeric, _ = cm.thermal_correction(ni, 5e-6, 77.0)
    assert series == pytest.approx(numeric, rel=3e-3)


def test_zero_temperature_entropy_sign(ni):
    assert cm.entropy_at_zero_t(ni, 5e-6) > 0
    assert cm.entropy_at_zero_t(ni, 60e-6) < 0
    assert cm.entropy_at_zero_t(ni, 5e-6, exact=True) > cm.entropy_at_zero_t(ni, 5e-6)


def test_errors(ni):
    with pytest.raises(ValueError):
        cm.free_energy(ni, 5e-6, 300.0, model="hydrodynamic")
    with pytest.raises(cm.ConfigError):
        cm.load_materials("/nonexistent.cfg")
    with pytest.raises(ValueError):
        cm.Material("x", 1e-7, gamma0=1.0, gamma=1.0)
    assert issubclass(cm.ValidityError, cm.CasimirError)


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
