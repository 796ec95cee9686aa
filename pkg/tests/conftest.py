from __future__ import annotations

import pytest

from support import build_chain_case, build_flood_case_a, build_flood_case_b, katrina_csv


@pytest.fixture
def flood_case_a():
    """Two co-occurring events plus the rain-causes-flood rule."""
    return build_flood_case_a()


@pytest.fixture
def flood_case_b():
    """A dam-overflow situation effecting a flood two hours later."""
    return build_flood_case_b()


@pytest.fixture
def chain_case():
    """TropicalStorm -> HeavyRain -> FlashFlood, plus a dam situation that
    also effects the flash flood."""
    return build_chain_case()


@pytest.fixture
def katrina_csv_text():
    return katrina_csv()
