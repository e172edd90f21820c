import math
import random

import pytest

from defosc.algebra import DeformationSpec, StructureTable, make_spec
from defosc.catalog import builtin_spec

# Catalog instances used throughout the suite.  Radii: harmonic and the
# growing families are unbounded; arik-coon at q = 1/2 converges to 2.
CATALOG_PARAMS = {
    "harmonic": {},
    "arik-coon": {"q": 0.5},
    "biedenharn": {"q": 2.0},
    "pq": {"p": 2.0, "q": 1.5},
}


@pytest.fixture(scope="session")
def catalog_specs() -> dict[str, DeformationSpec]:
    return {name: builtin_spec(name, params) for name, params in CATALOG_PARAMS.items()}


@pytest.fixture(scope="session")
def catalog_tables(catalog_specs) -> dict[str, StructureTable]:
    return {name: StructureTable(spec, 64) for name, spec in catalog_specs.items()}


@pytest.fixture(scope="session")
def harmonic_table(catalog_tables) -> StructureTable:
    return catalog_tables["harmonic"]


@pytest.fixture(scope="session")
def degenerate_spec() -> DeformationSpec:
    # phi: 0, 3, 4, 3, 0, ... -> ladder truncates at n0 = 4
    return make_spec("degenerate", "1", "3 - 2*n", {})


def random_specs(count: int, seed: int, complex_params: bool = False) -> list[DeformationSpec]:
    """Random affine/power (F, G) pairs with F(k) != 0 for all k >= 0.

    Coefficients are kept positive (with mild phases in the complex
    variant) so neither evaluation route loses digits to cancellation;
    the point of these specs is to compare the two routes, not to
    stress-test float subtraction.
    """
    rng = random.Random(seed)
    specs = []
    for i in range(count):
        a = rng.uniform(0.3, 1.8)
        b = rng.uniform(0.0, 0.4)
        c = rng.uniform(0.2, 1.5)
        d = rng.uniform(0.0, 0.5)
        params: dict[str, complex] = {"a": a, "b": b, "c": c, "d": d}
        if complex_params:
            params["c"] = c * complex(math.cos(t := rng.uniform(-0.7, 0.7)), math.sin(t))
            params["d"] = d * complex(math.cos(t := rng.uniform(-0.7, 0.7)), math.sin(t))
        shape = rng.randrange(3)
        if shape == 0:
            f_src, g_src = "a + b*n", "c + d*n"
        elif shape == 1:
            f_src, g_src = "a", "c*a^(-n)"
        else:
            f_src, g_src = "a + b*n", "c*exp(-d*n)"
        specs.append(make_spec(f"random-{seed}-{i}", f_src, g_src, params))
    return specs


@pytest.fixture
def random_spec_factory():
    return random_specs
